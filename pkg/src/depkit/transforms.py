"""Dependence-preserving transformations.

Each side of a transformation draws side randomness ``Z ~ P(Z|X)`` and maps
``(x, z)`` to a new symbol through a table ``xi``; decodability means every
reachable target symbol has a single parent ``x``.  Because ``Z`` depends on
``X`` only (and ``W`` on ``Y`` only), the Markov chain Z - X - Y - W holds by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cdk import cdk_matrix
from .errors import ShapeMismatch, UnknownSymbol
from .probability import Alphabet, JointDistribution


@dataclass(frozen=True, eq=False)
class SideTransform:
    """One side (X or Y) of a dependence-preserving transformation.

    Parameters
    ----------
    source : Alphabet
        Alphabet of the original variable.
    p_z_given_x : ndarray, shape (n_source, n_z)
        Row-stochastic side-randomness kernel; zeros allowed.
    target : Alphabet
        Alphabet of the transformed variable.
    xi : ndarray of int, shape (n_source, n_z)
        Target index of each ``(x, z)``; ``-1`` where ``P(z|x) = 0``.
    """

    source: Alphabet
    p_z_given_x: np.ndarray
    target: Alphabet
    xi: np.ndarray

    def __post_init__(self):
        P = np.array(self.p_z_given_x, dtype=float)
        xi = np.array(self.xi, dtype=int)
        if P.ndim != 2 or P.shape[0] != self.source.size or xi.shape != P.shape:
            raise ShapeMismatch("p_z_given_x and xi must both be (n_source, n_z)")
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=1) - 1) > 1e-9):
            raise ValueError("p_z_given_x must be row-stochastic")
        pos = P > 0
        if np.any(xi[pos] < 0) or np.any(xi[pos] >= self.target.size):
            raise ValueError("xi must be defined on every positive-probability (x, z)")
        decoder = np.full(self.target.size, -1, dtype=int)
        for x, z in zip(*np.nonzero(pos)):
            t = xi[x, z]
            if decoder[t] not in (-1, x):
                raise ValueError(
                    f"target {self.target.symbols[t]!r} is reached from two sources; transformation not decodable"
                )
            decoder[t] = x
        xi[~pos] = -1
        P.setflags(write=False)
        xi.setflags(write=False)
        decoder.setflags(write=False)
        object.__setattr__(self, "p_z_given_x", P)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "_decoder", decoder)

    @property
    def z_size(self) -> int:
        return self.p_z_given_x.shape[1]

    @property
    def decoder(self) -> np.ndarray:
        """Source index of each target symbol (``-1`` if unreachable)."""
        return self._decoder

    def kernel(self) -> np.ndarray:
        """Channel matrix P(x_hat | x), shape (n_source, n_target)."""
        M = np.zeros((self.source.size, self.target.size))
        for x, z in zip(*np.nonzero(self.p_z_given_x > 0)):
            M[x, self.xi[x, z]] += self.p_z_given_x[x, z]
        return M

    def decode_map(self) -> dict:
        return {self.target.symbols[t]: self.source.symbols[x]
                for t, x in enumerate(self.decoder) if x >= 0}

    def to_dict(self) -> dict:
        xi = {f"{self.source.symbols[x]},{z}": self.target.symbols[self.xi[x, z]]
              for x, z in zip(*np.nonzero(self.xi >= 0))}
        return {
            "x": list(self.source.symbols),
            "z_size": self.z_size,
            "p_z_given_x": self.p_z_given_x.tolist(),
            "xi": xi,
            "decoder": self.decode_map(),
        }

    @classmethod
    def from_dict(cls, d: dict, source: Alphabet | None = None) -> "SideTransform":
        source = source or Alphabet(d["x"])
        P = np.asarray(d["p_z_given_x"], dtype=float)
        if P.shape[1] != d["z_size"]:
            raise ShapeMismatch("z_size does not match p_z_given_x")
        target = Alphabet(dict.fromkeys(d["xi"].values()))
        xi = np.full(P.shape, -1, dtype=int)
        for key, t in d["xi"].items():
            xs, z = key.rsplit(",", 1)
            xi[source.index(xs), int(z)] = target.index(t)
        side = cls(source, P, target, xi)
        for t, xs in d.get("decoder", {}).items():
            if side.decode_map().get(t) != xs:
                raise ValueError(f"decoder entry {t!r} -> {xs!r} is inconsistent with xi")
        return side


@dataclass(frozen=True, eq=False)
class DptPair:
    x_side: SideTransform
    y_side: SideTransform

    def to_dict(self) -> dict:
        return {"x_side": self.x_side.to_dict(), "y_side": self.y_side.to_dict()}

    @classmethod
    def from_dict(cls, d: dict, J: JointDistribution | None = None) -> "DptPair":
        return cls(
            SideTransform.from_dict(d["x_side"], J.alphabet_x if J is not None else None),
            SideTransform.from_dict(d["y_side"], J.alphabet_y if J is not None else None),
        )


def relabeling(alphabet: Alphabet, perm=None) -> SideTransform:
    """Degenerate one-to-one transformation (constant side randomness)."""
    n = alphabet.size
    perm = np.arange(n) if perm is None else np.asarray(perm)
    labels = [f"{s}#0" for s in alphabet.symbols]
    target = Alphabet(labels[i] for i in np.argsort(perm))
    return SideTransform(alphabet, np.ones((n, 1)), target, perm.reshape(n, 1))


def identity_dpt(J: JointDistribution) -> DptPair:
    return DptPair(relabeling(J.alphabet_x), relabeling(J.alphabet_y))


def random_side(rng: np.random.Generator, alphabet: Alphabet, max_expansion: int) -> SideTransform:
    n = alphabet.size
    if max_expansion < 1:
        raise ValueError("max_expansion must be >= 1")
    if max_expansion == 1 or rng.random() < 0.5:
        return relabeling(alphabet, rng.permutation(n))
    nz = int(rng.integers(1, max_expansion + 1))
    P = rng.dirichlet(np.ones(nz), size=n)
    if nz > 1 and rng.random() < 0.3:
        # sparse kernels: keep each row's largest entry, drop a random subset of the rest
        drop = rng.random(P.shape) < 0.3
        drop[np.arange(n), P.argmax(axis=1)] = False
        P = np.where(drop, 0.0, P)
        P /= P.sum(axis=1, keepdims=True)
    pos = list(zip(*np.nonzero(P > 0)))
    order = rng.permutation(len(pos))
    xi = np.full(P.shape, -1, dtype=int)
    labels = [None] * len(pos)
    for slot, (x, z) in zip(order, pos):
        xi[x, z] = slot
        labels[slot] = f"{alphabet.symbols[x]}#{z}"
    return SideTransform(alphabet, P, Alphabet(labels), xi)


def random_dpt(J: JointDistribution, seed, max_expansion: int = 3) -> DptPair:
    """Random decodable transformation of both sides of ``J``.

    Each side is, with probability 1/2, a pure relabeling; otherwise it uses
    up to ``max_expansion`` side-randomness values with a flat-Dirichlet
    kernel and one fresh target symbol per positive (x, z).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return DptPair(random_side(rng, J.alphabet_x, max_expansion),
                   random_side(rng, J.alphabet_y, max_expansion))


def apply_dpt(J: JointDistribution, dpt: DptPair) -> JointDistribution:
    """Exact joint distribution of the transformed pair; unreachable symbols pruned."""
    if dpt.x_side.source != J.alphabet_x or dpt.y_side.source != J.alphabet_y:
        raise ShapeMismatch("transformation alphabets do not match the distribution")
    Mx = dpt.x_side.kernel()
    My = dpt.y_side.kernel()
    mass = Mx.T @ J.mass @ My
    kx = mass.sum(axis=1) > 0
    ky = mass.sum(axis=0) > 0
    ax = Alphabet(s for s, k in zip(dpt.x_side.target.symbols, kx) if k)
    ay = Alphabet(s for s, k in zip(dpt.y_side.target.symbols, ky) if k)
    mass = mass[kx][:, ky]
    return JointDistribution(ax, ay, mass, allow_zero_cells=J.allow_zero_cells)


def decode(side: SideTransform, xhat) -> str:
    t = side.target.index(xhat)
    x = side.decoder[t]
    if x < 0:
        raise UnknownSymbol(xhat)
    return side.source.symbols[x]


def decode_indices(side: SideTransform, target: Alphabet) -> np.ndarray:
    """Source index for each symbol of ``target`` (a pruned transformed alphabet)."""
    return np.array([side.decoder[side.target.index(s)] for s in target.symbols], dtype=int)


@dataclass(frozen=True)
class InvarianceReport:
    max_abs_dev: float
    passed: bool

    def __bool__(self):
        return self.passed


def verify_cdk_invariance(J: JointDistribution, dpt: DptPair, tol: float = 1e-9,
                          Jhat: JointDistribution | None = None) -> InvarianceReport:
    """Compare gamma_hat(x_hat, y_hat) with gamma(decode x_hat, decode y_hat)."""
    Jhat = apply_dpt(J, dpt) if Jhat is None else Jhat
    g = cdk_matrix(J).values
    ghat = cdk_matrix(Jhat).values
    ix = decode_indices(dpt.x_side, Jhat.alphabet_x)
    iy = decode_indices(dpt.y_side, Jhat.alphabet_y)
    dev = float(np.max(np.abs(ghat - g[np.ix_(ix, iy)])))
    return InvarianceReport(dev, dev <= tol)
