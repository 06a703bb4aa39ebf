"""Feature adapters trained on the (S, T) interface distribution.

With ``S = f*(X)`` and ``T = g*(Y)`` the modal features, any D-loss can be
minimized on the small joint ``P_{S,T}`` instead of ``P_{X,Y}``; composing
the learned adapters with the encoders gives features on X and Y with the
same loss value.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cdk import ModalDecomposition, modal_decompose
from .features import FeatureTable, image_alphabet
from .losses.core import Context, Loss
from .optim import MinimizationResult, OptimConfig, minimize
from .probability import Alphabet, JointDistribution, pushforward_indices
from .transforms import DptPair, decode_indices


@dataclass(frozen=True, eq=False)
class InterfaceDistribution:
    """Joint law of ``(S, T) = (f*(X), g*(Y))`` with the encoders.

    ``encoder_x[i]`` is the S-index of the i-th symbol of X (likewise Y).
    """

    source_x: Alphabet
    source_y: Alphabet
    s_alphabet: Alphabet
    t_alphabet: Alphabet
    joint: JointDistribution
    encoder_x: np.ndarray
    encoder_y: np.ndarray

    def encode_x(self, x) -> str:
        return self.s_alphabet.symbols[self.encoder_x[self.source_x.index(x)]]

    def encode_y(self, y) -> str:
        return self.t_alphabet.symbols[self.encoder_y[self.source_y.index(y)]]

    def compose(self, phi: FeatureTable, psi: FeatureTable):
        """Features ``(phi o f*, psi o g*)`` on the source alphabets."""
        return (FeatureTable(self.source_x, np.asarray(phi.values)[self.encoder_x]),
                FeatureTable(self.source_y, np.asarray(psi.values)[self.encoder_y]))

    def to_dict(self) -> dict:
        return {
            "s_alphabet": list(self.s_alphabet.symbols),
            "t_alphabet": list(self.t_alphabet.symbols),
            "encoder_x": {x: self.s_alphabet.symbols[i] for x, i in zip(self.source_x.symbols, self.encoder_x)},
            "encoder_y": {y: self.t_alphabet.symbols[i] for y, i in zip(self.source_y.symbols, self.encoder_y)},
            "joint": self.joint.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InterfaceDistribution":
        sa, ta = Alphabet(d["s_alphabet"]), Alphabet(d["t_alphabet"])
        jd = d["joint"]
        mass = np.asarray(jd["p"], dtype=float)
        joint = JointDistribution(sa, ta, mass, allow_zero_cells=bool(np.any(mass == 0)))
        ex, ey = d["encoder_x"], d["encoder_y"]
        return cls(Alphabet(ex), Alphabet(ey), sa, ta, joint,
                   np.array([sa.index(v) for v in ex.values()]),
                   np.array([ta.index(v) for v in ey.values()]))


def interface_from_modes(J: JointDistribution, md: ModalDecomposition | None = None) -> InterfaceDistribution:
    """Interface distribution from the distinct rows of f* and g*."""
    md = modal_decompose(J) if md is None else md
    sa, ex = image_alphabet(md.f_star)
    ta, ey = image_alphabet(md.g_star)
    joint = pushforward_indices(J, ex, ey, sa, ta)
    return InterfaceDistribution(J.alphabet_x, J.alphabet_y, sa, ta, joint, ex, ey)


def interfaces_isomorphic(a: InterfaceDistribution, b: InterfaceDistribution, dpt: DptPair,
                          tol: float = 1e-9) -> bool:
    """True when decoding matches ``b``'s symbols one-to-one with ``a``'s and masses agree.

    ``b`` must be the interface of the transformed distribution.
    """
    ix = decode_indices(dpt.x_side, b.source_x)
    iy = decode_indices(dpt.y_side, b.source_y)
    ms = _induced_bijection(b.encoder_x, a.encoder_x[ix], b.s_alphabet.size, a.s_alphabet.size)
    mt = _induced_bijection(b.encoder_y, a.encoder_y[iy], b.t_alphabet.size, a.t_alphabet.size)
    if ms is None or mt is None:
        return False
    mapped = a.joint.mass[np.ix_(ms, mt)]
    return bool(np.max(np.abs(mapped - b.joint.mass)) <= tol)


def _induced_bijection(src, dst, n_src, n_dst):
    if n_src != n_dst:
        return None
    m = np.full(n_src, -1)
    for s, d in zip(src, dst):
        if m[s] not in (-1, d):
            return None
        m[s] = d
    if np.any(m < 0) or np.unique(m).size != n_src:
        return None
    return m


def fit_adapter(loss: Loss, iface: InterfaceDistribution, cfg: OptimConfig,
                init: tuple | None = None) -> MinimizationResult:
    """Minimize ``loss`` on ``P_{S,T}``; the result's tables live on S and T."""
    return minimize(loss, iface.joint, cfg, init=init)


def train_adapter(loss: Loss, iface: InterfaceDistribution, cfg: OptimConfig):
    """Adapter pair ``(phi, psi)`` minimizing ``loss`` on the interface."""
    res = fit_adapter(loss, iface, cfg)
    return res.f, res.g


@dataclass(eq=False)
class LambdaAdapterFamily:
    """Adapters trained on a grid of ``lambda`` values, linearly interpolated.

    Outside the grid the nearest endpoint adapter is used.
    """

    grid: np.ndarray
    phis: list
    psis: list
    interface: InterfaceDistribution
    values: np.ndarray | None = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        if self.grid.size == 0:
            raise ValueError("grid must be nonempty")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be sorted and distinct")
        if not (len(self.phis) == len(self.psis) == self.grid.size):
            raise ValueError("need one adapter pair per grid point")

    def at(self, lam: float):
        """Interpolated adapter pair ``(phi, psi)`` at ``lam``."""
        g = self.grid
        if lam <= g[0] or g.size == 1:
            return self.phis[0], self.psis[0]
        if lam >= g[-1]:
            return self.phis[-1], self.psis[-1]
        j = int(np.searchsorted(g, lam, side="right")) - 1
        t = (lam - g[j]) / (g[j + 1] - g[j])
        phi = (1 - t) * self.phis[j].values + t * self.phis[j + 1].values
        psi = (1 - t) * self.psis[j].values + t * self.psis[j + 1].values
        return self.phis[j].with_values(phi), self.psis[j].with_values(psi)

    def features(self, lam: float):
        """Composed features on the source alphabets at ``lam``."""
        return self.interface.compose(*self.at(lam))

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "phi": [p.values.tolist() for p in self.phis],
            "psi": [p.values.tolist() for p in self.psis],
            "interface": self.interface.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LambdaAdapterFamily":
        iface = InterfaceDistribution.from_dict(d["interface"])
        k = lambda rows: np.asarray(rows, dtype=float).reshape(len(rows), -1)
        return cls(np.asarray(d["grid"], dtype=float),
                   [FeatureTable(iface.s_alphabet, k(p)) for p in d["phi"]],
                   [FeatureTable(iface.t_alphabet, k(p)) for p in d["psi"]],
                   iface)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def load(cls, path) -> "LambdaAdapterFamily":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def train_lambda_family(loss_family: Callable[[float], Loss], iface: InterfaceDistribution,
                        grid: Sequence[float], cfg: OptimConfig) -> LambdaAdapterFamily:
    """Train one adapter pair per grid value of ``lambda``.

    Grid points are visited in increasing order; each one also restarts from
    the previous solution and is sign-aligned with it, so neighbouring
    adapters describe the same branch and can be interpolated.
    """
    grid = np.asarray(sorted(float(x) for x in grid))
    phis, psis, values = [], [], []
    prev = None
    for lam in grid:
        loss = loss_family(lam)
        res = fit_adapter(loss, iface, cfg, init=prev)
        ref = None if prev is None else prev[0]
        phi, psi = _align_signs(res.f, res.g, ref, loss, iface.joint)
        phis.append(phi)
        psis.append(psi)
        values.append(res.value)
        prev = (phi.values, psi.values)
    return LambdaAdapterFamily(grid, phis, psis, iface, np.asarray(values))


def _align_signs(phi, psi, ref, loss, J):
    """Flip column pairs toward ``ref`` (or a positive first entry) when the loss allows it."""
    F, G = np.array(phi.values), np.array(psi.values)
    ctx = Context(J)
    base = loss.value(F, G, ctx)
    for j in range(F.shape[1]):
        if ref is not None:
            flip = J.px @ (F[:, j] * ref[:, j]) < 0
        else:
            nz = np.flatnonzero(np.abs(F[:, j]) > 1e-9)
            flip = bool(nz.size) and F[nz[0], j] < 0
        if not flip:
            continue
        F[:, j] *= -1
        G[:, j] *= -1
        if abs(loss.value(F, G, ctx) - base) > 1e-12 * max(1.0, abs(base)):
            F[:, j] *= -1
            G[:, j] *= -1
    return phi.with_values(F), psi.with_values(G)


def tune_lambda(family: LambdaAdapterFamily, objective: Callable, search_grid: Sequence[float]) -> float:
    """Minimize ``objective(phi, psi, lam)`` over ``search_grid`` using interpolated adapters.

    Ties go to the smaller ``lambda``.
    """
    best_lam, best_val = None, np.inf
    for lam in sorted(float(x) for x in search_grid):
        v = float(objective(*family.at(lam), lam))
        if best_lam is None or v < best_val:
            best_lam, best_val = lam, v
    return best_lam


def adapter_value(loss: Loss, phi: FeatureTable, psi: FeatureTable, iface: InterfaceDistribution) -> float:
    return float(loss.value(np.asarray(phi.values), np.asarray(psi.values), Context(iface.joint)))
