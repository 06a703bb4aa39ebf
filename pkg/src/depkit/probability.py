"""Finite alphabets, joint distributions and information quantities.

All masses are kept in double precision and logarithms are natural (nats).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import (
    NonPositiveMass,
    NotNormalized,
    ShapeMismatch,
    UncoveredSymbol,
    UnknownSymbol,
)

INGEST_TOL = 1e-9

SymbolMap = Union[Mapping[str, str], Callable[[str], str]]


@dataclass(frozen=True)
class Alphabet:
    """Ordered collection of distinct string labels."""

    symbols: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, symbols: Iterable):
        symbols = tuple(str(s) for s in symbols)
        if not symbols:
            raise ValueError("alphabet must be non-empty")
        if len(set(symbols)) != len(symbols):
            raise ValueError(f"alphabet labels must be distinct: {symbols}")
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(symbols)})

    @classmethod
    def range(cls, n: int, prefix: str = "") -> "Alphabet":
        return cls(f"{prefix}{i}" for i in range(n))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __contains__(self, symbol):
        return str(symbol) in self._index

    def index(self, symbol) -> int:
        try:
            return self._index[str(symbol)]
        except KeyError:
            raise UnknownSymbol(symbol) from None


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Distribution:
    """Strictly positive probability vector over an alphabet."""

    alphabet: Alphabet
    mass: np.ndarray

    def __init__(self, alphabet: Alphabet, mass, allow_zero: bool = False):
        mass = np.asarray(mass, dtype=float)
        if mass.shape != (alphabet.size,):
            raise ShapeMismatch(f"mass has shape {mass.shape}, alphabet has {alphabet.size} symbols")
        if not np.all(np.isfinite(mass)):
            raise NonPositiveMass("mass contains non-finite entries")
        if allow_zero:
            if np.any(mass < 0):
                raise NonPositiveMass("negative mass")
        elif np.any(mass <= 0):
            raise NonPositiveMass(f"non-positive mass at {alphabet.symbols[int(np.argmin(mass))]!r}")
        total = mass.sum()
        if abs(total - 1.0) > INGEST_TOL:
            raise NotNormalized(f"masses sum to {total!r}")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "mass", _readonly(mass / total))

    def __getitem__(self, symbol) -> float:
        return float(self.mass[self.alphabet.index(symbol)])


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability mass matrix over a finite product alphabet.

    Rows are indexed by ``alphabet_x`` and columns by ``alphabet_y``.  Cells
    must be strictly positive unless ``allow_zero_cells`` is set, which is
    reserved for the deterministic-label regime of the collapse experiment.
    Marginals are always strictly positive.
    """

    alphabet_x: Alphabet
    alphabet_y: Alphabet
    mass: np.ndarray
    allow_zero_cells: bool = False

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (self.alphabet_x.size, self.alphabet_y.size):
            raise ShapeMismatch(
                f"matrix shape {mass.shape} does not match alphabets "
                f"({self.alphabet_x.size}, {self.alphabet_y.size})"
            )
        if not np.all(np.isfinite(mass)):
            raise NonPositiveMass("matrix contains non-finite entries")
        if self.allow_zero_cells:
            if np.any(mass < 0):
                raise NonPositiveMass("negative mass")
        elif np.any(mass <= 0):
            i, j = np.unravel_index(int(np.argmin(mass)), mass.shape)
            raise NonPositiveMass(
                f"mass at ({self.alphabet_x.symbols[i]!r}, {self.alphabet_y.symbols[j]!r}) is {mass[i, j]!r}"
            )
        total = mass.sum()
        if abs(total - 1.0) > INGEST_TOL:
            raise NotNormalized(f"masses sum to {total!r}")
        mass = mass / total
        if np.any(mass.sum(axis=1) <= 0) or np.any(mass.sum(axis=0) <= 0):
            raise NonPositiveMass("every marginal mass must be positive")
        object.__setattr__(self, "mass", _readonly(mass))

    @property
    def shape(self):
        return self.mass.shape

    @cached_property
    def px(self) -> np.ndarray:
        return _readonly(self.mass.sum(axis=1))

    @cached_property
    def py(self) -> np.ndarray:
        return _readonly(self.mass.sum(axis=0))

    @property
    def marginal_x(self) -> Distribution:
        return Distribution(self.alphabet_x, self.px)

    @property
    def marginal_y(self) -> Distribution:
        return Distribution(self.alphabet_y, self.py)

    def swap(self) -> "JointDistribution":
        return JointDistribution(self.alphabet_y, self.alphabet_x, self.mass.T, self.allow_zero_cells)

    def to_dict(self) -> dict:
        return {
            "x": list(self.alphabet_x.symbols),
            "y": list(self.alphabet_y.symbols),
            "p": self.mass.tolist(),
        }


def validate_joint(matrix, ax: Alphabet | Sequence | None = None,
                   ay: Alphabet | Sequence | None = None) -> JointDistribution:
    """Check a mass matrix and wrap it as a :class:`JointDistribution`.

    Raises ``NonPositiveMass`` for any entry <= 0, ``NotNormalized`` when the
    total deviates from 1 by more than 1e-9, and ``ShapeMismatch`` when the
    matrix does not fit the alphabets.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got an array of shape {m.shape}")
    ax = ax if isinstance(ax, Alphabet) else Alphabet(ax if ax is not None else range(m.shape[0]))
    ay = ay if isinstance(ay, Alphabet) else Alphabet(ay if ay is not None else range(m.shape[1]))
    return JointDistribution(ax, ay, m)


def product_distribution(px, py, ax=None, ay=None) -> JointDistribution:
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    return validate_joint(np.outer(px, py), ax, ay)


def dsbs(rho: float) -> JointDistribution:
    """Doubly symmetric binary source with crossover ``(1 - rho) / 2``."""
    a = (1 + rho) / 4
    b = (1 - rho) / 4
    return validate_joint([[a, b], [b, a]], ["0", "1"], ["0", "1"])


def empirical_from_samples(pairs: Iterable, ax: Alphabet | Sequence | None = None,
                           ay: Alphabet | Sequence | None = None,
                           smoothing: float = 0.0) -> JointDistribution:
    """Empirical joint distribution ``count(x, y) / n`` of labelled pairs.

    Every cell of ``ax x ay`` must be observed; otherwise ``UncoveredSymbol``
    lists the empty cells.  A positive ``smoothing`` adds that mass to every
    cell of the empirical distribution and renormalizes instead.
    """
    pairs = [(str(x), str(y)) for x, y in pairs]
    if not pairs:
        raise ValueError("no samples")
    if ax is None:
        ax = sorted({x for x, _ in pairs})
    if ay is None:
        ay = sorted({y for _, y in pairs})
    ax = ax if isinstance(ax, Alphabet) else Alphabet(ax)
    ay = ay if isinstance(ay, Alphabet) else Alphabet(ay)
    counts = np.zeros((ax.size, ay.size))
    for x, y in pairs:
        counts[ax.index(x), ay.index(y)] += 1
    p = counts / len(pairs)
    if smoothing > 0:
        p = (p + smoothing) / (1.0 + smoothing * p.size)
    elif np.any(counts == 0):
        missing = [(ax.symbols[i], ay.symbols[j]) for i, j in zip(*np.nonzero(counts == 0))]
        raise UncoveredSymbol(missing)
    return JointDistribution(ax, ay, p)


def conditional_y_given_x(J: JointDistribution, x) -> Distribution:
    i = J.alphabet_x.index(x)
    row = J.mass[i]
    return Distribution(J.alphabet_y, row / row.sum(), allow_zero=J.allow_zero_cells)


def conditional_matrix(J: JointDistribution) -> np.ndarray:
    """Row-stochastic matrix of P(y|x)."""
    return J.mass / J.px[:, None]


def _as_callable(m: SymbolMap) -> Callable[[str], str]:
    if callable(m):
        return lambda s: str(m(s))
    return lambda s: str(m[s])


def _image(alphabet: Alphabet, m: SymbolMap):
    fn = _as_callable(m)
    targets = [fn(s) for s in alphabet.symbols]
    image = list(dict.fromkeys(targets))
    pos = {t: i for i, t in enumerate(image)}
    return Alphabet(image), np.array([pos[t] for t in targets], dtype=int)


def merge_matrix(index: np.ndarray, n_target: int) -> np.ndarray:
    """0/1 matrix sending source index ``i`` to target ``index[i]``."""
    M = np.zeros((len(index), n_target))
    M[np.arange(len(index)), index] = 1.0
    return M


def pushforward_indices(J: JointDistribution, ix: np.ndarray, iy: np.ndarray,
                        ax: Alphabet, ay: Alphabet) -> JointDistribution:
    """Pushforward of ``J`` under index maps onto the given target alphabets."""
    mass = merge_matrix(ix, ax.size).T @ J.mass @ merge_matrix(iy, ay.size)
    keep_x = mass.sum(axis=1) > 0
    keep_y = mass.sum(axis=0) > 0
    if not (keep_x.all() and keep_y.all()):
        ax = Alphabet(np.array(ax.symbols, dtype=object)[keep_x])
        ay = Alphabet(np.array(ay.symbols, dtype=object)[keep_y])
        mass = mass[keep_x][:, keep_y]
    return JointDistribution(ax, ay, mass, allow_zero_cells=J.allow_zero_cells or bool(np.any(mass <= 0)))


def pushforward(J: JointDistribution, map_x: SymbolMap, map_y: SymbolMap) -> JointDistribution:
    """Image distribution of ``(map_x(X), map_y(Y))``.

    Maps are dicts or callables on symbol labels.  The target alphabets are
    the images of the maps, in order of first appearance.
    """
    ax, ix = _image(J.alphabet_x, map_x)
    ay, iy = _image(J.alphabet_y, map_y)
    return pushforward_indices(J, ix, iy, ax, ay)


def _xlogy_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos] / q[pos])
    return out


def mutual_information(J: JointDistribution) -> float:
    """I(X;Y) in nats."""
    q = np.outer(J.px, J.py)
    return float(max(_xlogy_ratio(J.mass, q).sum(), 0.0))


def entropy(d: Distribution | np.ndarray) -> float:
    """Shannon entropy in nats."""
    p = np.asarray(d.mass if isinstance(d, Distribution) else d, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def random_joint(rng: np.random.Generator, nx: int, ny: int,
                 x_blocks: int | None = None, y_blocks: int | None = None,
                 concentration: float = 1.0) -> JointDistribution:
    """Random strictly positive joint distribution.

    With ``x_blocks < nx`` the x-symbols are grouped into that many blocks
    whose members share one conditional row P(y|x) (and likewise for y), so
    the instance has nontrivial minimal sufficient partitions.
    """
    bx = nx if x_blocks is None else x_blocks
    by = ny if y_blocks is None else y_blocks
    if not (1 <= bx <= nx and 1 <= by <= ny):
        raise ValueError("block counts must lie in [1, alphabet size]")
    base = rng.dirichlet(np.full(bx * by, concentration)).reshape(bx, by)
    base = np.maximum(base, 1e-6)
    base /= base.sum()

    def spread(n, b):
        # every block gets at least one member; remaining members join random blocks
        owner = np.concatenate([np.arange(b), rng.integers(0, b, size=n - b)])
        rng.shuffle(owner)
        w = rng.uniform(0.2, 1.0, size=n)
        for blk in range(b):
            sel = owner == blk
            w[sel] /= w[sel].sum()
        return merge_matrix(owner, b) * w[:, None]

    Sx = spread(nx, bx)
    Sy = spread(ny, by)
    mass = Sx @ base @ Sy.T
    return JointDistribution(Alphabet.range(nx, "x"), Alphabet.range(ny, "y"), mass / mass.sum())


def random_instance(rng: np.random.Generator, max_x: int = 8, max_y: int = 6) -> JointDistribution:
    """Random joint of random size up to ``max_x`` x ``max_y``, often with merged conditional rows."""
    nx = int(rng.integers(2, max_x + 1))
    ny = int(rng.integers(2, max_y + 1))
    bx = int(rng.integers(1, nx + 1)) if rng.random() < 0.7 else nx
    by = int(rng.integers(1, ny + 1)) if rng.random() < 0.7 else ny
    return random_joint(rng, nx, ny, bx, by)


# -- file formats -----------------------------------------------------------

def joint_from_dict(d: Mapping) -> JointDistribution:
    return validate_joint(d["p"], d["x"], d["y"])


def load_joint(path) -> JointDistribution:
    with open(path) as fh:
        return joint_from_dict(json.load(fh))


def save_joint(J: JointDistribution, path) -> None:
    with open(path, "w") as fh:
        json.dump(J.to_dict(), fh, indent=2)


def read_samples_csv(path) -> list:
    """Read ``x,y`` sample pairs from a CSV file with a header row."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= set(reader.fieldnames):
            raise ValueError("sample CSV needs a header with columns 'x' and 'y'")
        return [(row["x"], row["y"]) for row in reader]
