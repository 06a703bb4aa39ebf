"""Abstraction and sufficiency tests on finite alphabets.

Statistics are represented by feature tables; only the partition of the
alphabet induced by identical rows matters.  All tests are exact partition
criteria, so no mutual-information estimation is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .cdk import cdk_matrix
from .features import FeatureTable, row_groups
from .probability import Alphabet, Distribution, JointDistribution, conditional_matrix

TV_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Partition:
    alphabet: Alphabet
    labels: np.ndarray

    @property
    def blocks(self) -> list:
        return [[self.alphabet.symbols[i] for i in np.flatnonzero(self.labels == b)]
                for b in range(self.n_blocks)]

    @property
    def block_of(self) -> dict:
        return {s: int(b) for s, b in zip(self.alphabet.symbols, self.labels)}

    @property
    def n_blocks(self) -> int:
        return int(self.labels.max()) + 1

    def refines(self, other: "Partition") -> bool:
        """True when every block of ``self`` lies inside one block of ``other``."""
        return _refines(self.labels, other.labels)

    def same_as(self, other: "Partition") -> bool:
        return self.refines(other) and other.refines(self)

    def encoding(self) -> FeatureTable:
        """Block-id statistic inducing this partition."""
        return FeatureTable(self.alphabet, self.labels.astype(float)[:, None])

    def to_dict(self) -> dict:
        return {"blocks": self.blocks}

    @classmethod
    def from_dict(cls, d: dict, alphabet: Alphabet) -> "Partition":
        labels = np.full(alphabet.size, -1, dtype=int)
        for b, block in enumerate(d["blocks"]):
            for s in block:
                labels[alphabet.index(s)] = b
        if np.any(labels < 0):
            raise ValueError("blocks do not cover the alphabet")
        return cls(alphabet, _relabel(labels))


def _relabel(labels: np.ndarray) -> np.ndarray:
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(np.argsort(first))
    _, inv = np.unique(labels, return_inverse=True)
    return order[inv]


def _refines(fine: np.ndarray, coarse: np.ndarray) -> bool:
    for b in np.unique(fine):
        if np.unique(coarse[fine == b]).size > 1:
            return False
    return True


def partition_of(f: FeatureTable) -> Partition:
    return Partition(f.alphabet, row_groups(f.values))


def is_abstraction(f: FeatureTable, h: FeatureTable, P: Distribution | None = None) -> bool:
    """True iff f(Z) is a function of h(Z) on the support of ``P``."""
    if f.alphabet != h.alphabet:
        raise ValueError("f and h must share an alphabet")
    lf, lh = row_groups(f.values), row_groups(h.values)
    if P is not None:
        keep = np.asarray(P.mass) > 0
        lf, lh = lf[keep], lh[keep]
    return _refines(lh, lf)


def _tv_groups(rows: np.ndarray, tol: float) -> np.ndarray:
    labels = np.full(rows.shape[0], -1, dtype=int)
    reps: list[int] = []
    for i, r in enumerate(rows):
        for b, j in enumerate(reps):
            if 0.5 * np.abs(rows[j] - r).sum() <= tol:
                labels[i] = b
                break
        else:
            labels[i] = len(reps)
            reps.append(i)
    return labels


def minimal_sufficient_partition(J: JointDistribution, side: str = "x") -> Partition:
    """Group symbols with equal conditional rows (within 1e-10 total variation)."""
    if side.lower() == "x":
        return Partition(J.alphabet_x, _tv_groups(conditional_matrix(J), TV_TOL))
    if side.lower() == "y":
        return Partition(J.alphabet_y, _tv_groups(conditional_matrix(J.swap()), TV_TOL))
    raise ValueError("side must be 'x' or 'y'")


def _side_of(J: JointDistribution, s: FeatureTable) -> str:
    if s.alphabet == J.alphabet_x:
        return "x"
    if s.alphabet == J.alphabet_y:
        return "y"
    raise ValueError("statistic alphabet matches neither side of J")


def is_sufficient(J: JointDistribution, s: FeatureTable, side: str | None = None) -> bool:
    """s(X) is sufficient iff s(x) = s(x') implies equal conditionals P(Y|x), P(Y|x')."""
    side = side or _side_of(J, s)
    return _refines(row_groups(s.values), minimal_sufficient_partition(J, side).labels)


def is_jointly_sufficient(J: JointDistribution, f: FeatureTable, g: FeatureTable,
                          tol: float = 1e-9) -> bool:
    """True iff gamma(x, y) is constant on every fibre of (f(x), g(y))."""
    gamma = cdk_matrix(J).values
    return _constant_on_fibres(gamma, row_groups(f.values), row_groups(g.values), tol)


def _constant_on_fibres(M: np.ndarray, lf: np.ndarray, lg: np.ndarray, tol: float) -> bool:
    for a in np.unique(lf):
        rows = M[lf == a]
        for b in np.unique(lg):
            block = rows[:, lg == b]
            if block.max() - block.min() > tol:
                return False
    return True


@dataclass(frozen=True)
class TauReport:
    holds: bool
    ranks_ok: bool
    minimal_sufficient: bool
    max_abs_dev: float


def _numerical_rank(M: np.ndarray, rel: float = 1e-9) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rel * s[0])) if s[0] > 0 else 0


def tau_factorization_check(J: JointDistribution, f: FeatureTable, g: FeatureTable,
                            tau: Callable[[np.ndarray], np.ndarray] = lambda t: t,
                            tol: float = 1e-9) -> TauReport:
    """Check tau(gamma(x, y)) = f(x)^T g(y) with full-rank second moments.

    When both hold, f(X) and g(Y) are minimal sufficient statistics.
    """
    if f.k != g.k:
        raise ValueError("f and g must have the same dimension")
    target = tau(cdk_matrix(J).values)
    dev = float(np.max(np.abs(target - f.values @ g.values.T)))
    holds = dev <= tol
    lam_f = f.values.T @ (J.px[:, None] * f.values)
    lam_g = g.values.T @ (J.py[:, None] * g.values)
    ranks_ok = _numerical_rank(lam_f) == f.k and _numerical_rank(lam_g) == g.k
    return TauReport(holds, ranks_ok, holds and ranks_ok, dev)


def random_sufficient_statistic(J: JointDistribution, seed, side: str = "x") -> FeatureTable:
    """Random statistic that never merges symbols of different minimal blocks.

    Inside each minimal-sufficient block the members are assigned to random
    sub-blocks, so any coarsening of the identity partition that refines the
    minimal one can appear (including the minimal partition itself).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    part = minimal_sufficient_partition(J, side)
    labels = np.empty(part.alphabet.size, dtype=int)
    nxt = 0
    for b in range(part.n_blocks):
        members = np.flatnonzero(part.labels == b)
        n_sub = int(rng.integers(1, len(members) + 1))
        sub = rng.integers(0, n_sub, size=len(members))
        _, sub = np.unique(sub, return_inverse=True)
        labels[members] = nxt + sub
        nxt += sub.max() + 1
    ids = rng.permutation(nxt)[labels]
    return FeatureTable(part.alphabet, ids.astype(float)[:, None])


def all_partitions(n: int) -> Iterator[np.ndarray]:
    """Every set partition of ``range(n)`` as a restricted-growth label array."""
    labels = [0] * n

    def rec(i, m):
        if i == n:
            yield np.array(labels)
            return
        for b in range(m + 1):
            labels[i] = b
            yield from rec(i + 1, max(m, b + 1))

    if n == 0:
        yield np.zeros(0, dtype=int)
        return
    yield from rec(1, 1) if n > 1 else iter([np.zeros(1, dtype=int)])
