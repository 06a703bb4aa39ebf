"""Exact feature tables over finite alphabets.

A feature table maps every symbol of an alphabet to a k-dimensional real
vector.  This module collects the operations needed to manipulate such tables:
conditional projection onto a statistic, composition through an image
alphabet, moment matrices, nesting prefixes and sign/permutation alignment.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .errors import BadIndex, DimMismatch, UnmatchedRow
from .probability import Alphabet, Distribution, JointDistribution

ROW_DECIMALS = 12
ROW_ATOL = 1e-9


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Map from the symbols of ``alphabet`` to rows of ``values``."""

    alphabet: Alphabet
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.alphabet.size:
            raise DimMismatch(
                f"feature values of shape {v.shape} do not match an alphabet of {self.alphabet.size} symbols"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("feature values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def k(self) -> int:
        return self.values.shape[1]

    dim = k

    def __call__(self, z) -> np.ndarray:
        return evaluate(self, z)

    def with_values(self, values) -> "FeatureTable":
        return FeatureTable(self.alphabet, values)


@dataclass(frozen=True, eq=False)
class MomentSet:
    mean_f: np.ndarray
    mean_g: np.ndarray
    lambda_f: np.ndarray
    lambda_g: np.ndarray
    lambda_fg: np.ndarray


def constant_table(alphabet: Alphabet, value) -> FeatureTable:
    value = np.atleast_1d(np.asarray(value, dtype=float))
    return FeatureTable(alphabet, np.tile(value, (alphabet.size, 1)))


def identity_table(alphabet: Alphabet) -> FeatureTable:
    """One-hot encoding; injective on the alphabet."""
    return FeatureTable(alphabet, np.eye(alphabet.size))


def evaluate(f: FeatureTable, z) -> np.ndarray:
    return f.values[f.alphabet.index(z)].copy()


def row_groups(values: np.ndarray, atol: float = ROW_ATOL) -> np.ndarray:
    """Group identical rows; returns a group id per row.

    Rows are assigned greedily, in order, to the first earlier representative
    within ``atol`` (max-abs, scaled by the row magnitude).  Group ids are
    numbered by first appearance.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if values.ndim == 1:
        values = values[:, None]
    labels = np.full(n, -1, dtype=int)
    reps: list[int] = []
    for i in range(n):
        row = values[i]
        for gid, r in enumerate(reps):
            scale = max(1.0, np.max(np.abs(values[r]), initial=0.0))
            if np.max(np.abs(values[r] - row), initial=0.0) <= atol * scale:
                labels[i] = gid
                break
        else:
            labels[i] = len(reps)
            reps.append(i)
    return labels


def encode_row(row) -> str:
    parts = []
    for v in np.asarray(row, dtype=float):
        v = round(float(v), ROW_DECIMALS) + 0.0
        parts.append(f"{v:.{ROW_DECIMALS}g}")
    return "(" + ",".join(parts) + ")"


def decode_row(label: str) -> np.ndarray:
    body = label.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise UnmatchedRow(f"{label!r} is not a row encoding")
    body = body[1:-1]
    if not body:
        return np.zeros(0)
    return np.array([float(t) for t in body.split(",")])


def image_alphabet(f: FeatureTable, atol: float = ROW_ATOL):
    """Alphabet of distinct rows of ``f`` and the encoder symbol -> image index.

    Image symbols are canonical string encodings of the representative rows.
    """
    labels = row_groups(f.values, atol)
    n_img = labels.max() + 1
    reps = [int(np.flatnonzero(labels == g)[0]) for g in range(n_img)]
    enc = [encode_row(f.values[r]) for r in reps]
    if len(set(enc)) != len(enc):
        # rows closer than the encoding resolution but outside atol: disambiguate
        enc = [f"{e}#{g}" for g, e in enumerate(enc)]
    return Alphabet(enc), labels


def image_table(f: FeatureTable, atol: float = ROW_ATOL) -> FeatureTable:
    """Identity feature on the image of ``f``: row of each image symbol."""
    alpha, labels = image_alphabet(f, atol)
    reps = [int(np.flatnonzero(labels == g)[0]) for g in range(alpha.size)]
    return FeatureTable(alpha, f.values[reps])


def conditional_projection(f: FeatureTable, s: FeatureTable, p) -> FeatureTable:
    """E[f(Z) | s(Z) = s(z)] as a table over the alphabet of ``f``.

    Symbols are grouped by identical rows of ``s``; within a group every row
    is replaced by the ``p``-weighted mean of the group's rows of ``f``.
    """
    if f.alphabet != s.alphabet:
        raise DimMismatch("f and s must share an alphabet")
    w = np.asarray(p.mass if isinstance(p, Distribution) else p, dtype=float)
    labels = row_groups(s.values)
    return f.with_values(project_values(f.values, labels, w))


def project_values(values: np.ndarray, labels: np.ndarray, w: np.ndarray) -> np.ndarray:
    n_groups = labels.max() + 1
    M = np.zeros((len(labels), n_groups))
    M[np.arange(len(labels)), labels] = 1.0
    tot = w @ M
    means = (M * w[:, None]).T @ values / tot[:, None]
    return means[labels]


def compose(outer: FeatureTable, inner: FeatureTable, atol: float = ROW_ATOL) -> FeatureTable:
    """``outer o inner``: look up each row of ``inner`` in the image alphabet of ``outer``.

    The symbols of ``outer.alphabet`` must be row encodings (see
    :func:`image_alphabet`); each inner row is matched to the encoded vector
    within ``atol``.
    """
    keys = [decode_row(s.split("#")[0]) for s in outer.alphabet.symbols]
    idx = np.empty(inner.alphabet.size, dtype=int)
    for i, row in enumerate(inner.values):
        best, best_err = -1, np.inf
        for j, key in enumerate(keys):
            if key.shape != row.shape:
                continue
            err = np.max(np.abs(key - row), initial=0.0)
            if err < best_err:
                best, best_err = j, err
        tol = max(atol, 10.0 ** -ROW_DECIMALS) * max(1.0, np.max(np.abs(row), initial=0.0))
        if best < 0 or best_err > tol:
            raise UnmatchedRow(f"row of {inner.alphabet.symbols[i]!r} has no matching outer symbol")
        idx[i] = best
    return FeatureTable(inner.alphabet, outer.values[idx])


def compose_by_index(outer_values: np.ndarray, encoder: np.ndarray, alphabet: Alphabet) -> FeatureTable:
    return FeatureTable(alphabet, np.asarray(outer_values)[encoder])


def moments(f: FeatureTable, g: FeatureTable, J: JointDistribution) -> MomentSet:
    if f.alphabet.size != J.shape[0] or g.alphabet.size != J.shape[1]:
        raise DimMismatch("feature alphabets do not match the joint distribution")
    F, G = f.values, g.values
    px, py = J.px, J.py
    return MomentSet(
        mean_f=px @ F,
        mean_g=py @ G,
        lambda_f=F.T @ (px[:, None] * F),
        lambda_g=G.T @ (py[:, None] * G),
        lambda_fg=F.T @ J.mass @ G,
    )


def second_moment(f: FeatureTable, p) -> np.ndarray:
    w = np.asarray(p.mass if isinstance(p, Distribution) else p, dtype=float)
    return f.values.T @ (w[:, None] * f.values)


def slice_prefix(f: FeatureTable, i: int) -> FeatureTable:
    """First ``i`` coordinates of ``f``."""
    if not 1 <= i <= f.k:
        raise BadIndex(f"prefix length {i} outside [1, {f.k}]")
    return f.with_values(f.values[:, :i])


def _weighted_corr(A: np.ndarray, B: np.ndarray, w: np.ndarray) -> np.ndarray:
    num = A.T @ (w[:, None] * B)
    na = np.sqrt(np.einsum("ij,ij,i->j", A, A, w))
    nb = np.sqrt(np.einsum("ij,ij,i->j", B, B, w))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = num / np.outer(na, nb)
    return np.nan_to_num(c)


def canonicalize(f: FeatureTable, g: FeatureTable, J: JointDistribution, reference=None):
    """Resolve the sign (and, with a reference, permutation) ambiguity of a feature pair.

    With ``reference`` (a modal decomposition or an ``f*`` table), columns are
    greedily matched to reference columns by absolute L2(P_X) correlation and
    each pair (f_i, g_i) is flipped jointly so that E[f_i f*_i] >= 0.  Without
    a reference the first entry of each f column above 1e-9 in magnitude is
    made positive.
    """
    F = np.array(f.values)
    G = np.array(g.values)
    if F.shape[1] != G.shape[1]:
        raise DimMismatch("f and g must have the same dimension")
    k = F.shape[1]
    if reference is None:
        for i in range(k):
            nz = np.flatnonzero(np.abs(F[:, i]) > 1e-9)
            if nz.size and F[nz[0], i] < 0:
                F[:, i] *= -1
                G[:, i] *= -1
        return f.with_values(F), g.with_values(G)

    ref = getattr(reference, "f_star", reference)
    R = ref.values
    w = J.px
    C = _weighted_corr(F, R, w)
    order = [-1] * k
    used_f, used_r = set(), set()
    pairs = sorted(((abs(C[i, j]), i, j) for i in range(k) for j in range(R.shape[1])),
                   key=lambda t: (-t[0], t[2], t[1]))
    for _, i, j in pairs:
        if i in used_f or j in used_r:
            continue
        order[j] = i
        used_f.add(i)
        used_r.add(j)
    perm = [order[j] for j in range(min(k, R.shape[1])) if order[j] >= 0]
    perm += [i for i in range(k) if i not in perm]
    F, G = F[:, perm], G[:, perm]
    for j in range(min(k, R.shape[1])):
        if w @ (F[:, j] * R[:, j]) < 0:
            F[:, j] *= -1
            G[:, j] *= -1
    return f.with_values(F), g.with_values(G)


def subspace_distance(f: FeatureTable, ref: FeatureTable, p) -> float:
    """Sine of the largest principal angle between column spans in L2(p)."""
    w = np.sqrt(np.asarray(p.mass if isinstance(p, Distribution) else p, dtype=float))
    A = w[:, None] * f.values
    B = w[:, None] * ref.values
    if A.shape[1] == 0 or B.shape[1] == 0:
        return 0.0 if A.shape[1] == B.shape[1] else 1.0
    return float(np.sin(np.max(subspace_angles(A, B))))


# -- CSV --------------------------------------------------------------------

def write_feature_csv(f: FeatureTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["symbol"] + [f"f{i + 1}" for i in range(f.k)])
        for sym, row in zip(f.alphabet.symbols, f.values):
            w.writerow([sym] + [format(float(v), ".17g") for v in row])


def read_feature_csv(path) -> FeatureTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "symbol":
        raise ValueError("feature CSV header must start with 'symbol'")
    k = len(header) - 1
    alpha = Alphabet(r[0] for r in body)
    values = np.array([[float(v) for v in r[1:]] for r in body]).reshape(len(body), k)
    return FeatureTable(alpha, values)
