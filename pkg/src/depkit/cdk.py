"""Canonical dependence kernel and its modal decomposition.

The decomposition is computed exactly through the whitened matrix
``B(x, y) = P(x, y) / sqrt(P_X(x) P_Y(y))``; this route serves as the oracle
for every learned-feature comparison in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionFailed, DegenerateTopMode
from .features import FeatureTable, canonicalize
from .probability import Alphabet, JointDistribution

DEFAULT_RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class CdkMatrix:
    values: np.ndarray
    alphabet_x: Alphabet
    alphabet_y: Alphabet


@dataclass(frozen=True, eq=False)
class ModalDecomposition:
    """Singular values and maximal correlation functions of a joint distribution."""

    sigma: np.ndarray
    f_star: FeatureTable
    g_star: FeatureTable

    @property
    def rank(self) -> int:
        return len(self.sigma)

    K = rank

    def truncate(self, k: int) -> "ModalDecomposition":
        return ModalDecomposition(
            self.sigma[:k],
            self.f_star.with_values(self.f_star.values[:, :k]),
            self.g_star.with_values(self.g_star.values[:, :k]),
        )

    def to_dict(self) -> dict:
        return {
            "sigma": [float(s) for s in self.sigma],
            "f_star": {"symbols": list(self.f_star.alphabet.symbols), "rows": self.f_star.values.tolist()},
            "g_star": {"symbols": list(self.g_star.alphabet.symbols), "rows": self.g_star.values.tolist()},
        }


def cdk_matrix(J: JointDistribution) -> CdkMatrix:
    """gamma(x, y) = P(x, y) / (P_X(x) P_Y(y)) - 1."""
    vals = J.mass / np.outer(J.px, J.py) - 1.0
    return CdkMatrix(vals, J.alphabet_x, J.alphabet_y)


def whitened_matrix(J: JointDistribution) -> np.ndarray:
    return J.mass / np.sqrt(np.outer(J.px, J.py))


def modal_decompose(J: JointDistribution, rank_tol: float = DEFAULT_RANK_TOL) -> ModalDecomposition:
    """Modal decomposition gamma = sum_i sigma_i f*_i(x) g*_i(y).

    ``rank_tol`` is relative to the largest CDK singular value (absolute when
    that value is below ``rank_tol``).  Signs follow the convention of
    :func:`depkit.features.canonicalize` without reference.
    """
    sx = np.sqrt(J.px)
    sy = np.sqrt(J.py)
    B = J.mass / np.outer(sx, sy)
    try:
        top = np.linalg.norm(B, 2)
        # the top mode (1, sqrt(P_X), sqrt(P_Y)) is removed explicitly so that
        # a repeated singular value 1 cannot swap it with a dependence mode
        U, s, Vt = np.linalg.svd(B - np.outer(sx, sy))
    except np.linalg.LinAlgError as exc:
        raise DecompositionFailed(str(exc)) from exc
    if abs(top - 1.0) > 1e-8:
        raise DegenerateTopMode(f"largest singular value of the whitened matrix is {top!r}, expected 1")
    cutoff = rank_tol * s[0] if s.size and s[0] >= rank_tol else rank_tol
    K = int(np.sum(s > cutoff))
    K = min(K, min(J.shape) - 1)
    f = U[:, :K] / sx[:, None]
    g = Vt[:K].T / sy[:, None]
    ft, gt = canonicalize(FeatureTable(J.alphabet_x, f), FeatureTable(J.alphabet_y, g), J)
    return ModalDecomposition(np.array(s[:K]), ft, gt)


def reconstruct_cdk(md: ModalDecomposition) -> CdkMatrix:
    vals = (md.f_star.values * md.sigma) @ md.g_star.values.T
    return CdkMatrix(vals, md.f_star.alphabet, md.g_star.alphabet)


def maximal_correlation(J: JointDistribution) -> float:
    md = modal_decompose(J)
    return float(md.sigma[0]) if md.rank else 0.0


def decomposition_residuals(J: JointDistribution, md: ModalDecomposition) -> dict:
    """Reconstruction, orthonormality and cross-moment residuals (max-abs)."""
    gamma = cdk_matrix(J).values
    F, G = md.f_star.values, md.g_star.values
    K = md.rank
    eye = np.eye(K)
    return {
        "reconstruction": float(np.max(np.abs(gamma - reconstruct_cdk(md).values), initial=0.0)),
        "orthonormal_f": float(np.max(np.abs(F.T @ (J.px[:, None] * F) - eye), initial=0.0)),
        "orthonormal_g": float(np.max(np.abs(G.T @ (J.py[:, None] * G) - eye), initial=0.0)),
        "cross": float(np.max(np.abs(F.T @ J.mass @ G - np.diag(md.sigma)), initial=0.0)),
    }
