"""scikit-learn style estimators over paired categorical samples.

``fit(X, y)`` takes two equally long sequences of symbols (or a
:class:`~depkit.probability.JointDistribution` as ``X`` with ``y=None``),
forms the exact empirical joint distribution and learns feature tables for
both sides.  ``transform`` looks the X symbols up in the learned table and
``transform_y`` does the same on the Y side.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cdk import modal_decompose
from .errors import DimMismatch
from .features import FeatureTable
from .losses import parse_loss
from .losses.core import Loss
from .optim import OptimConfig, minimize
from .probability import JointDistribution, empirical_from_samples


def _symbols(a) -> list:
    arr = np.asarray(a, dtype=object)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise DimMismatch(f"expected a 1-D sequence of symbols, got shape {arr.shape}")
    return [str(v) for v in arr]


def _joint(X, y, smoothing: float) -> JointDistribution:
    if isinstance(X, JointDistribution):
        if y is not None:
            raise ValueError("y must be None when X is a JointDistribution")
        return X
    if y is None:
        raise ValueError("y is required for sample input")
    xs, ys = _symbols(X), _symbols(y)
    if len(xs) != len(ys):
        raise DimMismatch(f"X has {len(xs)} samples but y has {len(ys)}")
    return empirical_from_samples(zip(xs, ys), smoothing=smoothing)


def _lookup(table: FeatureTable, a) -> np.ndarray:
    idx = [table.alphabet.index(s) for s in _symbols(a)]
    return np.asarray(table.values)[idx]


class _FeaturePairMixin(TransformerMixin):
    def transform(self, X):
        """Features of the X symbols, shape ``(n_samples, n_components)``."""
        check_is_fitted(self, "f_")
        return _lookup(self.f_, X)

    def transform_y(self, y):
        """Features of the Y symbols, shape ``(n_samples, n_components)``."""
        check_is_fitted(self, "g_")
        return _lookup(self.g_, y)

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).transform(X)


class MaximalCorrelation(_FeaturePairMixin, BaseEstimator):
    """Maximal correlation functions of the empirical joint distribution.

    Parameters
    ----------
    n_components : int or None
        Number of modes kept (all nonzero modes when None).
    rank_tol : float
        Relative singular value threshold for the rank.
    smoothing : float
        Mass added to every cell before renormalizing (needed when some
        symbol pair never occurs).

    Attributes
    ----------
    joint_ : JointDistribution
    sigma_ : ndarray
        Singular values in decreasing order.
    f_, g_ : FeatureTable
        Unit-variance, zero-mean features ``f*`` and ``g*``.
    """

    def __init__(self, n_components=None, rank_tol=1e-9, smoothing=0.0):
        self.n_components = n_components
        self.rank_tol = rank_tol
        self.smoothing = smoothing

    def fit(self, X, y=None):
        J = _joint(X, y, self.smoothing)
        md = modal_decompose(J, rank_tol=self.rank_tol)
        if self.n_components is not None:
            md = md.truncate(int(self.n_components))
        self.joint_ = J
        self.sigma_ = np.asarray(md.sigma)
        self.f_ = md.f_star
        self.g_ = md.g_star
        return self

    def score(self, X=None, y=None):
        """Half the sum of squared singular values kept (the optimal H-score)."""
        check_is_fitted(self, "sigma_")
        return 0.5 * float(np.sum(self.sigma_ ** 2))


class DependenceFeatureLearner(_FeaturePairMixin, BaseEstimator):
    """Features minimizing a D-loss on the empirical joint distribution.

    Parameters
    ----------
    loss : str or Loss
        Loss object or mini-language spec, e.g. ``"nested_h() + 0.01*l2(fg)"``.
    n_components : int or None
        Feature dimension; defaults to the loss's required k, else the rank.
    restarts, max_iters, seed
        Optimizer settings (see :class:`~depkit.optim.OptimConfig`).
    smoothing : float
        Mass added to every cell before renormalizing.

    Attributes
    ----------
    joint_ : JointDistribution
    f_, g_ : FeatureTable
    loss_value_ : float
    converged_ : bool
    """

    def __init__(self, loss="nested_h() + 0.01*l2(fg)", n_components=None, restarts=3,
                 max_iters=50000, seed=0, smoothing=0.0):
        self.loss = loss
        self.n_components = n_components
        self.restarts = restarts
        self.max_iters = max_iters
        self.seed = seed
        self.smoothing = smoothing

    def _loss(self) -> Loss:
        return self.loss if isinstance(self.loss, Loss) else parse_loss(self.loss)

    def fit(self, X, y=None):
        J = _joint(X, y, self.smoothing)
        L = self._loss()
        k = self.n_components or L.required_k() or max(modal_decompose(J).rank, 1)
        cfg = OptimConfig(k=int(k), seed=self.seed, restarts=self.restarts, max_iters=self.max_iters)
        res = minimize(L, J, cfg)
        self.joint_ = J
        self.f_, self.g_ = res.f, res.g
        self.loss_value_ = res.value
        self.converged_ = res.converged
        return self

    def score(self, X=None, y=None):
        """Negative loss value at the fitted features (higher is better)."""
        check_is_fitted(self, "loss_value_")
        return -self.loss_value_
