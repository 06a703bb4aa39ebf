"""Deterministic projected gradient descent over feature tables.

Steps are taken in the L2(P) geometry: the Euclidean gradient of row ``x``
is divided by its mass ``P_X(x)`` (``P_Y(y)`` for g), which makes the step
size independent of how finely the alphabet is split.  A step is accepted
only if it lowers the loss; rejected steps halve the step size and accepted
ones grow it by ``growth``.

Non-smooth losses are first minimized through a sequence of smooth
surrogates (``Loss.smoothed``) with shrinking ``tau``, each stage warm
started from the previous one, and finished on the exact loss.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DivergenceDetected, NoFeasiblePoint
from .features import FeatureTable
from .losses.core import Context, Loss
from .probability import JointDistribution


@dataclass(frozen=True)
class OptimConfig:
    """Settings for :func:`minimize`.

    Parameters
    ----------
    k : int
        Feature dimension.
    seed : int
        Master seed; restart ``r`` initializes from ``default_rng([seed, r])``.
    restarts : int
        Number of independent initializations; the best value wins.
    max_iters : int
        Iteration cap per restart.
    step : float
        Initial step size.
    growth : float
        Step multiplier after an accepted step (1 disables growth).
    grad_tol : float
        Stop when the projected gradient's max-abs entry falls below this.
    plateau : int
        Stop when the value has not improved by more than ``plateau_tol``
        (relative) over this many iterations.
    init_scale : float
        Standard deviation of the Gaussian initialization.
    smoothing : tuple of float
        Surrogate temperatures used for non-smooth losses.
    """

    k: int = 1
    seed: int = 0
    restarts: int = 5
    max_iters: int = 50000
    step: float = 0.05
    growth: float = 1.5
    grad_tol: float = 1e-7
    plateau: int = 200
    plateau_tol: float = 1e-13
    init_scale: float = 0.1
    min_step: float = 1e-14
    smoothing: tuple = (1e-1, 1e-2, 1e-3, 1e-4)

    def __post_init__(self):
        if self.k < 1 or self.restarts < 1 or self.max_iters < 1:
            raise ValueError("k, restarts and max_iters must be positive")
        if self.step <= 0 or self.grad_tol <= 0 or self.init_scale <= 0 or self.growth < 1:
            raise ValueError("step, grad_tol and init_scale must be positive and growth >= 1")

    def with_(self, **kw) -> "OptimConfig":
        return replace(self, **kw)


@dataclass
class MinimizationResult:
    f: FeatureTable
    g: FeatureTable
    value: float
    converged: bool
    iters: int
    restart_index: int
    grad_norm: float = np.nan
    values: tuple = ()

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "converged": self.converged,
            "iters": self.iters,
            "restart_index": self.restart_index,
            "grad_norm": self.grad_norm,
        }


def _descend(loss: Loss, ctx: Context, F, G, cfg: OptimConfig):
    """One restart of projected gradient descent from (F, G)."""
    wx = ctx.px[:, None]
    wy = ctx.py[:, None]
    F, G = loss.project(F, G, ctx)
    v, dF, dG = loss.value_and_grad(F, G, ctx)
    if np.isnan(v):
        raise DivergenceDetected("loss is NaN at the initial point")
    if not np.isfinite(v):
        raise NoFeasiblePoint(f"projection does not reach the feasible set of {loss.spec()}")
    eta = cfg.step
    history = [v]
    best_window = v
    since = 0
    pgrad = np.inf
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        Fn, Gn = loss.project(F - eta * dF / wx, G - eta * dG / wy, ctx)
        vn, dFn, dGn = loss.value_and_grad(Fn, Gn, ctx)
        if np.isnan(vn):
            raise DivergenceDetected(f"loss became NaN after {it} iterations")
        if vn <= v:
            moved = max(np.max(np.abs(wx * (F - Fn)), initial=0.0), np.max(np.abs(wy * (G - Gn)), initial=0.0))
            pgrad = moved / eta
            F, G, v, dF, dG = Fn, Gn, vn, dFn, dGn
            history.append(v)
            eta *= cfg.growth
            if pgrad <= cfg.grad_tol:
                converged = True
                break
        else:
            eta *= 0.5
            if eta < cfg.min_step:
                converged = not loss.smooth
                break
        if v < best_window - cfg.plateau_tol * max(1.0, abs(best_window)):
            best_window = v
            since = 0
        else:
            since += 1
            if since >= cfg.plateau:
                converged = not loss.smooth
                break
    if not np.isfinite(v):
        raise DivergenceDetected(f"loss is {v} after {it} iterations")
    return F, G, float(v), converged, it, float(pgrad), history


def minimize(loss: Loss, J: JointDistribution, cfg: OptimConfig,
             init: tuple | None = None) -> MinimizationResult:
    """Minimize ``loss`` over k-dimensional feature pairs on ``J``.

    Each restart starts from a Gaussian table (or from ``init`` for restart 0)
    and runs projected gradient descent; the lowest final value wins, ties
    going to the earlier restart.
    """
    loss.check_k(cfg.k)
    ctx = Context(J)
    nx, ny = J.shape
    best = None
    for r in range(cfg.restarts):
        if r == 0 and init is not None:
            F0, G0 = (np.array(a, dtype=float) for a in init)
        else:
            rng = np.random.default_rng([cfg.seed, r])
            F0 = cfg.init_scale * rng.standard_normal((nx, cfg.k))
            G0 = cfg.init_scale * rng.standard_normal((ny, cfg.k))
        its = 0
        if not loss.smooth:
            for tau in cfg.smoothing:
                F0, G0, _, _, it, _, _ = _descend(loss.smoothed(tau), ctx, F0, G0, cfg)
                its += it
        F, G, v, conv, it, pg, hist = _descend(loss, ctx, F0, G0, cfg)
        it += its
        if best is None or v < best[2]:
            best = (F, G, v, conv, it, r, pg, hist)
    F, G, v, conv, it, r, pg, hist = best
    return MinimizationResult(
        FeatureTable(J.alphabet_x, F), FeatureTable(J.alphabet_y, G),
        float(loss.value(F, G, ctx)), conv, it, r, pg, tuple(hist),
    )


def finite_diff_check(loss: Loss, f, g, J: JointDistribution, eps: float = 1e-5) -> float:
    """Max relative error between the analytic gradient and central differences.

    Constraint terms are ignored, so fixed coordinates may be perturbed.

    The error is ``max|fd - grad| / max(max|grad|, 1e-12)`` over all entries
    of both tables.  Accepts feature tables or raw matrices.
    """
    F = np.array(getattr(f, "values", f), dtype=float)
    G = np.array(getattr(g, "values", g), dtype=float)
    ctx = Context(J)
    _, dF, dG = loss.value_and_grad(F, G, ctx)
    fd = []
    for M in (F, G):
        D = np.zeros_like(M)
        for idx in np.ndindex(M.shape):
            old = M[idx]
            M[idx] = old + eps
            up = loss.smooth_value(F, G, ctx)
            M[idx] = old - eps
            dn = loss.smooth_value(F, G, ctx)
            M[idx] = old
            D[idx] = (up - dn) / (2 * eps)
        fd.append(D)
    analytic = np.concatenate([dF.ravel(), dG.ravel()])
    numeric = np.concatenate([fd[0].ravel(), fd[1].ravel()])
    scale = max(float(np.max(np.abs(analytic), initial=0.0)), 1e-12)
    return float(np.max(np.abs(numeric - analytic), initial=0.0) / scale)
