"""Randomized checks of the two D-loss axioms and of regularity.

Both checkers only refute: a pass means no counterexample was found among
the sampled trials.  Trial ``t`` draws its instance from
``default_rng([seed, t, 0])`` and its features from ``default_rng([seed, t, 1])``,
so a report does not depend on how trials are scheduled.  Instances are
cached per ``(seed, t)`` and shared between losses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..features import project_values
from ..probability import Alphabet, JointDistribution, pushforward_indices, random_instance
from ..sufficiency import random_sufficient_statistic
from .core import Context, Loss


@dataclass
class AxiomReport:
    name: str
    trials: int
    max_dev: float
    passed: bool
    finite_trials: int = 0
    failures: list = field(default_factory=list)
    equality_cases: int = 0
    regularity_violations: int = 0

    @property
    def regularity(self) -> str:
        if self.regularity_violations:
            return "not regular"
        return "no violations"

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: trials={self.trials} finite={self.finite_trials} max_dev={self.max_dev:.3g}"


def random_table(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Feature values from a mixture of Gaussian and clipped heavy-tailed draws."""
    if rng.random() < 0.5:
        return rng.normal(size=(n, k))
    return np.clip(rng.standard_cauchy(size=(n, k)), -10, 10)


def _sample_pair(rng, loss: Loss, nx: int, ny: int, k: int, ctx: Context):
    F = random_table(rng, nx, k)
    G = random_table(rng, ny, k)
    mode = rng.random()
    if mode < 0.1:
        G = np.zeros_like(G)
    elif mode < 0.2:
        F = np.zeros_like(F)
    elif mode < 0.3:
        F = np.tile(F[:1], (nx, 1))
    if rng.random() < 0.6:
        F, G = loss.project(F, G, ctx)
    return F, G


def _trial_k(rng, loss: Loss) -> int:
    rk = loss.required_k()
    if rk is not None:
        return rk
    lo = loss.min_k()
    return int(rng.integers(lo, lo + 3))


def _dev(a: float, b: float) -> float:
    fa, fb = np.isfinite(a), np.isfinite(b)
    if not fa and not fb:
        return 0.0
    if fa != fb:
        return np.inf
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _substitution_setting_for(J, rng, t):
    nx, ny = J.shape
    if t == 0:
        ix, iy = np.arange(nx), np.arange(ny)
    else:
        ix = rng.integers(0, int(rng.integers(1, nx + 1)), size=nx)
        iy = rng.integers(0, int(rng.integers(1, ny + 1)), size=ny)
        _, ix = np.unique(ix, return_inverse=True)
        _, iy = np.unique(iy, return_inverse=True)
    Jp = pushforward_indices(J, ix, iy, Alphabet.range(ix.max() + 1, "s"), Alphabet.range(iy.max() + 1, "t"))
    return Context(J), ix, iy, Context(Jp)


@lru_cache(maxsize=4096)
def _substitution_setting(seed, t):
    rng = np.random.default_rng([seed, t, 0])
    return _substitution_setting_for(random_instance(rng), rng, t)


def _projection_setting_for(J, rng, t):
    nx, ny = J.shape
    if t == 0:
        ls, lt = np.arange(nx), np.arange(ny)
    else:
        ls = random_sufficient_statistic(J, rng, "x").values[:, 0].astype(int)
        lt = random_sufficient_statistic(J, rng, "y").values[:, 0].astype(int)
    _, ls = np.unique(ls, return_inverse=True)
    _, lt = np.unique(lt, return_inverse=True)
    return Context(J), ls, lt


@lru_cache(maxsize=4096)
def _projection_setting(seed, t):
    rng = np.random.default_rng([seed, t, 0])
    return _projection_setting_for(random_instance(rng), rng, t)


def check_substitution_axiom(loss: Loss, J: JointDistribution | None = None, trials: int = 1000,
                             seed: int = 0, tol: float = 1e-10) -> AxiomReport:
    """Compare L(phi o xi, psi o eta; P_XY) with L(phi, psi; P_{xi(X), eta(Y)}).

    Deviations are relative to ``max(1, |value|)``; two infinite values agree.
    """
    rep = AxiomReport(f"substitution[{loss.spec()}]", trials, 0.0, True)
    for t in range(trials):
        if J is None:
            ctx, ix, iy, ctxp = _substitution_setting(seed, t)
        else:
            ctx, ix, iy, ctxp = _substitution_setting_for(J, np.random.default_rng([seed, t, 0]), t)
        rng = np.random.default_rng([seed, t, 1])
        k = _trial_k(rng, loss)
        phi, psi = _sample_pair(rng, loss, len(ctxp.px), len(ctxp.py), k, ctxp)
        a = loss.value(phi[ix], psi[iy], ctx)
        b = loss.value(phi, psi, ctxp)
        d = _dev(a, b)
        rep.finite_trials += int(np.isfinite(a) and np.isfinite(b))
        if d > rep.max_dev:
            rep.max_dev = float(d)
        if d > tol:
            rep.passed = False
            if len(rep.failures) < 10:
                rep.failures.append({"trial": t, "lhs": float(a), "rhs": float(b)})
    return rep


def check_projection_axiom(loss: Loss, J: JointDistribution | None = None, trials: int = 1000,
                           seed: int = 0, tol: float = 1e-9) -> AxiomReport:
    """Check L(E[f|s], E[g|t]) <= L(f, g) for random sufficient statistics s, t.

    The statistics never merge symbols of different minimal-sufficient blocks,
    so X - s(X) - t(Y) - Y holds.  Trials with equality and a finite value
    where (f, g) differs from its projection count as regularity violations.
    ``max_dev`` records the largest excess ``lhs - rhs`` (relative).
    """
    rep = AxiomReport(f"projection[{loss.spec()}]", trials, 0.0, True)
    for t in range(trials):
        if J is None:
            ctx, ls, lt = _projection_setting(seed, t)
        else:
            ctx, ls, lt = _projection_setting_for(J, np.random.default_rng([seed, t, 0]), t)
        nx, ny = len(ctx.px), len(ctx.py)
        rng = np.random.default_rng([seed, t, 1])
        k = _trial_k(rng, loss)
        F, G = _sample_pair(rng, loss, nx, ny, k, ctx)
        Fp = project_values(F, ls, ctx.px)
        Gp = project_values(G, lt, ctx.py)
        rhs = loss.value(F, G, ctx)
        lhs = loss.value(Fp, Gp, ctx)
        if np.isfinite(rhs):
            rep.finite_trials += 1
            scale = max(1.0, abs(rhs))
            excess = (lhs - rhs) / scale if np.isfinite(lhs) else np.inf
            rep.max_dev = max(rep.max_dev, float(excess))
            if excess > tol:
                rep.passed = False
                if len(rep.failures) < 10:
                    rep.failures.append({"trial": t, "lhs": float(lhs), "rhs": float(rhs)})
            elif abs(lhs - rhs) <= tol * scale:
                rep.equality_cases += 1
                fscale = max(1.0, float(np.max(np.abs(F))), float(np.max(np.abs(G))))
                moved = max(np.max(np.abs(F - Fp)), np.max(np.abs(G - Gp)))
                if moved > 1e-7 * fscale:
                    rep.regularity_violations += 1
    return rep
