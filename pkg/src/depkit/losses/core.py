"""Loss expressions over feature tables with exact expectations.

Every loss is evaluated on raw value matrices ``F`` (|X| x k) and ``G``
(|Y| x k) under a :class:`Context` holding the joint masses.  Values are
extended reals: constraint violations give ``inf``.  Gradients are Euclidean
derivatives with respect to the entries of ``F`` and ``G``; constraint terms
contribute nothing to them and are enforced by projection instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp, softmax

from ..errors import DimMismatch, NonConvexCertificateMissing
from ..probability import JointDistribution

FEAS_TOL = 1e-9


class Context:
    """Expectation weights of a joint distribution."""

    __slots__ = ("P", "px", "py", "Q", "logpy")

    def __init__(self, J: JointDistribution):
        self.P = np.asarray(J.mass)
        self.px = np.asarray(J.px)
        self.py = np.asarray(J.py)
        self.Q = np.outer(self.px, self.py)
        self.logpy = np.log(self.py)

    @classmethod
    def of(cls, J) -> "Context":
        return J if isinstance(J, Context) else cls(J)


# -- constraint sets --------------------------------------------------------

class Constraint:
    """Convex set applied row-wise (or to the mean) of one side's features."""

    order = 0
    side = "f"

    def _pick(self, F, G, ctx):
        return (F, ctx.px) if self.side == "f" else (G, ctx.py)

    def satisfied(self, F, G, ctx) -> bool:
        V, w = self._pick(F, G, ctx)
        return self._ok(V, w)

    def apply(self, F, G, ctx):
        V, w = self._pick(F, G, ctx)
        V = self._proj(np.array(V), w)
        return (V, G) if self.side == "f" else (F, V)

    def min_k(self) -> int:
        return 1


@dataclass(frozen=True)
class FixedCoordinate(Constraint):
    side: str = "f"
    j: int = 0
    c: float = 1.0
    order = 0

    def _ok(self, V, w):
        return bool(np.all(np.abs(V[:, self.j] - self.c) <= FEAS_TOL))

    def _proj(self, V, w):
        V[:, self.j] = self.c
        return V

    def min_k(self):
        return self.j + 1 if self.j >= 0 else -self.j

    def spec(self):
        return f"fixed(j={self.j}, c={self.c:g})"


@dataclass(frozen=True)
class Orthant(Constraint):
    side: str = "f"
    order = 1

    def _ok(self, V, w):
        return bool(np.all(V >= -FEAS_TOL))

    def _proj(self, V, w):
        return np.maximum(V, 0.0)

    def spec(self):
        return "orthant"


@dataclass(frozen=True)
class Ball(Constraint):
    side: str = "f"
    p: float = 2.0
    r: float = 1.0
    order = 2

    def _norms(self, V):
        return np.linalg.norm(V, ord=self.p, axis=1)

    def _ok(self, V, w):
        return bool(np.all(self._norms(V) <= self.r * (1 + FEAS_TOL)))

    def _proj(self, V, w):
        n = self._norms(V)
        scale = np.where(n > self.r, self.r / np.maximum(n, 1e-300), 1.0)
        return V * scale[:, None]

    def spec(self):
        return f"ball(p={self.p:g}, r={self.r:g})"


@dataclass(frozen=True)
class MeanZero(Constraint):
    side: str = "g"
    order = 3

    def _ok(self, V, w):
        m = w @ V
        scale = max(1.0, float(np.max(np.abs(V), initial=0.0)))
        return bool(np.all(np.abs(m) <= FEAS_TOL * scale))

    def _proj(self, V, w):
        return V - w @ V

    def spec(self):
        return "mean0"


def apply_constraints(constraints, F, G, ctx):
    for c in sorted(constraints, key=lambda c: c.order):
        F, G = c.apply(F, G, ctx)
    return F, G


# -- scalar convex maps -----------------------------------------------------

@dataclass(frozen=True)
class ScalarMap:
    """Convex scalar function with derivative, used inside atoms."""

    name: str
    fn: Callable
    deriv: Callable


def _abs_p(p):
    return ScalarMap(f"abs_p(p={p:g})", lambda t: np.abs(t) ** p,
                     lambda t: p * np.sign(t) * np.abs(t) ** (p - 1))


SCALAR_MAPS = {
    "square": ScalarMap("square", lambda t: t * t, lambda t: 2 * t),
    "exp": ScalarMap("exp", np.exp, np.exp),
    "kl": ScalarMap("kl", lambda t: np.exp(t - 1), lambda t: np.exp(t - 1)),
    "chi2": ScalarMap("chi2", lambda t: t * t / 4 + t, lambda t: t / 2 + 1),
}


def scalar_map(u, p: float = 2.0) -> ScalarMap:
    if isinstance(u, ScalarMap):
        return u
    if u == "abs_p":
        return _abs_p(p)
    try:
        return SCALAR_MAPS[u]
    except KeyError:
        raise NonConvexCertificateMissing(
            f"{u!r} is not a built-in convex map; choose from {sorted(SCALAR_MAPS) + ['abs_p']}"
        ) from None


# -- base class -------------------------------------------------------------

class Loss:
    """Node of a loss expression tree."""

    smooth = True

    # dimension declared by the atom, or None if any k works
    def required_k(self):
        return None

    def min_k(self) -> int:
        return max([1] + [c.min_k() for c in self.constraints()])

    def constraints(self) -> list:
        return []

    def value(self, F, G, ctx) -> float:
        v = self._value(F, G, ctx)
        if not all(c.satisfied(F, G, ctx) for c in self._own_constraints()):
            return np.inf
        return v

    def value_and_grad(self, F, G, ctx):
        v, dF, dG = self._value_and_grad(F, G, ctx)
        if not all(c.satisfied(F, G, ctx) for c in self._own_constraints()):
            v = np.inf
        return v, dF, dG

    def _own_constraints(self):
        return self.constraints()

    def smoothed(self, tau: float) -> "Loss":
        """Smooth surrogate within ``O(tau)`` of this loss (itself when already smooth)."""
        return self

    def smooth_value(self, F, G, ctx) -> float:
        """Value with every constraint term dropped (the part the gradient sees)."""
        return self._value_and_grad(F, G, ctx)[0]

    def _value(self, F, G, ctx):
        return self._value_and_grad(F, G, ctx)[0]

    def project(self, F, G, ctx):
        """Map (F, G) onto the feasible set of all constraint terms."""
        return apply_constraints(self.constraints(), F, G, ctx)

    def check_k(self, k: int) -> None:
        rk = self.required_k()
        if rk is not None and rk != k:
            raise DimMismatch(f"{self.spec()} requires k={rk}, got k={k}")
        if k < self.min_k():
            raise DimMismatch(f"{self.spec()} requires k >= {self.min_k()}, got k={k}")

    def spec(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec()}>"

    def __add__(self, other):
        if not isinstance(other, Loss):
            return NotImplemented
        return Aggregate([(1.0, self), (1.0, other)])

    def __mul__(self, w):
        if not np.isscalar(w):
            return NotImplemented
        return Aggregate([(float(w), self)])

    __rmul__ = __mul__


def _inner(F, G):
    return F @ G.T


# -- atoms ------------------------------------------------------------------

def h_score_parts(F, G, ctx):
    """H-score and its gradient (ascent direction) for raw tables."""
    P, px, py = ctx.P, ctx.px, ctx.py
    mf = px @ F
    mg = py @ G
    lf = F.T @ (px[:, None] * F)
    lg = G.T @ (py[:, None] * G)
    PG = P @ G
    H = np.sum(F * PG) - mf @ mg - 0.5 * np.sum(lf * lg)
    dF = PG - np.outer(px, mg) - px[:, None] * (F @ lg)
    dG = P.T @ F - np.outer(py, mf) - py[:, None] * (G @ lf)
    return H, dF, dG


class HScore(Loss):
    """Negative H-score, ``-(E[f^T g] - E[f]^T E[g] - tr(L_f L_g) / 2)``."""

    def __init__(self, k=None):
        self.k = k

    def required_k(self):
        return self.k

    def _value_and_grad(self, F, G, ctx):
        H, dF, dG = h_score_parts(F, G, ctx)
        return -H, -dF, -dG

    def spec(self):
        return "h()" if self.k is None else f"h(k={self.k})"


class NestedHScore(Loss):
    """Negative nested H-score ``-sum_i c_i H(f_[i], g_[i])``."""

    def __init__(self, k=None, weights=None):
        if weights is not None:
            weights = np.asarray(weights, dtype=float)
            if np.any(weights < 0):
                raise ValueError("nesting weights must be non-negative")
            if k is not None and len(weights) != k:
                raise DimMismatch("need one nesting weight per dimension")
            k = len(weights)
        self.k = k
        self.weights = weights

    def required_k(self):
        return self.k

    def _value_and_grad(self, F, G, ctx):
        P, px, py = ctx.P, ctx.px, ctx.py
        k = F.shape[1]
        c = np.ones(k) if self.weights is None else self.weights
        # suffix sums: column j appears in every prefix i >= j
        mf = px @ F
        mg = py @ G
        lf = F.T @ (px[:, None] * F)
        lg = G.T @ (py[:, None] * G)
        PG = P @ G
        PtF = P.T @ F
        cross = np.sum(F * PG, axis=0)
        total = 0.0
        dF = np.zeros_like(F)
        dG = np.zeros_like(G)
        for i in range(1, k + 1):
            if c[i - 1] == 0:
                continue
            s = slice(0, i)
            Hi = cross[s].sum() - mf[s] @ mg[s] - 0.5 * np.sum(lf[s, s] * lg[s, s])
            total += c[i - 1] * Hi
            dF[:, s] += c[i - 1] * (PG[:, s] - np.outer(px, mg[s]) - px[:, None] * (F[:, s] @ lg[s, s]))
            dG[:, s] += c[i - 1] * (PtF[:, s] - np.outer(py, mf[s]) - py[:, None] * (G[:, s] @ lf[s, s]))
        return -total, -dF, -dG

    def spec(self):
        if self.weights is not None:
            return "nested_h(weights=[" + ",".join(f"{w:g}" for w in self.weights) + "])"
        return "nested_h()" if self.k is None else f"nested_h(k={self.k})"


class ExtendedLogLoss(Loss):
    """Log loss in feature form: ``-E[f^T g] + E_X log E_Y exp(f^T g)`` with f_1 = 1."""

    def __init__(self, k=None):
        self.k = k
        self._fixed = FixedCoordinate("f", 0, 1.0)

    def required_k(self):
        return self.k

    def constraints(self):
        return [self._fixed]

    def _value_and_grad(self, F, G, ctx):
        A = _inner(F, G)
        Z = A + ctx.logpy
        lse = logsumexp(Z, axis=1)
        v = -np.sum(ctx.P * A) + ctx.px @ lse
        dA = -ctx.P + ctx.px[:, None] * softmax(Z, axis=1)
        return v, dA @ G, dA.T @ F

    def spec(self):
        return "logloss()" if self.k is None else f"logloss(k={self.k})"


class ExtendedSvm(Loss):
    """Hinge loss in feature form with f_k = 1 and E[g(Y)] = 0.

    ``E[(1 - f^T g)^+] + lam * E[||g_[d](Y)||^2]`` where ``d = k - 1``.
    """

    def __init__(self, d=None, lam=0.1, huber=0.0):
        if lam < 0:
            raise ValueError("lambda must be non-negative")
        self.d = d
        self.lam = float(lam)
        self.huber = float(huber)
        self._fixed = FixedCoordinate("f", -1, 1.0)
        self._mean = MeanZero("g")

    @property
    def smooth(self):
        return self.huber > 0

    def smoothed(self, tau):
        return ExtendedSvm(self.d, self.lam, huber=tau)

    def required_k(self):
        return None if self.d is None else self.d + 1

    def min_k(self):
        return 2

    def constraints(self):
        return [self._fixed, self._mean]

    def _value_and_grad(self, F, G, ctx):
        A = _inner(F, G)
        slack = 1.0 - A
        Gd = G[:, :-1]
        if self.huber > 0:
            # Huberized hinge: quadratic on (0, tau), within tau/2 of the hinge
            t = self.huber
            h = np.where(slack >= t, slack - t / 2, np.where(slack > 0, slack * slack / (2 * t), 0.0))
            dh = np.clip(slack / t, 0.0, 1.0)
        else:
            h = np.maximum(slack, 0.0)
            dh = (slack > 0).astype(float)
        v = np.sum(ctx.P * h) + self.lam * (ctx.py @ np.sum(Gd * Gd, axis=1))
        dA = -ctx.P * dh
        dG = dA.T @ F
        dG[:, :-1] += 2 * self.lam * ctx.py[:, None] * Gd
        return v, dA @ G, dG

    def spec(self):
        d = "" if self.d is None else f"d={self.d}, "
        hub = f", huber={self.huber:g}" if self.huber else ""
        return f"svm({d}lambda={self.lam:g}{hub})"


class FDivVariational(Loss):
    """``-E_{P_XY}[f^T g] + E_{P_X P_Y}[u(f^T g)]`` for a convex u."""

    def __init__(self, u="kl", k=None):
        self.u = scalar_map(u)
        self.k = k

    def required_k(self):
        return self.k

    def _value_and_grad(self, F, G, ctx):
        A = _inner(F, G)
        v = -np.sum(ctx.P * A) + np.sum(ctx.Q * self.u.fn(A))
        dA = -ctx.P + ctx.Q * self.u.deriv(A)
        return v, dA @ G, dA.T @ F

    def spec(self):
        k = "" if self.k is None else f", k={self.k}"
        return f"fdiv(u={self.u.name}{k})"


PAIR_FUNCS = ("sqdist", "pdist", "lse", "inner")


class PairwiseConvex(Loss):
    """``E[gamma(f(X), g(Y))]`` under ``P_XY`` (joint) or ``P_X P_Y`` (product).

    ``gamma`` is one of the built-ins: ``sqdist`` (||f - g||^2), ``pdist``
    (||f - g||_p), ``lse`` (log sum_i exp(f_i - g_i)) or ``inner`` (u(f^T g)
    for a built-in convex scalar u).
    """

    def __init__(self, gamma="sqdist", measure="joint", p=2.0, u="square"):
        if gamma not in PAIR_FUNCS:
            raise NonConvexCertificateMissing(f"{gamma!r} is not a built-in convex pair function")
        if measure not in ("joint", "product"):
            raise ValueError("measure must be 'joint' or 'product'")
        if p < 1:
            raise ValueError("p must be >= 1")
        self.gamma = gamma
        self.measure = measure
        self.p = float(p)
        self.u = scalar_map(u) if gamma == "inner" else None

    @property
    def smooth(self):
        return self.gamma != "pdist" or self.p > 1

    def _value_and_grad(self, F, G, ctx):
        W = ctx.P if self.measure == "joint" else ctx.Q
        if self.gamma == "inner":
            A = _inner(F, G)
            dA = W * self.u.deriv(A)
            return np.sum(W * self.u.fn(A)), dA @ G, dA.T @ F
        D = F[:, None, :] - G[None, :, :]
        if self.gamma == "sqdist":
            val = np.sum(D * D, axis=2)
            dD = 2 * D
        elif self.gamma == "lse":
            val = logsumexp(D, axis=2)
            dD = softmax(D, axis=2)
        else:
            p = self.p
            val = np.linalg.norm(D, ord=p, axis=2) if D.shape[2] else np.zeros(W.shape)
            with np.errstate(divide="ignore", invalid="ignore"):
                dD = np.sign(D) * np.abs(D) ** (p - 1) / val[:, :, None] ** (p - 1)
            dD = np.nan_to_num(dD, nan=0.0, posinf=0.0, neginf=0.0)
        WdD = W[:, :, None] * dD
        return np.sum(W * val), WdD.sum(axis=1), -WdD.sum(axis=0)

    def spec(self):
        if self.gamma == "sqdist":
            return f"sqdist(measure={self.measure})"
        if self.gamma == "pdist":
            return f"pdist(p={self.p:g}, measure={self.measure})"
        if self.gamma == "lse":
            return f"lse(measure={self.measure})"
        return f"inner(u={self.u.name}, measure={self.measure})"


def PairwiseConvexJoint(gamma="sqdist", **kw):
    return PairwiseConvex(gamma, "joint", **kw)


def PairwiseConvexProduct(gamma="sqdist", **kw):
    return PairwiseConvex(gamma, "product", **kw)


class NormRegularizer(Loss):
    """``lam_f E[||f||] + lam_g E[||g||]`` with squared 2-norms by default.

    For ``p != 2`` (or ``squared=False``) the plain p-norm is used.
    """

    def __init__(self, f_weight=1.0, g_weight=1.0, p=2.0, squared=None):
        if f_weight < 0 or g_weight < 0:
            raise ValueError("regularization weights must be non-negative")
        if p < 1:
            raise ValueError("p must be >= 1")
        self.f_weight = float(f_weight)
        self.g_weight = float(g_weight)
        self.p = float(p)
        self.squared = (p == 2) if squared is None else bool(squared)

    @property
    def smooth(self):
        return self.squared or self.p > 1

    def _side(self, V, w):
        if self.squared and self.p == 2:
            return w @ np.sum(V * V, axis=1), 2 * w[:, None] * V
        n = np.linalg.norm(V, ord=self.p, axis=1) if V.shape[1] else np.zeros(V.shape[0])
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.sign(V) * np.abs(V) ** (self.p - 1) / n[:, None] ** (self.p - 1)
        d = np.nan_to_num(d, nan=0.0, posinf=0.0, neginf=0.0)
        if self.squared:
            return w @ (n * n), 2 * w[:, None] * n[:, None] * d
        return w @ n, w[:, None] * d

    def _value_and_grad(self, F, G, ctx):
        vf, dF = self._side(F, ctx.px)
        vg, dG = self._side(G, ctx.py)
        return self.f_weight * vf + self.g_weight * vg, self.f_weight * dF, self.g_weight * dG

    def spec(self):
        parts = []
        for side, w in (("f", self.f_weight), ("g", self.g_weight)):
            if w == 0:
                continue
            if self.squared and self.p == 2:
                core = f"l2({side})"
            else:
                core = f"lp({side}, p={self.p:g}{', squared=1' if self.squared else ''})"
            parts.append(core if w == 1 else f"{w:g}*{core}")
        return " + ".join(parts) or "0*l2(f)"


class ConstraintIndicator(Loss):
    """``E[I_C(f(X))]``: zero when every feature row lies in C, else infinity."""

    def __init__(self, constraint: Constraint):
        self.constraint = constraint

    def constraints(self):
        return [self.constraint]

    def _value_and_grad(self, F, G, ctx):
        return 0.0, np.zeros_like(F), np.zeros_like(G)

    def spec(self):
        return f"constrain({self.constraint.side}, {self.constraint.spec()})"


@dataclass(frozen=True)
class MomentMap:
    """Function nu(a, E[f], E[g], L_fg) declared nondecreasing in ``a``.

    ``fn`` returns ``(value, d_a, d_mean_f, d_mean_g, d_lambda_fg)``.
    """

    name: str
    fn: Callable
    nondecreasing: bool = False


def _nu_mean_penalty(c):
    def fn(a, mf, mg, L):
        return a + c * (mf @ mf + mg @ mg), 1.0, 2 * c * mf, 2 * c * mg, np.zeros_like(L)
    return MomentMap(f"mean_penalty(c={c:g})", fn, True)


def _nu_cross_trace(c):
    def fn(a, mf, mg, L):
        return a - c * np.trace(L), 1.0, np.zeros_like(mf), np.zeros_like(mg), -c * np.eye(L.shape[0])
    return MomentMap(f"cross_trace(c={c:g})", fn, True)


def _nu_softplus(c):
    def fn(a, mf, mg, L):
        return np.logaddexp(0.0, a), 1.0 / (1.0 + np.exp(-a)), np.zeros_like(mf), np.zeros_like(mg), np.zeros_like(L)
    return MomentMap("softplus", fn, True)


MOMENT_MAPS = {"mean_penalty": _nu_mean_penalty, "cross_trace": _nu_cross_trace, "softplus": _nu_softplus}


class MomentWrapper(Loss):
    """``nu(L(f, g), E[f], E[g], L_fg)`` for nu nondecreasing in its first argument."""

    def __init__(self, inner: Loss, nu="mean_penalty", c=0.1):
        if isinstance(nu, str):
            if nu not in MOMENT_MAPS:
                raise NonConvexCertificateMissing(f"unknown moment map {nu!r}; choose from {sorted(MOMENT_MAPS)}")
            nu = MOMENT_MAPS[nu](float(c))
        if not getattr(nu, "nondecreasing", False):
            raise NonConvexCertificateMissing("moment map must be declared nondecreasing in its first argument")
        self.inner = inner
        self.nu = nu

    @property
    def smooth(self):
        return self.inner.smooth

    def smoothed(self, tau):
        return MomentWrapper(self.inner.smoothed(tau), self.nu)

    def required_k(self):
        return self.inner.required_k()

    def min_k(self):
        return self.inner.min_k()

    def constraints(self):
        return self.inner.constraints()

    def _own_constraints(self):
        return []

    def value(self, F, G, ctx):
        a = self.inner.value(F, G, ctx)
        if not np.isfinite(a):
            return np.inf
        mf, mg, L = ctx.px @ F, ctx.py @ G, F.T @ ctx.P @ G
        return float(self.nu.fn(a, mf, mg, L)[0])

    def smooth_value(self, F, G, ctx):
        a = self.inner.smooth_value(F, G, ctx)
        mf, mg, L = ctx.px @ F, ctx.py @ G, F.T @ ctx.P @ G
        return float(self.nu.fn(a, mf, mg, L)[0])

    def value_and_grad(self, F, G, ctx):
        a, dFi, dGi = self.inner.value_and_grad(F, G, ctx)
        mf, mg, L = ctx.px @ F, ctx.py @ G, F.T @ ctx.P @ G
        # chain rule through the smooth part even when a constraint is violated
        a_s = a if np.isfinite(a) else self.inner.smooth_value(F, G, ctx)
        v, da, dmf, dmg, dL = self.nu.fn(a_s, mf, mg, L)
        if not np.isfinite(a):
            v = np.inf
        dF = da * dFi + np.outer(ctx.px, dmf) + ctx.P @ G @ dL.T
        dG = da * dGi + np.outer(ctx.py, dmg) + ctx.P.T @ F @ dL
        return float(v), dF, dG

    def spec(self):
        return f"moment({self.inner.spec()}, nu={self.nu.name})"


class Aggregate(Loss):
    """Non-negative weighted sum of losses; infinite terms are absorbing.

    Zero-weight terms are dropped.
    """

    def __init__(self, terms):
        flat = []
        for w, L in terms:
            if w < 0:
                raise ValueError("aggregation weights must be non-negative")
            if isinstance(L, Aggregate):
                flat.extend((w * w2, L2) for w2, L2 in L.terms)
            else:
                flat.append((float(w), L))
        self.terms = [(w, L) for w, L in flat if w > 0]

    @property
    def smooth(self):
        return all(L.smooth for _, L in self.terms)

    def smoothed(self, tau):
        return Aggregate([(w, L.smoothed(tau)) for w, L in self.terms])

    def required_k(self):
        ks = {L.required_k() for _, L in self.terms} - {None}
        if len(ks) > 1:
            raise DimMismatch(f"terms declare conflicting dimensions {sorted(ks)}")
        return ks.pop() if ks else None

    def min_k(self):
        return max([1] + [L.min_k() for _, L in self.terms])

    def constraints(self):
        out = []
        for _, L in self.terms:
            for c in L.constraints():
                if c not in out:
                    out.append(c)
        return out

    def _own_constraints(self):
        return []

    def value(self, F, G, ctx):
        total = 0.0
        for w, L in self.terms:
            v = L.value(F, G, ctx)
            if not np.isfinite(v):
                return np.inf
            total += w * v
        return total

    def smooth_value(self, F, G, ctx):
        return sum(w * L.smooth_value(F, G, ctx) for w, L in self.terms)

    def value_and_grad(self, F, G, ctx):
        total = 0.0
        dF = np.zeros_like(F)
        dG = np.zeros_like(G)
        for w, L in self.terms:
            v, a, b = L.value_and_grad(F, G, ctx)
            total = np.inf if not np.isfinite(v) else total + w * v
            dF += w * a
            dG += w * b
        return total, dF, dG

    def spec(self):
        parts = []
        for w, L in self.terms:
            s = L.spec()
            if isinstance(L, NormRegularizer) and "+" in s:
                s = f"({s})"
            parts.append(s if w == 1 else f"{w:g}*{s}")
        return " + ".join(parts)


class RawSymbolLoss(Loss):
    """Deliberately not a D-loss: weights f_1(x) by the raw alphabet index of x.

    Shipped as a counterexample fixture for the axiom checkers.
    """

    def _value_and_grad(self, F, G, ctx):
        idx = np.arange(F.shape[0], dtype=float)
        w = idx * ctx.px
        dF = np.zeros_like(F)
        dF[:, 0] = w
        return float(w @ F[:, 0]), dF, np.zeros_like(G)

    def spec(self):
        return "raw_index()"


def regularized(L: Loss, lam: float = 0.01, mu: float | None = None) -> Loss:
    """``L + lam E||f||^2 + mu E||g||^2`` (regular whenever L is a D-loss)."""
    mu = lam if mu is None else mu
    return L + NormRegularizer(lam, mu)
