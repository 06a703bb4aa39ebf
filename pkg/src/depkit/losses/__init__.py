"""D-loss atoms, combinators, the loss mini-language and axiom checkers."""

import numpy as np

from ..errors import DimMismatch, InfiniteLoss
from ..features import FeatureTable
from ..probability import JointDistribution
from .axioms import AxiomReport, check_projection_axiom, check_substitution_axiom, random_instance
from .core import (
    Aggregate,
    Ball,
    ConstraintIndicator,
    Context,
    ExtendedLogLoss,
    ExtendedSvm,
    FDivVariational,
    FixedCoordinate,
    HScore,
    Loss,
    MeanZero,
    MomentMap,
    MomentWrapper,
    NestedHScore,
    NormRegularizer,
    Orthant,
    PairwiseConvex,
    PairwiseConvexJoint,
    PairwiseConvexProduct,
    RawSymbolLoss,
    h_score_parts,
    regularized,
)
from .parse import parse_loss

__all__ = [
    "Aggregate", "AxiomReport", "Ball", "ConstraintIndicator", "Context", "ExtendedLogLoss",
    "ExtendedSvm", "FDivVariational", "FixedCoordinate", "HScore", "Loss", "MeanZero",
    "MomentMap", "MomentWrapper", "NestedHScore", "NormRegularizer", "Orthant", "PairwiseConvex",
    "PairwiseConvexJoint", "PairwiseConvexProduct", "RawSymbolLoss", "builtin_atoms",
    "check_projection_axiom", "check_substitution_axiom", "evaluate_loss", "h_score",
    "loss_gradient", "nested_h_score", "parse_loss", "random_aggregate", "random_instance", "regularized",
]


def _tables(f, g, J):
    if f.alphabet.size != J.shape[0] or g.alphabet.size != J.shape[1]:
        raise DimMismatch("feature alphabets do not match the joint distribution")
    if f.k != g.k:
        raise DimMismatch(f"f has dimension {f.k} but g has {g.k}")
    return np.asarray(f.values), np.asarray(g.values)


def evaluate_loss(loss: Loss, f: FeatureTable, g: FeatureTable, J: JointDistribution) -> float:
    """Exact value of ``loss`` at ``(f, g)``; ``inf`` when a constraint is violated."""
    F, G = _tables(f, g, J)
    loss.check_k(F.shape[1])
    return float(loss.value(F, G, Context(J)))


def loss_gradient(loss: Loss, f: FeatureTable, g: FeatureTable, J: JointDistribution):
    """Gradient (hinge: subgradient 0 at the kink) as ``(dF, dG)`` matrices."""
    F, G = _tables(f, g, J)
    loss.check_k(F.shape[1])
    v, dF, dG = loss.value_and_grad(F, G, Context(J))
    if not np.isfinite(v):
        raise InfiniteLoss(f"{loss.spec()} is infinite at this point")
    return dF, dG


def h_score(f: FeatureTable, g: FeatureTable, J: JointDistribution) -> float:
    F, G = _tables(f, g, J)
    return float(h_score_parts(F, G, Context(J))[0])


def nested_h_score(f: FeatureTable, g: FeatureTable, J: JointDistribution) -> float:
    F, G = _tables(f, g, J)
    return -float(NestedHScore().value(F, G, Context(J)))


def builtin_atoms() -> dict:
    """One instance of every built-in atom (with representative parameters)."""
    return {
        "h": HScore(),
        "nested_h": NestedHScore(),
        "nested_h_weighted": NestedHScore(weights=[2.0, 1.0, 0.5]),
        "logloss": ExtendedLogLoss(),
        "svm": ExtendedSvm(lam=0.1),
        "fdiv_kl": FDivVariational("kl"),
        "fdiv_chi2": FDivVariational("chi2"),
        "sqdist_joint": PairwiseConvex("sqdist", "joint"),
        "sqdist_product": PairwiseConvex("sqdist", "product"),
        "pdist3_joint": PairwiseConvex("pdist", "joint", p=3.0),
        "pdist1_product": PairwiseConvex("pdist", "product", p=1.0),
        "lse_product": PairwiseConvex("lse", "product"),
        "inner_exp_product": PairwiseConvex("inner", "product", u="exp"),
        "l2": NormRegularizer(1.0, 1.0),
        "lp3": NormRegularizer(1.0, 0.5, p=3.0),
        "ball_f": ConstraintIndicator(Ball("f", 2.0, 1.0)),
        "orthant_g": ConstraintIndicator(Orthant("g")),
        "fixed_f": ConstraintIndicator(FixedCoordinate("f", 0, 1.0)),
        "mean0_g": ConstraintIndicator(MeanZero("g")),
        "moment_mean": MomentWrapper(HScore(), "mean_penalty", 0.1),
        "moment_cross": MomentWrapper(PairwiseConvex("sqdist", "joint"), "cross_trace", 0.5),
        "moment_softplus": MomentWrapper(NestedHScore(), "softplus"),
    }


def random_aggregate(rng: np.random.Generator, max_terms: int = 4) -> Aggregate:
    """Positive combination of 2 to ``max_terms`` distinct built-in atoms.

    Each term is wrapped in a moment penalty with probability 0.2.
    """
    atoms = builtin_atoms()
    names = sorted(atoms)
    n = int(rng.integers(2, max_terms + 1))
    terms = []
    for i in rng.choice(len(names), size=n, replace=False):
        L = atoms[names[i]]
        if rng.random() < 0.2:
            L = MomentWrapper(L, "mean_penalty", float(rng.uniform(0.01, 1.0)))
        terms.append((float(rng.uniform(0.1, 2.0)), L))
    return Aggregate(terms)
