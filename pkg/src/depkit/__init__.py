"""Dependence-induced representations on finite alphabets.

Exact modal decomposition of the canonical dependence kernel, D-losses and
their minimizers, dependence-preserving transforms, sufficiency checks and
feature adapters.
"""

from .adapters import (
    InterfaceDistribution,
    LambdaAdapterFamily,
    interface_from_modes,
    train_adapter,
    train_lambda_family,
    tune_lambda,
)
from .cdk import cdk_matrix, maximal_correlation, modal_decompose
from .errors import DepkitError
from .estimators import DependenceFeatureLearner, MaximalCorrelation
from .features import FeatureTable
from .losses import check_projection_axiom, check_substitution_axiom, evaluate_loss, parse_loss
from .optim import OptimConfig, minimize
from .probability import (
    Alphabet,
    Distribution,
    JointDistribution,
    empirical_from_samples,
    entropy,
    load_joint,
    mutual_information,
    validate_joint,
)
from .sufficiency import minimal_sufficient_partition
from .transforms import apply_dpt, random_dpt, verify_cdk_invariance

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "DependenceFeatureLearner", "DepkitError", "Distribution", "FeatureTable",
    "InterfaceDistribution", "JointDistribution", "LambdaAdapterFamily", "MaximalCorrelation",
    "OptimConfig", "apply_dpt", "cdk_matrix", "check_projection_axiom", "check_substitution_axiom",
    "empirical_from_samples", "entropy", "evaluate_loss", "interface_from_modes", "load_joint",
    "maximal_correlation", "minimal_sufficient_partition", "minimize", "modal_decompose",
    "mutual_information", "parse_loss", "random_dpt", "train_adapter", "train_lambda_family",
    "tune_lambda", "validate_joint", "verify_cdk_invariance",
]
