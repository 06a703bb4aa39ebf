import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depkit.cdk import modal_decompose
from depkit.errors import DimMismatch, InfiniteLoss, LossSyntaxError, NonConvexCertificateMissing
from depkit.features import FeatureTable, constant_table
from depkit.losses import (
    ExtendedLogLoss,
    ExtendedSvm,
    HScore,
    NestedHScore,
    NormRegularizer,
    PairwiseConvex,
    RawSymbolLoss,
    builtin_atoms,
    check_projection_axiom,
    check_substitution_axiom,
    evaluate_loss,
    h_score,
    loss_gradient,
    nested_h_score,
    parse_loss,
)
from depkit.losses.core import Context
from depkit.optim import finite_diff_check
from depkit.probability import random_joint


def _scaled_modes(J):
    md = modal_decompose(J)
    r = np.sqrt(md.sigma)
    return md, md.f_star.with_values(md.f_star.values * r), md.g_star.with_values(md.g_star.values * r)


def test_h_score_at_optimum(J_dsbs):
    _, f, g = _scaled_modes(J_dsbs)
    assert h_score(f, g, J_dsbs) == pytest.approx(0.125, abs=1e-15)
    assert evaluate_loss(HScore(), f, g, J_dsbs) == pytest.approx(-0.125, abs=1e-15)
    dF, dG = loss_gradient(HScore(), f, g, J_dsbs)
    assert max(np.max(np.abs(dF)), np.max(np.abs(dG))) <= 1e-9


def test_nested_h_equals_h_for_one_mode(J_dsbs):
    _, f, g = _scaled_modes(J_dsbs)
    assert nested_h_score(f, g, J_dsbs) == pytest.approx(h_score(f, g, J_dsbs), abs=1e-15)


def test_nested_h_optimum_is_modes():
    J = random_joint(np.random.default_rng(4), 5, 4)
    md, f, g = _scaled_modes(J)
    # every prefix contributes its own H-score, so mode j counts K - j + 1 times
    mult = np.arange(md.rank, 0, -1)
    assert nested_h_score(f, g, J) == pytest.approx(0.5 * np.sum(mult * md.sigma ** 2), abs=1e-12)
    dF, dG = loss_gradient(NestedHScore(), f, g, J)
    assert max(np.max(np.abs(dF)), np.max(np.abs(dG))) <= 1e-9


def test_logloss_zero_features(J_dsbs, J_product):
    for J in (J_dsbs, J_product):
        f = FeatureTable(J.alphabet_x, np.column_stack([np.ones(J.shape[0]), np.zeros(J.shape[0])]))
        g = constant_table(J.alphabet_y, [0.0, 0.0])
        assert evaluate_loss(ExtendedLogLoss(), f, g, J) == pytest.approx(0.0, abs=1e-15)


def test_logloss_constraint(J_dsbs):
    f = constant_table(J_dsbs.alphabet_x, [2.0, 0.0])
    g = constant_table(J_dsbs.alphabet_y, [0.0, 0.0])
    assert evaluate_loss(ExtendedLogLoss(), f, g, J_dsbs) == np.inf
    with pytest.raises(InfiniteLoss):
        loss_gradient(ExtendedLogLoss(), f, g, J_dsbs)


def test_svm_zero_embedding(J_dsbs):
    f = constant_table(J_dsbs.alphabet_x, [0.0, 1.0])
    g = constant_table(J_dsbs.alphabet_y, [0.0, 0.0])
    assert evaluate_loss(ExtendedSvm(lam=0.1), f, g, J_dsbs) == pytest.approx(1.0, abs=1e-15)


def test_svm_huber_bounds(J_dsbs):
    rng = np.random.default_rng(0)
    ctx = Context(J_dsbs)
    for tau in (0.1, 0.01):
        L, S = ExtendedSvm(lam=0.1), ExtendedSvm(lam=0.1).smoothed(tau)
        assert S.smooth and not L.smooth
        for _ in range(20):
            F, G = rng.standard_normal((2, 2)), rng.standard_normal((2, 2))
            gap = L.smooth_value(F, G, ctx) - S.smooth_value(F, G, ctx)
            assert -1e-15 <= gap <= tau / 2 + 1e-15


def test_sqdist_minimum(J_dsbs):
    f = constant_table(J_dsbs.alphabet_x, [1.0, 2.0])
    g = constant_table(J_dsbs.alphabet_y, [1.0, 2.0])
    L = PairwiseConvex("sqdist", "joint")
    assert evaluate_loss(L, f, g, J_dsbs) == 0.0
    dF, dG = loss_gradient(L, f, g, J_dsbs)
    assert np.all(dF == 0) and np.all(dG == 0)


def test_dim_mismatch(J_dsbs):
    f = constant_table(J_dsbs.alphabet_x, [1.0, 2.0])
    g = constant_table(J_dsbs.alphabet_y, [1.0])
    with pytest.raises(DimMismatch):
        evaluate_loss(HScore(), f, g, J_dsbs)
    with pytest.raises(DimMismatch):
        evaluate_loss(HScore(k=3), f, constant_table(J_dsbs.alphabet_y, [1.0, 2.0]), J_dsbs)


def test_nonconvex_atom_rejected():
    with pytest.raises(NonConvexCertificateMissing):
        PairwiseConvex("cosine")


@pytest.mark.parametrize("spec", [
    "nested_h(k=3) + 0.01*l2(f) + 0.01*l2(g)",
    "logloss(k=4)",
    "svm(d=3, lambda=0.1)",
    "fdiv(u=kl, k=2)",
    "constrain(f, ball(p=2, r=1))",
    "moment(h(), nu=softplus)",
    "0.5*(h() + sqdist(joint))",
])
def test_parse_roundtrip(spec):
    L = parse_loss(spec)
    assert parse_loss(L.spec()).spec() == L.spec()


@pytest.mark.parametrize("spec", ["foo(k=1)", "h(k=1) +", "import os", "h(k=-1)", "h(k=1.5)",
                                  "l2(x)", "constrain(f, cube)", "h(q=1)", "__import__('os')"])
def test_parse_rejects(spec):
    with pytest.raises(LossSyntaxError):
        parse_loss(spec)


def test_parse_values():
    L = parse_loss("nested_h(k=3) + 0.01*l2(f) + 0.01*l2(g)")
    assert L.required_k() == 3
    assert parse_loss("svm(d=3, lambda=0.1)").required_k() == 4


SMOOTH = {name: L for name, L in builtin_atoms().items() if L.smooth}


@pytest.mark.parametrize("name", sorted(SMOOTH))
def test_gradients(name):
    L = SMOOTH[name]
    rng = np.random.default_rng(17)
    J = random_joint(rng, 4, 3)
    k = L.required_k() or max(L.min_k(), 3)
    for _ in range(5):
        F, G = L.project(rng.standard_normal((4, k)), rng.standard_normal((3, k)), Context(J))
        assert finite_diff_check(L, F, G, J) <= 1e-5


@pytest.mark.parametrize("name", sorted(builtin_atoms()))
def test_atoms_pass_axioms(name):
    L = builtin_atoms()[name]
    assert check_substitution_axiom(L, trials=100, seed=3).passed
    assert check_projection_axiom(L, trials=100, seed=3).passed


def test_raw_symbol_fixture_fails():
    assert not check_substitution_axiom(RawSymbolLoss(), trials=100).passed
    assert not check_projection_axiom(RawSymbolLoss(), trials=100).passed


def test_regularity_evidence():
    assert check_projection_axiom(HScore(), trials=300).regularity == "not regular"
    reg = HScore() + NormRegularizer(0.01, 0.01)
    assert check_projection_axiom(reg, trials=300).regularity == "no violations"


def test_axiom_reports_deterministic():
    a = check_projection_axiom(NestedHScore(), trials=50, seed=9)
    b = check_projection_axiom(NestedHScore(), trials=50, seed=9)
    assert a.max_dev == b.max_dev and a.equality_cases == b.equality_cases


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_h_score_bounded_by_modes(seed):
    rng = np.random.default_rng(seed)
    J = random_joint(rng, 4, 3)
    f = FeatureTable(J.alphabet_x, rng.standard_normal((4, 2)))
    g = FeatureTable(J.alphabet_y, rng.standard_normal((3, 2)))
    md = modal_decompose(J)
    assert h_score(f, g, J) <= 0.5 * np.sum(md.sigma[:2] ** 2) + 1e-12
