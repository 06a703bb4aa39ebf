import numpy as np
import pytest
from scipy.special import softmax

from depkit.cdk import modal_decompose
from depkit.errors import DimMismatch, NoFeasiblePoint
from depkit.features import moments
from depkit.losses import ExtendedLogLoss, NestedHScore, NormRegularizer, PairwiseConvex, parse_loss
from depkit.optim import OptimConfig, minimize
from depkit.probability import conditional_matrix, random_joint


def test_nested_h_dsbs(J_dsbs):
    r = minimize(NestedHScore(), J_dsbs, OptimConfig(k=1, restarts=2))
    assert r.converged
    assert r.value == pytest.approx(-0.125, abs=1e-9)
    m = moments(r.f, r.g, J_dsbs)
    f_star = modal_decompose(J_dsbs).f_star.values[:, 0]
    # f is proportional to f*_1 and the mode product carries sigma_1
    corr = J_dsbs.px @ (r.f.values[:, 0] * f_star) / np.sqrt(m.lambda_f[0, 0])
    assert abs(corr) == pytest.approx(1.0, abs=1e-6)
    assert np.sqrt(m.lambda_f[0, 0] * m.lambda_g[0, 0]) == pytest.approx(0.5, abs=1e-3)


def test_nested_h_l2_closed_form(J_dsbs):
    L = NestedHScore() + NormRegularizer(0.01, 0.01)
    r = minimize(L, J_dsbs, OptimConfig(k=1, restarts=2))
    assert r.value == pytest.approx(-0.1152, abs=1e-9)
    m = moments(r.f, r.g, J_dsbs)
    assert m.lambda_f[0, 0] == pytest.approx(0.48, abs=1e-4)
    assert m.lambda_g[0, 0] == pytest.approx(0.48, abs=1e-4)


def test_sqdist_constant_minimizer(J_product):
    r = minimize(PairwiseConvex("sqdist", "joint"), J_product, OptimConfig(k=2, restarts=1))
    assert r.value == pytest.approx(0.0, abs=1e-10)
    assert np.ptp(r.f.values, axis=0).max() <= 1e-5
    np.testing.assert_allclose(r.f.values[0], r.g.values[0], atol=1e-5)


def test_logloss_recovers_posterior():
    J = random_joint(np.random.default_rng(21), 6, 4)
    r = minimize(ExtendedLogLoss(), J, OptimConfig(k=J.shape[1] + 1, restarts=1, grad_tol=1e-9))
    post = softmax(r.f.values @ r.g.values.T + np.log(J.py), axis=1)
    tv = 0.5 * np.abs(post - conditional_matrix(J)).sum(axis=1)
    assert tv.max() <= 1e-3
    np.testing.assert_array_equal(r.f.values[:, 0], 1.0)


def test_constraints_hold():
    J = random_joint(np.random.default_rng(5), 4, 3)
    r = minimize(parse_loss("h(k=2) + constrain(f, orthant) + constrain(g, ball(p=2, r=1))"), J,
                 OptimConfig(k=2, restarts=1))
    assert np.all(r.f.values >= 0)
    assert np.all(np.linalg.norm(r.g.values, axis=1) <= 1 + 1e-12)
    assert np.isfinite(r.value)


def test_deterministic(J_dsbs):
    cfg = OptimConfig(k=1, restarts=3, seed=4)
    a = minimize(NestedHScore(), J_dsbs, cfg)
    b = minimize(NestedHScore(), J_dsbs, cfg)
    np.testing.assert_array_equal(a.f.values, b.f.values)
    assert a.value == b.value and a.iters == b.iters and a.restart_index == b.restart_index


def test_infeasible():
    J = random_joint(np.random.default_rng(5), 3, 3)
    L = parse_loss("h(k=1) + constrain(f, fixed(j=0, c=5)) + constrain(f, ball(p=2, r=1))")
    with pytest.raises(NoFeasiblePoint):
        minimize(L, J, OptimConfig(k=1, restarts=1))


def test_k_checked(J_dsbs):
    with pytest.raises(DimMismatch):
        minimize(parse_loss("h(k=2)"), J_dsbs, OptimConfig(k=1))


def test_config_validation():
    with pytest.raises(ValueError):
        OptimConfig(k=0)
    with pytest.raises(ValueError):
        OptimConfig(growth=0.5)
    assert OptimConfig().with_(k=3).k == 3


def test_warm_start_used(J_dsbs):
    md = modal_decompose(J_dsbs)
    s = np.sqrt(0.48)
    init = (md.f_star.values * s, md.g_star.values * s)
    L = NestedHScore() + NormRegularizer(0.01, 0.01)
    r = minimize(L, J_dsbs, OptimConfig(k=1, restarts=1), init=init)
    assert r.iters <= 2
    assert r.value == pytest.approx(-0.1152, abs=1e-12)
