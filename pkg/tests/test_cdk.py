import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depkit.cdk import cdk_matrix, decomposition_residuals, maximal_correlation, modal_decompose, reconstruct_cdk
from depkit.probability import dsbs, random_instance, validate_joint


def test_cdk_values(J_dsbs, J_product):
    np.testing.assert_allclose(cdk_matrix(J_product).values, 0.0, atol=1e-15)
    np.testing.assert_allclose(cdk_matrix(J_dsbs).values, [[0.5, -0.5], [-0.5, 0.5]])
    near = validate_joint([[0.49, 0.01], [0.01, 0.49]])
    np.testing.assert_allclose(cdk_matrix(near).values, [[0.96, -0.96], [-0.96, 0.96]])


def test_product_has_no_modes(J_product):
    md = modal_decompose(J_product)
    assert md.rank == 0
    assert md.f_star.values.shape == (3, 0)
    np.testing.assert_array_equal(reconstruct_cdk(md).values, 0.0)


def test_dsbs_modes(J_dsbs):
    md = modal_decompose(J_dsbs)
    assert md.rank == 1
    assert md.sigma[0] == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(md.f_star.values[:, 0], [1.0, -1.0])
    np.testing.assert_allclose(md.g_star.values[:, 0], [1.0, -1.0])
    np.testing.assert_allclose(reconstruct_cdk(md.truncate(1)).values, cdk_matrix(J_dsbs).values, atol=1e-15)


def test_identity_like_repeated_sigma():
    m = np.array([[0.32, 0.01, 0.01], [0.01, 0.32, 0.01], [0.01, 0.01, 0.32]]) / 1.02
    md = modal_decompose(validate_joint(m))
    assert md.rank == 2
    np.testing.assert_allclose(md.sigma, [0.9117647058823529] * 2, atol=1e-12)


def test_maximal_correlation(J_product):
    assert maximal_correlation(J_product) == 0.0
    assert maximal_correlation(dsbs(0.5)) == pytest.approx(0.5)
    assert maximal_correlation(dsbs(0.9)) == pytest.approx(0.9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_decomposition_residuals(seed):
    J = random_instance(np.random.default_rng(seed))
    md = modal_decompose(J)
    res = decomposition_residuals(J, md)
    assert max(res.values()) <= 1e-9
    assert np.all(md.sigma <= 1 + 1e-9)
    assert np.all(np.diff(md.sigma) <= 1e-12)
    assert md.rank <= min(J.shape) - 1
    np.testing.assert_allclose(J.px @ md.f_star.values, 0.0, atol=1e-9)
