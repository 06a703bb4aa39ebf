import json

import numpy as np
import pytest

from depkit import experiments as ex
from depkit.adapters import interface_from_modes, train_adapter
from depkit.cdk import modal_decompose
from depkit.errors import BadClassCount
from depkit.features import FeatureTable, constant_table
from depkit.optim import minimize
from depkit.probability import random_joint


def test_report_schema_and_determinism():
    a = ex.run_invariance_suite(seed=3, n_trials=10)
    b = ex.run_invariance_suite(seed=3, n_trials=10)
    assert a.to_dict(timing=False) == b.to_dict(timing=False)
    d = json.loads(a.to_json())
    assert set(d) == {"name", "inputs", "digest", "passed", "checks", "trials", "wall_clock"}
    for c in d["checks"]:
        assert set(c) == {"name", "value", "tol", "passed"}
    assert a.to_text().startswith("PASS invariance")
    assert ex.run_invariance_suite(seed=4, n_trials=10).digest != a.digest


def test_invariance_suite_passes():
    rep = ex.run_invariance_suite(seed=0, n_trials=50, learn_trials=2, product_trials=1)
    assert rep.passed, rep.to_text()
    names = {c.name for c in rep.checks}
    assert {"cdk_invariance", "sigma_invariance", "mi_equality", "representation", "constant_features"} <= names


def test_non_d_loss_flagged():
    rep = ex.run_invariance_suite(seed=0, n_trials=0, learn_trials=3, loss_name="raw_l2")
    rep_check = next(c for c in rep.checks if c.name == "representation")
    assert not rep_check.passed and not rep.passed


@pytest.mark.parametrize("loss", ["logloss", "nested_h"])
def test_collapse(loss):
    rep = ex.run_collapse_experiment(60, 3, loss, seed=1)
    assert rep.passed, rep.to_text()


def test_collapse_svm_binary():
    rep = ex.run_collapse_experiment(20, 2, "svm", seed=0)
    assert rep.passed, rep.to_text()


def test_collapse_singletons():
    rep = ex.run_collapse_experiment(4, 4, "logloss", seed=0)
    assert rep.passed
    assert rep.checks[0].value == 0.0


def test_collapse_bad_counts():
    with pytest.raises(BadClassCount):
        ex.run_collapse_experiment(2, 3, "logloss", 0)
    with pytest.raises(BadClassCount):
        ex.run_collapse_experiment(9, 3, "svm", 0)


def test_within_class_ratio():
    labels = np.array([0, 0, 1, 1])
    w = np.full(4, 0.25)
    assert ex.within_class_ratio(np.array([[1.0], [1.0], [3.0], [3.0]]), labels, w) == 0.0
    assert ex.within_class_ratio(np.array([[0.0], [2.0], [1.0], [1.0]]), labels, w) == pytest.approx(1.0)


def test_composition_product_gap_zero(J_product):
    L = ex.make_loss("nested_h")
    iface = interface_from_modes(J_product)
    cfg = ex._config(1, 0)
    f, g = iface.compose(*train_adapter(L, iface, cfg))
    direct = minimize(L, J_product, cfg.with_(grad_tol=1e-10))
    assert np.ptp(f.values) == 0.0 and np.ptp(g.values) == 0.0
    assert np.ptp(direct.f.values, axis=0).max() <= 1e-6
    assert abs(direct.value) <= 1e-12


@pytest.mark.parametrize("loss", ["nested_h", "logloss", "fdiv_kl"])
def test_composition_small(loss):
    rep = ex.run_composition_equivalence(loss, seed=0, n_trials=3)
    assert rep.passed, rep.to_text()


def test_rewriting():
    rep = ex.run_rewriting_checks(seed=0, n_trials=200)
    assert rep.passed, rep.to_text()
    # zero embeddings: equal up to rounding of the log-sum-exp
    eps = np.finfo(float).eps
    assert rep.trials[0]["logloss_dev"] <= 4 * eps and rep.trials[0]["svm_dev"] <= 4 * eps


def test_entropy_examples(J_dsbs):
    md = modal_decompose(J_dsbs)
    h_star = ex.partition_entropy(md.f_star, J_dsbs.px)
    assert h_star == pytest.approx(np.log(2))
    assert ex.partition_entropy(constant_table(J_dsbs.alphabet_x, 3.0), J_dsbs.px) == 0.0
    phi = md.f_star.with_values(np.tanh(md.f_star.values) * 7)
    assert ex.partition_entropy(phi, J_dsbs.px) == pytest.approx(h_star, abs=1e-15)


def test_entropy_bound():
    assert ex.run_entropy_bound_check(seed=0, n_trials=40, direct_trials=2).passed


def test_sufficiency_suite():
    rep = ex.run_sufficiency_suite(seed=0, n_pairs=50, n_exhaustive=2, n_tau=20)
    assert rep.passed, rep.to_text()


def test_fibre_check_agrees_with_library():
    rng = np.random.default_rng(6)
    from depkit.sufficiency import is_jointly_sufficient
    from depkit.features import row_groups
    for _ in range(30):
        J = random_joint(rng, 4, 3, int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        f = FeatureTable(J.alphabet_x, rng.integers(0, 3, size=4).astype(float))
        g = FeatureTable(J.alphabet_y, rng.integers(0, 2, size=3).astype(float))
        gamma = J.mass / np.outer(J.px, J.py) - 1
        assert ex._fibre_constant(gamma, row_groups(f.values), row_groups(g.values)) == \
            is_jointly_sufficient(J, f, g)


def test_make_loss_names():
    for name in ex.LOSS_NAMES + ("logloss_l2", "raw_l2"):
        assert ex.make_loss(name).spec()
    with pytest.raises(ValueError):
        ex.make_loss("nope")
