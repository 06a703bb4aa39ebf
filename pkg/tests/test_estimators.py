import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from depkit.errors import UnknownSymbol
from depkit.estimators import DependenceFeatureLearner, MaximalCorrelation

X = ["a"] * 3 + ["a", "b"] + ["b"] * 3
Y = ["0"] * 3 + ["1", "0"] + ["1"] * 3


def test_maximal_correlation_dsbs():
    est = MaximalCorrelation().fit(X, Y)
    np.testing.assert_allclose(est.sigma_, [0.5])
    np.testing.assert_allclose(est.transform(["a", "b", "a"])[:, 0], [1.0, -1.0, 1.0])
    np.testing.assert_allclose(est.transform_y(np.array([["1"]]))[:, 0], [-1.0])
    assert est.score() == pytest.approx(0.125)


def test_params_and_clone():
    est = DependenceFeatureLearner(loss="nested_h(k=1)", restarts=1)
    assert est.get_params()["loss"] == "nested_h(k=1)"
    c = clone(est).set_params(seed=3)
    assert c.seed == 3 and est.seed == 0


def test_learner_matches_closed_form():
    est = DependenceFeatureLearner(restarts=2)
    F = est.fit_transform(X, Y)
    assert F.shape == (8, 1)
    assert est.loss_value_ == pytest.approx(-0.1152, abs=1e-9)
    assert est.converged_
    assert est.score() == -est.loss_value_


def test_learner_accepts_joint():
    from depkit.probability import dsbs
    est = DependenceFeatureLearner(loss="nested_h(k=1) + 0.01*l2(fg)", restarts=1).fit(dsbs(0.5))
    assert est.loss_value_ == pytest.approx(-0.1152, abs=1e-9)


def test_errors():
    with pytest.raises(NotFittedError):
        MaximalCorrelation().transform(["a"])
    est = MaximalCorrelation().fit(X, Y)
    with pytest.raises(UnknownSymbol):
        est.transform(["z"])
    with pytest.raises(ValueError):
        MaximalCorrelation().fit(X, Y[:-1])
    with pytest.raises(ValueError):
        MaximalCorrelation().fit(X)
