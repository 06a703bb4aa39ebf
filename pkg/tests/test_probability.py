import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depkit.errors import NonPositiveMass, NotNormalized, ShapeMismatch, UncoveredSymbol, UnknownSymbol
from depkit.probability import (
    Alphabet,
    conditional_y_given_x,
    dsbs,
    empirical_from_samples,
    entropy,
    joint_from_dict,
    load_joint,
    mutual_information,
    pushforward,
    pushforward_indices,
    random_joint,
    read_samples_csv,
    save_joint,
    validate_joint,
)


def test_validate_dsbs():
    J = validate_joint([[0.375, 0.125], [0.125, 0.375]])
    assert J.shape == (2, 2)
    np.testing.assert_allclose(J.px, [0.5, 0.5])


def test_validate_rejects_zero_cell():
    with pytest.raises(NonPositiveMass):
        validate_joint([[0.5, 0.5], [0.0, 0.0]])


def test_validate_rejects_unnormalized():
    with pytest.raises(NotNormalized):
        validate_joint([[0.3, 0.3], [0.3, 0.3]])


def test_validate_rejects_bad_shape():
    with pytest.raises(ShapeMismatch):
        validate_joint([[0.5, 0.5]], ["a", "b"], ["0", "1"])


def test_alphabet_errors():
    with pytest.raises(ValueError):
        Alphabet(["a", "a"])
    with pytest.raises(UnknownSymbol):
        Alphabet(["a"]).index("b")


def test_empirical_uniform():
    J = empirical_from_samples([("a", 0), ("a", 1), ("b", 0), ("b", 1)])
    np.testing.assert_allclose(J.mass, 0.25)


def test_empirical_uncovered():
    with pytest.raises(UncoveredSymbol) as e:
        empirical_from_samples([("a", 0), ("a", 0), ("a", 1), ("b", 0)])
    assert "(b, 1)" in str(e.value)


def test_empirical_counts():
    pairs = [("a", 0)] * 3 + [("a", 1), ("b", 0)] + [("b", 1)] * 3
    np.testing.assert_allclose(empirical_from_samples(pairs).mass, [[0.375, 0.125], [0.125, 0.375]])


def test_empirical_smoothing():
    J = empirical_from_samples([("a", 0), ("b", 1)], smoothing=1e-6)
    assert np.all(J.mass > 0)
    assert J.mass.sum() == pytest.approx(1.0, abs=1e-15)


def test_conditional(J_dsbs):
    np.testing.assert_allclose(conditional_y_given_x(J_dsbs, "0").mass, [0.75, 0.25])
    J = validate_joint(np.full((2, 2), 0.25))
    np.testing.assert_allclose(conditional_y_given_x(J, "0").mass, [0.5, 0.5])


def test_pushforward_identity_and_merge(J_dsbs):
    np.testing.assert_allclose(pushforward(J_dsbs, lambda x: x, lambda y: y).mass, J_dsbs.mass)
    merged = pushforward(J_dsbs, lambda x: "*", lambda y: y)
    np.testing.assert_allclose(merged.mass, [J_dsbs.py])
    const_y = pushforward(J_dsbs, lambda x: x, lambda y: "0")
    np.testing.assert_allclose(const_y.mass, [[0.5], [0.5]])


def test_mutual_information_values(J_dsbs, J_product):
    assert mutual_information(J_product) == pytest.approx(0.0, abs=1e-15)
    assert mutual_information(J_dsbs) == pytest.approx(0.13081203594113697, abs=1e-12)
    near = validate_joint([[0.49, 0.01], [0.01, 0.49]])
    assert mutual_information(near) == pytest.approx(0.5951080672802133, abs=1e-12)


def test_entropy_values():
    assert entropy(np.array([0.5, 0.5])) == pytest.approx(np.log(2))
    assert entropy(np.array([0.75, 0.25])) == pytest.approx(0.5623351446188083, abs=1e-12)
    assert entropy(np.full(4, 0.25)) == pytest.approx(np.log(4))


def test_json_roundtrip(tmp_path, J_dsbs):
    path = tmp_path / "d.json"
    save_joint(J_dsbs, path)
    np.testing.assert_array_equal(load_joint(path).mass, J_dsbs.mass)
    J = joint_from_dict({"x": ["a", "b"], "y": ["0", "1"], "p": [[0.375, 0.125], [0.125, 0.375]]})
    assert J.alphabet_x.symbols == ("a", "b")


def test_samples_csv(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("x,y\na,0\nb,1\n")
    assert read_samples_csv(p) == [("a", "0"), ("b", "1")]
    p.write_text("u,v\na,0\n")
    with pytest.raises(ValueError):
        read_samples_csv(p)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(2, 5))
def test_pushforward_marginals_commute(seed, nx, ny):
    rng = np.random.default_rng(seed)
    J = random_joint(rng, nx, ny)
    ix = rng.integers(0, 3, size=nx)
    iy = rng.integers(0, 2, size=ny)
    ix = np.unique(ix, return_inverse=True)[1]
    iy = np.unique(iy, return_inverse=True)[1]
    P = pushforward_indices(J, ix, iy, Alphabet.range(ix.max() + 1), Alphabet.range(iy.max() + 1))
    np.testing.assert_allclose(P.px, np.bincount(ix, weights=J.px), atol=1e-15)
    np.testing.assert_allclose(P.py, np.bincount(iy, weights=J.py), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_mi_symmetric(seed):
    J = random_joint(np.random.default_rng(seed), 4, 3)
    assert mutual_information(J) == pytest.approx(mutual_information(J.swap()), abs=1e-14)


def test_empirical_reproduces_rational():
    counts = np.array([[3, 1, 2], [1, 4, 1]])
    pairs = [(f"x{i}", f"y{j}") for i in range(2) for j in range(3) for _ in range(counts[i, j])]
    np.testing.assert_allclose(empirical_from_samples(pairs).mass, counts / counts.sum(), atol=1e-16)


def test_dsbs_closed_form():
    np.testing.assert_allclose(dsbs(0.9).mass, [[0.475, 0.025], [0.025, 0.475]])
