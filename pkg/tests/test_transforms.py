import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depkit.cdk import modal_decompose
from depkit.probability import Alphabet, mutual_information, random_instance, random_joint
from depkit.transforms import (
    DptPair,
    SideTransform,
    apply_dpt,
    decode,
    identity_dpt,
    random_dpt,
    relabeling,
    verify_cdk_invariance,
)


def test_identity_dpt(J_dsbs):
    dpt = identity_dpt(J_dsbs)
    np.testing.assert_array_equal(apply_dpt(J_dsbs, dpt).mass, J_dsbs.mass)
    rep = verify_cdk_invariance(J_dsbs, dpt)
    assert rep.passed and rep.max_abs_dev == 0.0


def test_relabeling_permutes(J_product):
    dpt = DptPair(relabeling(J_product.alphabet_x, [2, 0, 1]), relabeling(J_product.alphabet_y))
    out = apply_dpt(J_product, dpt)
    assert sorted(out.mass[:, 0]) == pytest.approx(sorted(J_product.mass[:, 0]))
    for t in out.alphabet_x.symbols:
        src = decode(dpt.x_side, t)
        i, j = out.alphabet_x.index(t), J_product.alphabet_x.index(src)
        np.testing.assert_allclose(out.mass[i], J_product.mass[j])


def test_split_symbol_halves_row(J_dsbs):
    src = J_dsbs.alphabet_x
    side = SideTransform(src, [[0.5, 0.5], [1.0, 0.0]], Alphabet(["0a", "0b", "1"]), [[0, 1], [2, -1]])
    out = apply_dpt(J_dsbs, DptPair(side, relabeling(J_dsbs.alphabet_y)))
    np.testing.assert_allclose(out.mass[0], 0.5 * J_dsbs.mass[0])
    np.testing.assert_allclose(out.mass[1], 0.5 * J_dsbs.mass[0])
    assert decode(side, "0a") == decode(side, "0b") == "0"


def test_non_decodable_rejected(J_dsbs):
    with pytest.raises(ValueError):
        SideTransform(J_dsbs.alphabet_x, [[1.0], [1.0]], Alphabet(["t"]), [[0], [0]])


def test_random_dpt_deterministic(J_dsbs):
    a, b = random_dpt(J_dsbs, 11), random_dpt(J_dsbs, 11)
    assert a.to_dict() == b.to_dict()
    pure = random_dpt(J_dsbs, 3, max_expansion=1)
    assert pure.x_side.target.size == 2 and pure.x_side.z_size == 1


def test_random_dpt_sizes(J_dsbs):
    for s in range(20):
        dpt = random_dpt(J_dsbs, s, max_expansion=3)
        Jh = apply_dpt(J_dsbs, dpt)
        assert 2 <= Jh.shape[0] <= 6
        assert mutual_information(Jh) == pytest.approx(0.13081203594113697, abs=1e-12)
        assert verify_cdk_invariance(J_dsbs, dpt, Jhat=Jh).max_abs_dev <= 1e-12


def test_dpt_dict_roundtrip(J_dsbs):
    dpt = random_dpt(J_dsbs, 5)
    back = DptPair.from_dict(dpt.to_dict(), J_dsbs)
    np.testing.assert_array_equal(apply_dpt(J_dsbs, back).mass, apply_dpt(J_dsbs, dpt).mass)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_invariances(seed):
    J = random_instance(np.random.default_rng(seed))
    dpt = random_dpt(J, seed + 1)
    Jh = apply_dpt(J, dpt)
    assert verify_cdk_invariance(J, dpt, Jhat=Jh).passed
    np.testing.assert_allclose(modal_decompose(Jh).sigma, modal_decompose(J).sigma, atol=1e-9)
    assert mutual_information(Jh) == pytest.approx(mutual_information(J), abs=1e-9)


def test_large_instance_passes():
    J = random_joint(np.random.default_rng(2), 8, 6)
    assert verify_cdk_invariance(J, random_dpt(J, 9), tol=1e-9).passed
