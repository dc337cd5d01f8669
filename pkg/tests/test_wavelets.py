import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsbesov.errors import InputError
from rsbesov.wavelets import (Mother, build_basis, cascade, check_mra, daubechies_filter, mother_set,
                              refinement_residual, scaling_moments)

R3 = math.sqrt(3.0)


def d3_closed_form():
    """Length-6 Daubechies taps from the radical closed form, normalized to sum 2."""
    r = math.sqrt(10.0)
    s = math.sqrt(5.0 + 2.0 * r)
    h = np.array([1 + r + s, 5 + r + 3 * s, 10 - 2 * r + 2 * s, 10 - 2 * r - 2 * s, 5 + r - 3 * s, 1 + r - s]) / 16
    return h


def test_haar_filter():
    assert daubechies_filter(1).a.tolist() == [1.0, 1.0]


def test_d2_filter_matches_closed_form():
    expect = np.array([1 + R3, 3 + R3, 3 - R3, 1 - R3]) / 4
    assert np.allclose(daubechies_filter(2).a[::-1], expect, atol=1e-15)


def test_d3_filter_matches_closed_form(d3):
    assert np.allclose(d3.a[::-1], d3_closed_form(), atol=1e-14)
    assert d3.support_length == 5 and d3.order == 3 and d3.regularity == 1


@pytest.mark.parametrize("N", range(1, 11))
def test_filter_normalization_and_orthogonality(N):
    a = daubechies_filter(N).a
    assert a.sum() == pytest.approx(2.0, abs=1e-13)
    for m in range(1, N):
        assert abs(np.dot(a[2 * m:], a[:len(a) - 2 * m])) < 1e-12


@pytest.mark.parametrize("bad", [0, 11, 2.5, "3"])
def test_invalid_order_is_an_input_error(bad):
    with pytest.raises(InputError):
        daubechies_filter(bad)


def test_d2_integer_values():
    phi = cascade(daubechies_filter(2), 8)
    assert phi(np.array([1.0, 2.0])) == pytest.approx([(1 - R3) / 2, (1 + R3) / 2], abs=1e-13)


def test_d2_first_moment():
    """int x phi(x) dx for the taps in this ordering: 3 - (3 - sqrt 3)/2."""
    mu = scaling_moments(daubechies_filter(2), 2)
    assert mu[1] == pytest.approx((3 + R3) / 2, abs=1e-14)


def test_moments_agree_with_quadrature(basis3):
    mu = scaling_moments(basis3.filter, 3)
    for m in range(3):
        assert basis3.father.integrate(lambda u, m=m: u ** m) == pytest.approx(mu[m], abs=1e-6)


def test_refinement_relation_holds_on_samples(basis3):
    assert refinement_residual(basis3.filter, basis3.father) < 1e-12


def test_mra_report_for_d3(basis3):
    rep = check_mra(basis3, degrees=[0, 1, 2])
    assert rep.passed
    assert rep.orthonormality_defect < 1e-6
    assert max(rep.reproduction_errors.values()) < 1e-6
    assert max(rep.vanishing_moment_defects["psi"].values()) < 1e-6
    d = rep.to_dict()
    assert d["passed"] is True and set(d["reproduction_errors"]) == {"0", "1", "2"}


def test_mra_detects_missing_moment(basis3):
    """D3 has three vanishing moments, so degree 3 reproduction fails."""
    rep = check_mra(basis3, degrees=[3])
    assert not rep.passed


@given(st.lists(st.integers(1, 3), min_size=1, max_size=3))
def test_mother_count_is_two_to_the_scaling_size_minus_one(s):
    ms = mother_set(tuple(s))
    assert len(ms) == 2 ** sum(s) - 1
    assert len(set(ms)) == len(ms)
    assert all(any(f is not None for f in m.factors) for m in ms)


def test_mother_labels():
    assert Mother(((0, 0),)).label == "psi"
    assert Mother((None, (1, 1))).label == "phi*psi[1,1]"


def test_basis_properties(basis3):
    assert basis3.N == 3 and basis3.r == 1 and basis3.support_length == 5
    assert basis3.psi.support == (-2.0, 3.0)
    assert basis3.psi.integrate() == pytest.approx(0.0, abs=1e-10)
    b2 = build_basis(2, (1, 2), 8)
    assert len(b2.mothers) == 7
