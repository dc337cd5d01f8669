import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from rsbesov.errors import InputError
from rsbesov.geometry import Scaling, make_grid
from rsbesov import testfunctions as tf
from rsbesov.testfunctions import (PlacedTest, Profile1D, SampledTest, WaveletElement,
                                   annihilating_dictionary, quadrature_pairing, standard_dictionary)
from rsbesov.wavelets import mother_set

S1 = Scaling((1,))


def bump_integral(m):
    """int_{-1}^{1} (1 - u^2)^m du = sqrt(pi) m! / Gamma(m + 3/2)."""
    return math.sqrt(math.pi) * math.factorial(m) / math.gamma(m + 1.5)


def test_bump_moments_are_exact():
    p = Profile1D(0, 1.0, 0.0)
    assert p.moment(0) == pytest.approx(bump_integral(10), rel=1e-13)
    assert p.moment(1) == pytest.approx(0.0, abs=1e-15)
    half = Profile1D(0, 0.5, 0.5)
    assert half.moment(0) == pytest.approx(0.5 * bump_integral(10), rel=1e-13)


def test_profile_sup_of_derivative_matches_sampling():
    p = Profile1D(1, 0.5, 0.0)
    u = np.linspace(-0.5, 0.5, 200001)
    fine = np.max(np.abs(np.gradient(p(u), u)))
    assert p.derivative_sup(1) == pytest.approx(fine, rel=1e-4)


def test_profile_validation():
    with pytest.raises(InputError):
        Profile1D(0, 1.0, 0.5)
    with pytest.raises(InputError):
        Profile1D(10, 1.0, 0.0)


@pytest.mark.parametrize("d,r,size", [(1, 1, 4), (1, 2, 8), (2, 1, 4)])
def test_standard_dictionary_is_normalized(d, r, size):
    D = standard_dictionary(d, r, size)
    assert len(D) == size and D.d == d
    for eta in D:
        assert eta.cr_norm(r) == pytest.approx(1.0, rel=1e-12)


def test_dictionaries_are_nested():
    assert standard_dictionary(1, 1, 8).members[:4] == standard_dictionary(1, 1, 4).members


@pytest.mark.parametrize("n", [0, 1, 2])
def test_annihilating_dictionary_kills_polynomials(n):
    D = annihilating_dictionary(1, 1, n, 3)
    for eta in D:
        assert eta.annihilates_up_to(S1) >= n
        for m in range(n + 1):
            assert abs(quad(lambda u: u ** m * eta(np.array([[u]]))[0], -1, 1, epsabs=1e-13)[0]) < 1e-10


def test_placed_test_scaling():
    eta = standard_dictionary(1, 1, 4).members[0]
    T = PlacedTest(eta, (0.3,), 0.25, S1)
    assert T.support_box().lo[0] == pytest.approx(0.05) and T.support_box().hi[0] == pytest.approx(0.55)
    assert quad(lambda y: T(np.array([[y]]))[0], 0.05, 0.55, epsabs=1e-14)[0] == pytest.approx(eta.integral(), rel=1e-9)


@given(st.floats(-1, 1), st.sampled_from([1.0, 0.5, 0.125]), st.integers(0, 3))
def test_quadrature_pairing_agrees_with_adaptive_quadrature(x, lam, member):
    T = PlacedTest(standard_dictionary(1, 1, 4).members[member], (x,), lam, S1)
    g = lambda y: np.cos(3 * y) + y ** 2
    box = T.support_box()
    ref = quad(lambda y: g(y) * T(np.array([[y]]))[0], box.lo[0], box.hi[0], epsabs=1e-14, limit=200)[0]
    assert quadrature_pairing(g, T) == pytest.approx(ref, abs=1e-11)


@pytest.mark.parametrize("x", [0.5, 0.3])
def test_projection_preserves_the_integral(d3, x):
    """sum_k c_k int phi^L_k = int eta (phi integrates to 1)."""
    eta = standard_dictionary(1, 1, 4).members[0]
    T = PlacedTest(eta, (x,), 0.5, S1)
    L = 9
    lv = T.project((L,), d3)
    assert np.sum(lv.coeffs) * 2.0 ** (-L / 2) == pytest.approx(eta.integral(), rel=1e-8)


def test_sampled_test_projection_integral(d3):
    g = make_grid(10, (1,), [[0.0, 1.0]])
    vals = np.sin(np.pi * g.points[:, 0]) ** 4
    lv = SampledTest(g, vals).project((8,), d3)
    assert np.sum(lv.coeffs) * 2.0 ** -4 == pytest.approx(3 / 8, abs=1e-5)


def test_wavelet_element_projection_is_unit_norm(d3):
    m = mother_set(S1)[0]
    lv = WaveletElement(2, m, (1,), S1).project((6,), d3)
    assert np.sum(lv.coeffs ** 2) == pytest.approx(1.0, abs=1e-12)
    assert WaveletElement(0, None, (0,), S1).support_box(5, 3).hi == (5.0,)
    with pytest.raises(InputError):
        WaveletElement(3, m, (0,), S1).project((3,), d3)


def test_test_function_product_structure():
    D = standard_dictionary(2, 1, 4)
    eta = D.members[1]
    u = np.array([[0.1, -0.2]])
    assert eta(u)[0] == pytest.approx(eta.amplitude * eta.factors[0](0.1) * eta.factors[1](-0.2))
    assert isinstance(eta, tf.TestFunction)
