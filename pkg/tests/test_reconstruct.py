import numpy as np
import pytest

from rsbesov import testfunctions as tf
from rsbesov.besov import BesovParams, ModelledDistribution
from rsbesov.errors import ConfigurationError, InputError
from rsbesov.fixtures import build_fixture
from rsbesov.model import default_lambda_grid
from rsbesov.reconstruct import (ReconstructionResult, bound_lhs, coefficient_direct, coefficient_error, evaluate,
                                 evaluation_grid, fbar, fbar_table, fit_slope, local_error, local_errors,
                                 reconstruct, reconstruct_batch)
from rsbesov.wavelets import daubechies_filter, mother_set


@pytest.fixture(scope="module", params=["xi-cos", "rough-cos"])
def negative(request):
    fx = build_fixture(request.param, 3)
    return fx, reconstruct(fx.f, fx.model, fx.model.filt, 3)


@pytest.fixture(scope="module")
def sine():
    return build_fixture("sine-lift", 4)


def test_constant_noise_recovers_the_noise_coefficients():
    fx = build_fixture("xi-constant", 4)
    res = reconstruct(fx.f, fx.model, fx.model.filt, 4)
    assert coefficient_error(res, fx.target) < 1e-12


def test_table_matches_direct_coefficients(negative):
    """Transported box averages against averaging Pi_y f(y) point by point."""
    fx, res = negative
    mothers = mother_set(fx.f.grid.scaling)
    rows = [r for r in res.rows() if r[0] >= 0]
    assert len(rows) > 50
    for n, mi, k, v in rows:
        direct = coefficient_direct(fx.f, fx.model, n, mothers[mi], k, fx.model.filt)
        assert direct == pytest.approx(v, abs=1e-12)


def test_direct_coefficients_need_nonpositive_gamma(sine):
    with pytest.raises(InputError):
        coefficient_direct(sine.f, sine.model, 1, mother_set((1,))[0], (0,), sine.model.filt)


@pytest.mark.parametrize("rule", ["riemann", "trapezoid"])
def test_fbar_table_matches_pointwise_average(negative, rule):
    fx, _ = negative
    for n in (0, 2, 3):
        table = fbar_table(fx.f, fx.model, n, rule)
        for i in (0, table.values.shape[0] // 2, table.values.shape[0] - 1):
            k = table.index_lo[0] + i
            single = fbar(fx.f, fx.model, n, [k * 2.0 ** -n], rule)
            np.testing.assert_allclose(table.values[i], single.coeffs, atol=1e-12)


def test_fbar_of_constant_jet_is_that_jet():
    fx = build_fixture("xi-constant", 3)
    table = fbar_table(fx.f, fx.model, 2)
    np.testing.assert_allclose(table.values, np.broadcast_to(fx.f.values[0], table.values.shape), atol=1e-14)


def test_fbar_rejects_bad_nodes(negative):
    fx, _ = negative
    with pytest.raises(InputError):
        fbar(fx.f, fx.model, 2, [0.1])
    with pytest.raises(InputError):
        fbar(fx.f, fx.model, 2, [0.5], rule="simpson")
    with pytest.raises(InputError):
        fbar(fx.f, fx.model, 2, [100.0])


def test_local_error_matches_vectorized_route(negative):
    fx, res = negative
    D = tf.standard_dictionary(1, 1, 4)
    grid = evaluation_grid(fx.K, (1,), [0.5, 0.25], fx.f)
    for lam in (0.5, 0.25):
        many = local_errors(fx.f, fx.model, res, D[0], lam, grid)
        for p in (0, grid.size // 2, grid.size - 1):
            one = local_error(fx.f, fx.model, res, grid.points[p], lam, D[0])
            assert one == pytest.approx(many[p], abs=1e-10)


def test_batch_equals_single_reconstructions(negative):
    fx, res = negative
    rng = np.random.default_rng(5)
    other = ModelledDistribution(fx.f.structure, fx.f.gamma, fx.f.grid, rng.standard_normal(fx.f.values.shape),
                                 fx.K)
    batch = reconstruct_batch(np.stack([fx.f.values, other.values, fx.f.values - 2 * other.values]), fx.f,
                              fx.model, fx.model.filt, 3)
    single_other = reconstruct(other, fx.model, fx.model.filt, 3)
    test = tf.PlacedTest(tf.standard_dictionary(1, 1, 4)[0], (0.5,), 0.5, (1,))
    vals = batch.evaluate(test)
    assert vals[0] == pytest.approx(evaluate(res, test), abs=1e-12)
    assert vals[1] == pytest.approx(evaluate(single_other, test), abs=1e-12)
    assert vals[2] == pytest.approx(vals[0] - 2 * vals[1], abs=1e-10)
    a = dict(((n, m, k), v) for n, m, k, v in batch.result(0).rows())
    b = dict(((n, m, k), v) for n, m, k, v in res.rows())
    assert a.keys() == b.keys()
    assert max(abs(a[key] - b[key]) for key in a) < 1e-13


def test_sine_lift_reconstructs_sine_weakly():
    """<R f, eta^lam_x> approaches int sin(y) eta^lam_x(y) dy as n_max grows."""
    test = tf.PlacedTest(tf.standard_dictionary(1, 1, 4)[1], (0.5,), 0.25, (1,))
    exact = tf.quadrature_pairing(np.sin, test)
    errs = []
    for n in (3, 4, 5):
        fx = build_fixture("sine-lift", n)
        errs.append(abs(evaluate(reconstruct(fx.f, fx.model, fx.model.filt, n), test) - exact))
    assert errs[0] > errs[1] > errs[2]
    assert errs[-1] < 1e-4


def test_csv_round_trip(tmp_path, negative):
    fx, res = negative
    path = tmp_path / "coefficients.csv"
    res.to_csv(path)
    back = ReconstructionResult.from_csv(path, (1,), fx.model.filt, res.n_max, fx.K)
    assert dict(((n, m, k), v) for n, m, k, v in back.rows()) == dict(((n, m, k), v) for n, m, k, v in res.rows())
    test = tf.PlacedTest(tf.standard_dictionary(1, 1, 4)[2], (0.25,), 0.5, (1,))
    assert evaluate(back, test) == pytest.approx(evaluate(res, test), abs=1e-14)


def test_basis_too_rough_for_the_structure(negative):
    fx, _ = negative
    with pytest.raises(ConfigurationError):
        reconstruct(fx.f, fx.model, daubechies_filter(1), 2)


def test_evaluation_outside_the_region(negative):
    fx, res = negative
    far = tf.PlacedTest(tf.standard_dictionary(1, 1, 4)[0], (3.0,), 0.5, (1,))
    with pytest.raises(InputError):
        evaluate(res, far)
    with pytest.raises(InputError):
        reconstruct(fx.f, fx.model, fx.model.filt, -1)


def test_bound_lhs_slope_on_resolved_noise():
    fx = build_fixture("xi-cos", 4)
    res = reconstruct(fx.f, fx.model, fx.model.filt, 4)
    rep = bound_lhs(fx.f, fx.model, res, BesovParams(fx.gamma), tf.standard_dictionary(1, 1, 4),
                    default_lambda_grid(8), fx.K)
    assert np.isfinite(rep.lhs) and rep.lhs > 0
    assert rep.slope >= float(fx.gamma) - 0.2


def test_fit_slope():
    lam = [1.0, 0.5, 0.25, 0.125]
    assert fit_slope(lam, [v ** 1.5 for v in lam]) == pytest.approx(1.5)
    assert fit_slope(lam, [0.0, 0.0, 0.0, 1.0]) is None
