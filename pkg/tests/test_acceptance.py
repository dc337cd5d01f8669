"""Acceptance suite: one test per criterion, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import json
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from rsbesov import cli
from rsbesov import testfunctions as tf
from rsbesov.besov import BesovParams, ModelledDistribution, besov_breakdown, besov_norm, radius_c_oscillation
from rsbesov.fixtures import (ELEMENTARY_FIXTURES, NEGATIVE_SUITE, _noise_box, build_fixture, elementary_fixture,
                              fubini_jets, noise_expansion, noise_fixture)
from rsbesov.geometry import make_grid
from rsbesov.model import (check_model_algebra, default_lambda_grid, estimate_gamma_norm, estimate_pi_norm,
                           polynomial_model, sample_pairs)
from rsbesov.reconstruct import bound_report, coefficient_error, evaluate, local_errors, reconstruct, two_model_error
from rsbesov.stochastic import fubini_check, fubini_refinement_study, sample_brownian
from rsbesov.structure import polynomial_structure
from rsbesov.wavelets import build_basis, check_mra

# constants recorded once and used unchanged at every refinement level
RADIUS_CONSTANT = 1.0
RATIO_CONSTANT = 0.25


@pytest.mark.criterion(1, "wavelet axioms, Daubechies N=3 at depth 12")
def test_wavelet_axioms(record_property):
    t0 = time.perf_counter()
    rep = check_mra(build_basis(3, (1,), 12), degrees=[0, 1, 2], tol=1e-6)
    elapsed = time.perf_counter() - t0
    moments = max(v for d in rep.vanishing_moment_defects.values() for v in d.values())
    record_property("detail", f"ortho {rep.orthonormality_defect:.1e}, reproduction "
                              f"{max(rep.reproduction_errors.values()):.1e}, moments {moments:.1e}, refinement "
                              f"{rep.refinement_residual:.1e}, {elapsed:.1f}s")
    assert rep.orthonormality_defect < 1e-6
    assert max(rep.reproduction_errors[m] for m in (0, 1, 2)) < 1e-6
    assert moments < 1e-6
    assert rep.refinement_residual < 1e-6
    assert elapsed < 30


@pytest.mark.criterion(2, "polynomial model algebra and norm stability")
def test_model_algebra(record_property):
    t0 = time.perf_counter()
    st = polynomial_structure(1, (1,), 2)
    model = polynomial_model(st, build_basis(3, (1,), 12).filter)
    grid = make_grid(5, (1,), [[0.0, 1.0]])
    alg = check_model_algebra(model, grid, 1000, seed=0, tol=1e-8)
    lam = default_lambda_grid(8)
    pi1 = estimate_pi_norm(model, 2, tf.standard_dictionary(1, 1, 4), lam, grid)
    pi2 = estimate_pi_norm(model, 2, tf.standard_dictionary(1, 1, 8), lam, grid)
    g1 = estimate_gamma_norm(model, 2, sample_pairs(grid, 1000, 0))
    g2 = estimate_gamma_norm(model, 2, sample_pairs(grid, 2000, 1))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"cocycle {alg.cocycle_defect:.1e}, compat {alg.compatibility_defect:.1e}, "
                              f"pi {pi1:.4g}->{pi2:.4g}, gamma {g1:.4g}->{g2:.4g}, {elapsed:.1f}s")
    assert alg.triples >= 1000 and alg.passed
    assert max(alg.cocycle_defect, alg.compatibility_defect, alg.identity_defect) < 1e-8
    assert all(math.isfinite(v) for v in (pi1, pi2, g1, g2))
    assert abs(pi2 - pi1) <= 0.05 * pi1
    assert abs(g2 - g1) <= 0.05 * g1
    assert elapsed < 60


def _random_jets(f, rng):
    return ModelledDistribution(f.structure, f.gamma, f.grid, rng.standard_normal(f.values.shape), f.domain)


@pytest.mark.criterion(3, "Besov norm properties and the radius-2 estimate")
def test_besov_norm_properties(record_property):
    worst_h = worst_t = 0.0
    for name in ("xi-cos", "rough-cos", "sine-lift"):
        fx = build_fixture(name, 3)
        params = BesovParams(fx.gamma, shells=4)
        rng = np.random.default_rng(17)
        for _ in range(5):
            f, g = _random_jets(fx.f, rng), _random_jets(fx.f, rng)
            c = float(rng.uniform(-4, 4))
            nf, ng = besov_norm(f, fx.model, params), besov_norm(g, fx.model, params)
            worst_h = max(worst_h, abs(besov_norm(c * f, fx.model, params) - abs(c) * nf) / max(1.0, nf))
            worst_t = max(worst_t, (besov_norm(f + g, fx.model, params) - nf - ng) / max(1.0, nf + ng))
    const = build_fixture("xi-constant", 3)
    osc = besov_breakdown(const.f, const.model, BesovParams(const.gamma, shells=4)).oscillation

    ratios = []
    for name in ("sine-lift", "xi-cos", "rough-cos"):
        for n in (5, 6, 7):
            fx = build_fixture(name, n)
            params = BesovParams(fx.gamma)
            gn = estimate_gamma_norm(fx.model, params.gamma, sample_pairs(make_grid(6, (1,), fx.K), 500))
            value = radius_c_oscillation(fx.f, fx.model, params, 2.0, fx.K)
            ratios.append(value / ((1.0 + gn) * besov_norm(fx.f, fx.model, params, fx.K)))
    record_property("detail", f"homogeneity {worst_h:.1e}, triangle excess {worst_t:.1e}, constant-jet osc "
                              f"{max(osc.values()):.1e}, radius ratio max {max(ratios):.3f} <= {RADIUS_CONSTANT}")
    assert worst_h <= 1e-12
    assert worst_t <= 1e-12
    assert max(osc.values()) == 0.0
    assert max(ratios) <= RADIUS_CONSTANT


@pytest.mark.criterion(4, "reconstruction exactness on the noise fixture")
def test_reconstruction_exactness(record_property):
    fx = noise_fixture(n_f=10, noise_level=10)
    D = tf.standard_dictionary(1, 1, 4)
    grid = make_grid(6, (1,), fx.K)
    coeff, tails = [], []
    for n_max in (4, 5, 6):
        res = reconstruct(fx.f, fx.model, fx.model.filt, n_max)
        coeff.append(coefficient_error(res, fx.target))
        tails.append(max(float(np.abs(local_errors(fx.f, fx.model, res, m, lam, grid)).max())
                         for m in D for lam in (1.0, 0.5, 0.25)))
    ratios = [b / a for a, b in zip(tails, tails[1:])]
    record_property("detail", f"coefficient error {max(coeff):.1e}, tail {tails[0]:.2e}->{tails[-1]:.2e}, "
                              f"ratios {', '.join(f'{r:.3f}' for r in ratios)}")
    assert max(coeff) < 1e-6
    assert all(r <= 0.75 for r in ratios)


@pytest.mark.criterion(5, "reconstruction bound on the negative-regularity suite")
def test_reconstruction_bound(record_property):
    t0 = time.perf_counter()
    D = tf.standard_dictionary(1, 1, 4)
    lam = default_lambda_grid(8)
    ratios, margins = [], []
    for name in NEGATIVE_SUITE:
        for n in (4, 5, 6):
            fx = build_fixture(name, n)
            res = reconstruct(fx.f, fx.model, fx.model.filt, n)
            rep = bound_report(fx.f, fx.model, res, BesovParams(fx.gamma), D, lam, fx.K)
            ratios.append(rep.ratio)
            margins.append(rep.slope - (float(fx.gamma) - 0.2))
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{len(NEGATIVE_SUITE)} fixtures x 3 levels, max ratio {max(ratios):.3f} <= "
                              f"{RATIO_CONSTANT}, min slope margin {min(margins):.3f}, {elapsed:.1f}s")
    assert len(NEGATIVE_SUITE) >= 5
    assert max(ratios) <= RATIO_CONSTANT
    assert min(margins) >= 0.0
    assert elapsed < 300


@pytest.mark.criterion(6, "two-model error is linear in the perturbation size")
def test_two_model_linearity(record_property):
    n_max = 5
    fx = build_fixture("xi-cos", n_max)
    st, filt = fx.model.structure, fx.model.filt
    delta = noise_expansion(st.min_homogeneity, st.scaling, filt, n_max, _noise_box(fx.K, filt, st.scaling), 101)
    params = BesovParams(fx.gamma)
    D = tf.standard_dictionary(1, 1, 4)
    lam = default_lambda_grid(8)
    r1 = reconstruct(fx.f, fx.model, filt, n_max)
    per_eps = []
    for eps in (1e-1, 1e-2, 1e-3):
        m2 = fx.model.perturbed(delta, eps)
        rep = two_model_error(fx.f, fx.f, fx.model, m2, (r1, reconstruct(fx.f, m2, filt, n_max)), params, D, lam,
                              fx.K)
        per_eps.append(rep.lhs / eps)
    spread = max(abs(v / per_eps[0] - 1.0) for v in per_eps)
    record_property("detail", f"error/eps {per_eps[0]:.4f}, spread {spread:.1e}")
    assert per_eps[0] > 0
    assert spread <= 0.1


@pytest.mark.criterion(7, "positive-gamma weak consistency for the sine lift")
def test_positive_gamma_consistency(record_property):
    D = tf.standard_dictionary(1, 1, 4)
    tests = [tf.PlacedTest(m, (x,), lam, (1,)) for m in D for x in (0.25, 0.5, 0.75) for lam in (0.5, 0.25)]
    exact = [tf.quadrature_pairing(np.sin, T) for T in tests]
    # independent route for the reference integrals
    ref = [quad(lambda y, T=T: np.sin(y) * T(np.array([[y]]))[0], *T.support_box().lo, *T.support_box().hi,
                epsabs=1e-14, epsrel=1e-13, limit=200)[0] for T in tests]
    quad_gap = max(abs(a - b) for a, b in zip(exact, ref))
    errors = []
    for n in (4, 5, 6):
        fx = build_fixture("sine-lift", n)
        res = reconstruct(fx.f, fx.model, fx.model.filt, n)
        errors.append([abs(evaluate(res, T) - v) for T, v in zip(tests, exact)])
    errors = np.array(errors)
    decreasing = bool(np.all(errors[1:] < errors[:-1]))
    record_property("detail", f"{len(tests)} tests, max error {errors[0].max():.1e}->{errors[-1].max():.1e}, "
                              f"quadrature routes agree to {quad_gap:.1e}")
    assert quad_gap < 1e-12
    assert decreasing


@pytest.mark.criterion(8, "reconstruction commutes with stochastic integration")
def test_fubini_interchange(record_property):
    t0 = time.perf_counter()
    n_max = 4
    model, jets = fubini_jets(n_max)
    psi = tf.PlacedTest(tf.standard_dictionary(1, 1, 4)[1], (0.5,), 0.5, (1,))
    worst, cache = 0.0, {}
    for name in ELEMENTARY_FIXTURES:
        H = elementary_fixture(name, jets)
        for seed in range(10):
            r = fubini_check(H, sample_brownian(1.0, 1 / 64, seed), psi, model, model.filt, n_max, cache)
            worst = max(worst, r.relative)
    study = fubini_refinement_study(lambda t: math.cos(2.0 * t) + 0.5, jets[0], 1.0, [2, 3, 4, 5, 6], psi, model,
                                    model.filt, n_max, paths=10000, seed=0, chunk=500)
    elapsed = time.perf_counter() - t0
    z = [abs(v - i) / se for v, i, se in zip(study.variance, study.isometry, study.standard_error)]
    record_property("detail", f"pathwise max {worst:.1e}, cauchy ratios "
                              f"{', '.join(f'{r:.3f}' for r in study.cauchy_ratios)}, isometry max "
                              f"{max(z):.2f} SE, {elapsed:.1f}s")
    assert worst <= 1e-10
    assert all(r <= 0.6 for r in study.cauchy_ratios)
    assert max(z) <= 3.0
    assert elapsed < 300


@pytest.mark.criterion(9, "identical config and seed give byte-identical reports")
def test_reproducible_reports(record_property, tmp_path, capsys):
    same = []
    for command in ("model-check", "reconstruct", "fubini"):
        out = tmp_path / command
        blobs = []
        for _ in range(2):
            assert cli.main([command, "--seed", "5", "-o", str(out)]) == 0
            blobs.append((out / "report.json").read_bytes())
        json.loads(blobs[0])
        same.append(blobs[0] == blobs[1])
    capsys.readouterr()
    record_property("detail", f"{sum(same)}/{len(same)} commands byte-identical")
    assert all(same)
