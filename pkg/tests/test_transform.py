import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsbesov.geometry import Scaling
from rsbesov.transform import LevelVector, WaveletExpansion, coarsen, refine
from rsbesov.wavelets import daubechies_filter

seeds = st.integers(0, 2 ** 31 - 1)


def energy(e):
    tot = float(np.sum(e.approx.coeffs ** 2))
    return tot + sum(float(np.sum(v.coeffs ** 2)) for det in e.details for v in det.values())


@given(seeds, st.sampled_from([1, 2, 3]))
def test_analysis_is_orthogonal(seed, N):
    f = daubechies_filter(N)
    rng = np.random.default_rng(seed)
    lv = LevelVector((5,), (-3,), rng.standard_normal(40))
    e = WaveletExpansion.analyze(lv, Scaling((1,)), f)
    assert energy(e) == pytest.approx(float(np.sum(lv.coeffs ** 2)), rel=1e-12)
    back = e.synthesize().crop([lv.window(0)])
    assert np.max(np.abs(back.coeffs - lv.coeffs)) < 1e-12


@given(seeds)
def test_anisotropic_round_trip(seed):
    f = daubechies_filter(3)
    s = Scaling((1, 2))
    rng = np.random.default_rng(seed)
    lv = LevelVector((2, 4), (0, -2), rng.standard_normal((6, 20)))
    e = WaveletExpansion.analyze(lv, s, f)
    assert energy(e) == pytest.approx(float(np.sum(lv.coeffs ** 2)), rel=1e-12)
    back = e.synthesize().crop([lv.window(0), lv.window(1)])
    assert np.max(np.abs(back.coeffs - lv.coeffs)) < 1e-12


def test_rows_round_trip(rng):
    f = daubechies_filter(3)
    s = Scaling((1, 2))
    lv = LevelVector((3, 6), (0, -2), rng.standard_normal((20, 50)))
    e = WaveletExpansion.analyze(lv, s, f)
    e2 = WaveletExpansion.from_rows(list(e.rows()), s, f)
    back = e2.synthesize().crop([lv.window(0), lv.window(1)])
    assert np.max(np.abs(back.coeffs - lv.coeffs)) < 1e-12


def test_refine_then_coarsen_is_identity(rng):
    f = daubechies_filter(3)
    s = Scaling((1,))
    lv = LevelVector((2,), (4,), rng.standard_normal(12))
    up = refine(lv, s, f, 3)
    down = coarsen(up, s, f, 3).crop([lv.window(0)])
    assert np.max(np.abs(down.coeffs - lv.coeffs)) < 1e-12


def test_coefficient_lookup_matches_rows(rng):
    f = daubechies_filter(2)
    s = Scaling((1,))
    e = WaveletExpansion.analyze(LevelVector((4,), (0,), rng.standard_normal(16)), s, f)
    from rsbesov.wavelets import mother_set

    m = mother_set(s)
    for n, mi, base, v in e.rows():
        assert e.coefficient(n, m[mi] if mi >= 0 else None, base) == v
    assert e.coefficient(9, m[0], (0,)) == 0.0


def test_linear_operations(rng):
    f = daubechies_filter(3)
    s = Scaling((1,))
    a = WaveletExpansion.analyze(LevelVector((3,), (0,), rng.standard_normal(10)), s, f)
    b = WaveletExpansion.analyze(LevelVector((3,), (2,), rng.standard_normal(10)), s, f)
    lhs = (a + b.scaled(2.0)).synthesize()
    rhs = a.synthesize() + b.synthesize().scaled(2.0)
    assert (lhs - rhs).max_abs() < 1e-12
