import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsbesov import _kernels_py, kernels

BACKENDS = kernels.backends()


def test_a_backend_is_selected():
    assert kernels.BACKEND in BACKENDS


def test_compiled_backend_is_built():
    """The wheel ships the extension; the fallback exists for builds without a compiler."""
    assert "cython" in BACKENDS


@given(st.integers(0, 2 ** 31 - 1), st.integers(1, 5), st.integers(1, 12))
def test_gather_correlate_backends_agree(seed, rows, taps):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((rows, 60))
    g = rng.standard_normal(taps)
    starts = rng.integers(0, 60 - taps + 1, size=17)
    ref = np.array([[np.dot(g, c[r, s:s + taps]) for s in starts] for r in range(rows)])
    for impl in BACKENDS.values():
        assert np.allclose(impl.gather_correlate(c, g, starts), ref, atol=1e-12)


def naive_increments(Y, P, Q, offsets, base, weights, bounds, p, use_max):
    out = np.zeros((len(offsets), len(bounds) - 1))
    for j, o in enumerate(offsets):
        vals = []
        for x in base:
            diff = Y[x + o] - (Y[x] if Q is None else Q[j] @ Y[x])
            v = diff if P is None else P[x + o] @ diff
            vals.append([np.linalg.norm(v[bounds[l]:bounds[l + 1]]) for l in range(len(bounds) - 1)])
        vals = np.array(vals)
        if use_max:
            out[j] = np.max(np.where(weights[:, None] > 0, vals, 0.0), axis=0)
        else:
            out[j] = np.sum(weights[:, None] * vals ** p, axis=0)
    return out


@given(st.integers(0, 2 ** 31 - 1), st.booleans(), st.booleans(), st.sampled_from([1.5, 2.0, 3.0]), st.booleans())
def test_increment_norms_backends_agree(seed, with_p, with_q, p, use_max):
    rng = np.random.default_rng(seed)
    n, D = 30, 3
    Y = rng.standard_normal((n, D))
    P = rng.standard_normal((n, D, D)) if with_p else None
    offsets = np.array([-2, 1, 3])
    Q = rng.standard_normal((3, D, D)) if with_q else None
    base = np.arange(3, 26)
    w = rng.uniform(0, 1, base.size)
    w[::4] = 0.0
    bounds = np.array([0, 1, 3])
    ref = naive_increments(Y, P, Q, offsets, base, w, bounds, p, use_max)
    for impl in BACKENDS.values():
        got = impl.increment_norms(Y, P, Q, offsets, base, w, bounds, p, use_max)
        assert np.allclose(got, ref, rtol=1e-12, atol=1e-12)


def test_rectangular_transport():
    """P may map a stacked pair of jets (width 2D) back to width D."""
    rng = np.random.default_rng(5)
    Y = rng.standard_normal((20, 4))
    P = np.tile(np.hstack([np.eye(2), -np.eye(2)]), (20, 1, 1))
    base = np.arange(2, 15)
    w = np.ones(base.size)
    args = (Y, P, None, np.array([1, 2]), base, w, np.array([0, 1, 2]), 2.0, False)
    ref = naive_increments(*args)
    for impl in BACKENDS.values():
        assert np.allclose(impl.increment_norms(*args), ref, atol=1e-12)


def test_empty_inputs():
    out = _kernels_py.gather_correlate(np.zeros((2, 5)), np.ones(2), np.array([], dtype=np.int64))
    assert out.shape == (2, 0)
