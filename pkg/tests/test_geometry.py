import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsbesov.errors import InputError, ResourceError
from rsbesov.geometry import Box, DyadicGrid, MultiIndex, Scaling, in_ball, make_grid, multi_indices, scaled_degree, scaled_norm

coords = st.floats(-50, 50, allow_nan=False)


def test_norm_of_origin_is_zero():
    assert scaled_norm([0.0, 0.0, 0.0], (1, 2, 3)) == 0.0


def test_isotropic_norm_is_sup():
    assert scaled_norm([3.0, 4.0], (1, 1)) == 4.0


def test_anisotropic_norm():
    assert scaled_norm([0.5, 0.25], (1, 2)) == pytest.approx(0.5, abs=1e-15)


def test_dimension_mismatch_rejected():
    with pytest.raises(InputError):
        scaled_norm([1.0, 2.0], (1,))


@given(st.lists(coords, min_size=2, max_size=2), st.floats(0.01, 10), st.sampled_from([(1, 1), (1, 2), (2, 3)]))
def test_norm_scales_with_anisotropic_dilation(x, lam, s):
    """||(lam^s_i x_i)|| = lam ||x||."""
    x = np.array(x)
    dil = x * lam ** np.array(s, dtype=float)
    assert scaled_norm(dil, s) == pytest.approx(lam * scaled_norm(x, s), rel=1e-9, abs=1e-12)


@given(st.lists(coords, min_size=2, max_size=2), st.lists(coords, min_size=2, max_size=2))
def test_isotropic_triangle_inequality(x, y):
    x, y = np.array(x), np.array(y)
    assert scaled_norm(x + y, (1, 1)) <= scaled_norm(x, (1, 1)) + scaled_norm(y, (1, 1)) + 1e-9


def test_scaling_validation():
    with pytest.raises(InputError):
        Scaling((0, 1))
    with pytest.raises(InputError):
        Scaling(())
    assert Scaling((1, 2, 3)).size == 6


def test_multi_index_degree_and_factorial():
    k = MultiIndex((2, 1))
    assert scaled_degree(k, (1, 2)) == 4
    assert k.factorial == 2
    assert k.order == 3
    with pytest.raises(InputError):
        MultiIndex((-1, 0))


def test_multi_indices_enumerates_by_scaled_degree():
    got = multi_indices((1, 2), 2)
    assert sorted(k.k for k in got) == [(0, 0), (0, 1), (1, 0), (2, 0)]
    assert all(k.degree((1, 2)) <= 2 for k in got)


def test_grid_points_are_dyadic_and_inside():
    g = make_grid(3, (1, 2), [[-0.3, 1.0], [0.0, 0.5]])
    pts = g.points
    assert np.all(pts[:, 0] >= -0.3) and np.all(pts[:, 1] <= 0.5)
    assert np.allclose(pts[:, 0] * 8, np.round(pts[:, 0] * 8))
    assert np.allclose(pts[:, 1] * 64, np.round(pts[:, 1] * 64))
    assert g.size == len(pts) == 11 * 33


def test_grid_locate_round_trip():
    g = make_grid(4, (1,), [[0.0, 1.0]])
    idx = g.locate(g.points[[0, 5, 16]])
    assert list(idx) == [0, 5, 16]


def test_grid_cap_is_a_resource_error():
    with pytest.raises(ResourceError):
        make_grid(10, (1, 1), [[0, 100], [0, 100]], cap=1000)


def test_quadrature_weights_integrate_linear_exactly():
    g = make_grid(5, (1,), [[-1.0, 2.0]])
    w = g.weights(Box.of([[0.0, 1.0]]))
    x = g.points[:, 0]
    assert np.sum(w) == pytest.approx(1.0, abs=1e-12)
    assert np.sum(w * x) == pytest.approx(0.5, abs=1e-12)


def test_box_fatten_and_ball():
    b = Box.of([[0.0, 1.0], [0.0, 1.0]]).fatten(0.5, (1, 2))
    assert b.lo == (-0.5, -0.25) and b.hi == (1.5, 1.25)
    assert in_ball([0.5, 0.2], [0.0, 0.0], 0.5, (1, 2))
    assert not in_ball([0.6, 0.0], [0.0, 0.0], 0.5, (1, 2))
    assert math.isclose(Box.of([[0, 2], [1, 2]]).volume, 2.0)
