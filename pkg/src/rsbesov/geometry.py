"""Anisotropic scaled norms, multi-indices, boxes and dyadic grids."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InputError, ResourceError

GRID_POINT_CAP = 2 ** 22


@dataclass(frozen=True)
class Scaling:
    """Integer scaling exponents s = (s_1, ..., s_d)."""

    s: tuple
    size: int = field(init=False)

    def __post_init__(self):
        s = tuple(int(v) for v in np.atleast_1d(self.s))
        if len(s) == 0 or any(v < 1 for v in s):
            raise InputError(f"scaling entries must be integers >= 1, got {self.s!r}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "size", sum(s))

    @property
    def d(self):
        return len(self.s)

    @classmethod
    def of(cls, value) -> "Scaling":
        if isinstance(value, Scaling):
            return value
        return cls(tuple(np.atleast_1d(value)))

    @classmethod
    def isotropic(cls, d: int) -> "Scaling":
        return cls((1,) * d)

    def __iter__(self):
        return iter(self.s)

    def __len__(self):
        return len(self.s)

    def as_array(self):
        return np.asarray(self.s, dtype=float)


def _check_dim(x, s: Scaling):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (s.d,):
        raise InputError(f"point of dimension {x.shape[-1:]} does not match scaling of dimension {s.d}")
    return x


def scaled_norm(x, s) -> float | np.ndarray:
    """sup_i |x_i|^(1/s_i). Accepts a single point or an array of points
    (last axis is the coordinate axis)."""
    s = Scaling.of(s)
    x = _check_dim(x, s)
    return np.max(np.abs(x) ** (1.0 / s.as_array()), axis=-1)


@dataclass(frozen=True)
class MultiIndex:
    k: tuple

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        if any(v < 0 for v in k):
            raise InputError(f"multi-index entries must be non-negative, got {self.k!r}")
        object.__setattr__(self, "k", k)

    @property
    def d(self):
        return len(self.k)

    @property
    def order(self):
        return sum(self.k)

    @property
    def factorial(self):
        return math.prod(math.factorial(v) for v in self.k)

    def degree(self, s) -> int:
        return scaled_degree(self, s)


def scaled_degree(k, s) -> int:
    s = Scaling.of(s)
    kk = k.k if isinstance(k, MultiIndex) else tuple(int(v) for v in k)
    if len(kk) != s.d:
        raise InputError("multi-index and scaling dimensions differ")
    return sum(a * b for a, b in zip(kk, s.s))


def multi_indices(s, max_degree: int) -> list[MultiIndex]:
    """All k with |k|_s <= max_degree, ordered by scaled degree and then
    lexicographically descending (so X_1 precedes X_2)."""
    s = Scaling.of(s)
    ranges = [range(max_degree // si + 1) for si in s.s]
    ks = [k for k in itertools.product(*ranges) if scaled_degree(k, s) <= max_degree]
    ks.sort(key=lambda k: (scaled_degree(k, s), tuple(-v for v in k)))
    return [MultiIndex(k) for k in ks]


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise InputError("box bounds must have equal, non-zero length")
        if any(not (a < b) for a, b in zip(lo, hi)):
            raise InputError(f"degenerate box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, d: int = 1) -> "Box":
        return cls((0.0,) * d, (1.0,) * d)

    @classmethod
    def of(cls, value) -> "Box":
        """Accepts a Box, a pair (lo, hi) for d=1, or a list of per-axis pairs."""
        if isinstance(value, Box):
            return value
        arr = np.asarray(value, dtype=float)
        if arr.shape == (2,):
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise InputError(f"cannot interpret {value!r} as a box")
        return cls(tuple(arr[:, 0]), tuple(arr[:, 1]))

    @property
    def d(self):
        return len(self.lo)

    @property
    def volume(self):
        return math.prod(b - a for a, b in zip(self.lo, self.hi))

    def fatten(self, R: float, s) -> "Box":
        """The set of points within scaled distance R of the box."""
        s = Scaling.of(s)
        pad = [R ** si for si in s.s]
        return Box(tuple(a - p for a, p in zip(self.lo, pad)), tuple(b + p for b, p in zip(self.hi, pad)))

    def contains(self, x, tol: float = 0.0):
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lo) - tol
        hi = np.asarray(self.hi) + tol
        return np.all((x >= lo) & (x <= hi), axis=-1)

    def contains_box(self, other: "Box", tol: float = 1e-12) -> bool:
        return all(a <= c + tol and d <= b + tol for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def as_list(self):
        return [[a, b] for a, b in zip(self.lo, self.hi)]


def in_ball(x, center, R: float, s) -> bool:
    if R <= 0:
        raise InputError("ball radius must be positive")
    return bool(scaled_norm(np.asarray(x, float) - np.asarray(center, float), s) <= R)


@dataclass(frozen=True)
class DyadicGrid:
    """Points of the scaled dyadic grid of level n that lie in a box.

    Points are stored implicitly through per-axis integer index ranges; the
    flat ordering is lexicographic with the first axis varying slowest.
    """

    n: int
    scaling: Scaling
    domain: Box
    index_lo: tuple
    shape: tuple

    @property
    def d(self):
        return self.scaling.d

    @property
    def mesh(self) -> tuple:
        return tuple(2.0 ** (-self.n * si) for si in self.scaling.s)

    @property
    def levels(self) -> tuple:
        """Dyadic level of each axis (n * s_i)."""
        return tuple(self.n * si for si in self.scaling.s)

    @property
    def size(self) -> int:
        return math.prod(self.shape)

    def __len__(self):
        return self.size

    @cached_property
    def axes(self) -> list:
        return [(lo + np.arange(m)) * h for lo, m, h in zip(self.index_lo, self.shape, self.mesh)]

    @cached_property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def multi_index(self, flat):
        return np.stack(np.unravel_index(np.asarray(flat), self.shape), axis=-1)

    def flat_index(self, idx):
        """Flat position of integer grid indices (absolute, i.e. k with x = k*mesh)."""
        idx = np.asarray(idx) - np.asarray(self.index_lo)
        return np.ravel_multi_index(tuple(np.moveaxis(idx, -1, 0)), self.shape)

    def nearest(self, x) -> np.ndarray:
        """Flat index of the grid point nearest to each x (clipped to the grid)."""
        x = np.asarray(x, dtype=float)
        k = np.rint(x / np.asarray(self.mesh)).astype(np.int64) - np.asarray(self.index_lo)
        k = np.clip(k, 0, np.asarray(self.shape) - 1)
        return np.ravel_multi_index(tuple(np.moveaxis(k, -1, 0)), self.shape)

    def locate(self, x, tol: float = 1e-9) -> np.ndarray:
        """Flat index of points that must lie on the grid; raises otherwise."""
        x = np.asarray(x, dtype=float)
        kf = x / np.asarray(self.mesh)
        k = np.rint(kf)
        if np.any(np.abs(kf - k) > tol):
            raise InputError("point is not a node of the grid")
        k = k.astype(np.int64) - np.asarray(self.index_lo)
        if np.any(k < 0) or np.any(k >= np.asarray(self.shape)):
            raise InputError("point lies outside the grid")
        return np.ravel_multi_index(tuple(np.moveaxis(k, -1, 0)), self.shape)

    def axis_weights(self, box: Box | None = None) -> list:
        """Per-axis trapezoid weights for integrating over box (default: the
        grid domain). Nodes outside the box get weight zero."""
        box = self.domain if box is None else box
        out = []
        for ax, h, a, b in zip(self.axes, self.mesh, box.lo, box.hi):
            inside = (ax >= a - 1e-12 * max(1.0, abs(a))) & (ax <= b + 1e-12 * max(1.0, abs(b)))
            w = np.where(inside, h, 0.0)
            pos = np.flatnonzero(inside)
            if pos.size == 0:
                raise InputError("integration box contains no grid nodes")
            if pos.size > 1:
                w[pos[0]] *= 0.5
                w[pos[-1]] *= 0.5
            out.append(w)
        return out

    def weights(self, box: Box | None = None) -> np.ndarray:
        ws = self.axis_weights(box)
        w = ws[0]
        for extra in ws[1:]:
            w = np.multiply.outer(w, extra)
        return w.ravel()

    def contains_grid(self, other: "DyadicGrid") -> bool:
        """True if every node of other is a node of self."""
        if other.scaling != self.scaling or other.n > self.n:
            return False
        f = [2 ** (lv - lo) for lv, lo in zip(self.levels, other.levels)]
        for lo, m, olo, om, ff in zip(self.index_lo, self.shape, other.index_lo, other.shape, f):
            if olo * ff < lo or (olo + om - 1) * ff > lo + m - 1:
                return False
        return True


def make_grid(n: int, s, domain, cap: int | None = None) -> DyadicGrid:
    if n < 0:
        raise InputError("grid level must be non-negative")
    s = Scaling.of(s)
    domain = Box.of(domain)
    if domain.d != s.d:
        raise InputError("domain and scaling dimensions differ")
    cap = GRID_POINT_CAP if cap is None else cap
    lo_idx, shape = [], []
    for si, a, b in zip(s.s, domain.lo, domain.hi):
        f = 2.0 ** (n * si)
        k0 = math.ceil(a * f - 1e-9)
        k1 = math.floor(b * f + 1e-9)
        if k1 < k0:
            raise InputError("domain contains no grid points at this level")
        lo_idx.append(int(k0))
        shape.append(int(k1 - k0 + 1))
    total = math.prod(shape)
    if total > cap:
        raise ResourceError(f"grid of level {n} would have {total} points (cap {cap})")
    return DyadicGrid(n, s, domain, tuple(lo_idx), tuple(shape))
