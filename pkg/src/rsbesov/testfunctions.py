"""Compactly supported test functions, finite dictionaries standing in for
the unit ball of C^r, and their projections onto V_j.

Members are separable products of 1D profiles built from the polynomial
bump B(u) = (1 - u^2)^m on [-1, 1] and its derivatives, so sup norms of
derivatives, integrals and moments are all exact polynomial computations.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from . import kernels
from .errors import InputError
from .geometry import Box, Scaling
from .transform import LevelVector, WaveletExpansion, coarsen, project_1d, sample_projection_1d
from .wavelets import Mother, RefinementFilter

BUMP_POWER = 10


@lru_cache(maxsize=None)
def _bump_poly(order: int, power: int) -> Polynomial:
    return (Polynomial([1.0, 0.0, -1.0]) ** power).deriv(order) if order else Polynomial([1.0, 0.0, -1.0]) ** power


@lru_cache(maxsize=None)
def _poly_sup(order: int, power: int) -> float:
    p = _bump_poly(order, power)
    cands = [-1.0, 1.0] + [float(r.real) for r in p.deriv().roots() if abs(r.imag) < 1e-9 and -1 <= r.real <= 1]
    return float(max(abs(p(c)) for c in cands))


@dataclass(frozen=True)
class Profile1D:
    """u -> B^(order)((u - center) / width) on [center - width, center + width]."""

    order: int = 0
    width: float = 1.0
    center: float = 0.0
    power: int = BUMP_POWER

    def __post_init__(self):
        if self.width <= 0 or abs(self.center) + self.width > 1 + 1e-12:
            raise InputError("profile must be supported in [-1, 1]")
        if self.order >= self.power:
            raise InputError("derivative order too high for the bump power")

    @property
    def support(self) -> tuple:
        return (self.center - self.width, self.center + self.width)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        v = (u - self.center) / self.width
        return np.where(np.abs(v) < 1.0, _bump_poly(self.order, self.power)(np.clip(v, -1, 1)), 0.0)

    def derivative_sup(self, j: int) -> float:
        """sup |d^j/du^j profile| (exact up to root finding)."""
        if self.order + j >= 2 * self.power + 1:
            return 0.0
        return _poly_sup(self.order + j, self.power) / self.width ** j

    def moment(self, m: int) -> float:
        """int u^m profile(u) du (exact)."""
        p = _bump_poly(self.order, self.power)
        # substitute u = center + width v
        shift = Polynomial([self.center, self.width]) ** m
        integrand = (shift * p).integ()
        return float((integrand(1.0) - integrand(-1.0)) * self.width)


@dataclass(frozen=True)
class TestFunction:
    """amplitude * prod_i factors[i](u_i)."""

    factors: tuple
    amplitude: float = 1.0

    @property
    def d(self) -> int:
        return len(self.factors)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.d == 1 and u.shape[-1:] != (1,):
            u = u[..., None]
        out = np.full(u.shape[:-1], self.amplitude)
        for i, f in enumerate(self.factors):
            out = out * f(u[..., i])
        return out

    def cr_norm(self, r: int) -> float:
        """sum_{k <= r} max_{|l| = k} sup |d^l eta|."""
        total = 0.0
        for k in range(int(r) + 1):
            best = 0.0
            for ell in itertools.product(range(k + 1), repeat=self.d):
                if sum(ell) != k:
                    continue
                best = max(best, math.prod(f.derivative_sup(e) for f, e in zip(self.factors, ell)))
            total += best
        return abs(self.amplitude) * total

    def normalized(self, r: int) -> "TestFunction":
        return replace(self, amplitude=math.copysign(1.0, self.amplitude) / (self.cr_norm(r) / abs(self.amplitude)))

    def moment(self, k) -> float:
        k = tuple(np.atleast_1d(k))
        return self.amplitude * math.prod(f.moment(int(e)) for f, e in zip(self.factors, k))

    def integral(self) -> float:
        return self.moment((0,) * self.d)

    def annihilates_up_to(self, scaling) -> int:
        """Largest n such that all polynomials of scaled degree <= n integrate
        to zero against this function (-1 if constants are not annihilated)."""
        s = Scaling.of(scaling)
        n = -1
        while n < 20:
            m = n + 1
            from .geometry import multi_indices

            if any(abs(self.moment(k.k)) > 1e-12 for k in multi_indices(s, m) if k.degree(s) == m):
                break
            n = m
        return n


_PROFILE_SEQUENCE = (
    Profile1D(0, 1.0, 0.0), Profile1D(1, 1.0, 0.0), Profile1D(0, 0.5, 0.0), Profile1D(1, 0.5, 0.0),
    Profile1D(0, 0.5, 0.5), Profile1D(0, 0.5, -0.5), Profile1D(1, 0.5, 0.5), Profile1D(1, 0.5, -0.5),
    Profile1D(2, 1.0, 0.0), Profile1D(0, 0.25, 0.0), Profile1D(0, 0.25, 0.75), Profile1D(1, 0.25, -0.75),
    Profile1D(0, 0.75, 0.25), Profile1D(1, 0.75, -0.25), Profile1D(2, 0.5, 0.25), Profile1D(0, 0.25, -0.5),
)


@dataclass(frozen=True)
class TestFunctionDictionary:
    members: tuple
    r: int
    annihilation_order: int | None = None

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def d(self) -> int:
        return self.members[0].d


def standard_dictionary(d: int = 1, r: int = 1, size: int = 4) -> TestFunctionDictionary:
    """The first `size` members of a fixed nested sequence of bumps and bump
    derivatives, each normalized to unit C^r norm.  Dictionaries of
    different sizes are nested, so doubling the size only adds members."""
    if size < 1 or size > len(_PROFILE_SEQUENCE):
        raise InputError(f"dictionary size must be in 1..{len(_PROFILE_SEQUENCE)}")
    n = len(_PROFILE_SEQUENCE)
    members = []
    for i in range(size):
        factors = tuple(_PROFILE_SEQUENCE[(i * (j + 1) + j * 3) % n if j else i] for j in range(d))
        members.append(TestFunction(factors).normalized(r))
    return TestFunctionDictionary(tuple(members), int(r))


def annihilating_dictionary(d: int = 1, r: int = 1, n: int = 0, size: int = 3) -> TestFunctionDictionary:
    """Members annihilating polynomials of scaled degree <= n: products of
    bump derivatives of order >= n + 1 on every axis."""
    shapes = [(n + 1, 1.0, 0.0), (n + 2, 1.0, 0.0), (n + 1, 0.5, 0.0), (n + 1, 0.5, 0.5), (n + 2, 0.5, -0.5)]
    if size > len(shapes):
        raise InputError("annihilating dictionary too large")
    members = []
    for i in range(size):
        o, w, c = shapes[i]
        members.append(TestFunction(tuple(Profile1D(o, w, c) for _ in range(d))).normalized(r))
    return TestFunctionDictionary(tuple(members), int(r), int(n))


# --------------------------------------------------------------------------
# projections


@lru_cache(maxsize=4096)
def _kernel_1d(profile: Profile1D, dil: float, level: int, filt: RefinementFilter):
    """Father coefficients at `level` of y -> dil^-1 profile(y / dil)."""
    lo, hi = profile.support
    feature = dil * profile.width / max(1, profile.order + 1)
    off, c = project_1d(lambda y: profile(y / dil) / dil, lo * dil, hi * dil, level, filt, feature)
    c.setflags(write=False)
    return off, c


def member_kernels(member: TestFunction, lam: float, levels: tuple, scaling: Scaling, filt: RefinementFilter):
    """Per-axis coefficient kernels of eta^lam_0 (amplitude folded into axis 0)."""
    out = []
    for i, (f, si, lev) in enumerate(zip(member.factors, scaling.s, levels)):
        off, c = _kernel_1d(f, float(lam) ** si, int(lev), filt)
        if i == 0:
            c = c * member.amplitude
        out.append((off, c))
    return out


@dataclass(frozen=True)
class PlacedTest:
    """eta^lam_x(y) = lam^-|s| eta(lam^-s (y - x))."""

    member: TestFunction
    center: tuple
    lam: float
    scaling: Scaling

    def __post_init__(self):
        object.__setattr__(self, "scaling", Scaling.of(self.scaling))
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.scaling.d == 1 and y.shape[-1:] != (1,):
            y = y[..., None]
        s = self.scaling.as_array()
        u = (y - np.asarray(self.center)) / self.lam ** s
        return self.member(u) / self.lam ** self.scaling.size

    def support_box(self) -> Box:
        lo, hi = [], []
        for f, c, si in zip(self.member.factors, self.center, self.scaling.s):
            a, b = f.support
            lo.append(c + a * self.lam ** si)
            hi.append(c + b * self.lam ** si)
        return Box(tuple(lo), tuple(hi))

    def project(self, levels: tuple, filt: RefinementFilter) -> LevelVector:
        offs, arrs = [], []
        for i, ((off, c), x, lev) in enumerate(zip(member_kernels(self.member, self.lam, levels, self.scaling, filt),
                                                  self.center, levels)):
            k = x * 2.0 ** lev
            if abs(k - round(k)) < 1e-9:
                offs.append(off + int(round(k)))
                arrs.append(c)
            else:
                f = self.member.factors[i]
                dil = self.lam ** self.scaling.s[i]
                lo, hi = f.support
                o, cc = project_1d(lambda y, f=f, dil=dil, x=x: f((y - x) / dil) / dil, x + lo * dil, x + hi * dil,
                                   lev, filt, dil * f.width / max(1, f.order + 1))
                if i == 0:
                    cc = cc * self.member.amplitude
                offs.append(o)
                arrs.append(cc)
        return LevelVector(levels, tuple(offs), _outer(arrs))


def _outer(arrs):
    out = arrs[0]
    for a in arrs[1:]:
        out = np.multiply.outer(out, a)
    return np.asarray(out, dtype=float)


@dataclass(frozen=True)
class WaveletElement:
    """phi^0_k (mother=None, n=0) or the level-n detail element with the given
    mother and base-point index k."""

    n: int
    mother: Mother | None
    k: tuple
    scaling: Scaling

    def support_box(self, support_length: int, N: int) -> Box:
        lo, hi = [], []
        for i, si in enumerate(self.scaling.s):
            h = 2.0 ** (-self.n * si)
            fac = None if self.mother is None else self.mother.factors[i]
            if fac is None:
                lo.append(self.k[i] * h)
                hi.append((self.k[i] + support_length) * h)
            else:
                t, e = fac
                lo.append(self.k[i] * h + (e + 1 - N) * h / 2 ** t)
                hi.append(self.k[i] * h + (e + N) * h / 2 ** t)
        return Box(tuple(lo), tuple(hi))

    def project(self, levels: tuple, filt: RefinementFilter) -> LevelVector:
        s = self.scaling
        M = levels[0] // s.s[0]
        if M < self.n + (0 if self.mother is None else 1):
            raise InputError("projection level too coarse for this wavelet element")
        d = s.d
        if self.mother is None:
            vec = LevelVector(tuple(self.n * si for si in s.s), self.k, np.ones((1,) * d))
            from .transform import refine

            return refine(vec, s, filt, M - self.n)
        idx = tuple(kk if b < 0 else (kk << b) + e for kk, b, e in zip(self.k, self.mother.block, self.mother.shift))
        from .transform import block_levels

        det = [dict() for _ in range(self.n + 1)]
        det[self.n][self.mother.block] = LevelVector(block_levels(self.n, self.mother.block, s), idx, np.ones((1,) * d))
        return WaveletExpansion(s, filt, None, det).synthesize(M)


@dataclass(frozen=True)
class SampledTest:
    """A test function given by its samples on a dyadic grid (whose level
    sets the projection accuracy); values outside the grid are zero."""

    grid: object
    values: np.ndarray

    def support_box(self) -> Box:
        return self.grid.domain

    def project(self, levels: tuple, filt: RefinementFilter) -> LevelVector:
        g = self.grid
        s = g.scaling
        from .transform import quadrature_weights

        w = quadrature_weights(filt)
        R = len(w)
        S = filt.support_length
        vals = self.values.reshape(g.shape)
        arr = vals
        offs = []
        for i, lev in enumerate(g.levels):
            # c_k = 2^(-lev/2) sum_r w_r v[k + r], k from lo - S .. hi
            pad = [(0, 0)] * arr.ndim
            pad[i] = (S, R)
            a = np.pad(arr, pad)
            n_out = arr.shape[i] + S
            acc = 0
            for r in range(R):
                sl = [slice(None)] * arr.ndim
                sl[i] = slice(r, r + n_out)
                acc = acc + w[r] * a[tuple(sl)]
            arr = acc * 2.0 ** (-lev / 2)
            offs.append(g.index_lo[i] - S)
        lv = LevelVector(g.levels, tuple(offs), arr)
        M = levels[0] // s.s[0]
        if g.n < M:
            raise InputError("sampled test is coarser than the requested projection level")
        return coarsen(lv, s, filt, g.n - M)


# --------------------------------------------------------------------------
# pairings at many centres


def correlate_axis(lv: LevelVector, axis: int, kernel, centers) -> LevelVector:
    """Replace spatial axis `axis` of lv by pairings with shifted copies of a
    1D kernel: out[..., p, ...] = sum_t g[t] c[..., centers[p] + off_g + t, ...].

    Raises InputError if any shifted kernel reaches outside the window."""
    off_g, g = kernel
    centers = np.asarray(centers, dtype=np.int64)
    ax = lv.axis(axis)
    starts = centers + off_g - lv.offset[axis]
    L = lv.coeffs.shape[ax]
    if starts.size and (starts.min() < 0 or starts.max() + len(g) > L):
        raise InputError("test function reaches outside the coefficient window")
    c = np.moveaxis(lv.coeffs, ax, -1)
    shp = c.shape
    out = kernels.gather_correlate(c.reshape(-1, L), g, starts)
    out = np.moveaxis(out.reshape(shp[:-1] + (centers.size,)), -1, ax)
    return LevelVector(lv.levels, lv.offset, out)


def pair_at_centers(lv: LevelVector, member: TestFunction, lam: float, centers: list, scaling: Scaling,
                    filt: RefinementFilter) -> np.ndarray:
    """<F, eta^lam_x> for x on the product grid given by per-axis integer
    centre indices at the levels of lv.  Result shape: batch + per-axis counts."""
    ks = member_kernels(member, lam, lv.levels, scaling, filt)
    cur = lv
    for i in range(lv.d):
        cur = correlate_axis(cur, i, ks[i], centers[i])
    return cur.coeffs


def grid_centers(grid, levels: tuple) -> list:
    """Per-axis integer indices, at the given levels, of the nodes of grid."""
    if any(lv < gl for lv, gl in zip(levels, grid.levels)):
        raise InputError("pairing level must be at least the sample grid level")
    return [(grid.index_lo[i] + np.arange(grid.shape[i])) * 2 ** (levels[i] - grid.levels[i])
            for i in range(grid.d)]


def pair_on_grid(lv: LevelVector, member: TestFunction, lam: float, grid, filt: RefinementFilter) -> np.ndarray:
    """<F, eta^lam_x> for every node x of grid, flattened in grid order.
    Batch axes of lv lead the result."""
    out = pair_at_centers(lv, member, lam, grid_centers(grid, lv.levels), grid.scaling, filt)
    return out.reshape(lv.batch_shape + (-1,))


def quadrature_pairing(func, test: PlacedTest, panels: int = 64, order: int = 16) -> float:
    """<func, test> by composite Gauss-Legendre quadrature over the support
    of a one-dimensional placed test function."""
    if test.scaling.d != 1:
        raise InputError("quadrature pairing is implemented for d = 1 only")
    box = test.support_box()
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(box.lo[0], box.hi[0], panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    y = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    vals = np.asarray(func(y), dtype=float) * test(y[:, None])
    return float(np.sum(w * vals))
