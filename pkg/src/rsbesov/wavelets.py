"""Daubechies multiresolution analysis.

Filters follow the convention phi(x) = sum_k a_k phi(2x - k) with
sum_k a_k = 2.  The mother wavelet is psi(x) = sum_k (-1)^k a_{1-k} phi(2x - k).
For a scaling s, level-n elements are tensor products in which axis i lives
at dyadic level n*s_i; see :class:`Mother` for the resulting mother set.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, InputError, NumericalError
from .geometry import Scaling

MAX_ORDER = 10

# Hoelder exponents of the Daubechies scaling functions (standard published
# lower bounds).  The integer part is the regularity r used for bookkeeping.
HOLDER_EXPONENT = {1: 0.0, 2: 0.550, 3: 1.088, 4: 1.618, 5: 1.969,
                   6: 2.189, 7: 2.460, 8: 2.761, 9: 3.074, 10: 3.361}


@dataclass(frozen=True)
class RefinementFilter:
    coefficients: tuple
    order: int
    regularity: int
    holder: float = 0.0

    @property
    def a(self) -> np.ndarray:
        return np.asarray(self.coefficients)

    @property
    def support_length(self) -> int:
        """S such that phi is supported in [0, S]."""
        return len(self.coefficients) - 1

    @property
    def highpass(self) -> np.ndarray:
        """g_k = (-1)^k a_{1-k} for k = 2 - 2N, ..., 1 (stored in that order)."""
        a = self.a
        L = len(a)
        ks = np.arange(2 - L, 2)
        return np.array([(-1.0) ** k * a[1 - k] for k in ks])

    @property
    def highpass_offset(self) -> int:
        return 2 - len(self.coefficients)


def _spectral_factor(N: int) -> list:
    import mpmath as mp

    with mp.workdps(60):
        if N == 1:
            return [mp.mpf(1), mp.mpf(1)]
        # P(y) = sum_{k<N} C(N-1+k, k) y^k, y = sin^2(w/2); roots y_j map to
        # z via z + 1/z = 2 - 4y, keeping the root inside the unit disc.
        coeffs = [mp.binomial(N - 1 + k, k) for k in range(N)]
        roots = mp.polyroots(coeffs[::-1], maxsteps=400, extraprec=200)
        poly = [mp.mpc(1)]
        for y in roots:
            b = 4 * y - 2
            disc = mp.sqrt(b * b - 4)
            z1, z2 = (-b + disc) / 2, (-b - disc) / 2
            z = z1 if abs(z1) < 1 else z2
            poly = _polymul(poly, [-z, mp.mpc(1)])
        for _ in range(N):
            poly = _polymul(poly, [mp.mpc(1), mp.mpc(1)])
        h = [mp.re(c) for c in poly]
        total = mp.fsum(h)
        return [2 * c / total for c in h]


def _polymul(p, q):
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


@lru_cache(maxsize=None)
def daubechies_filter(N: int) -> RefinementFilter:
    """Length-2N Daubechies filter with N vanishing moments (extremal phase)."""
    if not isinstance(N, (int, np.integer)) or not 1 <= N <= MAX_ORDER:
        raise InputError(f"Daubechies order must be an integer in 1..{MAX_ORDER}, got {N!r}")
    a = np.array([float(c) for c in _spectral_factor(int(N))])
    _residual_check(a, int(N))
    holder = HOLDER_EXPONENT[int(N)]
    return RefinementFilter(tuple(a), int(N), int(math.floor(holder)), holder)


def _residual_check(a: np.ndarray, N: int, tol: float = 1e-12):
    L = len(a)
    for m in range(L // 2):
        s = float(np.dot(a[2 * m:], a[: L - 2 * m]))
        if abs(s - (2.0 if m == 0 else 0.0)) > tol:
            raise NumericalError(f"filter fails orthonormality at shift {m}: {s}")
    k = np.arange(L, dtype=float)
    sign = (-1.0) ** np.arange(L)
    for m in range(N):
        mom = float(np.sum(sign * k ** m * a))
        if abs(mom) > tol * max(1.0, float(np.sum(k ** m * np.abs(a)))):
            raise NumericalError(f"filter fails moment condition of order {m}: {mom}")


def scaling_moments(filt: RefinementFilter, count: int) -> np.ndarray:
    """Exact moments mu_m = int x^m phi(x) dx, m < count, from the
    refinement relation (mu_0 = 1)."""
    a = filt.a
    k = np.arange(len(a), dtype=float)
    mu = np.zeros(count)
    mu[0] = 1.0
    for m in range(1, count):
        acc = 0.0
        for r in range(m):
            acc += math.comb(m, r) * mu[r] * float(np.sum(a * k ** (m - r)))
        mu[m] = acc * 2.0 ** (-m - 1) / (1.0 - 2.0 ** (-m))
    return mu


@dataclass(frozen=True)
class SampledFunction:
    """Samples on the grid lo + j * 2^-depth covering the support [lo, hi]."""

    samples: np.ndarray
    support: tuple
    depth: int
    iterations: int = 0
    history: tuple = ()

    @property
    def h(self) -> float:
        return 2.0 ** (-self.depth)

    @property
    def x(self) -> np.ndarray:
        return self.support[0] + self.h * np.arange(len(self.samples))

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return np.interp(u, self.x, self.samples, left=0.0, right=0.0)

    def integrate(self, weight=None) -> float:
        """Trapezoid rule on the sampling grid, with the function extended by
        zero outside its support (so it reduces to h * sum of samples)."""
        f = self.samples if weight is None else self.samples * weight(self.x)
        return float(self.h * np.sum(f))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "value"])
            for xv, v in zip(self.x, self.samples):
                w.writerow([repr(float(xv)), repr(float(v))])


def _integer_values(a: np.ndarray, max_iter: int = 5000, tol: float = 1e-15):
    S = len(a) - 1
    if S == 1:
        return np.array([1.0, 0.0]), 1, (0.0,)
    idx = 2 * np.arange(S + 1)[:, None] - np.arange(S + 1)[None, :]
    M = np.where((idx >= 0) & (idx <= S), a[np.clip(idx, 0, S)], 0.0)
    v = np.zeros(S + 1)
    v[1:S] = 1.0 / (S - 1)
    hist = []
    for it in range(1, max_iter + 1):
        w = M @ v
        w /= w.sum()
        err = float(np.max(np.abs(w - v)))
        hist.append(err)
        v = w
        if err < tol:
            return v, it, tuple(hist)
    raise ConvergenceError(f"cascade fixed point did not converge (last change {hist[-1]:.3e})")


def cascade(filt: RefinementFilter, depth: int = 12) -> SampledFunction:
    """Scaling function samples on the mesh 2^-depth of [0, 2N - 1].

    Integer values come from the fixed point of the refinement operator
    restricted to integers; dyadic refinement then fills in each level."""
    if depth < 1:
        raise InputError("cascade depth must be at least 1")
    a = filt.a
    S = len(a) - 1
    vals, iters, hist = _integer_values(a)
    for lev in range(1, depth + 1):
        half = 2 ** (lev - 1)
        new = np.zeros(S * 2 ** lev + 1)
        new[0::2] = vals
        odd = np.arange(1, len(new), 2)
        acc = np.zeros(odd.size)
        for k, ak in enumerate(a):
            j = odd - k * half
            ok = (j >= 0) & (j < len(vals))
            acc[ok] += ak * vals[j[ok]]
        new[odd] = acc
        vals = new
    if S == 1:
        vals[-1] = 0.0
    return SampledFunction(vals, (0.0, float(S)), depth, iters, hist)


def mother_from_father(filt: RefinementFilter, father: SampledFunction) -> SampledFunction:
    """psi(x) = sum_k g_k phi(2x - k), sampled at the father's resolution."""
    N = len(filt.a) // 2
    depth = father.depth
    S = len(filt.a) - 1
    g = filt.highpass
    lo = 1 - N
    count = (2 * N - 1) * 2 ** depth + 1
    j = np.arange(count)
    out = np.zeros(count)
    for g_k, k in zip(g, range(filt.highpass_offset, 2)):
        idx = (2 * lo - k) * 2 ** depth + 2 * j
        ok = (idx >= 0) & (idx <= S * 2 ** depth)
        out[ok] += g_k * father.samples[idx[ok]]
    return SampledFunction(out, (float(lo), float(N)), depth)


@dataclass(frozen=True)
class Mother:
    """A d-dimensional mother wavelet.

    factors[i] is None for a father factor on axis i, or (t, e) for the
    factor u -> 2^(t/2) psi(2^t u - e) with 0 <= t < s_i and 0 <= e < 2^t.
    At least one factor is a detail factor.  For isotropic scaling this is
    the usual set of 2^d - 1 tensor mothers; in general there are
    2^|s| - 1 of them."""

    factors: tuple

    @property
    def block(self) -> tuple:
        return tuple(-1 if f is None else f[0] for f in self.factors)

    @property
    def shift(self) -> tuple:
        return tuple(0 if f is None else f[1] for f in self.factors)

    @property
    def label(self) -> str:
        parts = ["phi" if f is None else ("psi" if f == (0, 0) else f"psi[{f[0]},{f[1]}]") for f in self.factors]
        return "*".join(parts)


def mother_set(scaling) -> list:
    s = Scaling.of(scaling)
    options = [[None] + [(t, e) for t in range(si) for e in range(2 ** t)] for si in s.s]
    return [Mother(c) for c in itertools.product(*options) if any(f is not None for f in c)]


@dataclass(frozen=True)
class WaveletBasis:
    filter: RefinementFilter
    father: SampledFunction
    psi: SampledFunction
    scaling: Scaling
    mothers: tuple = field(default=())

    @property
    def r(self) -> int:
        return self.filter.regularity

    @property
    def N(self) -> int:
        return self.filter.order

    @property
    def support_length(self) -> int:
        return self.filter.support_length

    def mother_index(self, mother: Mother) -> int:
        return self.mothers.index(mother)

    def factor_profile(self, factor):
        """1D profile of one tensor factor, as a function of the level-n
        rescaled coordinate u = 2^(n s_i)(y_i - x_i)."""
        if factor is None:
            return self.father
        t, e = factor
        return lambda u: 2.0 ** (t / 2) * self.psi(2.0 ** t * np.asarray(u) - e)


def build_basis(N: int = 3, scaling=(1,), depth: int = 12) -> WaveletBasis:
    filt = daubechies_filter(N)
    father = cascade(filt, depth)
    psi = mother_from_father(filt, father)
    s = Scaling.of(scaling)
    return WaveletBasis(filt, father, psi, s, tuple(mother_set(s)))


def eval_scaled(basis: WaveletBasis, kind, n: int, x, y):
    """phi^n_x(y) (kind="father") or psi^n_x(y) for a mother index/Mother.

    y may be a single point or an array of points (last axis coordinates)."""
    s = basis.scaling
    x = np.asarray(x, dtype=float).reshape(s.d)
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (s.d,):
        if s.d == 1:
            y = y[..., None]
        else:
            raise InputError("evaluation point has wrong dimension")
    if kind == "father":
        factors = (None,) * s.d
    else:
        mother = kind if isinstance(kind, Mother) else basis.mothers[int(kind)]
        factors = mother.factors
    val = np.ones(y.shape[:-1])
    for i, (si, fac) in enumerate(zip(s.s, factors)):
        f = 2.0 ** (n * si)
        val = val * np.sqrt(f) * basis.factor_profile(fac)(f * (y[..., i] - x[i]))
    return float(val) if val.ndim == 0 else val


def _correlate_shift(f: np.ndarray, g: np.ndarray, shift: int, h: float) -> float:
    """int f(x) g(x - shift*h') dx for samples on the same grid (shift in samples)."""
    if shift >= 0:
        prod = f[shift:] * g[: len(g) - shift] if shift < len(f) else np.zeros(1)
    else:
        prod = f[: len(f) + shift] * g[-shift:]
    n = min(len(f), len(g))
    return float(h * np.sum(prod[:n]))


@dataclass
class MRAReport:
    N: int
    depth: int
    r: int
    degrees: list
    tolerance: float
    orthonormality_defect: float
    mother_orthonormality_defect: float
    father_mother_defect: float
    mass_defect: float
    reproduction_errors: dict
    vanishing_moment_defects: dict
    refinement_residual: float
    cascade_iterations: int

    @property
    def passed(self) -> bool:
        vals = [self.orthonormality_defect, self.refinement_residual]
        vals += list(self.reproduction_errors.values())
        vals += [v for d in self.vanishing_moment_defects.values() for v in d.values()]
        return all(v < self.tolerance for v in vals)

    def to_dict(self) -> dict:
        return {
            "N": self.N, "depth": self.depth, "r": self.r, "degrees": list(self.degrees),
            "tolerance": self.tolerance,
            "orthonormality_defect": self.orthonormality_defect,
            "mother_orthonormality_defect": self.mother_orthonormality_defect,
            "father_mother_defect": self.father_mother_defect,
            "mass_defect": self.mass_defect,
            "reproduction_errors": {str(k): v for k, v in self.reproduction_errors.items()},
            "vanishing_moment_defects": {m: {str(k): v for k, v in d.items()} for m, d in self.vanishing_moment_defects.items()},
            "refinement_residual": self.refinement_residual,
            "cascade_iterations": self.cascade_iterations,
            "passed": self.passed,
        }


def refinement_residual(filt: RefinementFilter, father: SampledFunction) -> float:
    """sup over the level depth-1 grid of |phi(x) - sum_k a_k phi(2x - k)|."""
    D = father.depth
    S = filt.support_length
    v = father.samples
    i = np.arange(0, S * 2 ** (D - 1) + 1)
    acc = np.zeros(i.size)
    for k, ak in enumerate(filt.a):
        j = 4 * i - k * 2 ** D
        ok = (j >= 0) & (j < len(v))
        acc[ok] += ak * v[j[ok]]
    return float(np.max(np.abs(v[2 * i] - acc)))


def check_mra(basis: WaveletBasis, r: int | None = None, degrees=None, tol: float = 1e-6) -> MRAReport:
    """Quadrature checks of orthonormality, polynomial reproduction on [0, 1],
    vanishing moments of the mother and the refinement relation."""
    r = basis.r if r is None else int(r)
    degrees = list(range(r + 1)) if degrees is None else [int(m) for m in degrees]
    phi, psi = basis.father, basis.psi
    h = phi.h
    S = basis.support_length
    step = 2 ** phi.depth

    ortho = 0.0
    for y in range(0, S + 1):
        val = _correlate_shift(phi.samples, phi.samples, y * step, h)
        ortho = max(ortho, abs(val - (1.0 if y == 0 else 0.0)))
    mortho = 0.0
    for y in range(0, len(psi.samples) // step + 1):
        val = _correlate_shift(psi.samples, psi.samples, y * step, h)
        mortho = max(mortho, abs(val - (1.0 if y == 0 else 0.0)))
    # <phi(. - y), psi>: psi lives on [1-N, N], phi(. - y) on [y, y+S]
    cross = 0.0
    lo_psi = int(psi.support[0])
    for y in range(lo_psi - S, int(psi.support[1]) + 1):
        xs = psi.x
        cross = max(cross, abs(float(h * np.sum(psi.samples * phi(xs - y)))))

    xs = np.linspace(0.0, 1.0, 2 ** min(phi.depth, 10) + 1)
    repro = {}
    for m in degrees:
        approx = np.zeros_like(xs)
        for y in range(-S, 2):
            c = phi.integrate(lambda u, y=y, m=m: (u + y) ** m)
            approx += c * phi(xs - y)
        repro[m] = float(np.max(np.abs(approx - xs ** m)))

    vm = {"psi": {m: abs(psi.integrate(lambda u, m=m: u ** m)) for m in degrees}}

    return MRAReport(
        N=basis.N, depth=phi.depth, r=r, degrees=degrees, tolerance=tol,
        orthonormality_defect=float(ortho), mother_orthonormality_defect=float(mortho),
        father_mother_defect=float(cross), mass_defect=abs(phi.integrate() - 1.0),
        reproduction_errors=repro, vanishing_moment_defects=vm,
        refinement_residual=refinement_residual(basis.filter, phi),
        cascade_iterations=phi.iterations,
    )
