"""Models (Pi, Gamma) realized through finitely many generator
distributions.

Every model here has the form

    Pi_x tau_j = sum_i C(x)[i, j] D_i,

where the D_i are fixed distributions ("generators") that can be projected
exactly onto V_M for M at or above their native level, and C(x) is an
explicit coefficient matrix.  Pairings with test functions and wavelets are
then dot products in coefficient space.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, InputError
from .geometry import Box, DyadicGrid, Scaling, make_grid, scaled_norm
from .structure import (GradedVector, RegularityStructure, StructureGroupElement, as_fraction,
                        polynomial_translation_matrix)
from .testfunctions import TestFunctionDictionary, pair_on_grid
from .transform import LevelVector, WaveletExpansion, monomial_coefficients, refine
from .wavelets import RefinementFilter, mother_set


# --------------------------------------------------------------------------
# generators


def index_window(box: Box, levels: tuple, support_length: int, margin: int = 0) -> list:
    """Per-axis index ranges of father elements at `levels` whose support
    meets the box (plus a margin)."""
    out = []
    for lo, hi, j in zip(box.lo, box.hi, levels):
        f = 2.0 ** j
        out.append((math.floor(lo * f) - support_length - margin, math.ceil(hi * f) + margin))
    return out


class MonomialGenerator:
    """y -> y^k; exactly represented in every V_M as long as the basis
    reproduces polynomials of that degree."""

    native_level = 0

    def __init__(self, k: tuple, filt: RefinementFilter):
        self.k = tuple(int(v) for v in k)
        if max(self.k, default=0) >= filt.order:
            raise ConfigurationError(
                f"monomial of degree {self.k} needs a basis with more than {max(self.k)} vanishing moments")
        self.filt = filt

    def project(self, levels, windows) -> LevelVector:
        arrs = [monomial_coefficients(p, lev, lo, hi - lo + 1, self.filt) for p, lev, (lo, hi) in
                zip(self.k, levels, windows)]
        out = arrs[0]
        for a in arrs[1:]:
            out = np.multiply.outer(out, a)
        return LevelVector(levels, tuple(lo for lo, _ in windows), np.asarray(out, float))


class ExpansionGenerator:
    """A distribution given by a finite wavelet expansion."""

    def __init__(self, expansion: WaveletExpansion):
        self.expansion = expansion
        self.native_level = expansion.n_top + 1
        self._cache = {}

    def at_level(self, M: int) -> LevelVector:
        if M not in self._cache:
            self._cache[M] = self.expansion.synthesize(M)
        return self._cache[M]

    def project(self, levels, windows) -> LevelVector:
        M = levels[0] // self.expansion.scaling.s[0]
        if M < self.native_level:
            raise InputError(f"generator needs level >= {self.native_level}, got {M}")
        return self.at_level(M).crop(windows)


class ProductGenerator:
    """Coefficientwise product F * D at the native level of D: the father
    coefficient at index k is F(centre of phi_k) times that of D."""

    def __init__(self, func, base: ExpansionGenerator, filt: RefinementFilter):
        from .wavelets import scaling_moments

        self.func = func
        self.base = base
        self.filt = filt
        self.native_level = base.native_level
        s = base.expansion.scaling
        M0 = self.native_level
        lv = base.at_level(M0)
        mu1 = scaling_moments(filt, 2)[1]
        axes = [(o + np.arange(n) + mu1) * 2.0 ** (-lev) for o, n, lev in zip(lv.offset, lv.shape, lv.levels)]
        pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
        vals = np.asarray(func(pts), dtype=float).reshape(lv.shape)
        self._native = LevelVector(lv.levels, lv.offset, lv.coeffs * vals)
        self._cache = {M0: self._native}
        self.scaling = s

    def at_level(self, M: int) -> LevelVector:
        if M not in self._cache:
            self._cache[M] = refine(self._native, self.scaling, self.filt, M - self.native_level)
        return self._cache[M]

    def project(self, levels, windows) -> LevelVector:
        M = levels[0] // self.scaling.s[0]
        if M < self.native_level:
            raise InputError(f"generator needs level >= {self.native_level}, got {M}")
        return self.at_level(M).crop(windows)


# --------------------------------------------------------------------------
# models


class Model:
    """A model over a regularity structure.

    coeff_fn(points) -> array (P, n_generators, dim T)
    gamma_fn(x, y)   -> array (P, dim T, dim T), Gamma_{x,y} column-wise
    """

    def __init__(self, structure: RegularityStructure, generators: list, coeff_fn, gamma_fn,
                 filt: RefinementFilter, name: str = "model", translation_invariant: bool = False,
                 exact_gamma_fn=None, perturbation_weights=None):
        self.structure = structure
        self.generators = list(generators)
        self.coeff_fn = coeff_fn
        self.gamma_fn = gamma_fn
        self.filt = filt
        self.name = name
        self.translation_invariant = translation_invariant
        self.exact_gamma_fn = exact_gamma_fn
        self.perturbation_weights = perturbation_weights
        self.bound_cache = {}

    @property
    def scaling(self) -> Scaling:
        return self.structure.scaling

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    @property
    def native_level(self) -> int:
        return max([g.native_level for g in self.generators], default=0)

    def coefficients(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.coeff_fn(pts), dtype=float)

    def gamma_matrix(self, x, y) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        x, y = np.broadcast_arrays(x, y)
        return np.asarray(self.gamma_fn(x, y), dtype=float)

    def gamma(self, x, y) -> StructureGroupElement:
        return StructureGroupElement(self.structure, self.gamma_matrix(x, y)[0], tol=1e-9)

    def anchor_factors(self, points):
        """(Gamma_{x,0}, Gamma_{0,x}) for every point x."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        zero = np.zeros_like(pts)
        return self.gamma_matrix(pts, zero), self.gamma_matrix(zero, pts)

    def generator_field(self, levels: tuple, windows: list) -> LevelVector:
        """All generators projected at `levels`, stacked along a leading axis."""
        vecs = [g.project(levels, windows) for g in self.generators]
        return LevelVector(levels, vecs[0].offset, np.stack([v.coeffs for v in vecs]))

    def pair(self, x, tau, test, level: int | None = None) -> float:
        """<Pi_x tau, test> for a single base point; test is any object with
        project(levels, filt) and support_box()."""
        x = np.asarray(x, dtype=float).reshape(1, -1)
        tau = tau.coeffs if isinstance(tau, GradedVector) else np.asarray(tau, dtype=float)
        M = max(self.native_level, 1) if level is None else level
        s = self.scaling
        levels = tuple(M * si for si in s.s)
        tv = test.project(levels, self.filt)
        wins = [tv.window(i) for i in range(s.d)]
        field_ = self.generator_field(levels, wins)
        P = np.sum(field_.coeffs * tv.coeffs[None], axis=tuple(range(1, s.d + 1)))
        C = self.coefficients(x)[0]
        return float(P @ C @ tau)

    def perturbed(self, delta, eps: float, name: str | None = None) -> "Model":
        """The model with Pi_x replaced by Pi_x + eps * Delta_x, where Delta_x
        realizes the noise symbol as `delta` (a WaveletExpansion) with the
        model's own re-expansion weights; Gamma is unchanged."""
        if self.perturbation_weights is None:
            raise InputError(f"model {self.name!r} has no perturbation direction")
        gen = delta if not isinstance(delta, WaveletExpansion) else ExpansionGenerator(delta)
        base_fn = self.coeff_fn
        wfn = self.perturbation_weights

        def coeff_fn(pts):
            C = base_fn(pts)
            extra = eps * np.asarray(wfn(pts), dtype=float)[:, None, :]
            return np.concatenate([C, extra], axis=1)

        return Model(self.structure, self.generators + [gen], coeff_fn, self.gamma_fn, self.filt,
                     name or f"{self.name}+{eps:g}*delta", self.translation_invariant, self.exact_gamma_fn,
                     None)


def polynomial_model(structure: RegularityStructure, filt: RefinementFilter, dilation: float = 1.0) -> Model:
    """Pi_x X^k = (c (. - x))^k and Gamma_{x,y} P(X) = P(X + c (x - y)),
    with c = dilation (c = 1 is the canonical polynomial model)."""
    if structure.kind != "polynomial":
        raise InputError("polynomial_model needs a polynomial structure")
    monos = [s.monomial for s in structure.symbols]
    gens = [MonomialGenerator(k, filt) for k in monos]
    c = float(dilation)
    D = structure.dim
    # C[m, k] = c^|k| prod_i binom(k_i, m_i) (-x_i)^(k_i - m_i)
    pairs = [(i, j) for j, kj in enumerate(monos) for i, ki in enumerate(monos)
             if all(a <= b for a, b in zip(ki, kj))]

    def coeff_fn(pts):
        out = np.zeros((pts.shape[0], D, D))
        for i, j in pairs:
            ki, kj = monos[i], monos[j]
            val = c ** sum(kj) * np.ones(pts.shape[0])
            for ax, (a, b) in enumerate(zip(ki, kj)):
                val = val * math.comb(b, a) * (-pts[:, ax]) ** (b - a)
            out[:, i, j] = val
        return out

    def gamma_fn(x, y):
        h = c * (x - y)
        out = np.zeros((x.shape[0], D, D))
        for i, j in pairs:
            ki, kj = monos[i], monos[j]
            val = np.ones(x.shape[0])
            for ax, (a, b) in enumerate(zip(ki, kj)):
                val = val * math.comb(b, a) * h[:, ax] ** (b - a)
            out[:, i, j] = val
        return out

    def exact_gamma(x, y):
        cc = as_fraction(c)
        h = [cc * (as_fraction(a) - as_fraction(b)) for a, b in zip(x, y)]
        return polynomial_translation_matrix(structure, h, exact=True)

    name = "polynomial" if c == 1.0 else f"polynomial(dilation={c:g})"
    return Model(structure, gens, coeff_fn, gamma_fn, filt, name, True, exact_gamma)


def _check_noise_structure(structure, kinds):
    if structure.kind not in kinds:
        raise InputError(f"structure of kind {structure.kind!r} not supported here (need {kinds})")


def custom_distribution_model(structure: RegularityStructure, xi: WaveletExpansion | None,
                              filt: RefinementFilter, name: str = "noise") -> Model:
    """Pi_x Xi = xi for every x, Pi_x 1 = 1, Gamma = identity."""
    _check_noise_structure(structure, ("noise",))
    if xi is None:
        raise InputError("the noise model needs the coefficients of xi")
    if xi.scaling != structure.scaling:
        raise InputError("xi and structure use different scalings")
    D = structure.dim
    ixi, ione = structure.index_of("Xi"), structure.unit_index
    gens = [ExpansionGenerator(xi), MonomialGenerator((0,) * structure.scaling.d, filt)]

    def coeff_fn(pts):
        out = np.zeros((pts.shape[0], 2, D))
        out[:, 0, ixi] = 1.0
        out[:, 1, ione] = 1.0
        return out

    def gamma_fn(x, y):
        return np.broadcast_to(np.eye(D), (x.shape[0], D, D)).copy()

    def weights(pts):
        w = np.zeros((pts.shape[0], D))
        w[:, ixi] = 1.0
        return w

    return Model(structure, gens, coeff_fn, gamma_fn, filt, name, True, perturbation_weights=weights)


dirac_comb_model = custom_distribution_model


def rough_model(structure: RegularityStructure, xi: WaveletExpansion, F, filt: RefinementFilter,
                name: str = "rough") -> Model:
    """Pi_x Xi = xi, Pi_x Theta = F xi - F(x) xi, Pi_x 1 = 1 and
    Gamma_{x,y} Theta = Theta + (F(x) - F(y)) Xi.

    F maps an array of points (P, d) to values (P,); the product F xi is
    formed coefficientwise at the native level of xi."""
    _check_noise_structure(structure, ("rough",))
    D = structure.dim
    ixi, ith, ione = structure.index_of("Xi"), structure.index_of("Theta"), structure.unit_index
    g_xi = ExpansionGenerator(xi)
    gens = [g_xi, ProductGenerator(F, g_xi, filt), MonomialGenerator((0,) * structure.scaling.d, filt)]

    def coeff_fn(pts):
        out = np.zeros((pts.shape[0], 3, D))
        out[:, 0, ixi] = 1.0
        out[:, 1, ith] = 1.0
        out[:, 0, ith] = -np.asarray(F(pts), dtype=float)
        out[:, 2, ione] = 1.0
        return out

    def gamma_fn(x, y):
        out = np.broadcast_to(np.eye(D), (x.shape[0], D, D)).copy()
        out[:, ixi, ith] = np.asarray(F(x), dtype=float) - np.asarray(F(y), dtype=float)
        return out

    def weights(pts):
        w = np.zeros((pts.shape[0], D))
        w[:, ixi] = 1.0
        w[:, ith] = -np.asarray(F(pts), dtype=float)
        return w

    return Model(structure, gens, coeff_fn, gamma_fn, filt, name, False, perturbation_weights=weights)


def zero_model(structure: RegularityStructure, filt: RefinementFilter) -> Model:
    """Pi = 0, Gamma = identity."""
    D = structure.dim
    return Model(structure, [MonomialGenerator((0,) * structure.scaling.d, filt)],
                 lambda pts: np.zeros((pts.shape[0], 1, D)),
                 lambda x, y: np.broadcast_to(np.eye(D), (x.shape[0], D, D)).copy(), filt, "zero", True)


# --------------------------------------------------------------------------
# estimates


def default_lambda_grid(levels: int = 8) -> np.ndarray:
    return 2.0 ** -np.arange(levels + 1)


def _grid_points(sample_points, scaling) -> DyadicGrid:
    if isinstance(sample_points, DyadicGrid):
        return sample_points
    raise InputError("sample points must be given as a DyadicGrid")


def pi_values(model: Model, member, lam: float, grid: DyadicGrid, level: int | None = None) -> np.ndarray:
    """<Pi_x tau_j, eta^lam_x> for every grid point x and basis symbol j.
    Returns (n_points, dim T)."""
    P = generator_pairings(model, member, lam, grid, level)          # (n_pts, n_gen)
    C = model.coefficients(grid.points)                                # (n_pts, n_gen, D)
    return np.einsum("pg,pgd->pd", P, C)


def generator_pairings(model: Model, member, lam: float, grid: DyadicGrid, level: int | None = None):
    """<D_i, eta^lam_x> for every grid point x and generator i: (n_pts, n_gen)."""
    s = model.scaling
    M = max(model.native_level, grid.n, 1) if level is None else level
    levels = tuple(M * si for si in s.s)
    region = grid.domain.fatten(float(lam), s)
    wins = index_window(region, levels, model.filt.support_length, margin=2)
    field_ = model.generator_field(levels, wins)
    return pair_on_grid(field_, member, lam, grid, model.filt).T


def _check_grids(dictionary, lam_grid):
    if dictionary is None or len(dictionary) == 0:
        raise InputError("empty test-function dictionary")
    lam_grid = np.asarray(lam_grid, dtype=float)
    if lam_grid.size == 0:
        raise InputError("empty lambda grid")
    if np.any(lam_grid <= 0) or np.any(lam_grid > 1):
        raise InputError("lambda values must lie in (0, 1]")
    return lam_grid


def estimate_pi_norm(model: Model, gamma, dictionary: TestFunctionDictionary, lam_grid, sample_points,
                     level: int | None = None, details: bool = False):
    """max |<Pi_x tau, eta^lam_x>| / lam^alpha over sample points, dictionary
    members, lambdas and basis symbols tau of homogeneity alpha <= gamma."""
    lam_grid = _check_grids(dictionary, lam_grid)
    grid = _grid_points(sample_points, model.scaling)
    g = as_fraction(gamma)
    st = model.structure
    cols = [j for j, sym in enumerate(st.symbols) if sym.homogeneity <= g]
    hom = st.homogeneities[cols]
    best, arg = 0.0, None
    for mi, member in enumerate(dictionary):
        for lam in lam_grid:
            V = pi_values(model, member, lam, grid, level)[:, cols]
            ratio = np.abs(V) / lam ** hom
            m = float(ratio.max()) if ratio.size else 0.0
            if m > best:
                best = m
                p, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
                arg = {"member": mi, "lambda": float(lam), "point": grid.points[p].tolist(),
                       "symbol": st.symbols[cols[j]].label}
    model.bound_cache[("pi", str(g))] = best
    return (best, arg) if details else best


def sample_pairs(grid: DyadicGrid, count: int, seed: int = 0, max_dist: float = 1.0) -> np.ndarray:
    """Deterministic random pairs of distinct grid points within scaled
    distance max_dist.  Returns (count, 2, d)."""
    if max_dist < 2.0 ** (-grid.n) or grid.size < 2:
        raise InputError(f"no distinct grid points lie within distance {max_dist} of each other")
    rng = np.random.default_rng(seed)
    pts = grid.points
    out = []
    while len(out) < count:
        i = rng.integers(0, len(pts), size=2 * count)
        j = rng.integers(0, len(pts), size=2 * count)
        dist = scaled_norm(pts[i] - pts[j], grid.scaling)
        ok = (dist > 0) & (dist <= max_dist)
        out.extend(np.stack([pts[i[ok]], pts[j[ok]]], axis=1))
    return np.asarray(out[:count])


def estimate_gamma_norm(model: Model, gamma, pairs) -> float:
    """max ||Gamma_{x,y} tau||_beta / ||x - y||^(alpha - beta) over pairs,
    basis symbols tau of homogeneity alpha <= gamma and beta <= alpha."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 3 or pairs.shape[1] != 2:
        raise InputError("pairs must have shape (count, 2, d)")
    x, y = pairs[:, 0], pairs[:, 1]
    dist = scaled_norm(x - y, model.scaling)
    keep = dist > 0
    x, y, dist = x[keep], y[keep], dist[keep]
    if x.shape[0] == 0:
        raise InputError("no distinct sample pairs")
    G = model.gamma_matrix(x, y)
    st = model.structure
    g = as_fraction(gamma)
    best = 0.0
    for j, sym in enumerate(st.symbols):
        a = sym.homogeneity
        if a > g:
            continue
        for b in st.index_set:
            if b > a:
                continue
            sl = st.sector(b)
            nrm = np.linalg.norm(G[:, sl, j], axis=1)
            best = max(best, float(np.max(nrm / dist ** float(a - b))))
    model.bound_cache[("gamma", str(g))] = best
    return best


def model_distance(m1: Model, m2: Model, gamma, dictionary, lam_grid, sample_points, pairs,
                   level: int | None = None) -> tuple:
    """(||Pi - Pi_bar||, ||Gamma - Gamma_bar||) estimated on the given grids,
    over homogeneities strictly below gamma."""
    if m1.structure != m2.structure:
        raise InputError("models live on different structures")
    lam_grid = _check_grids(dictionary, lam_grid)
    grid = _grid_points(sample_points, m1.scaling)
    st = m1.structure
    g = as_fraction(gamma)
    cols = [j for j, sym in enumerate(st.symbols) if sym.homogeneity < g]
    hom = st.homogeneities[cols]
    lev = max(m1.native_level, m2.native_level, grid.n, 1) if level is None else level
    dpi = 0.0
    for member in dictionary:
        for lam in lam_grid:
            V = pi_values(m1, member, lam, grid, lev)[:, cols] - pi_values(m2, member, lam, grid, lev)[:, cols]
            if V.size:
                dpi = max(dpi, float(np.max(np.abs(V) / lam ** hom)))
    pairs = np.asarray(pairs, dtype=float)
    x, y = pairs[:, 0], pairs[:, 1]
    dist = scaled_norm(x - y, m1.scaling)
    keep = dist > 0
    x, y, dist = x[keep], y[keep], dist[keep]
    G = m1.gamma_matrix(x, y) - m2.gamma_matrix(x, y)
    dg = 0.0
    for j in cols:
        a = st.symbols[j].homogeneity
        for b in st.index_set:
            if b > a:
                continue
            nrm = np.linalg.norm(G[:, st.sector(b), j], axis=1)
            dg = max(dg, float(np.max(nrm / dist ** float(a - b))))
    return dpi, dg


@dataclass
class AlgebraReport:
    identity_defect: float
    cocycle_defect: float
    compatibility_defect: float
    exact_cocycle_defect: float | None
    triples: int
    pairs: int
    tolerance: float

    @property
    def passed(self) -> bool:
        vals = [self.identity_defect, self.cocycle_defect, self.compatibility_defect]
        if self.exact_cocycle_defect is not None:
            vals.append(self.exact_cocycle_defect)
        return all(v < self.tolerance for v in vals)

    def to_dict(self) -> dict:
        return {"identity_defect": self.identity_defect, "cocycle_defect": self.cocycle_defect,
                "compatibility_defect": self.compatibility_defect,
                "exact_cocycle_defect": self.exact_cocycle_defect, "triples": self.triples,
                "pairs": self.pairs, "tolerance": self.tolerance, "passed": self.passed}


def check_model_algebra(model: Model, grid: DyadicGrid, count: int = 1000, seed: int = 0,
                        dictionary=None, lam: float = 0.5, tol: float = 1e-8, exact_count: int = 50) -> AlgebraReport:
    """Defects of Gamma_{x,x} = 1, Gamma_{x,y} Gamma_{y,z} = Gamma_{x,z} and
    <Pi_y tau, eta> = <Pi_x Gamma_{x,y} tau, eta> over random grid samples."""
    rng = np.random.default_rng(seed)
    pts = grid.points
    i, j, k = (rng.integers(0, len(pts), size=count) for _ in range(3))
    x, y, z = pts[i], pts[j], pts[k]
    D = model.structure.dim
    ident = float(np.max(np.abs(model.gamma_matrix(x, x) - np.eye(D))))
    lhs = np.einsum("pab,pbc->pac", model.gamma_matrix(x, y), model.gamma_matrix(y, z))
    cocycle = float(np.max(np.abs(lhs - model.gamma_matrix(x, z))))
    exact = None
    if model.exact_gamma_fn is not None:
        exact = 0.0
        for q in range(min(exact_count, count)):
            fx = [Fraction(v).limit_denominator(2 ** 40) for v in x[q]]
            fy = [Fraction(v).limit_denominator(2 ** 40) for v in y[q]]
            fz = [Fraction(v).limit_denominator(2 ** 40) for v in z[q]]
            A = model.exact_gamma_fn(fx, fy).dot(model.exact_gamma_fn(fy, fz))
            B = model.exact_gamma_fn(fx, fz)
            exact = max(exact, float(max(abs(a - b) for a, b in zip(A.ravel(), B.ravel()))))
    # compatibility: test centred at y, paired against both expansions
    if dictionary is None:
        from .testfunctions import standard_dictionary

        dictionary = standard_dictionary(model.scaling.d, 1, 2)
    compat = 0.0
    for member in dictionary:
        V = generator_pairings(model, member, lam, grid)   # (n_pts, n_gen)
        Pz = V[j]                                          # pairings centred at y
        Cy = model.coefficients(y)                         # (P, gen, D)
        Cx = model.coefficients(x)
        G = model.gamma_matrix(x, y)
        a = np.einsum("pg,pgd->pd", Pz, Cy)
        b = np.einsum("pg,pgd->pd", Pz, np.einsum("pge,ped->pgd", Cx, G))
        compat = max(compat, float(np.max(np.abs(a - b))))
    return AlgebraReport(ident, cocycle, compat, exact, count, count, tol)


# --------------------------------------------------------------------------
# CSV fixtures


def save_expansion_csv(expansion: WaveletExpansion, path):
    """Columns: n, k (one column per axis), mother, coefficient.  Father
    coefficients are written with mother = -1 at n = 0."""
    d = expansion.scaling.d
    kcols = ["k"] if d == 1 else [f"k{i + 1}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n"] + kcols + ["mother", "coefficient"])
        for n, mi, base, v in expansion.rows():
            w.writerow([max(n, 0)] + list(base) + [mi, repr(v)])


def load_expansion_csv(path, scaling, filt: RefinementFilter) -> WaveletExpansion:
    scaling = Scaling.of(scaling)
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        kcols = ["k"] if scaling.d == 1 else [f"k{i + 1}" for i in range(scaling.d)]
        missing = [c for c in ["n", "mother", "coefficient"] + kcols if c not in (reader.fieldnames or [])]
        if missing:
            raise InputError(f"fixture CSV lacks columns {missing}")
        for rec in reader:
            try:
                mi = int(rec["mother"])
                n = int(rec["n"])
                rows.append((-1 if mi < 0 else n, mi, tuple(int(rec[c]) for c in kcols), float(rec["coefficient"])))
            except (TypeError, ValueError) as exc:
                raise InputError(f"malformed fixture row {rec}") from exc
    if not rows:
        raise InputError("fixture CSV holds no coefficients")
    return WaveletExpansion.from_rows(rows, scaling, filt)
