"""Modelled distributions sampled on dyadic grids and their norms.

The h-integral of the Besov-type norm is discretized on dyadic shells
||h|| in (2^-j-1, 2^-j], each carrying the mass 2^d |s| ln 2 of the measure
dh / ||h||^|s|, shared equally among the grid translates that fall in it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import InputError
from .geometry import Box, DyadicGrid, Scaling, make_grid, multi_indices, scaled_norm
from .structure import GradedVector, RegularityStructure, as_fraction
from .testfunctions import TestFunctionDictionary

LN2 = math.log(2.0)


@dataclass(frozen=True)
class BesovParams:
    """gamma, integrability exponents and shell depth.  q = math.inf selects
    the supremum over h instead of the L^q integral."""

    gamma: Fraction
    p: float = 2.0
    q: float = 2.0
    shells: int = 6
    max_translates: int | None = 4096

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        if not (1.0 <= self.p < math.inf):
            raise InputError(f"p must lie in [1, inf), got {self.p}")
        if not (self.q >= 1.0):
            raise InputError(f"q must be at least 1, got {self.q}")
        if self.shells < 0:
            raise InputError("shell depth must be non-negative")

    @property
    def q_infinite(self) -> bool:
        return math.isinf(self.q)

    def with_gamma(self, gamma) -> "BesovParams":
        return BesovParams(gamma, self.p, self.q, self.shells, self.max_translates)


class ModelledDistribution:
    """Jets f(x) in T_gamma^- at the nodes of a dyadic grid.

    `values` has shape (grid.size, dim T); components of homogeneity >= gamma
    are dropped on construction.  `domain` is the compact set K; the grid is
    expected to cover its fattening.
    """

    def __init__(self, structure: RegularityStructure, gamma, grid: DyadicGrid, values, domain: Box | None = None):
        self.structure = structure
        self.gamma = as_fraction(gamma)
        self.grid = grid
        vals = np.array(values, dtype=float)
        if vals.shape != (grid.size, structure.dim):
            raise InputError(f"values must have shape {(grid.size, structure.dim)}, got {vals.shape}")
        vals[:, ~structure.mask_below(self.gamma)] = 0.0
        self.values = vals
        self.domain = grid.domain if domain is None else Box.of(domain)

    # construction helpers
    @classmethod
    def zero(cls, structure, gamma, grid, domain=None):
        return cls(structure, gamma, grid, np.zeros((grid.size, structure.dim)), domain)

    @classmethod
    def constant(cls, structure, gamma, grid, jet, domain=None):
        jet = jet.coeffs if isinstance(jet, GradedVector) else np.asarray(jet, dtype=float)
        return cls(structure, gamma, grid, np.tile(jet, (grid.size, 1)), domain)

    @classmethod
    def from_function(cls, structure, gamma, grid, func, domain=None):
        """Jets given by func(points) -> (P, dim T)."""
        return cls(structure, gamma, grid, func(grid.points), domain)

    def _like(self, values):
        return ModelledDistribution(self.structure, self.gamma, self.grid, values, self.domain)

    def _check(self, other):
        if other.structure != self.structure or other.grid != self.grid:
            raise InputError("modelled distributions live on different structures or grids")

    def __add__(self, other):
        self._check(other)
        return self._like(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self._like(self.values - other.values)

    def __mul__(self, c):
        return self._like(float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def at(self, x) -> GradedVector:
        """The jet at the grid node nearest to x."""
        return GradedVector(self.structure, self.values[int(self.grid.nearest(np.atleast_2d(x))[0])])

    def restrict(self, grid: DyadicGrid) -> "ModelledDistribution":
        """Samples on a coarser grid whose nodes are nodes of this one."""
        if not self.grid.contains_grid(grid):
            raise InputError("target grid is not a subgrid of the sampling grid")
        idx = self.grid.locate(grid.points)
        return ModelledDistribution(self.structure, self.gamma, grid, self.values[idx], self.domain)

    # CSV: coordinates, homogeneity, component index within the sector, value
    def to_csv(self, path):
        st = self.structure
        d = self.grid.d
        xcols = ["x"] if d == 1 else [f"x{i + 1}" for i in range(d)]
        pts = self.grid.points
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(xcols + ["homogeneity", "component", "value"])
            for a in st.below(self.gamma):
                sl = st.sector(a)
                for c in range(sl.stop - sl.start):
                    col = self.values[:, sl.start + c]
                    for p in range(len(pts)):
                        w.writerow([repr(float(v)) for v in pts[p]] + [str(a), c, repr(float(col[p]))])

    @classmethod
    def from_csv(cls, path, structure, gamma, grid, domain=None):
        vals = np.zeros((grid.size, structure.dim))
        d = grid.d
        xcols = ["x"] if d == 1 else [f"x{i + 1}" for i in range(d)]
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                try:
                    x = np.array([[float(rec[c]) for c in xcols]])
                    a = Fraction(rec["homogeneity"])
                    c = int(rec["component"])
                    v = float(rec["value"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise InputError(f"malformed modelled-distribution row {rec}") from exc
                sl = structure.sector(a)
                if c >= sl.stop - sl.start:
                    raise InputError(f"component {c} out of range for homogeneity {a}")
                vals[grid.locate(x)[0], sl.start + c] = v
        return cls(structure, gamma, grid, vals, domain)


def lift_holder(structure: RegularityStructure, gamma, grid: DyadicGrid, derivatives: dict,
                domain: Box | None = None) -> ModelledDistribution:
    """Taylor jet x -> sum_{|k|_s < gamma} d^k g(x) / k! X^k.

    `derivatives` maps multi-index tuples to callables on (P, d) point arrays
    or to arrays of values at the grid nodes."""
    g = as_fraction(gamma)
    if g <= 0:
        raise InputError("the Taylor lift needs gamma > 0")
    if structure.kind != "polynomial":
        raise InputError("the Taylor lift needs a polynomial structure")
    s = structure.scaling
    needed = [k for k in multi_indices(s, math.ceil(g)) if k.degree(s) < g]
    vals = np.zeros((grid.size, structure.dim))
    pts = grid.points
    for k in needed:
        key = tuple(k.k)
        if key not in derivatives:
            raise InputError(f"missing derivative data for multi-index {key}")
        src = derivatives[key]
        col = np.asarray(src(pts) if callable(src) else src, dtype=float).reshape(-1)
        if col.shape != (grid.size,):
            raise InputError(f"derivative {key} has {col.size} values for {grid.size} nodes")
        vals[:, structure.index_of(_label_of(structure, key))] = col / k.factorial
    return ModelledDistribution(structure, g, grid, vals, domain)


def _label_of(structure, k):
    for sym in structure.symbols:
        if sym.monomial is not None and tuple(sym.monomial) == tuple(k):
            return sym.label
    raise InputError(f"no symbol for monomial {k}")


# --------------------------------------------------------------------------
# shells and transported increments


def shell_offsets(grid: DyadicGrid, j: int) -> np.ndarray:
    """Integer translates m (h = m * mesh) with ||h||_s in (2^-j-1, 2^-j]."""
    s = grid.scaling
    R = 2.0 ** (-j)
    bound = [int(math.floor(R ** si / h + 1e-9)) for si, h in zip(s.s, grid.mesh)]
    axes = [np.arange(-b, b + 1) for b in bound]
    m = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=-1)
    nrm = scaled_norm(m * np.asarray(grid.mesh), s)
    keep = (nrm > R / 2 * (1 + 1e-12)) & (nrm <= R * (1 + 1e-12))
    return m[keep]


def _thin(m: np.ndarray, cap: int | None) -> np.ndarray:
    if cap is None or len(m) <= cap:
        return m
    idx = np.unique(np.linspace(0, len(m) - 1, cap).round().astype(int))
    return m[idx]


@dataclass
class ShellSamples:
    j: int
    offsets: np.ndarray     # integer translates
    norms: np.ndarray       # ||h||_s
    weight: float           # mass per translate


def shell_samples(grid: DyadicGrid, first: int, last: int, cap: int | None) -> list:
    """Shells j = first..last (first may be negative for radii above 1)."""
    s = grid.scaling
    mass = 2 ** s.d * s.size * LN2
    out = []
    for j in range(first, last + 1):
        m = _thin(shell_offsets(grid, j), cap)
        if len(m) == 0:
            raise InputError(f"sampling grid of level {grid.n} is too coarse for shell {j}; refine it")
        out.append(ShellSamples(j, m, scaled_norm(m * np.asarray(grid.mesh), s), mass / len(m)))
    return out


def _flat_offsets(grid: DyadicGrid, m: np.ndarray) -> np.ndarray:
    strides = np.ones(grid.d, dtype=np.int64)
    for i in range(grid.d - 2, -1, -1):
        strides[i] = strides[i + 1] * grid.shape[i + 1]
    return m.astype(np.int64) @ strides


def _sector_bounds(structure, gamma):
    A = structure.below(gamma)
    bounds = [structure.sector(a).start for a in A] + [structure.sector(A[-1]).stop]
    return A, np.asarray(bounds, dtype=np.int64)


def _transport(model, grid: DyadicGrid, values: np.ndarray, shells: list):
    """(Y, P, Qs) such that P[x+h] (Y[x+h] - Q[h] Y[x]) = f(x+h) - Gamma_{x+h,x} f(x)."""
    mesh = np.asarray(grid.mesh)
    if model.translation_invariant:
        Qs = []
        for sh in shells:
            h = sh.offsets * mesh
            Qs.append(model.gamma_matrix(h, np.zeros_like(h)))
        return values, None, Qs
    to_anchor, from_anchor = model.anchor_factors(grid.points)[1], model.anchor_factors(grid.points)[0]
    Y = np.einsum("pab,pb->pa", to_anchor, values)
    return Y, from_anchor, [None] * len(shells)


def _transport_two(m1, m2, grid, v1, v2, shells):
    """Stacked transport for mixed increments f - g - Gamma f + Gamma_bar g."""
    D = v1.shape[1]
    mesh = np.asarray(grid.mesh)
    if m1.translation_invariant and m2.translation_invariant:
        Y = np.concatenate([v1, v2], axis=1)
        P = np.broadcast_to(np.concatenate([np.eye(D), -np.eye(D)], axis=1), (grid.size, D, 2 * D))
        Qs = []
        for sh in shells:
            h = sh.offsets * mesh
            z = np.zeros_like(h)
            G1, G2 = m1.gamma_matrix(h, z), m2.gamma_matrix(h, z)
            Q = np.zeros((len(h), 2 * D, 2 * D))
            Q[:, :D, :D] = G1
            Q[:, D:, D:] = G2
            Qs.append(Q)
        return Y, np.ascontiguousarray(P), Qs
    a1, b1 = m1.anchor_factors(grid.points)
    a2, b2 = m2.anchor_factors(grid.points)
    Y = np.concatenate([np.einsum("pab,pb->pa", b1, v1), np.einsum("pab,pb->pa", b2, v2)], axis=1)
    P = np.concatenate([a1, -a2], axis=2)
    return Y, P, [None] * len(shells)


def _require_cover(grid: DyadicGrid, K: Box, R: float):
    need = K.fatten(R, grid.scaling)
    if not grid.domain.contains_box(need, tol=1e-9):
        raise InputError(f"sampling grid over {grid.domain.as_list()} does not cover the {R:g}-fattening "
                         f"{need.as_list()} of the domain")


def _oscillation(Y, P, Qs, grid, K, shells, A, bounds, gamma, params) -> dict:
    """Per-sector h-integral term and the per-shell families it is built from."""
    w = grid.weights(K)
    base = np.flatnonzero(w > 0)
    wb = w[base]
    fam = {a: [] for a in A}
    totals = np.zeros(len(A))
    for sh, Q in zip(shells, Qs):
        offs = _flat_offsets(grid, sh.offsets)
        S = kernels.increment_norms(Y, P, Q, offs, base, wb, bounds, params.p, False)   # (n_off, n_sec)
        Lp = S ** (1.0 / params.p)
        for li, a in enumerate(A):
            vals = Lp[:, li] / sh.norms ** float(gamma - a)
            fam[a].append(vals)
            if params.q_infinite:
                totals[li] = max(totals[li], float(vals.max(initial=0.0)))
            else:
                totals[li] += sh.weight * float(np.sum(vals ** params.q))
    if not params.q_infinite:
        totals = totals ** (1.0 / params.q)
    return {a: (float(totals[li]), fam[a]) for li, a in enumerate(A)}


@dataclass
class NormBreakdown:
    """Per-sector pieces of a Besov-type norm of a modelled distribution."""

    level: dict
    oscillation: dict
    families: dict = field(default_factory=dict, repr=False)
    combine: str = "sum"

    @property
    def total(self) -> float:
        if self.combine == "max":
            return max((self.level[a] + self.oscillation[a] for a in self.level), default=0.0)
        return float(sum(self.level.values()) + sum(self.oscillation.values()))

    def to_dict(self) -> dict:
        return {"level": {str(a): v for a, v in self.level.items()},
                "oscillation": {str(a): v for a, v in self.oscillation.items()},
                "total": self.total}


def _level_terms(values, grid, box, A, bounds, p):
    w = grid.weights(box)
    out = {}
    for li, a in enumerate(A):
        nrm = np.linalg.norm(values[:, bounds[li]:bounds[li + 1]], axis=1)
        out[a] = float(np.sum(w * nrm ** p) ** (1.0 / p))
    return out


def besov_breakdown(f: ModelledDistribution, model, params: BesovParams, K: Box | None = None) -> NormBreakdown:
    K = f.domain if K is None else Box.of(K)
    if model.structure != f.structure:
        raise InputError("model and modelled distribution use different structures")
    gamma = params.gamma
    A, bounds = _sector_bounds(f.structure, gamma)
    grid = f.grid
    _require_cover(grid, K, 1.0)
    if grid.n < params.shells + 2:
        raise InputError(f"sampling level {grid.n} must exceed the finest shell {params.shells} by 2")
    level = _level_terms(f.values, grid, K.fatten(1.0, grid.scaling), A, bounds, params.p)
    shells = shell_samples(grid, 0, params.shells, params.max_translates)
    Y, P, Qs = _transport(model, grid, f.values, shells)
    osc = _oscillation(Y, P, Qs, grid, K, shells, A, bounds, gamma, params)
    return NormBreakdown(level, {a: v[0] for a, v in osc.items()}, {a: v[1] for a, v in osc.items()})


def besov_norm(f: ModelledDistribution, model, params: BesovParams, K: Box | None = None) -> float:
    """Discretized |||f|||_{gamma,p,q,K}."""
    return besov_breakdown(f, model, params, K).total


def radius_c_oscillation(f: ModelledDistribution, model, params: BesovParams, C: float,
                         K: Box | None = None) -> float:
    """The h-integral term of the norm with the unit ball replaced by B(0, C),
    summed over sectors.  Shells are those of the unit-ball norm plus the
    dyadic shells up to radius C (a partial top shell keeps the per-translate
    mass of the full shell, so the value is monotone in C)."""
    if C <= 0:
        raise InputError("radius must be positive")
    K = f.domain if K is None else Box.of(K)
    gamma = params.gamma
    A, bounds = _sector_bounds(f.structure, gamma)
    grid = f.grid
    _require_cover(grid, K, max(C, 1.0))
    if grid.n < params.shells + 2:
        raise InputError(f"sampling level {grid.n} must exceed the finest shell {params.shells} by 2")
    first = -math.ceil(math.log2(C) - 1e-12)
    shells = shell_samples(grid, first, params.shells, params.max_translates)
    top = shells[0]
    keep = top.norms <= C * (1 + 1e-12)
    shells[0] = ShellSamples(top.j, top.offsets[keep], top.norms[keep], top.weight)
    shells = [sh for sh in shells if len(sh.offsets)]
    Y, P, Qs = _transport(model, grid, f.values, shells)
    osc = _oscillation(Y, P, Qs, grid, K, shells, A, bounds, gamma, params)
    return float(sum(v[0] for v in osc.values()))


def holder_norm(f: ModelledDistribution, model, gamma=None, K: Box | None = None) -> float:
    """Discretized |||f|||_{gamma,K}: sup of |f(x)|_alpha over K plus the sup
    of |f(x+h) - Gamma_{x+h,x} f(x)|_alpha / ||h||^(gamma-alpha) over grid
    pairs in K at scaled distance at most 1."""
    K = f.domain if K is None else Box.of(K)
    gamma = f.gamma if gamma is None else as_fraction(gamma)
    A, bounds = _sector_bounds(f.structure, gamma)
    grid = f.grid
    w = grid.weights(K)
    inside = w > 0
    total = 0.0
    for li, a in enumerate(A):
        nrm = np.linalg.norm(f.values[inside, bounds[li]:bounds[li + 1]], axis=1)
        total += float(nrm.max(initial=0.0))
    shells = shell_samples(grid, 0, grid.n, None) if grid.n > 0 else []
    shells = [sh for sh in shells if len(sh.offsets)]
    if not shells:
        return total
    Y, P, Qs = _transport(model, grid, f.values, shells)
    ids = grid.multi_index(np.arange(grid.size))
    best = np.zeros(len(A))
    for sh, Q in zip(shells, Qs):
        for o, m in enumerate(sh.offsets):
            tgt = ids + m
            ok = inside & np.all((tgt >= 0) & (tgt < np.asarray(grid.shape)), axis=1)
            base = np.flatnonzero(ok)
            base = base[inside[np.ravel_multi_index(tuple(tgt[base].T), grid.shape)]]
            if base.size == 0:
                continue
            off = _flat_offsets(grid, m[None])
            S = kernels.increment_norms(Y, P, None if Q is None else Q[o:o + 1], off, base,
                                        np.ones(base.size), bounds, 1.0, True)
            best = np.maximum(best, S[0] / sh.norms[o] ** np.array([float(gamma - a) for a in A]))
    return total + float(best.sum())


def two_model_seminorm(f: ModelledDistribution, g: ModelledDistribution, model1, model2, params: BesovParams,
                       K: Box | None = None) -> float:
    """Discretized |||f; g|||: maximum over sectors of the level term of f - g
    plus the h-integral of the mixed increments."""
    f._check(g)
    if model1.structure != model2.structure or model1.structure != f.structure:
        raise InputError("models and modelled distributions must share one structure")
    b = two_model_breakdown(f, g, model1, model2, params, K)
    return b.total


def two_model_breakdown(f, g, model1, model2, params: BesovParams, K: Box | None = None) -> NormBreakdown:
    K = f.domain if K is None else Box.of(K)
    gamma = params.gamma
    A, bounds = _sector_bounds(f.structure, gamma)
    grid = f.grid
    _require_cover(grid, K, 1.0)
    if grid.n < params.shells + 2:
        raise InputError(f"sampling level {grid.n} must exceed the finest shell {params.shells} by 2")
    level = _level_terms(f.values - g.values, grid, K, A, bounds, params.p)
    shells = shell_samples(grid, 0, params.shells, params.max_translates)
    Y, P, Qs = _transport_two(model1, model2, grid, f.values, g.values, shells)
    osc = _oscillation(Y, P, Qs, grid, K, shells, A, bounds, gamma, params)
    return NormBreakdown(level, {a: v[0] for a, v in osc.items()}, {a: v[1] for a, v in osc.items()},
                         combine="max")


# --------------------------------------------------------------------------
# Besov norms of distributions


def lambda_lq(values_by_lambda: list, q: float) -> float:
    """L^q(dlambda / lambda) of dyadic samples lambda_j = 2^-j, ln 2 each."""
    v = np.asarray(values_by_lambda, dtype=float)
    if math.isinf(q):
        return float(v.max(initial=0.0))
    return float((LN2 * np.sum(v ** q)) ** (1.0 / q))


def distribution_besov_norm(pairing, alpha, p: float, q: float, r: int, dictionary: TestFunctionDictionary,
                            lam_grid, grid: DyadicGrid, K: Box | None = None) -> float:
    """|| || sup_eta |<xi, eta^lam_x>| / lam^alpha ||_{L^p(K)} ||_{L^q_lam}.

    `pairing(member, lam, grid)` returns <xi, eta^lam_x> at every grid node.
    lam_grid must be dyadic (2^-j); each value carries the weight ln 2."""
    alpha = float(alpha)
    if dictionary.r < r or r <= abs(min(alpha, 0.0)):
        raise InputError(f"dictionary regularity {dictionary.r} must be at least r = {r} > |alpha|")
    if not (1.0 <= p < math.inf) or not q >= 1.0:
        raise InputError("need 1 <= p < inf and q >= 1")
    K = grid.domain if K is None else Box.of(K)
    w = grid.weights(K)
    per_lambda = []
    for lam in np.asarray(lam_grid, dtype=float):
        sup = np.zeros(grid.size)
        for member in dictionary:
            sup = np.maximum(sup, np.abs(np.asarray(pairing(member, lam, grid), dtype=float).reshape(-1)))
        per_lambda.append(float(np.sum(w * (sup / lam ** alpha) ** p) ** (1.0 / p)))
    return lambda_lq(per_lambda, q)
