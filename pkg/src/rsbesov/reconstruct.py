"""Reconstruction of modelled distributions from local wavelet data.

For gamma < 0 the coefficients are

    b_x = <Pi_x fbar^0(x), phi^0_x>,   a^{n,psi}_x = <Pi_x fbar^n(x), psi^n_x>,

with fbar^n(x) the average of Gamma_{x,y} f(y) over the scaled ball
B(x, 2^-n).  For gamma > 0 the father coefficients at level n_max + 1 are
formed the same way and the result is re-expanded; this is the classical
construction, which converges to the unique reconstruction.

Everything is computed in coefficient space: each model generator D_i is
projected once onto V_M and decomposed, and a coefficient is the sum over
generators of C(x) fbar(x) times the generator's own coefficient.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .besov import BesovParams, ModelledDistribution, besov_norm, lambda_lq, two_model_seminorm
from .errors import ConfigurationError, InputError
from .geometry import Box, DyadicGrid, Scaling, make_grid, scaled_norm
from .model import Model, generator_pairings, index_window
from .structure import GradedVector, as_fraction
from .testfunctions import PlacedTest, WaveletElement, pair_on_grid
from .transform import LevelVector, WaveletExpansion, block_levels, coarsen, refine
from .wavelets import RefinementFilter, WaveletBasis, mother_set


def _filter_of(basis) -> RefinementFilter:
    return basis.filter if isinstance(basis, WaveletBasis) else basis


def evaluation_region(K: Box, scaling: Scaling) -> Box:
    """Where the reconstruction must be accurate: the 1-fattening of K."""
    return K.fatten(1.0, scaling)


def sampling_box(K: Box, basis, scaling) -> Box:
    """Box the modelled distribution must be sampled on so that every
    coefficient whose basis element meets the evaluation region can be formed."""
    filt = _filter_of(basis)
    E = evaluation_region(Box.of(K), Scaling.of(scaling))
    pad = filt.support_length + 2
    return Box(tuple(a - pad for a in E.lo), tuple(b + pad for b in E.hi))


def _base_window(E: Box, n: int, scaling: Scaling, filt: RefinementFilter) -> list:
    """Indices of Lambda_n nodes whose level-n basis elements can meet E."""
    S, N = filt.support_length, filt.order
    out = []
    for lo, hi, si in zip(E.lo, E.hi, scaling.s):
        f = 2.0 ** (n * si)
        out.append((math.floor(lo * f) - S - 1, math.ceil(hi * f) + N + 1))
    return out


# --------------------------------------------------------------------------
# local averages


@dataclass
class FbarTable:
    """fbar^n at the nodes of Lambda_n covered by the sampling grid."""

    n: int
    index_lo: tuple
    values: np.ndarray          # shape (*counts, dim T)

    def window(self, i):
        return self.index_lo[i], self.index_lo[i] + self.values.shape[i] - 1

    def covers(self, windows) -> bool:
        return all(self.window(i)[0] <= lo and hi <= self.window(i)[1] for i, (lo, hi) in enumerate(windows))


def _box_sum(arr, axis, w, rule):
    """Sum over the closed window [k - w, k + w] along axis for every k whose
    window fits; returns (sums, first valid index)."""
    L = arr.shape[axis]
    if L < 2 * w + 1:
        return None, 0
    c = np.cumsum(arr, axis=axis)
    zero = np.zeros_like(np.take(c, [0], axis=axis))
    c = np.concatenate([zero, c], axis=axis)
    hi = np.take(c, np.arange(2 * w + 1, L + 1), axis=axis)
    lo = np.take(c, np.arange(0, L - 2 * w), axis=axis)
    out = hi - lo
    if rule == "trapezoid" and w > 0:
        out = out - 0.5 * (np.take(arr, np.arange(0, L - 2 * w), axis=axis)
                           + np.take(arr, np.arange(2 * w, L), axis=axis))
    return out, w


def _apply(A, V):
    """out[b, p, i] = sum_j A[p, i, j] V[b, p, j] for small matrices A."""
    out = np.zeros(V.shape[:-1] + (A.shape[1],))
    for i in range(A.shape[1]):
        for j in range(A.shape[2]):
            a = A[:, i, j]
            if np.any(a != 0):
                out[..., i] += a * V[..., j]
    return out


def _fbar_batch(values, grid: DyadicGrid, model: Model, n: int, rule: str):
    """Batched fbar^n: values (B, P, D) -> (index_lo, array (B, *counts, D))."""
    if rule not in ("riemann", "trapezoid"):
        raise InputError(f"unknown averaging rule {rule!r}")
    s = grid.scaling
    if n > grid.n:
        raise InputError(f"sampling level {grid.n} is coarser than the averaging level {n}")
    B, _, D = values.shape
    to_anchor = model.anchor_factors(grid.points)[1]
    Y = _apply(to_anchor, values)
    Y = Y.reshape((B,) + grid.shape + (D,))
    widths = [2 ** ((grid.n - n) * si) for si in s.s]
    starts = []
    weight = 1.0
    for ax, w in enumerate(widths):
        Y, first = _box_sum(Y, ax + 1, w, rule)
        if Y is None:
            raise InputError(f"no complete ball of radius 2^-{n} inside the sampling grid")
        starts.append(grid.index_lo[ax] + first)
        weight *= (2 * w + 1) if rule == "riemann" or w == 0 else 2 * w
    Y = Y / weight
    sel, lo_n = [], []
    for ax, (st, w) in enumerate(zip(starts, widths)):
        idx = st + np.arange(Y.shape[ax + 1])
        keep = np.flatnonzero(idx % w == 0)
        if keep.size == 0:
            raise InputError(f"no node of Lambda_{n} inside the sampling grid")
        sel.append(keep)
        lo_n.append(int(idx[keep[0]] // w))
    Y = Y[(slice(None),) + np.ix_(*sel)]
    counts = Y.shape[1:-1]
    axes = [(lo + np.arange(c)) * 2.0 ** (-n * si) for lo, c, si in zip(lo_n, counts, s.s)]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=-1)
    from_anchor = model.anchor_factors(pts)[0]
    vals = _apply(from_anchor, Y.reshape(B, -1, D))
    return tuple(lo_n), vals.reshape((B,) + counts + (D,)), pts


def fbar_table(f: ModelledDistribution, model: Model, n: int, rule: str = "riemann") -> FbarTable:
    """fbar^n(x) for every x in Lambda_n whose scaled ball B(x, 2^-n) lies in
    the sampling grid.  The average is normalized to total weight one."""
    lo, vals, _ = _fbar_batch(f.values[None], f.grid, model, n, rule)
    return FbarTable(n, lo, vals[0])


def fbar(f: ModelledDistribution, model: Model, n: int, x, rule: str = "riemann") -> GradedVector:
    """fbar^n at a single node x of Lambda_n, by direct summation over the
    sample points in the closed ball."""
    grid = f.grid
    s = grid.scaling
    x = np.asarray(x, dtype=float).reshape(1, -1)
    kf = x[0] * np.array([2.0 ** (n * si) for si in s.s])
    if np.any(np.abs(kf - np.rint(kf)) > 1e-9):
        raise InputError(f"{x[0].tolist()} is not a node of Lambda_{n}")
    if n > grid.n:
        raise InputError("sampling grid is coarser than the averaging level")
    pts = grid.points
    r = 2.0 ** (-n)
    dist = np.abs(pts - x) / np.array([r ** si for si in s.s])
    inside = np.all(dist <= 1 + 1e-12, axis=1)
    if not inside.any():
        raise InputError("no sample points in the averaging ball")
    if not grid.domain.contains_box(Box(tuple(x[0] - [r ** si for si in s.s]), tuple(x[0] + [r ** si for si in s.s])),
                                    tol=1e-12):
        raise InputError("averaging ball leaves the sampling grid")
    w = np.ones(int(inside.sum()))
    if rule == "trapezoid":
        edge = np.isclose(dist[inside], 1.0)
        w = np.prod(np.where(edge, 0.5, 1.0), axis=1)
    elif rule != "riemann":
        raise InputError(f"unknown averaging rule {rule!r}")
    ys = pts[inside]
    G = model.gamma_matrix(np.repeat(x, len(ys), axis=0), ys)
    vals = np.einsum("pab,pb->pa", G, f.values[inside])
    return GradedVector(f.structure, (w[:, None] * vals).sum(axis=0) / w.sum())


# --------------------------------------------------------------------------
# results


@dataclass
class ReconstructionResult:
    """Coefficients of Rf: father coefficients on Lambda_0 and detail
    coefficients for levels 0..n_max, restricted to elements meeting the
    evaluation region."""

    expansion: WaveletExpansion
    n_max: int
    filt: RefinementFilter
    domain: Box
    region: Box
    gamma: object = None

    @property
    def scaling(self) -> Scaling:
        return self.expansion.scaling

    @cached_property
    def top(self) -> LevelVector:
        """Father coefficients at scaled level n_max + 1."""
        return self.expansion.synthesize(self.n_max + 1)

    def at_level(self, M: int) -> LevelVector:
        if M < self.n_max + 1:
            raise InputError("evaluation level below the reconstruction depth")
        return refine(self.top, self.scaling, self.filt, M - self.n_max - 1)

    def coefficient(self, n: int, mother, k) -> float:
        return self.expansion.coefficient(n, mother, k)

    def rows(self):
        return self.expansion.rows()

    def to_csv(self, path):
        d = self.scaling.d
        kcols = ["k"] if d == 1 else [f"k{i + 1}" for i in range(d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "mother"] + kcols + ["value"])
            for n, mi, base, v in self.rows():
                w.writerow([n, mi] + list(base) + [repr(v)])

    @classmethod
    def from_csv(cls, path, scaling, filt: RefinementFilter, n_max: int, domain) -> "ReconstructionResult":
        scaling = Scaling.of(scaling)
        d = scaling.d
        kcols = ["k"] if d == 1 else [f"k{i + 1}" for i in range(d)]
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                try:
                    rows.append((int(rec["n"]), int(rec["mother"]), tuple(int(rec[c]) for c in kcols),
                                 float(rec["value"])))
                except (KeyError, TypeError, ValueError) as exc:
                    raise InputError(f"malformed coefficient row {rec}") from exc
        exp = WaveletExpansion.from_rows(rows, scaling, filt)
        exp = WaveletExpansion(scaling, filt, exp.approx, exp.details + [dict() for _ in range(n_max + 1 - len(exp.details))])
        K = Box.of(domain)
        return cls(exp, n_max, filt, K, evaluation_region(K, scaling))


def coefficient_error(result: ReconstructionResult, target: WaveletExpansion) -> float:
    """max |a - c| between the computed coefficients and those of a target
    expansion, over every element the result keeps (levels 0..n_max)."""
    exp = result.expansion
    err = 0.0
    for n in range(result.n_max + 1):
        for key, G in exp.details[n].items():
            T = target.details[n][key].crop([G.window(i) for i in range(G.d)])
            err = max(err, float(np.max(np.abs(T.coeffs - G.coeffs), initial=0.0)))
    T = target.approx.crop([exp.approx.window(i) for i in range(exp.approx.d)])
    return max(err, float(np.max(np.abs(T.coeffs - exp.approx.coeffs), initial=0.0)))


def _check_basis(structure, filt: RefinementFilter):
    r = filt.regularity
    amin = float(structure.min_homogeneity)
    if amin < 0 and r <= abs(amin):
        raise ConfigurationError(f"basis regularity r = {r} must exceed |min A| = {abs(amin):g}; "
                                 f"use a Daubechies order with more regularity")


def _weights_table(values, grid, model, n, rule) -> tuple:
    """(index_lo, W) with W[b, ..., i] = (C(x) fbar^n_b(x))_i on Lambda_n."""
    lo, fb, pts = _fbar_batch(values, grid, model, n, rule)
    C = model.coefficients(pts)
    B, D = fb.shape[0], fb.shape[-1]
    W = _apply(C, fb.reshape(B, -1, D))
    return lo, W.reshape(fb.shape[:-1] + (W.shape[-1],))


def _gather(W, index_lo, base_idx: list):
    """W at the Cartesian product of per-axis absolute base indices."""
    rel = [np.asarray(b) - lo for b, lo in zip(base_idx, index_lo)]
    for i, r in enumerate(rel):
        if r.min() < 0 or r.max() >= W.shape[i + 1]:
            raise InputError("sampling grid does not cover every base point the reconstruction needs; "
                             "enlarge it to sampling_box(K, basis, scaling)")
    return W[(slice(None),) + np.ix_(*rel)]


def _combine(G: LevelVector, Wg: np.ndarray) -> np.ndarray:
    """sum_i G.coeffs[i, ...] * Wg[b, ..., i]."""
    return np.einsum("g...,b...g->b...", G.coeffs, Wg)


def _block_windows(bw, key):
    return [(lo, hi) if b < 0 else (lo << b, (hi << b) + (1 << b) - 1) for (lo, hi), b in zip(bw, key)]


def _reconstruct_values(values, grid, structure, gamma, model, filt, n_max, K, rule) -> WaveletExpansion:
    """Batched coefficient computation; values has shape (B, P, dim T)."""
    if n_max < 0:
        raise InputError("n_max must be non-negative")
    if model.structure != structure:
        raise InputError("model and modelled distribution use different structures")
    _check_basis(structure, filt)
    s = grid.scaling
    E = evaluation_region(K, s)
    top = n_max + 1
    M = max(top, model.native_level)
    levels = tuple(M * si for si in s.s)
    pad = 2 * filt.order + filt.support_length + 2
    wins = index_window(E, levels, filt.support_length, margin=pad * 2 ** max(levels))
    gen_top = coarsen(model.generator_field(levels, wins), s, filt, M - top)
    if as_fraction(gamma) > 0:
        lo, W = _weights_table(values, grid, model, top, rule)
        bw = _base_window(E, top, s, filt)
        G = gen_top.crop(bw)
        c = _combine(G, _gather(W, lo, [np.arange(a, b + 1) for a, b in bw]))
        exp = WaveletExpansion.analyze(LevelVector(G.levels, G.offset, c), s, filt, full=True)
        return _crop_expansion(exp, E, filt)
    gen = WaveletExpansion.analyze(gen_top, s, filt, full=True)
    details = []
    for n in range(top):
        lo, W = _weights_table(values, grid, model, n, rule)
        bw = _base_window(E, n, s, filt)
        det = {}
        for key, G in gen.details[n].items():
            kw = _block_windows(bw, key)
            Gc = G.crop(kw)
            idx = [np.arange(a, b + 1) if t < 0 else (np.arange(a, b + 1) >> t) for (a, b), t in zip(kw, key)]
            det[key] = LevelVector(Gc.levels, Gc.offset, _combine(Gc, _gather(W, lo, idx)))
        details.append(det)
    lo, W = _weights_table(values, grid, model, 0, rule)
    bw = _base_window(E, 0, s, filt)
    A = gen.approx.crop(bw)
    approx = LevelVector(A.levels, A.offset, _combine(A, _gather(W, lo, [np.arange(a, b + 1) for a, b in bw])))
    return WaveletExpansion(s, filt, approx, details)


def _unbatch(exp: WaveletExpansion, b: int) -> WaveletExpansion:
    def pick(v):
        return LevelVector(v.levels, v.offset, v.coeffs[b])

    return WaveletExpansion(exp.scaling, exp.filt, pick(exp.approx),
                            [{k: pick(v) for k, v in det.items()} for det in exp.details])


def reconstruct(f: ModelledDistribution, model: Model, basis, n_max: int, domain=None,
                rule: str = "riemann") -> ReconstructionResult:
    """Coefficient table of Rf up to level n_max."""
    filt = _filter_of(basis)
    K = f.domain if domain is None else Box.of(domain)
    exp = _reconstruct_values(f.values[None], f.grid, f.structure, f.gamma, model, filt, n_max, K, rule)
    return ReconstructionResult(_unbatch(exp, 0), n_max, filt, K, evaluation_region(K, f.grid.scaling), f.gamma)


def _crop_expansion(exp: WaveletExpansion, E: Box, filt) -> WaveletExpansion:
    s = exp.scaling
    approx = exp.approx.crop(_base_window(E, 0, s, filt))
    details = [{key: G.crop(_block_windows(_base_window(E, n, s, filt), key)) for key, G in det.items()}
               for n, det in enumerate(exp.details)]
    return WaveletExpansion(s, exp.filt, approx, details)


@dataclass
class BatchReconstruction:
    """Reconstructions of a batch of modelled distributions sharing a grid
    and a model; coefficient arrays carry a leading batch axis."""

    expansion: WaveletExpansion
    n_max: int
    filt: RefinementFilter
    domain: Box
    region: Box

    @property
    def size(self) -> int:
        return self.expansion.approx.coeffs.shape[0]

    def result(self, b: int) -> ReconstructionResult:
        return ReconstructionResult(_unbatch(self.expansion, b), self.n_max, self.filt, self.domain, self.region)

    def evaluate(self, test) -> np.ndarray:
        """<Rf_b, test> for every member b of the batch."""
        if not self.region.contains_box(_test_support(test, self.filt), tol=1e-9):
            raise InputError("test function support leaves the evaluation region of the reconstruction")
        s = self.expansion.scaling
        M = self.n_max + 1
        top = self.expansion.synthesize(M)
        tv = test.project(tuple(M * si for si in s.s), self.filt)
        wins = [tv.window(i) for i in range(s.d)]
        return np.sum(top.crop(wins).coeffs * tv.coeffs[None], axis=tuple(range(1, s.d + 1)))


def reconstruct_batch(values, template: ModelledDistribution, model: Model, basis, n_max: int, domain=None,
                      rule: str = "riemann") -> BatchReconstruction:
    """Reconstruct the jets values[b] (shape (B, P, dim T)), all sampled on
    the grid of `template` and carrying its regularity."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 3 or values.shape[1:] != template.values.shape:
        raise InputError(f"batch values must have shape (B,) + {template.values.shape}")
    values = values * template.structure.mask_below(template.gamma)
    filt = _filter_of(basis)
    K = template.domain if domain is None else Box.of(domain)
    exp = _reconstruct_values(values, template.grid, template.structure, template.gamma, model, filt, n_max, K, rule)
    return BatchReconstruction(exp, n_max, filt, K, evaluation_region(K, template.grid.scaling))


def coefficient_direct(f: ModelledDistribution, model: Model, n: int, mother, k, basis) -> float:
    """a^{n,psi}_x by averaging <Pi_y f(y), psi^n_x> over y in B(x, 2^-n).

    This uses Pi_y f(y) at every sample instead of transporting f to x, so
    agreement with the table built by :func:`reconstruct` checks the
    compatibility Pi_y = Pi_x Gamma_{x,y} along with the bookkeeping.  Only
    defined for gamma <= 0; positive gamma projects onto fathers at level
    n_max + 1 instead."""
    if f.gamma > 0:
        raise InputError("direct detail coefficients are only defined for gamma <= 0")
    filt = _filter_of(basis)
    s = f.grid.scaling
    k = tuple(int(v) for v in np.atleast_1d(k))
    x = np.array([[kk * 2.0 ** (-n * si) for kk, si in zip(k, s.s)]])
    grid = f.grid
    r = 2.0 ** (-n)
    dist = np.abs(grid.points - x) / np.array([r ** si for si in s.s])
    inside = np.flatnonzero(np.all(dist <= 1 + 1e-12, axis=1))
    if inside.size == 0:
        raise InputError("no sample points in the averaging ball")
    elem = WaveletElement(n, mother, k, s)
    M = max(n + 1, model.native_level)
    levels = tuple(M * si for si in s.s)
    tv = elem.project(levels, filt)
    wins = [tv.window(i) for i in range(s.d)]
    field_ = model.generator_field(levels, wins)
    P = np.sum(field_.coeffs * tv.coeffs[None], axis=tuple(range(1, s.d + 1)))     # (n_gen,)
    C = model.coefficients(grid.points[inside])                                       # (m, gen, D)
    vals = np.einsum("g,mgd,md->m", P, C, f.values[inside])
    return float(vals.mean())


# --------------------------------------------------------------------------
# evaluation and errors


def _test_support(test, filt):
    if isinstance(test, WaveletElement):
        return test.support_box(filt.support_length, filt.order)
    return test.support_box()


def evaluate(result: ReconstructionResult, test, level: int | None = None) -> float:
    """<Rf, test> for any test object with project(levels, filt)."""
    if not result.region.contains_box(_test_support(test, result.filt), tol=1e-9):
        raise InputError("test function support leaves the evaluation region of the reconstruction")
    M = result.n_max + 1 if level is None else level
    s = result.scaling
    lv = result.at_level(M)
    tv = test.project(tuple(M * si for si in s.s), result.filt)
    return float(lv.dot(tv))


def model_pairings(f: ModelledDistribution, model: Model, member, lam: float, grid: DyadicGrid,
                   level: int) -> np.ndarray:
    """<Pi_x f(x), eta^lam_x> at every node x of grid."""
    P = generator_pairings(model, member, lam, grid, level)
    idx = f.grid.locate(grid.points)
    W = np.einsum("pgd,pd->pg", model.coefficients(grid.points), f.values[idx])
    return np.sum(P * W, axis=1)


def result_pairings(result: ReconstructionResult, member, lam: float, grid: DyadicGrid, level: int) -> np.ndarray:
    if not result.region.contains_box(grid.domain.fatten(float(lam), result.scaling), tol=1e-9):
        raise InputError("test functions leave the evaluation region of the reconstruction")
    return pair_on_grid(result.at_level(level), member, lam, grid, result.filt)


def _level_for(result, model, grid, extra=()):
    return max([result.n_max + 1, model.native_level, grid.n, 1] + list(extra))


def local_errors(f, model, result, member, lam, grid) -> np.ndarray:
    L = _level_for(result, model, grid)
    return result_pairings(result, member, lam, grid, L) - model_pairings(f, model, member, lam, grid, L)


def local_error(f: ModelledDistribution, model: Model, result: ReconstructionResult, x, lam: float, eta) -> float:
    """<Rf - Pi_x f(x), eta^lam_x> at a single sample node x."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    s = result.scaling
    grid = f.grid
    idx = grid.locate(x)
    test = PlacedTest(eta, x[0], float(lam), s)
    L = max(result.n_max + 1, model.native_level, grid.n)
    r = evaluate(result, test, L)
    jet = GradedVector(f.structure, f.values[idx[0]])
    return r - model.pair(x[0], jet, test, L)


def evaluation_grid(K: Box, scaling, lam_grid, f: ModelledDistribution) -> DyadicGrid:
    """Nodes of K at a level resolving the smallest lambda, but no finer than
    the sampling grid."""
    lam_min = float(np.min(lam_grid))
    m = min(f.grid.n, max(1, math.ceil(-math.log2(lam_min)) + 1))
    return make_grid(m, scaling, K)


@dataclass
class BoundReport:
    """The discretized reconstruction-bound left-hand side and its pieces."""

    lhs: float
    per_lambda: list            # L^p norms of sup_eta |err| / lam^gamma
    sup_error: list             # sup_x sup_eta |err| for each lambda
    lambdas: list
    slope: float | None = None
    rhs_proxy: float | None = None
    pi_norm: float | None = None
    gamma_norm: float | None = None
    besov_norm: float | None = None

    @property
    def ratio(self) -> float | None:
        if self.rhs_proxy is None or self.rhs_proxy == 0:
            return None
        return self.lhs / self.rhs_proxy

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "per_lambda": list(self.per_lambda), "sup_error": list(self.sup_error),
                "lambdas": list(self.lambdas), "slope": self.slope, "rhs_proxy": self.rhs_proxy,
                "pi_norm": self.pi_norm, "gamma_norm": self.gamma_norm, "besov_norm": self.besov_norm,
                "ratio": self.ratio}


def fit_slope(lambdas, values) -> float | None:
    """Least-squares slope of log(values) against log(lambdas) over positive values."""
    lam = np.asarray(lambdas, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = v > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(lam[ok]), np.log(v[ok]), 1)[0])


def _lhs_from_errors(err_fn, dictionary, lam_grid, grid, K, gamma, p, q):
    w = grid.weights(K)
    per, sup_err = [], []
    g = float(gamma)
    for lam in np.asarray(lam_grid, dtype=float):
        sup = np.zeros(grid.size)
        for member in dictionary:
            sup = np.maximum(sup, np.abs(err_fn(member, lam)))
        sup_err.append(float(sup[w > 0].max(initial=0.0)))
        per.append(float(np.sum(w * (sup / lam ** g) ** p) ** (1.0 / p)))
    return lambda_lq(per, q), per, sup_err


def bound_lhs(f: ModelledDistribution, model: Model, result: ReconstructionResult, params: BesovParams,
              dictionary, lam_grid, K: Box | None = None, grid: DyadicGrid | None = None) -> BoundReport:
    """|| || sup_eta |<Rf - Pi_x f(x), eta^lam_x>| / lam^gamma ||_{L^p(K)} ||_{L^q_lam}."""
    K = result.domain if K is None else Box.of(K)
    grid = evaluation_grid(K, f.grid.scaling, lam_grid, f) if grid is None else grid
    L = _level_for(result, model, grid)

    def err(member, lam):
        return result_pairings(result, member, lam, grid, L) - model_pairings(f, model, member, lam, grid, L)

    lhs, per, sup = _lhs_from_errors(err, dictionary, lam_grid, grid, K, params.gamma, params.p, params.q)
    lams = [float(v) for v in np.asarray(lam_grid, dtype=float)]
    return BoundReport(lhs, per, sup, lams, fit_slope(lams, sup))


def bound_report(f, model, result, params: BesovParams, dictionary, lam_grid, K=None, sample_grid=None,
                 pairs=None, pi_norm: float | None = None, gamma_norm: float | None = None) -> BoundReport:
    """bound_lhs together with the proxy ||Pi|| (1 + ||Gamma||) |||f|||."""
    from .model import estimate_gamma_norm, estimate_pi_norm, sample_pairs

    K = result.domain if K is None else Box.of(K)
    rep = bound_lhs(f, model, result, params, dictionary, lam_grid, K)
    s = f.grid.scaling
    if pi_norm is None:
        sg = sample_grid or make_grid(min(f.grid.n, 6), s, K)
        pi_norm = estimate_pi_norm(model, params.gamma, dictionary, lam_grid, sg)
    if gamma_norm is None:
        sg = sample_grid or make_grid(min(f.grid.n, 6), s, K)
        pairs = sample_pairs(sg, 500) if pairs is None else pairs
        gamma_norm = estimate_gamma_norm(model, params.gamma, pairs)
    bn = besov_norm(f, model, params, K)
    rep.pi_norm, rep.gamma_norm, rep.besov_norm = pi_norm, gamma_norm, bn
    rep.rhs_proxy = pi_norm * (1.0 + gamma_norm) * bn
    return rep


def two_model_error(f: ModelledDistribution, g: ModelledDistribution, model1: Model, model2: Model,
                    results: tuple, params: BesovParams, dictionary, lam_grid, K: Box | None = None,
                    grid: DyadicGrid | None = None) -> BoundReport:
    """|| || sup_eta |<Rf - Rbar g - Pi_x f(x) + Pibar_x g(x), eta^lam_x>| / lam^gamma ||_{L^p} ||_{L^q_lam}."""
    r1, r2 = results
    if model1.structure != model2.structure:
        raise InputError("models live on different structures")
    if r1.n_max != r2.n_max:
        raise InputError("both reconstructions must use the same n_max")
    K = r1.domain if K is None else Box.of(K)
    grid = evaluation_grid(K, f.grid.scaling, lam_grid, f) if grid is None else grid
    L = max(_level_for(r1, model1, grid), _level_for(r2, model2, grid))

    def err(member, lam):
        return (result_pairings(r1, member, lam, grid, L) - result_pairings(r2, member, lam, grid, L)
                - model_pairings(f, model1, member, lam, grid, L) + model_pairings(g, model2, member, lam, grid, L))

    lhs, per, sup = _lhs_from_errors(err, dictionary, lam_grid, grid, K, params.gamma, params.p, params.q)
    lams = [float(v) for v in np.asarray(lam_grid, dtype=float)]
    rep = BoundReport(lhs, per, sup, lams, fit_slope(lams, sup))
    return rep
