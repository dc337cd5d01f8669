"""Coefficient-space representation of elements of V_n and their wavelet
expansions.

Everything downstream (models, reconstruction, pairings with test
functions) is computed on coefficient arrays: by orthonormality the pairing
of two elements of V_M is the dot product of their father coefficients at
level M, so wavelets never have to be integrated in physical space.

A :class:`LevelVector` holds father coefficients c_k of

    sum_k c_k prod_i 2^(j_i/2) phi(2^(j_i) y_i - k_i)

on a box of integer indices.  Leading array axes beyond the d spatial ones
are batch axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .geometry import Scaling
from .wavelets import Mother, RefinementFilter, mother_set

SQRT2 = math.sqrt(2.0)


def _set_window(arr, off, axis, new_off, new_len):
    """Copy of arr (indexed from off along axis) restricted or zero-padded to
    the window [new_off, new_off + new_len)."""
    out_shape = list(arr.shape)
    out_shape[axis] = max(new_len, 0)
    out = np.zeros(out_shape, dtype=arr.dtype)
    lo = max(off, new_off)
    hi = min(off + arr.shape[axis], new_off + new_len)
    if hi > lo:
        src = [slice(None)] * arr.ndim
        dst = [slice(None)] * arr.ndim
        src[axis] = slice(lo - off, hi - off)
        dst[axis] = slice(lo - new_off, hi - new_off)
        out[tuple(dst)] = arr[tuple(src)]
    return out


@dataclass
class LevelVector:
    levels: tuple
    offset: tuple
    coeffs: np.ndarray

    def __post_init__(self):
        self.levels = tuple(int(v) for v in self.levels)
        self.offset = tuple(int(v) for v in self.offset)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if len(self.levels) != len(self.offset) or self.coeffs.ndim < len(self.levels):
            raise InputError("inconsistent coefficient vector")

    @property
    def d(self) -> int:
        return len(self.levels)

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[self.coeffs.ndim - self.d:]

    @property
    def batch_shape(self) -> tuple:
        return self.coeffs.shape[: self.coeffs.ndim - self.d]

    def axis(self, i: int) -> int:
        return self.coeffs.ndim - self.d + i

    def window(self, i: int) -> tuple:
        return self.offset[i], self.offset[i] + self.shape[i] - 1

    def crop(self, windows) -> "LevelVector":
        """Restrict or zero-pad to per-axis inclusive index windows."""
        arr = self.coeffs
        for i, (lo, hi) in enumerate(windows):
            arr = _set_window(arr, self.offset[i], self.axis(i), lo, hi - lo + 1)
        return LevelVector(self.levels, tuple(lo for lo, _ in windows), arr)

    def scaled(self, c) -> "LevelVector":
        return LevelVector(self.levels, self.offset, self.coeffs * c)

    def dot(self, other: "LevelVector"):
        """L2 pairing of the represented functions."""
        if self.levels != other.levels:
            raise InputError("cannot pair coefficient vectors at different levels")
        wins = []
        for i in range(self.d):
            lo = max(self.offset[i], other.offset[i])
            hi = min(self.window(i)[1], other.window(i)[1])
            if hi < lo:
                return np.zeros(np.broadcast_shapes(self.batch_shape, other.batch_shape))
            wins.append((lo, hi))
        a, b = self.crop(wins), other.crop(wins)
        return np.sum(a.coeffs * b.coeffs, axis=tuple(range(-self.d, 0)))

    def union_windows(self, other: "LevelVector") -> list:
        return [(min(self.offset[i], other.offset[i]), max(self.window(i)[1], other.window(i)[1]))
                for i in range(self.d)]

    def __add__(self, other: "LevelVector") -> "LevelVector":
        if self.levels != other.levels:
            raise InputError("cannot add coefficient vectors at different levels")
        wins = self.union_windows(other)
        a, b = self.crop(wins), other.crop(wins)
        return LevelVector(self.levels, a.offset, a.coeffs + b.coeffs)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0


# --------------------------------------------------------------------------
# one dyadic step along one axis


def _taps(filt: RefinementFilter):
    return (filt.a / SQRT2, 0), (filt.highpass / SQRT2, filt.highpass_offset)


def _downsample(c, off, axis, taps, tap0, full):
    """out[k] = sum_m taps[m] c[2k + tap0 + m].

    With full=False only outputs whose whole stencil lies inside the window
    are produced; with full=True the input is treated as zero outside it."""
    T = len(taps)
    if full:
        widths = [(0, 0)] * c.ndim
        widths[axis] = (T - 1, T - 1)
        c = np.pad(c, widths)
        off = off - (T - 1)
    L = c.shape[axis]
    k0 = -((tap0 - off) // 2)
    k1 = (off + L - 1 - tap0 - (T - 1)) // 2
    n = k1 - k0 + 1
    shape = list(c.shape)
    shape[axis] = max(n, 0)
    out = np.zeros(shape)
    for m, t in enumerate(taps):
        if n <= 0:
            break
        start = 2 * k0 + tap0 + m - off
        sl = [slice(None)] * c.ndim
        sl[axis] = slice(start, start + 2 * (n - 1) + 1, 2)
        out += t * c[tuple(sl)]
    return out, k0


def analysis_step(c, off, axis, filt: RefinementFilter, full: bool = False):
    """One level of the fast wavelet transform along one axis.

    Returns (low, low_offset, high, high_offset)."""
    (lt, l0), (ht, h0) = _taps(filt)
    low, lo_off = _downsample(c, off, axis, lt, l0, full)
    high, hi_off = _downsample(c, off, axis, ht, h0, full)
    return low, lo_off, high, hi_off


def lowpass_step(c, off, axis, filt: RefinementFilter, full: bool = True):
    (lt, l0), _ = _taps(filt)
    return _downsample(c, off, axis, lt, l0, full)


def synthesis_step(low, lo_off, high, hi_off, axis, filt: RefinementFilter):
    """Inverse of :func:`analysis_step`; either input may be None.  Both
    inputs must agree on every other axis."""
    (lt, l0), (ht, h0) = _taps(filt)
    parts = [(a, o, t, t0) for a, o, t, t0 in ((low, lo_off, lt, l0), (high, hi_off, ht, h0))
             if a is not None and a.shape[axis] > 0]
    if not parts:
        ref = low if low is not None else high
        shape = list(ref.shape)
        shape[axis] = 0
        return np.zeros(shape), 2 * (lo_off if low is not None else hi_off)
    lo = min(2 * o + t0 for a, o, t, t0 in parts)
    hi = max(2 * (o + a.shape[axis] - 1) + t0 + len(t) - 1 for a, o, t, t0 in parts)
    shape = list(parts[0][0].shape)
    shape[axis] = hi - lo + 1
    out = np.zeros(shape)
    for a, o, t, t0 in parts:
        n = a.shape[axis]
        for m, tap in enumerate(t):
            start = 2 * o + t0 + m - lo
            sl = [slice(None)] * out.ndim
            sl[axis] = slice(start, start + 2 * (n - 1) + 1, 2)
            out[tuple(sl)] += tap * a
    return out, lo


# --------------------------------------------------------------------------
# scaled levels: one scaled step lowers axis i by s_i dyadic levels


def block_levels(n: int, block: tuple, scaling: Scaling) -> tuple:
    """Per-axis dyadic levels of the coefficient array of a detail block at
    scaled level n."""
    return tuple(n * si + max(b, 0) for si, b in zip(scaling.s, block))


def decompose(lv: LevelVector, scaling: Scaling, filt: RefinementFilter, full: bool = False):
    """Split an element of V_{n+1} (axis levels (n+1) s_i) into its V_n part
    and detail blocks.

    Blocks are keyed by tuples b with b_i = -1 (father factor on axis i) or
    b_i = t (detail factor at dyadic level n s_i + t)."""
    if any(lv.levels[i] % si for i, si in enumerate(scaling.s)) or len({lv.levels[i] // si for i, si in enumerate(scaling.s)}) != 1:
        raise InputError(f"levels {lv.levels} are not a scaled level for scaling {scaling.s}")
    pieces = [((), lv.coeffs, list(lv.offset))]
    for i, si in enumerate(scaling.s):
        ax = lv.axis(i)
        new_pieces = []
        for key, arr, off in pieces:
            cur, cur_off = arr, off[i]
            for step in range(si):
                low, lo_off, high, hi_off = analysis_step(cur, cur_off, ax, filt, full)
                o = list(off)
                o[i] = hi_off
                new_pieces.append((key + (si - 1 - step,), high, o))
                cur, cur_off = low, lo_off
            o = list(off)
            o[i] = cur_off
            new_pieces.append((key + (-1,), cur, o))
        pieces = new_pieces
    n = lv.levels[0] // scaling.s[0] - 1
    approx, details = None, {}
    for key, arr, off in pieces:
        vec = LevelVector(block_levels(n, key, scaling), tuple(off), arr)
        if all(b < 0 for b in key):
            approx = vec
        else:
            details[key] = vec
    return approx, details


def _align(arrays, offsets, batch_nd, skip):
    """Zero-pad arrays to common windows on every spatial axis except skip."""
    d = len(offsets[0])
    arrays = list(arrays)
    offsets = [list(o) for o in offsets]
    for j in range(d):
        if j == skip:
            continue
        ax = batch_nd + j
        lo = min(o[j] for o in offsets)
        hi = max(o[j] + a.shape[ax] for a, o in zip(arrays, offsets)) - 1
        for q in range(len(arrays)):
            if offsets[q][j] != lo or arrays[q].shape[ax] != hi - lo + 1:
                arrays[q] = _set_window(arrays[q], offsets[q][j], ax, lo, hi - lo + 1)
                offsets[q][j] = lo
    return arrays, offsets


def compose(n: int, approx: LevelVector | None, details: dict, scaling: Scaling,
            filt: RefinementFilter) -> LevelVector:
    """Inverse of :func:`decompose`: combine the V_n part and detail blocks of
    scaled level n into an element of V_{n+1}.  Missing blocks are zero."""
    d = scaling.d
    items = dict(details)
    if approx is not None:
        items[(-1,) * d] = approx
    if not items:
        raise InputError("nothing to compose")
    batch_nd = next(iter(items.values())).coeffs.ndim - d
    pieces = {k: (v.coeffs, list(v.offset)) for k, v in items.items()}
    for i in reversed(range(d)):
        ax = batch_nd + i
        groups = {}
        for key, val in pieces.items():
            groups.setdefault(key[:i], {})[key[i]] = val
        merged = {}
        for prefix, members in groups.items():
            keys = sorted(members)
            arrs, offs = _align([members[k][0] for k in keys], [members[k][1] for k in keys], batch_nd, i)
            members = {k: (a, o) for k, a, o in zip(keys, arrs, offs)}
            common = offs[0]
            cur = members.get(-1)
            cur_arr, cur_off = (cur[0], cur[1][i]) if cur is not None else (None, None)
            for t in range(scaling.s[i]):
                hi = members.get(t)
                if cur_arr is None and hi is None:
                    continue
                if cur_arr is None:
                    cur_off = 0
                cur_arr, cur_off = synthesis_step(cur_arr, cur_off, None if hi is None else hi[0],
                                                  0 if hi is None else hi[1][i], ax, filt)
            if cur_arr is None:
                continue
            o = list(common)
            o[i] = cur_off
            merged[prefix] = (cur_arr, o)
        pieces = merged
    arr, off = pieces[()]
    return LevelVector(tuple((n + 1) * si for si in scaling.s), tuple(off), arr)


def refine(lv: LevelVector, scaling: Scaling, filt: RefinementFilter, up: int) -> LevelVector:
    """Re-express an element of V_n in V_{n+up} (zero details)."""
    n = lv.levels[0] // scaling.s[0]
    for step in range(up):
        lv = compose(n + step, lv, {}, scaling, filt)
    return lv


def coarsen(lv: LevelVector, scaling: Scaling, filt: RefinementFilter, down: int) -> LevelVector:
    """Orthogonal projection of an element of V_n onto V_{n-down} (the input
    is treated as zero outside its window)."""
    for _ in range(down):
        lv, _details = decompose(lv, scaling, filt, full=True)
    return lv


# --------------------------------------------------------------------------
# wavelet expansions


def mother_key(m: Mother) -> tuple:
    return m.block, m.shift


@dataclass
class WaveletExpansion:
    """sum_k b_k phi^0_k + sum_{n <= n_top} sum_blocks sum_k a^n_k (detail element).

    details[n] maps block keys (see :func:`decompose`) to coefficient
    vectors.  A detail element with block b and index k' has, on an axis with
    b_i = t >= 0, base-point index k' >> t and shift e = k' mod 2^t."""

    scaling: Scaling
    filt: RefinementFilter
    approx: LevelVector | None
    details: list = field(default_factory=list)

    @property
    def n_top(self) -> int:
        return len(self.details) - 1

    @classmethod
    def analyze(cls, lv: LevelVector, scaling: Scaling, filt: RefinementFilter, full: bool = True):
        M = lv.levels[0] // scaling.s[0]
        details = [None] * M
        cur = lv
        for n in range(M - 1, -1, -1):
            cur, det = decompose(cur, scaling, filt, full=full)
            details[n] = det
        return cls(scaling, filt, cur, details)

    def synthesize(self, level: int | None = None) -> LevelVector:
        """Father coefficients at scaled level `level` (default n_top + 1)."""
        level = self.n_top + 1 if level is None else level
        if level < self.n_top + 1:
            raise InputError("cannot synthesize below the finest stored detail level")
        cur = self.approx
        for n in range(len(self.details)):
            if cur is None and not self.details[n]:
                continue
            cur = compose(n, cur, self.details[n] or {}, self.scaling, self.filt)
        if cur is None:
            raise InputError("empty expansion")
        return refine(cur, self.scaling, self.filt, level - max(self.n_top + 1, 0))

    def truncated(self, n_max: int) -> "WaveletExpansion":
        return WaveletExpansion(self.scaling, self.filt, self.approx, list(self.details[: n_max + 1]))

    def scaled(self, c) -> "WaveletExpansion":
        return WaveletExpansion(
            self.scaling, self.filt, None if self.approx is None else self.approx.scaled(c),
            [{k: v.scaled(c) for k, v in det.items()} for det in self.details])

    def __add__(self, other: "WaveletExpansion") -> "WaveletExpansion":
        approx = _add_opt(self.approx, other.approx)
        n = max(len(self.details), len(other.details))
        dets = []
        for lev in range(n):
            a = self.details[lev] if lev < len(self.details) else {}
            b = other.details[lev] if lev < len(other.details) else {}
            dets.append({k: _add_opt(a.get(k), b.get(k)) for k in set(a) | set(b)})
        return WaveletExpansion(self.scaling, self.filt, approx, dets)

    def coefficient(self, n: int, mother: Mother, k) -> float:
        """Coefficient of the element of level n, mother `mother`, base point
        index k (so the base point is k_i 2^(-n s_i)); n = -1 addresses the
        father coefficients b_k."""
        k = tuple(int(v) for v in np.atleast_1d(k))
        if n < 0:
            vec, idx = self.approx, k
        else:
            if n >= len(self.details):
                return 0.0
            vec = self.details[n].get(mother.block)
            idx = tuple(kk if b < 0 else (kk << b) + e for kk, b, e in zip(k, mother.block, mother.shift))
        if vec is None:
            return 0.0
        pos = tuple(i - o for i, o in zip(idx, vec.offset))
        if any(p < 0 or p >= s for p, s in zip(pos, vec.shape)):
            return 0.0
        return float(vec.coeffs[pos])

    def rows(self):
        """Yield (n, mother_index, base index tuple, value); n = -1 and
        mother_index = -1 for father coefficients."""
        mothers = mother_set(self.scaling)
        if self.approx is not None:
            for pos in np.ndindex(*self.approx.shape):
                v = self.approx.coeffs[pos]
                if v != 0:
                    yield -1, -1, tuple(int(p + o) for p, o in zip(pos, self.approx.offset)), float(v)
        for n, det in enumerate(self.details):
            for mi, m in enumerate(mothers):
                vec = det.get(m.block)
                if vec is None:
                    continue
                sel = []
                for ax, (b, e) in enumerate(zip(m.block, m.shift)):
                    idx = vec.offset[ax] + np.arange(vec.shape[ax])
                    sel.append(np.ones(idx.size, bool) if b < 0 else ((idx & ((1 << b) - 1)) == e))
                for pos in np.ndindex(*vec.shape):
                    if not all(s[p] for s, p in zip(sel, pos)):
                        continue
                    v = vec.coeffs[pos]
                    if v == 0:
                        continue
                    kp = [p + o for p, o in zip(pos, vec.offset)]
                    base = tuple(int(kk if b < 0 else kk >> b) for kk, b in zip(kp, m.block))
                    yield n, mi, base, float(v)

    @classmethod
    def from_rows(cls, rows, scaling: Scaling, filt: RefinementFilter) -> "WaveletExpansion":
        scaling = Scaling.of(scaling)
        mothers = mother_set(scaling)
        entries = {}
        for n, mi, base, v in rows:
            n, mi = int(n), int(mi)
            base = tuple(int(b) for b in np.atleast_1d(base))
            if len(base) != scaling.d:
                raise InputError("grid index has wrong dimension")
            if n < 0:
                key, idx = None, base
            else:
                if not 0 <= mi < len(mothers):
                    raise InputError(f"mother index {mi} out of range")
                m = mothers[mi]
                key = (n, m.block)
                idx = tuple(kk if b < 0 else (kk << b) + e for kk, b, e in zip(base, m.block, m.shift))
            entries.setdefault(key, []).append((idx, float(v)))
        n_top = max([k[0] for k in entries if k is not None], default=-1)

        def build(levels, items):
            idx = np.array([i for i, _ in items])
            lo = idx.min(axis=0)
            hi = idx.max(axis=0)
            arr = np.zeros(tuple(hi - lo + 1))
            for i, v in items:
                arr[tuple(np.array(i) - lo)] += v
            return LevelVector(levels, tuple(lo), arr)

        approx = build((0,) * scaling.d, entries[None]) if None in entries else None
        details = [dict() for _ in range(n_top + 1)]
        for key, items in entries.items():
            if key is None:
                continue
            n, block = key
            details[n][block] = build(block_levels(n, block, scaling), items)
        return cls(scaling, filt, approx, details)


def _add_opt(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return a + b


# --------------------------------------------------------------------------
# projections of functions onto V_j


def quadrature_weights(filt: RefinementFilter, nodes: int = 6) -> np.ndarray:
    """Weights w_r, r = 0..nodes-1, with sum_r w_r r^m = int u^m phi(u) du for
    m < nodes, so that <F, phi(. - k)> ~ sum_r w_r F(k + r) exactly for
    polynomials of degree < nodes."""
    from .wavelets import scaling_moments

    mu = scaling_moments(filt, nodes)
    r = np.arange(nodes, dtype=float)
    V = np.vander(r, nodes, increasing=True).T
    return np.linalg.solve(V, mu)


def sample_projection_1d(func, lo: float, hi: float, level: int, filt: RefinementFilter,
                         weights: np.ndarray | None = None):
    """Father coefficients at dyadic level `level` of a function supported in
    [lo, hi], by moment-matched quadrature.  Returns (offset, coeffs)."""
    w = quadrature_weights(filt) if weights is None else weights
    R = len(w)
    S = filt.support_length
    f = 2.0 ** level
    k0 = math.floor(lo * f) - S
    k1 = math.ceil(hi * f)
    ks = np.arange(k0, k1 + 1)
    nodes = (np.arange(k0, k1 + R) / f)
    vals = np.asarray(func(nodes), dtype=float)
    c = np.zeros(ks.size)
    for r in range(R):
        c += w[r] * vals[r: r + ks.size]
    return int(k0), c * 2.0 ** (-level / 2)


def project_1d(func, lo: float, hi: float, level: int, filt: RefinementFilter, feature: float,
               extra: int = 11):
    """Father coefficients at dyadic level `level` of a smooth function
    supported in [lo, hi] whose smallest length scale is `feature`.

    The function is sampled at a finer level chosen from `feature` and the
    result is brought down by exact low-pass filtering."""
    fine = max(level, int(math.ceil(math.log2(1.0 / feature))) + extra)
    off, c = sample_projection_1d(func, lo, hi, fine, filt)
    for _ in range(fine - level):
        c, off = lowpass_step(c, off, 0, filt, full=True)
    nz = np.flatnonzero(c)
    if nz.size:
        c = c[nz[0]: nz[-1] + 1]
        off += int(nz[0])
    return int(off), c


def monomial_coefficients(power: int, level: int, lo_idx: int, count: int, filt: RefinementFilter,
                          center: float = 0.0) -> np.ndarray:
    """<(y - center)^power, phi^level_k> for k = lo_idx .. lo_idx + count - 1
    (exact, from the moments of phi)."""
    from .wavelets import scaling_moments

    mu = scaling_moments(filt, power + 1)
    f = 2.0 ** (-level)
    k = lo_idx + np.arange(count)
    shift = k * f - center
    out = np.zeros(count)
    for r in range(power + 1):
        out += math.comb(power, r) * shift ** (power - r) * f ** r * mu[r]
    return out * np.sqrt(f)
