"""Brownian drivers, elementary jet-valued processes and the interchange of
reconstruction with stochastic integration.

Random numbers come from numpy's PCG64 seeded through SeedSequence; Gaussian
increments use numpy's ziggurat standard normal sampler.  Ensembles draw
each path from its own child stream, so path b is the same whatever the
ensemble size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .besov import ModelledDistribution
from .errors import ConfigurationError, InputError
from .reconstruct import _filter_of, evaluate, reconstruct, reconstruct_batch


def _steps(T: float, dt: float) -> int:
    if not (T > 0 and dt > 0):
        raise InputError("T and dt must be positive")
    N = T / dt
    if abs(N - round(N)) > 1e-9 * max(1.0, N):
        raise InputError(f"T = {T} is not an integer multiple of dt = {dt}")
    return int(round(N))


@dataclass(frozen=True)
class BrownianPath:
    """W on the uniform partition t_k = k dt of [0, T]."""

    T: float
    dt: float
    increments: np.ndarray
    seed: int | None = None

    @property
    def steps(self) -> int:
        return len(self.increments)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    @property
    def values(self) -> np.ndarray:
        out = np.zeros(self.steps + 1)
        np.cumsum(self.increments, out=out[1:])
        return out

    def index_of(self, t: float) -> int:
        k = t / self.dt
        if abs(k - round(k)) > 1e-9 * max(1.0, k) or not (-1e-12 <= t <= self.T + 1e-12):
            raise InputError(f"time {t} is not a node of the path grid")
        return int(round(k))

    def at(self, t: float) -> float:
        k = self.index_of(t)
        return float(np.sum(self.increments[:k]))

    def prefix(self, t: float) -> "PathPrefix":
        k = self.index_of(t)
        vals = self.values[: k + 1].copy()
        vals.setflags(write=False)
        return PathPrefix(self.dt, vals)


@dataclass(frozen=True)
class PathPrefix:
    """The path restricted to [0, t]; reading beyond t raises."""

    dt: float
    values: np.ndarray

    @property
    def t(self) -> float:
        return (len(self.values) - 1) * self.dt

    @property
    def last(self) -> float:
        return float(self.values[-1])

    def at(self, s: float) -> float:
        k = s / self.dt
        if abs(k - round(k)) > 1e-9 * max(1.0, k):
            raise InputError(f"time {s} is not a node of the path grid")
        k = int(round(k))
        if k < 0 or k >= len(self.values):
            raise InputError(f"time {s} lies beyond the observed prefix [0, {self.t}]")
        return float(self.values[k])

    def running_max(self) -> float:
        return float(np.max(self.values))


def sample_brownian(T: float, dt: float, seed: int) -> BrownianPath:
    N = _steps(T, dt)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    return BrownianPath(float(T), float(dt), math.sqrt(dt) * rng.standard_normal(N), seed)


def sample_ensemble(T: float, dt: float, seed: int, paths: int) -> np.ndarray:
    """Increments of `paths` independent paths, shape (paths, N); path b uses
    the b-th child of SeedSequence(seed)."""
    N = _steps(T, dt)
    children = np.random.SeedSequence(seed).spawn(paths)
    out = np.empty((paths, N))
    for b, ss in enumerate(children):
        out[b] = np.random.Generator(np.random.PCG64(ss)).standard_normal(N)
    return math.sqrt(dt) * out


# --------------------------------------------------------------------------
# elementary processes


@dataclass
class Event:
    """A named predicate on the path prefix up to the left end of its interval."""

    name: str
    predicate: object

    def __call__(self, prefix: PathPrefix) -> bool:
        return bool(self.predicate(prefix))


ALWAYS = Event("always", lambda prefix: True)


@dataclass
class ElementaryProcess:
    """H = sum_n sum_m 1_(t_{n-1}, t_n] 1_{A_mn} f_mn.

    blocks[n] lists (event, jet) pairs for the interval (t_n, t_{n+1}]; the
    events of one interval must be disjoint on every path."""

    partition: np.ndarray
    blocks: list
    stopping: object = None

    def __post_init__(self):
        self.partition = np.asarray(self.partition, dtype=float)
        if self.partition.ndim != 1 or len(self.partition) < 2 or self.partition[0] != 0:
            raise InputError("partition must start at 0 and have at least two points")
        if np.any(np.diff(self.partition) <= 0):
            raise InputError("partition must be strictly increasing")
        if len(self.blocks) != len(self.partition) - 1:
            raise InputError("need one block list per partition interval")

    @property
    def jets(self) -> list:
        out = []
        for blk in self.blocks:
            for _, jet in blk:
                if not any(jet is j for j in out):
                    out.append(jet)
        return out

    def active(self, W: BrownianPath) -> list:
        """For each interval, the jet whose event holds on W (or None)."""
        out = []
        for n, blk in enumerate(self.blocks):
            prefix = W.prefix(self.partition[n])
            if self.stopping is not None and not self.stopping(prefix):
                out.append(None)
                continue
            hits = [jet for ev, jet in blk if ev(prefix)]
            if len(hits) > 1:
                raise InputError(f"events of interval {n} are not disjoint on this path")
            out.append(hits[0] if hits else None)
        return out


def localize(H: ElementaryProcess, keep_going) -> ElementaryProcess:
    """Stop H at the first partition point where keep_going(prefix) fails."""
    prev = H.stopping

    def rule(prefix):
        if prev is not None and not prev(prefix):
            return False
        # a stopping time: the path must not have triggered at any earlier node
        k = len(prefix.values) - 1
        for j in range(k + 1):
            sub = PathPrefix(prefix.dt, prefix.values[: j + 1])
            if not keep_going(sub):
                return False
        return True

    return ElementaryProcess(H.partition, H.blocks, rule)


def _check_grid(H: ElementaryProcess, W: BrownianPath):
    for t in H.partition:
        W.index_of(t)
    if H.partition[-1] > W.T + 1e-12:
        raise InputError("partition extends beyond the path horizon")


def integrate_elementary(H: ElementaryProcess, W: BrownianPath, t: float | None = None) -> ModelledDistribution:
    """(H . W)_t as a modelled distribution."""
    _check_grid(H, W)
    t = W.T if t is None else float(t)
    W.index_of(t)
    coeffs = _path_coefficients(H, W, t)
    jets = H.jets
    if not jets:
        raise InputError("process has no jets")
    out = jets[0] * 0.0
    for c, jet in zip(coeffs, jets):
        if c != 0.0:
            out = out + jet * c
    return out


def _path_coefficients(H: ElementaryProcess, W: BrownianPath, t: float) -> list:
    """Scalar weight of each distinct jet in (H . W)_t."""
    jets = H.jets
    coeffs = [0.0] * len(jets)
    act = H.active(W)
    for n, jet in enumerate(act):
        if jet is None:
            continue
        a, b = H.partition[n], H.partition[n + 1]
        inc = W.at(min(t, b)) - W.at(min(t, a))
        k = next(i for i, j in enumerate(jets) if j is jet)
        coeffs[k] += inc
    return coeffs


def ito_integrate_scalar(h, W: BrownianPath, partition=None) -> np.ndarray:
    """Cumulative left-point sums sum_n h_n (W_{t_{n+1}} - W_{t_n}) at the
    partition points (default: every node of the path)."""
    if partition is None:
        dW = W.increments
    else:
        part = np.asarray(partition, dtype=float)
        idx = np.array([W.index_of(t) for t in part])
        vals = W.values
        dW = np.diff(vals[idx])
    h = np.asarray(h, dtype=float)
    if h.shape != dW.shape:
        raise InputError(f"need {dW.size} integrand values, got {h.size}")
    out = np.zeros(dW.size + 1)
    np.cumsum(h * dW, out=out[1:])
    return out


# --------------------------------------------------------------------------
# interchange of reconstruction and integration


def _check_hypotheses(structure, filt):
    a0 = structure.min_homogeneity
    if a0.denominator == 1:
        raise ConfigurationError(f"the interchange needs a non-integer lowest homogeneity, got {a0}")
    if filt.regularity <= abs(float(a0)):
        raise ConfigurationError(f"basis regularity {filt.regularity} must exceed |{a0}|")


@dataclass
class FubiniResult:
    lhs: float
    rhs: float

    @property
    def diff(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def relative(self) -> float:
        return self.diff / max(abs(self.lhs), 1.0)

    def as_tuple(self):
        return self.lhs, self.rhs, self.diff


def fubini_check(H: ElementaryProcess, W: BrownianPath, psi, model, basis, n_max: int,
                 cache: dict | None = None) -> FubiniResult:
    """lhs = <R((H . W)_T), psi> and rhs = (<R(H), psi> . W)_T."""
    filt = _filter_of(basis)
    jets = H.jets
    if not jets:
        return FubiniResult(0.0, 0.0)
    _check_hypotheses(jets[0].structure, filt)
    cache = {} if cache is None else cache
    # left: reconstruct the integrated jet
    integrated = integrate_elementary(H, W)
    lhs = evaluate(reconstruct(integrated, model, filt, n_max), psi)
    # right: scalar integrand <R(H(t)), psi>, integrated against W
    act = H.active(W)
    h = np.zeros(len(act))
    for n, jet in enumerate(act):
        if jet is None:
            continue
        key = id(jet)
        if key not in cache:
            cache[key] = evaluate(reconstruct(jet, model, filt, n_max), psi)
        h[n] = cache[key]
    rhs = float(ito_integrate_scalar(h, W, H.partition)[-1])
    return FubiniResult(lhs, rhs)


def left_point_process(a, jet: ModelledDistribution, T: float, k: int) -> ElementaryProcess:
    """H_k = sum_n a(t_n) 1_(t_n, t_{n+1}] jet on 2^k equal intervals."""
    part = np.linspace(0.0, T, 2 ** k + 1)
    blocks = [[(ALWAYS, jet * float(a(t)))] for t in part[:-1]]
    return ElementaryProcess(part, blocks)


@dataclass
class RefinementStudy:
    levels: list
    mean_square_gap: list           # E[(lhs_k - rhs_k)^2]
    cauchy: list                    # E[(lhs_k - lhs_{k+1})^2]
    cauchy_ratios: list
    variance: list                  # sample variance of lhs_k
    isometry: list                  # Ito isometry prediction
    standard_error: list
    paths: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("levels", "mean_square_gap", "cauchy", "cauchy_ratios", "variance",
                                              "isometry", "standard_error", "paths")}


def _fsum_mean(x) -> float:
    x = np.asarray(x, dtype=float).ravel()
    return math.fsum(x) / len(x) if len(x) else 0.0


def fubini_refinement_study(a, jet: ModelledDistribution, T: float, levels, psi, model, basis, n_max: int,
                            paths: int = 10000, seed: int = 0, chunk: int = 500) -> RefinementStudy:
    """Elementary approximations H_k(t) = a(t_n) jet of the integrand a(t) jet.

    For each path the left side reconstructs the integrated jet of every H_k
    (in batches), the right side integrates <R(H_k(t)), psi> against W."""
    filt = _filter_of(basis)
    _check_hypotheses(jet.structure, filt)
    levels = list(levels)
    kmax = max(levels)
    dt = T / 2 ** kmax
    inc = sample_ensemble(T, dt, seed, paths)                   # (paths, 2^kmax)
    proj = evaluate(reconstruct(jet, model, filt, n_max), psi)   # <R jet, psi>
    lhs, rhs = {}, {}
    for k in levels:
        part = np.linspace(0.0, T, 2 ** k + 1)
        av = np.array([float(a(t)) for t in part[:-1]])
        dW = inc.reshape(paths, 2 ** k, -1).sum(axis=2)          # coarse increments
        scal = dW @ av                                          # (paths,) integrated weights
        rhs[k] = scal * proj
        out = np.empty(paths)
        for start in range(0, paths, chunk):
            c = scal[start:start + chunk]
            batch = c[:, None, None] * jet.values[None]
            rec = reconstruct_batch(batch, jet, model, filt, n_max)
            out[start:start + chunk] = rec.evaluate(psi)
        lhs[k] = out
    gap = [_fsum_mean((lhs[k] - rhs[k]) ** 2) for k in levels]
    cauchy = [_fsum_mean((lhs[a_] - lhs[b_]) ** 2) for a_, b_ in zip(levels[:-1], levels[1:])]
    ratios = [c1 / c0 if c0 > 0 else 0.0 for c0, c1 in zip(cauchy[:-1], cauchy[1:])]
    var, iso, se = [], [], []
    for k in levels:
        x = lhs[k]
        m = _fsum_mean(x)
        dev2 = (x - m) ** 2
        v = math.fsum(dev2) / (len(x) - 1)
        var.append(v)
        part = np.linspace(0.0, T, 2 ** k + 1)
        iso.append(proj ** 2 * math.fsum(float(a(t)) ** 2 * (T / 2 ** k) for t in part[:-1]))
        se.append(float(np.std(dev2, ddof=1) / math.sqrt(len(x))))
    return RefinementStudy(levels, gap, cauchy, ratios, var, iso, se, paths)
