"""Reproducible fixtures: noises given by wavelet coefficients, smooth and
rough coefficient functions, and the modelled distributions built on them.

Noise coefficients at level n are drawn from a stream seeded by (seed, n), so
raising the top level only adds coefficients and never changes existing ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .besov import ModelledDistribution, lift_holder
from .errors import InputError
from .geometry import Box, Scaling, make_grid
from .model import Model, custom_distribution_model, polynomial_model, rough_model
from .reconstruct import sampling_box
from .structure import noise_structure, polynomial_structure, rough_structure
from .transform import LevelVector, WaveletExpansion, block_levels
from .wavelets import RefinementFilter, daubechies_filter


def noise_expansion(alpha, scaling, filt: RefinementFilter, top_level: int, box, seed: int = 0,
                    amplitude: float = 1.0, signs: str = "random") -> WaveletExpansion:
    """sum over levels n <= top_level of 2^{-n(|s|/2 + alpha)} eps psi^n_x,
    plus father terms eps phi^0_x, for base points x in box.  eps are
    independent signs (signs="random") or all +1 (signs="plus")."""
    s = Scaling.of(scaling)
    box = Box.of(box)
    alpha = float(alpha)

    def draw(rng, shape):
        if signs == "plus":
            return np.ones(shape)
        if signs == "random":
            return rng.choice([-1.0, 1.0], size=shape)
        raise InputError(f"unknown sign mode {signs!r}")

    def window(levels):
        return [(math.floor(lo * 2.0 ** lev), math.ceil(hi * 2.0 ** lev)) for lo, hi, lev in
                zip(box.lo, box.hi, levels)]

    rng = np.random.default_rng([seed, 0, 0])
    w0 = window((0,) * s.d)
    approx = LevelVector((0,) * s.d, tuple(lo for lo, _ in w0),
                         amplitude * draw(rng, tuple(hi - lo + 1 for lo, hi in w0)))
    from .wavelets import mother_set

    blocks = sorted({m.block for m in mother_set(s)})
    details = []
    for n in range(top_level + 1):
        det = {}
        c = amplitude * 2.0 ** (-n * (s.size / 2 + alpha))
        for bi, key in enumerate(blocks):
            rng = np.random.default_rng([seed, n + 1, bi])
            levels = block_levels(n, key, s)
            w = window(levels)
            det[key] = LevelVector(levels, tuple(lo for lo, _ in w), c * draw(rng, tuple(hi - lo + 1 for lo, hi in w)))
        details.append(det)
    return WaveletExpansion(s, filt, approx, details)


def weierstrass(beta: float, terms: int = 12, phase: float = 0.3):
    """x -> sum_k 2^{-k beta} cos(2^k x_1 + phase), a beta-Holder function."""
    def F(pts):
        x = np.asarray(pts, dtype=float)[:, 0]
        return sum(2.0 ** (-k * beta) * np.cos(2.0 ** k * x + phase) for k in range(terms)) / terms ** 0.5
    return F


def smooth_coefficient(kind: str = "cos"):
    table = {
        "zero": lambda pts: np.zeros(len(pts)),
        "one": lambda pts: np.ones(len(pts)),
        "cos": lambda pts: np.cos(np.pi * np.asarray(pts)[:, 0]),
        "bump": lambda pts: 1.0 + 0.5 * np.sin(2.0 * np.asarray(pts)[:, 0] + 0.4),
    }
    if kind not in table:
        raise InputError(f"unknown coefficient function {kind!r}")
    return table[kind]


@dataclass
class Fixture:
    """A model with a modelled distribution and the data used to build it."""

    name: str
    model: Model
    f: ModelledDistribution
    gamma: object
    K: Box
    notes: str = ""
    target: WaveletExpansion | None = None


def _noise_box(K: Box, filt, s):
    sb = sampling_box(K, filt, s)
    pad = 2 * filt.support_length + 2
    return Box(tuple(a - pad for a in sb.lo), tuple(b + pad for b in sb.hi))


def noise_fixture(name: str = "xi-constant", alpha=-0.6, gamma=-0.1, coeff: str = "one", n_f: int = 9,
                  noise_level: int = 10, seed: int = 7, filt: RefinementFilter | None = None, K=((0.0, 1.0),),
                  scaling=(1,)) -> Fixture:
    """Noise model Pi_x Xi = xi and f(x) = a(x) Xi."""
    filt = daubechies_filter(3) if filt is None else filt
    s = Scaling.of(scaling)
    K = Box.of(K)
    st = noise_structure(alpha, s)
    xi = noise_expansion(alpha, s, filt, noise_level, _noise_box(K, filt, s), seed)
    model = custom_distribution_model(st, xi, filt)
    grid = make_grid(n_f, s, sampling_box(K, filt, s))
    a = smooth_coefficient(coeff)(grid.points)
    vals = np.zeros((grid.size, st.dim))
    vals[:, st.index_of("Xi")] = a
    f = ModelledDistribution(st, gamma, grid, vals, K)
    return Fixture(name, model, f, f.gamma, K, f"a={coeff}, alpha={alpha}", xi)


def rough_fixture(name: str = "rough", alpha=-0.6, beta=0.3, gamma=-0.1, coeff: str = "one", n_f: int = 9,
                  noise_level: int = 10, seed: int = 11, filt: RefinementFilter | None = None, K=((0.0, 1.0),),
                  scaling=(1,)) -> Fixture:
    """Rough model with Theta = F Xi and f(x) = a(x) (Theta + F(x) Xi)."""
    filt = daubechies_filter(3) if filt is None else filt
    s = Scaling.of(scaling)
    K = Box.of(K)
    st = rough_structure(alpha, beta, s)
    xi = noise_expansion(alpha, s, filt, noise_level, _noise_box(K, filt, s), seed)
    F = weierstrass(beta)
    model = rough_model(st, xi, F, filt)
    grid = make_grid(n_f, s, sampling_box(K, filt, s))
    a = smooth_coefficient(coeff)(grid.points)
    vals = np.zeros((grid.size, st.dim))
    vals[:, st.index_of("Theta")] = a
    vals[:, st.index_of("Xi")] = a * F(grid.points)
    f = ModelledDistribution(st, gamma, grid, vals, K)
    return Fixture(name, model, f, f.gamma, K, f"a={coeff}, alpha={alpha}, beta={beta}", xi)


_SUITE = {
    "xi-cos": (noise_fixture, dict(alpha=-0.6, gamma=-0.1, coeff="cos", seed=7)),
    "xi-bump": (noise_fixture, dict(alpha=-0.6, gamma=-0.2, coeff="bump", seed=13)),
    "xi-rougher": (noise_fixture, dict(alpha=-0.8, gamma=-0.3, coeff="bump", seed=21)),
    "rough-cos": (rough_fixture, dict(alpha=-0.6, beta=0.3, gamma=-0.1, coeff="cos", seed=11)),
    "rough-bump": (rough_fixture, dict(alpha=-0.7, beta=0.4, gamma=-0.2, coeff="bump", seed=17)),
    "xi-constant": (noise_fixture, dict(alpha=-0.6, gamma=-0.1, coeff="one", seed=7)),
    "zero": (noise_fixture, dict(alpha=-0.6, gamma=-0.1, coeff="zero", seed=7)),
}


def negative_suite(n_max: int = 6, n_f: int | None = None) -> list:
    """Negative-regularity fixtures resolved at depth n_max: the noise stops
    at level n_max, so reconstruction to n_max is the full reconstruction."""
    return [build_fixture(name, n_max, n_f) for name in NEGATIVE_SUITE]


NEGATIVE_SUITE = ("xi-cos", "xi-bump", "xi-rougher", "rough-cos", "rough-bump")
FIXTURE_NAMES = tuple(_SUITE) + ("sine-lift",)


def build_fixture(name: str, n_max: int = 6, n_f: int | None = None, seed: int | None = None,
                  noise_level: int | None = None, K=((0.0, 1.0),)) -> Fixture:
    """A fixture by name.  Noise fixtures are resolved at depth n_max unless
    noise_level says otherwise; the jet grid level defaults to n_max + 4
    (n_max + 3 for the sine lift)."""
    if name == "sine-lift":
        return sine_lift(2.5, n_max + 3 if n_f is None else n_f, K=K)
    if name not in _SUITE:
        raise InputError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")
    builder, kw = _SUITE[name]
    kw = dict(kw)
    if seed is not None:
        kw["seed"] = seed
    n_f = n_max + 4 if n_f is None else n_f
    level = n_max if noise_level is None else noise_level
    return builder(name, n_f=n_f, noise_level=level, K=K, **kw)


def sine_lift(gamma=2.5, n_f: int = 9, filt: RefinementFilter | None = None, K=((0.0, 1.0),)) -> Fixture:
    """Polynomial model and the Taylor lift of sin on the real line."""
    filt = daubechies_filter(3) if filt is None else filt
    K = Box.of(K)
    st = polynomial_structure(1, (1,), 2)
    model = polynomial_model(st, filt)
    grid = make_grid(n_f, (1,), sampling_box(K, filt, (1,)))
    derivs = {(0,): lambda p: np.sin(p[:, 0]), (1,): lambda p: np.cos(p[:, 0]),
              (2,): lambda p: -np.sin(p[:, 0])}
    f = lift_holder(st, gamma, grid, derivs, K)
    return Fixture("sine-lift", model, f, f.gamma, K, "g = sin")


# --------------------------------------------------------------------------
# elementary processes


def fubini_jets(n_max: int = 4, seed: int = 7):
    """(model, [f1, f2, f3]) on the noise model, with f3 = f1 - 2 f2."""
    base = noise_fixture("xi-cos", -0.6, -0.1, "cos", n_max + 2, n_max + 2, seed=seed)
    f1 = base.f
    st = f1.structure
    vals = np.zeros_like(f1.values)
    vals[:, st.index_of("Xi")] = smooth_coefficient("bump")(f1.grid.points)
    f2 = ModelledDistribution(st, f1.gamma, f1.grid, vals, f1.domain)
    return base.model, [f1, f2, f1 - f2 * 2.0]


def elementary_fixture(name: str, jets: list, T: float = 1.0):
    from .stochastic import ALWAYS, ElementaryProcess, Event, localize

    f1, f2, f3 = jets
    if name == "zero":
        return ElementaryProcess([0.0, T], [[]])
    if name == "single":
        return ElementaryProcess([0.0, T], [[(ALWAYS, f1)]])
    if name == "sign-branch":
        up = Event("W(t1) > 0", lambda p: p.last > 0)
        down = Event("W(t1) <= 0", lambda p: p.last <= 0)
        return ElementaryProcess([0.0, T / 2, T], [[(ALWAYS, f1)], [(up, f1), (down, f2)]])
    if name in ("multi", "localized"):
        low = Event("W < -0.3", lambda p: p.last < -0.3)
        mid = Event("-0.3 <= W < 0.3", lambda p: -0.3 <= p.last < 0.3)
        high = Event("W >= 0.3", lambda p: p.last >= 0.3)
        part = np.linspace(0.0, T, 5)
        blocks = [[(ALWAYS, f2)]] + [[(low, f1), (mid, f2), (high, f3)] for _ in range(3)]
        H = ElementaryProcess(part, blocks)
        if name == "localized":
            H = localize(H, lambda p: abs(p.last) <= 0.5)
        return H
    raise InputError(f"unknown elementary-process fixture {name!r}")


ELEMENTARY_FIXTURES = ("zero", "single", "sign-branch", "multi", "localized")
