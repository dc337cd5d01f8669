"""Finite-dimensional regularity structures: graded vectors, projections and
lower-triangular structure group elements."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import comb

import numpy as np
import yaml

from .errors import InputError
from .geometry import MultiIndex, Scaling, multi_indices, scaled_degree

UNIT = "1"


def as_fraction(value) -> Fraction:
    """Exact rational from int, str ("-2/5", "-0.4") or float (via its
    shortest decimal representation)."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        try:
            return Fraction(value.strip().replace("−", "-"))
        except ValueError as exc:
            raise InputError(f"cannot parse homogeneity {value!r}") from exc
    raise InputError(f"cannot interpret {value!r} as a homogeneity")


@dataclass(frozen=True)
class Symbol:
    label: str
    homogeneity: Fraction
    monomial: tuple | None = None


class RegularityStructure:
    """Index set A, model space T spanned by explicit symbols, and the
    scaling of the underlying space.

    Symbols are kept sorted by homogeneity so that each sector T_alpha is a
    contiguous slice of the coefficient vector.
    """

    def __init__(self, symbols, scaling, kind: str = "custom"):
        symbols = [Symbol(s.label, as_fraction(s.homogeneity), s.monomial) for s in symbols]
        order = sorted(range(len(symbols)), key=lambda i: (symbols[i].homogeneity, i))
        self.symbols = tuple(symbols[i] for i in order)
        self.scaling = Scaling.of(scaling)
        self.kind = kind
        labels = [s.label for s in self.symbols]
        if len(set(labels)) != len(labels):
            raise InputError("symbol labels must be unique")
        self.index_set = tuple(sorted({s.homogeneity for s in self.symbols}))
        self._slices = {}
        for a in self.index_set:
            idx = [i for i, s in enumerate(self.symbols) if s.homogeneity == a]
            self._slices[a] = slice(idx[0], idx[-1] + 1)
        if Fraction(0) not in self._slices:
            raise InputError("index set must contain 0")
        zero = self._slices[Fraction(0)]
        if zero.stop - zero.start != 1 or self.symbols[zero.start].label != UNIT:
            raise InputError("sector of homogeneity 0 must be spanned by the unit symbol alone")
        self.unit_index = zero.start

    @property
    def dim(self) -> int:
        return len(self.symbols)

    @property
    def labels(self) -> list:
        return [s.label for s in self.symbols]

    @cached_property
    def homogeneities(self) -> np.ndarray:
        return np.array([float(s.homogeneity) for s in self.symbols])

    @property
    def min_homogeneity(self) -> Fraction:
        return self.index_set[0]

    def sector(self, alpha) -> slice:
        alpha = as_fraction(alpha)
        if alpha not in self._slices:
            raise InputError(f"homogeneity {alpha} is not in the index set")
        return self._slices[alpha]

    def sector_dims(self) -> tuple:
        return tuple(self._slices[a].stop - self._slices[a].start for a in self.index_set)

    def below(self, gamma) -> list:
        """A_gamma: homogeneities strictly below gamma."""
        g = as_fraction(gamma)
        return [a for a in self.index_set if a < g]

    def mask_below(self, gamma) -> np.ndarray:
        g = as_fraction(gamma)
        return np.array([s.homogeneity < g for s in self.symbols])

    def index_of(self, label: str) -> int:
        for i, s in enumerate(self.symbols):
            if s.label == label:
                return i
        raise InputError(f"unknown symbol {label!r}")

    def __eq__(self, other):
        return (
            isinstance(other, RegularityStructure)
            and self.symbols == other.symbols
            and self.scaling == other.scaling
        )

    def __hash__(self):
        return hash((self.symbols, self.scaling))

    def __repr__(self):
        parts = ", ".join(f"{s.label}:{s.homogeneity}" for s in self.symbols)
        return f"RegularityStructure([{parts}], s={self.scaling.s})"

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        syms = []
        for s in self.symbols:
            entry = {"label": s.label, "homogeneity": str(s.homogeneity)}
            if s.monomial is not None:
                entry["monomial"] = list(s.monomial)
            syms.append(entry)
        return {"kind": self.kind, "scaling": list(self.scaling.s), "symbols": syms}

    @classmethod
    def from_dict(cls, data: dict) -> "RegularityStructure":
        try:
            syms = [
                Symbol(e["label"], as_fraction(e["homogeneity"]),
                       tuple(e["monomial"]) if e.get("monomial") is not None else None)
                for e in data["symbols"]
            ]
            return cls(syms, data["scaling"], data.get("kind", "custom"))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed structure description: {exc}") from exc

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "RegularityStructure":
        return cls.from_dict(yaml.safe_load(text))


def _monomial_label(k: tuple) -> str:
    if not any(k):
        return UNIT
    if len(k) == 1:
        return "X" if k[0] == 1 else f"X^{k[0]}"
    parts = []
    for i, p in enumerate(k, start=1):
        if p == 1:
            parts.append(f"X{i}")
        elif p > 1:
            parts.append(f"X{i}^{p}")
    return "".join(parts)


def polynomial_structure(d: int, s=None, max_degree: int = 2) -> RegularityStructure:
    s = Scaling.isotropic(d) if s is None else Scaling.of(s)
    if s.d != d:
        raise InputError("scaling dimension does not match d")
    if max_degree < 0:
        raise InputError("max_degree must be non-negative")
    syms = [Symbol(_monomial_label(k.k), Fraction(scaled_degree(k, s)), k.k) for k in multi_indices(s, max_degree)]
    return RegularityStructure(syms, s, kind="polynomial")


def noise_structure(alpha, s=(1,)) -> RegularityStructure:
    """One noise symbol Xi at a non-zero homogeneity alpha, plus the unit."""
    a = as_fraction(alpha)
    if a == 0:
        raise InputError("noise homogeneity must be non-zero")
    return RegularityStructure([Symbol("Xi", a), Symbol(UNIT, Fraction(0))], s, kind="noise")


def rough_structure(alpha, beta, s=(1,)) -> RegularityStructure:
    """Symbols Xi (alpha), Theta (alpha + beta) and the unit, where Theta is
    realized as the product of the noise with a beta-Hoelder function."""
    a, b = as_fraction(alpha), as_fraction(beta)
    if b <= 0 or a + b == 0 or a == 0:
        raise InputError("need beta > 0 and alpha, alpha + beta non-zero")
    return RegularityStructure(
        [Symbol("Xi", a), Symbol("Theta", a + b), Symbol(UNIT, Fraction(0))], s, kind="rough"
    )


class GradedVector:
    """Element of T stored as a dense coefficient vector in symbol order."""

    def __init__(self, structure: RegularityStructure, coeffs=None):
        self.structure = structure
        if coeffs is None:
            coeffs = np.zeros(structure.dim)
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (structure.dim,):
            raise InputError(f"expected {structure.dim} coefficients, got shape {coeffs.shape}")
        self.coeffs = coeffs

    @classmethod
    def from_components(cls, structure, components: dict) -> "GradedVector":
        """components maps either a homogeneity to a sector vector or a
        symbol label to a scalar."""
        c = np.zeros(structure.dim)
        for key, val in components.items():
            if isinstance(key, str) and not _looks_numeric(key):
                c[structure.index_of(key)] += float(val)
            else:
                sl = structure.sector(key)
                c[sl] += np.asarray(val, dtype=float)
        return cls(structure, c)

    @classmethod
    def unit(cls, structure) -> "GradedVector":
        c = np.zeros(structure.dim)
        c[structure.unit_index] = 1.0
        return cls(structure, c)

    def components(self) -> dict:
        return {a: self.coeffs[self.structure.sector(a)].copy() for a in self.structure.index_set
                if np.any(self.coeffs[self.structure.sector(a)] != 0)}

    def component(self, alpha) -> np.ndarray:
        return self.coeffs[self.structure.sector(alpha)]

    def norm(self, alpha) -> float:
        return float(np.linalg.norm(self.component(alpha)))

    def top_homogeneity(self):
        nz = np.flatnonzero(self.coeffs)
        if nz.size == 0:
            return None
        return max(self.structure.symbols[i].homogeneity for i in nz)

    def _check(self, other):
        if not isinstance(other, GradedVector) or other.structure != self.structure:
            raise InputError("graded vectors over different structures")

    def __add__(self, other):
        self._check(other)
        return GradedVector(self.structure, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return GradedVector(self.structure, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return GradedVector(self.structure, float(c) * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return GradedVector(self.structure, -self.coeffs)

    def __eq__(self, other):
        return isinstance(other, GradedVector) and other.structure == self.structure and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        terms = [f"{c:g}*{s.label}" for c, s in zip(self.coeffs, self.structure.symbols) if c != 0]
        return "GradedVector(" + (" + ".join(terms) or "0") + ")"


def _looks_numeric(key: str) -> bool:
    try:
        as_fraction(key)
        return True
    except InputError:
        return False


def project(tau: GradedVector, alpha) -> GradedVector:
    sl = tau.structure.sector(alpha)
    c = np.zeros_like(tau.coeffs)
    c[sl] = tau.coeffs[sl]
    return GradedVector(tau.structure, c)


def truncate(tau: GradedVector, gamma) -> GradedVector:
    """Drop every component of homogeneity >= gamma."""
    return GradedVector(tau.structure, np.where(tau.structure.mask_below(gamma), tau.coeffs, 0.0))


class StructureGroupElement:
    """Linear map on T given by a matrix whose column j is the image of the
    j-th symbol. Validated on construction: unit-triangular with respect to
    the grading, and fixing the unit."""

    def __init__(self, structure: RegularityStructure, matrix, tol: float = 0.0):
        self.structure = structure
        m = np.asarray(matrix)
        if m.shape != (structure.dim, structure.dim):
            raise InputError("group element has the wrong shape")
        h = [s.homogeneity for s in structure.symbols]
        for i in range(structure.dim):
            for j in range(structure.dim):
                val = m[i, j]
                expected = 1 if i == j else 0
                if h[i] >= h[j] and abs(val - expected) > tol:
                    raise InputError(
                        f"entry ({structure.symbols[i].label}, {structure.symbols[j].label}) violates triangularity"
                    )
        self.matrix = m

    @classmethod
    def identity(cls, structure) -> "StructureGroupElement":
        return cls(structure, np.eye(structure.dim))

    def __matmul__(self, other: "StructureGroupElement") -> "StructureGroupElement":
        return StructureGroupElement(self.structure, self.matrix @ other.matrix)

    def __eq__(self, other):
        return isinstance(other, StructureGroupElement) and np.array_equal(self.matrix, other.matrix)


def apply_gamma(gamma: StructureGroupElement, tau: GradedVector) -> GradedVector:
    if gamma.structure != tau.structure:
        raise InputError("group element and vector live on different structures")
    return GradedVector(tau.structure, np.asarray(gamma.matrix, dtype=float) @ tau.coeffs)


def polynomial_translation_matrix(structure: RegularityStructure, h, exact: bool = False):
    """Matrix of P(X) -> P(X + h 1) on the monomial basis.

    With exact=True, h may contain Fractions and the result is an object
    array of Fractions."""
    if structure.kind != "polynomial":
        raise InputError("polynomial translation requires a polynomial structure")
    h = list(h) if np.ndim(h) else [h]
    if len(h) != structure.scaling.d:
        raise InputError("translation has wrong dimension")
    dim = structure.dim
    if exact:
        h = [as_fraction(v) if not isinstance(v, Fraction) else v for v in h]
        m = np.empty((dim, dim), dtype=object)
        m.fill(Fraction(0))
    else:
        h = [float(v) for v in h]
        m = np.zeros((dim, dim))
    monos = [s.monomial for s in structure.symbols]
    for j, kj in enumerate(monos):
        for i, ki in enumerate(monos):
            if all(a <= b for a, b in zip(ki, kj)):
                val = Fraction(1) if exact else 1.0
                for a, b, hh in zip(ki, kj, h):
                    val = val * comb(b, a) * hh ** (b - a)
                m[i, j] = val
    return m


def polynomial_gamma(structure, h, exact: bool = False) -> StructureGroupElement:
    return StructureGroupElement(structure, polynomial_translation_matrix(structure, h, exact))
