from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rsbesov.errors import InputError
from rsbesov.structure import (GradedVector, RegularityStructure, StructureGroupElement, Symbol, apply_gamma,
                               as_fraction, noise_structure, polynomial_gamma, polynomial_structure, project,
                               rough_structure, truncate)

shifts = st.fractions(min_value=-4, max_value=4, max_denominator=16)


def test_homogeneities_are_exact():
    assert as_fraction("-2/5") == Fraction(-2, 5)
    assert as_fraction(-0.4) == Fraction(-2, 5)
    assert as_fraction(3) == 3
    with pytest.raises(InputError):
        as_fraction("nope")


def test_symbols_sorted_and_sectors_contiguous():
    st_ = rough_structure("-3/5", "3/10")
    hom = [s.homogeneity for s in st_.symbols]
    assert hom == sorted(hom)
    assert st_.min_homogeneity == Fraction(-3, 5)
    for a in set(hom):
        sl = st_.sector(a)
        assert all(st_.symbols[i].homogeneity == a for i in range(sl.start, sl.stop))


def test_polynomial_structure_dimension():
    st_ = polynomial_structure(2, (1, 2), 2)
    assert st_.dim == 4       # 1, X1, X1^2, X2
    assert [str(s.homogeneity) for s in st_.symbols] == ["0", "1", "2", "2"]


def test_duplicate_labels_rejected():
    with pytest.raises(InputError):
        RegularityStructure([Symbol("a", 0), Symbol("a", 1)], (1,))


def test_serialization_round_trip():
    st_ = rough_structure("-3/5", "3/10", (1, 2))
    assert RegularityStructure.loads(st_.dumps()) == st_
    assert RegularityStructure.from_dict(st_.to_dict()) == st_
    with pytest.raises(InputError):
        RegularityStructure.from_dict({"symbols": [{"homogeneity": "1"}]})


def test_graded_vector_components_and_norms():
    st_ = polynomial_structure(1, (1,), 2)
    v = GradedVector.from_components(st_, {0: [1.0], 1: [-3.0], 2: [4.0]})
    assert v.norm(1) == 3.0
    assert v.top_homogeneity() == 2
    assert project(v, 1).coeffs.tolist() == [0.0, -3.0, 0.0]
    assert truncate(v, Fraction(3, 2)).coeffs.tolist() == [1.0, -3.0, 0.0]
    assert (v + v - v * 2.0) == GradedVector(st_)


def test_group_element_validates_triangularity():
    st_ = polynomial_structure(1, (1,), 2)
    bad = np.eye(3)
    bad[2, 0] = 1.0          # maps 1 into a higher sector
    with pytest.raises(InputError):
        StructureGroupElement(st_, bad)


@given(shifts, shifts)
def test_polynomial_gamma_is_a_group_action_exactly(h, k):
    st_ = polynomial_structure(1, (1,), 3)
    lhs = polynomial_gamma(st_, [h], exact=True).matrix.dot(polynomial_gamma(st_, [k], exact=True).matrix)
    rhs = polynomial_gamma(st_, [h + k], exact=True).matrix
    assert (lhs == rhs).all()


def test_polynomial_gamma_translates_monomials():
    """Gamma_h X^2 = (X + h)^2 = X^2 + 2h X + h^2."""
    st_ = polynomial_structure(1, (1,), 2)
    x2 = GradedVector.from_components(st_, {2: [1.0]})
    out = apply_gamma(polynomial_gamma(st_, [0.5]), x2)
    assert out.coeffs.tolist() == [0.25, 1.0, 1.0]


def test_noise_structure_contains_unit():
    st_ = noise_structure("-0.6")
    assert st_.labels == ["Xi", "1"]
    assert st_.index_of("1") == st_.unit_index
    with pytest.raises(InputError):
        st_.index_of("Theta")
