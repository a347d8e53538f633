import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hillgap.errors import DuplicateIndex, ParityMismatch, RealnessViolation, ValidationError
from hillgap.potential import (
    DELTA_COMB_ALPHA,
    PotentialFamily,
    from_coefficients,
    half_index_coefficient,
    make_family,
    potential_from_spec,
    potential_to_spec,
    sobolev_norm,
)


def test_empty_is_zero():
    p = from_coefficients([], 0.0)
    assert p.coefficient(0) == 0 and p.coefficient(5) == 0
    assert p.mean == 0


def test_constant():
    p = from_coefficients([(0, 5.0)], 0.0)
    assert p.coefficient(0) == 5.0
    assert p.mean == 5.0


def test_mathieu_pair():
    p = from_coefficients([(1, 1.0), (-1, 1.0)], 0.0)
    assert p.coefficient(1) == 1.0 and p.coefficient(-1) == 1.0


def test_duplicate_rejected():
    with pytest.raises(DuplicateIndex):
        from_coefficients([(1, 1.0), (1, 1.0)])


def test_realness_violation_reports_k():
    with pytest.raises(RealnessViolation) as exc:
        from_coefficients([(2, 1 + 1j), (-2, 1 + 1j)])
    assert exc.value.k in (2, -2)


def test_realness_within_tolerance_accepted():
    p = from_coefficients([(1, 1.0), (-1, 1.0 + 5e-13)])
    assert abs(p.coefficient(1) - p.coefficient(-1)) == 0


def test_missing_partner_filled():
    p = from_coefficients([(3, 0.5 + 0.25j)])
    assert p.coefficient(-3) == np.conj(0.5 + 0.25j)


def test_nonreal_mean_rejected():
    with pytest.raises(RealnessViolation):
        from_coefficients([(0, 1j)])


def test_family_delta_comb():
    p = make_family(PotentialFamily.delta_comb(1.0), 3)
    assert {k: p.coefficient(k) for k in range(-3, 4)} == {k: 1.0 for k in range(-3, 4)}
    assert p.coefficient(4) == 0
    assert p.alpha == DELTA_COMB_ALPHA
    assert p.is_truncated and p.support_limit == 3


def test_family_mathieu():
    p = make_family(PotentialFamily.mathieu(1.0), 5)
    assert dict(p.coeffs) == {-1: 1.0, 1: 1.0}
    assert p.alpha == 0.0 and not p.is_truncated


def test_family_constant_and_zero():
    assert dict(make_family(PotentialFamily.constant(5), 4).coeffs) == {0: 5.0}
    assert make_family(PotentialFamily.zero(), 4).mean == 0


def test_family_random_decay():
    p = make_family(PotentialFamily.random_decay(1.0, 7, 4), 64)
    assert len([k for k in p.coeffs if k > 0]) == 4
    assert abs(abs(p.coefficient(2)) - 5 ** -1.51) < 1e-15
    assert round(abs(p.coefficient(2)), 4) == 0.0880
    for k in range(1, 5):
        assert p.coefficient(-k) == np.conj(p.coefficient(k))
    again = make_family(PotentialFamily.random_decay(1.0, 7, 4), 64)
    assert p == again
    other = make_family(PotentialFamily.random_decay(1.0, 8, 4), 64)
    assert p != other


def test_random_decay_truncation():
    p = make_family(PotentialFamily.random_decay(1.0, 7, 16), 4)
    assert p.is_truncated
    full = p.with_support(32)
    assert not full.is_truncated and full.coefficient(16) != 0
    assert full.coefficient(3) == p.coefficient(3)


def test_unknown_family():
    with pytest.raises(ValidationError):
        PotentialFamily("square")


def test_half_index():
    c = make_family(PotentialFamily.constant(5), 4)
    m = make_family(PotentialFamily.mathieu(1), 4)
    assert half_index_coefficient(c, 2, 2) == 5.0
    assert half_index_coefficient(m, 2, 0) == 1.0
    with pytest.raises(ParityMismatch):
        half_index_coefficient(m, 3, 0)


def test_sobolev_examples():
    assert sobolev_norm(from_coefficients([]), -1) == 0
    c = from_coefficients([(0, 5.0)])
    for s in (-2.0, 0.0, 3.5):
        assert sobolev_norm(c, s) == 5.0
    assert sobolev_norm(from_coefficients([(1, 1.0), (-1, 1.0)]), 0) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_spec_round_trip_coeffs():
    spec = {"label": "two", "alpha": 0.25, "coeffs": [[0, 1.5, 0], [2, 0.5, -0.25], [-2, 0.5, 0.25]]}
    p = potential_from_spec(spec)
    assert p.label == "two" and p.alpha == 0.25
    q = potential_from_spec(potential_to_spec(p))
    assert dict(q.coeffs) == dict(p.coeffs)


def test_spec_family():
    p = potential_from_spec({"family": {"tag": "delta_comb", "c": 2.0}, "support_limit": 10})
    assert p.coefficient(10) == 2.0 and p.coefficient(11) == 0


def test_spec_errors():
    with pytest.raises(ValidationError):
        potential_from_spec({"label": "x"})
    with pytest.raises(ValidationError):
        potential_from_spec({"coeffs": [[1.5, 1, 0]]})
    with pytest.raises(ValidationError):
        potential_from_spec({"family": {"tag": "mathieu"}})


def test_immutable():
    p = from_coefficients([(1, 1.0)])
    with pytest.raises(TypeError):
        p.coeffs[2] = 1.0


def test_shifted_changes_only_mean():
    p = from_coefficients([(0, 1.0), (2, 0.3j)])
    q = p.shifted(2.5)
    assert q.mean == 3.5 and q.coefficient(2) == p.coefficient(2)


@st.composite
def real_potentials(draw, max_k=6):
    ks = draw(st.sets(st.integers(1, max_k), max_size=max_k))
    entries = [(0, draw(st.floats(-5, 5)))]
    for k in ks:
        v = complex(draw(st.floats(-3, 3)), draw(st.floats(-3, 3)))
        entries += [(k, v), (-k, v.conjugate())]
    return from_coefficients(entries)


@given(real_potentials())
def test_reflection_round_trip(p):
    assert p.reflected() == p


@given(real_potentials(), st.integers(-8, 8), st.integers(-8, 8))
def test_half_index_hermitian(p, a, b):
    m, mp = 2 * a, 2 * b
    assert half_index_coefficient(p, m, mp) == np.conj(half_index_coefficient(p, mp, m))
    assert half_index_coefficient(p, m + 1, mp + 1) == np.conj(half_index_coefficient(p, mp + 1, m + 1))


@settings(max_examples=50)
@given(real_potentials(), st.floats(-3, 3), st.floats(0, 3))
def test_sobolev_monotone(p, s, ds):
    assert sobolev_norm(p, s) <= sobolev_norm(p, s + ds) * (1 + 1e-12)
