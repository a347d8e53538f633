import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hillgap.errors import NonPositiveValues, RangeTooShort, ValidationError
from hillgap.weights import (
    SlowlyVaryingWeight,
    T0,
    WeightFunction,
    dyadic_ranges,
    embedding_constants,
    fit_decay_exponent,
    h_norm,
    membership_verdict,
    one_sided_h_norm,
    weight_eval,
)

LOG1 = SlowlyVaryingWeight((1.0,))


def test_weight_examples():
    assert weight_eval(WeightFunction(0.0), 7) == 1.0
    assert weight_eval(WeightFunction(1.0), 3) == 7.0
    assert weight_eval(WeightFunction(0.0, LOG1), 100) == pytest.approx(4.6052, abs=1e-4)
    assert weight_eval(WeightFunction(0.0, LOG1), 100) == math.log(100)


def test_floor_below_t0():
    w = WeightFunction(0.0, LOG1)
    assert weight_eval(w, 3) == math.log(T0)
    assert weight_eval(w, 0) == math.log(T0)


def test_log_depth_cap():
    SlowlyVaryingWeight((1, 1, 1))
    with pytest.raises(ValidationError):
        SlowlyVaryingWeight((1, 1, 1, 1))


def test_iterated_logs_positive():
    phi = SlowlyVaryingWeight((-1.0, 2.0, -3.0))
    t = np.array([0, 1, 16, 17, 1e3, 1e6])
    assert np.all(phi(t) > 0)


@pytest.mark.parametrize("exps", [(1.0,), (-1.0,), (0.5, 1.0), (1.0, -2.0, 1.0)])
@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_karamata_small_exponents(exps, lam):
    # the ratio tends to 1 for every exponent; at t = 1e6 the tolerance 0.05 needs |r| small
    phi = SlowlyVaryingWeight(tuple(0.2 * r for r in exps))
    t = 1e6
    assert abs(phi(lam * t) / phi(t) - 1) < 0.05


@pytest.mark.parametrize("r", [1.0, -1.0])
@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_karamata_unit_exponent_large_t(r, lam):
    phi = SlowlyVaryingWeight((r,))
    t = 1e30
    assert abs(phi(lam * t) / phi(t) - 1) < 0.05
    # ratio drifts toward 1 as t grows
    assert abs(phi(lam * 1e12) / phi(1e12) - 1) < abs(phi(lam * 1e6) / phi(1e6) - 1)


@given(st.floats(-3, 3), st.integers(-10 ** 6, 10 ** 6))
def test_phi_one_reduction(s, k):
    assert weight_eval(WeightFunction(s), k) == (1 + 2 * abs(k)) ** s


@given(st.floats(-3, 3), st.lists(st.floats(-2, 2), max_size=3), st.integers(0, 10 ** 6))
def test_weight_positive_even(s, exps, k):
    w = WeightFunction(s, SlowlyVaryingWeight(tuple(exps)))
    assert weight_eval(w, k) > 0
    assert weight_eval(w, k) == weight_eval(w, -k)


def test_h_norm_examples():
    assert h_norm({}, WeightFunction(1.0)) == 0
    assert h_norm({0: 0.0, 3: 0.0}, WeightFunction(1.0)) == 0
    assert h_norm({0: 3.0}, WeightFunction(2.0)) == 3.0
    assert h_norm({1: 1.0, -1: 1.0}, WeightFunction(1.0)) == pytest.approx(math.sqrt(18), rel=1e-15)


def test_one_sided_examples():
    w = WeightFunction(0.0)
    assert one_sided_h_norm(np.zeros(10), w, 10) == 0
    assert one_sided_h_norm([1, 1, 1, 0, 0], w, 5) == pytest.approx(math.sqrt(3), rel=1e-15)
    n = np.arange(1, 11)
    assert one_sided_h_norm(1.0 / n, w, 10) == pytest.approx(1.2449, abs=1e-4)
    with pytest.raises(ValidationError):
        one_sided_h_norm([1.0], w, 0)


small_seqs = st.dictionaries(st.integers(-20, 20), st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                                      allow_infinity=False), max_size=8)


@settings(max_examples=60)
@given(small_seqs, small_seqs, st.floats(-5, 5), st.floats(-2, 2))
def test_h_norm_homogeneous_and_triangle(a, b, c, s):
    w = WeightFunction(s, LOG1)
    assert h_norm({k: c * v for k, v in a.items()}, w) == pytest.approx(abs(c) * h_norm(a, w), rel=1e-12, abs=1e-300)
    ab = {k: a.get(k, 0) + b.get(k, 0) for k in set(a) | set(b)}
    assert h_norm(ab, w) <= (h_norm(a, w) + h_norm(b, w)) * (1 + 1e-12) + 1e-300


def test_fit_examples():
    n = np.arange(1, 101, dtype=float)
    slope, err = fit_decay_exponent(n ** -2.0, (10, 100))
    assert abs(slope + 2.0) < 1e-10
    slope, _ = fit_decay_exponent(np.full(30, 5.0), (1, 30))
    assert abs(slope) < 1e-12
    n = np.arange(1, 501, dtype=float)
    slope, _ = fit_decay_exponent(np.log(n) / n, (50, 500))
    assert -1.0 < slope < -0.8


def test_fit_errors():
    with pytest.raises(RangeTooShort):
        fit_decay_exponent(np.ones(20), (1, 7))
    with pytest.raises(RangeTooShort):
        fit_decay_exponent(np.ones(10), (1, 20))
    g = np.ones(20)
    g[5] = 0
    with pytest.raises(NonPositiveValues):
        fit_decay_exponent(g, (1, 20))


def test_dyadic_ranges():
    assert dyadic_ranges(1) == [(1, 1)]
    assert dyadic_ranges(20) == [(1, 1), (2, 3), (4, 7), (8, 15)]
    assert dyadic_ranges(31)[-1] == (16, 31)


def test_verdict_examples():
    n = np.arange(1, 1024, dtype=float)
    w = WeightFunction(0.0)
    v = membership_verdict(n ** -2.0, w)
    assert v.consistent and len(v.block_sums) == 10
    v = membership_verdict(np.ones(1023), w)
    assert not v.consistent
    assert v.block_sums[-1] > v.block_sums[-2]
    v = membership_verdict(np.zeros(1023), w)
    assert v.consistent and v.total == 0
    d = v.to_dict()
    assert d["heuristic"] is True and d["verdict"] == "consistent"


def test_verdict_respects_weight():
    n = np.arange(1, 512, dtype=float)
    g = n ** -1.5
    assert membership_verdict(g, WeightFunction(0.5)).consistent
    assert not membership_verdict(g, WeightFunction(1.5)).consistent


def test_verdict_explicit_ranges():
    g = np.ones(20)
    with pytest.raises(RangeTooShort):
        membership_verdict(g, WeightFunction(0.0), [(16, 31)])


@pytest.mark.parametrize("s", [-0.5, 0.0, 1.0])
@pytest.mark.parametrize("r", [1.0, -1.0])
def test_embedding_constants(s, r):
    out = embedding_constants(s, 0.1, SlowlyVaryingWeight((r,)), k_max=10 ** 5)
    assert out["holds"]
    assert math.isfinite(out["C"]) and math.isfinite(out["C_prime"])


def test_weightfunction_dict_round_trip():
    w = WeightFunction(1.5, SlowlyVaryingWeight((1.0, -0.5)))
    assert WeightFunction.from_dict(w.to_dict()) == w
