import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from hillgap.errors import StepCountTooSmall, ValidationError
from hillgap.galerkin import converged_spectrum
from hillgap.oracle import DiscriminantOracle, delta_comb_discriminant, discriminant, endpoint_roots
from hillgap.potential import PotentialFamily, from_coefficients, make_family

MATHIEU = make_family(PotentialFamily.mathieu(1.0), 64)


def comb_by_matrices(c, lam):
    """Independent: free propagator over (0,1) followed by the jump [[1,0],[c,1]]."""
    k = np.sqrt(complex(lam))
    if lam == 0:
        P = np.array([[1.0, 1.0], [0.0, 1.0]])
    else:
        P = np.array([[np.cos(k), np.sin(k) / k], [-k * np.sin(k), np.cos(k)]])
    J = np.array([[1.0, 0.0], [c, 1.0]])
    return float(np.trace(J @ P).real)


def trig_by_ivp(p, lam):
    def q(x):
        return sum((v * np.exp(2j * np.pi * k * x)).real for k, v in p.coeffs.items())

    def rhs(x, y):
        u1, v1, u2, v2 = y
        f = q(x) - lam
        return [v1, f * u1, v2, f * u2]

    sol = solve_ivp(rhs, (0, 1), [1, 0, 0, 1], method="DOP853", rtol=1e-12, atol=1e-12)
    y = sol.y[:, -1]
    return y[0] + y[3]


def test_comb_examples():
    o0 = DiscriminantOracle.delta_comb(0.0)
    assert discriminant(o0, math.pi ** 2) == pytest.approx(-2.0, abs=1e-14)
    assert discriminant(o0, 4 * math.pi ** 2) == pytest.approx(2.0, abs=1e-14)
    o1 = DiscriminantOracle.delta_comb(1.0)
    assert discriminant(o1, math.pi ** 2 / 4) == pytest.approx(2 / math.pi, abs=1e-14)
    assert round(discriminant(o1, math.pi ** 2 / 4), 4) == 0.6366
    assert discriminant(o1, 0.0) == 3.0


@given(st.floats(-5, 5), st.floats(-50, 3000))
def test_comb_closed_form_matches_matrices(c, lam):
    assert delta_comb_discriminant(c, lam) == pytest.approx(comb_by_matrices(c, lam), rel=1e-12, abs=1e-11)


def test_comb_negative_branch():
    c, lam = 1.5, -7.0
    r = math.sqrt(-lam)
    assert delta_comb_discriminant(c, lam) == pytest.approx(2 * math.cosh(r) + c * math.sinh(r) / r, rel=1e-14)


def test_comb_continuous_at_zero():
    for lam in (1e-9, -1e-9, 1e-3, -1e-3):
        assert delta_comb_discriminant(2.0, lam) == pytest.approx(comb_by_matrices(2.0, lam), abs=1e-12)


def test_comb_derivative():
    lam = np.array([-3.0, 0.5, 20.0, 300.0])
    _, d = delta_comb_discriminant(1.0, lam, derivative=True)
    h = 1e-6
    fd = (delta_comb_discriminant(1.0, lam + h) - delta_comb_discriminant(1.0, lam - h)) / (2 * h)
    assert np.allclose(d, fd, rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("lam", [-3.0, 0.0, 5.0, 40.0, 400.0])
def test_trig_matches_ivp(lam):
    o = DiscriminantOracle.trig_poly(MATHIEU, 4096)
    assert o.discriminant(lam) == pytest.approx(trig_by_ivp(MATHIEU, lam), rel=1e-8, abs=1e-8)


def test_trig_complex_coefficients():
    p = from_coefficients([(0, -1.0), (1, 0.4 + 0.3j), (2, 0.1j)])
    o = DiscriminantOracle.trig_poly(p)
    for lam in (-2.0, 10.0, 60.0):
        assert o.discriminant(lam) == pytest.approx(trig_by_ivp(p, lam), rel=1e-8, abs=1e-8)


def test_trig_zero_potential_matches_free():
    o = DiscriminantOracle.trig_poly(from_coefficients([]))
    lam = np.array([-4.0, 1.0, 50.0])
    assert np.allclose(o.discriminant(lam), delta_comb_discriminant(0.0, lam), atol=1e-10)


def test_trig_derivative():
    o = DiscriminantOracle.trig_poly(MATHIEU)
    h = 1e-5
    for lam in (3.0, 90.0):
        fd = (o.discriminant(lam + h) - o.discriminant(lam - h)) / (2 * h)
        assert o.derivative(lam) == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_step_guard():
    with pytest.raises(StepCountTooSmall):
        DiscriminantOracle.trig_poly(MATHIEU, 1999)
    with pytest.raises(ValidationError):
        DiscriminantOracle.trig_poly(make_family(PotentialFamily.delta_comb(1.0), 8))
    with pytest.raises(ValidationError):
        DiscriminantOracle("spline")


def test_cache_consistent():
    o = DiscriminantOracle.trig_poly(MATHIEU)
    a = o.discriminant(12.5)
    assert o.discriminant(12.5) == a
    assert float(o.discriminant(np.array([12.5]))[0]) == pytest.approx(a, abs=1e-13)


def test_for_potential_dispatch():
    assert DiscriminantOracle.for_potential(make_family(PotentialFamily.delta_comb(2.0), 16)).kind == "delta_comb"
    assert DiscriminantOracle.for_potential(MATHIEU).kind == "trig_poly"


def test_roots_free():
    sd = endpoint_roots(DiscriminantOracle.delta_comb(0.0), 3)
    n = np.arange(1, 4)
    assert np.allclose(sd.lambda_minus, (n * np.pi) ** 2, atol=1e-8)
    assert np.allclose(sd.lambda_plus, (n * np.pi) ** 2, atol=1e-8)
    assert np.all(sd.gaps < 1e-8)
    assert abs(sd.lambda0) < 1e-8


def test_roots_comb_first_gap():
    sd = endpoint_roots(DiscriminantOracle.delta_comb(1.0), 1)
    assert sd.gaps[0] > 0
    for lam in (sd.lambda_minus[0], sd.lambda_plus[0]):
        assert abs(delta_comb_discriminant(1.0, lam) + 2) < 1e-9


def test_comb_opens_every_gap():
    sd = endpoint_roots(DiscriminantOracle.delta_comb(1.0), 20)
    assert np.all(sd.gaps > 0)
    for lam, n in zip(sd.lambda_plus, sd.n):
        assert abs(delta_comb_discriminant(1.0, lam) - 2 * (-1) ** n) < 1e-8


def test_comb_negative_coupling_lambda0():
    sd = endpoint_roots(DiscriminantOracle.delta_comb(-3.0), 3)
    assert sd.lambda0 < 0
    assert abs(delta_comb_discriminant(-3.0, sd.lambda0) - 2) < 1e-9


def test_mathieu_first_gap_agrees_with_galerkin():
    o = endpoint_roots(DiscriminantOracle.trig_poly(MATHIEU), 1)
    g = converged_spectrum(MATHIEU, 1, 1e-10)
    assert abs(o.gaps[0] - g.gaps[0]) < 1e-6


def test_closed_gaps_resolved():
    # qhat(+-2) only: every odd gap is closed (double root of Delta = -2)
    p = from_coefficients([(2, 1.0), (-2, 1.0)])
    o = endpoint_roots(DiscriminantOracle.trig_poly(p), 4)
    g = converged_spectrum(p, 4, 1e-10)
    assert np.max(np.abs(o.merged() - g.merged())) < 1e-6
    assert o.gaps[0] < 1e-6 and o.gaps[2] < 1e-6


def test_roots_guards():
    with pytest.raises(ValidationError):
        endpoint_roots(DiscriminantOracle.delta_comb(1.0), 3, tol=0)
    with pytest.raises(ValidationError):
        endpoint_roots(DiscriminantOracle.delta_comb(1.0), 0)


def test_wronskian_conserved():
    o = DiscriminantOracle.trig_poly(from_coefficients([(0, 2.0), (1, 0.8), (3, 0.5j)]))
    lam = np.linspace(-20, 3000, 200)
    Y = o._monodromy(lam, derivative=False)
    assert np.max(np.abs(Y[0] * Y[3] - Y[1] * Y[2] - 1)) < 1e-9


def test_wronskian_drift_raises(monkeypatch):
    import hillgap.oracle as mod
    from hillgap.errors import WronskianDrift

    monkeypatch.setattr(mod, "DET_TOL", -1.0)
    with pytest.raises(WronskianDrift):
        DiscriminantOracle.trig_poly(MATHIEU).discriminant(3.0)
