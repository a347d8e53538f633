"""Asymptotic residuals of gap lengths, midpoints and endpoints.

For q in H^{-alpha}, 0 <= alpha < 1, the gap data satisfy

    gamma_n        = 2 |qhat(n)|                      + h^{1-2alpha-eps}(n)
    tau_n          = n^2 pi^2 + qhat(0)               + h^{1-2alpha-eps}(n)
    lambda_n^{+-}  = n^2 pi^2 + qhat(0) +- |qhat(n)|  + h^{1-2alpha-eps}(n)

and the sharper matched form compares gamma_n with 2 |(qhat + omega)(n)|,
where omega is the quadratic convolution correction computed by
:func:`compute_omega`. This module computes all residual sequences and
summarizes their decay with log-log fits and dyadic membership verdicts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from hillgap.errors import InsufficientData, NonPositiveValues, RangeTooShort
from hillgap.galerkin import SpectralData
from hillgap.potential import PeriodicPotential, sobolev_norm
from hillgap.weights import (
    MembershipVerdict,
    WeightFunction,
    dyadic_ranges,
    fit_decay_exponent,
    membership_verdict,
)

DEFAULT_EPSILON = 0.05
FIT_START = 8
MIN_N_MAX = 16
LOG_FLOOR = 1e-12
# truncated families get at least this many coefficients per gap index when forming omega
OMEGA_SUPPORT_PER_N = 64

RESIDUAL_NAMES = ("gap", "midpoint", "endpoint_minus", "endpoint_plus", "matched")


@dataclass(frozen=True, eq=False)
class ConvolutionSequence:
    """omega(n) for |n| <= n_max; ``values[n + n_max]`` holds omega(n)."""

    n_max: int
    values: np.ndarray

    def __getitem__(self, n: int) -> complex:
        if abs(n) > self.n_max:
            raise IndexError(f"omega computed only for |n| <= {self.n_max}")
        return complex(self.values[n + self.n_max])

    def positive(self) -> np.ndarray:
        """omega(1), ..., omega(n_max)."""
        return self.values[self.n_max + 1:]

    def negative(self) -> np.ndarray:
        """omega(-1), ..., omega(-n_max)."""
        return self.values[self.n_max - 1::-1]


def compute_omega(p: PeriodicPotential, n_max: int) -> ConvolutionSequence:
    """omega(n) = pi^-2 sum_{k != +-n} qhat(n-k) qhat(n+k) / (n^2 - k^2), exactly.

    With a = n - k the summand is qhat(a) qhat(2n - a) / (a (2n - a)), so only
    pairs of stored coefficients contribute.
    """
    support = {k: v for k, v in p.coeffs.items() if v != 0}
    keys = sorted(support)
    out = np.zeros(2 * n_max + 1, dtype=complex)
    for n in range(-n_max, n_max + 1):
        acc = 0j
        for a in keys:
            b = 2 * n - a
            if a == 0 or b == 0:
                continue
            vb = support.get(b)
            if vb is None:
                continue
            acc += support[a] * vb / (a * b)
        out[n + n_max] = acc / math.pi ** 2
    out.flags.writeable = False
    return ConvolutionSequence(n_max, out)


def _fit_or_none(seq: np.ndarray, n_range) -> Optional[dict]:
    try:
        slope, stderr = fit_decay_exponent(seq, n_range)
    except (NonPositiveValues, RangeTooShort):
        return None
    return {"range": [int(n_range[0]), int(n_range[1])], "slope": slope, "stderr": stderr}


def _floored(seq: np.ndarray) -> np.ndarray:
    a = np.abs(seq)
    return np.where(a == 0, LOG_FLOOR, a)


@dataclass(frozen=True, eq=False)
class ResidualReport:
    n: np.ndarray
    gap_residual: np.ndarray
    midpoint_residual: np.ndarray
    endpoint_minus_residual: np.ndarray
    endpoint_plus_residual: np.ndarray
    matched_residual: np.ndarray
    matched_residual_min_form: np.ndarray
    omega: ConvolutionSequence
    alpha: float
    epsilon: float
    fits: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    @property
    def s_pred(self) -> float:
        return 1.0 - 2.0 * self.alpha - self.epsilon

    @property
    def n_max(self) -> int:
        return int(self.n.size)

    def residual(self, name: str) -> np.ndarray:
        return {
            "gap": self.gap_residual,
            "midpoint": self.midpoint_residual,
            "endpoint_minus": self.endpoint_minus_residual,
            "endpoint_plus": self.endpoint_plus_residual,
            "matched": self.matched_residual,
        }[name]

    def simplification_error(self) -> float:
        """Largest gap between the min-over-signs and the |gamma - 2|qhat+omega|| forms."""
        return float(np.max(np.abs(self.matched_residual - self.matched_residual_min_form)))


def residual_report(p: PeriodicPotential, sd: SpectralData, epsilon: float = DEFAULT_EPSILON) -> ResidualReport:
    n_max = sd.n_max
    if n_max < MIN_N_MAX:
        raise InsufficientData(f"residual fits need n_max >= {MIN_N_MAX}, got {n_max}")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")

    n = np.arange(1, n_max + 1)
    free = (n * np.pi) ** 2 + p.mean
    qn = np.array([p.coefficient(k) for k in n])
    aq = np.abs(qn)
    gamma = sd.gaps

    gap_res = gamma - 2.0 * aq
    mid_res = sd.midpoints - free
    minus_res = sd.lambda_minus - free + aq
    plus_res = sd.lambda_plus - free - aq

    p_omega = p
    if p.is_truncated:
        p_omega = p.with_support(max(p.support_limit, OMEGA_SUPPORT_PER_N * n_max))
    omega = compute_omega(p_omega, n_max)
    q_neg = np.array([p_omega.coefficient(-k) for k in n])
    corr_plus = qn + omega.positive()
    corr_minus = q_neg + omega.negative()
    root = np.sqrt(corr_minus * corr_plus + 0j)
    min_form = np.minimum(np.abs(gamma + 2.0 * root), np.abs(gamma - 2.0 * root))
    matched = np.abs(gamma - 2.0 * np.abs(corr_plus))

    s_pred = 1.0 - 2.0 * p.alpha - epsilon
    w = WeightFunction(s_pred)
    full = (FIT_START, n_max)
    upper = (n_max // 2, n_max)
    fits, verdicts = {}, {}
    seqs = {"gap": gap_res, "midpoint": mid_res, "endpoint_minus": minus_res,
            "endpoint_plus": plus_res, "matched": matched}
    for name, seq in seqs.items():
        fl = _floored(seq)
        fits[name] = {"full": _fit_or_none(fl, full), "upper": _fit_or_none(fl, upper)}
        verdicts[name] = membership_verdict(np.abs(seq), w, dyadic_ranges(n_max))
    fits["omega"] = {"full": _fit_or_none(_floored(omega.positive()), full),
                     "upper": _fit_or_none(_floored(omega.positive()), upper)}

    return ResidualReport(n, gap_res, mid_res, minus_res, plus_res, matched, min_form, omega,
                          p.alpha, epsilon, fits, verdicts)


@dataclass(frozen=True)
class MOCheck:
    """Paired finite-evidence verdicts for {qhat(n)} and {gamma_n} against one weight."""

    potential_verdict: MembershipVerdict
    gap_verdict: MembershipVerdict
    potential_fit: Optional[dict]
    gap_fit: Optional[dict]
    weight: WeightFunction

    @property
    def agree(self) -> bool:
        return self.potential_verdict.consistent == self.gap_verdict.consistent

    def to_dict(self) -> dict:
        return {
            "weight": self.weight.to_dict(),
            "potential": self.potential_verdict.to_dict(),
            "gaps": self.gap_verdict.to_dict(),
            "potential_fit": self.potential_fit,
            "gap_fit": self.gap_fit,
            "agree": self.agree,
        }


def marchenko_ostrovskii_check(p: PeriodicPotential, sd: SpectralData, w: WeightFunction) -> MOCheck:
    """Compare membership of {qhat(n)} and {gamma_n} in h^{s,phi}.

    Realness makes the two-sided coefficient sequence equivalent to its n >= 1 half.
    """
    n_max = sd.n_max
    aq = np.abs(np.array([p.coefficient(k) for k in range(1, n_max + 1)]))
    ranges = dyadic_ranges(n_max)
    vq = membership_verdict(aq, w, ranges)
    vg = membership_verdict(sd.gaps, w, ranges)
    fit_range = (FIT_START, n_max)
    return MOCheck(vq, vg, _fit_or_none(2.0 * aq, fit_range), _fit_or_none(sd.gaps, fit_range), w)


def two_term_endpoint_table(sd: SpectralData, p: PeriodicPotential, n_range: Optional[Sequence] = None) -> list:
    """Rows comparing lambda_n^+- with n^2 pi^2 + qhat(0) -+ |qhat(n)|."""
    lo, hi = (1, sd.n_max) if n_range is None else (int(n_range[0]), int(n_range[1]))
    rows = []
    for n in range(lo, hi + 1):
        base = (n * math.pi) ** 2 + p.mean
        aq = abs(p.coefficient(n))
        lm = float(sd.lambda_minus[n - 1])
        lp = float(sd.lambda_plus[n - 1])
        rows.append({
            "n": n,
            "lambda_minus": lm,
            "lambda_plus": lp,
            "pred_minus": base - aq,
            "pred_plus": base + aq,
            "mismatch_minus": lm - (base - aq),
            "mismatch_plus": lp - (base + aq),
        })
    return rows


def uniformity_spread(items: Sequence, epsilon: float = DEFAULT_EPSILON, alpha_norm: Optional[float] = None) -> dict:
    """Spread of |gap residual| across potentials of (roughly) equal H^{-alpha} norm.

    ``items`` is a sequence of ``(potential, spectral_data)`` pairs. Nothing is
    asserted; the per-n max/min ratio is returned for reporting.
    """
    reports = [residual_report(p, sd, epsilon) for p, sd in items]
    n_max = min(r.n_max for r in reports)
    stack = np.array([np.abs(r.gap_residual[:n_max]) for r in reports])
    norms = [sobolev_norm(p, -(p.alpha if alpha_norm is None else alpha_norm)) for p, _ in items]
    return {
        "norms": norms,
        "max": stack.max(axis=0),
        "min": stack.min(axis=0),
        "spread": stack.max(axis=0) - stack.min(axis=0),
    }
