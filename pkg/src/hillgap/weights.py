"""Weights w_{s,phi}(k) = (1 + 2|k|)^s phi(|k|), weighted l^2 norms and decay diagnostics.

``phi`` is restricted to products of iterated logarithms,
phi(t) = (log t)^r1 (log log t)^r2 (log log log t)^r3, evaluated no lower
than ``T0 = 16`` so that every factor is positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from hillgap.errors import NonPositiveValues, RangeTooShort, ValidationError

T0 = 16.0
MAX_LOG_DEPTH = 3
# total weighted norm below this counts as membership regardless of block trend
ABSOLUTE_NORM_FLOOR = 1e-10
MIN_FIT_POINTS = 8


@dataclass(frozen=True)
class SlowlyVaryingWeight:
    exponents: tuple = ()

    def __post_init__(self):
        exps = tuple(float(r) for r in self.exponents)
        if len(exps) > MAX_LOG_DEPTH:
            raise ValidationError(f"at most {MAX_LOG_DEPTH} iterated-log exponents are supported")
        object.__setattr__(self, "exponents", exps)

    def __call__(self, t):
        """phi(max(t, T0)); accepts scalars or arrays."""
        t = np.maximum(np.asarray(t, dtype=float), T0)
        out = np.ones_like(t)
        level = t
        for r in self.exponents:
            level = np.log(level)
            if r != 0.0:
                out = out * level ** r
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class WeightFunction:
    s: float = 0.0
    phi: SlowlyVaryingWeight = field(default_factory=SlowlyVaryingWeight)

    def __call__(self, k):
        return weight_eval(self, k)

    def to_dict(self) -> dict:
        return {"s": self.s, "phi_exponents": list(self.phi.exponents)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "WeightFunction":
        return cls(float(d.get("s", 0.0)), SlowlyVaryingWeight(tuple(d.get("phi_exponents", ()))))


def weight_eval(w: WeightFunction, k):
    """(1 + 2|k|)^s phi(max(|k|, T0))."""
    ak = np.abs(np.asarray(k, dtype=float))
    if w.phi.exponents:
        val = (1.0 + 2.0 * ak) ** w.s * w.phi(ak)
    else:
        val = (1.0 + 2.0 * ak) ** w.s
    return val if np.ndim(val) else float(val)


def _l2(x: np.ndarray) -> float:
    """Euclidean norm scaled by the largest entry so tiny or huge terms neither under- nor overflow."""
    x = np.abs(x)
    if x.size == 0:
        return 0.0
    top = float(x.max())
    if top == 0.0 or not math.isfinite(top):
        return top
    return top * float(np.sqrt(np.sum((x / top) ** 2)))


def h_norm(a: Mapping[int, complex], w: WeightFunction) -> float:
    """Weighted l^2 norm of a finitely supported two-sided sequence ``{k: a(k)}``."""
    if not a:
        return 0.0
    ks = np.fromiter(a.keys(), dtype=float, count=len(a))
    vals = np.abs(np.fromiter(a.values(), dtype=complex, count=len(a)))
    return _l2(weight_eval(w, ks) * vals)


def one_sided_h_norm(g, w: WeightFunction, n_max: int) -> float:
    """(sum_{n=1}^{n_max} w(n)^2 g(n)^2)^(1/2); ``g[0]`` holds the n = 1 term."""
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    g = np.abs(np.asarray(g, dtype=float)[:n_max])
    n = np.arange(1, g.size + 1)
    return _l2(weight_eval(w, n) * g)


def fit_decay_exponent(g, n_range: tuple) -> tuple:
    """Least-squares slope of log g(n) against log n for n in ``n_range`` (inclusive).

    ``g[0]`` is the n = 1 value. Returns ``(slope, stderr)``.
    """
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 1 or hi - lo + 1 < MIN_FIT_POINTS:
        raise RangeTooShort(f"fit range [{lo}, {hi}] has fewer than {MIN_FIT_POINTS} points")
    g = np.asarray(g, dtype=float)
    if hi > g.size:
        raise RangeTooShort(f"sequence has {g.size} terms, fit range ends at {hi}")
    y = g[lo - 1:hi]
    if np.any(~(y > 0)):
        raise NonPositiveValues("decay fit needs strictly positive values on the range")
    n = np.arange(lo, hi + 1, dtype=float)
    res = stats.linregress(np.log(n), np.log(y))
    return float(res.slope), float(res.stderr)


def dyadic_ranges(n_max: int) -> list:
    """Complete blocks [2^j, 2^(j+1) - 1] contained in [1, n_max]."""
    out = []
    j = 0
    while 2 ** (j + 1) - 1 <= n_max:
        out.append((2 ** j, 2 ** (j + 1) - 1))
        j += 1
    return out


@dataclass(frozen=True)
class MembershipVerdict:
    """Finite-evidence check of ``g in h^{s,phi}``; heuristic, never a proof."""

    consistent: bool
    block_sums: tuple
    ranges: tuple
    total: float
    reason: str

    @property
    def label(self) -> str:
        return "consistent" if self.consistent else "inconsistent"

    def to_dict(self) -> dict:
        return {
            "verdict": self.label,
            "heuristic": True,
            "reason": self.reason,
            "total_norm": self.total,
            "blocks": [{"lo": lo, "hi": hi, "sum": b} for (lo, hi), b in zip(self.ranges, self.block_sums)],
        }


def membership_verdict(g, w: WeightFunction, n_ranges: Optional[Sequence] = None) -> MembershipVerdict:
    """Dyadic-block test of weighted square summability.

    Block sums sum_{n in block} w(n)^2 g(n)^2 must be nonincreasing once the first
    third of the blocks is skipped; a total norm below ``ABSOLUTE_NORM_FLOOR``
    is accepted outright.
    """
    g = np.abs(np.asarray(g, dtype=float))
    if n_ranges is None:
        n_ranges = dyadic_ranges(g.size)
    n_ranges = tuple((int(lo), int(hi)) for lo, hi in n_ranges)
    if not n_ranges:
        raise RangeTooShort("no dyadic blocks fit in the sequence")
    if n_ranges[-1][1] > g.size:
        raise RangeTooShort("sequence too short for the requested blocks")

    sums = []
    for lo, hi in n_ranges:
        n = np.arange(lo, hi + 1)
        sums.append(float(np.sum((weight_eval(w, n) * g[lo - 1:hi]) ** 2)))
    total = math.sqrt(sum(sums))

    if total < ABSOLUTE_NORM_FLOOR:
        return MembershipVerdict(True, tuple(sums), n_ranges, total, "total weighted norm below floor")
    skip = len(sums) // 3
    tail = sums[skip:]
    bad = [i + skip for i in range(len(tail) - 1) if tail[i + 1] > tail[i]]
    if bad:
        return MembershipVerdict(False, tuple(sums), n_ranges, total,
                                 f"block sums increase after block {bad[0]}")
    return MembershipVerdict(True, tuple(sums), n_ranges, total,
                             f"block sums nonincreasing from block {skip}")


def embedding_constants(s: float, eps: float, phi: SlowlyVaryingWeight, k_max: int = 10 ** 6) -> dict:
    """Constants for w_{s-eps} <= C w_{s,phi} <= C' w_{s+eps} on 0 <= k <= k_max.

    Also reports where each ratio peaks; a peak strictly inside the range
    (ratio falling at the end) is the finite-range evidence of boundedness.
    """
    k = np.arange(0, k_max + 1, dtype=float)
    base = 1.0 + 2.0 * k
    ph = phi(k)
    low = base ** (-eps) / ph            # w_{s-eps} / w_{s,phi}
    C = float(low.max())
    high = C * ph / base ** eps          # C w_{s,phi} / w_{s+eps}
    C2 = float(high.max())
    return {
        "C": C,
        "C_prime": C2,
        "argmax_low": int(low.argmax()),
        "argmax_high": int(high.argmax()),
        "end_ratio_low": float(low[-1]),
        "end_ratio_high": float(high[-1]),
        "holds": bool(np.all(base ** (s - eps) <= C * base ** s * ph * (1 + 1e-12))
                      and np.all(C * base ** s * ph <= C2 * base ** (s + eps) * (1 + 1e-12))),
    }
