"""Floquet discriminant oracle, independent of the Fourier-Galerkin route.

Delta(lambda) is the trace of the period-1 monodromy matrix of
-u'' + q u = lambda u. Bands are where |Delta| <= 2; periodic eigenvalues
solve Delta = 2 and semiperiodic ones Delta = -2.

Two kinds of potential have a trustworthy independent evaluation:

* Dirac comb q = c sum_j delta(x - j): the monodromy is the jump
  [[1, 0], [c, 1]] times the free propagator over (0, 1), which gives
  Delta = 2 cos(sqrt(lambda)) + c sin(sqrt(lambda)) / sqrt(lambda).
* Trigonometric polynomials: fourth-order Magnus integration with
  Gauss-Legendre nodes. Each step is the exponential of a traceless 2x2
  matrix, so the monodromy determinant is 1 up to rounding.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hillgap.errors import BracketingFailure, StepCountTooSmall, ValidationError, WronskianDrift
from hillgap.galerkin import SpectralData, _needed, extract_endpoints
from hillgap.potential import PeriodicPotential, sobolev_norm

MIN_STEPS = 2000
DEFAULT_STEPS = 2048
MAX_STEPS = 2 ** 18
DET_TOL = 1e-9
GRID_DENSITY = 64           # grid points per unit of sqrt(|lambda|)
RETRY_REFINEMENT = 8
# an extremum of sigma*Delta this far below 2 is not a gap at all
TOUCH_TOL = 1e-9
_CHUNK = 2 ** 19            # lambda-values x steps per vectorized block
_SQRT3 = math.sqrt(3.0)


def _cosh_sinhc(x):
    """cosh(sqrt x), sinh(sqrt x)/sqrt x and d/dx of the latter, for real x of any sign."""
    r = np.sqrt(np.abs(x))
    pos = x > 0
    C = np.where(pos, np.cosh(r), np.cos(r))
    with np.errstate(invalid="ignore", divide="ignore"):
        S = np.where(r > 0, np.where(pos, np.sinh(r), np.sin(r)) / np.where(r > 0, r, 1.0), 1.0)
        small = np.abs(x) < 1e-2
        D_series = 1 / 6 + x * (1 / 60 + x * (1 / 1680 + x * (1 / 90720 + x / 7983360)))
        D = np.where(small, D_series, (C - S) / (2 * np.where(small, 1.0, x)))
    return C, S, D


def _reduce2(e11, e12, e21, e22):
    """Ordered product E[..., S-1] ... E[..., 1] E[..., 0] along the last axis."""
    while e11.shape[-1] > 1:
        if e11.shape[-1] % 2:
            pad = [(0, 0)] * (e11.ndim - 1) + [(0, 1)]
            e11 = np.pad(e11, pad, constant_values=1.0)
            e22 = np.pad(e22, pad, constant_values=1.0)
            e12 = np.pad(e12, pad)
            e21 = np.pad(e21, pad)
        a11, a12, a21, a22 = e11[..., 1::2], e12[..., 1::2], e21[..., 1::2], e22[..., 1::2]
        b11, b12, b21, b22 = e11[..., 0::2], e12[..., 0::2], e21[..., 0::2], e22[..., 0::2]
        e11 = a11 * b11 + a12 * b21
        e12 = a11 * b12 + a12 * b22
        e21 = a21 * b11 + a22 * b21
        e22 = a21 * b12 + a22 * b22
    return e11[..., 0], e12[..., 0], e21[..., 0], e22[..., 0]


def _reduce2_with_derivative(E, dE):
    """Like :func:`_reduce2` but also carries d(product) by the product rule."""
    E = list(E)
    dE = list(dE)
    while E[0].shape[-1] > 1:
        if E[0].shape[-1] % 2:
            pad = [(0, 0)] * (E[0].ndim - 1) + [(0, 1)]
            E = [np.pad(e, pad, constant_values=1.0 if i in (0, 3) else 0.0) for i, e in enumerate(E)]
            dE = [np.pad(d, pad) for d in dE]
        A = [e[..., 1::2] for e in E]
        B = [e[..., 0::2] for e in E]
        dA = [d[..., 1::2] for d in dE]
        dB = [d[..., 0::2] for d in dE]

        def mul(X, Y):
            return [X[0] * Y[0] + X[1] * Y[2], X[0] * Y[1] + X[1] * Y[3],
                    X[2] * Y[0] + X[3] * Y[2], X[2] * Y[1] + X[3] * Y[3]]

        E = mul(A, B)
        dE = [u + v for u, v in zip(mul(dA, B), mul(A, dB))]
    return [e[..., 0] for e in E], [d[..., 0] for d in dE]


def _comb_monodromy(c: float, lam: np.ndarray):
    """Entries of [[1, 0], [c, 1]] @ [[C, Sc], [-lam Sc, C]] and their lambda-derivatives.

    C = cos(sqrt lam), Sc = sin(sqrt lam)/sqrt lam (cosh/sinh for lam < 0), both entire in lam.
    """
    x = lam
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 0.0)
    # power series through x^4 near the branch point of sqrt
    cos_s = 1 - xs / 2 + xs ** 2 / 24 - xs ** 3 / 720 + xs ** 4 / 40320
    sinc_s = 1 - xs / 6 + xs ** 2 / 120 - xs ** 3 / 5040 + xs ** 4 / 362880
    dcos_s = -1 / 2 + xs / 12 - xs ** 2 / 240 + xs ** 3 / 10080
    dsinc_s = -1 / 6 + xs / 60 - xs ** 2 / 1680 + xs ** 3 / 90720

    r = np.sqrt(np.where(small, 1.0, np.abs(x)))
    pos = x > 0
    co = np.where(pos, np.cos(r), np.cosh(r))
    sinc = np.where(pos, np.sin(r), np.sinh(r)) / r
    C = np.where(small, cos_s, co)
    Sc = np.where(small, sinc_s, sinc)
    # d/dx cos(sqrt x) = -Sc/2 for either sign of x
    dC = np.where(small, dcos_s, -0.5 * sinc)
    dSc = np.where(small, dsinc_s, (co - sinc) / (2 * np.where(small, 1.0, x)))
    Y = (C, Sc, c * C - x * Sc, c * Sc + C)
    dY = (dC, dSc, c * dC - Sc - x * dSc, c * dSc + dC)
    return Y, dY


def delta_comb_discriminant(c: float, lam, derivative: bool = False):
    """Closed-form Delta = 2 cos(sqrt lam) + c sin(sqrt lam)/sqrt lam (and dDelta/dlam)."""
    arr = np.asarray(lam, dtype=float)
    Y, dY = _comb_monodromy(c, arr)
    val = Y[0] + Y[3]
    if not derivative:
        return val if val.ndim else float(val)
    dval = dY[0] + dY[3]
    if val.ndim:
        return val, dval
    return float(val), float(dval)


@dataclass
class DiscriminantOracle:
    """Evaluator of Delta(lambda) for a delta comb or a trigonometric polynomial.

    Build with :meth:`delta_comb` or :meth:`trig_poly`. Scalar evaluations are
    memoized; the cache is guarded by a lock.
    """

    kind: str
    c: float = 0.0
    potential: Optional[PeriodicPotential] = None
    steps: int = DEFAULT_STEPS
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.kind not in ("delta_comb", "trig_poly"):
            raise ValidationError(f"unknown oracle kind {self.kind!r}")
        if self.kind == "trig_poly":
            if self.potential is None:
                raise ValidationError("trig_poly oracle needs a potential")
            if self.potential.is_truncated:
                raise ValidationError("trig_poly oracle needs an exactly finite potential")
            if self.steps < MIN_STEPS:
                raise StepCountTooSmall(f"steps must be >= {MIN_STEPS}, got {self.steps}")
            self._nodes = None

    @classmethod
    def delta_comb(cls, c: float) -> "DiscriminantOracle":
        return cls("delta_comb", c=float(c))

    @classmethod
    def trig_poly(cls, p: PeriodicPotential, steps: int = DEFAULT_STEPS) -> "DiscriminantOracle":
        return cls("trig_poly", potential=p, steps=int(steps))

    @classmethod
    def for_potential(cls, p: PeriodicPotential, steps: int = DEFAULT_STEPS) -> "DiscriminantOracle":
        """Pick the oracle kind matching ``p``; singular potentials other than combs are refused."""
        if p.family is not None and p.family.tag == "delta_comb":
            return cls.delta_comb(p.family.c)
        if p.is_truncated:
            raise ValidationError(f"no independent oracle for truncated potential {p.label!r}")
        return cls.trig_poly(p, steps)

    def with_steps(self, steps: int) -> "DiscriminantOracle":
        if self.kind != "trig_poly":
            return self
        return DiscriminantOracle.trig_poly(self.potential, steps)

    def lower_bound(self) -> float:
        """Crude lambda below lambda_0: -(1 + ||q||)^2."""
        if self.kind == "delta_comb":
            return -(1.0 + abs(self.c)) ** 2
        return -(1.0 + sobolev_norm(self.potential, 0.0)) ** 2

    # -- trig_poly machinery ------------------------------------------------

    def _gauss_values(self):
        if self._nodes is None:
            S = self.steps
            h = 1.0 / S
            j = np.arange(S)
            x1 = (j + 0.5 - _SQRT3 / 6) * h
            x2 = (j + 0.5 + _SQRT3 / 6) * h
            q1 = np.zeros(S)
            q2 = np.zeros(S)
            for k, v in self.potential.coeffs.items():
                if v == 0:
                    continue
                q1 += (v * np.exp(2j * np.pi * k * x1)).real
                q2 += (v * np.exp(2j * np.pi * k * x2)).real
            self._nodes = (q1, q2)
        return self._nodes

    def _monodromy(self, lam: np.ndarray, derivative: bool):
        """Monodromy entries (Y11, Y12, Y21, Y22) and, optionally, dY/dlambda."""
        if self.kind == "delta_comb":
            Y, dY = _comb_monodromy(self.c, lam)
            return (Y, dY) if derivative else Y
        q1, q2 = self._gauss_values()
        S = self.steps
        h = 1.0 / S
        cc = (_SQRT3 / 12) * h * h * (q1 - q2)
        out, dout = [], []
        chunk = max(1, _CHUNK // S)
        for start in range(0, lam.size, chunk):
            L = lam[start:start + chunk, None]
            Vm = 0.5 * (q1 + q2) - L
            mu2 = cc * cc + h * h * Vm
            C, Sh, D = _cosh_sinhc(mu2)
            E = [C + Sh * cc, np.broadcast_to(Sh * h, C.shape), Sh * h * Vm, C - Sh * cc]
            if derivative:
                dC = -0.5 * h * h * Sh
                dS = -h * h * D
                dE = [dC + dS * cc, dS * h, dS * h * Vm - Sh * h, dC - dS * cc]
                Y, dY = _reduce2_with_derivative(E, dE)
                dout.append(np.stack(dY))
            else:
                Y = _reduce2(*E)
            out.append(np.stack(Y))
        Y = tuple(np.concatenate(out, axis=1))
        drift = np.abs(Y[0] * Y[3] - Y[1] * Y[2] - 1.0)
        if np.any(drift > DET_TOL):
            i = int(np.argmax(drift))
            raise WronskianDrift(f"monodromy determinant off by {drift[i]:.2e} at lambda={lam[i]!r}")
        if derivative:
            return Y, tuple(np.concatenate(dout, axis=1))
        return Y

    # -- public evaluation --------------------------------------------------

    def discriminant(self, lam):
        """Delta(lambda) for a scalar or an array of real lambda."""
        scalar = np.ndim(lam) == 0
        if scalar:
            key = float(lam)
            with self._lock:
                hit = self._cache.get(key)
            if hit is not None:
                return hit
        arr = np.atleast_1d(np.asarray(lam, dtype=float))
        Y = self._monodromy(arr, derivative=False)
        val = Y[0] + Y[3]
        if scalar:
            out = float(val[0])
            with self._lock:
                self._cache[key] = out
            return out
        return val

    def derivative(self, lam) -> float:
        """dDelta/dlambda at a scalar lambda."""
        arr = np.atleast_1d(np.asarray(lam, dtype=float))
        _, dY = self._monodromy(arr, derivative=True)
        return float(dY[0][0] + dY[3][0])

    def gap_function(self, lam) -> float:
        """Delta^2 - 4 written as (Y11 - Y22)^2 + 4 Y12 Y21.

        Positive inside gaps, negative inside bands. Near a nearly closed gap all
        three monodromy combinations are small, so this form keeps the relative
        accuracy that Delta -+ 2 loses to cancellation.
        """
        Y = self._monodromy(np.atleast_1d(np.asarray(lam, dtype=float)), derivative=False)
        return float((Y[0][0] - Y[3][0]) ** 2 + 4.0 * Y[1][0] * Y[2][0])

    def calibrated(self, lam_max: float, tol: float) -> "DiscriminantOracle":
        """Double the step count until Delta moves by less than tol/10 (relative once |Delta| > 1) on probes."""
        if self.kind != "trig_poly":
            return self
        probes = np.linspace(self.lower_bound(), lam_max, 24)
        cur = self
        prev_val = cur.discriminant(probes)
        while True:
            nxt = cur.with_steps(cur.steps * 2)
            val = nxt.discriminant(probes)
            # relative to max(1, |Delta|): far below lambda_0 Delta is exponentially large
            if np.max(np.abs(val - prev_val) / np.maximum(1.0, np.abs(val))) < tol / 10:
                return cur
            if nxt.steps >= MAX_STEPS:
                return nxt
            cur, prev_val = nxt, val


def discriminant(o: DiscriminantOracle, lam):
    return o.discriminant(lam)


def _bisect(f, a, b, fa_negative: bool, tol: float, max_iter: int = 200):
    """Root of f on [a, b] given the sign at a; stops when width and |f| are below tol."""
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        fm = f(mid)
        if (fm < 0) == fa_negative:
            a = mid
        else:
            b = mid
        if b - a < tol and abs(fm) < tol:
            break
    return 0.5 * (a + b)


def _grid(lam_lo: float, k_top: float, density: int) -> np.ndarray:
    t_neg = math.sqrt(max(-lam_lo, 0.0))
    neg = -np.linspace(t_neg, 0.0, max(2, int(math.ceil(density * t_neg)) + 1)) ** 2
    pos = np.linspace(0.0, k_top, int(math.ceil(density * k_top)) + 1) ** 2
    return np.concatenate([neg[:-1], pos])


class _Incomplete(Exception):
    pass


def _collect(o: DiscriminantOracle, grid, vals, n_max: int, tol: float):
    if not vals[0] > 2:
        raise _Incomplete("discriminant below 2 at the scan start")
    i0 = int(np.argmax(vals <= 2))
    if i0 == 0:
        raise _Incomplete("no crossing for lambda_0")
    lam0 = _bisect(lambda x: o.discriminant(x) - 2.0, grid[i0 - 1], grid[i0], False, tol)
    need_p, need_s = _needed(n_max)

    lists = {}
    for sigma in (1.0, -1.0):
        g = sigma * vals
        out = [lam0] if sigma > 0 else []
        need = need_p if sigma > 0 else need_s
        for i in range(max(i0, 1), grid.size - 1):
            if len(out) >= need:
                break
            if not (g[i] >= g[i - 1] and g[i] > g[i + 1]):
                continue
            lo, hi = grid[i - 1], grid[i + 1]
            star = _bisect(lambda x: -sigma * o.derivative(x), lo, hi, True, tol * 1e-3)
            if o.gap_function(star) > 0.0:
                left = np.nonzero((grid < star) & (g < 2.0))[0]
                right = np.nonzero((grid > star) & (g < 2.0))[0]
                if left.size == 0 or right.size == 0:
                    break
                lm = _bisect(o.gap_function, grid[left[-1]], star, True, tol)
                lp = _bisect(o.gap_function, star, grid[right[0]], False, tol)
                out += [lm, lp]
            elif sigma * o.discriminant(star) >= 2.0 - TOUCH_TOL:
                # monodromy is +-identity to rounding: closed gap, double root
                out += [star, star]
        if len(out) < need:
            raise _Incomplete(f"found {len(out)} of {need} {'periodic' if sigma > 0 else 'semiperiodic'} roots")
        lists[sigma] = out[:need]
    return lists[1.0], lists[-1.0]


def endpoint_roots(o: DiscriminantOracle, n_max: int, tol: float = 1e-10) -> SpectralData:
    """Gap endpoints from the roots of Delta = +-2.

    Delta is scanned on a grid uniform in sqrt(|lambda|); simple crossings are
    refined by bisection, and each extremum of +-Delta is located by bisection
    on dDelta/dlambda so that closed (double-root) gaps are resolved too.
    """
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    k_top = (n_max + 3) * math.pi
    o = o.calibrated(k_top ** 2, tol)
    lam_lo = o.lower_bound()
    for _ in range(10):
        if o.discriminant(lam_lo) > 2:
            break
        lam_lo *= 4
    last = None
    for density in (GRID_DENSITY, GRID_DENSITY * RETRY_REFINEMENT):
        grid = _grid(lam_lo, k_top, density)
        vals = o.discriminant(grid)
        try:
            P, S = _collect(o, grid, vals, n_max, tol)
        except _Incomplete as exc:
            last = exc
            continue
        meta = {"method": "oracle", "kind": o.kind, "grid_density": density, "tol": tol}
        if o.kind == "trig_poly":
            meta["steps"] = o.steps
        conv = np.full(n_max + 1, tol)
        return extract_endpoints(P, S, n_max, conv, meta)
    raise BracketingFailure(f"could not bracket all endpoints up to n={n_max}: {last}")
