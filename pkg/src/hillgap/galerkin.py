"""Fourier-Galerkin truncation of the periodic and semiperiodic problems.

On [0, 1] the periodic (Gamma+ = even m) and semiperiodic (Gamma- = odd m)
problems are expanded in exp(i m pi x). The operator -d^2/dx^2 + q becomes

    M[m, m'] = (m pi)^2 [m = m'] + qhat((m - m') / 2),

a Hermitian Toeplitz-plus-diagonal matrix. Its sorted eigenvalues give the
gap endpoints: even gaps from Gamma+, odd gaps from Gamma-.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from hillgap.errors import InterlacingViolation, NoConvergence, NotHermitian, SupportTooSmall, ValidationError
from hillgap.potential import PeriodicPotential

log = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
# computed gaps in (-GAP_CLAMP, 0) are rounding noise of a closed gap
GAP_CLAMP = 1e-9
INTERLACE_RTOL = 1e-9
MIN_HALF_BAND = 4
MAX_DOUBLINGS = 6
# endpoint changes below ROUNDOFF_FACTOR * eps * ||M|| are eigensolver rounding, not truncation
ROUNDOFF_FACTOR = 16.0


class Parity(enum.Enum):
    PERIODIC = "periodic"
    SEMIPERIODIC = "semiperiodic"

    def modes(self, N: int) -> np.ndarray:
        """Basis indices m, increasing: even |m| <= 2N, or odd |m| <= 2N + 1."""
        if self is Parity.PERIODIC:
            return np.arange(-2 * N, 2 * N + 1, 2)
        return np.arange(-2 * N - 1, 2 * N + 2, 2)


@dataclass(frozen=True)
class GalerkinProblem:
    parity: Parity
    half_band: int
    matrix: np.ndarray

    @property
    def modes(self) -> np.ndarray:
        return self.parity.modes(self.half_band)


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralData:
    """lambda_0 and the gap endpoints lambda_n^-, lambda_n^+ for 1 <= n <= n_max.

    Arrays are indexed from n = 1 (``lambda_minus[0]`` is lambda_1^-).
    ``conv_err[0]`` refers to lambda_0, ``conv_err[n]`` to gap n.
    """

    lambda0: float
    lambda_minus: np.ndarray
    lambda_plus: np.ndarray
    conv_err: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lm = _readonly(self.lambda_minus)
        lp = _readonly(self.lambda_plus)
        if lm.shape != lp.shape or lm.ndim != 1:
            raise ValidationError("endpoint arrays must be 1-D with equal length")
        object.__setattr__(self, "lambda0", float(self.lambda0))
        object.__setattr__(self, "lambda_minus", lm)
        object.__setattr__(self, "lambda_plus", lp)
        conv = np.zeros(lm.size + 1) if self.conv_err is None else self.conv_err
        object.__setattr__(self, "conv_err", _readonly(conv))
        check_interlacing(self.lambda0, lm, lp)

    @property
    def n_max(self) -> int:
        return self.lambda_minus.size

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.n_max + 1)

    @property
    def gaps(self) -> np.ndarray:
        return np.maximum(self.lambda_plus - self.lambda_minus, 0.0)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.lambda_plus + self.lambda_minus)

    def merged(self) -> np.ndarray:
        """lambda_0, lambda_1^-, lambda_1^+, lambda_2^-, ... as one array."""
        out = np.empty(2 * self.n_max + 1)
        out[0] = self.lambda0
        out[1::2] = self.lambda_minus
        out[2::2] = self.lambda_plus
        return out

    def truncated(self, n_max: int) -> "SpectralData":
        return SpectralData(self.lambda0, self.lambda_minus[:n_max], self.lambda_plus[:n_max],
                            self.conv_err[:n_max + 1], dict(self.meta))

    def __eq__(self, other):
        if not isinstance(other, SpectralData):
            return NotImplemented
        return (self.lambda0 == other.lambda0
                and np.array_equal(self.lambda_minus, other.lambda_minus)
                and np.array_equal(self.lambda_plus, other.lambda_plus)
                and np.array_equal(self.conv_err, other.conv_err))


def check_interlacing(lambda0, lambda_minus, lambda_plus) -> None:
    """lambda_0 < lambda_1^- <= lambda_1^+ < lambda_2^- <= ... up to tolerance."""
    merged = np.empty(2 * len(lambda_minus) + 1)
    merged[0] = lambda0
    merged[1::2] = lambda_minus
    merged[2::2] = lambda_plus
    if not np.all(np.isfinite(merged)):
        raise InterlacingViolation("non-finite gap endpoint")
    tol = INTERLACE_RTOL * np.maximum(1.0, np.abs(merged[1:]))
    drops = merged[:-1] - merged[1:]
    bad = np.nonzero(drops > tol)[0]
    if bad.size:
        i = int(bad[0])
        raise InterlacingViolation(
            f"endpoint chain decreases between positions {i} and {i + 1}: "
            f"{merged[i]!r} > {merged[i + 1]!r} (insufficient truncation?)")


def assemble(p: PeriodicPotential, parity: Parity, N: int) -> GalerkinProblem:
    if N < MIN_HALF_BAND:
        raise ValidationError(f"half band N must be >= {MIN_HALF_BAND}")
    m = parity.modes(N)
    dim = m.size
    kmax = dim - 1
    if not p.covers(kmax):
        raise SupportTooSmall(
            f"potential is truncated at |k| <= {p.support_limit} but N={N} couples |k| <= {kmax}")
    col = p.coefficient_vector(kmax)          # M[i, j] = qhat(i - j)
    row = np.conj(col)
    if np.all(col.imag == 0):
        mat = scipy.linalg.toeplitz(col.real, row.real)
    else:
        mat = scipy.linalg.toeplitz(col, row)
    mat[np.diag_indices(dim)] += (m * np.pi) ** 2
    mat.flags.writeable = False
    return GalerkinProblem(parity, N, mat)


def hermitian_eigenvalues(M: np.ndarray, count: Optional[int] = None) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (the lowest ``count`` if given)."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotHermitian("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and np.max(np.abs(M - M.conj().T)) > HERMITIAN_TOL * scale:
        raise NotHermitian("matrix is not Hermitian within 1e-12")
    if count is None or count >= M.shape[0]:
        return scipy.linalg.eigh(M, eigvals_only=True)
    return scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[0, count - 1])


def _needed(n_max: int) -> tuple:
    """Lengths of the periodic and semiperiodic eigenvalue lists that cover gaps 1..n_max."""
    return 2 * (n_max // 2) + 1, 2 * ((n_max + 1) // 2)


def extract_endpoints(periodic_eigs, semiperiodic_eigs, n_max: int, conv_err=None, meta=None) -> SpectralData:
    """Read lambda_0 and lambda_n^+- off the two sorted eigenvalue lists.

    Even n = 2m: (P[2m-1], P[2m]); odd n = 2m-1: (S[2m-2], S[2m-1]).
    """
    P = np.asarray(periodic_eigs, dtype=float)
    S = np.asarray(semiperiodic_eigs, dtype=float)
    need_p, need_s = _needed(n_max)
    if P.size < need_p or S.size < need_s:
        raise ValidationError(f"need {need_p} periodic and {need_s} semiperiodic eigenvalues for n_max={n_max}")
    lm = np.empty(n_max)
    lp = np.empty(n_max)
    for n in range(1, n_max + 1):
        if n % 2 == 0:
            lm[n - 1], lp[n - 1] = P[n - 1], P[n]
        else:
            lm[n - 1], lp[n - 1] = S[n - 1], S[n]
    gap = lp - lm
    if np.any(gap < -GAP_CLAMP):
        bad = int(np.argmin(gap)) + 1
        raise InterlacingViolation(f"gap {bad} has negative length {gap[bad - 1]!r}")
    # closed gaps: collapse reversed pairs onto their midpoint
    flip = gap < 0
    if np.any(flip):
        mid = 0.5 * (lm[flip] + lp[flip])
        lm[flip] = mid
        lp[flip] = mid
    return SpectralData(float(P[0]), lm, lp, conv_err, dict(meta or {}))


def galerkin_spectrum(p: PeriodicPotential, n_max: int, N: int) -> SpectralData:
    """Single-truncation spectrum at half band N (re-truncating infinite families as needed)."""
    p = p.with_support(2 * N + 1)
    need_p, need_s = _needed(n_max)
    count = max(need_p, need_s) + 1
    P = hermitian_eigenvalues(assemble(p, Parity.PERIODIC, N).matrix, count)
    S = hermitian_eigenvalues(assemble(p, Parity.SEMIPERIODIC, N).matrix, count)
    return extract_endpoints(P, S, n_max, meta={"method": "galerkin", "N": N})


def rounding_floor(p: PeriodicPotential, N: int) -> float:
    """Smallest endpoint change distinguishable from eigensolver rounding at half band N."""
    norm = ((2 * N + 1) * np.pi) ** 2 + sum(abs(v) for v in p.with_support(2 * N + 1).coeffs.values())
    return ROUNDOFF_FACTOR * np.finfo(float).eps * norm


def converged_spectrum(p: PeriodicPotential, n_max: int, tol: float) -> SpectralData:
    """Double N from max(2 n_max, 16) until every endpoint moves by less than ``tol``.

    A ``tol`` below the rounding floor of the larger matrix is raised to that
    floor (recorded as ``meta["tol_effective"]``). The last change per endpoint
    is kept as ``conv_err``; the history of maximal changes is in ``meta["history"]``.
    """
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    N = max(2 * n_max, 16)
    prev = galerkin_spectrum(p, n_max, N)
    history = []
    for _ in range(MAX_DOUBLINGS):
        N *= 2
        cur = galerkin_spectrum(p, n_max, N)
        delta = np.abs(cur.merged() - prev.merged())
        history.append({"N": N, "max_change": float(delta.max())})
        log.debug("N=%d max endpoint change %.3e", N, delta.max())
        tol_eff = max(tol, rounding_floor(p, N))
        if delta.max() < tol_eff:
            conv = np.concatenate([[delta[0]], np.maximum(delta[1::2], delta[2::2])])
            meta = {"method": "galerkin", "N": N, "tol": tol, "tol_effective": tol_eff, "history": history}
            return SpectralData(cur.lambda0, cur.lambda_minus, cur.lambda_plus, conv, meta)
        prev = cur
    raise NoConvergence(
        f"endpoints still moving by {delta.max():.3e} >= tol={tol:g} at N={N}",
        deltas=delta.tolist())
