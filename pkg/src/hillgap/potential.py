"""Periodic potentials represented by their Fourier coefficients.

A 1-periodic real potential (function or distribution) is written as

    q(x) = sum_k qhat(k) exp(2 pi i k x),   qhat(-k) = conj(qhat(k)).

Only finitely many coefficients are ever stored. Infinite families (the
Dirac comb) remember how they were built so that callers needing a wider
band can re-truncate them with :meth:`PeriodicPotential.with_support`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import numpy as np

from hillgap.errors import DuplicateIndex, ParityMismatch, RealnessViolation, ValidationError

REALNESS_TOL = 1e-12
DELTA_COMB_ALPHA = 0.51
# |qhat(k)| = (1 + 2k)^(-s - 1/2 - RANDOM_DECAY_MARGIN) puts random_decay(s) just inside H^s
RANDOM_DECAY_MARGIN = 0.01

FAMILY_TAGS = ("zero", "constant", "mathieu", "delta_comb", "random_decay")


@dataclass(frozen=True)
class PotentialFamily:
    """Named test family. Only the parameters relevant to ``tag`` are meaningful.

    - ``zero``: q = 0
    - ``constant(c)``: q = c
    - ``mathieu(a)``: q = 2 a cos(2 pi x), i.e. qhat(+-1) = a
    - ``delta_comb(c)``: q = c sum_j delta(x - j), qhat(k) = c for every k
    - ``random_decay(s, seed, K)``: random phases, |qhat(k)| = (1+2k)^(-s-0.51), 1 <= k <= K
    """

    tag: str
    c: float = 0.0
    a: float = 0.0
    s: float = 0.0
    seed: int = 0
    K: int = 0

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise ValidationError(f"unknown potential family {self.tag!r}; expected one of {FAMILY_TAGS}")
        if self.tag == "random_decay" and self.K < 1:
            raise ValidationError("random_decay needs K >= 1")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def constant(cls, c):
        return cls("constant", c=float(c))

    @classmethod
    def mathieu(cls, a):
        return cls("mathieu", a=float(a))

    @classmethod
    def delta_comb(cls, c):
        return cls("delta_comb", c=float(c))

    @classmethod
    def random_decay(cls, s, seed, K):
        return cls("random_decay", s=float(s), seed=int(seed), K=int(K))

    @property
    def is_infinite(self) -> bool:
        return self.tag == "delta_comb"

    def params(self) -> dict:
        if self.tag in ("constant", "delta_comb"):
            return {"c": self.c}
        if self.tag == "mathieu":
            return {"a": self.a}
        if self.tag == "random_decay":
            return {"s": self.s, "seed": self.seed, "K": self.K}
        return {}

    def to_dict(self) -> dict:
        return {"tag": self.tag, **self.params()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PotentialFamily":
        d = dict(d)
        try:
            tag = d.pop("tag")
        except KeyError:
            raise ValidationError("family spec needs a 'tag'") from None
        allowed = {"zero": set(), "constant": {"c"}, "mathieu": {"a"}, "delta_comb": {"c"},
                   "random_decay": {"s", "seed", "K"}}.get(tag)
        if allowed is None:
            raise ValidationError(f"unknown potential family {tag!r}")
        extra = set(d) - allowed
        if extra:
            raise ValidationError(f"unexpected parameters for {tag}: {sorted(extra)}")
        missing = allowed - set(d)
        if missing and tag != "random_decay":
            raise ValidationError(f"missing parameters for {tag}: {sorted(missing)}")
        if tag == "random_decay":
            for name in ("s", "K"):
                if name not in d:
                    raise ValidationError(f"missing parameter {name!r} for random_decay")
            return cls.random_decay(d["s"], d.get("seed", 0), d["K"])
        return cls(tag, **{k: float(v) for k, v in d.items()})

    def label(self) -> str:
        inner = ", ".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.tag}({inner})" if inner else self.tag


@dataclass(frozen=True)
class PeriodicPotential:
    """Finitely supported coefficient map ``k -> qhat(k)`` of a real 1-periodic potential.

    ``support_limit`` is ``None`` when the stored coefficients are the whole
    potential (a trigonometric polynomial). Otherwise the potential is a
    truncation of an infinite family at ``|k| <= support_limit`` and the
    coefficients beyond it are unknown, not zero.
    """

    coeffs: Mapping[int, complex]
    alpha: float = 0.0
    label: str = "custom"
    support_limit: Optional[int] = None
    family: Optional[PotentialFamily] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coeffs", MappingProxyType(dict(self.coeffs)))
        if self.alpha < 0:
            raise ValidationError("alpha must be >= 0")
        _check_realness(self.coeffs)
        norm_sq = sum((1 + 2 * abs(k)) ** (-2 * self.alpha) * abs(v) ** 2 for k, v in self.coeffs.items())
        if not math.isfinite(norm_sq):
            raise ValidationError("coefficients have infinite H^-alpha norm")

    def __hash__(self):
        return hash((tuple(sorted(self.coeffs.items())), self.alpha, self.label, self.support_limit))

    def coefficient(self, k: int) -> complex:
        return self.coeffs.get(int(k), 0j)

    @property
    def mean(self) -> float:
        return self.coefficient(0).real

    @property
    def radius(self) -> int:
        """Largest |k| with a stored nonzero coefficient (0 for the zero potential)."""
        nz = [abs(k) for k, v in self.coeffs.items() if v != 0]
        return max(nz, default=0)

    @property
    def is_truncated(self) -> bool:
        return self.support_limit is not None

    def covers(self, kmax: int) -> bool:
        """True when every coefficient with |k| <= kmax is known."""
        return self.support_limit is None or self.support_limit >= kmax

    def with_support(self, limit: int) -> "PeriodicPotential":
        """Re-truncate an infinite family at ``limit``; exact potentials are returned unchanged."""
        if self.support_limit is None or self.family is None:
            return self
        return make_family(self.family, limit)

    def coefficient_vector(self, kmax: int) -> np.ndarray:
        """Array ``v`` with ``v[k] = qhat(k)`` for ``0 <= k <= kmax``."""
        v = np.zeros(kmax + 1, dtype=complex)
        for k, val in self.coeffs.items():
            if 0 <= k <= kmax:
                v[k] = val
        return v

    def reflected(self) -> "PeriodicPotential":
        """Conjugate-reflect all coefficients, k -> conj(qhat(-k))."""
        return PeriodicPotential({-k: complex(v).conjugate() for k, v in self.coeffs.items()},
                                 self.alpha, self.label, self.support_limit, self.family)

    def shifted(self, c: float) -> "PeriodicPotential":
        """Add the constant ``c`` to the potential (only qhat(0) changes)."""
        coeffs = dict(self.coeffs)
        coeffs[0] = coeffs.get(0, 0j) + c
        return PeriodicPotential(coeffs, self.alpha, self.label, self.support_limit, None)

    def to_spec(self) -> dict:
        """Serialize as the explicit-coefficients potential spec."""
        return {
            "label": self.label,
            "alpha": self.alpha,
            "coeffs": [[k, v.real, v.imag] for k, v in sorted(self.coeffs.items())],
        }


def _check_realness(coeffs: Mapping[int, complex]) -> None:
    for k, v in coeffs.items():
        partner = coeffs.get(-k, 0j)
        if abs(v - complex(partner).conjugate()) > REALNESS_TOL:
            raise RealnessViolation(k)


def from_coefficients(entries: Iterable, alpha: float = 0.0, label: str = "custom") -> PeriodicPotential:
    """Build a potential from ``(k, value)`` pairs.

    A coefficient given without its partner ``-k`` is completed by conjugation;
    pairs that are both supplied must be conjugate within 1e-12.
    """
    given: dict[int, complex] = {}
    for k, value in entries:
        k = int(k)
        if k in given:
            raise DuplicateIndex(f"index k={k} given more than once")
        given[k] = complex(value)

    coeffs: dict[int, complex] = {}
    for k, v in given.items():
        if -k in given:
            w = given[-k]
            if abs(v - w.conjugate()) > REALNESS_TOL:
                raise RealnessViolation(k)
            # symmetrize so that the stored pair is exactly conjugate
            coeffs[k] = 0.5 * (v + w.conjugate())
        else:
            coeffs[k] = v
        coeffs[-k] = coeffs[k].conjugate()
    return PeriodicPotential(coeffs, float(alpha), label)


def make_family(family: PotentialFamily, support_limit: int) -> PeriodicPotential:
    """Coefficients of ``family`` restricted to ``|k| <= support_limit``."""
    if support_limit < 1:
        raise ValidationError("support_limit must be >= 1")
    tag = family.tag
    label = family.label()
    if tag == "zero":
        return PeriodicPotential({}, 0.0, label, family=family)
    if tag == "constant":
        return PeriodicPotential({0: complex(family.c)}, 0.0, label, family=family)
    if tag == "mathieu":
        a = complex(family.a)
        return PeriodicPotential({-1: a, 1: a}, 0.0, label, family=family)
    if tag == "delta_comb":
        c = complex(family.c)
        coeffs = {k: c for k in range(-support_limit, support_limit + 1)}
        return PeriodicPotential(coeffs, DELTA_COMB_ALPHA, label, support_limit=support_limit, family=family)

    # random_decay: draw all K phases first so truncation never changes the kept ones
    rng = np.random.default_rng(family.seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=family.K)
    ks = np.arange(1, family.K + 1)
    mags = (1.0 + 2.0 * ks) ** (-family.s - 0.5 - RANDOM_DECAY_MARGIN)
    coeffs = {}
    for k, r, phi in zip(ks, mags, phases):
        if k > support_limit:
            break
        v = complex(r * math.cos(phi), r * math.sin(phi))
        coeffs[int(k)] = v
        coeffs[-int(k)] = v.conjugate()
    limit = support_limit if support_limit < family.K else None
    return PeriodicPotential(coeffs, max(0.0, -family.s), label, support_limit=limit, family=family)


def half_index_coefficient(p: PeriodicPotential, m: int, mprime: int) -> complex:
    """Coupling between exp(i m pi x) and exp(i m' pi x): qhat((m - m')/2)."""
    d = m - mprime
    if d % 2:
        raise ParityMismatch(f"modes m={m} and m'={mprime} lie in different index sets")
    return p.coefficient(d // 2)


def sobolev_norm(p: PeriodicPotential, s: float) -> float:
    """(sum_k (1 + 2|k|)^(2s) |qhat(k)|^2)^(1/2) over the stored support."""
    total = 0.0
    for k, v in p.coeffs.items():
        total += (1.0 + 2.0 * abs(k)) ** (2.0 * s) * abs(v) ** 2
    return math.sqrt(total)


def potential_from_spec(spec: Mapping, default_support: int = 64) -> PeriodicPotential:
    """Parse the JSON-style potential spec.

    Either ``{"label", "alpha", "coeffs": [[k, re, im], ...]}`` or
    ``{"family": {"tag": ..., params...}, "support_limit": int}``.
    """
    if "family" in spec:
        fam = PotentialFamily.from_dict(spec["family"])
        limit = int(spec.get("support_limit", default_support))
        return make_family(fam, limit)
    if "coeffs" not in spec:
        raise ValidationError("potential spec needs either 'family' or 'coeffs'")
    entries = []
    for row in spec["coeffs"]:
        if len(row) not in (2, 3):
            raise ValidationError(f"coefficient rows are [k, re, im]; got {row!r}")
        k, re = row[0], row[1]
        im = row[2] if len(row) == 3 else 0.0
        if float(k) != int(k):
            raise ValidationError(f"coefficient index must be an integer, got {k!r}")
        entries.append((int(k), complex(float(re), float(im))))
    return from_coefficients(entries, float(spec.get("alpha", 0.0)), str(spec.get("label", "custom")))


def potential_to_spec(p: PeriodicPotential) -> dict:
    if p.family is not None:
        spec = {"family": p.family.to_dict()}
        if p.support_limit is not None:
            spec["support_limit"] = p.support_limit
        elif p.family.tag == "random_decay":
            spec["support_limit"] = p.family.K
        return spec
    return p.to_spec()
