"""Laws of xi = sum xi_n s^-n with i.i.d. digits in {0, ..., s+1}.

Singularity is certified through the characteristic function at t = 2*pi,
absolute continuity through splitting off a uniform summand.  Laws built
from rationals keep exact probabilities and are compared exactly; float laws
use the tolerances below.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Any, Optional, Sequence, Union

from .digits import check_base
from .errors import InvalidLawError, WrongBaseError
from .intervals import as_fraction, format_fraction

FLOAT_TOL = 1e-12
CRITERIA_TOL = 1e-9
DEFAULT_K = 60
EXACT_ROOT_ORDER = 256
_U = 2.0**-53

Number = Union[Fraction, float]


class Mode(str, enum.Enum):
    RATIONAL = "rational"
    FLOAT = "float"


@dataclass(frozen=True)
class DigitLaw:
    """Distribution (p_0, ..., p_{s+1}) of a single digit."""

    s: int
    p: tuple
    mode: Mode = Mode.RATIONAL

    def __post_init__(self):
        check_base(self.s)
        mode = Mode(self.mode)
        object.__setattr__(self, "mode", mode)
        if len(self.p) != self.s + 2:
            raise InvalidLawError(f"base {self.s} needs {self.s + 2} probabilities, got {len(self.p)}")
        if mode is Mode.RATIONAL:
            probs = tuple(as_fraction(x) for x in self.p)
            total = sum(probs, Fraction(0))
            if total != 1:
                raise InvalidLawError(f"probabilities sum to {total}, not 1")
        else:
            probs = tuple(float(x) for x in self.p)
            if not all(math.isfinite(x) for x in probs):
                raise InvalidLawError("probabilities must be finite")
            total = math.fsum(probs)
            if abs(total - 1.0) > FLOAT_TOL:
                raise InvalidLawError(f"probabilities sum to {total!r}, not 1")
        if any(x < 0 for x in probs):
            raise InvalidLawError("probabilities must be non-negative")
        if any(x == 1 for x in probs):
            raise InvalidLawError("degenerate law: one digit has probability 1")
        object.__setattr__(self, "p", probs)

    @classmethod
    def of(cls, s: int, probs: Sequence[Any]) -> "DigitLaw":
        """Infer the mode: any float entry makes a float law."""
        mode = Mode.FLOAT if any(isinstance(x, float) for x in probs) else Mode.RATIONAL
        return cls(s, tuple(probs), mode)

    @property
    def exact(self) -> bool:
        return self.mode is Mode.RATIONAL

    @property
    def floats(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.p)

    def is_zero(self, x: Number, tol: float = FLOAT_TOL) -> bool:
        return x == 0 if self.exact else abs(x) <= tol

    def equal(self, a: Number, b: Number) -> bool:
        return self.is_zero(a - b)

    def mean(self) -> Number:
        return sum((j * pj for j, pj in enumerate(self.p)), self.p[0] * 0)

    def to_json(self) -> dict:
        if self.exact:
            probs: list = [format_fraction(x) for x in self.p]
        else:
            probs = list(self.p)
        return {"s": self.s, "p": probs, "mode": self.mode.value}

    @classmethod
    def from_json(cls, data: dict) -> "DigitLaw":
        if not isinstance(data, dict) or "s" not in data or "p" not in data:
            raise InvalidLawError('law JSON needs keys "s" and "p"')
        s, probs = data["s"], data["p"]
        if not isinstance(probs, list):
            raise InvalidLawError('"p" must be a list')
        if "mode" in data:
            return cls(s, tuple(probs), Mode(data["mode"]))
        return cls.of(s, probs)


# --------------------------------------------------------------------------
# characteristic function


def phi_k(law: DigitLaw, t: float, k: int) -> complex:
    """Characteristic function of the k-th scaled digit xi_k / s^k at t."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if t == 0:
        return complex(1.0, 0.0)
    scale = t / law.s**k
    re = math.fsum(pj * math.cos(scale * j) for j, pj in enumerate(law.floats))
    im = math.fsum(pj * math.sin(scale * j) for j, pj in enumerate(law.floats))
    return complex(re, im)


def _factor_rounding(s: int, t: float, k: int) -> float:
    # angle error 3u|theta| per term, 2u from cos/sin, summation and p rounding
    return 3 * _U * abs(t) * (s + 1) / s**k + (2 * s + 8) * _U


@dataclass(frozen=True)
class CharFnValue:
    value: complex
    radius: float
    low_confidence: bool = False


def char_fn(law: DigitLaw, t: float, K: int) -> CharFnValue:
    """Partial product of the first K factors with a certified error radius.

    The radius covers the neglected factors, using |phi_k(t) - 1| <=
    (s+1)|t|/s^k, plus a bound on floating-point rounding of the product.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    s = law.s
    if t == 0:
        return CharFnValue(complex(1.0, 0.0), 0.0)
    # t = 2 pi c makes every factor a polynomial at a root of unity
    c = round(t / (2 * math.pi))
    exact_roots = law.exact and c != 0 and t == 2 * math.pi * c
    prod = complex(1.0, 0.0)
    rounding = 0.0
    for k in range(1, K + 1):
        f = phi_k(law, t, k)
        if exact_roots and abs(f) < CRITERIA_TOL:
            g = math.gcd(c, s**k)
            n = s**k // g
            if n <= EXACT_ROOT_ORDER and _vanishes_at_root(law.p, n, (c // g) % n):
                return CharFnValue(0j, 0.0)
        rounding += _factor_rounding(s, t, k) + 4 * _U
        if f == 0:
            return CharFnValue(0j, 2 * rounding)
        prod *= f
    tail = (s + 1) * abs(t) / ((s - 1) * float(s) ** K)
    radius = abs(prod) * math.expm1(tail) + 2 * rounding
    if radius > 1:
        return CharFnValue(prod, min(radius, 2.0), True)
    return CharFnValue(prod, radius)


def limsup_lower_bound(law: DigitLaw, K: int = DEFAULT_K) -> float:
    """Certified lower bound on limsup |f(t)| from |f(2 pi)|."""
    c = char_fn(law, 2 * math.pi, K)
    return max(0.0, abs(c.value) - c.radius)


# --------------------------------------------------------------------------
# singularity criteria


@dataclass(frozen=True)
class CriteriaValues:
    """Real and imaginary part of the first factor at t = 2 pi."""

    u: Number
    v: Number

    def to_json(self) -> dict:
        return {"u": _num(self.u), "v": _num(self.v)}


def criteria_s4(law: DigitLaw) -> CriteriaValues:
    if law.s != 4:
        raise WrongBaseError(f"criteria_s4 needs s = 4, got {law.s}")
    p = law.p
    return CriteriaValues(p[0] - p[2] + p[4], p[1] - p[3] + p[5])


def criteria_general(law: DigitLaw) -> CriteriaValues:
    s = law.s
    check_base(s, even=True)
    m = (s - 2) // 2
    p = law.floats
    a = math.pi / (m + 1)
    u = (p[0] + p[s] - p[s // 2]) + (p[1] + p[s + 1] + p[s - 1]) * math.cos(a)
    v = (p[1] + p[s + 1] - p[s - 1]) * math.sin(a)
    for j in range(2, m + 1):
        u += (p[j] + p[s - j]) * math.cos(a * j)
        v += (p[j] - p[s - j]) * math.sin(a * j)
    return CriteriaValues(u, v)


@lru_cache(maxsize=None)
def _cyclotomic(n: int) -> tuple[int, ...]:
    # coefficients, lowest degree first
    poly: list = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            poly, rem = _divmod_poly(poly, _cyclotomic(d))
            assert not any(rem)
    return tuple(int(c) for c in poly)


def _divmod_poly(num: Sequence, den: Sequence) -> tuple[list, list]:
    num = [Fraction(c) for c in num]
    q = [Fraction(0)] * max(len(num) - len(den) + 1, 1)
    for i in range(len(num) - len(den), -1, -1):
        c = num[i + len(den) - 1] / den[-1]
        q[i] = c
        for j, dj in enumerate(den):
            num[i + j] -= c * dj
    return q, num[: len(den) - 1]


def _vanishes_at_root(p: Sequence[Fraction], n: int, a: int) -> bool:
    """Exact test of sum_j p_j w^(a j) = 0 for a primitive n-th root of unity w."""
    folded = [Fraction(0)] * n
    for j, pj in enumerate(p):
        folded[(a * j) % n] += pj
    _, rem = _divmod_poly(folded, _cyclotomic(n))
    return not any(rem)


def first_factor_vanishes(law: DigitLaw) -> bool:
    """Whether phi_1(2 pi) = sum p_j w^j is 0, w = exp(2 pi i / s).

    Rational laws are tested exactly: the folded polynomial must be divisible
    by the s-th cyclotomic polynomial.  Float laws compare the criteria with
    the float tolerance.
    """
    s = law.s
    if law.exact:
        return _vanishes_at_root(law.p, s, 1)
    c = criteria_s4(law) if s == 4 else criteria_general(law)
    return abs(c.u) <= CRITERIA_TOL and abs(c.v) <= CRITERIA_TOL


# --------------------------------------------------------------------------
# uniform component


def decompose_uniform(law: DigitLaw) -> Optional[tuple[Number, Number]]:
    """Split xi = tau + eta with tau uniform on [0, 1], if possible.

    Requires p_1 >= p_0 and p_2 = ... = p_{s-1} = p_0 + p_s = p_1 + p_{s+1} = 1/s.
    Returns the weights (u, v) of digits 0 and 1 in the three-point digit of
    eta; digit 2 carries 1 - u - v.
    """
    s, p = law.s, law.p
    third = Fraction(1, s) if law.exact else 1.0 / s
    if not (p[1] >= p[0] or law.equal(p[1], p[0])):
        return None
    targets = list(p[2:s]) + [p[0] + p[s], p[1] + p[s + 1]]
    if not all(law.equal(x, third) for x in targets):
        return None
    u = s * p[0]
    v = s * p[1] - s * p[0]
    if not law.exact:
        v = max(v, 0.0)
    return u, v


def uniform_plus_three_point(s: int, u, v) -> DigitLaw:
    """Digit law of tau_n + eta_n: uniform on {0..s-1} plus {0, 1, 2} w.p. (u, v, 1-u-v)."""
    exact = not any(isinstance(x, float) for x in (u, v))
    one = Fraction(1) if exact else 1.0
    uni = [one / s] * s
    three = [u, v, one - u - v]
    out = [one * 0] * (s + 2)
    for a, pa in enumerate(uni):
        for b, pb in enumerate(three):
            out[a + b] += pa * pb
    return DigitLaw(s, tuple(out), Mode.RATIONAL if exact else Mode.FLOAT)


# --------------------------------------------------------------------------
# Bernoulli convolutions of multigeometric series


def _prob(q0) -> Number:
    if isinstance(q0, float):
        x: Number = q0
    else:
        x = as_fraction(q0)
    if not 0 < x < 1:
        raise InvalidLawError(f"q0 must lie in (0, 1), got {q0}")
    return x


def multigeometric_law(m: int, q0) -> DigitLaw:
    """Law of the block digit 3a + 2b, a ~ Bernoulli(q1), b ~ Binomial(m, q1), s = 2m + 2."""
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise InvalidLawError(f"m must be a positive integer, got {m!r}")
    q0 = _prob(q0)
    q1 = 1 - q0
    s = 2 * m + 2
    p = [q0 * 0] * (s + 2)
    for b in range(m + 1):
        w = math.comb(m, b) * q0 ** (m - b) * q1**b
        p[2 * b] += q0 * w
        p[3 + 2 * b] += q1 * w
    mode = Mode.FLOAT if isinstance(q0, float) else Mode.RATIONAL
    return DigitLaw(s, tuple(p), mode)


def gn_convolution_law(q0) -> DigitLaw:
    """Digit law (q0^2, 0, q0 q1, q0 q1, 0, q1^2) of the Guthrie-Nymann series, s = 4."""
    q0 = _prob(q0)
    q1 = 1 - q0
    z = q0 * 0
    mode = Mode.FLOAT if isinstance(q0, float) else Mode.RATIONAL
    return DigitLaw(4, (q0 * q0, z, q0 * q1, q0 * q1, z, q1 * q1), mode)


# --------------------------------------------------------------------------
# classification


class Kind(str, enum.Enum):
    SINGULAR = "Singular"
    ABSOLUTELY_CONTINUOUS = "AbsolutelyContinuous"
    UNKNOWN = "Unknown"


class Reason(str, enum.Enum):
    THM4 = "Thm4"
    THM6 = "Thm6"
    THM2_DECOMPOSITION = "Thm2Decomposition"
    COROLLARY1_GN_UNIFORM = "Corollary1_GN_uniform"
    COROLLARY2_CASES = "Corollary2_cases"
    THM5_Q0 = "Thm5_q0"


@dataclass(frozen=True)
class Verdict:
    kind: Kind
    reason: Reason
    witness: dict = field(default_factory=dict)
    lower_bound: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "reason": self.reason.value,
            "witness": {k: _num(v) for k, v in self.witness.items()},
            "lower_bound": self.lower_bound,
        }


_GN_UNIFORM = tuple(Fraction(x, 4) for x in (1, 0, 1, 1, 0, 1))


def _is_gn_uniform(law: DigitLaw) -> bool:
    return law.s == 4 and all(law.equal(a, b) for a, b in zip(law.p, _GN_UNIFORM))


def classify(law: DigitLaw, K: int = DEFAULT_K) -> Verdict:
    """Singular / absolutely continuous / unknown, with the rule that decided."""
    s = law.s
    check_base(s, even=True)
    bound = limsup_lower_bound(law, K)
    dec = decompose_uniform(law)
    if dec is not None:
        return Verdict(Kind.ABSOLUTELY_CONTINUOUS, Reason.THM2_DECOMPOSITION, {"u_dec": dec[0], "v_dec": dec[1]}, bound)
    if _is_gn_uniform(law):
        return Verdict(Kind.ABSOLUTELY_CONTINUOUS, Reason.COROLLARY1_GN_UNIFORM, {}, bound)
    crit = criteria_s4(law) if s == 4 else criteria_general(law)
    reason = Reason.THM4 if s == 4 else Reason.THM6
    witness = {"u": crit.u, "v": crit.v}
    if not first_factor_vanishes(law):
        return Verdict(Kind.SINGULAR, reason, witness, bound)
    return Verdict(Kind.UNKNOWN, reason, witness, bound)


def classify_gn_convolution(q0) -> Verdict:
    """Type of the Bernoulli convolution of 3/4 + 2/4 + 3/16 + 2/16 + ... with P(0) = q0."""
    q0 = _prob(q0)
    law = gn_convolution_law(q0)
    bound = limsup_lower_bound(law, DEFAULT_K)
    if q0 == Fraction(1, 2):
        return Verdict(Kind.ABSOLUTELY_CONTINUOUS, Reason.COROLLARY1_GN_UNIFORM, {"q0": q0}, bound)
    crit = criteria_s4(law)
    return Verdict(Kind.SINGULAR, Reason.THM5_Q0, {"q0": q0, "u": crit.u, "v": crit.v}, bound)


def _num(x) -> Any:
    if isinstance(x, Fraction):
        return format_fraction(x)
    if isinstance(x, int):
        return format_fraction(Fraction(x))
    return float(x)
