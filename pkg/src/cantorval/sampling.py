"""Monte Carlo draws of xi and eta, exact truncated laws and CDF brackets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from ._guard import INT64_HEADROOM, check_size
from .digits import tail_radius
from .distribution import DigitLaw, Mode, _prob
from .errors import DomainError, ResourceLimitError
from .intervals import as_fraction, format_fraction

DKW_ALPHA = 0.001
GRID_POINTS = 257

Seed = Union[int, np.random.Generator, None]


def make_rng(seed: Seed = 0, stream: int = 0) -> np.random.Generator:
    """Deterministic generator for ``(seed, stream)``; passes generators through."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(0 if seed is None else int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def _check_numerators(s: int, N: int) -> None:
    if (s + 1) * s**N >= INT64_HEADROOM:
        raise ResourceLimitError(f"s^N = {s}^{N} does not fit 64-bit numerators")


def sample_digits(law: DigitLaw, N: int, n: int, rng: Seed = 0) -> np.ndarray:
    """An (n, N) array of i.i.d. digits drawn from ``law``."""
    if N < 1 or n < 0:
        raise DomainError("need N >= 1 and n >= 0")
    rng = make_rng(rng)
    p = np.array(law.floats)
    p = p / p.sum()
    return rng.choice(law.s + 2, size=(n, N), p=p)


def numerators(digits: np.ndarray, s: int) -> np.ndarray:
    """Exact integers sum d_k s^(N-k) for each row of digits."""
    N = digits.shape[1]
    _check_numerators(s, N)
    out = np.zeros(digits.shape[0], dtype=np.int64)
    for k in range(N):
        out = out * s + digits[:, k]
    return out


def _to_float(digits: np.ndarray, s: int) -> np.ndarray:
    v = np.zeros(digits.shape[0])
    for k in range(digits.shape[1] - 1, -1, -1):
        v = (v + digits[:, k]) / s
    return v


def sample_xi_many(law: DigitLaw, N: int, n: int, rng: Seed = 0) -> np.ndarray:
    return _to_float(sample_digits(law, N, n, rng), law.s)


def sample_xi(law: DigitLaw, N: int, rng: Seed = 0) -> float:
    """One draw of the first N digits of xi, summed."""
    return float(sample_xi_many(law, N, 1, rng)[0])


def eta_block_digit(bits: Sequence[int]) -> int:
    """Digit 3 b_0 + 2 (b_1 + ... + b_m) contributed by one block of eta."""
    return 3 * bits[0] + 2 * sum(bits[1:])


def sample_eta_digits(m: int, q0, N: int, n: int, rng: Seed = 0) -> np.ndarray:
    if isinstance(m, bool) or not isinstance(m, int) or m < 1:
        raise DomainError(f"m must be a positive integer, got {m!r}")
    if N < 1:
        raise DomainError("N must be >= 1")
    q1 = 1.0 - float(_prob(q0))
    rng = make_rng(rng)
    bits = (rng.random((n, N, m + 1)) < q1).astype(np.int64)
    return 3 * bits[:, :, 0] + 2 * bits[:, :, 1:].sum(axis=2)


def sample_eta_many(m: int, q0, N: int, n: int, rng: Seed = 0) -> np.ndarray:
    return _to_float(sample_eta_digits(m, q0, N, n, rng), 2 * m + 2)


def sample_eta(m: int, q0, N: int, rng: Seed = 0) -> float:
    """One draw of eta truncated after N blocks of m+1 Bernoulli variables."""
    return float(sample_eta_many(m, q0, N, 1, rng)[0])


# --------------------------------------------------------------------------
# exact truncated law


@dataclass(frozen=True)
class TruncatedDist:
    """Law of sum_{n<=N} xi_n s^-n; atom k sits at numerators[k] / s^N."""

    s: int
    N: int
    numerators: np.ndarray
    probs: tuple
    tail_radius: Fraction

    @property
    def atoms(self) -> list[tuple[Fraction, object]]:
        den = self.s**self.N
        return [(Fraction(int(a), den), p) for a, p in zip(self.numerators.tolist(), self.probs)]

    @cached_property
    def _cumulative(self) -> list:
        return [self.probs[0] * 0] + list(itertools.accumulate(self.probs))

    def cdf(self, x) -> object:
        x = as_fraction(x)
        cut = math.floor(x * self.s**self.N)
        return self._cumulative[int(np.searchsorted(self.numerators, cut, side="right"))]

    def to_json(self) -> dict:
        exact = isinstance(self.probs[0], Fraction)
        return {
            "s": self.s,
            "N": self.N,
            "tail_radius": format_fraction(self.tail_radius),
            "atoms": [
                {"x": format_fraction(x), "p": format_fraction(p) if exact else float(p)} for x, p in self.atoms
            ],
        }


def truncated_dist(law: DigitLaw, N: int) -> TruncatedDist:
    """Exact law of the first N digits by repeated convolution on numerators.

    Float laws are accumulated in ``longdouble`` and rounded at the end.
    """
    if N < 1:
        raise DomainError("N must be >= 1")
    s = law.s
    _check_numerators(s, N)
    size = (s + 1) * (s**N - 1) // (s - 1) + 1
    check_size(size, f"truncated law of depth {N}")
    if law.mode is Mode.RATIONAL:
        p = np.array(law.p, dtype=object)
        dist = np.array([Fraction(1)], dtype=object)
        dtype: object = object
    else:
        p = np.array(law.floats, dtype=np.longdouble)
        dist = np.array([1.0], dtype=np.longdouble)
        dtype = np.longdouble
    for _ in range(N):
        L = len(dist)
        new = np.zeros(s * (L - 1) + s + 2, dtype=dtype)
        if dtype is object:
            new[:] = Fraction(0)
        for d in range(s + 2):
            if p[d] != 0:
                new[d : d + s * (L - 1) + 1 : s] += dist * p[d]
        dist = new
    support = np.flatnonzero(dist != 0)
    if law.mode is Mode.RATIONAL:
        probs = tuple(dist[support].tolist())
    else:
        probs = tuple(float(x) for x in dist[support])
    return TruncatedDist(s, N, support.astype(np.int64), probs, tail_radius(s, N))


def truncated_cdf(law: DigitLaw, N: int, x) -> Fraction:
    """Exact P(sum_{n<=N} xi_n s^-n <= x) without listing the atoms.

    Uses F_n(y) = sum_d p_d F_{n-1}(s y - d); arguments below 0 or above the
    largest attainable partial sum resolve immediately, leaving at most a few
    live arguments per level.
    """
    s = law.s
    p = [as_fraction(q) for q in law.p]
    x = as_fraction(x)
    live: dict[Fraction, Fraction] = {x: Fraction(1)}
    total = Fraction(0)
    for n in range(N, 0, -1):
        top = Fraction((s + 1) * (s**n - 1), (s - 1) * s**n)
        nxt: dict[Fraction, Fraction] = {}
        for y, w in live.items():
            if y < 0:
                continue
            if y >= top:
                total += w
                continue
            for d, pd in enumerate(p):
                if pd:
                    z = s * y - d
                    nxt[z] = nxt.get(z, Fraction(0)) + w * pd
        live = nxt
    total += sum((w for y, w in live.items() if y >= 0), Fraction(0))
    return total


@dataclass(frozen=True)
class CdfBracket:
    at: Fraction
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi <= 1:
            raise DomainError(f"invalid bracket [{self.lo}, {self.hi}]")

    def contains(self, y) -> bool:
        return self.lo <= y <= self.hi


def cdf_bracket(law: DigitLaw, N: int, x) -> CdfBracket:
    """Bounds on F_xi(x) from the depth-N truncation; the tail lies in [0, radius]."""
    if N < 1:
        raise DomainError("N must be >= 1")
    x = as_fraction(x)
    r = tail_radius(law.s, N)
    return CdfBracket(x, truncated_cdf(law, N, x - r), truncated_cdf(law, N, x))


def dkw_epsilon(samples: int, alpha: float = DKW_ALPHA) -> float:
    return math.sqrt(math.log(2 / alpha) / (2 * samples))


@dataclass(frozen=True)
class EmpiricalCheck:
    statistic: float
    epsilon: float
    rows: tuple[tuple[Fraction, float, float, float], ...]  # (x, lo, hi, empirical)


def hull_grid(s: int, points: int = GRID_POINTS) -> list[Fraction]:
    top = Fraction(s + 1, s - 1)
    return [top * j / (points - 1) for j in range(points)]


def empirical_check(
    law: DigitLaw,
    N: int,
    samples: int,
    seed: Seed = 0,
    *,
    sample_law: Optional[DigitLaw] = None,
) -> EmpiricalCheck:
    """Largest excursion of the empirical CDF outside the DKW-widened brackets.

    A value <= 0 means every grid point lies inside its band.  ``sample_law``
    draws from a different law while keeping the brackets of ``law``.
    """
    if samples < 100:
        raise DomainError("empirical_check needs at least 100 samples")
    src = law if sample_law is None else sample_law
    if src.s != law.s:
        raise DomainError("sample law must share the base")
    s = law.s
    nums = np.sort(numerators(sample_digits(src, N, samples, seed), s))
    eps = dkw_epsilon(samples)
    scale = s**N
    worst = -math.inf
    rows = []
    for x in hull_grid(s):
        b = cdf_bracket(law, N, x)
        cut = math.floor(x * scale)
        emp = int(np.searchsorted(nums, cut, side="right")) / samples
        lo, hi = float(b.lo), float(b.hi)
        worst = max(worst, (lo - eps) - emp, emp - (hi + eps))
        rows.append((x, lo, hi, emp))
    return EmpiricalCheck(worst, eps, tuple(rows))
