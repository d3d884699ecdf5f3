"""Exact rational intervals and canonical unions of them.

An :class:`IntervalUnion` keeps every endpoint as an integer numerator over
one shared denominator, so merges, complements and inclusion tests are plain
integer comparisons.  Numerators live in ``int64`` arrays when they fit and
fall back to Python integers (``dtype=object``) otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

_INT64_MAX = np.iinfo(np.int64).max


def as_fraction(x) -> Fraction:
    """Convert ints, floats, Fractions and ``"p/q"`` strings exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, float):
        if not math.isfinite(x):
            raise DomainError(f"non-finite value {x!r}")
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"not a rational number: {x!r}") from None
    raise DomainError(f"cannot interpret {x!r} as a rational number")


def format_fraction(x: Fraction) -> str:
    """Render as ``"p/q"``; integers keep an explicit ``/1``."""
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if self.lo > self.hi:
            raise DomainError(f"empty interval: lo={self.lo} > hi={self.hi}")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = as_fraction(x)
        return self.lo <= x <= self.hi

    def issubset(self, other: "RationalInterval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def to_json(self) -> dict:
        return {"lo": format_fraction(self.lo), "hi": format_fraction(self.hi)}

    @classmethod
    def from_json(cls, data: dict) -> "RationalInterval":
        return cls(as_fraction(data["lo"]), as_fraction(data["hi"]))

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


def _int_array(values) -> np.ndarray:
    values = [int(v) for v in values]
    if values and max(abs(v) for v in values) > _INT64_MAX // 4:
        return np.array(values, dtype=object)
    return np.array(values, dtype=np.int64)


def _merge_sorted(lo: np.ndarray, hi: np.ndarray, closed: bool) -> tuple[np.ndarray, np.ndarray]:
    if len(lo) == 0:
        return lo, hi
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    reach = np.maximum.accumulate(hi)
    if closed:
        starts = np.ones(len(lo), dtype=bool)
        starts[1:] = lo[1:] > reach[:-1]
    else:
        starts = np.ones(len(lo), dtype=bool)
        starts[1:] = lo[1:] >= reach[:-1]
    first = np.flatnonzero(starts)
    last = np.append(first[1:] - 1, len(lo) - 1)
    return lo[first], reach[last]


class IntervalUnion:
    """Sorted, pairwise-disjoint union of intervals over a common denominator.

    ``closed`` selects whether the parts are closed intervals (covers) or open
    ones (gaps); it only affects point membership and how touching parts merge.
    """

    __slots__ = ("lo", "hi", "denominator", "closed")

    def __init__(self, lo, hi, denominator: int, *, closed: bool = True, merged: bool = False):
        lo = lo if isinstance(lo, np.ndarray) else _int_array(lo)
        hi = hi if isinstance(hi, np.ndarray) else _int_array(hi)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DomainError("lo and hi must be 1-D arrays of equal length")
        if denominator <= 0:
            raise DomainError("denominator must be positive")
        if len(lo) and bool(np.any(lo > hi)):
            raise DomainError("every part needs lo <= hi")
        if not merged:
            lo, hi = _merge_sorted(lo, hi, closed)
        if not closed and len(lo):
            keep = lo < hi
            lo, hi = lo[keep], hi[keep]
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lo = lo
        self.hi = hi
        self.denominator = int(denominator)
        self.closed = closed

    @classmethod
    def empty(cls, *, closed: bool = True) -> "IntervalUnion":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), 1, closed=closed, merged=True)

    @classmethod
    def from_intervals(cls, parts: Iterable, *, closed: bool = True) -> "IntervalUnion":
        pairs = []
        for p in parts:
            if isinstance(p, RationalInterval):
                pairs.append((p.lo, p.hi))
            else:
                a, b = p
                pairs.append((as_fraction(a), as_fraction(b)))
        if not pairs:
            return cls.empty(closed=closed)
        den = 1
        for a, b in pairs:
            den = math.lcm(den, a.denominator, b.denominator)
        lo = _int_array(a.numerator * (den // a.denominator) for a, _ in pairs)
        hi = _int_array(b.numerator * (den // b.denominator) for _, b in pairs)
        return cls(lo, hi, den, closed=closed)

    # -- views ---------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.lo)

    @property
    def parts(self) -> tuple[RationalInterval, ...]:
        d = self.denominator
        return tuple(
            RationalInterval(Fraction(int(a), d), Fraction(int(b), d))
            for a, b in zip(self.lo.tolist(), self.hi.tolist())
        )

    def total_length(self) -> Fraction:
        if not len(self):
            return Fraction(0)
        return Fraction(int(sum(int(v) for v in (self.hi - self.lo).tolist())), self.denominator)

    def rescaled(self, denominator: int) -> tuple[np.ndarray, np.ndarray]:
        """Numerator arrays over ``denominator`` (a multiple of the current one)."""
        if denominator % self.denominator:
            raise DomainError(f"{denominator} is not a multiple of {self.denominator}")
        f = denominator // self.denominator
        if f == 1:
            return self.lo, self.hi
        if len(self) and max(abs(int(v)) for v in (self.lo[0], self.hi[-1])) * f > _INT64_MAX // 4:
            return self.lo.astype(object) * f, self.hi.astype(object) * f
        return self.lo * f, self.hi * f

    # -- queries -------------------------------------------------------------

    def contains(self, x) -> bool:
        x = as_fraction(x)
        num = x * self.denominator
        # index of the last part whose lo is <= x
        i = int(np.searchsorted(self.lo, math.floor(num), side="right")) - 1
        for j in (i, i + 1):
            if 0 <= j < len(self):
                a, b = int(self.lo[j]), int(self.hi[j])
                if self.closed and a <= num <= b:
                    return True
                if not self.closed and a < num < b:
                    return True
        return False

    def issubset(self, other: "IntervalUnion") -> bool:
        """Set inclusion, treating both unions as closed."""
        if not len(self):
            return True
        if not len(other):
            return False
        den = math.lcm(self.denominator, other.denominator)
        a_lo, a_hi = self.rescaled(den)
        b_lo, b_hi = other.rescaled(den)
        idx = np.searchsorted(b_lo, a_lo, side="right") - 1
        if bool(np.any(idx < 0)):
            return False
        return bool(np.all(b_hi[idx] >= a_hi))

    def contains_interval(self, iv: RationalInterval) -> bool:
        return IntervalUnion.from_intervals([iv]).issubset(self)

    # -- constructions -------------------------------------------------------

    def complement(self, within: RationalInterval) -> "IntervalUnion":
        """Open gaps of this (closed) union inside ``within``."""
        den = math.lcm(self.denominator, within.lo.denominator, within.hi.denominator)
        lo, hi = self.rescaled(den)
        w_lo = within.lo.numerator * (den // within.lo.denominator)
        w_hi = within.hi.numerator * (den // within.hi.denominator)
        starts = np.concatenate([_int_array([w_lo]), hi]) if len(lo) else _int_array([w_lo])
        ends = np.concatenate([lo, _int_array([w_hi])]) if len(lo) else _int_array([w_hi])
        starts = np.maximum(starts, w_lo)
        ends = np.minimum(ends, w_hi)
        keep = starts < ends
        return IntervalUnion(starts[keep], ends[keep], den, closed=False, merged=True)

    def subtract_open(self, holes: "IntervalUnion") -> "IntervalUnion":
        """Closed union minus a union of open intervals."""
        if not len(holes) or not len(self):
            return self
        den = math.lcm(self.denominator, holes.denominator)
        lo, hi = self.rescaled(den)
        h_lo, h_hi = holes.rescaled(den)
        h_lo, h_hi = h_lo.tolist(), h_hi.tolist()
        out_lo: list[int] = []
        out_hi: list[int] = []
        j0 = 0
        for a, b in zip(lo.tolist(), hi.tolist()):
            while j0 < len(h_hi) and h_hi[j0] <= a:
                j0 += 1
            cur = a
            j = j0
            while j < len(h_lo) and h_lo[j] < b:
                if h_hi[j] > cur:
                    if h_lo[j] >= cur:
                        out_lo.append(cur)
                        out_hi.append(h_lo[j])
                    cur = h_hi[j]
                j += 1
            if cur <= b:
                out_lo.append(cur)
                out_hi.append(b)
        return IntervalUnion(_int_array(out_lo), _int_array(out_hi), den, closed=True, merged=True)

    def mirror(self, total) -> "IntervalUnion":
        """Image under ``x -> total - x``."""
        total = as_fraction(total)
        den = math.lcm(self.denominator, total.denominator)
        lo, hi = self.rescaled(den)
        t = total.numerator * (den // total.denominator)
        return IntervalUnion((t - hi)[::-1].copy(), (t - lo)[::-1].copy(), den, closed=self.closed)

    def reduced(self) -> tuple[tuple[Fraction, Fraction], ...]:
        return tuple((p.lo, p.hi) for p in self.parts)

    # -- serialisation -------------------------------------------------------

    def to_json(self) -> list[dict]:
        return [p.to_json() for p in self.parts]

    @classmethod
    def from_json(cls, data: Sequence[dict], *, closed: bool = True) -> "IntervalUnion":
        return cls.from_intervals((RationalInterval.from_json(d) for d in data), closed=closed)

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalUnion):
            return NotImplemented
        return self.closed == other.closed and self.reduced() == other.reduced()

    def __hash__(self):
        return hash((self.closed, self.reduced()))

    def __repr__(self) -> str:
        kind = "closed" if self.closed else "open"
        shown = ", ".join(str(p) if self.closed else f"({p.lo}, {p.hi})" for p in self.parts[:4])
        more = f", ... ({len(self)} parts)" if len(self) > 4 else ""
        return f"IntervalUnion[{kind}]({shown}{more})"
