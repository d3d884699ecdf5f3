"""Exact geometry of E_s: covers, gaps, the maximal interval, self-similar
pieces, interior measure and the dimension of the boundary.

Covers are computed by pushing the merged cover of the previous depth
through the s maps of the IFS, so a depth-k cover costs O(s * #components)
rather than O(s^k).  All endpoints are integers over s^k (s - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np

from ._guard import INT64_HEADROOM, check_size
from .digits import check_base, hull, restricted_alphabet
from .errors import DomainError, ResourceLimitError
from .intervals import IntervalUnion, RationalInterval, as_fraction

BISECTION_BRACKET = (1e-9, 1.0)
BISECTION_MAX_ITER = 200
DIMENSION_TOL = 1e-12


@dataclass(frozen=True)
class IfsMap:
    """The similarity x -> offset + scale * x."""

    scale: Fraction
    offset: Fraction

    def __post_init__(self):
        if not 0 < self.scale < 1:
            raise DomainError(f"scale {self.scale} outside (0, 1)")

    def __call__(self, x) -> Fraction:
        return self.offset + self.scale * as_fraction(x)

    def image(self, iv: RationalInterval) -> RationalInterval:
        return RationalInterval(self(iv.lo), self(iv.hi))


def ifs_maps(s: int) -> list[IfsMap]:
    check_base(s)
    return [IfsMap(Fraction(1, s), Fraction(i, s)) for i in restricted_alphabet(s)]


def _check_depth(s: int, depth: int) -> None:
    if depth < 0:
        raise DomainError("depth must be >= 0")
    if (s + 1) * s ** (depth + 1) >= INT64_HEADROOM:
        raise ResourceLimitError(f"depth {depth} overflows 64-bit endpoints for base {s}")


@lru_cache(maxsize=64)
def _cover(s: int, depth: int) -> IntervalUnion:
    if depth == 0:
        return IntervalUnion(np.array([0], dtype=np.int64), np.array([s + 1], dtype=np.int64), s - 1, merged=True)
    prev = _cover(s, depth - 1)
    check_size(s * len(prev), f"cylinder cover of depth {depth}")
    D = prev.denominator
    shifts = [i * D for i in restricted_alphabet(s)]
    lo = np.concatenate([prev.lo + sh for sh in shifts])
    hi = np.concatenate([prev.hi + sh for sh in shifts])
    return IntervalUnion(lo, hi, D * s)


def cylinder_cover(s: int, depth: int) -> IntervalUnion:
    """Merged union of all restricted cylinders of rank ``depth``."""
    check_base(s)
    _check_depth(s, depth)
    return _cover(s, depth)


def gaps(s: int, depth: int) -> IntervalUnion:
    """Open complement of the depth-``depth`` cover inside the hull."""
    return cylinder_cover(s, depth).complement(hull(s))


def maximal_interval(s: int) -> RationalInterval:
    """Longest interval inside E_s: [2/(s-1), 1] = [value of (2), value of (s-1)]."""
    check_base(s, even=True)
    return RationalInterval(Fraction(2, s - 1), Fraction(1))


def symmetry_map(s: int, x) -> Fraction:
    """Digit inversion d -> s+1-d, i.e. x -> (s+1)/(s-1) - x."""
    check_base(s)
    return Fraction(s + 1, s - 1) - as_fraction(x)


def symmetry_center(s: int) -> Fraction:
    return Fraction(s + 1, 2 * (s - 1))


def interior_measure_estimate(s: int, depth: int) -> Fraction:
    """Total length of the depth-``depth`` cover; decreases to 1."""
    return cylinder_cover(s, depth).total_length()


# --------------------------------------------------------------------------
# self-similar decomposition


@dataclass(frozen=True)
class Copy:
    """One pair of affine copies of E_s in the decomposition.

    ``offset`` is the left end of the copy inside the cylinder 2...2 0 (index
    twos), ``mirror_offset`` the left end of its reflection inside
    (s-1)...(s-1) (s+1).  Both copies have size ``ratio`` relative to E_s.
    """

    index: int
    ratio: Fraction
    offset: Fraction
    mirror_offset: Fraction
    width: Fraction

    @property
    def box(self) -> RationalInterval:
        return RationalInterval(self.offset, self.offset + self.width)

    @property
    def mirror_box(self) -> RationalInterval:
        return RationalInterval(self.mirror_offset, self.mirror_offset + self.width)


@dataclass(frozen=True)
class Decomposition:
    s: int
    central: RationalInterval  # open interval (2/(s-1), 1)
    count: int

    def copies(self) -> Iterator[Copy]:
        s = self.s
        top = Fraction(s + 1, s - 1)
        offset = Fraction(0)
        for i in range(self.count):
            ratio = Fraction(1, s ** (i + 1))
            mirror = top * (1 - ratio) - offset
            yield Copy(i, ratio, offset, mirror, ratio * top)
            offset += Fraction(2, s ** (i + 1))

    def ratio_sum(self) -> Fraction:
        return 2 * sum((c.ratio for c in self.copies()), Fraction(0))

    def __iter__(self):
        return self.copies()


def decompose(s: int, count: int) -> Decomposition:
    """Central interval plus the first ``count`` pairs of copies of E_s."""
    check_base(s, even=True)
    if count < 1:
        raise DomainError("count must be >= 1")
    return Decomposition(s, RationalInterval(Fraction(2, s - 1), Fraction(1)), count)


def copy_spacing(s: int, i: int) -> Fraction:
    """Distance between the bounding boxes of copies i and i+1."""
    return Fraction(s - 3, s ** (i + 1) * (s - 1))


def _word_offsets(s: int, depth: int) -> list[np.ndarray]:
    """Offsets of all compositions of the decomposition maps, by total exponent.

    Entry n holds integer offsets in units of 1/(s^n (s-1)) for every word
    whose ratio is s^-n.  The base map with exponent n is a copy map of index
    n-1 or its reflection.
    """
    base: dict[int, tuple[int, int]] = {}
    for n in range(1, depth + 1):
        off = 2 * (s - 1) * sum(s ** (n - j) for j in range(1, n))
        base[n] = (off, (s + 1) * (s**n - 1) - off)
    words = [np.array([0], dtype=np.int64)]
    for n in range(1, depth + 1):
        chunks = []
        for m in range(1, n + 1):
            prev = words[n - m]
            for off in base[m]:
                chunks.append(prev * s**m + off)
        total = sum(len(c) for c in chunks)
        check_size(total, f"interior words of exponent {n}")
        words.append(np.concatenate(chunks))
    return words


@lru_cache(maxsize=32)
def _certified_interior(s: int, depth: int) -> IntervalUnion:
    words = _word_offsets(s, depth)
    lo_parts, hi_parts = [], []
    for n, offs in enumerate(words):
        f = s ** (depth - n)
        lo_parts.append((offs + 2) * f)
        hi_parts.append((offs + s - 1) * f)
    return IntervalUnion(np.concatenate(lo_parts), np.concatenate(hi_parts), s**depth * (s - 1), closed=False)


def certified_interior(s: int, depth: int) -> IntervalUnion:
    """Open intervals certified to lie inside int E_s.

    These are the images of (2/(s-1), 1) under every composition of the copy
    maps with total ratio at least s^-depth.
    """
    check_base(s, even=True)
    _check_depth(s, depth)
    return _certified_interior(s, depth)


def boundary_approximation(s: int, depth: int) -> IntervalUnion:
    """Closed set containing fr E_s: the cover minus the certified interior."""
    return cylinder_cover(s, depth).subtract_open(certified_interior(s, depth))


def boundary_box_count(s: int, depth: int) -> int:
    """Number of closed grid boxes of side s^-depth meeting the approximate boundary."""
    b = boundary_approximation(s, depth)
    D = s**depth * (s - 1)
    lo, hi = b.rescaled(D)
    g = s - 1
    first = np.maximum(-(-lo // g) - 1, 0)
    last = hi // g
    # boxes form integer ranges [first, last]; count their union
    order = np.argsort(first, kind="stable")
    first, last = first[order], last[order]
    reach = np.maximum.accumulate(last)
    starts = np.ones(len(first), dtype=bool)
    starts[1:] = first[1:] > reach[:-1]
    head = np.flatnonzero(starts)
    tail = np.append(head[1:] - 1, len(first) - 1)
    return int(np.sum(reach[tail] - first[head] + 1))


@dataclass(frozen=True)
class BoxCount:
    slope: float
    depths: tuple[int, ...]
    counts: tuple[int, ...]


def box_counting_estimate(s: int, depths: Sequence[int]) -> BoxCount:
    """Least-squares slope of log(count) against depth * log(s)."""
    depths = tuple(int(k) for k in depths)
    if len(depths) < 2:
        raise DomainError("box counting needs at least two depths")
    if any(b <= a for a, b in zip(depths, depths[1:])):
        raise DomainError("depths must be strictly increasing")
    if depths[0] < 1:
        raise DomainError("depths must be >= 1")
    counts = tuple(boundary_box_count(s, k) for k in depths)
    x = np.array(depths, dtype=float) * math.log(s)
    y = np.log(np.array(counts, dtype=float))
    slope = float(np.polyfit(x, y, 1)[0])
    return BoxCount(slope, depths, counts)


# --------------------------------------------------------------------------
# similarity dimension


@dataclass(frozen=True)
class GeometricFamily:
    """``families`` copies of each ratio s^-i, i >= start."""

    s: int
    families: int = 2
    start: int = 1

    def moran_sum(self, x: float) -> float:
        q = float(self.s) ** (-x)
        return self.families * q**self.start / (1.0 - q)


def boundary_family(s: int) -> GeometricFamily:
    return GeometricFamily(s, families=2, start=1)


def boundary_dimension(s: int) -> float:
    """Closed form log_s 3."""
    check_base(s)
    return math.log(3) / math.log(s)


def similarity_dimension(ratios: Union[Sequence[float], GeometricFamily]) -> float:
    """Root x of sum(r ** x) = 1 by bisection on [1e-9, 1]."""
    if isinstance(ratios, GeometricFamily):
        f = lambda x: ratios.moran_sum(x) - 1.0  # noqa: E731
    else:
        rs = [float(r) for r in ratios]
        if not rs or any(not 0 < r < 1 for r in rs):
            raise DomainError("ratios must lie in (0, 1)")
        f = lambda x: math.fsum(r**x for r in rs) - 1.0  # noqa: E731
    lo, hi = BISECTION_BRACKET
    f_lo, f_hi = f(lo), f(hi)
    if f_hi == 0.0:
        return hi
    if f_lo == 0.0:
        return lo
    if f_lo < 0 or f_hi > 0:
        raise DomainError(f"no root of the Moran equation in [{lo}, {hi}]")
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_mid > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= DIMENSION_TOL * 1e-3:
            break
    return 0.5 * (lo + hi)


def cover_table(s: int, depths: Sequence[int]) -> list[tuple[int, int, Fraction]]:
    """Rows (depth, component count, cover length) for plotting."""
    return [(k, len(cylinder_cover(s, k)), interior_measure_estimate(s, k)) for k in depths]
