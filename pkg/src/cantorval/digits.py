"""Positional expansions in base ``s`` over the redundant alphabet {0, ..., s+1}.

Values are always exact :class:`fractions.Fraction` objects.  The restricted
alphabet drops the digits ``1`` and ``s``; the set E_s consists of all numbers
with a restricted expansion.
"""

from __future__ import annotations

import enum
import re
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ._guard import check_size
from .errors import DomainError, MalformedDigitError, NotRewritableError, WrongBaseError
from .intervals import RationalInterval, as_fraction

FULL = None  # depth sentinel for the exact value of the whole series


def check_base(s: int, *, even: bool = False) -> int:
    if isinstance(s, bool) or not isinstance(s, int):
        raise WrongBaseError(f"base must be an integer, got {s!r}")
    if s < 4:
        raise WrongBaseError(f"base must be >= 4, got {s}")
    if even and s % 2:
        raise WrongBaseError(f"base must be even (s = 2m + 2), got {s}")
    return s


def full_alphabet(s: int) -> tuple[int, ...]:
    return tuple(range(s + 2))


def restricted_alphabet(s: int) -> tuple[int, ...]:
    return (0,) + tuple(range(2, s)) + (s + 1,)


def hull(s: int) -> RationalInterval:
    """The interval [0, (s+1)/(s-1)] of all values with digits in {0, ..., s+1}."""
    return RationalInterval(Fraction(0), Fraction(s + 1, s - 1))


# --------------------------------------------------------------------------
# DigitString


@dataclass(frozen=True)
class DigitString:
    """An eventually periodic digit sequence ``preperiod + period*``.

    An empty ``period`` means the string is finite (followed by zeros); that
    form and an explicit period ``(0)`` have the same value but print
    differently, so both are kept to make text round trips exact.
    """

    s: int
    preperiod: tuple[int, ...] = ()
    period: tuple[int, ...] = ()

    def __post_init__(self):
        check_base(self.s)
        object.__setattr__(self, "preperiod", tuple(int(d) for d in self.preperiod))
        object.__setattr__(self, "period", tuple(int(d) for d in self.period))
        top = self.s + 1
        for d in self.preperiod + self.period:
            if not 0 <= d <= top:
                raise MalformedDigitError(f"digit {d} outside 0..{top} for base {self.s}")

    @property
    def is_finite(self) -> bool:
        return not self.period or set(self.period) == {0}

    @property
    def is_restricted(self) -> bool:
        bad = {1, self.s}
        return not any(d in bad for d in self.preperiod + self.period)

    def digit(self, n: int) -> int:
        """Digit at 1-based position ``n``."""
        if n < 1:
            raise DomainError("digit positions start at 1")
        if n <= len(self.preperiod):
            return self.preperiod[n - 1]
        if not self.period:
            return 0
        return self.period[(n - 1 - len(self.preperiod)) % len(self.period)]

    def prefix(self, n: int) -> list[int]:
        return [self.digit(k) for k in range(1, n + 1)]

    def unrolled(self, n: int) -> "DigitString":
        """Same sequence with the preperiod extended to at least ``n`` digits."""
        if n <= len(self.preperiod):
            return self
        if not self.period:
            return DigitString(self.s, self.preperiod + (0,) * (n - len(self.preperiod)))
        extra = n - len(self.preperiod)
        L = len(self.period)
        turns = -(-extra // L)
        return DigitString(self.s, self.preperiod + self.period * turns, self.period)

    def canonical(self) -> "DigitString":
        """Shortest preperiod and period describing the same sequence."""
        pre, per = list(self.preperiod), list(self.period)
        if per:
            L = len(per)
            for d in range(1, L + 1):
                if L % d == 0 and per == per[:d] * (L // d):
                    per = per[:d]
                    break
            while pre and pre[-1] == per[-1]:
                pre.pop()
                per = [per[-1]] + per[:-1]
        else:
            while pre and pre[-1] == 0:
                pre.pop()
        return DigitString(self.s, tuple(pre), tuple(per))

    def __str__(self) -> str:
        return format_digits(self)

    @classmethod
    def parse(cls, s: int, text: str) -> "DigitString":
        return parse_digits(s, text)


_TOKEN = re.compile(r"\d|\[\d+\]")


def _format_digit(d: int) -> str:
    return str(d) if d < 10 else f"[{d}]"


def format_digits(d: DigitString) -> str:
    """Text form: ``3.0.(5)``, ``2.(2.3)``, ``[11].(0)``."""
    head = ".".join(_format_digit(x) for x in d.preperiod)
    if not d.period:
        return head
    tail = "(" + ".".join(_format_digit(x) for x in d.period) + ")"
    return f"{head}.{tail}" if head else tail


def _parse_run(s: int, text: str, whole: str) -> tuple[int, ...]:
    if text == "":
        return ()
    out = []
    for tok in text.split("."):
        if not _TOKEN.fullmatch(tok):
            raise MalformedDigitError(f"bad digit token {tok!r} in {whole!r}")
        if tok.startswith("[") and (int(tok[1:-1]) < 10 or tok[1] == "0"):
            raise MalformedDigitError(f"non-canonical digit {tok} in {whole!r}")
        out.append(int(tok.strip("[]")))
    return tuple(out)


def parse_digits(s: int, text: str) -> DigitString:
    """Inverse of :func:`format_digits`; rejects non-canonical spellings."""
    text = text.strip()
    if "(" in text:
        if not text.endswith(")") or text.count("(") != 1 or text.count(")") != 1:
            raise MalformedDigitError(f"period must be a single trailing group: {text!r}")
        head, tail = text[:-1].split("(")
        if head and not head.endswith("."):
            raise MalformedDigitError(f"period group must follow a '.': {text!r}")
        period = _parse_run(s, tail, text)
        if not period:
            raise MalformedDigitError(f"empty period in {text!r}")
        pre = _parse_run(s, head[:-1] if head else "", text)
    else:
        pre, period = _parse_run(s, text, text), ()
    return DigitString(s, pre, period)


# --------------------------------------------------------------------------
# evaluation and cylinders


def tail_radius(s: int, depth: int) -> Fraction:
    """Largest possible value of the digits after position ``depth``."""
    return Fraction(s + 1, (s - 1) * s**depth)


def eval_delta(d: DigitString, depth: Optional[int] = FULL) -> tuple[Fraction, Fraction]:
    """Exact value of the first ``depth`` digits and the radius of the rest.

    ``depth=None`` sums the whole periodic series and returns radius 0.
    """
    s = d.s
    if depth is FULL:
        pre = Fraction(0)
        for k, dig in enumerate(d.preperiod, start=1):
            pre += Fraction(dig, s**k)
        if not d.period:
            return pre, Fraction(0)
        L = len(d.period)
        block = 0
        for dig in d.period:
            block = block * s + dig
        periodic = Fraction(block, s**L - 1) / s ** len(d.preperiod)
        return pre + periodic, Fraction(0)
    if depth < 0:
        raise DomainError("depth must be >= 0")
    num = 0
    for dig in d.prefix(depth):
        num = num * s + dig
    return Fraction(num, s**depth), tail_radius(s, depth)


def value(d: DigitString) -> Fraction:
    return eval_delta(d)[0]


def _check_digits(s: int, digits: Sequence[int], alphabet: Sequence[int]) -> None:
    allowed = set(alphabet)
    for x in digits:
        if x not in allowed:
            raise MalformedDigitError(f"digit {x} not allowed for base {s}")


def cylinder_interval(s: int, prefix: Sequence[int]) -> RationalInterval:
    """Closed interval of all values whose expansion starts with ``prefix``."""
    check_base(s)
    _check_digits(s, prefix, full_alphabet(s))
    num = 0
    for dig in prefix:
        num = num * s + dig
    m = len(prefix)
    lo = Fraction(num, s**m)
    return RationalInterval(lo, lo + tail_radius(s, m))


# --------------------------------------------------------------------------
# rewriting


class Direction(str, enum.Enum):
    DOWN = "down"  # (a, s+j) -> (a+1, j)
    UP = "up"  # (a+1, j) -> (a, s+j)


def pair_rewrite(d: DigitString, pos: int, direction: Direction | str) -> DigitString:
    """Swap the digit pair at 1-based positions ``pos, pos+1`` for its twin.

    Both pairs contribute the same amount, so the value is unchanged.
    """
    direction = Direction(direction)
    if pos < 1:
        raise NotRewritableError("positions start at 1")
    s = d.s
    u = d.unrolled(pos + 1)
    a, b = u.preperiod[pos - 1], u.preperiod[pos]
    if direction is Direction.DOWN:
        if not (0 <= a <= s and b in (s, s + 1)):
            raise NotRewritableError(f"pair ({a}, {b}) at {pos} is not of the form (a, s+j)")
        new = (a + 1, b - s)
    else:
        if not (1 <= a <= s + 1 and b in (0, 1)):
            raise NotRewritableError(f"pair ({a}, {b}) at {pos} is not of the form (a+1, j)")
        new = (a - 1, b + s)
    pre = u.preperiod[: pos - 1] + new + u.preperiod[pos + 1 :]
    return DigitString(s, pre, u.period)


def to_restricted_digits(x: DigitString, depth: Optional[int] = None) -> DigitString:
    """Rewrite a classical base-s expansion of x in [3/s, 1] without digits 1 and s.

    Every 1 is absorbed by a borrow: either from the nearest digit >= 3 on its
    left (which drops by one while the zeros and twos in between become s-1
    and s+1), or together with the next 1 on the right (the pair ``1 1``
    becoming ``0 [s+1]``).  Within a run of digits from {0, 1, 2} the borrow
    state toggles at each 1, so the digit >= 3 opening the run borrows exactly
    when the run holds an odd number of ones.  A run with infinitely many ones
    (a period inside {0, 1, 2} containing 1) never borrows, which turns a
    period ``(1)`` into ``(0 [s+1])``.

    Input already free of 1 and s is returned unchanged.  The result is
    exact and eventually periodic.  With ``depth`` given, only
    the first ``depth`` digits are returned, as a finite string.
    """
    s = x.s
    if depth is not None and depth < 0:
        raise DomainError("depth must be >= 0")
    if x.is_restricted:
        # nothing to rewrite, whatever the value
        return x if depth is None else DigitString(s, tuple(x.prefix(depth)))
    if any(dig > s - 1 for dig in x.preperiod + x.period):
        raise MalformedDigitError(f"classical base-{s} digits must be <= {s - 1}")
    val = value(x)
    if not Fraction(3, s) <= val <= 1:
        raise DomainError(f"value {val} outside [3/{s}, 1]")
    out = _convert(x)
    if depth is None:
        return out
    return DigitString(s, tuple(out.prefix(depth)))


def _convert(x: DigitString) -> DigitString:
    s = x.s
    pre = list(x.preperiod)
    per = list(x.period) if x.period else [0]
    P, L = len(pre), len(per)
    horizon = P + 4 * L

    def dig(j: int) -> int:  # 0-based
        return pre[j] if j < P else per[(j - P) % L]

    def run_borrows(i: int) -> int:
        # parity of ones in the {0,1,2}-run after position i; an endless run
        # with infinitely many ones gets no borrow
        ones = 0
        j = i + 1
        limit = max(j, P) + L
        while True:
            d = dig(j)
            if d >= 3:
                return ones % 2
            ones += d == 1
            j += 1
            if j >= limit and j >= P:
                # scanned a whole period without a digit >= 3
                return 0 if 1 in per else ones % 2

    state = [0] * (horizon + 1)
    out = [0] * horizon
    # the run before the first digit >= 3 is entered without a borrow
    for j in range(horizon):
        d, st = dig(j), state[j]
        if d >= 3:
            if st:
                raise DomainError("no restricted expansion reachable from this input")
            nxt = run_borrows(j)
        elif d == 1:
            nxt = 1 - st
        else:
            nxt = st
        b = d + s * st - nxt
        if b in (1, s) or not 0 <= b <= s + 1:
            raise DomainError("no restricted expansion reachable from this input")
        out[j] = b
        state[j + 1] = nxt

    # the borrow state is periodic in whole input periods after the preperiod
    for k0 in (0, 1):
        for c in (1, 2):
            if state[P + k0 * L] == state[P + (k0 + c) * L]:
                start, stop = P + k0 * L, P + (k0 + c) * L
                result = DigitString(s, tuple(out[:start]), tuple(out[start:stop]))
                if not x.period and result.is_finite:
                    result = DigitString(s, tuple(out[:start]))
                return result
    raise AssertionError("borrow state failed to become periodic")  # pragma: no cover


# --------------------------------------------------------------------------
# membership and multiplicity


class Status(str, enum.Enum):
    INSIDE = "inside"
    EXCLUDED = "excluded"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of :func:`membership_probe`.

    ``gap`` is an open interval free of E_s that contains x (``None`` ends
    mean unbounded); ``distance`` is the distance from x to the nearest point
    already shown to lie outside E_s.
    """

    status: Status
    depth: int
    witness: Optional[DigitString] = None
    gap: Optional[tuple[Optional[Fraction], Optional[Fraction]]] = None
    distance: Optional[Fraction] = None

    def to_json(self) -> dict:
        out: dict = {"status": self.status.value, "depth": self.depth}
        if self.witness is not None:
            out["witness"] = str(self.witness)
        if self.gap is not None:
            out["gap"] = [None if g is None else f"{g.numerator}/{g.denominator}" for g in self.gap]
        if self.distance is not None:
            out["distance"] = f"{self.distance.numerator}/{self.distance.denominator}"
        return out


def _children(s: int, r: Fraction, alphabet: Sequence[int], top: Fraction):
    # remainder after reading digit b: s*r - b must stay in [0, top]
    sr = s * r
    for b in alphabet:
        c = sr - b
        if 0 <= c <= top:
            yield b, c


def membership_probe(s: int, x, depth: int) -> ProbeResult:
    """Decide whether ``x`` belongs to E_s, exploring digits up to ``depth``.

    After n digits the unread part of a restricted expansion of x is the
    remainder s^n x - (prefix), which must stay in the hull.  Remainders of a
    rational x share its denominator, so only finitely many occur and the
    search is run on distinct remainders.  x is inside iff some remainder path
    closes a cycle; it is excluded iff at some level no remainder survives.
    """
    check_base(s)
    if depth < 1:
        raise DomainError("depth must be >= 1")
    x = as_fraction(x)
    top = Fraction(s + 1, s - 1)
    if x < 0:
        return ProbeResult(Status.EXCLUDED, 0, gap=(None, Fraction(0)))
    if x > top:
        return ProbeResult(Status.EXCLUDED, 0, gap=(top, None))

    alphabet = restricted_alphabet(s)
    edges: dict[Fraction, list[tuple[int, Fraction]]] = {}
    # nearest cylinder ends known to lie left/right of x, in value units
    left: Optional[Fraction] = None
    right: Optional[Fraction] = None
    # each level maps remainder -> prefix value; the scale is s^-level
    level = {x: Fraction(0)}
    scale = Fraction(1)
    seen_levels: set[frozenset] = {frozenset(level)}
    reached = depth
    for n in range(1, depth + 1):
        nxt: dict[Fraction, Fraction] = {}
        child_scale = scale / s
        width = top * child_scale
        for r, base in level.items():
            kids = edges.get(r)
            if kids is None:
                kids = list(_children(s, r, alphabet, top))
                edges[r] = kids
            for b in alphabet:
                lo = base + b * child_scale
                hi = lo + width
                if hi < x:
                    left = hi if left is None or hi > left else left
                elif lo > x:
                    right = lo if right is None or lo < right else right
            for b, c in kids:
                nxt.setdefault(c, base + b * child_scale)
        check_size(len(edges), "membership search")
        if not nxt:
            gap = (left if left is not None else Fraction(0), right if right is not None else top)
            return ProbeResult(Status.EXCLUDED, n, gap=gap)
        level, scale = nxt, child_scale
        key = frozenset(level)
        if key in seen_levels:
            # levels now repeat forever, so the graph is fully explored
            for r in level:
                if r not in edges:
                    edges[r] = list(_children(s, r, alphabet, top))
            reached = n
            break
        seen_levels.add(key)

    witness = _cycle_witness(s, x, edges)
    if witness is not None:
        return ProbeResult(Status.INSIDE, reached, witness=witness)
    dist_left = x - left if left is not None else x
    dist_right = right - x if right is not None else top - x
    return ProbeResult(Status.UNDECIDED, reached, distance=min(dist_left, dist_right))


def _cycle_witness(s: int, root: Fraction, edges: dict) -> Optional[DigitString]:
    # keep only fully expanded states that can continue forever
    alive = set(edges)
    changed = True
    while changed:
        changed = False
        for r in list(alive):
            if not any(c in alive for _, c in edges[r]):
                alive.discard(r)
                changed = True
    if root not in alive:
        return None
    digits: list[int] = []
    where: dict[Fraction, int] = {}
    r = root
    while r not in where:
        where[r] = len(digits)
        b, r = min((b, c) for b, c in edges[r] if c in alive)
        digits.append(b)
    k = where[r]
    return DigitString(s, tuple(digits[:k]), tuple(digits[k:])).canonical()


def count_prefixes(s: int, x, depth: int, restricted: bool = True) -> int:
    """Number of digit prefixes of length ``depth`` whose cylinder holds x."""
    check_base(s)
    if depth < 1:
        raise DomainError("depth must be >= 1")
    x = as_fraction(x)
    top = Fraction(s + 1, s - 1)
    if not 0 <= x <= top:
        return 0
    alphabet = restricted_alphabet(s) if restricted else full_alphabet(s)
    counts: dict[Fraction, int] = {x: 1}
    for _ in range(depth):
        nxt: dict[Fraction, int] = defaultdict(int)
        for r, c in counts.items():
            for _, child in _children(s, r, alphabet, top):
                nxt[child] += c
        check_size(len(nxt), "prefix count")
        counts = nxt
        if not counts:
            return 0
    return sum(counts.values())
