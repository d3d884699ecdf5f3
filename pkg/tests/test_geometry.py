import itertools
import math
from fractions import Fraction as F

import pytest

from cantorval import geometry as g
from cantorval.digits import cylinder_interval, hull, restricted_alphabet, value, DigitString
from cantorval.errors import DomainError, ResourceLimitError, WrongBaseError
from cantorval.intervals import IntervalUnion, RationalInterval


def brute_cover(s, k):
    """Union of every restricted rank-k cylinder, built from scratch."""
    cyl = [cylinder_interval(s, list(w)) for w in itertools.product(restricted_alphabet(s), repeat=k)]
    return IntervalUnion.from_intervals(cyl)


# -- IFS and covers --------------------------------------------------------------


def test_ifs_offsets():
    assert [m.offset for m in g.ifs_maps(4)] == [0, F(2, 4), F(3, 4), F(5, 4)]
    assert [m.offset for m in g.ifs_maps(6)] == [0, F(2, 6), F(3, 6), F(4, 6), F(5, 6), F(7, 6)]
    for s in (4, 5, 6, 8):
        H = hull(s)
        assert all(m.image(H).issubset(H) for m in g.ifs_maps(s))


def test_depth_one_cover_by_hand():
    # the four rank-1 cylinders [0,5/12],[1/2,11/12],[3/4,7/6],[5/4,5/3] merged
    assert g.cylinder_cover(4, 1).reduced() == ((0, F(5, 12)), (F(1, 2), F(7, 6)), (F(5, 4), F(5, 3)))
    assert g.cylinder_cover(4, 0).reduced() == ((0, F(5, 3)),)
    assert g.cylinder_cover(6, 1).total_length() < F(7, 5)


@pytest.mark.parametrize("s,kmax", [(4, 5), (5, 3), (6, 3), (8, 2)])
def test_cover_matches_enumeration(s, kmax):
    for k in range(kmax + 1):
        assert g.cylinder_cover(s, k) == brute_cover(s, k)


@pytest.mark.parametrize("s", [4, 6, 8])
def test_cover_nesting(s):
    for k in range(9):
        assert g.cylinder_cover(s, k + 1).issubset(g.cylinder_cover(s, k))


def test_component_count_is_power_of_three():
    for s in (4, 6, 8):
        assert [len(g.cylinder_cover(s, k)) for k in range(8)] == [3**k for k in range(8)]


def test_gaps_examples():
    assert g.gaps(4, 1).reduced() == ((F(5, 12), F(1, 2)), (F(7, 6), F(5, 4)))
    first = g.gaps(4, 1).parts[0]
    assert first.width == F(4 - 3, 4 * 3)
    for s in (4, 6):
        assert len(g.gaps(s, 0)) == 0


@pytest.mark.parametrize("s", [4, 6, 8])
def test_gaps_symmetric(s):
    top = F(s + 1, s - 1)
    for k in range(1, 8):
        gp = g.gaps(s, k)
        assert gp.mirror(top) == gp


def test_gaps_avoid_known_points():
    # values of restricted strings never fall in a gap
    for s in (4, 6):
        for w in itertools.product(restricted_alphabet(s), repeat=3):
            x = value(DigitString(s, w[:2], w[2:]))
            for k in range(1, 6):
                assert not g.gaps(s, k).contains(x)


def test_resource_guard(monkeypatch):
    monkeypatch.setenv("CANTORVAL_MAX_ELEMENTS", "100")
    with pytest.raises(ResourceLimitError):
        g.cylinder_cover(10, 5)
    with pytest.raises(ResourceLimitError):
        g.cylinder_cover(4, 40)


# -- maximal interval, symmetry ---------------------------------------------------


def test_maximal_interval():
    iv = g.maximal_interval(4)
    assert (iv.lo, iv.hi) == (F(2, 3), 1) and iv.width == F(1, 3)
    assert g.maximal_interval(6) == RationalInterval(F(2, 5), 1)
    for s in (4, 6, 8):
        iv = g.maximal_interval(s)
        assert value(DigitString(s, (), (2,))) == iv.lo
        assert value(DigitString(s, (), (s - 1,))) == iv.hi
    with pytest.raises(WrongBaseError):
        g.maximal_interval(5)


def test_symmetry_map():
    assert g.symmetry_map(4, 0) == F(5, 3)
    assert g.symmetry_map(4, F(5, 6)) == F(5, 6) == g.symmetry_center(4)
    assert g.symmetry_map(4, F(2, 3)) == 1
    assert g.symmetry_map(6, g.symmetry_map(6, F(3, 7))) == F(3, 7)


# -- decomposition ------------------------------------------------------------------


def test_decomposition_ratios():
    d = g.decompose(4, 5)
    assert [c.ratio for c in d] == [F(1, 4**i) for i in range(1, 6)]
    assert d.ratio_sum() == 2 * (1 - F(1, 4**5)) / 3
    assert g.decompose(4, 60).ratio_sum() < F(2, 3)


@pytest.mark.parametrize("s", [4, 6, 8, 10])
def test_copies_sit_in_their_cylinders(s):
    copies = list(g.decompose(s, 6))
    for c in copies:
        assert c.box == cylinder_interval(s, [2] * c.index + [0])
        assert c.mirror_box == cylinder_interval(s, [s - 1] * c.index + [s + 1])
        assert g.symmetry_map(s, c.box.hi) == c.mirror_box.lo
    for a, b in zip(copies, copies[1:]):
        assert b.box.lo - a.box.hi == g.copy_spacing(s, a.index) > 0
        assert a.mirror_box.lo - b.mirror_box.hi == g.copy_spacing(s, a.index)
    # every copy lies left of the central interval, every mirror right of it
    assert copies[-1].box.hi < F(2, s - 1) and copies[-1].mirror_box.lo > 1


@pytest.mark.parametrize("s", [4, 6, 8, 10])
def test_balance_identity(s):
    lam = F(1)
    assert lam == F(s - 3, s - 1) + F(2, s - 1) * lam
    central = g.maximal_interval(s).width
    assert central == F(s - 3, s - 1)
    N = 30
    mass = central + g.decompose(s, N).ratio_sum() * lam
    assert 1 - mass == F(2, s - 1) / s**N


def test_certified_interior_lies_in_covers():
    for s in (4, 6):
        for k in range(1, 6):
            ci = g.certified_interior(s, k)
            assert IntervalUnion(ci.lo, ci.hi, ci.denominator).issubset(g.cylinder_cover(s, k + 4))


# -- measure -----------------------------------------------------------------------


def test_measure_examples():
    assert g.interior_measure_estimate(4, 0) == F(5, 3)
    assert g.interior_measure_estimate(4, 1) == F(3, 2)
    m7, m8 = g.interior_measure_estimate(4, 7), g.interior_measure_estimate(4, 8)
    assert 1 <= m8 < F(3, 2) and m8 < m7


def test_measure_closed_form():
    # lengths observed to follow 1 + (2/3) (3/4)^k for s = 4 ... checked exactly up to depth 12
    for k in range(13):
        assert g.interior_measure_estimate(4, k) == 1 + F(2, 3) * F(3, 4) ** k


# -- dimension ----------------------------------------------------------------------


@pytest.mark.parametrize("s", [4, 6, 8, 10])
def test_similarity_dimension_closed_form(s):
    got = g.similarity_dimension(g.boundary_family(s))
    assert abs(got - math.log(3) / math.log(s)) <= 1e-12
    assert abs(g.boundary_dimension(s) - math.log(3) / math.log(s)) == 0


def test_similarity_dimension_lists():
    assert abs(g.similarity_dimension([0.5, 0.5]) - 1.0) <= 1e-12
    assert abs(g.similarity_dimension([1 / 3, 1 / 3]) - math.log(2) / math.log(3)) <= 1e-12
    with pytest.raises(DomainError):
        g.similarity_dimension([0.9, 0.9, 0.9])
    with pytest.raises(DomainError):
        g.similarity_dimension([1.5])


def brute_box_count(s, k):
    """Grid boxes meeting cover(k) minus the certified interior, by direct search."""
    cover = brute_cover(s, k)
    holes = []
    # words of copy maps with total exponent n <= k, applied to (2/(s-1), 1)
    base = []
    for n in range(1, k + 1):
        off = sum(F(2, s**j) for j in range(1, n))
        r = F(1, s**n)
        base.append((n, r, off))
        base.append((n, r, F(s + 1, s - 1) * (1 - r) - off))

    def grow(n, scale, shift):
        holes.append((shift + scale * F(2, s - 1), shift + scale))
        for m, r, off in base:
            if n + m <= k:
                grow(n + m, scale * r, shift + scale * off)

    grow(0, F(1), F(0))
    bnd = cover.subtract_open(IntervalUnion.from_intervals(holes, closed=False))
    side = F(1, s**k)
    n_boxes = math.ceil(F(s + 1, s - 1) / side)
    count = 0
    for j in range(n_boxes):
        lo, hi = j * side, (j + 1) * side
        if any(p.lo <= hi and lo <= p.hi for p in bnd.parts):
            count += 1
    return count


@pytest.mark.parametrize("s,k", [(4, 1), (4, 2), (4, 3), (4, 4), (6, 2), (6, 3), (8, 2)])
def test_box_count_matches_brute_force(s, k):
    assert g.boundary_box_count(s, k) == brute_box_count(s, k)


def test_box_counts_frozen():
    bc = g.box_counting_estimate(4, range(4, 11))
    assert bc.counts == (215, 647, 1943, 5831, 17495, 52487, 157463)
    assert abs(bc.slope - math.log(3) / math.log(4)) < 0.05


def test_box_count_needs_two_depths():
    with pytest.raises(DomainError):
        g.box_counting_estimate(4, [5])
    with pytest.raises(DomainError):
        g.box_counting_estimate(4, [5, 4])


def test_cover_table():
    rows = g.cover_table(4, [0, 1, 2])
    assert rows == [(0, 1, F(5, 3)), (1, 3, F(3, 2)), (2, 9, F(11, 8))]
