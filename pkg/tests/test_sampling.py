import itertools
import math
from collections import defaultdict
from fractions import Fraction as F

import numpy as np
import pytest

from cantorval.distribution import DigitLaw, gn_convolution_law, multigeometric_law
from cantorval.errors import DomainError, InvalidLawError, ResourceLimitError
from cantorval.geometry import cylinder_cover
from cantorval.sampling import (
    cdf_bracket,
    dkw_epsilon,
    empirical_check,
    eta_block_digit,
    hull_grid,
    make_rng,
    numerators,
    sample_digits,
    sample_eta,
    sample_eta_digits,
    sample_eta_many,
    sample_xi,
    sample_xi_many,
    truncated_cdf,
    truncated_dist,
)

HALF = gn_convolution_law(F(1, 2))
GN3 = gn_convolution_law(F(3, 10))


def enumerate_law(law, N):
    """Oracle: every digit string of length N with its probability."""
    out = defaultdict(lambda: law.p[0] * 0)
    s = law.s
    for ds in itertools.product(range(s + 2), repeat=N):
        w = law.p[0] * 0 + 1
        for d in ds:
            w *= law.p[d]
        if w:
            out[sum(F(d, s**k) for k, d in enumerate(ds, start=1))] += w
    return dict(out)


# -- sampling -----------------------------------------------------------------------


def test_sample_xi_range_and_determinism():
    x = sample_xi(gn_convolution_law(0.5), 30, 123)
    assert 0 <= x <= F(5, 3)
    assert sample_xi(HALF, 30, 123) == sample_xi(HALF, 30, 123)
    a = sample_xi_many(HALF, 10, 50, make_rng(5, 0))
    b = sample_xi_many(HALF, 10, 50, make_rng(5, 1))
    assert not np.array_equal(a, b)
    assert np.array_equal(a, sample_xi_many(HALF, 10, 50, make_rng(5, 0)))


def test_float_values_match_exact_numerators():
    digits = sample_digits(GN3, 12, 200, 3)
    exact = numerators(digits, 4)
    vals = sample_xi_many(GN3, 12, 200, 3)
    assert np.allclose(vals, exact / 4.0**12, rtol=0, atol=1e-15)


def test_numerators_guard():
    with pytest.raises(ResourceLimitError):
        numerators(np.zeros((1, 40), dtype=np.int64), 4)


def test_eta_block_law_is_multigeometric():
    for m in (1, 2, 3):
        for q0 in (F(3, 10), F(1, 2)):
            q1 = 1 - q0
            p = [F(0)] * (2 * m + 4)
            for bits in itertools.product((0, 1), repeat=m + 1):
                w = F(1)
                for b in bits:
                    w *= q1 if b else q0
                p[eta_block_digit(bits)] += w
            assert tuple(p) == multigeometric_law(m, q0).p


def test_eta_sampler_digit_frequencies():
    d = sample_eta_digits(1, 0.3, 1, 100_000, 8)[:, 0]
    freq = np.bincount(d, minlength=6) / len(d)
    target = np.array([0.09, 0, 0.21, 0.21, 0, 0.49])
    assert np.all(np.abs(freq - target) < 0.006)
    for m in (2, 3):
        law = multigeometric_law(m, 0.3)
        d = sample_eta_digits(m, 0.3, 2, 50_000, m).ravel()
        freq = np.bincount(d, minlength=law.s + 2) / len(d)
        assert np.all(np.abs(freq - np.array(law.floats)) < 0.006)


def test_eta_mean():
    m, q0, N, n = 1, 0.5, 20, 200_000
    law = multigeometric_law(m, q0)
    s = law.s
    mean = float(law.mean()) * (1 - s**-N) / (s - 1)
    vals = sample_eta_many(m, q0, N, n, 2)
    sd = vals.std()
    assert abs(vals.mean() - mean) < 5 * sd / math.sqrt(n)
    assert sample_eta(2, F(3, 10), 10, 4) == sample_eta(2, F(3, 10), 10, 4)


def test_eta_rejects_bad_input():
    with pytest.raises(InvalidLawError):
        sample_eta(1, 1.0, 5, 0)
    with pytest.raises(DomainError):
        sample_eta(0, 0.5, 5, 0)
    with pytest.raises(DomainError):
        sample_eta(1, 0.5, 0, 0)


def test_samples_stay_in_spectrum():
    for law, N in ((GN3, 6), (multigeometric_law(2, F(1, 3)), 4)):
        s = law.s
        cover = cylinder_cover(s, N)
        nums = numerators(sample_digits(law, N, 3000, 1), s)
        assert all(cover.contains(F(int(a), s**N)) for a in nums)


# -- exact truncated law ------------------------------------------------------------


def test_truncated_n1():
    td = truncated_dist(HALF, 1)
    assert td.atoms == [(0, F(1, 4)), (F(1, 2), F(1, 4)), (F(3, 4), F(1, 4)), (F(5, 4), F(1, 4))]
    assert td.tail_radius == F(5, 12)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_truncated_matches_enumeration(N):
    for law in (HALF, GN3, DigitLaw(4, (F(1, 6),) * 6), DigitLaw(4, (F(1, 10), F(1, 5), 0, F(3, 10), F(1, 5), F(1, 5)))):
        td = truncated_dist(law, N)
        assert dict(td.atoms) == enumerate_law(law, N)
        assert sum(td.probs) == 1


def test_truncated_invariants():
    for law in (GN3, multigeometric_law(2, F(2, 7))):
        s = law.s
        for N in (1, 3, 5):
            td = truncated_dist(law, N)
            vals = [x for x, _ in td.atoms]
            assert all(a < b for a, b in zip(vals, vals[1:]))
            top = F(s + 1, s - 1) * (1 - F(1, s**N))
            assert 0 <= vals[0] and vals[-1] <= top
            assert sum(td.probs) == 1


def test_float_mode_truncation():
    td = truncated_dist(gn_convolution_law(0.3), 6)
    assert abs(math.fsum(td.probs) - 1) < 1e-15
    exact = truncated_dist(GN3, 6)
    assert np.array_equal(td.numerators, exact.numerators)
    assert max(abs(a - float(b)) / float(b) for a, b in zip(td.probs, exact.probs)) < 1e-13


@pytest.mark.parametrize("law", [HALF, DigitLaw(6, (F(1, 8), F(1, 16), F(3, 16), F(1, 8), F(1, 8), F(3, 16), F(1, 16), F(1, 8)))])
def test_truncated_symmetry(law):
    s = law.s
    for N in (1, 2, 4):
        td = truncated_dist(law, N)
        atoms = dict(td.atoms)
        centre2 = F(s + 1, s - 1) * (1 - F(1, s**N))
        assert {centre2 - x: p for x, p in atoms.items()} == atoms


def test_truncated_guard(monkeypatch):
    monkeypatch.setenv("CANTORVAL_MAX_ELEMENTS", "1000")
    with pytest.raises(ResourceLimitError):
        truncated_dist(GN3, 6)


def test_json_export():
    js = truncated_dist(HALF, 1).to_json()
    assert js["atoms"][1] == {"x": "1/2", "p": "1/4"}
    assert js["tail_radius"] == "5/12"
    assert isinstance(truncated_dist(gn_convolution_law(0.5), 1).to_json()["atoms"][0]["p"], float)


# -- CDF brackets ---------------------------------------------------------------------


def test_recursive_cdf_matches_atoms():
    for law in (GN3, multigeometric_law(2, F(1, 3))):
        for N in (1, 3, 5):
            td = truncated_dist(law, N)
            for x in hull_grid(law.s, 41) + [x for x, _ in td.atoms[:20]]:
                assert truncated_cdf(law, N, x) == td.cdf(x)


def test_bracket_examples():
    b = cdf_bracket(HALF, 10, -F(1, 10))
    assert (b.lo, b.hi) == (0, 0)
    b = cdf_bracket(HALF, 10, 2)
    assert (b.lo, b.hi) == (1, 1)
    b = cdf_bracket(HALF, 10, F(5, 6))
    assert b.lo <= F(1, 2) <= b.hi
    b = cdf_bracket(HALF, 10, F(8333333, 10**7))
    assert b.lo <= F(1, 2) <= b.hi


def test_brackets_nest():
    for x in hull_grid(4, 33):
        for N in range(1, 9):
            a, b = cdf_bracket(GN3, N, x), cdf_bracket(GN3, N + 2, x)
            assert a.lo <= b.lo and b.hi <= a.hi


def test_brackets_contain_deep_truncation():
    deep = truncated_dist(GN3, 8)
    for N in range(1, 5):
        for j in range(100):
            x = F(5, 3) * F(j, 99)
            b = cdf_bracket(GN3, N, x)
            assert b.contains(deep.cdf(x))


def test_deep_bracket_is_cheap():
    b = cdf_bracket(GN3, 20, F(5, 6))
    assert b.hi - b.lo < F(1, 10**4)


# -- empirical check -------------------------------------------------------------------


def test_dkw_epsilon():
    assert dkw_epsilon(100_000) == pytest.approx(math.sqrt(math.log(2000) / 200_000))


def test_empirical_check_passes_and_catches_corruption():
    for law in (GN3, gn_convolution_law(0.5)):
        assert empirical_check(law, 12, 20_000, 1).statistic <= 0
    swapped = DigitLaw(4, (F(49, 100), 0, F(21, 100), F(21, 100), 0, F(9, 100)))
    assert empirical_check(GN3, 12, 20_000, 1, sample_law=swapped).statistic > 0


def test_empirical_check_small_and_rows():
    chk = empirical_check(GN3, 8, 100, 0)
    assert chk.statistic <= 0
    assert len(chk.rows) == 257 and chk.rows[128][0] == F(5, 6)
    with pytest.raises(DomainError):
        empirical_check(GN3, 8, 99, 0)
