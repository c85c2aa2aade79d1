"""2-division field analysis, eligible primes, twist sets, rank dichotomy.

The naive oracle here counts roots of the degree-3 division polynomial
4x^3 + b2 x^2 + 2 b4 x + b6 by scanning residues, independently of the
monic-rescale + modular-exponentiation route used by the package.
"""

from fractions import Fraction
from math import gcd, prod

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from heegnerkit.arith import divisors, factorize, is_squarefree, kronecker, prime_range
from heegnerkit.ellcurve import WeierstrassCurve, a_ell
from heegnerkit.twotors import (
    FLIPPED,
    SAME_AS_E,
    BadPrime,
    CriterionMismatch,
    HasRationalTwoTorsion,
    _character_side,
    _discriminant_side,
    analyze_two_torsion,
    enumerate_twists,
    frobenius_order,
    heegner_hypothesis,
    rank_side,
    signed_prime,
    twist_prime_density,
    twist_primes,
    two_splits,
)

E37 = WeierstrassCurve.from_ainvs([0, 0, 1, -1, 0], label="37a1")
E11 = WeierstrassCurve.from_ainvs([0, -1, 1, -10, -20], label="11a1")
E196 = WeierstrassCurve.from_ainvs([0, -1, 0, -2, 1])  # disc 784 = 28^2

SIGNED_37 = [-11, 53, -71, -127, 149, 197, -211, -263, 337,
             -359, 373, -379, -443, -571, -599, 613]
SIGNED_11 = [-23, 37, -67, -71, 113, 137, -179, -191, 317,
             -331, -379, 389, -443, 449, -463, -487, -631]


def naive_root_count(e: WeierstrassCurve, ell: int) -> int:
    b2, b4, b6 = e.b2, e.b4, e.b6
    return sum(1 for x in range(ell) if (4 * x**3 + b2 * x * x + 2 * b4 * x + b6) % ell == 0)


def naive_order(e: WeierstrassCurve, ell: int) -> int:
    return {0: 3, 1: 2, 3: 1}[naive_root_count(e, ell)]


class TestAnalysis:
    def test_known_curves_are_s3(self):
        a = analyze_two_torsion(E37)
        assert a.galois_type == "S3" and not a.disc_is_square
        assert a.cubic == (4, 0, -4, 1)
        b = analyze_two_torsion(E11)
        assert b.galois_type == "S3" and not b.disc_is_square
        assert b.cubic == (4, -4, -40, -79)

    def test_square_discriminant_gives_c3(self):
        a = analyze_two_torsion(E196)
        assert E196.disc == 784
        assert a.galois_type == "C3" and a.disc_is_square

    def test_full_two_torsion_rejected(self):
        e = WeierstrassCurve.from_ainvs([0, 0, 0, -1, 0])  # y^2 = x^3 - x
        with pytest.raises(HasRationalTwoTorsion):
            analyze_two_torsion(e)

    def test_single_rational_point_rejected(self):
        # x = 3 is 2-torsion: the cubic root is non-integral in X = 4x terms
        e = WeierstrassCurve.from_ainvs([1, 1, 1, -10, -10])
        with pytest.raises(HasRationalTwoTorsion):
            analyze_two_torsion(e)

    def test_requires_minimal_model(self):
        scaled = E37.transform(Fraction(1, 2), 0, 0, 0)  # u = 1/2 blows up disc
        with pytest.raises(ValueError):
            analyze_two_torsion(scaled)


class TestFrobeniusOrder:
    def test_printed_list_members_have_order_three(self):
        assert frobenius_order(E37, 11) == 3
        assert frobenius_order(E11, 23) == 3

    def test_matches_naive_scan(self):
        for e in (E37, E11, E196):
            n = e.conductor
            for ell in prime_range(3, 300):
                if n % ell == 0 or e.disc % ell == 0:
                    continue
                assert frobenius_order(e, ell) == naive_order(e, ell), (e.label, ell)

    def test_order_three_iff_odd_trace(self):
        # order 3 <=> a_ell odd, by the trace of Frobenius on the 2-torsion
        for e in (E37, E11):
            n = e.conductor
            for ell in prime_range(3, 300):
                if n % ell == 0 or e.disc % ell == 0:
                    continue
                assert (frobenius_order(e, ell) == 3) == (a_ell(e, ell) % 2 == 1)

    def test_c3_curve_never_has_order_two(self):
        # A3 contains no transpositions
        for ell in prime_range(3, 2000):
            if E196.conductor % ell == 0 or E196.disc % ell == 0:
                continue
            assert frobenius_order(E196, ell) in (1, 3)

    def test_bad_primes_rejected(self):
        with pytest.raises(BadPrime):
            frobenius_order(E37, 2)
        with pytest.raises(BadPrime):
            frobenius_order(E37, 37)
        with pytest.raises(BadPrime):
            frobenius_order(E11, 11)

    @given(
        st.tuples(st.integers(0, 1), st.integers(-2, 2), st.integers(0, 1),
                  st.integers(-8, 8), st.integers(-8, 8)),
        st.sampled_from(prime_range(3, 60)),
    )
    @settings(max_examples=80, deadline=None)
    def test_order_matches_naive_on_random_curves(self, ainvs, ell):
        try:
            e = WeierstrassCurve.from_ainvs(ainvs)
        except ValueError:
            assume(False)
        assume(e.conductor % ell != 0 and e.disc % ell != 0)
        assert frobenius_order(e, ell) == naive_order(e, ell)


class TestHeegnerHypothesis:
    def test_known_pairs(self):
        assert heegner_hypothesis(-7, 37)
        assert heegner_hypothesis(-7, 11)
        assert heegner_hypothesis(-7, 197)
        assert heegner_hypothesis(-31, 196)

    def test_ramified_prime_disqualifies(self):
        assert not heegner_hypothesis(-7, 7)
        assert not heegner_hypothesis(-7, 14)

    def test_inert_prime_disqualifies(self):
        assert kronecker(-7, 13) == -1
        assert not heegner_hypothesis(-7, 13)

    def test_two_splits_is_one_mod_eight(self):
        assert two_splits(-7)
        assert two_splits(-15)
        assert two_splits(-23)
        assert not two_splits(-11)
        assert not two_splits(-8)

    def test_rejects_non_fundamental(self):
        with pytest.raises(ValueError):
            two_splits(-9)
        with pytest.raises(ValueError):
            heegner_hypothesis(5, 11)


class TestEnumerate:
    def test_printed_signed_primes_for_rank_one_curve(self):
        ts = enumerate_twists(E37, -7, 615)
        assert list(ts.signed_primes) == SIGNED_37

    def test_printed_signed_primes_for_rank_zero_curve(self):
        ts = enumerate_twists(E11, -7, 640)
        assert list(ts.signed_primes) == SIGNED_11

    def test_no_qualifying_prime_below_ten(self):
        ts = enumerate_twists(E37, -7, 10)
        assert ts.signed_primes == () and ts.discs == ()

    def test_single_factor_cap_gives_primes_only(self):
        ts = enumerate_twists(E37, -7, 615, max_factors=1)
        assert list(ts.discs) == SIGNED_37

    def test_first_five_discriminants(self):
        assert list(enumerate_twists(E37, -7, 600).discs[:5]) == [-11, 53, -71, -127, 149]
        assert list(enumerate_twists(E11, -7, 200).discs[:5]) == [-23, 37, -67, -71, 113]

    def test_composite_discriminants_appear_sorted(self):
        ts = enumerate_twists(E37, -7, 1000)
        assert -583 in ts.discs  # (-11) * 53
        assert 781 in ts.discs  # (-11) * (-71)
        sizes = [abs(d) for d in ts.discs]
        assert sizes == sorted(sizes)

    def test_emitted_discriminants_are_valid(self):
        ts = enumerate_twists(E11, -7, 3000, max_factors=2)
        n = E11.conductor
        assert len(ts.discs) > len(ts.signed_primes)
        for d in ts.discs:
            assert d % 4 == 1 and is_squarefree(d) and gcd(d, 2 * n) == 1
            assert prod(signed_prime(q) for q in factorize(d)) == d
            for q in factorize(d):
                assert kronecker(-7, q) == 1 and frobenius_order(E11, q) == 3

    def test_precondition_failures(self):
        with pytest.raises(HasRationalTwoTorsion):
            enumerate_twists(WeierstrassCurve.from_ainvs([0, 0, 0, -1, 0]), -7, 100)
        with pytest.raises(ValueError, match="split in K"):
            enumerate_twists(E11, -11, 100)  # 11 ramifies
        with pytest.raises(ValueError, match="2 is not split"):
            enumerate_twists(E37, -3, 100)  # 37 splits but -3 = 5 mod 8

    @given(st.lists(st.sampled_from(SIGNED_37), unique=True, min_size=1, max_size=4))
    def test_products_of_signed_primes_are_one_mod_four(self, subset):
        d = prod(subset)
        assert d % 4 == 1
        assert (d < 0) == (sum(q < 0 for q in subset) % 2 == 1)


class TestDensity:
    def test_s3_density_near_one_sixth(self):
        rep = twist_prime_density(E37, -7, 100_000)
        assert abs(rep.frequency - 1 / 6) <= 0.02
        assert rep.expected == Fraction(1, 6)
        assert (rep.hits, rep.total) == (1607, 9589)

    def test_c3_density_near_one_third(self):
        rep = twist_prime_density(E196, -31, 20_000)
        assert rep.expected == Fraction(1, 3)
        assert abs(rep.frequency - 1 / 3) <= 0.03

    def test_counts_match_naive_scan_at_small_bound(self):
        rep = twist_prime_density(E37, -7, 3000)
        hits = total = 0
        for ell in prime_range(3, 3000):
            if 37 % ell == 0 or E37.disc % ell == 0 or ell == 7:
                continue
            total += 1
            if kronecker(-7, ell) == 1 and naive_order(E37, ell) == 3:
                hits += 1
        assert (rep.hits, rep.total) == (hits, total)


class TestRankSide:
    def test_positive_disc_follows_twist_sign(self):
        assert E37.disc == 37 > 0
        assert rank_side(E37, 53) == SAME_AS_E
        assert rank_side(E37, -11) == FLIPPED

    def test_negative_disc_always_same(self):
        assert E11.disc < 0
        for d in enumerate_twists(E11, -7, 200).discs:
            assert rank_side(E11, d) == SAME_AS_E

    def test_character_values_by_hand(self):
        assert kronecker(53, -37) == 1
        assert kronecker(-11, -37) == -1

    def test_criteria_agree_on_enumerated_twists(self):
        for e, dk in ((E37, -7), (E11, -7), (E196, -31)):
            for d in enumerate_twists(e, dk, 800).discs:
                assert _character_side(e, d) == _discriminant_side(e, d)
                rank_side(e, d)  # must not raise CriterionMismatch

    def test_rejects_non_twist_discriminants(self):
        with pytest.raises(ValueError):
            rank_side(E37, 1)
        with pytest.raises(ValueError):
            rank_side(E37, 15)  # 3 mod 4
        with pytest.raises(ValueError):
            rank_side(E37, 53 * 53)  # not squarefree
        with pytest.raises(ValueError):
            rank_side(E37, 5)  # a_5 is even, so Frobenius order is below 3
        with pytest.raises(ValueError):
            rank_side(E37, -11 * 37)  # shares a factor with N


class TestDivisors:
    def test_small_values(self):
        assert divisors(12) == [1, 2, 3, 4, 6, 12]
        assert divisors(-49) == [1, 7, 49]
        assert divisors(1) == [1]

    @given(st.integers(min_value=1, max_value=20000))
    @settings(max_examples=100)
    def test_characterization(self, n):
        ds = divisors(n)
        assert ds == [d for d in range(1, n + 1) if n % d == 0]
