"""Formal logarithm, 2-adic unit test, Euler factors, twist congruence.

Oracles: the degree-9 log expansions and the low coefficients of w(t) are
frozen and independently certified in-test by the defining differential
identity; the 2-adic digit targets were refrozen from an exact-rational
partial-sum evaluation at t = 2/5 (odd denominators make the digits of the
partial sum provable via the tail bound v2(t^k / k) >= k - log2 k).
"""

import random
from fractions import Fraction

import pytest

from heegnerkit.ellcurve import WeierstrassCurve, quadratic_twist, scalar_mul
from heegnerkit.exactnum import PadicNumber, PowerSeries, QuadElem, quad_embeddings
from heegnerkit.starcong import (
    InsufficientPrecision,
    MultiplierOverflow,
    PrecisionLoss,
    UnsupportedPair,
    _w_series,
    bsd_preconditions,
    bsd_report_payload,
    congruence_report_payload,
    euler_factor,
    formal_log_series,
    log_omega,
    padic_payload,
    star_check,
    star_report_payload,
    twist_discriminant,
    verify_main_congruence,
)
from heegnerkit.twotors import HasRationalTwoTorsion

E37 = WeierstrassCurve.from_ainvs([0, 0, 1, -1, 0], label="37a1")
E11 = WeierstrassCurve.from_ainvs([0, -1, 1, -10, -20], label="11a1")
E43 = WeierstrassCurve.from_ainvs([0, 1, 1, 0, 0], label="43a1")
E197 = WeierstrassCurve.from_ainvs([0, 0, 1, -5, 4], label="197a1")

F = Fraction

# log series through t^9, index = exponent
LOG9 = {
    "37a1": [0, 1, 0, 0, F(1, 2), F(-2, 5), 0, F(6, 7), F(-3, 2), F(2, 3)],
    "11a1": [0, 1, 0, F(-1, 3), F(1, 2), F(-19, 5), -1, F(5, 7), F(-27, 2), F(691, 9)],
}


# ---------------------------------------------------------------------------
# formal logarithm series
# ---------------------------------------------------------------------------


def test_w_series_low_coefficients():
    # w = t^3 + a1 t^4 + (a1^2 + a2) t^5 + (a1^3 + 2 a1 a2 + a3) t^6 + ...
    assert _w_series((0, 0, 1, -1, 0), 8) == (0, 0, 0, 1, 0, 0, 1, -1)
    assert _w_series((0, -1, 1, -10, -20), 8) == (0, 0, 0, 1, 0, -1, 1, -9)


@pytest.mark.parametrize("e", [E37, E11])
def test_log_series_golden_degree9(e):
    series = formal_log_series(e, 9)
    assert series.order == 9
    assert list(series.coeffs.coeffs) == [F(c) for c in LOG9[e.label]]


@pytest.mark.parametrize("e", [E37, E11, E43, WeierstrassCurve.from_ainvs([1, -1, 1, -14, 29])])
def test_log_series_defining_identity(e):
    # the construction must satisfy s'(t) * (2y + a1 x + a3) = dx/dt, i.e.
    # s'(t) * (-2 + a1 t + a3 w) * w = w - t w' after clearing denominators
    order = 18
    a1, _, a3, _, _ = e.ainvs
    w = PowerSeries([F(c) for c in _w_series(e.ainvs, order)], order)
    s = formal_log_series(e, order).coeffs
    sprime = s.derivative()
    poly = PowerSeries([F(-2), F(a1)], order) + w.scale(F(a3))
    lhs = (sprime * poly * w).truncate(order - 3)
    wprime_t = PowerSeries([0] + [n * c for n, c in enumerate(w.coeffs)][1:], order)
    rhs = (w - wprime_t).truncate(order - 3)
    assert lhs == rhs


def test_log_series_leading_term_and_cache():
    s1 = formal_log_series(E43, 30)
    assert s1.coeffs[0] == 0 and s1.coeffs[1] == 1
    assert formal_log_series(E43, 30).coeffs is s1.coeffs  # cached
    with pytest.raises(ValueError):
        formal_log_series(E43, 1)


# ---------------------------------------------------------------------------
# p-adic logarithm at points
# ---------------------------------------------------------------------------


def test_log_multiplier_and_digits_37a1():
    p0 = E37.point(F(0), F(0))
    q = scalar_mul(5, p0)  # multiplier n0 = |E~ns(F_2)| * c_2 = 5
    assert (q.x, q.y) == (F(1, 4), F(-5, 8))
    assert -q.x / q.y == F(2, 5)
    val = log_omega(E37, p0, 2, None, 12)
    assert val.val == 1
    # exact-rational oracle of the partial sum / 5, mod 2^12
    assert val.residue_mod(12) == 1402
    # the unit rescaling by n0 = 5 carries the classical digit pattern
    assert (5 * val).residue_mod(10) == 2 + 2**5 + 2**6 + 2**8 + 2**9


def test_log_linearity_rational():
    rng = random.Random(11)
    p0 = E37.point(F(0), F(0))
    base = log_omega(E37, p0, 2, None, 14)
    for _ in range(4):
        a, b = rng.randint(1, 5), rng.randint(1, 5)
        combined = log_omega(E37, scalar_mul(a + b, p0), 2, None, 14)
        assert combined.congruent_mod((a + b) * base, 12)


def test_log_linearity_quadratic():
    x = QuadElem.of(-7, F(1, 2), F(-1, 2))
    y = QuadElem.of(-7, -2, -2)
    pt = E11.point(x, y)
    emb = quad_embeddings(-7, 2, 40)[0]
    one = log_omega(E11, pt, 2, emb, 14)
    three = log_omega(E11, scalar_mul(3, pt), 2, emb, 14)
    assert three.congruent_mod(3 * one, 12)


def test_log_multiplier_independence():
    p0 = E37.point(F(0), F(0))
    direct = log_omega(E37, p0, 2, None, 14)
    delayed = log_omega(E37, p0, 2, None, 14, min_doublings=2)
    assert direct.congruent_mod(delayed, 14)
    x = QuadElem.of(-7, F(1, 2), F(-1, 2))
    pt = E11.point(x, QuadElem.of(-7, -2, -2))
    emb = quad_embeddings(-7, 2, 40)[1]
    assert log_omega(E11, pt, 2, emb, 12).congruent_mod(
        log_omega(E11, pt, 2, emb, 12, min_doublings=1), 12
    )


def test_log_torsion_is_exact_zero():
    t5 = E11.point(F(5), F(5))  # 5-torsion
    assert scalar_mul(5, t5).infinity
    assert log_omega(E11, t5, 2, None, 10).is_exact_zero()
    assert log_omega(E11, E11.infinity(), 2, None, 10).is_exact_zero()


def test_log_embedding_covariance():
    x = QuadElem.of(-7, F(1, 2), F(-1, 2))
    y = QuadElem.of(-7, -2, -2)
    pt = E11.point(x, y)
    sigma_pt = E11.point(x.conjugate(), y.conjugate())
    e1, e2 = quad_embeddings(-7, 2, 40)
    lv = log_omega(E11, pt, 2, e1, 14)
    lv_sigma = log_omega(E11, sigma_pt, 2, e2, 14)
    assert lv.congruent_mod(lv_sigma, 14)
    assert lv.val == log_omega(E11, pt, 2, e2, 14).val == 1


def test_log_rejects_mismatched_inputs():
    p0 = E37.point(F(0), F(0))
    with pytest.raises(ValueError):
        log_omega(E11, p0, 2, None, 10)
    emb3 = quad_embeddings(-11, 3, 12)[0]
    with pytest.raises(ValueError):
        log_omega(E37, p0, 2, emb3, 10)
    x = QuadElem.of(-7, F(1, 2), F(-1, 2))
    pt = E11.point(x, QuadElem.of(-7, -2, -2))
    with pytest.raises(ValueError):
        log_omega(E11, pt, 2, None, 10)  # quadratic coords need an embedding


def test_log_multiplier_ladder_exhaustion():
    p0 = E37.point(F(0), F(0))
    with pytest.raises(MultiplierOverflow):
        log_omega(E37, p0, 2, None, 10, max_doublings=-1)


# ---------------------------------------------------------------------------
# the unit test
# ---------------------------------------------------------------------------


def test_star_37a1_holds():
    rep = star_check(E37, -7)
    assert rep.star_holds and rep.ns_count2 == 5
    assert rep.heegner_source == "computed"
    assert rep.normalized.val == 0
    # normalized = 5 * log / 2; frozen digit pattern of the unit
    assert rep.normalized.residue_mod(10) == 1 + 2**4 + 2**5 + 2**7 + 2**8


def test_star_11a1_holds():
    rep = star_check(E11, -7)
    assert rep.star_holds and rep.ns_count2 == 5
    assert rep.log_value.val == 1
    assert rep.precision >= 10


def test_star_197a1_fails():
    rep = star_check(E197, -7)
    assert not rep.star_holds
    assert rep.normalized.val == 1  # normalized value is 2 * unit


def test_star_sign_and_torsion_invariance():
    baseline = star_check(E11, -7)
    x = QuadElem.of(-7, F(1, 2), F(-1, 2))
    y = QuadElem.of(-7, -2, -2)
    pt = E11.point(x, y)
    tor = E11.point(QuadElem.of(-7, 5), QuadElem.of(-7, 5))
    moved = -pt + tor
    known = ((moved.x.u, moved.x.v), (moved.y.u, moved.y.v))
    shifted = star_check(E11, -7, known=known)
    assert shifted.heegner_source == "ingested"
    assert shifted.star_holds == baseline.star_holds
    assert shifted.normalized.val == baseline.normalized.val == 0


def test_star_preconditions():
    with pytest.raises(HasRationalTwoTorsion):
        star_check(WeierstrassCurve.from_ainvs([0, 0, 0, -1, 0]), -7)
    with pytest.raises(ValueError, match="not split"):
        star_check(E37, -11)  # Heegner hypothesis holds but 2 is inert
    with pytest.raises(ValueError, match="fails to split"):
        star_check(E11, -31)  # 2 splits for -31 but 11 is inert


# ---------------------------------------------------------------------------
# Euler factors and twist recognition
# ---------------------------------------------------------------------------


def test_euler_factor_values():
    f = euler_factor(E37, 2, 2, 12)
    assert f.val == -1 and f.congruent_mod(F(5, 2), 8)
    additive = euler_factor(quadratic_twist(E37, -11), 11, 2, 12)
    assert additive.congruent_mod(1, 10) and additive.val == 0
    good = euler_factor(E37, 11, 2, 12)  # |E(F_11)| = 17, an odd unit over 11
    assert good.val == 0 and good.congruent_mod(F(17, 11), 8)
    with pytest.raises(ValueError):
        euler_factor(E37, 10, 2)


def test_twist_discriminant_recovery():
    assert twist_discriminant(E37, E37) == 1
    ep = quadratic_twist(E37, -11)
    assert twist_discriminant(E37, ep) == -11
    assert twist_discriminant(ep, E37) == -11
    assert twist_discriminant(E37, quadratic_twist(E37, 5)) == 5
    assert twist_discriminant(E37, E11) is None
    assert twist_discriminant(E37, E43) is None


# ---------------------------------------------------------------------------
# main congruence
# ---------------------------------------------------------------------------


def test_congruence_identical_pair_exact():
    rep = verify_main_congruence(E37, E37, -7)
    assert rep.verdict and rep.matched_level == 37**2
    assert [ell for ell, _ in rep.euler_e] == [2]
    assert rep.lhs.congruent_mod(rep.rhs, 8)


def test_congruence_twist_minus11():
    ep = quadratic_twist(E37, -11)
    rep = verify_main_congruence(E37, ep, -7)
    assert rep.verdict
    assert rep.matched_level == 37**2
    assert [ell for ell, _ in rep.euler_e] == [2, 11]
    assert rep.lhs.val == 0 and rep.rhs.val == 0  # both sides odd units
    assert rep.precision >= 1


def test_congruence_twist_minus23_11a1():
    rep = verify_main_congruence(E11, quadratic_twist(E11, -23), -7)
    assert rep.verdict and rep.matched_level == 11**2
    assert rep.lhs.val == 0 and rep.rhs.val == 0


def test_congruence_unsupported_pairs():
    with pytest.raises(UnsupportedPair):
        verify_main_congruence(E37, E43, -7)
    ep = quadratic_twist(E37, -11)
    with pytest.raises(UnsupportedPair):
        verify_main_congruence(E37, ep, -7, m=2)
    with pytest.raises(UnsupportedPair):
        verify_main_congruence(E37, ep, -7, p=3)
    assert issubclass(InsufficientPrecision, ArithmeticError)
    assert issubclass(PrecisionLoss, ArithmeticError)


def test_congruence_identical_pair_odd_prime_high_m():
    # identical curves are certified at any (p, m); both sides agree exactly
    rep = verify_main_congruence(E37, E37, -11, p=3, m=2)
    assert rep.verdict
    rep = verify_main_congruence(E37, E37, -7, m=6, certified_pair=True)
    assert rep.verdict


def test_congruence_rejects_bad_field():
    with pytest.raises(ValueError):
        verify_main_congruence(E37, E37, -3)  # 37 does not split in Q(sqrt(-3))


# ---------------------------------------------------------------------------
# descent parity bookkeeping
# ---------------------------------------------------------------------------


def test_bsd_preconditions_37a1():
    rep = bsd_preconditions(E37, -7)
    assert rep.tamagawa == ((37, 1),)
    assert rep.c2_odd and dict(rep.conclusions)["two_part_bookkeeping_applicable"]
    assert rep.chi_d_minus_n == 1  # d = 1


def test_bsd_preconditions_88a1_even_c2():
    e88 = WeierstrassCurve.from_ainvs([0, 0, 0, -4, 4], label="88a1")
    rep = bsd_preconditions(e88, -7)
    assert dict(rep.tamagawa)[2] == 4
    assert not rep.c2_odd
    conc = dict(rep.conclusions)
    assert not conc["two_part_bookkeeping_applicable"]
    assert conc["unit_test_pipeline_usable"]  # the unit test is unaffected


def test_bsd_preconditions_twist():
    rep = bsd_preconditions(E37, -7, d=-11)
    assert rep.curve == quadratic_twist(E37, -11)
    assert sorted(dict(rep.tamagawa)) == [11, 37]
    assert all(odd for _, odd in rep.tamagawa_parities)
    assert rep.chi_d_minus_n == -1
    with pytest.raises(ValueError):
        bsd_preconditions(E37, -7, d=-10)
    with pytest.raises(ValueError):
        bsd_preconditions(E37, -7, d=3)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_padic_payload():
    x = PadicNumber.from_rational(F(5, 2), 2, 4)
    assert padic_payload(x) == {
        "p": 2,
        "valuation": -1,
        "unit_digits": [1, 0, 1, 0],
        "precision": 4,
    }
    assert padic_payload(PadicNumber.zero(2)) == {"p": 2, "exact_zero": True}
    cut = PadicNumber(2, 7, 0, 0)
    assert padic_payload(cut) == {"p": 2, "valuation_at_least": 7, "precision": 0}


def test_report_payloads_are_json_ready():
    import json

    rep = star_check(E37, -7)
    blob = json.dumps(star_report_payload(rep))
    assert '"star_holds": true' in blob
    cong = verify_main_congruence(E37, E37, -7)
    blob = json.dumps(congruence_report_payload(cong))
    assert '"verdict": true' in blob and '"matched_level": 1369' in blob
    pre = bsd_preconditions(E37, -7, d=-11)
    blob = json.dumps(bsd_report_payload(pre))
    assert '"chi_d_minus_N": -1' in blob
