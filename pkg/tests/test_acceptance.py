"""End-to-end acceptance gate: one test per numbered criterion.

Each test recomputes its target live and asserts both the frozen expected
values and the stated runtime budget.  The table-reproduction criterion runs
the conductor <= 150 subsets by default (the 15-minute gate); set
HEEGNERKIT_ACCEPTANCE_FULL=1 to run the complete tables (a batch job with a
2-hour budget).  Expected verdicts, checkmark counts, digit patterns, and
twist lists are frozen here on purpose: this file is the record of what the
package must reproduce, so it never derives an expectation from the code
under test.
"""

import os
import random
import time
from contextlib import contextmanager
from fractions import Fraction

from heegnerkit.arith import is_prime, kronecker
from heegnerkit.ellcurve import (
    WeierstrassCurve,
    quadratic_twist,
    scalar_mul,
    tate_algorithm,
)
from heegnerkit.exactnum import QuadElem, quad_embeddings
from heegnerkit.harness import (
    goldfeld_count,
    golden_table,
    load_dataset,
    reproduce_table,
)
from heegnerkit.qexp import (
    anlist,
    deplete,
    qexp_congruent,
    stabilization_roots,
    stabilize,
    theta,
    theta_inverse_depleted,
)
from heegnerkit.starcong import (
    formal_log_series,
    log_omega,
    star_check,
    verify_main_congruence,
)
from heegnerkit.twotors import enumerate_twists, twist_prime_density

F = Fraction

E37 = WeierstrassCurve.from_ainvs([0, 0, 1, -1, 0], label="37a1")
E11 = WeierstrassCurve.from_ainvs([0, -1, 1, -10, -20], label="11a1")
E197 = WeierstrassCurve.from_ainvs([0, 0, 1, -5, 4], label="197a1")

RUN_FULL_TABLES = os.environ.get("HEEGNERKIT_ACCEPTANCE_FULL") == "1"

# frozen formal-log expansions through t^9, index = exponent
LOG9 = {
    "37a1": [0, 1, 0, 0, F(1, 2), F(-2, 5), 0, F(6, 7), F(-3, 2), F(2, 3)],
    "11a1": [0, 1, 0, F(-1, 3), F(1, 2), F(-19, 5), -1, F(5, 7), F(-27, 2), F(691, 9)],
}

# frozen twist-discriminant lists (increasing |d|)
TWISTS_37 = [-11, 53, -71, -127, 149, 197, -211, -263, 337, -359, 373, -379,
             -443, -571, -599, 613]
TWISTS_11 = [-23, 37, -67, -71, 113, 137, -179, -191, 317, -331, -379, 389,
             -443, 449, -463, -487, -631]


@contextmanager
def _budget(seconds: float):
    t0 = time.monotonic()
    yield
    elapsed = time.monotonic() - t0
    assert elapsed <= seconds, f"ran {elapsed:.1f}s, budget {seconds:.0f}s"


def test_criterion_01_formal_log_golden_series():
    with _budget(1.0):
        for e in (E37, E11):
            series = formal_log_series(e, 9)
            assert list(series.coeffs.coeffs) == [F(c) for c in LOG9[e.label]]


def test_criterion_02_heegner_log_digit_pattern():
    with _budget(1.0):
        p0 = E37.point(F(0), F(0))
        q = scalar_mul(5, p0)
        assert (q.x, q.y) == (F(1, 4), F(-5, 8))
        assert -q.x / q.y == F(2, 5)
        val = log_omega(E37, p0, 2, None, 12)
        # the printed pattern is 5 * log; matching it after the unit rescale
        # by n0 = 5 pins the value up to a 2-adic unit and sign
        assert val.val == 1
        assert (5 * val).residue_mod(10) == 2 + 2**5 + 2**6 + 2**8 + 2**9


def test_criterion_03_star_verdicts():
    with _budget(600.0):
        assert star_check(E37, -7).star_holds
        assert star_check(E11, -7).star_holds
        assert not star_check(E197, -7).star_holds


def test_criterion_04_table_reproduction():
    if RUN_FULL_TABLES:
        with _budget(7200.0):
            r1 = reproduce_table(1)
            r2 = reproduce_table(2)
        assert r1.all_agree, [d for d in r1.diffs]
        assert r2.all_agree, [d for d in r2.diffs]
        assert (r1.checkmarks_computed, len(r1.rows)) == (31, 38)
        assert (r2.checkmarks_computed, len(r2.rows)) == (28, 39)
        return
    # default gate: the conductor <= 150 subsets in 15 minutes
    with _budget(900.0):
        r1 = reproduce_table(1, max_conductor=150)
        r2 = reproduce_table(2, max_conductor=150)
    assert r1.all_agree, [d for d in r1.diffs]
    assert r2.all_agree, [d for d in r2.diffs]
    assert (r1.checkmarks_computed, len(r1.rows)) == (14, 14)
    assert (r2.checkmarks_computed, len(r2.rows)) == (5, 7)
    # the subsets restrict the frozen full-table counts 31/38 and 28/39
    t1, t2 = golden_table(1), golden_table(2)
    assert (sum(star for *_, star in t1), len(t1)) == (31, 38)
    assert (sum(star for *_, star in t2), len(t2)) == (28, 39)


def test_criterion_05_main_congruence_first_twists():
    for e, ds in ((E11, TWISTS_11[:5]), (E37, TWISTS_37[:5])):
        for d in ds:
            with _budget(1800.0):  # per twist
                ep = quadratic_twist(e, d)
                rep = verify_main_congruence(e, ep, -7, cap=3 * 10**7)
            assert rep.verdict, (e.label, d)
            # both normalized sides are odd units
            assert rep.lhs.val == 0 and rep.rhs.val == 0, (e.label, d)


def test_criterion_06_signed_prime_lists():
    with _budget(5.0):
        got37 = enumerate_twists(E37, -7, 650).discs
        assert list(got37[:16]) == TWISTS_37
        got11 = enumerate_twists(E11, -7, 650).discs
        assert list(got11[:17]) == TWISTS_11


def test_criterion_07_split_prime_density():
    with _budget(30.0):
        rep = twist_prime_density(E37, -7, bound=100_000)
    assert rep.expected == F(1, 6)
    assert abs(rep.frequency - 1 / 6) <= 0.02


def test_criterion_08_operator_calculus():
    with _budget(10.0):
        f = anlist(E37, 500)
        # a_5(37a1) = -2 is a 5-adic unit, so the 5-stabilizations exist
        alpha, beta = stabilization_roots(-2, 5)
        plus = stabilize(f, 5, "+", root_choice=(alpha, beta))
        assert plus.coeffs[5].congruent_mod(alpha, 20)
        zero = stabilize(f, 5, "0")
        assert all(zero.coeffs[5 * j] == 0 for j in range(1, 101))
        # theta then theta-inverse is the identity on 2-depleted series
        dep = deplete(f, 2)
        roundtrip = theta(theta_inverse_depleted(dep))
        ok, first_bad = qexp_congruent(roundtrip, dep, 2, 20, 500)
        assert ok, f"theta roundtrip differs first at q^{first_bad}"
        # mod-2 congruence with the -11 twist after clearing Euler factors:
        # stabilize each form at the primes of 2 * 37^2 * 11^2 / level
        ep = quadratic_twist(E37, -11)  # conductor 37 * 11^2
        g = anlist(ep, 500)
        f_stab = stabilize(stabilize(stabilize(f, 2, "0"), 37, "0"), 11, "0")
        g_stab = stabilize(stabilize(g, 2, "0"), 37, "0")
        ok, first_bad = qexp_congruent(f_stab, g_stab, 2, 1, 500)
        assert ok, f"congruence fails first at q^{first_bad}"


def test_criterion_09_tamagawa_cross_check():
    with _budget(10.0):
        index = {r.label: r for r in load_dataset()}
        spot = {"88a1": 4, "92b1": 3, "44a1": 3}
        for label, c2 in spot.items():
            assert tate_algorithm(index[label].curve, 2).tamagawa == c2
        for which in (1, 2):
            for label, _, c2, _ in golden_table(which):
                got = tate_algorithm(index[label].curve, 2).tamagawa
                assert got == c2, (label, got, c2)


def _random_nontorsion_origin(rng: random.Random):
    while True:
        a1 = rng.randint(0, 1)
        a2 = rng.randint(-1, 1)
        a4 = rng.randint(-10, 10)
        try:
            e = WeierstrassCurve.from_ainvs([a1, a2, 1, a4, 0])
        except ValueError:
            continue  # singular
        if e.ainvs[4] != 0:
            continue  # minimal model moved the origin off the curve
        p0 = e.point(F(0), F(0))
        q, torsion = p0, False
        for _ in range(12):
            q = q + p0
            if q.infinity:
                torsion = True
                break
        if not torsion:
            return e, p0


def test_criterion_10_property_suites():
    with _budget(120.0):
        rng = random.Random(2026)
        # formal-log homomorphism: log(aP) + log(bP) = log((a+b)P), each side
        # evaluated through an independent ladder into the formal group
        for _ in range(100):
            e, p0 = _random_nontorsion_origin(rng)
            a, b = rng.randint(1, 5), rng.randint(1, 5)
            la = log_omega(e, scalar_mul(a, p0), 2, None, 12)
            lb = log_omega(e, scalar_mul(b, p0), 2, None, 12)
            lab = log_omega(e, scalar_mul(a + b, p0), 2, None, 12)
            assert lab.congruent_mod(la + lb, 10)
        # multiplier independence of the ladder
        p0 = E37.point(F(0), F(0))
        assert log_omega(E37, p0, 2, None, 14).congruent_mod(
            log_omega(E37, p0, 2, None, 14, min_doublings=2), 14
        )
        x = QuadElem.of(-7, F(1, 2), F(-1, 2))
        y = QuadElem.of(-7, -2, -2)
        pt = E11.point(x, y)
        emb = quad_embeddings(-7, 2, 40)[0]
        assert log_omega(E11, pt, 2, emb, 12).congruent_mod(
            log_omega(E11, pt, 2, emb, 12, min_doublings=1), 12
        )
        # the unit verdict ignores the sign and torsion ambiguity of the point
        known = ((x.u, x.v), (y.u, y.v))
        baseline = star_check(E11, -7, known=known)
        tor = E11.point(QuadElem.of(-7, 5), QuadElem.of(-7, 5))
        moved = -E11.point(x, y) + tor
        shifted = star_check(
            E11, -7, known=((moved.x.u, moved.x.v), (moved.y.u, moved.y.v))
        )
        assert shifted.star_holds == baseline.star_holds
        assert shifted.normalized.val == baseline.normalized.val
        # twist-coefficient identity a_ell(E^(d)) = chi_d(ell) a_ell(E)
        for e, d in ((E37, -11), (E11, -23), (E37, 53)):
            ae = anlist(e, 1000).a
            at = anlist(quadratic_twist(e, d), 1000).a
            for ell in range(2, 1001):
                if not is_prime(ell) or (2 * e.conductor * d) % ell == 0:
                    continue
                assert at[ell] == kronecker(d, ell) * ae[ell], (e.label, d, ell)


def test_headline_count_growth():
    # the twist-count growth fit stays within 10% on the upper half of the
    # X grid up to 10^6 (count ~ constant * X / log^(1-alpha) X)
    with _budget(300.0):
        gc = goldfeld_count(E37, -7, 10**6)
    assert gc.alpha == F(1, 6)
    assert gc.mode == "certified"
    assert gc.max_rel_deviation <= 0.10, gc.max_rel_deviation
