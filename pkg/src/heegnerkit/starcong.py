"""Formal-group logarithms and the 2-adic unit test for Heegner points.

The formal logarithm of a Weierstrass curve is expanded in t = -x/y by
recursive inversion of the curve equation.  Evaluating it p-adically at an
algebraic point runs through a multiplier that pushes the point into the
formal group, with explicit tail bounds so every returned digit is certified.
On top of that sit the unit test for |E~ns(F_2)| * log(P) / 2, per-prime
Euler factors |E~ns(F_l)| / l, the congruence comparing that normalized value
across a curve and its quadratic twist, and the parity bookkeeping (Tamagawa
numbers, Manin constant, twist character) that a 2-part descent consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .arith import factorize, is_prime, is_squarefree, kronecker, valuation
from .ellcurve import (
    CurvePoint,
    WeierstrassCurve,
    nonsingular_count,
    quadratic_twist,
    scalar_mul,
    tate_algorithm,
)
from .exactnum import (
    PadicNumber,
    PowerSeries,
    PrecisionError,
    QuadElem,
    QuadEmbedding,
    quad_embeddings,
)
from .heegner import HeegnerPointResult, heegner_point
from .twotors import analyze_two_torsion, heegner_hypothesis, two_splits

__all__ = [
    "FormalLogSeries",
    "StarReport",
    "CongruenceReport",
    "BSDPreconditionReport",
    "MultiplierOverflow",
    "PrecisionLoss",
    "InsufficientPrecision",
    "UnsupportedPair",
    "formal_log_series",
    "log_omega",
    "star_check",
    "euler_factor",
    "verify_main_congruence",
    "bsd_preconditions",
    "twist_discriminant",
    "padic_payload",
]

MAX_TORSION_ORDER = 24  # torsion over a quadratic field has order at most 24


class MultiplierOverflow(ArithmeticError):
    """No multiplier in the doubling ladder landed in the formal group."""


class PrecisionLoss(ArithmeticError):
    """The logarithm came back with fewer certified digits than requested."""


class InsufficientPrecision(ArithmeticError):
    """A congruence could not be decided at the requested modulus."""


class UnsupportedPair(ValueError):
    """The residual-representation hypothesis is not certified for the pair."""


# ---------------------------------------------------------------------------
# formal logarithm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FormalLogSeries:
    """log(t) = t + c2 t^2 + ... + c_B t^B for the invariant differential.

    coeffs is the truncated series in t = -x/y (constant term 0, coefficient
    of t equal to 1); order is the last retained exponent B.
    """

    curve: WeierstrassCurve
    coeffs: PowerSeries
    order: int

    def __call__(self, t):
        return self.coeffs.evaluate(t)


@lru_cache(maxsize=32)
def _w_series(ainvs: tuple[int, int, int, int, int], length: int) -> tuple[int, ...]:
    """Integer coefficients of w = -1/y as a series in t = -x/y.

    w satisfies w = t^3 + a1 t w + a2 t^2 w + a3 w^2 + a4 t w^2 + a6 w^3,
    which determines each coefficient from strictly earlier ones because
    w has valuation 3.
    """
    a1, a2, a3, a4, a6 = ainvs
    w = [0] * length
    sq = [0] * length  # running coefficients of w^2
    cb = [0] * length  # running coefficients of w^3
    if length > 3:
        w[3] = 1
    for n in range(4, length):
        # w^2 and w^3 at index n only involve w[i] with i <= n - 3
        sq[n] = sum(w[i] * w[n - i] for i in range(3, n - 2))
        cb[n] = sum(w[i] * sq[n - i] for i in range(3, n - 5))
        w[n] = a1 * w[n - 1] + a2 * w[n - 2] + a3 * sq[n] + a4 * sq[n - 1] + a6 * cb[n]
    return tuple(w)


def _shift(s: PowerSeries, k: int) -> PowerSeries:
    return PowerSeries([Fraction(0)] * k + list(s.coeffs), s.order)


@lru_cache(maxsize=32)
def _log_series_cached(ainvs: tuple[int, int, int, int, int], b: int) -> PowerSeries:
    a1, _, a3, _, _ = ainvs
    w = _w_series(ainvs, b + 3)
    cap = [Fraction(w[j + 3]) for j in range(b)]  # W = w / t^3, a unit series
    big_w = PowerSeries(cap, b)
    # omega / dt = (w - t w') / (w (-2 + a1 t + a3 w)); dividing out t^3 gives
    # numerator coefficients -(j + 2) W_j and the unit denominator below
    num = PowerSeries([-(j + 2) * c for j, c in enumerate(cap)], b)
    den = big_w.scale(Fraction(-2))
    if a1:
        den = den + _shift(big_w, 1).scale(Fraction(a1))
    if a3:
        den = den + _shift(big_w * big_w, 3).scale(Fraction(a3))
    series = (num * den.inverse()).integrate()
    assert series.coeffs[0] == 0 and series.coeffs[1] == 1
    return series


def formal_log_series(e: WeierstrassCurve, b: int) -> FormalLogSeries:
    """Logarithm of the formal group in t = -x/y, kept to order t^b."""
    if b < 2:
        raise ValueError("series order must be at least 2")
    return FormalLogSeries(e, _log_series_cached(e.ainvs, b), b)


# ---------------------------------------------------------------------------
# p-adic evaluation at algebraic points
# ---------------------------------------------------------------------------


def _embedding_at(embedding: QuadEmbedding, prec: int) -> QuadEmbedding:
    """The same embedding, rebuilt with at least prec digits on sqrt(D)."""
    if embedding.prec >= prec:
        return embedding
    k = 2 if embedding.p == 2 else 1  # the two roots differ mod p^k
    if embedding.prec < k:
        raise ValueError("embedding carries too few digits to identify its root")
    target = embedding.sqrtD.residue_mod(k)
    for cand in quad_embeddings(embedding.D, embedding.p, prec):
        if cand.sqrtD.residue_mod(k) == target:
            return cand
    raise AssertionError("refined embedding lost track of the chosen root")


def _embed_coord(z, embedding: QuadEmbedding | None, p: int, prec: int) -> PadicNumber:
    if isinstance(z, QuadElem):
        if z.is_rational():
            z = z.u
        elif embedding is None:
            raise ValueError("quadratic coordinates need an explicit embedding")
        else:
            return _embedding_at(embedding, prec)(z)
    return PadicNumber.from_rational(z, p, prec)


def _is_torsion(pt: CurvePoint) -> bool:
    q = pt
    for _ in range(MAX_TORSION_ORDER):
        if q.infinity:
            return True
        q = q + pt
    return False


def log_omega(
    e: WeierstrassCurve,
    pt: CurvePoint,
    p: int,
    embedding: QuadEmbedding | None = None,
    prec: int = 20,
    max_doublings: int = 12,
    min_doublings: int = 0,
) -> PadicNumber:
    """p-adic logarithm of pt for the minimal invariant differential.

    Extends the formal-group logarithm by linearity: the smallest multiplier
    n = n0 * 2^k with n0 = |E~ns(F_p)| * c_p puts n*pt into the formal group
    (t-valuation >= 1 under the embedding), the series is evaluated there
    with a certified tail bound, and the result is divided by n.  Torsion
    points give the exact zero.  min_doublings skips the smallest multipliers,
    which must not change the answer.
    """
    if pt.curve != e:
        raise ValueError("point does not live on the given curve")
    if pt.infinity:
        return PadicNumber.zero(p)
    if embedding is not None and embedding.p != p:
        raise ValueError("embedding is for a different prime")

    red = tate_algorithm(e, p)
    n0 = red.nsCount * red.tamagawa
    base = scalar_mul(n0 << min_doublings, pt)
    nt = None
    for k in range(min_doublings, max_doublings + 1):
        n = n0 << k
        if base.infinity:
            return PadicNumber.zero(p)  # pt is torsion of order dividing n
        t_exact = -(base.x / base.y)
        probe = _embed_coord(t_exact, embedding, p, 8)
        if probe.valuation_is_exact and probe.val >= 1:
            nt = (n, t_exact)
            break
        base = base + base
    if nt is None:
        raise MultiplierOverflow(
            f"no multiple up to {n0}*2^{max_doublings} entered the formal group"
        )
    n, t_exact = nt

    # work digits on every term; B large enough that the series tail is
    # provably below the retained precision (each tail term t^k / k has
    # valuation >= v + (k - 1) - log_p k for v = v_p(t) >= 1)
    work = prec + 8
    b = work + (work + 16).bit_length() + 6
    # every operand carries a uniform absolute precision: coefficient
    # denominators reach valuation -log_p(b) and Horner cancellations must
    # not clamp the known modulus below v + work
    eval_prec = work + 2 * (b + 2).bit_length() + 12
    tp = _embed_coord(t_exact, embedding, p, eval_prec)
    series = formal_log_series(e, b)
    coeffs = [
        PadicNumber.from_rational(c, p, eval_prec) if c else None
        for c in series.coeffs.coeffs
    ]
    total = PadicNumber.zero(p)
    for c in reversed(coeffs):
        total = total * tp
        if c is not None:
            total = total + c
    tail_known = tp.val + b - (b + 1).bit_length()
    if not total.is_exact_zero() and total.known_mod > tail_known:
        total = PadicNumber.make(p, total.val, total.unit, tail_known - total.val)
    value = total / n
    if value.is_exact_zero() or value.prec < prec:
        if _is_torsion(pt):
            return PadicNumber.zero(p)
        raise PrecisionLoss(
            f"requested {prec} digits, certified {0 if value.is_exact_zero() else value.prec}"
        )
    return value


# ---------------------------------------------------------------------------
# the unit test for the normalized logarithm
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StarReport:
    """Verdict on whether |E~ns(F_2)| * log(P) / 2 is a 2-adic unit."""

    curve: WeierstrassCurve
    d_k: int
    heegner_source: str
    ns_count2: int
    log_value: PadicNumber
    normalized: PadicNumber
    star_holds: bool
    precision: int


def star_check(
    e: WeierstrassCurve,
    d_k: int,
    prec: int = 12,
    digits: int = 64,
    height_bound: int = 10**80,
    cap: int | None = None,
    known=None,
) -> StarReport:
    """Compute the Heegner point for (e, d_k) and test the unit condition.

    Requires trivial rational 2-torsion, the Heegner hypothesis for the
    conductor, and 2 split in Q(sqrt(d_k)).  known hands in a certified
    point and skips the complex-analytic computation.
    """
    analyze_two_torsion(e)
    n = e.conductor
    if not heegner_hypothesis(d_k, n):
        raise ValueError(f"a prime of N={n} fails to split for d_K={d_k}")
    if not two_splits(d_k):
        raise ValueError(f"2 is not split for d_K={d_k}")
    kwargs = {"digits": digits, "height_bound": height_bound, "known": known}
    if cap is not None:
        kwargs["cap"] = cap
    result: HeegnerPointResult = heegner_point(e, d_k, **kwargs)
    ns2 = nonsingular_count(e, 2)
    embedding = quad_embeddings(d_k, 2, prec + 8)[0]
    log_value = log_omega(e, result.point, 2, embedding, prec)
    normalized = log_value * ns2 / 2
    if normalized.is_exact_zero():
        star_holds = False
        precision = prec
    else:
        star_holds = normalized.val == 0
        precision = normalized.prec
    return StarReport(
        curve=e,
        d_k=d_k,
        heegner_source=result.provenance,
        ns_count2=ns2,
        log_value=log_value,
        normalized=normalized,
        star_holds=star_holds,
        precision=precision,
    )


# ---------------------------------------------------------------------------
# Euler factors and the two-sided congruence
# ---------------------------------------------------------------------------


def euler_factor(e: WeierstrassCurve, ell: int, p: int, prec: int = 20) -> PadicNumber:
    """|E~ns(F_ell)| / ell as a p-adic number (1 at additive primes)."""
    if not is_prime(ell):
        raise ValueError(f"{ell} is not prime")
    return PadicNumber.from_rational(
        Fraction(nonsingular_count(e, ell), ell), p, prec
    )


def _a_ell_any(e: WeierstrassCurve, ell: int) -> int:
    """Frobenius trace, with the standard values at bad primes."""
    red = tate_algorithm(e, ell)
    if red.kind == "good":
        return ell + 1 - red.nsCount
    return {"split multiplicative": 1, "nonsplit multiplicative": -1, "additive": 0}[
        red.kind
    ]


def twist_discriminant(e: WeierstrassCurve, ep: WeierstrassCurve) -> int | None:
    """Squarefree d with ep the minimal quadratic twist of e by d, else None."""
    if e == ep:
        return 1
    if e.c4 == 0 or e.c6 == 0 or ep.c4 == 0 or ep.c6 == 0:
        return None  # extra automorphisms; quadratic twists do not determine d
    # across minimal models the c-invariant ratio is d / u^2 with d squarefree,
    # so d is the squarefree kernel (sign included) of numerator * denominator
    ratio = Fraction(ep.c6 * e.c4, e.c6 * ep.c4)
    if ratio == 0:
        return None
    prod = ratio.numerator * ratio.denominator
    d = -1 if prod < 0 else 1
    for q, exp in factorize(prod).items():
        if exp % 2:
            d *= q
    if d not in (0, 1) and quadratic_twist(e, d) == ep:
        return d
    return None


@dataclass(frozen=True)
class CongruenceReport:
    """Both sides of the normalized-logarithm congruence modulo p^m.

    matched_level is the part M of N * N' supported on primes where the two
    Frobenius traces already agree mod p^m; the Euler products run over the
    primes of p * N * N' / M.  verdict means lhs = +-rhs mod p^m.
    """

    e: WeierstrassCurve
    ep: WeierstrassCurve
    d_k: int
    p: int
    m: int
    matched_level: int
    euler_e: tuple[tuple[int, PadicNumber], ...]
    euler_ep: tuple[tuple[int, PadicNumber], ...]
    lhs: PadicNumber
    rhs: PadicNumber
    verdict: bool
    precision: int


def verify_main_congruence(
    e: WeierstrassCurve,
    ep: WeierstrassCurve,
    d_k: int,
    p: int = 2,
    m: int = 1,
    digits: int = 64,
    height_bound: int = 10**80,
    cap: int | None = None,
    known_e=None,
    known_ep=None,
    certified_pair: bool = False,
) -> CongruenceReport:
    """Check the congruence between normalized Heegner logarithms of e and ep.

    The pair must have congruent semisimplified p^m-torsion.  That holds
    automatically for a quadratic-twist pair at p = 2, m = 1, which is the
    certified regime; any other pair (or higher m) requires certified_pair,
    an explicit assertion by the caller.
    """
    if not certified_pair:
        d_tw = twist_discriminant(e, ep)
        if d_tw is None:
            raise UnsupportedPair(
                "curves are not quadratic twists; pass certified_pair=True only "
                "with an externally certified torsion isomorphism"
            )
        if d_tw != 1 and (p != 2 or m > 1):
            raise UnsupportedPair(
                "only p=2, m=1 is certified for twist pairs (torsion above "
                "level 2 is not twist-invariant)"
            )
    n_e, n_ep = e.conductor, ep.conductor
    for cond in (n_e, n_ep):
        if not heegner_hypothesis(d_k, cond):
            raise ValueError(f"Heegner hypothesis fails for N={cond}, d_K={d_k}")

    pm = p**m
    matched = 1
    for ell in factorize(gcd(n_e, n_ep)):
        if (_a_ell_any(e, ell) - _a_ell_any(ep, ell)) % pm == 0:
            matched *= ell ** (valuation(n_e, ell) + valuation(n_ep, ell))
    euler_primes = sorted(factorize(p * n_e * n_ep // matched))

    # precision: the congruence is read off known_mod >= m, and the Euler
    # factors can push valuations below zero by v_p(ell-part)
    neg = sum(valuation(ell, p) for ell in euler_primes)
    prec = m + 2 * neg + 8
    kw_e = {"digits": digits, "height_bound": height_bound, "known": known_e}
    kw_ep = {"digits": digits, "height_bound": height_bound, "known": known_ep}
    if cap is not None:
        kw_e["cap"] = kw_ep["cap"] = cap
    pt_e = heegner_point(e, d_k, **kw_e).point
    pt_ep = heegner_point(ep, d_k, **kw_ep).point
    embedding = quad_embeddings(d_k, p, prec + 8)[0]
    log_e = log_omega(e, pt_e, p, embedding, prec)
    log_ep = log_omega(ep, pt_ep, p, embedding, prec)

    euler_e = tuple((ell, euler_factor(e, ell, p, prec)) for ell in euler_primes)
    euler_ep = tuple((ell, euler_factor(ep, ell, p, prec)) for ell in euler_primes)
    lhs, rhs = log_e, log_ep
    for _, f in euler_e:
        lhs = lhs * f
    for _, f in euler_ep:
        rhs = rhs * f
    try:
        verdict = lhs.congruent_mod(rhs, m) or lhs.congruent_mod(-rhs, m)
    except PrecisionError as exc:
        raise InsufficientPrecision(str(exc)) from exc
    precision = min(
        x.prec for x in (lhs, rhs) if not x.is_exact_zero()
    ) if not (lhs.is_exact_zero() and rhs.is_exact_zero()) else prec
    return CongruenceReport(
        e=e,
        ep=ep,
        d_k=d_k,
        p=p,
        m=m,
        matched_level=matched,
        euler_e=euler_e,
        euler_ep=euler_ep,
        lhs=lhs,
        rhs=rhs,
        verdict=verdict,
        precision=precision,
    )


# ---------------------------------------------------------------------------
# parity bookkeeping for the 2-part of the leading coefficient
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BSDPreconditionReport:
    """Computed parity hypotheses for 2-part descent bookkeeping.

    Covers the curve itself (d = 1) or its quadratic twist by d.  conclusions
    only ever asserts predicates that were actually computed; the Manin
    parity is an assumption recorded as such, never verified here.
    """

    curve: WeierstrassCurve
    d: int
    tamagawa: tuple[tuple[int, int], ...]  # (ell, c_ell) over bad primes
    tamagawa_parities: tuple[tuple[int, bool], ...]  # (ell, c_ell odd)
    c2_odd: bool
    manin_odd_assumed: bool
    disc_sign: int
    chi_d_minus_n: int
    conclusions: tuple[tuple[str, bool], ...]


def bsd_preconditions(
    e: WeierstrassCurve, d_k: int, d: int = 1, manin_odd: bool = True
) -> BSDPreconditionReport:
    """Check every computable parity hypothesis on e or its twist by d.

    Tamagawa numbers come from local reduction data of the actual twist.
    The twist character value chi_d(-N) separates the expected-rank-0 and
    expected-rank-1 sides; d = 1 reports on e itself.
    """
    if d == 1:
        target = quadratic_twist(e, 1)
    else:
        if not is_squarefree(d) or d % 4 != 1 or gcd(d, 2 * e.conductor) != 1:
            raise ValueError(
                "twist parameter must be 1 or a squarefree d = 1 mod 4 coprime to 2N"
            )
        target = quadratic_twist(e, d)
    tam = tuple(
        (ell, tate_algorithm(target, ell).tamagawa)
        for ell in sorted(factorize(target.conductor))
    )
    parities = tuple((ell, c % 2 == 1) for ell, c in tam)
    c2 = next((c for ell, c in tam if ell == 2), 1)
    c2_odd = c2 % 2 == 1
    all_odd = all(odd for _, odd in parities)
    chi = kronecker(d, -e.conductor)
    conclusions = (
        ("all_tamagawa_odd", all_odd),
        ("c2_odd", c2_odd),
        ("manin_odd_assumed", manin_odd),
        ("two_part_bookkeeping_applicable", all_odd and c2_odd and manin_odd),
        ("unit_test_pipeline_usable", two_splits(d_k)),
    )
    return BSDPreconditionReport(
        curve=target,
        d=d,
        tamagawa=tam,
        tamagawa_parities=parities,
        c2_odd=c2_odd,
        manin_odd_assumed=manin_odd,
        disc_sign=1 if target.disc > 0 else -1,
        chi_d_minus_n=chi,
        conclusions=conclusions,
    )


# ---------------------------------------------------------------------------
# JSON payloads
# ---------------------------------------------------------------------------


def padic_payload(x: PadicNumber) -> dict:
    """JSON-ready view: valuation, base-p digits of the unit, digit count."""
    if x.is_exact_zero():
        return {"p": x.p, "exact_zero": True}
    if x.prec == 0:
        return {"p": x.p, "valuation_at_least": x.val, "precision": 0}
    u = x.unit
    digits = []
    for _ in range(x.prec):
        digits.append(u % x.p)
        u //= x.p
    return {"p": x.p, "valuation": x.val, "unit_digits": digits, "precision": x.prec}


def star_report_payload(r: StarReport) -> dict:
    return {
        "curve": r.curve.label or str(list(r.curve.ainvs)),
        "ainvs": list(r.curve.ainvs),
        "d_K": r.d_k,
        "heegner_source": r.heegner_source,
        "ns_count_2": r.ns_count2,
        "log_value": padic_payload(r.log_value),
        "normalized": padic_payload(r.normalized),
        "star_holds": r.star_holds,
        "precision": r.precision,
    }


def congruence_report_payload(r: CongruenceReport) -> dict:
    return {
        "curve": r.e.label or str(list(r.e.ainvs)),
        "twin": r.ep.label or str(list(r.ep.ainvs)),
        "d_K": r.d_k,
        "p": r.p,
        "m": r.m,
        "matched_level": r.matched_level,
        "euler_factors": {
            "left": [[ell, padic_payload(f)] for ell, f in r.euler_e],
            "right": [[ell, padic_payload(f)] for ell, f in r.euler_ep],
        },
        "lhs": padic_payload(r.lhs),
        "rhs": padic_payload(r.rhs),
        "verdict": r.verdict,
        "precision": r.precision,
    }


def bsd_report_payload(r: BSDPreconditionReport) -> dict:
    return {
        "curve": r.curve.label or str(list(r.curve.ainvs)),
        "twist": r.d,
        "tamagawa": {str(ell): c for ell, c in r.tamagawa},
        "tamagawa_parities": {str(ell): odd for ell, odd in r.tamagawa_parities},
        "c2_odd": r.c2_odd,
        "manin_odd_assumed": r.manin_odd_assumed,
        "disc_sign": r.disc_sign,
        "chi_d_minus_N": r.chi_d_minus_n,
        "conclusions": dict(r.conclusions),
    }
