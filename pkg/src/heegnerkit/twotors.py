"""Galois analysis of the 2-division field and twist-set combinatorics.

The 2-division cubic 4x^3 + b2 x^2 + 2 b4 x + b6 has the x-coordinates of
the nontrivial 2-torsion as roots; its discriminant is 16 disc(E).  When it
is irreducible over Q (no rational 2-torsion) the splitting field has
Galois group S3, or C3 exactly when disc(E) is a rational square.

A prime ell not dividing 2N is *twist-eligible* for (E, K) when it splits
in the imaginary quadratic field K and its Frobenius acts with order 3 on
the cubic's roots (equivalently the cubic stays irreducible mod ell; by
the trace argument this forces a_ell odd).  Attaching the sign that makes
ell* = +-ell congruent to 1 mod 4, the squarefree products of the ell* form
the twist-discriminant set; every such d is automatically 1 mod 4, coprime
to 2N, and has each of its primes split in K.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

from .arith import (
    divisors,
    factorize,
    is_fundamental_discriminant,
    is_square,
    is_squarefree,
    kronecker,
    prime_range,
)
from .ellcurve import WeierstrassCurve, a_ell, minimal_model

SAME_AS_E = "SameAsE"
FLIPPED = "Flipped"


class HasRationalTwoTorsion(ValueError):
    """The 2-division cubic has a rational root, so E(Q)[2] != 0."""


class BadPrime(ValueError):
    """Frobenius data is undefined at primes dividing 2N disc(cubic)."""


class CriterionMismatch(RuntimeError):
    """The character and discriminant-sign rank criteria disagreed."""


@dataclass(frozen=True)
class TwoTorsionAnalysis:
    """Galois shape of Q(E[2]) for a curve with no rational 2-torsion."""

    cubic: tuple[int, int, int, int]  # coefficients of 4x^3 + b2 x^2 + 2 b4 x + b6
    galois_type: str  # "S3" | "C3"
    disc_is_square: bool


@dataclass(frozen=True)
class TwistSet:
    """Twist discriminants below a bound, sorted by |d|.

    signed_primes lists the eligible ell* in increasing |ell*|; discs holds
    every squarefree product d (within the factor cap) with |d| < bound.
    """

    e: WeierstrassCurve
    d_k: int
    signed_primes: tuple[int, ...]
    bound: int
    discs: tuple[int, ...]


@dataclass(frozen=True)
class DensityReport:
    """Observed count of eligible primes against the Chebotarev density."""

    hits: int
    total: int
    expected: Fraction

    @property
    def frequency(self) -> float:
        return self.hits / self.total


def _monic_two_division_cubic(e: WeierstrassCurve) -> tuple[int, int, int]:
    """(p2, p1, p0) of X^3 + p2 X^2 + p1 X + p0, the cubic in X = 4x.

    Monic integral rescaling of the 2-division cubic: same rational roots
    (up to X = 4x) and the same factorization type mod every odd prime.
    """
    return e.b2, 8 * e.b4, 16 * e.b6


def _cubic_disc(a: int, b: int, c: int, d: int) -> int:
    return 18 * a * b * c * d - 4 * b**3 * d + b * b * c * c - 4 * a * c**3 - 27 * a * a * d * d


def _has_integer_root(p2: int, p1: int, p0: int) -> bool:
    if p0 == 0:
        return True
    for r in divisors(p0):
        for x in (r, -r):
            if ((x + p2) * x + p1) * x + p0 == 0:
                return True
    return False


def analyze_two_torsion(e: WeierstrassCurve) -> TwoTorsionAnalysis:
    """Certify E(Q)[2] = 0 and classify Gal(Q(E[2])/Q) as S3 or C3.

    Requires the minimal model (so that the stored cubic is integral and its
    bad primes are exactly those of the conductor).
    """
    if not e.is_integral() or minimal_model(e)[0].ainvs != e.ainvs:
        raise ValueError("analyze_two_torsion requires the global minimal model")
    if _has_integer_root(*_monic_two_division_cubic(e)):
        raise HasRationalTwoTorsion(f"rational 2-torsion on {e}")
    cubic = (4, e.b2, 2 * e.b4, e.b6)
    dc = _cubic_disc(*cubic)
    assert dc == 16 * e.disc
    square = dc > 0 and is_square(dc)
    return TwoTorsionAnalysis(cubic, "C3" if square else "S3", square)


def _xpow_mod_cubic(p2: int, p1: int, p0: int, n: int, ell: int) -> tuple[int, int, int]:
    """X^n mod (X^3 + p2 X^2 + p1 X + p0, ell), little-endian (c0, c1, c2)."""
    t0, t1, t2 = -p0 % ell, -p1 % ell, -p2 % ell  # X^3
    u0, u1, u2 = t2 * t0 % ell, (t0 + t2 * t1) % ell, (t1 + t2 * t2) % ell  # X^4

    def mul(a, b):
        a0, a1, a2 = a
        b0, b1, b2 = b
        d3 = a1 * b2 + a2 * b1
        d4 = a2 * b2
        return (
            (a0 * b0 + d3 * t0 + d4 * u0) % ell,
            (a0 * b1 + a1 * b0 + d3 * t1 + d4 * u1) % ell,
            (a0 * b2 + a1 * b1 + a2 * b0 + d3 * t2 + d4 * u2) % ell,
        )

    res, base = (1 % ell, 0, 0), (0, 1, 0)
    while n:
        if n & 1:
            res = mul(res, base)
        base = mul(base, base)
        n >>= 1
    return res


def _poly_mod(u: list[int], v: list[int], ell: int) -> list[int]:
    """Remainder of u by v over F_ell, little-endian, no trailing zeros."""
    u = u[:]
    dv = len(v) - 1
    inv = pow(v[-1], -1, ell)
    while len(u) - 1 >= dv:
        q = u[-1] * inv % ell
        shift = len(u) - 1 - dv
        for i, c in enumerate(v):
            u[i + shift] = (u[i + shift] - q * c) % ell
        while u and u[-1] == 0:
            u.pop()
        if not u:
            break
    return u


def _distinct_roots_mod(p2: int, p1: int, p0: int, ell: int) -> int:
    """Distinct roots in F_ell of the monic cubic, for odd ell not dividing
    its discriminant: gcd with X^ell - X, so the answer is 0, 1 or 3."""
    c0, c1, c2 = _xpow_mod_cubic(p2, p1, p0, ell, ell)
    h = [c0, (c1 - 1) % ell, c2]
    while h and h[-1] == 0:
        h.pop()
    if not h:
        return 3  # cubic divides X^ell - X: fully split
    u = [p0 % ell, p1 % ell, p2 % ell, 1]
    while len(h) > 0:
        u = _poly_mod(u, h, ell)
        u, h = h, u
    n = len(u) - 1
    assert n in (0, 1)  # 2 distinct roots would force a third; disc is a unit
    return n


_ORDER_FROM_ROOTS = {0: 3, 1: 2, 3: 1}


@lru_cache(maxsize=None)
def _order_at(p2: int, p1: int, p0: int, ell: int) -> int:
    return _ORDER_FROM_ROOTS[_distinct_roots_mod(p2, p1, p0, ell)]


def frobenius_order(e: WeierstrassCurve, ell: int) -> int:
    """Order (1, 2 or 3) of Frob_ell on the roots of the 2-division cubic:
    3 iff the cubic is irreducible mod ell, 1 iff it splits completely."""
    if ell == 2 or e.conductor % ell == 0 or e.disc % ell == 0:
        raise BadPrime(f"{ell} divides 2N disc(cubic) for {e}")
    return _order_at(*_monic_two_division_cubic(e), ell)


def _require_fundamental(d_k: int) -> None:
    if d_k >= 0 or not is_fundamental_discriminant(d_k):
        raise ValueError(f"{d_k} is not a negative fundamental discriminant")


def two_splits(d_k: int) -> bool:
    """2 splits in Q(sqrt(d_K)) iff d_K = 1 mod 8."""
    _require_fundamental(d_k)
    return d_k % 8 == 1


def heegner_hypothesis(d_k: int, n: int) -> bool:
    """Every prime of n split in Q(sqrt(d_K)); ramified or inert disqualify."""
    _require_fundamental(d_k)
    return all(kronecker(d_k, ell) == 1 for ell in factorize(n))


def signed_prime(ell: int) -> int:
    """ell* = +-ell with the sign making ell* = 1 mod 4."""
    return ell if ell % 4 == 1 else -ell


def twist_primes(e: WeierstrassCurve, d_k: int, bound: int) -> list[int]:
    """Signed eligible primes ell* with ell < bound, increasing |ell*|."""
    n = e.conductor
    p2, p1, p0 = _monic_two_division_cubic(e)
    out = []
    for ell in prime_range(3, bound):
        if n % ell == 0 or e.disc % ell == 0 or d_k % ell == 0:
            continue
        if kronecker(d_k, ell) == 1 and _order_at(p2, p1, p0, ell) == 3:
            out.append(signed_prime(ell))
    return out


def enumerate_twists(
    e: WeierstrassCurve, d_k: int, bound: int, max_factors: int | None = None
) -> TwistSet:
    """All twist discriminants d with |d| < bound and at most max_factors
    prime factors (no cap when None), sorted by |d|."""
    analyze_two_torsion(e)
    n = e.conductor
    if not heegner_hypothesis(d_k, n):
        raise ValueError(f"a prime of N={n} fails to split in K (d_K={d_k})")
    if not two_splits(d_k):
        raise ValueError(f"2 is not split in K (d_K={d_k} is not 1 mod 8)")
    sp = twist_primes(e, d_k, bound)
    for q in sp:  # order 3 forces odd Frobenius trace at q
        assert a_ell(e, abs(q)) % 2 == 1
    cap = len(sp) if max_factors is None else max_factors
    discs: list[int] = []

    def extend(i: int, prod: int, k: int) -> None:
        for j in range(i, len(sp)):
            d = prod * sp[j]
            if abs(d) >= bound:
                break  # |sp[j]| increases with j
            discs.append(d)
            if k + 1 < cap:
                extend(j + 1, d, k + 1)

    extend(0, 1, 0)
    discs.sort(key=abs)
    for d in discs:
        assert d % 4 == 1 and gcd(d, 2 * n) == 1 and is_squarefree(d)
    return TwistSet(e, d_k, tuple(sp), bound, tuple(discs))


def twist_prime_density(e: WeierstrassCurve, d_k: int, bound: int = 100_000) -> DensityReport:
    """Frequency of eligible primes below bound; Chebotarev predicts 1/6
    for S3 and 1/3 for C3 (split in K and a 3-cycle are independent)."""
    ana = analyze_two_torsion(e)
    _require_fundamental(d_k)
    n = e.conductor
    p2, p1, p0 = _monic_two_division_cubic(e)
    hits = total = 0
    for ell in prime_range(3, bound):
        if n % ell == 0 or e.disc % ell == 0 or d_k % ell == 0:
            continue
        total += 1
        if kronecker(d_k, ell) == 1 and _order_at(p2, p1, p0, ell) == 3:
            hits += 1
    expected = Fraction(1, 6) if ana.galois_type == "S3" else Fraction(1, 3)
    return DensityReport(hits, total, expected)


def _character_side(e: WeierstrassCurve, d: int) -> str:
    # twisting flips the root number exactly when chi_d(-N) = -1
    return SAME_AS_E if kronecker(d, -e.conductor) == 1 else FLIPPED


def _discriminant_side(e: WeierstrassCurve, d: int) -> str:
    return SAME_AS_E if e.disc < 0 or d > 0 else FLIPPED


def rank_side(e: WeierstrassCurve, d: int) -> str:
    """Which rank parity the twist by d lands on: SameAsE iff chi_d(-N) = 1.

    The equivalent sign test (disc(E) < 0 always Same; disc(E) > 0 iff
    d > 0) is evaluated too and must agree on twist discriminants.
    """
    n = e.conductor
    if d == 1 or d % 4 != 1 or gcd(d, 2 * n) != 1 or not is_squarefree(d):
        raise ValueError(f"d={d} is not a twist discriminant for N={n}")
    for q in factorize(d):
        if frobenius_order(e, q) != 3:
            raise ValueError(f"prime {q} of d={d} has Frobenius order below 3")
    a, b = _character_side(e, d), _discriminant_side(e, d)
    if a != b:
        raise CriterionMismatch(f"character says {a}, discriminant sign says {b} at d={d}")
    return a
