"""Weierstrass curves over Q: group law over several coefficient rings,
reduction data at primes (Tate's algorithm), point counting, minimal models,
conductors, and quadratic twists.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .arith import (
    _sqrt_mod_prime,
    factorize,
    inv_mod,
    is_prime,
    is_squarefree,
    kronecker,
    valuation,
)
from .exactnum import BigComplex, PadicNumber, PrecisionError, QuadElem

__all__ = [
    "WeierstrassCurve",
    "CurvePoint",
    "ReductionData",
    "NonInvertibleDenominator",
    "point_add",
    "scalar_mul",
    "count_points",
    "a_ell",
    "a_ell_naive",
    "a_ell_bsgs",
    "tate_algorithm",
    "minimal_model",
    "quadratic_twist",
    "curve_from_c4c6",
    "nonsingular_count",
]

NAIVE_COUNT_LIMIT = 10**6
BSGS_MIN_PRIME = 1000


class NonInvertibleDenominator(ArithmeticError):
    """A group-law slope cannot be formed in the coordinate ring."""


# ---------------------------------------------------------------------------
# curves and points
# ---------------------------------------------------------------------------


def _norm_coeff(a):
    if isinstance(a, Fraction) and a.denominator == 1:
        return int(a)
    return a


@dataclass(frozen=True)
class WeierstrassCurve:
    """[a1, a2, a3, a4, a6] model; coefficients int or Fraction."""

    a1: int | Fraction
    a2: int | Fraction
    a3: int | Fraction
    a4: int | Fraction
    a6: int | Fraction
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, _norm_coeff(getattr(self, name)))
        if self.disc == 0:
            raise ValueError("singular model (discriminant 0)")

    @staticmethod
    def from_ainvs(ainvs, label: str | None = None) -> "WeierstrassCurve":
        """Public entry point: returns the reduced global minimal model."""
        raw = WeierstrassCurve(*ainvs)
        emin, _ = minimal_model(raw)
        return WeierstrassCurve(emin.a1, emin.a2, emin.a3, emin.a4, emin.a6, label=label)

    @property
    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @cached_property
    def b2(self):
        return self.a1 * self.a1 + 4 * self.a2

    @cached_property
    def b4(self):
        return 2 * self.a4 + self.a1 * self.a3

    @cached_property
    def b6(self):
        return self.a3 * self.a3 + 4 * self.a6

    @cached_property
    def b8(self):
        a1, a2, a3, a4, a6 = self.ainvs
        return a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4

    @cached_property
    def c4(self):
        return self.b2 * self.b2 - 24 * self.b4

    @cached_property
    def c6(self):
        return -self.b2**3 + 36 * self.b2 * self.b4 - 216 * self.b6

    @cached_property
    def disc(self):
        b2, b4, b6, b8 = self.b2, self.b4, self.b6, self.b8
        d = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        assert 4 * self.b8 == b2 * b6 - b4 * b4
        assert self.c4**3 - self.c6**2 == 1728 * d
        return d

    @cached_property
    def j_invariant(self):
        return Fraction(self.c4**3, self.disc)

    def is_integral(self) -> bool:
        return all(isinstance(a, int) for a in self.ainvs)

    @cached_property
    def conductor(self) -> int:
        emin, _ = minimal_model(self)
        n = 1
        for p in factorize(emin.disc):
            n *= p ** tate_algorithm(emin, p).cond_exp
        return n

    def rhs_poly(self, x):
        """x^3 + a2 x^2 + a4 x + a6."""
        return ((x + self.a2) * x + self.a4) * x + self.a6

    def point(self, x, y, check: bool = True) -> "CurvePoint":
        pt = CurvePoint(self, x, y, False)
        if check and not pt.on_curve():
            raise ValueError(f"({x}, {y}) not on {self}")
        return pt

    def infinity(self) -> "CurvePoint":
        return CurvePoint(self, None, None, True)

    def transform(self, u, r, s, t) -> "WeierstrassCurve":
        """Model under x = u^2 x' + r, y = u^3 y' + s u^2 x' + t."""
        u, r, s, t = Fraction(u), Fraction(r), Fraction(s), Fraction(t)
        a1, a2, a3, a4, a6 = (Fraction(a) for a in self.ainvs)
        na1 = (a1 + 2 * s) / u
        na2 = (a2 - s * a1 + 3 * r - s * s) / u**2
        na3 = (a3 + r * a1 + 2 * t) / u**3
        na4 = (a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t) / u**4
        na6 = (a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1) / u**6
        return WeierstrassCurve(na1, na2, na3, na4, na6, label=self.label)

    def transform_point(self, pt: "CurvePoint", u, r, s, t) -> "CurvePoint":
        """Image of a point under the same change of variables."""
        target = self.transform(u, r, s, t)
        if pt.infinity:
            return target.infinity()
        u, r, s, t = Fraction(u), Fraction(r), Fraction(s), Fraction(t)
        nx = (pt.x - r) / (u * u)
        ny = (pt.y - s * (pt.x - r) - t) / (u**3)
        return target.point(nx, ny)

    def __str__(self) -> str:
        tag = f" ({self.label})" if self.label else ""
        return f"y^2 + {self.a1}xy + {self.a3}y = x^3 + {self.a2}x^2 + {self.a4}x + {self.a6}{tag}"


def _ring_of(x) -> str:
    if isinstance(x, PadicNumber):
        return "padic"
    if isinstance(x, QuadElem):
        return "quadratic"
    if isinstance(x, BigComplex):
        return "complex"
    return "rational"


@dataclass(frozen=True)
class CurvePoint:
    """Affine point or point at infinity, tagged with its coordinate ring."""

    curve: WeierstrassCurve
    x: object
    y: object
    infinity: bool = False

    @property
    def ring(self) -> str:
        return "rational" if self.infinity else _ring_of(self.x)

    def on_curve(self) -> bool:
        if self.infinity:
            return True
        e, x, y = self.curve, self.x, self.y
        lhs = y * y + e.a1 * x * y + e.a3 * y
        rhs = ((x + e.a2) * x + e.a4) * x + e.a6
        return _ring_eq(lhs, rhs)

    def __neg__(self) -> "CurvePoint":
        if self.infinity:
            return self
        e = self.curve
        return CurvePoint(e, self.x, -self.y - e.a1 * self.x - e.a3, False)

    def __add__(self, other: "CurvePoint") -> "CurvePoint":
        return point_add(self, other)

    def __sub__(self, other: "CurvePoint") -> "CurvePoint":
        return point_add(self, -other)

    def __rmul__(self, n: int) -> "CurvePoint":
        return scalar_mul(n, self)

    def __str__(self) -> str:
        return "O" if self.infinity else f"({self.x}, {self.y})"


def _ring_eq(a, b) -> bool:
    if isinstance(a, PadicNumber) or isinstance(b, PadicNumber):
        d = a - b
        return d.is_zero_to_precision()
    if isinstance(a, BigComplex):
        return a.close_to(b)
    if isinstance(b, BigComplex):
        return b.close_to(a)
    return a == b


def _ring_div(num, den):
    try:
        if isinstance(num, int) and isinstance(den, int):
            return Fraction(num, den)
        return num / den
    except (ZeroDivisionError, PrecisionError) as e:
        raise NonInvertibleDenominator(str(e)) from e


def point_add(p: CurvePoint, q: CurvePoint) -> CurvePoint:
    """Chord-tangent addition; works over any coordinate ring of the curve."""
    if p.curve.ainvs != q.curve.ainvs:
        raise ValueError("points on different curves")
    if p.infinity:
        return q
    if q.infinity:
        return p
    e = p.curve
    a1, a2, a3, a4 = e.a1, e.a2, e.a3, e.a4
    x1, y1, x2, y2 = p.x, p.y, q.x, q.y
    if _ring_eq(x1, x2):
        if _ring_eq(y2, -y1 - a1 * x1 - a3):
            return e.infinity()
        num = 3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1
        den = 2 * y1 + a1 * x1 + a3
    else:
        num = y2 - y1
        den = x2 - x1
    lam = _ring_div(num, den)
    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = lam * (x1 - x3) - y1 - a1 * x3 - a3
    return CurvePoint(e, x3, y3, False)


def scalar_mul(n: int, p: CurvePoint) -> CurvePoint:
    """n*P by double and add."""
    if n < 0:
        return scalar_mul(-n, -p)
    acc = p.curve.infinity()
    add = p
    while n:
        if n & 1:
            acc = point_add(acc, add)
        if n > 1:
            add = point_add(add, add)
        n >>= 1
    return acc


# ---------------------------------------------------------------------------
# point counting over F_ell
# ---------------------------------------------------------------------------


def _require_integral(e: WeierstrassCurve):
    if not e.is_integral():
        raise ValueError("integral model required")


def count_points(e: WeierstrassCurve, ell: int) -> int:
    """#E~(F_ell), projective points of the reduced model (singular included).

    Naive: O(ell) work, restricted to ell <= 10^6.
    """
    _require_integral(e)
    if ell > NAIVE_COUNT_LIMIT:
        raise ValueError(f"naive counting capped at {NAIVE_COUNT_LIMIT}")
    if ell == 2:
        a1, a2, a3, a4, a6 = (a % 2 for a in e.ainvs)
        n = 1
        for x in (0, 1):
            for y in (0, 1):
                if (y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6) % 2 == 0:
                    n += 1
        return n
    # odd ell: complete the square; chi(4) = 1 so the factor 4 is harmless
    xs = np.arange(ell, dtype=np.int64)
    chi = np.full(ell, -1, dtype=np.int64)
    chi[(xs * xs) % ell] = 1
    chi[0] = 0
    b2, b4, b6 = e.b2 % ell, e.b4 % ell, e.b6 % ell
    g = (4 * xs + b2) % ell
    g = (g * xs + 2 * b4) % ell
    g = (g * xs + b6) % ell
    return int(ell + 1 + chi[g].sum())


def a_ell_naive(e: WeierstrassCurve, ell: int) -> int:
    """Trace of Frobenius by exhaustive counting; requires good reduction."""
    _require_integral(e)
    if e.disc % ell == 0:
        raise ValueError(f"bad reduction at {ell}")
    a = ell + 1 - count_points(e, ell)
    assert a * a <= 4 * ell
    return a


def _short_model_mod(e: WeierstrassCurve, ell: int) -> tuple[int, int]:
    """A, B with y^2 = x^3 + Ax + B isomorphic to E over F_ell (ell >= 5)."""
    A = -e.c4 * inv_mod(48, ell) % ell
    B = -e.c6 * inv_mod(864, ell) % ell
    return A, B


def _madd(A: int, ell: int, P, Q):
    if P is None:
        return Q
    if Q is None:
        return P
    x1, y1 = P
    x2, y2 = Q
    if x1 == x2:
        if (y1 + y2) % ell == 0:
            return None
        lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, ell) % ell
    else:
        lam = (y2 - y1) * pow(x2 - x1, -1, ell) % ell
    x3 = (lam * lam - x1 - x2) % ell
    return (x3, (lam * (x1 - x3) - y1) % ell)


def _mmul(A: int, ell: int, k: int, P):
    if k < 0:
        k, P = -k, (P[0], (-P[1]) % ell)
    acc, add = None, P
    while k:
        if k & 1:
            acc = _madd(A, ell, acc, add)
        if k > 1:
            add = _madd(A, ell, add, add)
        k >>= 1
    return acc


def _random_point(A: int, B: int, ell: int, rng) -> tuple[int, int]:
    while True:
        x = rng.randrange(ell)
        f = (x * x * x + A * x + B) % ell
        if f == 0:
            return (x, 0)
        if kronecker(f, ell) == 1:
            return (x, _sqrt_mod_prime(f, ell))


def _point_order_in_interval(A, ell, P, lo, hi) -> int:
    """Exact order of P, found via a baby-step giant-step match in [lo, hi]."""
    w = math.isqrt(hi - lo) + 1
    baby = {}
    R = None
    for j in range(w + 1):
        baby.setdefault(R, j)  # None key records j*P = O
        if R is not None:
            baby.setdefault((R[0], (-R[1]) % ell), -j)
        if j < w:
            R = _madd(A, ell, R, P)
    giant = _mmul(A, ell, w, P)
    if giant is None:
        n = w  # order divides the giant step
    else:
        n = None
        Q = _mmul(A, ell, lo, P)
        for i in range(0, (hi - lo) // w + 2):
            if Q in baby:
                cand = lo + i * w - baby[Q]
                if cand > 0 and _mmul(A, ell, cand, P) is None:
                    n = cand
                    break
            Q = _madd(A, ell, Q, giant)
        assert n is not None, "no annihilator in Hasse interval"
    # strip primes to get the exact order
    for p in factorize(n):
        while n % p == 0 and _mmul(A, ell, n // p, P) is None:
            n //= p
    return n


def a_ell_bsgs(e: WeierstrassCurve, ell: int) -> int:
    """Trace of Frobenius via random-point order finding (no exhaustive scan).

    Group orders of E and its quadratic twist over F_ell are pinned down
    jointly; for ell > 457 the answer in the Hasse interval is unique.
    """
    _require_integral(e)
    if e.disc % ell == 0:
        raise ValueError(f"bad reduction at {ell}")
    if ell < BSGS_MIN_PRIME:
        return a_ell_naive(e, ell)
    A, B = _short_model_mod(e, ell)
    # any quadratic nonresidue gives the twist
    g = 2
    while kronecker(g, ell) != -1:
        g += 1
    At, Bt = A * g * g % ell, B * g**3 % ell
    rng = random.Random(0x5EED ^ ell)
    s = math.isqrt(4 * ell)
    lo, hi = ell + 1 - s, ell + 1 + s
    lcm_e, lcm_t = 1, 1
    for round_ in range(24):
        if round_ % 2 == 0:
            P = _random_point(A, B, ell, rng)
            lcm_e = math.lcm(lcm_e, _point_order_in_interval(A, ell, P, lo, hi))
        else:
            P = _random_point(At, Bt, ell, rng)
            lcm_t = math.lcm(lcm_t, _point_order_in_interval(At, ell, P, lo, hi))
        # candidates: N = 0 mod lcm_e with 2*ell + 2 - N = 0 mod lcm_t
        first = (lo + lcm_e - 1) // lcm_e * lcm_e
        cands = [
            n
            for n in range(first, hi + 1, lcm_e)
            if (2 * ell + 2 - n) % lcm_t == 0
        ]
        if len(cands) == 1:
            return ell + 1 - cands[0]
    raise AssertionError(f"group order not isolated at {ell}")


def a_ell(e: WeierstrassCurve, ell: int) -> int:
    """Trace of Frobenius at a good prime; for bad primes see tate_algorithm."""
    if e.disc % ell == 0:
        red = tate_algorithm(e, ell)
        if red.kind == "good":
            e, _ = minimal_model(e)
        else:
            return {"split multiplicative": 1, "nonsplit multiplicative": -1, "additive": 0}[
                red.kind
            ]
    if ell < BSGS_MIN_PRIME or ell <= 3:
        return a_ell_naive(e, ell)
    return a_ell_bsgs(e, ell)


# ---------------------------------------------------------------------------
# Tate's algorithm
# ---------------------------------------------------------------------------


_INF = 10**9


def _val(n: int, p: int) -> int:
    """p-adic valuation with v(0) treated as effectively infinite."""
    return _INF if n == 0 else valuation(n, p)


@dataclass(frozen=True)
class ReductionData:
    ell: int
    kind: str  # good | split multiplicative | nonsplit multiplicative | additive
    kodaira: str  # I0, In, II, III, IV, I0*, In*, IV*, III*, II*
    tamagawa: int
    nsCount: int  # nonsingular F_ell points of the reduced minimal model
    cond_exp: int
    vdisc: int  # valuation of the minimal discriminant
    minimal: bool  # input model was already locally minimal


def _poly_roots_mod(coeffs: list[int], p: int) -> dict[int, int]:
    """Roots with multiplicity of a monic-or-not poly (ascending coeffs) mod p."""
    assert p <= NAIVE_COUNT_LIMIT
    roots = {}
    for x in range(p):
        v, mult = coeffs, 0
        while True:
            val = 0
            for c in reversed(v):
                val = (val * x + c) % p
            if val:
                break
            # synthetic division by (X - x)
            out = []
            acc = 0
            for c in reversed(v):
                acc = (acc * x + c) % p
                out.append(acc)
            v = list(reversed(out[:-1]))
            mult += 1
            if not v:
                break
        if mult:
            roots[x] = mult
    return roots


def _quad_distinct_roots(b: int, c: int, p: int) -> tuple[bool, bool]:
    """(separable, has F_p root) for Y^2 + bY + c mod p."""
    if p == 2:
        sep = b % 2 == 1
        rational = sep and c % 2 == 0
        return sep, rational
    disc = (b * b - 4 * c) % p
    if disc == 0:
        return False, True
    return True, kronecker(disc, p) == 1


def tate_algorithm(e: WeierstrassCurve, p: int) -> ReductionData:
    """Local reduction data at p, on (a locally minimized form of) the model."""
    _require_integral(e)
    assert is_prime(p), p
    a1, a2, a3, a4, a6 = e.ainvs
    minimal = True

    while True:
        c = WeierstrassCurve(a1, a2, a3, a4, a6)
        n = _val(c.disc, p)
        if n == 0:
            count = count_points(c, p) if p <= NAIVE_COUNT_LIMIT else p + 1 - a_ell_bsgs(c, p)
            return ReductionData(p, "good", "I0", 1, count, 0, 0, minimal)

        # step 2: move the singular point to (0, 0)
        if p <= 3:
            x0 = y0 = None
            for x in range(p):
                for y in range(p):
                    fx = (a1 * y - 3 * x * x - 2 * a2 * x - a4) % p
                    fy = (2 * y + a1 * x + a3) % p
                    f = (
                        y * y + a1 * x * y + a3 * y - x**3 - a2 * x * x - a4 * x - a6
                    ) % p
                    if f == 0 and fx == 0 and fy == 0:
                        x0, y0 = x, y
            assert x0 is not None, "singular point not found"
        else:
            # double root of the completed-square cubic 4x^3 + b2x^2 + 2b4x + b6
            roots = _poly_roots_mod([c.b6 % p, 2 * c.b4 % p, c.b2 % p, 4 % p], p)
            mult = [x for x, m in roots.items() if m >= 2]
            assert len(mult) == 1, (roots, p)
            x0 = mult[0]
            y0 = (-(a1 * x0 + a3)) * inv_mod(2, p) % p
        a1, a2, a3, a4, a6 = _translate(a1, a2, a3, a4, a6, x0, y0)
        assert a3 % p == 0 and a4 % p == 0 and a6 % p == 0

        b2 = a1 * a1 + 4 * a2
        if b2 % p:
            # multiplicative: tangent-cone T^2 + a1 T - a2 splits or not
            sep, rational = _quad_distinct_roots(a1 % p, (-a2) % p, p)
            assert sep
            if p == 2:
                split = rational
            else:
                split = kronecker((-c.c6) % p, p) == 1
                assert split == rational, "split conventions disagree"
            if split:
                kind, cp, count = "split multiplicative", n, p - 1
            else:
                kind, cp, count = "nonsplit multiplicative", 2 - n % 2, p + 1
            return ReductionData(p, kind, f"I{n}", cp, count, 1, n, minimal)

        # additive from here on; nonsingular count is p either way
        if _val(a6, p) < 2:
            return ReductionData(p, "additive", "II", 1, p, n, n, minimal)
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        if _val(b8, p) < 3:
            return ReductionData(p, "additive", "III", 2, p, n - 1, n, minimal)
        b6 = a3 * a3 + 4 * a6
        if _val(b6, p) < 3:
            _, rational = _quad_distinct_roots(a3 // p % p, -a6 // (p * p) % p, p)
            cp = 3 if rational else 1
            return ReductionData(p, "additive", "IV", cp, p, n - 2, n, minimal)

        # normalize so that p | a1, a2; p^2 | a3, a4; p^3 | a6
        a1, a2, a3, a4, a6 = _step7_normalize(a1, a2, a3, a4, a6, p)

        P = [a6 // p**3 % p, a4 // p**2 % p, a2 // p % p, 1]
        roots = _poly_roots_mod(P, p)
        nroots = sum(roots.values())
        if not roots or max(roots.values()) == 1:
            # distinct roots (possibly not all rational): I0*
            cp = 1 + sum(1 for m in roots.values() if m == 1)
            assert nroots in (0, 1, 3)
            return ReductionData(p, "additive", "I0*", cp, p, n - 4, n, minimal)

        if max(roots.values()) == 2:
            # one double root: In* chain
            dbl = next(x for x, m in roots.items() if m == 2)
            a1, a2, a3, a4, a6 = _translate(a1, a2, a3, a4, a6, p * dbl, 0)
            assert _val(a2, p) == 1 and _val(a4, p) >= 3 and _val(a6, p) >= 4
            nu = 1
            while True:
                if nu % 2 == 1:
                    k = (nu + 3) // 2
                    b, cc = a3 // p**k % p, (-(a6 // p ** (2 * k))) % p
                    sep, rational = _quad_distinct_roots(b, cc, p)
                    if sep:
                        cp = 4 if rational else 2
                        return ReductionData(
                            p, "additive", f"I{nu}*", cp, p, n - 4 - nu, n, minimal
                        )
                    root = _double_root_of_quad(b, cc, p)
                    a1, a2, a3, a4, a6 = _translate(
                        a1, a2, a3, a4, a6, 0, root * p**k
                    )
                    assert _val(a3, p) >= k + 1 and _val(a6, p) >= 2 * k + 1
                else:
                    k = (nu + 2) // 2
                    aa = a2 // p % p
                    b, cc = a4 // p ** (k + 1) % p, a6 // p ** (2 * k + 1) % p
                    # aa X^2 + b X + cc, aa a unit
                    inv_a = inv_mod(aa, p)
                    sep, rational = _quad_distinct_roots(b * inv_a % p, cc * inv_a % p, p)
                    if sep:
                        cp = 4 if rational else 2
                        return ReductionData(
                            p, "additive", f"I{nu}*", cp, p, n - 4 - nu, n, minimal
                        )
                    root = _double_root_of_quad(b * inv_a % p, cc * inv_a % p, p)
                    a1, a2, a3, a4, a6 = _translate(
                        a1, a2, a3, a4, a6, root * p**k, 0
                    )
                    assert _val(a4, p) >= k + 2 and _val(a6, p) >= 2 * k + 2
                nu += 1

        # triple root: move it to 0
        trip = next(x for x, m in roots.items() if m == 3)
        a1, a2, a3, a4, a6 = _translate(a1, a2, a3, a4, a6, p * trip, 0)
        assert _val(a2, p) >= 2 and _val(a4, p) >= 3 and _val(a6, p) >= 4

        b, cc = a3 // p**2 % p, (-(a6 // p**4)) % p
        sep, rational = _quad_distinct_roots(b, cc, p)
        if sep:
            cp = 3 if rational else 1
            return ReductionData(p, "additive", "IV*", cp, p, n - 6, n, minimal)
        root = _double_root_of_quad(b, cc, p)
        a1, a2, a3, a4, a6 = _translate(a1, a2, a3, a4, a6, 0, root * p**2)
        assert _val(a3, p) >= 3 and _val(a6, p) >= 5

        if _val(a4, p) == 3:
            return ReductionData(p, "additive", "III*", 2, p, n - 7, n, minimal)
        if _val(a6, p) == 5:
            return ReductionData(p, "additive", "II*", 1, p, n - 8, n, minimal)

        # non-minimal: scale down by u = p and start over
        assert a1 % p == 0 and a2 % p**2 == 0 and a3 % p**3 == 0
        assert a4 % p**4 == 0 and a6 % p**6 == 0
        a1, a2, a3, a4, a6 = (
            a1 // p,
            a2 // p**2,
            a3 // p**3,
            a4 // p**4,
            a6 // p**6,
        )
        minimal = False


def _translate(a1, a2, a3, a4, a6, r, t):
    """(r, t) translation with u = 1, s = 0."""
    na1 = a1
    na2 = a2 + 3 * r
    na3 = a3 + r * a1 + 2 * t
    na4 = a4 + 2 * r * a2 - t * a1 + 3 * r * r
    na6 = a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1
    return na1, na2, na3, na4, na6


def _s_shift(a1, a2, a3, a4, a6, s):
    """s-transform with u = 1, r = t = 0."""
    na1 = a1 + 2 * s
    na2 = a2 - s * a1 - s * s
    na3 = a3
    na4 = a4 - s * a3
    na6 = a6
    return na1, na2, na3, na4, na6


def _step7_normalize(a1, a2, a3, a4, a6, p):
    """Arrange p | a1, a2; p^2 | a3, a4; p^3 | a6 by an (s, t) change."""
    if p > 3:
        inv2 = inv_mod(2, p)
        s = (-a1) * inv2 % p
        a1, a2, a3, a4, a6 = _s_shift(a1, a2, a3, a4, a6, s)
        t = (-a3) * inv2 % p**2
        a1, a2, a3, a4, a6 = _translate(a1, a2, a3, a4, a6, 0, t)
    else:
        found = False
        for s in range(p):
            for t in range(p * p):
                b1, b2_, b3, b4_, b6_ = _s_shift(a1, a2, a3, a4, a6, s)
                b1, b2_, b3, b4_, b6_ = _translate(b1, b2_, b3, b4_, b6_, 0, t)
                if (
                    b1 % p == 0
                    and b2_ % p == 0
                    and b3 % p**2 == 0
                    and b4_ % p**2 == 0
                    and b6_ % p**3 == 0
                ):
                    a1, a2, a3, a4, a6 = b1, b2_, b3, b4_, b6_
                    found = True
                    break
            if found:
                break
        assert found, "step-7 normalization failed"
    assert a1 % p == 0 and a2 % p == 0
    assert a3 % p**2 == 0 and a4 % p**2 == 0 and a6 % p**3 == 0
    return a1, a2, a3, a4, a6


def _double_root_of_quad(b: int, c: int, p: int) -> int:
    """The double root of Y^2 + bY + c mod p (caller guarantees one exists)."""
    if p == 2:
        assert b % 2 == 0
        return c % 2  # root of Y^2 + c = (Y + c)^2
    r = (-b) * inv_mod(2, p) % p
    assert (r * r + b * r + c) % p == 0
    return r


def nonsingular_count(e: WeierstrassCurve, ell: int) -> int:
    """#E~ns(F_ell) of the local minimal model at ell."""
    return tate_algorithm(e, ell).nsCount


# ---------------------------------------------------------------------------
# minimal models and twists
# ---------------------------------------------------------------------------


def _kraus_ok(C4: int, C6: int) -> bool:
    """Integral model existence test for invariant candidates (C4, C6)."""
    if C6 != 0 and valuation(C6, 3) == 2:
        return False
    return C6 % 4 == 3 or (C4 % 16 == 0 and C6 % 32 in (0, 8))


def _reduced_from_c4c6(C4: int, C6: int) -> WeierstrassCurve:
    """The reduced integral model with invariants exactly (C4, C6)."""
    for b2 in range(-5, 7):
        if (b2 * b2 - C4) % 24:
            continue
        b4 = (b2 * b2 - C4) // 24
        num6 = -(b2**3) + 36 * b2 * b4 - C6
        if num6 % 216:
            continue
        b6 = num6 // 216
        a1 = b2 % 2
        a3 = b6 % 2
        if (b2 - a1) % 4 or (b6 - a3) % 4 or (b4 - a1 * a3) % 2:
            continue
        cand = WeierstrassCurve(
            a1, (b2 - a1) // 4, a3, (b4 - a1 * a3) // 2, (b6 - a3) // 4
        )
        if cand.c4 == C4 and cand.c6 == C6:
            return cand
    raise AssertionError(f"no reduced model for c4={C4}, c6={C6}")


def minimal_model(e: WeierstrassCurve) -> tuple[WeierstrassCurve, tuple]:
    """Global minimal reduced model and the (u, r, s, t) mapping e to it."""
    # clear denominators first
    m = 1
    for a in e.ainvs:
        if isinstance(a, Fraction):
            m = math.lcm(m, a.denominator)
    work = e.transform(Fraction(1, m), 0, 0, 0) if m > 1 else e
    C4, C6, D = work.c4, work.c6, work.disc

    exps: dict[int, int] = {}
    support = factorize(C4) if C4 else {}
    if C6:
        c6f = factorize(C6)
        primes = set(support) & set(c6f) if C4 else set(c6f)
    else:
        primes = set(support)
    for p in primes:
        if C4 and C6:
            ep = min(valuation(C4, p) // 4, valuation(C6, p) // 6)
        elif C4:
            ep = valuation(C4, p) // 4
        else:
            ep = valuation(C6, p) // 6
        ep = min(ep, valuation(D, p) // 12)
        if ep > 0:
            exps[p] = ep
    for p in (2, 3):
        while exps.get(p, 0) > 0 and not _kraus_ok(
            C4 // _upow(exps, p, 4), C6 // _upow(exps, p, 6)
        ):
            exps[p] -= 1
    u = 1
    for p, ep in exps.items():
        u *= p**ep
    emin = _reduced_from_c4c6(C4 // u**4, C6 // u**6)

    # solve the change of variables from e to emin
    ut = Fraction(u, m)
    s = (ut * emin.a1 - e.a1) / 2
    r = (ut * ut * emin.a2 - e.a2 + s * e.a1 + s * s) / 3
    t = (ut**3 * emin.a3 - e.a3 - r * e.a1) / 2
    assert e.transform(ut, r, s, t).ainvs == emin.ainvs, "transformation mismatch"
    return emin, (ut, r, s, t)


def _upow(exps: dict, p: int, k: int) -> int:
    return p ** (k * exps.get(p, 0))


def curve_from_c4c6(C4: int, C6: int, label: str | None = None) -> WeierstrassCurve:
    """Minimal reduced curve with invariants (C4, C6) up to scaling."""
    if C4**3 - C6**2 == 0:
        raise ValueError("singular invariants")
    raw = WeierstrassCurve(0, 0, 0, -27 * C4, -54 * C6)
    emin, _ = minimal_model(raw)
    if label is not None:
        emin = WeierstrassCurve(*emin.ainvs, label=label)
    return emin


def quadratic_twist(e: WeierstrassCurve, d: int) -> WeierstrassCurve:
    """Minimal model of the twist by squarefree d != 0."""
    if d == 0 or not is_squarefree(d):
        raise ValueError("twist parameter must be a nonzero squarefree integer")
    if d == 1:
        emin, _ = minimal_model(e)
        return emin
    return curve_from_c4c6(e.c4 * d * d, e.c6 * d**3)
