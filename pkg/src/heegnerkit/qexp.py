"""Eigenform q-expansions and the operator calculus on them.

Coefficient lists are indexed by n (entry 0 is zero for cusp forms).  The
stabilization operators rewrite the Euler factor at one prime:

    F^(l)+ = F - beta V_l F        F^(l)- = F - alpha V_l F
    F^(l)0 = F - a_l V_l F + l^(k-1) V_{l^2} F      (l good)
    F^(l)0 = F - a_l V_l F                          (l dividing the level)

where V_l substitutes q -> q^l and alpha, beta are the roots of
x^2 - a_l x + l^(k-1).  The (p)0 case zeroes every coefficient a_n with
p | n (p-depletion), which makes the coefficientwise inverse of
theta = q d/dq well defined: it divides a_n by the p-adic unit n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arith import inv_mod, primes_up_to, sqrt_mod_prime_power, valuation
from .exactnum import PadicNumber, PrecisionError
from .ellcurve import WeierstrassCurve, a_ell

DEFAULT_PREC = 32  # working digits for p-adic coefficient rings

WEIGHT = 2  # only weight-2 forms arise from curves; k stays visible in formulas


class RootsNotInRing(ValueError):
    """x^2 - a_l x + l^(k-1) has no unit root in the requested Z_p."""


class NotDepleted(ValueError):
    """A coefficient at a multiple of p is not exactly zero."""


@dataclass(frozen=True, eq=False)
class EigenformCoeffs:
    """Hecke eigenvalues a_1..a_B of the newform attached to a curve."""

    level: int
    weight: int
    a: np.ndarray  # int64, index = n, a[0] = 0
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        b = self.length
        assert b < 1 or self.a[1] == 1
        for p in (2, 3, 5, 7):  # spot-check the defining recursions
            if p * p <= b:
                good = self.level % p != 0
                lk = p ** (self.weight - 1) if good else 0
                pk = p * p
                while pk <= b:
                    assert self.a[pk] == self.a[p] * self.a[pk // p] - lk * self.a[pk // (p * p)]
                    pk *= p
        for m, n in ((2, 3), (3, 4), (2, 9), (5, 6), (4, 25)):
            if m * n <= b:
                assert self.a[m * n] == self.a[m] * self.a[n]

    @property
    def length(self) -> int:
        return len(self.a) - 1

    def coeff(self, n: int) -> int:
        return int(self.a[n])


def anlist(e: WeierstrassCurve, bound: int) -> EigenformCoeffs:
    """a_1..a_bound via a_ell at primes and the Hecke recursions.

    Primes are processed in increasing order; a[q * m] = a[q] a[m] settles
    once q is the top prime-power of the index, so every entry is written
    correctly when its largest prime factor is reached.
    """
    level = e.conductor
    a = np.zeros(bound + 1, dtype=np.int64)
    if bound >= 1:
        a[1] = 1
    for p in primes_up_to(bound):
        p = int(p)
        ap = a_ell(e, p)
        lk = p ** (WEIGHT - 1) if level % p != 0 else 0
        prev, cur, pk = 1, ap, p
        while pk <= bound:
            a[pk] = cur
            prev, cur = cur, ap * cur - lk * prev
            pk *= p
        q = p
        while q <= bound:
            m = np.arange(1, bound // q + 1, dtype=np.int64)
            m = m[m % p != 0]
            a[q * m] = a[q] * a[m]
            q *= p
    return EigenformCoeffs(level, WEIGHT, a, e.label)


# -- generic coefficient-list plumbing ---------------------------------------


def coeff_list(form, bound: int | None = None) -> list:
    """Coefficients of any series-like object as a list indexed by n."""
    if isinstance(form, EigenformCoeffs):
        out = [int(x) for x in form.a]
    elif isinstance(form, (StabilizedForm, DepletedSeries)):
        out = list(form.coeffs)
    else:
        out = list(form)
    if bound is not None:
        if len(out) - 1 < bound:
            raise ValueError(f"series has {len(out) - 1} coefficients, need {bound}")
        out = out[: bound + 1]
    return out


def _v_substitute(coeffs: list, ell: int) -> list:
    """q -> q^ell on a truncated series; the tail beyond the bound drops."""
    zero = coeffs[0]
    out = [zero] * len(coeffs)
    for j in range(1, (len(coeffs) - 1) // ell + 1):
        out[ell * j] = coeffs[j]
    return out


def _sub(x, y):
    # int - PadicNumber has no __rsub__; rewrite as -(y - x)
    if isinstance(y, PadicNumber) and not isinstance(x, PadicNumber):
        return -(y - x)
    return x - y


def _ring_is_zero(x) -> bool:
    return x.is_zero_to_precision() if isinstance(x, PadicNumber) else x == 0


# -- stabilization ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilizedForm:
    """An eigenform with a recorded chain of Euler-factor rewrites."""

    base: EigenformCoeffs
    ops: tuple[tuple[int, str], ...]  # (ell, mode) in application order
    root_choice: tuple[tuple[int, object, object], ...]  # (ell, alpha, beta)
    coeffs: tuple

    @property
    def length(self) -> int:
        return len(self.coeffs) - 1


def stabilization_roots(ap: int, p: int, prec: int = DEFAULT_PREC):
    """Unit root alpha and complement beta of x^2 - a_p x + p in Z_p.

    Defined for the working prime itself: alpha beta = p forces exactly one
    unit root, and requires a_p to be a p-adic unit (the ordinary case).
    """
    if ap % p == 0:
        raise RootsNotInRing(f"a_p = {ap} is not a unit mod {p} (not ordinary)")
    disc = ap * ap - 4 * p
    work = prec + valuation(4, p) + 2
    try:
        s = PadicNumber.make(p, 0, _sqrt_lift(disc, p, work), work)
    except ValueError as err:
        raise RootsNotInRing(f"disc {disc} has no square root in Z_{p}") from err
    half = PadicNumber.from_rational(Fraction(1, 2), p, work) if p != 2 else None
    a = PadicNumber.from_rational(ap, p, work)
    r1 = (a + s) / 2 if p == 2 else (a + s) * half
    r2 = (a - s) / 2 if p == 2 else (a - s) * half
    alpha, beta = (r1, r2) if r1.is_unit() else (r2, r1)
    assert alpha.is_unit() and beta.valuation_lower_bound() >= 1
    assert (alpha + beta).congruent_mod(ap, prec)
    assert (alpha * beta).congruent_mod(p, prec)
    return alpha, beta


def _sqrt_lift(n: int, p: int, prec: int) -> int:
    v = valuation(n, p) if n != 0 else 0
    if n == 0 or v % 2 != 0:
        raise ValueError("no square root")
    # pass the exact unit: a root mod p^k is only determined by the radicand
    # mod p^(k+1), so pre-reducing would pick a root of the wrong integer
    r = sqrt_mod_prime_power(n // p**v, p, prec)  # raises ValueError if none
    return r * p ** (v // 2) % p**prec


def _is_stabilized_at(form, ell: int) -> bool:
    ops = form.ops if isinstance(form, StabilizedForm) else ()
    return any(l == ell for l, _ in ops)


def stabilize(form, ell: int, mode: str, root_choice=None) -> StabilizedForm:
    """Apply the (ell)mode operator; mode is "+", "-" or "0".

    For "+"/"-" the caller passes root_choice = (alpha, beta); they must
    satisfy alpha + beta = a_ell(F) and alpha beta = ell^(k-1).  Mode "0"
    reads a_ell(F) off the series and drops the l^(k-1) V_{l^2} term when
    ell divides the running level (base level times stabilized primes).
    """
    base = form.base if isinstance(form, StabilizedForm) else form
    if not isinstance(base, EigenformCoeffs):
        raise TypeError("stabilize needs an EigenformCoeffs or StabilizedForm")
    coeffs = coeff_list(form)
    if len(coeffs) - 1 < ell * 2:
        raise ValueError(f"need coefficients past q^{2 * ell} to stabilize at {ell}")
    ops = form.ops if isinstance(form, StabilizedForm) else ()
    roots = form.root_choice if isinstance(form, StabilizedForm) else ()
    bad = base.level % ell == 0 or _is_stabilized_at(form, ell)
    vl = _v_substitute(coeffs, ell)
    if mode in ("+", "-"):
        if bad:
            raise ValueError(f"modes +/- need {ell} prime to the running level")
        if root_choice is None:
            raise ValueError("modes +/- require root_choice = (alpha, beta)")
        alpha, beta = root_choice
        assert _ring_is_zero(_sub(alpha + beta, coeffs[ell]))
        assert _ring_is_zero(_sub(alpha * beta, ell ** (WEIGHT - 1)))
        mult = beta if mode == "+" else alpha
        new = [_sub(c, mult * v) for c, v in zip(coeffs, vl)]
        roots = roots + ((ell, alpha, beta),)
    elif mode == "0":
        al = coeffs[ell]
        new = [_sub(c, al * v) for c, v in zip(coeffs, vl)]
        if not bad:
            lk = ell ** (WEIGHT - 1)
            vl2 = _v_substitute(coeffs, ell * ell)
            new = [c + lk * v for c, v in zip(new, vl2)]
    else:
        raise ValueError(f"unknown stabilization mode {mode!r}")
    return StabilizedForm(base, ops + ((ell, mode),), roots, tuple(new))


# -- depletion and theta -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DepletedSeries:
    """PadicNumber coefficients with exact zeros at every multiple of p."""

    p: int
    coeffs: tuple

    def __post_init__(self):
        for n in range(0, len(self.coeffs), self.p):
            if not self.coeffs[n].is_exact_zero():
                raise NotDepleted(f"coefficient at q^{n} is not exactly zero")

    @property
    def length(self) -> int:
        return len(self.coeffs) - 1


def deplete(form, p: int, prec: int = DEFAULT_PREC) -> DepletedSeries:
    """(p)0-stabilize and coerce into the exact-zero p-adic representation.

    The Hecke recursion makes every coefficient at p | n cancel identically;
    that is checked, then the zeros are stored exactly so that dividing by n
    later never meets a non-unit.
    """
    sf = stabilize(form, p, "0")
    out = []
    for n, c in enumerate(sf.coeffs):
        if n % p == 0:
            if not _ring_is_zero(c):
                raise NotDepleted(f"(p)0-stabilization left q^{n} nonzero")
            out.append(PadicNumber.zero(p))
        elif isinstance(c, PadicNumber):
            assert c.p == p
            out.append(c)
        else:
            out.append(PadicNumber.from_rational(c, p, prec))
    return DepletedSeries(p, tuple(out))


def theta(form, j: int = 1):
    """j-fold q d/dq: multiplies a_n by n^j.  Only j >= 0 here; the inverse
    exists on depleted series via theta_inverse_depleted."""
    if j < 0:
        raise ValueError("negative powers only via theta_inverse_depleted")
    if isinstance(form, DepletedSeries):
        if j == 0:
            return form
        new = [c * (n**j) for n, c in enumerate(form.coeffs)]
        new[0] = PadicNumber.zero(form.p)
        return DepletedSeries(form.p, tuple(new))
    coeffs = coeff_list(form)
    return [c * (n**j) for n, c in enumerate(coeffs)]


def theta_inverse_depleted(form: DepletedSeries) -> DepletedSeries:
    """Coefficientwise a_n / n; legal because p never divides a live index."""
    if not isinstance(form, DepletedSeries):
        raise NotDepleted("theta_inverse_depleted needs a DepletedSeries")
    new = [c if c.is_exact_zero() else c / n for n, c in enumerate(form.coeffs)]
    return DepletedSeries(form.p, tuple(new))


# -- congruences ---------------------------------------------------------------


def _residue(x, p: int, m: int) -> int:
    if isinstance(x, PadicNumber):
        if x.p != p:
            raise ValueError(f"coefficient lives in Q_{x.p}, not Q_{p}")
        return x.residue_mod(m)
    x = Fraction(x)
    pm = p**m
    if x.denominator % p == 0:
        raise PrecisionError(f"{x} has no residue mod {p}^{m}")
    return x.numerator * inv_mod(x.denominator, pm) % pm


def qexp_congruent(f, g, p: int, m: int, bound: int) -> tuple[bool, int | None]:
    """Coefficientwise f = g mod p^m for 1 <= n <= bound.

    Returns (True, None) or (False, first failing index).  Both series must
    carry at least `bound` coefficients with residues known mod p^m.
    """
    fc = coeff_list(f, bound)
    gc = coeff_list(g, bound)
    for n in range(1, bound + 1):
        if _residue(fc[n], p, m) != _residue(gc[n], p, m):
            return False, n
    return True, None
