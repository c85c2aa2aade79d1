"""Heegner points by complex uniformization.

Pipeline: pick CM points on X_0(N) for a fixed imaginary quadratic
discriminant (one binary quadratic form per ideal class), evaluate the
modular parametrization as a truncated q-series with a certified tail
bound, trace over the class group, map through the Weierstrass
exponential (periods by AGM, exponential by Tate's q-series), and
recognize the result as exact coordinates in Q(sqrt(d)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import count, product

import gmpy2
import numpy as np

from .arith import factorize, kronecker, sqrt_mod_prime_power, valuation
from .ellcurve import CurvePoint, WeierstrassCurve
from .exactnum import BigComplex, QuadElem
from .qexp import anlist
from .twotors import heegner_hypothesis

__all__ = [
    "NoSquareRoot",
    "PrecisionUnreachable",
    "NearPole",
    "RecognitionFailed",
    "HeegnerTau",
    "HeegnerPointResult",
    "reduce_form",
    "reduced_forms",
    "smallest_b",
    "heegner_tau_list",
    "period_lattice",
    "elliptic_exp",
    "eval_modular_param",
    "recognize_point",
    "heegner_point",
    "COEFF_CAP",
]

# default ceiling on q-expansion length; callers raise it for conductors
# beyond the low thousands
COEFF_CAP = 2 * 10**6

# float error bookkeeping cannot certify much past 10^-300
MAX_DIGITS = 280


class NoSquareRoot(ValueError):
    """B^2 = d mod 4N has no solution."""


class PrecisionUnreachable(ArithmeticError):
    """The requested tail bound needs more q-expansion terms than the cap."""

    def __init__(self, needed: int, cap: int):
        super().__init__(f"needs {needed} coefficients, cap is {cap}")
        self.needed = needed
        self.cap = cap


class NearPole(ArithmeticError):
    """Argument of the exponential is within tolerance of a lattice point."""


class RecognitionFailed(ArithmeticError):
    """No exact point within the height bound matches the approximation."""


# ---------------------------------------------------------------------------
# binary quadratic forms
# ---------------------------------------------------------------------------


def reduce_form(form: tuple[int, int, int]) -> tuple[int, int, int]:
    """Gauss-reduced representative of a positive definite form's class."""
    a, b, c = form
    d = b * b - 4 * a * c
    if a <= 0 or d >= 0:
        raise ValueError("form must be positive definite")
    while True:
        if -a < b <= a:
            if a < c or (a == c and b >= 0):
                return (a, b, c)
            a, b, c = c, -b, a
        else:
            k = (a - b) // (2 * a)  # shift b into (-a, a]
            b += 2 * a * k
            c = (b * b - d) // (4 * a)


def reduced_forms(d: int) -> list[tuple[int, int, int]]:
    """All reduced primitive forms of discriminant d < 0, sorted."""
    if d >= 0 or d % 4 not in (0, 1):
        raise ValueError(f"{d} is not a negative discriminant")
    out = []
    for a in range(1, math.isqrt(-d // 3) + 1):
        for b in range(-a + 1, a + 1):
            if (b * b - d) % (4 * a):
                continue
            c = (b * b - d) // (4 * a)
            if c < a or (a == c and b < 0):
                continue
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append((a, b, c))
    return sorted(out)


def _root_set(d: int, p: int, e: int) -> list[int]:
    """All square roots of d modulo p^e, for fundamental d < 0."""
    pe = p**e
    if p == 2:
        if e > 16:
            raise NotImplementedError("2-adic part of the level is too large")
        return [r for r in range(pe) if (r * r - d) % pe == 0]
    if d % p:
        if kronecker(d % p, p) != 1:
            return []
        r = sqrt_mod_prime_power(d % pe, p, e)
        return sorted({r, pe - r})
    if valuation(-d, p) != 1:
        raise ValueError(f"{d} is not fundamental at {p}")
    return [0] if e == 1 else []


def smallest_b(n: int, d: int) -> int:
    """Smallest nonnegative B with B^2 = d (mod 4N); B is well defined mod 2N."""
    fac = sorted(factorize(4 * n).items())
    root_lists = []
    for p, e in fac:
        roots = _root_set(d, p, e)
        if not roots:
            raise NoSquareRoot(f"{d} is not a square mod {p}^{e}")
        root_lists.append([(r, p**e) for r in roots])
    best = None
    for combo in product(*root_lists):
        x, m = 0, 1
        for r, pe in combo:
            # CRT accumulation
            x += m * ((r - x) * pow(m, -1, pe) % pe)
            m *= pe
        x %= 2 * n
        if best is None or x < best:
            best = x
    assert best is not None and (best * best - d) % (4 * n) == 0
    return best


@dataclass(frozen=True)
class HeegnerTau:
    """CM point (-b + sqrt(d))/(2a) on X_0(level), from a form with level | a."""

    a: int
    b: int
    c: int
    d: int
    level: int

    def __post_init__(self):
        if self.b * self.b - 4 * self.a * self.c != self.d:
            raise ValueError("form discriminant mismatch")
        if self.a <= 0 or self.d >= 0:
            raise ValueError("form must be positive definite")
        if self.a % self.level:
            raise ValueError("level must divide the leading coefficient")

    @property
    def form(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def numeric(self, bits: int) -> BigComplex:
        with gmpy2.context(precision=bits + 16):
            im = gmpy2.sqrt(gmpy2.mpfr(-self.d)) / (2 * self.a)
            tau = gmpy2.mpc(gmpy2.mpfr(-self.b) / (2 * self.a), im)
        return BigComplex(tau, 0.0, bits)


def heegner_tau_list(n: int, d: int) -> list[HeegnerTau]:
    """One CM point per ideal class, all with the same B mod 2N.

    Representatives (a, b, c) satisfy n | a and b = smallest_b(n, d) mod 2n,
    ordered by the reduced form of their class.
    """
    if not heegner_hypothesis(d, n):
        raise ValueError(f"Heegner hypothesis fails for d={d}, N={n}")
    b0 = smallest_b(n, d)
    classes = reduced_forms(d)
    found: dict[tuple[int, int, int], HeegnerTau] = {}
    for mult in count(1):
        a = n * mult
        for t in range(mult):
            b = b0 + 2 * n * t
            if (b * b - d) % (4 * a):
                continue
            c = (b * b - d) // (4 * a)
            if math.gcd(math.gcd(a, b), c) != 1:
                continue
            key = reduce_form((a, b, c))
            if key not in found:
                found[key] = HeegnerTau(a, b, c, d, n)
        if len(found) == len(classes):
            return [found[f] for f in classes]
        if mult > 1000 * len(classes):
            raise RuntimeError(f"no class representatives at level {n} by a/n = {mult}")
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# period lattice by AGM, certified against Eisenstein series
# ---------------------------------------------------------------------------


def _cubic_real_roots(c4: int, c6: int, work: int) -> list:
    """Real roots of 4x^3 - (c4/12)x - (c6/216), refined by Newton."""
    raw = np.roots([4.0, 0.0, -c4 / 12.0, -c6 / 216.0])
    if c4**3 - c6**2 > 0:
        seeds = sorted(z.real for z in raw)
    else:
        seeds = [min(raw, key=lambda z: abs(z.imag)).real]
    roots = []
    with gmpy2.context(precision=work):
        g2 = gmpy2.mpfr(c4) / 12
        g3 = gmpy2.mpfr(c6) / 216
        for s in seeds:
            x = gmpy2.mpfr(s)
            for _ in range(80):
                f = (4 * x * x - g2) * x - g3
                df = 12 * x * x - g2
                step = f / df
                x -= step
                if abs(step) <= abs(x + 1) * gmpy2.mpfr(2) ** (-work + 4):
                    break
            roots.append(x)
    return sorted(roots, reverse=True)


def _eisenstein_check(c4: int, c6: int, om1, om2, bits: int) -> None:
    """Certify a period pair: weight 4 and 6 Eisenstein series at q = e^(2 pi i om2/om1)
    must reproduce c4 and c6.  Raises ArithmeticError on mismatch."""
    work = gmpy2.get_context().precision
    tau_im = float(om2.imag / om1)
    q_sign = -1 if abs(float(om2.real / om1) % 1.0 - 0.5) < 0.25 else 1
    nmax = int((work + 16) * math.log(2) / (2 * math.pi * tau_im)) + 3
    if nmax > 10**6:
        raise ArithmeticError("period ratio too skew to certify")
    q = q_sign * gmpy2.exp(-2 * gmpy2.const_pi() * om2.imag / om1)
    e4 = gmpy2.mpfr(1)
    e6 = gmpy2.mpfr(1)
    qn = gmpy2.mpfr(1)
    for n in range(1, nmax + 1):
        qn *= q
        w = qn / (1 - qn)
        n2 = n * n
        e4 += 240 * n2 * n * w
        e6 -= 504 * n2 * n2 * n * w
    scale = (2 * gmpy2.const_pi() / om1) ** 2
    tol = gmpy2.mpfr(2) ** (-bits - 8)
    c4_hat = scale * scale * e4
    c6_hat = scale * scale * scale * e6
    if abs(c4_hat - c4) > tol * (abs(c4_hat) + 1) or abs(c6_hat - c6) > tol * (abs(c6_hat) + 1):
        raise ArithmeticError("period lattice failed the Eisenstein cross-check")


@lru_cache(maxsize=64)
def _periods_raw(c4: int, c6: int, bits: int):
    """(om1: mpfr, om2: mpc) for the lattice of y^2 = 4x^3 - g2 x - g3."""
    work = bits + 64
    disc = c4**3 - c6**2  # 1728 * curve discriminant
    with gmpy2.context(precision=work):
        pi = gmpy2.const_pi()
        if disc > 0:
            e1, e2, e3 = _cubic_real_roots(c4, c6, work)
            om1 = pi / gmpy2.agm(gmpy2.sqrt(e1 - e3), gmpy2.sqrt(e1 - e2))
            om2 = gmpy2.mpc(0, pi / gmpy2.agm(gmpy2.sqrt(e1 - e3), gmpy2.sqrt(e2 - e3)))
        else:
            (e1,) = _cubic_real_roots(c4, c6, work)
            g2 = gmpy2.mpfr(c4) / 12
            beta = gmpy2.sqrt(3 * e1 * e1 - g2 / 4)
            om1 = 2 * pi / gmpy2.agm(2 * gmpy2.sqrt(beta), gmpy2.sqrt(2 * beta + 3 * e1))
            om2 = gmpy2.mpc(om1 / 2, pi / gmpy2.agm(2 * gmpy2.sqrt(beta), gmpy2.sqrt(2 * beta - 3 * e1)))
        _eisenstein_check(c4, c6, om1, om2, bits)
    return om1, om2


def period_lattice(e: WeierstrassCurve, bits: int) -> tuple[BigComplex, BigComplex]:
    """Basis (om1 real, om2) of the period lattice of e, certified at bits."""
    om1, om2 = _periods_raw(int(e.c4), int(e.c6), bits)
    return BigComplex(om1, 0.0, bits), BigComplex(om2, 0.0, bits)


# ---------------------------------------------------------------------------
# Weierstrass exponential via Tate's q-series
# ---------------------------------------------------------------------------


def elliptic_exp(e: WeierstrassCurve, z: BigComplex, bits: int | None = None) -> CurvePoint:
    """Point of e(C) with elliptic logarithm z, coordinates as BigComplex.

    Raises NearPole when z is within tolerance of a lattice point.
    """
    if bits is None:
        bits = z.bits
    work = bits + 48
    om1, om2 = _periods_raw(int(e.c4), int(e.c6), work)
    with gmpy2.context(precision=work):
        w2r, w2i = om2.real, om2.imag
        t = gmpy2.mpfr(z.imag) / w2i
        s = (gmpy2.mpfr(z.real) - t * w2r) / om1
        s -= gmpy2.rint(s)
        t -= gmpy2.rint(t)
        tau = om2 / om1
        v = s + t * tau
        vmag = abs(v)
        if vmag < gmpy2.mpfr(2) ** (-max(16, bits // 4)):
            raise NearPole(f"logarithm within {float(vmag):.3e} of the lattice")
        twopii = gmpy2.mpc(0, 2 * gmpy2.const_pi())
        q = gmpy2.exp(twopii * tau)
        u = gmpy2.exp(twopii * v)
        uinv = 1 / u
        qabs = abs(q)
        nmax = int((work + 10) * math.log(2) / (-math.log(float(qabs))) + 1.5) + 2
        x_sum = u / (1 - u) ** 2
        y_sum = u * u / (1 - u) ** 3
        s1 = gmpy2.mpc(0)
        qn = gmpy2.mpc(1)
        for n in range(1, nmax + 1):
            qn *= q
            qu = qn * u
            qi = qn * uinv
            x_sum += qu / (1 - qu) ** 2 + qi / (1 - qi) ** 2 - 2 * qn / (1 - qn) ** 2
            y_sum += qu * qu / (1 - qu) ** 3 - qi / (1 - qi) ** 3
            s1 += n * qn / (1 - qn)
        y_sum += s1
        scale = 2 * gmpy2.const_pi() / om1  # lattice is om1 * (Z + Z tau)
        wp = -(scale * scale) * (x_sum + gmpy2.mpq(1, 12))
        wp_prime = gmpy2.mpc(0, -1) * scale**3 * (2 * y_sum + x_sum)
        b2 = _to_mpfr(e.b2)
        a1 = _to_mpfr(e.a1)
        a3 = _to_mpfr(e.a3)
        x = wp - b2 / 12
        y = (wp_prime - a1 * x - a3) / 2
        # first-order error transport: dx/dz = wp', dy/dz = (wp'' - a1 wp')/2
        g2 = gmpy2.mpfr(int(e.c4)) / 12
        wp2 = 6 * wp * wp - g2 / 2
        x_err = abs(wp_prime) * z.err + (abs(x) + 1) * 2.0 ** (-work + 16)
        y_err = (abs(wp2) + abs(a1) * abs(wp_prime)) / 2 * z.err + (abs(y) + 1) * 2.0 ** (-work + 16)
    pt = CurvePoint(e, BigComplex(x, float(x_err), bits), BigComplex(y, float(y_err), bits), False)
    if not pt.on_curve():
        raise ArithmeticError("exponential left the curve: precision bookkeeping is wrong")
    return pt


def _to_mpfr(a):
    if isinstance(a, Fraction):
        return gmpy2.mpfr(a.numerator) / a.denominator
    return gmpy2.mpfr(a)


# ---------------------------------------------------------------------------
# modular parametrization
# ---------------------------------------------------------------------------


def eval_modular_param(
    e: WeierstrassCurve,
    tau: HeegnerTau | BigComplex,
    digits: int,
    cap: int = COEFF_CAP,
) -> BigComplex:
    """z(tau) = sum a_n/n q^n with absolute error below 10^-digits.

    The tail after B terms is at most |q|^(B+1)/(1-|q|) since |a_n| <= n;
    B is chosen to push that below the target and must stay within cap.
    """
    if isinstance(tau, HeegnerTau):
        im_tau = math.sqrt(-tau.d) / (2 * tau.a)
        tau_err = 0.0
    else:
        im_tau = float(tau.imag)
        tau_err = tau.err
    if im_tau <= 0:
        raise ValueError("tau must lie in the upper half-plane")
    lnq = 2 * math.pi * im_tau  # -log|q|
    qabs = math.exp(-lnq)
    terms = int((digits * math.log(10) + math.log(4 / (1 - qabs))) / lnq) + 2
    terms = max(terms, 4)
    if terms > cap:
        raise PrecisionUnreachable(terms, cap)
    coeffs = anlist(e, terms).a
    bits = int(math.ceil(digits * math.log2(10))) + 32
    work = bits + 2 * terms.bit_length() + 16
    with gmpy2.context(precision=work):
        if isinstance(tau, HeegnerTau):
            tz = tau.numeric(work).z
        else:
            tz = gmpy2.mpc(tau.z)
        q = gmpy2.exp(gmpy2.mpc(0, 2 * gmpy2.const_pi()) * tz)
        acc = gmpy2.mpc(0)
        for n in range(terms, 0, -1):
            acc *= q
            c = int(coeffs[n])
            if c:
                acc += gmpy2.mpq(c, n)
        val = acc * q
    tail = max(math.exp(-(terms + 1) * lnq) / (1 - qabs), 1e-320)
    rounding = (2 * terms + 6) * (qabs / (1 - qabs) + 1) * 2.0 ** (-work)
    # the parametrization's derivative is bounded by 2 pi sum n^2 |q|^n
    slope = 2 * math.pi * qabs * (1 + qabs) / (1 - qabs) ** 3
    return BigComplex(val, tail + rounding + slope * tau_err, bits)


# ---------------------------------------------------------------------------
# algebraic recognition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeegnerPointResult:
    """Certified outcome of a Heegner point computation."""

    point: CurvePoint
    provenance: str  # "computed" | "ingested"
    complex_precision_used: int
    certified: bool
    height_bound: int


def _recover_fraction(x, err: float, den_bound: int) -> Fraction | None:
    """Minimal-denominator convergent of x within err, or None."""
    num, den = x.as_integer_ratio()
    fx = Fraction(int(num), int(den))
    tol = Fraction(max(err, 1e-320))
    p0, q0, p1, q1 = 1, 0, math.floor(fx), 1
    r = fx - p1
    while q1 <= den_bound:
        cand = Fraction(p1, q1)
        if abs(fx - cand) <= tol:
            return cand
        if r == 0:
            return None
        r = 1 / r
        a = math.floor(r)
        r -= a
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
    return None


def _embed(q: QuadElem, bits: int) -> BigComplex:
    """Numeric image of u + v sqrt(d) under sqrt(d) -> i sqrt(|d|)."""
    with gmpy2.context(precision=bits + 16):
        sq = gmpy2.sqrt(gmpy2.mpfr(-q.D))
        re = gmpy2.mpfr(q.u.numerator) / q.u.denominator
        im = (gmpy2.mpfr(q.v.numerator) / q.v.denominator) * sq
        z = gmpy2.mpc(re, im)
    return BigComplex(z, 0.0, bits)


def recognize_point(
    e: WeierstrassCurve,
    d: int,
    approx: CurvePoint,
    height_bound: int,
) -> HeegnerPointResult:
    """Exact point of e over Q(sqrt(d)) matching an approximate one.

    The x-coordinate is recovered by simultaneous rational reconstruction of
    (Re x, Im x / sqrt(|d|)) under a shared denominator bound; y is then
    solved exactly from the curve equation and matched in sign.  The result
    is certified only after an exact on-curve check plus numeric proximity.
    """
    if approx.infinity:
        raise RecognitionFailed("approximation is the point at infinity")
    ax, ay = approx.x, approx.y
    bits = ax.bits
    with gmpy2.context(precision=bits):
        sq = gmpy2.sqrt(gmpy2.mpfr(-d))
        u_val = gmpy2.mpfr(ax.real)
        v_val = gmpy2.mpfr(ax.imag) / sq
    u_err = 2 * ax.err + 2.0 ** (-bits + 8)
    v_err = 2 * ax.err / math.sqrt(-d) + 2.0 ** (-bits + 8)
    u = _recover_fraction(u_val, u_err, height_bound)
    v = _recover_fraction(v_val, v_err, height_bound)
    if u is None or v is None:
        raise RecognitionFailed(f"x does not fit denominators <= {height_bound} at {bits} bits")
    x = QuadElem.of(d, u, v)
    if not _embed(x, bits).close_to(ax):
        raise RecognitionFailed("recovered x drifted from the approximation")
    # y^2 + (a1 x + a3) y = rhs(x): solve exactly in the field
    lin = e.a1 * x + e.a3
    disc = lin * lin + 4 * (((x + e.a2) * x + e.a4) * x + e.a6)
    root = disc.sqrt()
    if root is None:
        raise RecognitionFailed("curve equation has no exact root over the field at recovered x")
    best = None
    for y in ((-lin + root) * Fraction(1, 2), (-lin - root) * Fraction(1, 2)):
        num = _embed(y, bits)
        dist = (num - ay).mag()
        if best is None or dist < best[0]:
            best = (dist, y, num)
    dist, y, num = best
    if not num.close_to(ay):
        raise RecognitionFailed("no exact y matches the approximation's sign")
    pt = CurvePoint(e, x, y, False)
    if not pt.on_curve():
        raise RecognitionFailed("recovered point is not exactly on the curve")
    return HeegnerPointResult(
        point=pt,
        provenance="computed",
        complex_precision_used=bits,
        certified=True,
        height_bound=height_bound,
    )


# ---------------------------------------------------------------------------
# the full trace pipeline
# ---------------------------------------------------------------------------


def _ingest(e: WeierstrassCurve, d: int, known) -> HeegnerPointResult:
    if isinstance(known, CurvePoint):
        pt = known
        if pt.curve != e:
            raise ValueError("ingested point belongs to a different curve")
    else:
        (ux, vx), (uy, vy) = known
        pt = CurvePoint(e, QuadElem.of(d, ux, vx), QuadElem.of(d, uy, vy), False)
    if not pt.on_curve():
        raise ValueError("ingested point is not on the curve")
    hb = 1
    for coord in (pt.x, pt.y):
        if isinstance(coord, QuadElem):
            hb = max(hb, coord.u.denominator, coord.v.denominator)
    return HeegnerPointResult(
        point=pt,
        provenance="ingested",
        complex_precision_used=0,
        certified=True,
        height_bound=hb,
    )


def heegner_point(
    e: WeierstrassCurve,
    d: int,
    digits: int = 64,
    height_bound: int = 10**10,
    cap: int = COEFF_CAP,
    known=None,
) -> HeegnerPointResult:
    """Heegner point of e over Q(sqrt(d)), defined up to sign and torsion.

    Sums the modular parametrization over one CM point per ideal class,
    exponentiates, and recognizes exact coordinates, escalating precision
    deterministically until recognition certifies.  A known point passed by
    the caller (dataset ingestion) short-circuits the computation.
    """
    if known is not None:
        return _ingest(e, d, known)
    if digits > MAX_DIGITS:
        raise ValueError(f"digits > {MAX_DIGITS} exceeds the error tracker's float range")
    n = e.conductor
    taus = heegner_tau_list(n, d)
    ladder = []
    dd = digits
    while dd <= MAX_DIGITS:
        ladder.append(dd)
        dd *= 2
    last_pole = None
    for rung in ladder:
        z = None
        for tau in taus:
            zt = eval_modular_param(e, tau, rung, cap)
            z = zt if z is None else z + zt
        try:
            approx = elliptic_exp(e, z)
            last_pole = None
        except NearPole as exc:
            last_pole = exc
            continue
        err = max(approx.x.err, 1e-320)
        hb = height_bound
        if err > 1e-18:
            hb = min(hb, math.isqrt(int(0.125 / err)))
        if hb < 1:
            continue
        try:
            return recognize_point(e, d, approx, hb)
        except RecognitionFailed:
            continue
    if last_pole is not None:
        # trace stayed at the lattice through every rung: report the origin,
        # uncertified, since a pole can only be asserted within tolerance
        return HeegnerPointResult(
            point=e.infinity(),
            provenance="computed",
            complex_precision_used=int(ladder[-1] * math.log2(10)),
            certified=False,
            height_bound=0,
        )
    raise RecognitionFailed(
        f"no certified point for {e} over Q(sqrt({d})) within {ladder[-1]} digits"
    )
