"""Exact arithmetic substrate.

Rationals (stdlib Fraction), p-adic numbers with capped significant-digit
precision and explicit valuations, quadratic-field elements u + v*sqrt(D),
dense truncated power series, and high-precision complex values carrying a
conservative absolute error bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from .arith import inv_mod, kronecker, sqrt_mod_prime_power, valuation

__all__ = [
    "Rational",
    "PrecisionError",
    "NotSplit",
    "PadicNumber",
    "padic_from_rational",
    "QuadElem",
    "QuadEmbedding",
    "quad_embeddings",
    "PowerSeries",
    "series_integrate_formal",
    "BigComplex",
    "rational_sqrt",
]

# The spec-level Rational type: stdlib Fraction already guarantees the
# reduced-form, positive-denominator invariants.
Rational = Fraction


class PrecisionError(ArithmeticError):
    """An operation would have to claim more p-adic precision than it has."""


class NotSplit(ValueError):
    """The prime does not split in the requested quadratic field."""


# ---------------------------------------------------------------------------
# p-adic numbers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PadicNumber:
    """p^val * unit with unit known modulo p^prec.

    prec counts significant digits.  prec = 0 means "zero to precision":
    the value is only known to be divisible by p^val.  exact_zero marks a
    true zero (infinite valuation); it is never conflated with prec = 0.
    """

    p: int
    val: int
    unit: int
    prec: int
    exact_zero: bool = False

    # -- construction -------------------------------------------------------

    @staticmethod
    def make(p: int, val: int, unit: int, prec: int) -> "PadicNumber":
        """Normalize so unit is a unit mod p (or the value degrades to O(p^val))."""
        if prec <= 0:
            return PadicNumber(p, val, 0, 0)
        m = p**prec
        unit %= m
        if unit == 0:
            # all carried digits vanished: only divisibility by p^(val+prec) is known
            return PadicNumber(p, val + prec, 0, 0)
        s = valuation(unit, p)
        if s:
            val += s
            prec -= s
            unit = (unit // p**s) % p**prec
        return PadicNumber(p, val, unit, prec)

    @staticmethod
    def zero(p: int) -> "PadicNumber":
        return PadicNumber(p, 0, 0, 0, True)

    @staticmethod
    def from_rational(x: Fraction | int, p: int, prec: int) -> "PadicNumber":
        x = Fraction(x)
        if x == 0:
            return PadicNumber.zero(p)
        num, den = x.numerator, x.denominator
        a = valuation(num, p)
        b = valuation(den, p)
        num //= p**a
        den //= p**b
        m = p**prec
        unit = num * inv_mod(den, m) % m
        return PadicNumber.make(p, a - b, unit, prec)

    # -- predicates and accessors -------------------------------------------

    @property
    def known_mod(self) -> int | None:
        """Exponent n with the value known mod p^n; None means exactly known."""
        if self.exact_zero:
            return None
        return self.val + self.prec

    def is_exact_zero(self) -> bool:
        return self.exact_zero

    def is_zero_to_precision(self) -> bool:
        return self.exact_zero or self.unit == 0

    def valuation_lower_bound(self) -> int:
        if self.exact_zero:
            raise ValueError("exact zero has infinite valuation")
        return self.val

    @property
    def valuation_is_exact(self) -> bool:
        return (not self.exact_zero) and self.prec > 0

    def is_unit(self) -> bool:
        """Provably a p-adic unit (valuation exactly 0)."""
        return self.valuation_is_exact and self.val == 0

    def unit_mod(self, k: int) -> int:
        """The unit part mod p^k; requires k <= prec."""
        if not self.valuation_is_exact:
            raise PrecisionError("no significant digits available")
        if k > self.prec:
            raise PrecisionError(f"requested {k} digits, have {self.prec}")
        return self.unit % self.p**k

    def residue_mod(self, m: int) -> int:
        """The value mod p^m as an integer in [0, p^m); requires val >= 0."""
        if self.exact_zero:
            return 0
        if self.val >= m:
            return 0
        if self.val < 0:
            raise ValueError("negative valuation has no residue mod p^m")
        if self.known_mod < m:
            raise PrecisionError(f"value known only mod p^{self.known_mod}")
        return self.unit * self.p**self.val % self.p**m

    # -- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "PadicNumber":
        if isinstance(other, PadicNumber):
            if other.p != self.p:
                raise ValueError("mixed primes")
            return other
        if isinstance(other, (int, Fraction)):
            # exact input: give it the same working precision
            return PadicNumber.from_rational(other, self.p, max(self.prec, 1))
        return NotImplemented

    def __add__(self, other):
        if self.exact_zero and isinstance(other, (int, Fraction)):
            # exact plus exact: coercion would invent a finite precision
            return other
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.exact_zero:
            return o
        if o.exact_zero:
            return self
        a, b = (self, o) if self.val <= o.val else (o, self)
        d = b.val - a.val
        m = min(a.prec, d + b.prec)
        if m <= 0:
            return PadicNumber(self.p, a.val, 0, 0)
        u = (a.unit + b.unit * self.p**d) % self.p**m
        return PadicNumber.make(self.p, a.val, u, m)

    __radd__ = __add__

    def __neg__(self):
        if self.exact_zero:
            return self
        if self.prec == 0:
            return self
        return PadicNumber(self.p, self.val, (-self.unit) % self.p**self.prec, self.prec)

    def __sub__(self, other):
        if self.exact_zero and isinstance(other, (int, Fraction)):
            return -other
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.exact_zero or o.exact_zero:
            return PadicNumber.zero(self.p)
        prec = min(self.prec, o.prec)
        if prec == 0:
            return PadicNumber(self.p, self.val + o.val, 0, 0)
        return PadicNumber.make(self.p, self.val + o.val, self.unit * o.unit, prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.exact_zero:
            raise ZeroDivisionError("p-adic division by exact zero")
        if o.prec == 0:
            raise PrecisionError("division by a value that is zero to precision")
        if self.exact_zero:
            return self
        prec = min(self.prec, o.prec)
        if prec == 0:
            return PadicNumber(self.p, self.val - o.val, 0, 0)
        inv = inv_mod(o.unit % self.p**prec, self.p**prec)
        return PadicNumber.make(self.p, self.val - o.val, self.unit * inv, prec)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __pow__(self, n: int):
        if n < 0:
            return 1 / (self ** (-n))
        result = PadicNumber.from_rational(1, self.p, max(self.prec, 1))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def shift(self, k: int) -> "PadicNumber":
        """Multiply by the exact power p^k."""
        if self.exact_zero:
            return self
        return PadicNumber(self.p, self.val + k, self.unit, self.prec)

    # -- congruence testing ---------------------------------------------------

    def congruent_mod(self, other, m: int) -> bool:
        """Whether self = other mod p^m, aborting if either side carries < m digits."""
        o = self._coerce(other)
        for x in (self, o):
            if not x.exact_zero and x.known_mod < m:
                raise PrecisionError(
                    f"operand known only mod {x.p}^{x.known_mod}, need mod {x.p}^{m}"
                )
        diff = self - o
        if diff.exact_zero:
            return True
        return diff.val >= m

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.val, self.unit, self.prec)

    def __str__(self) -> str:
        if self.exact_zero:
            return "0 (exact)"
        if self.prec == 0:
            return f"O({self.p}^{self.val})"
        digits = []
        u = self.unit
        for i in range(self.prec):
            d = u % self.p
            if d:
                term = f"{self.p}^{self.val + i}" if self.val + i != 1 else str(self.p)
                if self.val + i == 0:
                    term = "1"
                digits.append(term if d == 1 else f"{d}*{term}")
            u //= self.p
        body = " + ".join(digits) if digits else "0"
        return f"{body} + O({self.p}^{self.val + self.prec})"

    def __repr__(self) -> str:
        if self.exact_zero:
            return f"PadicNumber({self.p}, exact_zero)"
        return f"PadicNumber(p={self.p}, val={self.val}, unit={self.unit}, prec={self.prec})"


def padic_from_rational(x: Fraction | int, p: int, prec: int) -> PadicNumber:
    """Exact rational -> p-adic with exactly prec significant digits."""
    return PadicNumber.from_rational(x, p, prec)


# ---------------------------------------------------------------------------
# quadratic field elements
# ---------------------------------------------------------------------------


def rational_sqrt(x: Fraction) -> Fraction | None:
    """Exact square root of a rational, or None."""
    if x < 0:
        return None
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class QuadElem:
    """u + v*sqrt(D) with exact rational u, v and fundamental discriminant D."""

    D: int
    u: Fraction
    v: Fraction

    @staticmethod
    def of(D: int, u, v=0) -> "QuadElem":
        return QuadElem(D, Fraction(u), Fraction(v))

    def _coerce(self, other):
        if isinstance(other, QuadElem):
            if other.D != self.D:
                raise ValueError("mixed discriminants")
            return other
        if isinstance(other, (int, Fraction)):
            return QuadElem(self.D, Fraction(other), Fraction(0))
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadElem(self.D, self.u + o.u, self.v + o.v)

    __radd__ = __add__

    def __neg__(self):
        return QuadElem(self.D, -self.u, -self.v)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadElem(self.D, self.u - o.u, self.v - o.v)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadElem(
            self.D, self.u * o.u + self.D * self.v * o.v, self.u * o.v + self.v * o.u
        )

    __rmul__ = __mul__

    def conjugate(self) -> "QuadElem":
        return QuadElem(self.D, self.u, -self.v)

    def norm(self) -> Fraction:
        return self.u * self.u - self.D * self.v * self.v

    def trace(self) -> Fraction:
        return 2 * self.u

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        n = o.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        c = self * o.conjugate()
        return QuadElem(self.D, c.u / n, c.v / n)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __bool__(self) -> bool:
        return bool(self.u) or bool(self.v)

    def is_rational(self) -> bool:
        return self.v == 0

    def sqrt(self) -> "QuadElem | None":
        """An exact square root in the same field, or None."""
        s, t = self.u, self.v
        if t == 0:
            r = rational_sqrt(s)
            if r is not None:
                return QuadElem(self.D, r, Fraction(0))
            r = rational_sqrt(s / self.D)
            if r is not None:
                return QuadElem(self.D, Fraction(0), r)
            return None
        # (a + b sqrt(D))^2 = a^2 + D b^2 + 2ab sqrt(D): a^2 solves a quadratic
        disc = rational_sqrt(s * s - self.D * t * t)
        if disc is None:
            return None
        for a2 in ((s + disc) / 2, (s - disc) / 2):
            a = rational_sqrt(a2)
            if a is not None and a != 0:
                b = t / (2 * a)
                cand = QuadElem(self.D, a, b)
                if cand * cand == self:
                    return cand
        return None

    def __str__(self) -> str:
        return f"{self.u} + {self.v}*sqrt({self.D})"


@dataclass(frozen=True)
class QuadEmbedding:
    """One of the two embeddings Q(sqrt(D)) -> Q_p at a split prime."""

    D: int
    p: int
    prec: int
    sqrtD: PadicNumber

    def __call__(self, z: QuadElem | Fraction | int) -> PadicNumber:
        if isinstance(z, (int, Fraction)):
            return PadicNumber.from_rational(z, self.p, self.prec)
        if z.D != self.D:
            raise ValueError("element from a different field")
        out = PadicNumber.from_rational(z.u, self.p, self.prec)
        if z.v:
            out = out + PadicNumber.from_rational(z.v, self.p, self.prec) * self.sqrtD
        return out

    def conjugate_embedding(self) -> "QuadEmbedding":
        return QuadEmbedding(self.D, self.p, self.prec, -self.sqrtD)


def quad_embeddings(D: int, p: int, prec: int) -> tuple[QuadEmbedding, QuadEmbedding]:
    """The two embeddings of Q(sqrt(D)) into Q_p, for p split in the field.

    Split test: for p = 2 this means D = 1 mod 8; for odd p, (D|p) = 1.
    """
    if p == 2:
        if D % 8 != 1:
            raise NotSplit(f"2 does not split: D = {D} is not 1 mod 8")
    else:
        if D % p == 0 or kronecker(D, p) != 1:
            raise NotSplit(f"{p} does not split in Q(sqrt({D}))")
    r = sqrt_mod_prime_power(D, p, prec)
    root = PadicNumber.make(p, 0, r, prec)
    e1 = QuadEmbedding(D, p, prec, root)
    return e1, e1.conjugate_embedding()


# ---------------------------------------------------------------------------
# truncated power series
# ---------------------------------------------------------------------------


class PowerSeries:
    """Dense truncated series sum c_n x^n, n < order; coefficients in any ring.

    Binary operations truncate to the smaller order.  Coefficients default to
    Fraction but PadicNumber coefficients work the same way.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order: int | None = None):
        coeffs = list(coeffs)
        if order is None:
            order = len(coeffs)
        if len(coeffs) < order:
            coeffs = coeffs + [Fraction(0)] * (order - len(coeffs))
        self.coeffs = tuple(coeffs[:order])
        self.order = order

    @staticmethod
    def zero(order: int) -> "PowerSeries":
        return PowerSeries([Fraction(0)] * order, order)

    @staticmethod
    def identity(order: int) -> "PowerSeries":
        c = [Fraction(0)] * order
        if order > 1:
            c[1] = Fraction(1)
        return PowerSeries(c, order)

    def __getitem__(self, n: int):
        return self.coeffs[n]

    def __eq__(self, other):
        return (
            isinstance(other, PowerSeries)
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    def __hash__(self):
        return hash((self.coeffs, self.order))

    def _binop(self, other, f):
        order = min(self.order, other.order)
        return PowerSeries(
            [f(a, b) for a, b in zip(self.coeffs[:order], other.coeffs[:order])], order
        )

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __neg__(self):
        return PowerSeries([-a for a in self.coeffs], self.order)

    def scale(self, c) -> "PowerSeries":
        return PowerSeries([c * a for a in self.coeffs], self.order)

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            return self.scale(other)
        order = min(self.order, other.order)
        out = [Fraction(0)] * order
        for i, a in enumerate(self.coeffs[:order]):
            if not a:
                continue
            for j in range(order - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] += a * b
        return PowerSeries(out, order)

    __rmul__ = scale

    def truncate(self, order: int) -> "PowerSeries":
        return PowerSeries(self.coeffs[:order], min(order, self.order))

    def valuation(self) -> int:
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return self.order

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """self(inner(x)); inner must have zero constant term."""
        if inner.order > 0 and inner.coeffs[0]:
            raise ValueError("composition needs valuation >= 1")
        order = min(self.order, inner.order)
        result = PowerSeries.zero(order)
        power = PowerSeries([Fraction(1)], order)
        for k in range(order):
            c = self.coeffs[k] if k < self.order else Fraction(0)
            if c:
                result = result + power.scale(c)
            power = (power * inner).truncate(order)
        return result

    def inverse(self) -> "PowerSeries":
        """Multiplicative inverse; constant term must be invertible."""
        c0 = self.coeffs[0]
        ring_zero = c0 - c0
        out = [1 / c0]
        for n in range(1, self.order):
            s = ring_zero
            for k in range(1, n + 1):
                if k < self.order and self.coeffs[k]:
                    s = s + self.coeffs[k] * out[n - k]
            out.append(-s / c0)
        return PowerSeries(out, self.order)

    def derivative(self) -> "PowerSeries":
        return PowerSeries(
            [n * self.coeffs[n] for n in range(1, self.order)], self.order - 1
        )

    def integrate(self) -> "PowerSeries":
        """Termwise c_n x^n -> c_n x^(n+1)/(n+1), constant 0; order grows by 1."""
        out = [Fraction(0)]
        for n, c in enumerate(self.coeffs):
            out.append(c / (n + 1))
        return PowerSeries(out, self.order + 1)

    def evaluate(self, x):
        """Horner evaluation of the truncated polynomial at x."""
        acc = None
        for c in reversed(self.coeffs):
            if acc is None:
                acc = c
            else:
                acc = acc * x + c
        return acc

    def __str__(self) -> str:
        terms = []
        for n, c in enumerate(self.coeffs):
            if c:
                terms.append(f"({c})*x^{n}")
        return " + ".join(terms) + f" + O(x^{self.order})" if terms else f"O(x^{self.order})"


def series_integrate_formal(s: PowerSeries) -> PowerSeries:
    """Formal termwise integration with zero constant of integration."""
    return s.integrate()


# ---------------------------------------------------------------------------
# high-precision complex with conservative error bounds
# ---------------------------------------------------------------------------


def _ulp(z: "gmpy2.mpc", bits: int) -> float:
    m = max(abs(float(z.real)), abs(float(z.imag)), 1e-290)
    return m * 2.0 ** (1 - bits)


class BigComplex:
    """gmpy2-backed complex number with a tracked absolute error bound."""

    __slots__ = ("z", "err", "bits")

    def __init__(self, z, err: float = 0.0, bits: int | None = None):
        if bits is None:
            bits = gmpy2.get_context().precision
        with gmpy2.context(precision=bits):
            self.z = gmpy2.mpc(z)
        self.bits = bits
        self.err = float(err) + _ulp(self.z, bits)

    @staticmethod
    def from_exact(re, im, bits: int) -> "BigComplex":
        with gmpy2.context(precision=bits):
            zr = gmpy2.mpfr(re.numerator) / gmpy2.mpfr(re.denominator) if isinstance(re, Fraction) else gmpy2.mpfr(re)
            zi = gmpy2.mpfr(im.numerator) / gmpy2.mpfr(im.denominator) if isinstance(im, Fraction) else gmpy2.mpfr(im)
            z = gmpy2.mpc(zr, zi)
        return BigComplex(z, 0.0, bits)

    def _pair(self, other) -> tuple["BigComplex", int]:
        if not isinstance(other, BigComplex):
            other = BigComplex(other, 0.0, self.bits)
        return other, min(self.bits, other.bits)

    @property
    def real(self):
        return self.z.real

    @property
    def imag(self):
        return self.z.imag

    def mag(self) -> float:
        return float(gmpy2.sqrt(self.z.real**2 + self.z.imag**2))

    def __add__(self, other):
        o, bits = self._pair(other)
        with gmpy2.context(precision=bits):
            w = self.z + o.z
        return BigComplex(w, self.err + o.err, bits)

    __radd__ = __add__

    def __neg__(self):
        return BigComplex(-self.z, self.err, self.bits)

    def __sub__(self, other):
        o, bits = self._pair(other)
        with gmpy2.context(precision=bits):
            w = self.z - o.z
        return BigComplex(w, self.err + o.err, bits)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o, bits = self._pair(other)
        with gmpy2.context(precision=bits):
            w = self.z * o.z
        err = self.err * o.mag() + o.err * self.mag() + self.err * o.err
        return BigComplex(w, err, bits)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o, bits = self._pair(other)
        om = o.mag()
        if om <= 2 * o.err:
            raise PrecisionError("complex division by a value indistinguishable from 0")
        with gmpy2.context(precision=bits):
            w = self.z / o.z
        err = (self.err + (self.mag() / om) * o.err) / (om - o.err)
        return BigComplex(w, err, bits)

    def __rtruediv__(self, other):
        o, _ = self._pair(other)
        return o / self

    def conjugate(self) -> "BigComplex":
        return BigComplex(gmpy2.mpc(self.z.real, -self.z.imag), self.err, self.bits)

    def exp(self) -> "BigComplex":
        with gmpy2.context(precision=self.bits):
            w = gmpy2.exp(self.z)
        wm = float(gmpy2.exp(self.z.real))
        err = wm * math.expm1(min(self.err, 700.0))
        return BigComplex(w, err, self.bits)

    def sqrt(self) -> "BigComplex":
        with gmpy2.context(precision=self.bits):
            w = gmpy2.sqrt(self.z)
        m = self.mag()
        if m <= 2 * self.err:
            err = math.sqrt(self.err) if self.err > 0 else 0.0
        else:
            err = self.err / (2 * math.sqrt(m - self.err))
        return BigComplex(w, err, self.bits)

    def close_to(self, other) -> bool:
        o, bits = self._pair(other)
        with gmpy2.context(precision=bits):
            d = self.z - o.z
        dm = float(gmpy2.sqrt(d.real**2 + d.imag**2))
        return dm <= self.err + o.err + _ulp(self.z, bits) * 4

    def __complex__(self) -> complex:
        return complex(float(self.z.real), float(self.z.imag))

    def __repr__(self) -> str:
        return f"BigComplex({self.z}, err={self.err:.3e}, bits={self.bits})"
