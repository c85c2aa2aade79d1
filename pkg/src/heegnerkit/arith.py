"""Integer utilities shared across the package.

Primality, prime sieves, Kronecker symbols, modular square roots and
factorization at the scales the rest of the library needs.  Everything here
is exact integer arithmetic.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

__all__ = [
    "primes_up_to",
    "prime_range",
    "is_prime",
    "next_prime",
    "valuation",
    "inv_mod",
    "kronecker",
    "is_square",
    "is_squarefree",
    "is_fundamental_discriminant",
    "sqrt_mod_prime_power",
    "crt",
    "factorize",
    "squarefree_part",
]


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n as an int64 array (simple sieve)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.nonzero(sieve)[0].astype(np.int64)


def prime_range(lo: int, hi: int) -> list[int]:
    """Primes in [lo, hi) as plain ints."""
    ps = primes_up_to(hi - 1)
    return [int(p) for p in ps[ps >= lo]]


_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; the witness set covers n < 3.3e24."""
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _SMALL_PRIMES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    n += 1
    while not is_prime(n):
        n += 1
    return n


def valuation(n: int, p: int) -> int:
    """v_p(n) for n != 0."""
    if n == 0:
        raise ValueError("valuation of zero is undefined here")
    v = 0
    n = abs(n)
    while n % p == 0:
        n //= p
        v += 1
    return v


def inv_mod(a: int, m: int) -> int:
    """Inverse of a mod m; raises ValueError when gcd(a, m) != 1."""
    return pow(a, -1, m)


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n) with the standard conventions at 2, -1, 0."""
    if n == 0:
        return 1 if a in (1, -1) else 0
    sign = 1
    if n < 0:
        n = -n
        if a < 0:
            sign = -1
    # factor out 2s of n; (a|2) = 0, 1, -1 for a even, a = +-1 mod 8, else
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            sign = -sign
    a %= n
    # standard Jacobi loop
    while a != 0:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def is_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def is_squarefree(n: int) -> bool:
    n = abs(n)
    if n == 0:
        return False
    for p, e in factorize(n).items():
        if e > 1:
            return False
    return True


def is_fundamental_discriminant(d: int) -> bool:
    """d = 1 mod 4 squarefree, or d = 4m with m = 2,3 mod 4 squarefree; d != 1."""
    if d == 1 or d == 0:
        return False
    if d % 4 == 1:
        return is_squarefree(d)
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(m)
    return False


def _sqrt_mod_prime(a: int, p: int) -> int:
    """Tonelli-Shanks; a must be a QR mod odd prime p."""
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    if p % 8 == 5:
        x = pow(a, (p + 3) // 8, p)
        if x * x % p != a:
            x = x * pow(2, (p - 1) // 4, p) % p
        return x
    # general Tonelli-Shanks
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while kronecker(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        t2, i = t * t % p, 1
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def sqrt_mod_prime_power(a: int, p: int, k: int) -> int:
    """A solution of x^2 = a mod p^k that lifts to a p-adic root of a.

    Requires a to be a unit square mod p^k (for p = 2 that means a = 1 mod 8
    once k >= 3).  Raises ValueError when no lift exists.  For p = 2 the
    result is the reduction of a genuine 2-adic root of a (computed two bits
    deeper), not merely one of the four residues squaring to a mod 2^k.

    Pass a as an exact integer: for p = 2 the answer depends on a mod 2^(k+2),
    so pre-truncating a below that feeds in a different 2-adic number.
    """
    pk = p**k
    if p == 2:
        a %= p ** (k + 2)
        if k == 1:
            return a % 2
        if k == 2:
            if a % 4 == 1:
                return 1
            raise ValueError("not a square mod 4")
        if a % 8 != 1:
            raise ValueError("not a square mod 8")
        # lift bit by bit: (r + c*2^(j-1))^2 = r^2 + c*2^j  (mod 2^(j+1)), j >= 3.
        # Lift two bits past k so the result is the reduction of a genuine
        # 2-adic root (mod 2^k there are four roots; only +/-r lift further).
        r = 1
        for j in range(3, k + 2):
            if (r * r - a) >> j & 1:
                r += 1 << (j - 1)
        return r % pk
    a %= pk
    if kronecker(a, p) != 1:
        raise ValueError("not a square mod p")
    r = _sqrt_mod_prime(a, p)
    pj = p
    while pj < pk:
        # Newton step doubles the exponent
        pj = min(pj * pj, pk)
        r = (r - (r * r - a) * inv_mod(2 * r, pj)) % pj
    return r % pk


def crt(residues: list[int], moduli: list[int]) -> int:
    """Chinese remainder for pairwise coprime moduli."""
    x, m = 0, 1
    for r, n in zip(residues, moduli):
        t = (r - x) * inv_mod(m % n, n) % n
        x += m * t
        m *= n
    return x % m


def _pollard_rho(n: int) -> int:
    if n % 2 == 0:
        return 2
    import random

    rng = random.Random(0xC0FFEE ^ n)
    while True:
        c = rng.randrange(1, n)
        f = lambda x: (x * x + c) % n
        x = y = rng.randrange(2, n)
        d = 1
        while d == 1:
            x = f(x)
            y = f(f(y))
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of |n| as {p: e}; n must be nonzero."""
    return dict(_factorize_cached(abs(n)))


@lru_cache(maxsize=65536)
def _factorize_cached(n: int) -> tuple[tuple[int, int], ...]:
    if n == 0:
        raise ValueError("cannot factor 0")
    out: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f = 7
    wheel = (4, 2, 4, 2, 4, 6, 2, 6)
    i = 0
    while f * f <= n and f < 10**6:
        if n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        else:
            f += wheel[i]
            i = (i + 1) % 8
    if n > 1:
        if is_prime(n):
            out[n] = out.get(n, 0) + 1
        else:
            d = _pollard_rho(n)
            for q, e in factorize(d).items():
                out[q] = out.get(q, 0) + e
            for q, e in factorize(n // d).items():
                out[q] = out.get(q, 0) + e
    return tuple(sorted(out.items()))


def squarefree_part(n: int) -> int:
    """The squarefree d with n = d * (square), keeping the sign of n."""
    sign = -1 if n < 0 else 1
    d = 1
    for p, e in factorize(n).items():
        if e % 2:
            d *= p
    return sign * d


def divisors(n: int) -> list[int]:
    """Positive divisors of |n|, ascending."""
    ds = [1]
    for p, e in factorize(n).items():
        ds = [d * p**i for d in ds for i in range(e + 1)]
    return sorted(ds)
