"""Throwaway oracle: signed-prime lists by brute force, no package imports.

Counts roots of the 2-division cubic mod ell by scanning all residues and
tests splitness with a Legendre pow. Used once to confirm frozen test values.
"""

def b_invs(a1, a2, a3, a4, a6):
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    return b2, b4, b6


def root_count(b2, b4, b6, ell):
    # 4x^3 + b2 x^2 + 2 b4 x + b6 mod ell, ell odd
    n = 0
    for x in range(ell):
        if (4 * x**3 + b2 * x**2 + 2 * b4 * x + b6) % ell == 0:
            n += 1
    return n


def legendre(a, p):
    a %= p
    if a == 0:
        return 0
    t = pow(a, (p - 1) // 2, p)
    return 1 if t == 1 else -1


def sieve(n):
    import numpy as np
    m = np.ones(n, dtype=bool)
    m[:2] = False
    for i in range(2, int(n ** 0.5) + 1):
        if m[i]:
            m[i * i::i] = False
    return [int(p) for p in np.nonzero(m)[0]]


def signed_list(ainvs, N, dK, bound, want):
    b2, b4, b6 = b_invs(*ainvs)
    out = []
    for ell in sieve(bound):
        if ell == 2 or N % ell == 0 or dK % ell == 0:
            continue
        if legendre(dK, ell) != 1:
            continue
        if root_count(b2, b4, b6, ell) != 0:  # irreducible <=> no roots
            continue
        out.append(ell if ell % 4 == 1 else -ell)
        if len(out) >= want:
            break
    return out


print("37a1:", signed_list((0, 0, 1, -1, 0), 37, -7, 700, 17))
print("11a1:", signed_list((0, -1, 1, -10, -20), 11, -7, 700, 17))
