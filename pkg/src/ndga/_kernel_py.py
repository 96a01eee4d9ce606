"""Pure-Python monomial kernel.

Monomials are flat tuples ``(c0, e0, c1, e1, ...)`` of variable codes and
positive exponents, codes strictly increasing.  ``grades`` is a tuple giving
the integer degree of each code; ``annihilators`` is a frozenset of code
pairs ``(a, b)`` with ``a <= b`` whose product is zero.

This module must stay in lockstep with ``_kernel.pyx`` (the compiled twin);
``tests/test_kernel_lanes.py`` checks the two lanes agree.
"""

from __future__ import annotations


def monomial_grade(mon, grades):
    """Total degree of a monomial."""
    g = 0
    for k in range(0, len(mon), 2):
        g += grades[mon[k]] * mon[k + 1]
    return g


def mul_monomials(m1, m2, grades, annihilators):
    """Koszul-signed product of two normal monomials.

    Returns ``(sign, monomial)`` with sign in {1, -1}, or ``None`` when the
    product is annihilated (odd square or an annihilator pair).
    """
    n1 = len(m1)
    n2 = len(m2)
    if n1 == 0:
        m, a = m2, annihilators
        return (1, m) if _admissible(m, a) else None
    if n2 == 0:
        return 1, m1

    # parity of the m1 suffix starting at factor index k (flat offset 2k)
    nf1 = n1 // 2
    suffix = [0] * (nf1 + 1)
    for k in range(nf1 - 1, -1, -1):
        suffix[k] = (suffix[k + 1] + grades[m1[2 * k]] * m1[2 * k + 1]) & 1

    out = []
    i = j = 0
    sexp = 0
    while i < nf1 and 2 * j < n2:
        c1 = m1[2 * i]
        c2 = m2[2 * j]
        if c1 < c2:
            out.append(c1)
            out.append(m1[2 * i + 1])
            i += 1
        elif c2 < c1:
            e2 = m2[2 * j + 1]
            sexp ^= ((grades[c2] * e2) & 1) & suffix[i]
            out.append(c2)
            out.append(e2)
            j += 1
        else:
            if grades[c1] & 1:
                return None  # odd variable squared
            e2 = m2[2 * j + 1]
            sexp ^= ((grades[c2] * e2) & 1) & suffix[i + 1]
            out.append(c1)
            out.append(m1[2 * i + 1] + e2)
            i += 1
            j += 1
    while i < nf1:
        out.append(m1[2 * i])
        out.append(m1[2 * i + 1])
        i += 1
    while 2 * j < n2:
        out.append(m2[2 * j])
        out.append(m2[2 * j + 1])
        j += 1

    mon = tuple(out)
    if not _admissible(mon, annihilators):
        return None
    return (-1 if sexp else 1), mon


def _admissible(mon, annihilators):
    """False when the monomial contains an annihilator pair."""
    if not annihilators:
        return True
    nf = len(mon) // 2
    for a in range(nf):
        ca = mon[2 * a]
        if mon[2 * a + 1] >= 2 and (ca, ca) in annihilators:
            return False
        for b in range(a + 1, nf):
            if (ca, mon[2 * b]) in annihilators:
                return False
    return True


def partial_monomial(mon, code, grades):
    """Graded left partial derivative of a monomial by one variable.

    Returns ``(signed_coefficient, monomial)`` or ``None`` when the variable
    is absent.  The sign is the Koszul sign picked up by moving the
    derivative past the preceding factors.
    """
    pexp = 0
    for k in range(0, len(mon), 2):
        c = mon[k]
        if c == code:
            e = mon[k + 1]
            coeff = e
            if (grades[code] & 1) and (pexp & 1):
                coeff = -coeff
            if e == 1:
                newmon = mon[:k] + mon[k + 2:]
            else:
                newmon = mon[:k] + (c, e - 1) + mon[k + 2:]
            return coeff, newmon
        if c > code:
            return None
        pexp = (pexp + grades[c] * mon[k + 1]) & 1
    return None
