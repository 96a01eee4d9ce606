# cython: boundscheck=False, wraparound=False
"""Compiled monomial kernel; behavioural twin of ``_kernel_py``."""


def monomial_grade(tuple mon, tuple grades):
    cdef Py_ssize_t k, n = len(mon)
    cdef long g = 0
    for k in range(0, n, 2):
        g += <long> grades[mon[k]] * <long> mon[k + 1]
    return g


cdef bint _admissible(list mon, frozenset annihilators):
    cdef Py_ssize_t a, b, nf = len(mon) // 2
    cdef object ca
    if annihilators is None or len(annihilators) == 0:
        return True
    for a in range(nf):
        ca = mon[2 * a]
        if <long> mon[2 * a + 1] >= 2 and (ca, ca) in annihilators:
            return False
        for b in range(a + 1, nf):
            if (ca, mon[2 * b]) in annihilators:
                return False
    return True


def mul_monomials(tuple m1, tuple m2, tuple grades, frozenset annihilators):
    cdef Py_ssize_t n1 = len(m1), n2 = len(m2)
    cdef Py_ssize_t i, j, k, nf1
    cdef long c1, c2, e2, sexp = 0
    cdef list out, suffix

    if n1 == 0:
        if _admissible(list(m2), annihilators):
            return 1, m2
        return None
    if n2 == 0:
        return 1, m1

    nf1 = n1 // 2
    suffix = [0] * (nf1 + 1)
    for k in range(nf1 - 1, -1, -1):
        suffix[k] = (<long> suffix[k + 1]
                     + <long> grades[m1[2 * k]] * <long> m1[2 * k + 1]) & 1

    out = []
    i = 0
    j = 0
    while i < nf1 and 2 * j < n2:
        c1 = m1[2 * i]
        c2 = m2[2 * j]
        if c1 < c2:
            out.append(m1[2 * i])
            out.append(m1[2 * i + 1])
            i += 1
        elif c2 < c1:
            e2 = m2[2 * j + 1]
            sexp ^= ((<long> grades[c2] * e2) & 1) & <long> suffix[i]
            out.append(m2[2 * j])
            out.append(m2[2 * j + 1])
            j += 1
        else:
            if <long> grades[c1] & 1:
                return None
            e2 = m2[2 * j + 1]
            sexp ^= ((<long> grades[c2] * e2) & 1) & <long> suffix[i + 1]
            out.append(m1[2 * i])
            out.append(<long> m1[2 * i + 1] + e2)
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

    if not _admissible(out, annihilators):
        return None
    return (-1 if sexp else 1), tuple(out)


def partial_monomial(tuple mon, long code, tuple grades):
    cdef Py_ssize_t k, n = len(mon)
    cdef long c, e, pexp = 0, coeff
    for k in range(0, n, 2):
        c = mon[k]
        if c == code:
            e = mon[k + 1]
            coeff = e
            if (<long> grades[code] & 1) and (pexp & 1):
                coeff = -coeff
            if e == 1:
                return coeff, mon[:k] + mon[k + 2:]
            return coeff, mon[:k] + (c, e - 1) + mon[k + 2:]
        if c > code:
            return None
        pexp = (pexp + <long> grades[c] * <long> mon[k + 1]) & 1
    return None
