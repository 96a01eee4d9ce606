"""Exact rational dense matrices.

Small helper layer over tuples of tuples of Fractions: products, row
reduction, ranks, kernels and span membership.  Row reduction picks the
first nonzero entry in column order as pivot, so reduced forms, ranks and
kernel bases are deterministic.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Matrix = tuple  # tuple of row tuples

__all__ = [
    "matrix",
    "identity",
    "zeros",
    "shape",
    "matmul",
    "matvec",
    "transpose",
    "rref",
    "rank",
    "kernel_basis",
    "column_space_basis",
    "in_span",
    "inverse",
]


def matrix(rows: Iterable[Iterable]) -> Matrix:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def identity(n: int) -> Matrix:
    return tuple(
        tuple(Fraction(1) if i == j else Fraction(0) for j in range(n)) for i in range(n)
    )


def zeros(r: int, c: int) -> Matrix:
    return tuple(tuple(Fraction(0) for _ in range(c)) for _ in range(r))


def shape(M: Matrix) -> tuple[int, int]:
    return (len(M), len(M[0]) if M else 0)


def matmul(A: Matrix, B: Matrix) -> Matrix:
    ra, ca = shape(A)
    rb, cb = shape(B)
    if ca != rb:
        raise ValueError(f"shape mismatch: {ra}x{ca} times {rb}x{cb}")
    Bt = transpose(B)
    return tuple(
        tuple(sum(a * b for a, b in zip(row, col)) for col in Bt) for row in A
    )


def matvec(A: Matrix, v: Sequence) -> tuple:
    return tuple(sum(a * b for a, b in zip(row, v)) for row in A)


def transpose(M: Matrix) -> Matrix:
    r, c = shape(M)
    return tuple(tuple(M[i][j] for i in range(r)) for j in range(c))


def rref(M: Matrix) -> tuple[Matrix, tuple[int, ...]]:
    """Reduced row echelon form and the pivot column indices."""
    rows = [list(r) for r in M]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for col in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if rows[i][col]:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = Fraction(1) / rows[r][col]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    return tuple(tuple(row) for row in rows), tuple(pivots)


def rank(M: Matrix) -> int:
    if not M or not M[0]:
        return 0
    return len(rref(M)[1])


def kernel_basis(M: Matrix) -> list[tuple]:
    """Basis of the right null space, canonical (one free column each)."""
    r, c = shape(M)
    if c == 0:
        return []
    if r == 0:
        return [tuple(Fraction(1) if j == i else Fraction(0) for j in range(c)) for i in range(c)]
    R, pivots = rref(M)
    pivot_set = set(pivots)
    free = [j for j in range(c) if j not in pivot_set]
    basis = []
    for f in free:
        v = [Fraction(0)] * c
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -R[i][f]
        basis.append(tuple(v))
    return basis


def column_space_basis(M: Matrix) -> list[tuple]:
    """Columns of M at the pivot positions of its reduced form."""
    if not M or not M[0]:
        return []
    _, pivots = rref(M)
    Mt = transpose(M)
    return [Mt[p] for p in pivots]


def in_span(vectors: Sequence[Sequence], v: Sequence) -> bool:
    """Membership of v in the row span of the vectors."""
    if not vectors:
        return all(x == 0 for x in v)
    A = matrix(vectors)
    return rank(A) == rank(A + (tuple(Fraction(x) for x in v),))


def inverse(M: Matrix) -> Matrix:
    n, m = shape(M)
    if n != m:
        raise ValueError("only square matrices invert")
    aug = tuple(tuple(M[i]) + tuple(identity(n)[i]) for i in range(n))
    R, pivots = rref(aug)
    if tuple(pivots) != tuple(range(n)):
        raise ValueError("matrix is singular")
    return tuple(row[n:] for row in R)
