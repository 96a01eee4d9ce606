"""Finite-dimensional complexes with a higher-nilpotent differential.

An :class:`NComplex` stores per-degree dimensions and exact rational
matrices for the degree-one map; the composite of ``order`` consecutive
maps must vanish.  The generalized cohomology in degree i with exponent p
is the kernel of the p-fold composite modulo the image of the
(order - p)-fold composite; kernels, images and quotient representatives
are computed by exact row reduction with deterministic pivoting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from . import linalg
from .galgebra import AlgebraError

__all__ = ["NComplex", "ComplexVerdict", "CohomologyResult", "check_ncomplex", "cohomology"]


@dataclass(frozen=True)
class ComplexVerdict:
    valid: bool
    proper: bool
    failure: "tuple[int, int] | None" = None  # (degree, composite length)

    def to_json(self) -> dict:
        doc = {"valid": self.valid, "proper": self.proper}
        if self.failure:
            doc["failure"] = {"degree": self.failure[0], "length": self.failure[1]}
        return doc


@dataclass(frozen=True)
class CohomologyResult:
    p: int
    degree: int
    dimension: int
    kernel_dim: int
    image_rank: int
    representatives: tuple

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "degree": self.degree,
            "dimension": self.dimension,
            "kernel_dim": self.kernel_dim,
            "image_rank": self.image_rank,
            "representatives": [[str(x) for x in v] for v in self.representatives],
        }


class NComplex:
    """A graded vector space with a degree-one map, nilpotent of the stated
    order.  Matrices act on column vectors; the map out of degree i has
    shape dim(i+1) x dim(i)."""

    def __init__(self, order: int, dims: dict[int, int], maps: dict[int, "linalg.Matrix"]):
        if order < 1:
            raise AlgebraError("complex order must be >= 1")
        self.order = order
        self.dims = {i: d for i, d in dims.items() if d}
        self.maps = {}
        for i, M in maps.items():
            M = linalg.matrix(M)
            r, c = linalg.shape(M)
            if c != self.dim(i) or r != self.dim(i + 1):
                raise AlgebraError(
                    f"map at degree {i} has shape {r}x{c}, expected "
                    f"{self.dim(i + 1)}x{self.dim(i)}"
                )
            self.maps[i] = M

    def dim(self, i: int) -> int:
        return self.dims.get(i, 0)

    def map_at(self, i: int) -> "linalg.Matrix":
        d_in, d_out = self.dim(i), self.dim(i + 1)
        return self.maps.get(i, linalg.zeros(d_out, d_in))

    def degrees(self) -> list[int]:
        return sorted(self.dims)

    def composite(self, i: int, k: int) -> "linalg.Matrix":
        """The k-fold composite out of degree i (identity when k = 0)."""
        if any(self.dim(i + s) == 0 for s in range(k + 1)):
            return linalg.zeros(self.dim(i + k), self.dim(i))
        M = linalg.identity(self.dim(i))
        for step in range(k):
            M = linalg.matmul(self.map_at(i + step), M)
        return M

    @classmethod
    def from_json(cls, doc: dict) -> "NComplex":
        dims: dict[int, int] = {}
        maps: dict[int, list] = {}
        for key, entry in doc.get("degrees", {}).items():
            i = int(key)
            dims[i] = int(entry["dim"])
            if "map" in entry and entry["map"]:
                maps[i] = [[Fraction(str(x)) for x in row] for row in entry["map"]]
        return cls(int(doc["order"]), dims, maps)

    def to_json(self) -> dict:
        degrees = {}
        for i in self.degrees():
            entry: dict = {"dim": self.dim(i)}
            if i in self.maps:
                entry["map"] = [[str(x) for x in row] for row in self.maps[i]]
            degrees[str(i)] = entry
        return {"order": self.order, "degrees": degrees}


def check_ncomplex(C: NComplex) -> ComplexVerdict:
    """Verify the order-fold composite vanishes everywhere; report
    properness (some (order-1)-fold composite nonzero)."""
    failure = None
    for i in C.degrees():
        M = C.composite(i, C.order)
        if any(any(x for x in row) for row in M):
            failure = (i, C.order)
            break
    proper = False
    if failure is None and C.order > 1:
        for i in C.degrees():
            M = C.composite(i, C.order - 1)
            if any(any(x for x in row) for row in M):
                proper = True
                break
    return ComplexVerdict(failure is None, proper, failure)


def cohomology(C: NComplex, p: int, i: int) -> CohomologyResult:
    """Kernel of the p-fold composite at degree i modulo the image of the
    complementary composite, with canonical representatives."""
    if not 1 <= p <= C.order - 1:
        raise AlgebraError(f"p must satisfy 1 <= p <= {C.order - 1}")
    di = C.dim(i)
    Mp = C.composite(i, p)
    if di == 0:
        ker: list[tuple] = []
    elif not Mp:  # the target is zero-dimensional: everything is closed
        ker = [
            tuple(Fraction(1) if j == a else Fraction(0) for j in range(di))
            for a in range(di)
        ]
    else:
        ker = linalg.kernel_basis(Mp)
    inc = C.composite(i - (C.order - p), C.order - p)
    img = linalg.column_space_basis(inc) if (inc and inc[0]) else []

    # rank-nullity sanity on the p-fold composite
    assert len(ker) + linalg.rank(Mp) == di

    # the image must consist of p-closed vectors
    for v in img:
        if not linalg.in_span(ker, v):
            raise AlgebraError(
                "image is not contained in the kernel; the input is not a "
                "complex of the stated order"
            )

    dim = len(ker) - len(img)
    # canonical representatives: kernel vectors independent of the image,
    # greedily in kernel-basis order
    chosen: list[tuple] = []
    span: list[tuple] = list(img)
    for v in ker:
        if not linalg.in_span(span, v):
            chosen.append(v)
            span.append(v)
    assert len(chosen) == dim
    return CohomologyResult(p, i, dim, len(ker), len(img), tuple(chosen))
