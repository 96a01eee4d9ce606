"""Graded-commutative polynomial algebra over exact rationals.

The carrier type is :class:`GradedPolynomial`: a finite rational linear
combination of normal monomials over a :class:`Presentation`.  A
presentation fixes the variable set, the monomial annihilator pairs
(products rewritten to zero) and triangular linear substitutions that
eliminate variables.  All values are immutable after construction and all
operations are pure functions, so shared values are safe to use from
concurrent code.

Normal form of a monomial:

* factors sorted in the canonical variable order, Koszul signs applied;
* odd-degree variables never squared (``v*v = 0`` in characteristic 0);
* monomials containing an annihilator pair dropped;
* eliminated variables substituted away (substitution images contain no
  eliminated variables, so one pass suffices).

Variable labels follow a small text convention used by the CLI and the
serializers: ``x2`` is the site-2 coordinate, ``d3x2`` its depth-3
differential, ``theta1`` an odd generator, ``m1``/``d2m1`` lattice
coordinates and their difference generators, and ``t`` the square-zero
deformation parameter.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .kernel import monomial_grade, mul_monomials

__all__ = [
    "AlgebraError",
    "PresentationMismatch",
    "ParseError",
    "GVar",
    "make_var",
    "parse_label",
    "Presentation",
    "GradedPolynomial",
    "DgaPresentation",
    "normal_form",
    "mul",
    "tensor_dga",
]


class AlgebraError(Exception):
    """Base class for algebra construction or arithmetic errors."""


class PresentationMismatch(AlgebraError):
    """Operands belong to different presentations."""


class ParseError(AlgebraError):
    """Malformed polynomial text or serialized document."""


# Degree of a variable as a function of (family, depth).
def _family_grade(family: str, depth: int) -> int:
    if family in ("x", "m"):
        return depth
    if family == "theta":
        if depth != 0:
            raise AlgebraError("theta variables carry no depth")
        return 1
    if family == "t":
        if depth != 0:
            raise AlgebraError("the deformation parameter carries no depth")
        return 0
    raise AlgebraError(f"unknown variable family {family!r}")


@dataclass(frozen=True, order=True)
class GVar:
    """A graded variable, identified by (family, site, depth)."""

    family: str
    site: int
    depth: int
    grade: int

    @property
    def label(self) -> str:
        if self.family == "t":
            return "t"
        stem = f"{self.family}{self.site}"
        return stem if self.depth == 0 else f"d{self.depth}{stem}"

    def __repr__(self) -> str:
        return f"GVar({self.label}, grade={self.grade})"


def make_var(family: str, site: int = 0, depth: int = 0) -> GVar:
    """Build a variable with the grade dictated by its family and depth."""
    return GVar(family, site, depth, _family_grade(family, depth))


_LABEL_RE = re.compile(r"^(?:d(\d+))?(x|m|theta)(\d+)$")


def parse_label(label: str) -> GVar:
    """Parse a variable label such as ``x1``, ``d2x1``, ``theta3`` or ``t``."""
    if label == "t":
        return make_var("t")
    m = _LABEL_RE.match(label)
    if not m:
        raise ParseError(f"cannot parse variable label {label!r}")
    depth = int(m.group(1)) if m.group(1) else 0
    return make_var(m.group(2), int(m.group(3)), depth)


Monomial = tuple  # flat (code, exp, code, exp, ...) tuple; see kernel module
RawTerm = tuple  # (coefficient, [(var, exp), ...])


class Presentation:
    """A graded polynomial algebra presentation.

    ``variables`` lists every variable (generators and eliminated ones);
    the canonical order is sorted (family, site, depth).  ``annihilators``
    are unordered variable pairs whose product is zero; a pair ``(v, v)``
    declares ``v**2 = 0`` for an even variable.  ``substitutions`` maps
    eliminated variables to their images, which must involve generators
    only (triangular).
    """

    __slots__ = (
        "variables",
        "grades",
        "codes",
        "annihilators",
        "substitutions",
        "generators",
        "_signature",
        "_hash",
    )

    def __init__(
        self,
        variables: Iterable[GVar],
        annihilator_pairs: Iterable[tuple[GVar, GVar]] = (),
        substitutions: Mapping[GVar, "GradedPolynomial | str | list"] | None = None,
    ):
        vs = sorted(set(variables))
        self.variables = tuple(vs)
        self.codes = {v: i for i, v in enumerate(self.variables)}
        for v in self.variables:
            if v.grade != _family_grade(v.family, v.depth):
                raise AlgebraError(f"grade of {v.label} violates the family rule")
        self.grades = tuple(v.grade for v in self.variables)
        pairs = set()
        for a, b in annihilator_pairs:
            ca, cb = self.codes[a], self.codes[b]
            pairs.add((min(ca, cb), max(ca, cb)))
        self.annihilators = frozenset(pairs)

        self.substitutions = {}
        raw_subs = dict(substitutions or {})
        elim = {self.codes[v] for v in raw_subs}
        self.generators = tuple(
            c for c in range(len(self.variables)) if c not in elim
        )
        # Ingest images with substitutions disabled so that a non-triangular
        # image surfaces as an error instead of being silently rewritten.
        staged = {}
        for v, image in raw_subs.items():
            poly = self._ingest(image)
            for mon in poly.terms:
                for k in range(0, len(mon), 2):
                    if mon[k] in elim:
                        raise AlgebraError(
                            f"substitution image of {v.label} is not triangular"
                        )
            staged[self.codes[v]] = poly
        self.substitutions = staged
        self._signature = None
        self._hash = None

    def _ingest(self, image) -> "GradedPolynomial":
        if isinstance(image, GradedPolynomial):
            if image.pres is not self:
                return image.convert(self)
            return image
        if isinstance(image, str):
            return self.parse(image)
        return self.poly(image)

    # -- identity ---------------------------------------------------------

    @property
    def signature(self):
        if self._signature is None:
            subs = tuple(
                sorted((c, p._term_signature()) for c, p in self.substitutions.items())
            )
            self._signature = (
                self.variables,
                tuple(sorted(self.annihilators)),
                subs,
            )
        return self._signature

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return isinstance(other, Presentation) and self.signature == other.signature

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.signature)
        return self._hash

    def __repr__(self) -> str:
        return f"Presentation({', '.join(v.label for v in self.variables)})"

    # -- construction of elements -----------------------------------------

    def zero(self) -> "GradedPolynomial":
        return GradedPolynomial(self, {})

    def one(self) -> "GradedPolynomial":
        return self.const(1)

    def const(self, q) -> "GradedPolynomial":
        q = Fraction(q)
        return GradedPolynomial(self, {(): q} if q else {})

    def var(self, v: "GVar | str") -> "GradedPolynomial":
        """The polynomial given by a single variable (substituted if eliminated)."""
        return self.poly([(1, [(v, 1)])])

    def poly(self, raw_terms: Sequence[RawTerm]) -> "GradedPolynomial":
        """Normal form of a raw term list ``[(coeff, [(var, exp), ...]), ...]``."""
        acc: dict[Monomial, Fraction] = {}
        for coeff, factors in raw_terms:
            coeff = Fraction(coeff)
            if not coeff:
                continue
            self._accumulate(acc, coeff, list(factors))
        return GradedPolynomial(self, {m: c for m, c in acc.items() if c})

    def _accumulate(self, acc, coeff, factors):
        """Multiply out one raw term into normal monomials."""
        parts: list[GradedPolynomial] = []
        plain: list[tuple[int, int]] = []
        for var, exp in factors:
            if isinstance(var, str):
                var = parse_label(var)
            if isinstance(var, GVar):
                if var not in self.codes:
                    raise PresentationMismatch(
                        f"variable {var.label} is not part of this presentation"
                    )
                code = self.codes[var]
            else:
                code = var
            if exp < 0:
                raise AlgebraError("negative exponents are not supported")
            if code in self.substitutions:
                image = self.substitutions[code]
                for _ in range(exp):
                    parts.append(image)
            else:
                if exp:
                    plain.append((code, exp))
        poly = self._monomial_poly(plain, coeff)
        for p in parts:
            poly = poly * p
        for m, c in poly.terms.items():
            acc[m] = acc.get(m, Fraction(0)) + c

    def _monomial_poly(self, factors: list[tuple[int, int]], coeff) -> "GradedPolynomial":
        """Normalize an unsorted factor list of generator codes."""
        result = GradedPolynomial(self, {(): Fraction(coeff)})
        for code, exp in factors:
            unit = GradedPolynomial(self, {(code, 1): Fraction(1)})
            for _ in range(exp):
                result = result * unit
        return result

    # -- monomial helpers ---------------------------------------------------

    def monomial_pretty(self, mon: Monomial) -> str:
        if not mon:
            return "1"
        parts = []
        for k in range(0, len(mon), 2):
            v = self.variables[mon[k]]
            e = mon[k + 1]
            parts.append(v.label if e == 1 else f"{v.label}^{e}")
        return "*".join(parts)

    def normal_monomials(self, max_grade: int, max_word: int) -> Iterator[Monomial]:
        """All normal monomials with grade and word length within bounds.

        Word length counts letters with multiplicity.  Deterministic
        lexicographic order on the flat code tuples; the empty monomial
        comes first.
        """
        gens = self.generators
        annih = self.annihilators
        grades = self.grades

        def extend(prefix, start, grade, word):
            yield tuple(prefix)
            for idx in range(start, len(gens)):
                c = gens[idx]
                g = grades[c]
                cap = max_word - word
                if g > 0:
                    cap = min(cap, (max_grade - grade) // g)
                if (grades[c] & 1) or (c, c) in annih:
                    cap = min(cap, 1)
                if cap <= 0:
                    continue
                if any((min(c, p), max(c, p)) in annih for p in prefix[::2]):
                    continue
                for e in range(1, cap + 1):
                    prefix.extend((c, e))
                    yield from extend(prefix, idx + 1, grade + e * g, word + e)
                    del prefix[-2:]

        yield from extend([], 0, 0, 0)

    # -- parsing / rendering ------------------------------------------------

    def parse(self, text: str) -> "GradedPolynomial":
        """Parse polynomial text such as ``3/2 * x1^2 * d1x2 - d2x2``."""
        return self.poly(_parse_terms(text))

    def to_json(self) -> dict:
        doc = {
            "generators": [self.variables[c].label for c in self.generators],
            "annihilators": sorted(
                [self.variables[a].label, self.variables[b].label]
                for a, b in self.annihilators
            ),
            "substitutions": {
                self.variables[c].label: p.text()
                for c, p in sorted(self.substitutions.items())
            },
        }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Presentation":
        gens = [parse_label(s) for s in doc.get("generators", [])]
        elim = [parse_label(s) for s in doc.get("substitutions", {})]
        pairs = [
            (parse_label(a), parse_label(b)) for a, b in doc.get("annihilators", [])
        ]
        pres = cls(gens + elim, pairs)
        if doc.get("substitutions"):
            pres = cls(
                gens + elim,
                pairs,
                {parse_label(k): v for k, v in doc["substitutions"].items()},
            )
        return pres


class GradedPolynomial:
    """Immutable rational combination of normal monomials."""

    __slots__ = ("pres", "terms", "_hash")

    def __init__(self, pres: Presentation, terms: dict):
        self.pres = pres
        self.terms = terms
        self._hash = None

    # -- basic queries ------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def grade(self):
        """Common degree of all monomials, or None for 0 / inhomogeneous."""
        gs = {monomial_grade(m, self.pres.grades) for m in self.terms}
        if len(gs) == 1:
            return gs.pop()
        return None

    def homogeneous_components(self) -> dict[int, "GradedPolynomial"]:
        comps: dict[int, dict] = {}
        for m, c in self.terms.items():
            comps.setdefault(monomial_grade(m, self.pres.grades), {})[m] = c
        return {g: GradedPolynomial(self.pres, d) for g, d in sorted(comps.items())}

    def coefficient(self, mon: Monomial) -> Fraction:
        return self.terms.get(mon, Fraction(0))

    def sorted_terms(self):
        grades = self.pres.grades
        return sorted(
            self.terms.items(), key=lambda kv: (monomial_grade(kv[0], grades), kv[0])
        )

    # -- arithmetic ----------------------------------------------------------

    def _check(self, other: "GradedPolynomial"):
        if self.pres is not other.pres and self.pres != other.pres:
            raise PresentationMismatch("operands live in different presentations")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.pres.const(other)
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m, Fraction(0)) + c
            if s:
                terms[m] = s
            else:
                terms.pop(m, None)
        return GradedPolynomial(self.pres, terms)

    __radd__ = __add__

    def __neg__(self):
        return GradedPolynomial(self.pres, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.pres.const(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            q = Fraction(other)
            if not q:
                return self.pres.zero()
            return GradedPolynomial(self.pres, {m: c * q for m, c in self.terms.items()})
        self._check(other)
        grades = self.pres.grades
        annih = self.pres.annihilators
        acc: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                hit = mul_monomials(m1, m2, grades, annih)
                if hit is None:
                    continue
                sign, m = hit
                s = acc.get(m, Fraction(0)) + (c1 * c2 if sign > 0 else -c1 * c2)
                if s:
                    acc[m] = s
                else:
                    del acc[m]
        return GradedPolynomial(self.pres, acc)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            raise AlgebraError("negative powers are not supported")
        result = self.pres.one()
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.pres.const(other)
        if not isinstance(other, GradedPolynomial):
            return NotImplemented
        return self.pres == other.pres and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # -- calculus -------------------------------------------------------------

    def derivative(self, var: "GVar | str") -> "GradedPolynomial":
        """Graded left partial derivative by one generator."""
        from .kernel import partial_monomial

        if isinstance(var, str):
            var = parse_label(var)
        code = self.pres.codes[var] if isinstance(var, GVar) else var
        grades = self.pres.grades
        acc: dict[Monomial, Fraction] = {}
        for m, c in self.terms.items():
            hit = partial_monomial(m, code, grades)
            if hit is None:
                continue
            k, newm = hit
            s = acc.get(newm, Fraction(0)) + c * k
            if s:
                acc[newm] = s
            else:
                del acc[newm]
        return GradedPolynomial(self.pres, acc)

    def convert(self, target: Presentation) -> "GradedPolynomial":
        """Re-express over another presentation containing the same labels."""
        raw = []
        for m, c in self.terms.items():
            factors = [
                (self.pres.variables[m[k]], m[k + 1]) for k in range(0, len(m), 2)
            ]
            raw.append((c, factors))
        return target.poly(raw)

    # -- rendering --------------------------------------------------------------

    def text(self) -> str:
        if not self.terms:
            return "0"
        chunks = []
        for m, c in self.sorted_terms():
            mono = self.pres.monomial_pretty(m)
            if mono == "1":
                body = str(c)
            elif c == 1:
                body = mono
            elif c == -1:
                body = f"-{mono}"
            else:
                body = f"{c}*{mono}"
            if chunks and not body.startswith("-"):
                chunks.append("+ " + body)
            elif chunks:
                chunks.append("- " + body[1:])
            else:
                chunks.append(body)
        return " ".join(chunks)

    def _term_signature(self):
        return tuple(sorted((m, (c.numerator, c.denominator)) for m, c in self.terms.items()))

    def __repr__(self) -> str:
        return f"<{self.text()}>"


# -- spec-facing module operations ---------------------------------------------


def normal_form(raw_terms: Sequence[RawTerm], pres: Presentation) -> GradedPolynomial:
    """Normal form of a raw term list under a presentation."""
    return pres.poly(raw_terms)


def mul(p: GradedPolynomial, q: GradedPolynomial, pres: Presentation | None = None) -> GradedPolynomial:
    """Graded-commutative product (thin wrapper over ``*``)."""
    if pres is not None and (p.pres != pres or q.pres != pres):
        raise PresentationMismatch("operands do not match the stated presentation")
    return p * q


class DgaPresentation(NamedTuple):
    """A presentation bundled with its differential and claimed order."""

    presentation: Presentation
    differential: "object"  # operators.Derivation; kept loose to avoid a cycle
    order: int


def tensor_dga(A: DgaPresentation, B: DgaPresentation) -> DgaPresentation:
    """Graded tensor product of two differential algebra bundles.

    The variables of the factors must be disjoint; annihilator sets merge,
    and the differential acts factorwise (the Leibniz extension over the
    merged algebra realizes the usual sign rule).  The claimed order is
    N + P - 1; callers verify it with a nilpotency check rather than
    trusting it.
    """
    from .operators import Derivation

    pa, pb = A.presentation, B.presentation
    overlap = set(pa.variables) & set(pb.variables)
    if overlap:
        labels = ", ".join(v.label for v in sorted(overlap))
        raise AlgebraError(f"tensor factors share variables: {labels}")
    subs = {}
    for pres in (pa, pb):
        for c, img in pres.substitutions.items():
            subs[pres.variables[c]] = img
    merged = Presentation(
        pa.variables + pb.variables,
        [
            (pres.variables[a], pres.variables[b])
            for pres in (pa, pb)
            for a, b in pres.annihilators
        ],
        {v: img for v, img in subs.items()},
    )
    images = {}
    for pres, diff in ((pa, A.differential), (pb, B.differential)):
        for code, img in diff.images.items():
            images[pres.variables[code]] = img.convert(merged)
    degree = A.differential.degree
    if degree != B.differential.degree:
        raise AlgebraError("tensor factors carry differentials of different degree")
    d = Derivation.from_images(merged, degree, images)
    return DgaPresentation(merged, d, A.order + B.order - 1)


# -- text parsing -----------------------------------------------------------------

_NUM_RE = re.compile(r"^[0-9]+(?:/[0-9]+)?$")


def _parse_terms(text: str) -> list[RawTerm]:
    s = text.replace(" ", "").replace("\t", "")
    if not s:
        raise ParseError("empty polynomial text")
    if s == "0":
        return []
    # split into signed chunks
    terms = []
    sign = 1
    buf = ""
    for ch in s:
        if ch in "+-" and buf:
            terms.append((sign, buf))
            sign = 1 if ch == "+" else -1
            buf = ""
        elif ch in "+-" and not buf:
            if ch == "-":
                sign = -sign
        else:
            buf += ch
    if not buf:
        raise ParseError(f"dangling sign in {text!r}")
    terms.append((sign, buf))

    raw: list[RawTerm] = []
    for sign, chunk in terms:
        coeff = Fraction(sign)
        factors: list[tuple[GVar, int]] = []
        for piece in chunk.split("*"):
            if not piece:
                raise ParseError(f"empty factor in {text!r}")
            if "^" in piece:
                name, _, exps = piece.partition("^")
                try:
                    exp = int(exps)
                except ValueError as exc:
                    raise ParseError(f"bad exponent in {piece!r}") from exc
            else:
                name, exp = piece, 1
            if _NUM_RE.match(name):
                coeff *= Fraction(name) ** exp
            else:
                factors.append((parse_label(name), exp))
        raw.append((coeff, factors))
    return raw


def poly_from_json_string(pres: Presentation, text: str) -> GradedPolynomial:
    return pres.parse(text)


def presentation_from_file(path: str) -> Presentation:
    with open(path, "r", encoding="utf-8") as fh:
        return Presentation.from_json(json.load(fh))
