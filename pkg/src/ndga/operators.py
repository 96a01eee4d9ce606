"""Graded derivations and differential operators.

A :class:`Derivation` is given by its degree and its images on generators
and extends by the signed Leibniz rule

    D(ab) = D(a) b + (-1)^(|a| deg D) a D(b).

A :class:`DiffOperator` is a finite sum of terms ``coefficient * d_I`` where
``d_I`` is an ordered product of graded partial derivatives; composition,
the order filtration and the first-order projection live here, along with
the diamond product on derivations, graded vector-field powers computed two
independent ways, induced derivations on endomorphisms, curvature-based
deformation checks and bounded nilpotency certification.

Nilpotency of an operator power on an infinite-dimensional algebra cannot
be certified from generators alone; ``nilpotency_check`` therefore walks
every normal monomial within explicit (degree, word) bounds and reports the
bounds in its verdict.  Equality of DiffOperators is equality of normal
representations; terms that annihilate every normal monomial of a quotient
(for example a repeated even partial whose square kills all admissible
monomials) are kept as written.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .galgebra import (
    AlgebraError,
    GradedPolynomial,
    GVar,
    Presentation,
    PresentationMismatch,
    parse_label,
)
from .kernel import monomial_grade

__all__ = [
    "Derivation",
    "DiffOperator",
    "EndOperator",
    "NilpotencyVerdict",
    "CurvatureReport",
    "apply_derivation",
    "nilpotency_check",
    "compose",
    "diamond",
    "diamond_power",
    "field_power_direct",
    "field_power_closed",
    "end_derivative",
    "curvature_condition",
]


class Derivation:
    """A degree-graded derivation given by generator images."""

    __slots__ = ("pres", "degree", "images")

    def __init__(self, pres: Presentation, degree: int, images: dict[int, GradedPolynomial]):
        self.pres = pres
        self.degree = degree
        self.images = {c: p for c, p in images.items() if not p.is_zero()}
        for c, p in self.images.items():
            g = p.grade()
            if g is not None and g != pres.grades[c] + degree:
                raise AlgebraError(
                    f"image of {pres.variables[c].label} has grade {g}, "
                    f"expected {pres.grades[c] + degree}"
                )
            if g is None:
                raise AlgebraError(
                    f"image of {pres.variables[c].label} is not homogeneous"
                )

    @classmethod
    def from_images(
        cls,
        pres: Presentation,
        degree: int,
        images: Mapping["GVar | str | int", "GradedPolynomial | str"],
    ) -> "Derivation":
        out: dict[int, GradedPolynomial] = {}
        for key, val in images.items():
            if isinstance(key, str):
                key = parse_label(key)
            code = pres.codes[key] if isinstance(key, GVar) else key
            poly = pres.parse(val) if isinstance(val, str) else val
            if poly.pres != pres:
                poly = poly.convert(pres)
            out[code] = poly
        return cls(pres, degree, out)

    @classmethod
    def zero(cls, pres: Presentation, degree: int = 1) -> "Derivation":
        return cls(pres, degree, {})

    def image_of(self, var: "GVar | str | int") -> GradedPolynomial:
        if isinstance(var, str):
            var = parse_label(var)
        code = self.pres.codes[var] if isinstance(var, GVar) else var
        return self.images.get(code, self.pres.zero())

    def is_zero(self) -> bool:
        return not self.images

    def __call__(self, p: GradedPolynomial) -> GradedPolynomial:
        return self.apply(p)

    def apply(self, p: GradedPolynomial) -> GradedPolynomial:
        """Leibniz extension of the generator images."""
        if p.pres != self.pres:
            raise PresentationMismatch("polynomial does not match the derivation")
        pres = self.pres
        grades = pres.grades
        dpar = self.degree & 1
        out = pres.zero()
        for mon, coeff in p.terms.items():
            prefix_par = 0
            for k in range(0, len(mon), 2):
                code = mon[k]
                exp = mon[k + 1]
                image = self.images.get(code)
                if image is not None:
                    sign = -1 if (dpar and (prefix_par & 1)) else 1
                    left = mon[:k] + ((code, exp - 1) if exp > 1 else ())
                    right = mon[k + 2:]
                    piece = GradedPolynomial(pres, {left: Fraction(sign * exp) * coeff})
                    piece = piece * image
                    if right:
                        piece = piece * GradedPolynomial(pres, {right: Fraction(1)})
                    out = out + piece
                prefix_par = (prefix_par + grades[code] * exp) & 1
        return out

    def __add__(self, other: "Derivation") -> "Derivation":
        if self.pres != other.pres or self.degree != other.degree:
            raise PresentationMismatch("cannot add derivations of different type")
        images = dict(self.images)
        for c, p in other.images.items():
            images[c] = images.get(c, self.pres.zero()) + p
        return Derivation(self.pres, self.degree, images)

    def __mul__(self, scalar) -> "Derivation":
        q = Fraction(scalar)
        return Derivation(self.pres, self.degree, {c: p * q for c, p in self.images.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Derivation)
            and self.pres == other.pres
            and self.degree == other.degree
            and self.images == other.images
        )

    def __hash__(self):
        return hash((self.degree, frozenset(self.images.items())))

    def to_diff_operator(self) -> "DiffOperator":
        terms = {(c, 1): p for c, p in self.images.items()}
        return DiffOperator(self.pres, terms)

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "images": {
                self.pres.variables[c].label: p.text()
                for c, p in sorted(self.images.items())
            },
        }

    @classmethod
    def from_json(cls, pres: Presentation, doc: dict) -> "Derivation":
        return cls.from_images(pres, doc.get("degree", 1), doc.get("images", {}))

    def __repr__(self):
        imgs = ", ".join(
            f"{self.pres.variables[c].label} -> {p.text()}"
            for c, p in sorted(self.images.items())
        )
        return f"Derivation(deg={self.degree}; {imgs or '0'})"


def apply_derivation(D: Derivation, p: GradedPolynomial) -> GradedPolynomial:
    return D.apply(p)


# -- differential operators ----------------------------------------------------

MultiExp = tuple  # flat (code, exp, ...) tuple over generator codes, sorted


def _insert_partial(J: MultiExp, code: int, grades) -> "tuple[int, MultiExp] | None":
    """Normal-order ``d_code * d_J``; None when an odd partial squares."""
    par = grades[code] & 1
    sexp = 0
    out: list[int] = []
    placed = False
    k = 0
    while k < len(J):
        c, e = J[k], J[k + 1]
        if c < code:
            if par:
                sexp ^= (grades[c] * e) & 1
            out.extend((c, e))
            k += 2
        elif c == code:
            if par:
                return None
            out.extend((c, e + 1))
            k += 2
            placed = True
            break
        else:
            break
    if not placed:
        out.extend((code, 1))
    out.extend(J[k:])
    return (-1 if sexp else 1), tuple(out)


class DiffOperator:
    """Finite-order differential operator: sum of ``coefficient * d_I`` terms."""

    __slots__ = ("pres", "terms")

    def __init__(self, pres: Presentation, terms: dict[MultiExp, GradedPolynomial]):
        self.pres = pres
        self.terms = {I: p for I, p in terms.items() if not p.is_zero()}

    @classmethod
    def identity(cls, pres: Presentation) -> "DiffOperator":
        return cls(pres, {(): pres.one()})

    @classmethod
    def multiplication(cls, poly: GradedPolynomial) -> "DiffOperator":
        return cls(poly.pres, {(): poly})

    @classmethod
    def zero(cls, pres: Presentation) -> "DiffOperator":
        return cls(pres, {})

    @property
    def order(self) -> int:
        o = 0
        for I in self.terms:
            o = max(o, sum(I[k + 1] for k in range(0, len(I), 2)))
        return o

    def is_zero(self) -> bool:
        return not self.terms

    def _partial(self, I: MultiExp, p: GradedPolynomial) -> GradedPolynomial:
        """Apply d_I (rightmost factor first)."""
        from .kernel import partial_monomial

        grades = self.pres.grades
        singles = []
        for k in range(0, len(I), 2):
            singles.extend([I[k]] * I[k + 1])
        for code in reversed(singles):
            acc: dict = {}
            for mon, c in p.terms.items():
                hit = partial_monomial(mon, code, grades)
                if hit is None:
                    continue
                f, newm = hit
                s = acc.get(newm, Fraction(0)) + c * f
                if s:
                    acc[newm] = s
                else:
                    del acc[newm]
            p = GradedPolynomial(self.pres, acc)
            if p.is_zero():
                return p
        return p

    def apply(self, p: GradedPolynomial) -> GradedPolynomial:
        if p.pres != self.pres:
            raise PresentationMismatch("polynomial does not match the operator")
        out = self.pres.zero()
        for I, coeff in self.terms.items():
            out = out + coeff * self._partial(I, p)
        return out

    __call__ = apply

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        if self.pres != other.pres:
            raise PresentationMismatch("operands live in different presentations")
        terms = dict(self.terms)
        for I, p in other.terms.items():
            s = terms.get(I, self.pres.zero()) + p
            if s.is_zero():
                terms.pop(I, None)
            else:
                terms[I] = s
        return DiffOperator(self.pres, terms)

    def __sub__(self, other: "DiffOperator") -> "DiffOperator":
        return self + other.scale(-1)

    def scale(self, q) -> "DiffOperator":
        q = Fraction(q)
        return DiffOperator(self.pres, {I: p * q for I, p in self.terms.items()})

    def left_multiply(self, poly: GradedPolynomial) -> "DiffOperator":
        return DiffOperator(self.pres, {I: poly * p for I, p in self.terms.items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DiffOperator)
            and self.pres == other.pres
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash(frozenset((I, p) for I, p in self.terms.items()))

    def first_order_part(self, degree: int | None = None) -> Derivation:
        """Projection onto the |I| = 1 terms, re-expressed as a derivation."""
        images: dict[int, GradedPolynomial] = {}
        degrees = set()
        for I, p in self.terms.items():
            if len(I) == 2 and I[1] == 1:
                code = I[0]
                images[code] = images.get(code, self.pres.zero()) + p
                for comp_grade in {monomial_grade(m, self.pres.grades) for m in p.terms}:
                    degrees.add(comp_grade - self.pres.grades[code])
        images = {c: p for c, p in images.items() if not p.is_zero()}
        if degree is None:
            if len(degrees) > 1:
                raise AlgebraError("first-order part is not degree-homogeneous")
            degree = degrees.pop() if degrees else 1
        return Derivation(self.pres, degree, images)

    def compose_single(self, code: int, sign_parity: int) -> "DiffOperator":
        """Compose one graded partial (of the stated parity) on the left."""
        pres = self.pres
        grades = pres.grades
        out: dict[MultiExp, GradedPolynomial] = {}

        def add(I, p):
            if p.is_zero():
                return
            s = out.get(I, pres.zero()) + p
            if s.is_zero():
                out.pop(I, None)
            else:
                out[I] = s

        for I, coeff in self.terms.items():
            add(I, coeff.derivative(code))
            for g, comp in coeff.homogeneous_components().items():
                koszul = -1 if (sign_parity and (g & 1)) else 1
                hit = _insert_partial(I, code, grades)
                if hit is None:
                    continue
                s, J = hit
                add(J, comp * (koszul * s))
        return DiffOperator(pres, out)

    def __repr__(self):
        if not self.terms:
            return "DiffOperator(0)"
        bits = []
        for I, p in sorted(self.terms.items()):
            ds = "".join(
                f"d/d{self.pres.variables[I[k]].label}"
                + (f"^{I[k+1]}" if I[k + 1] > 1 else "")
                for k in range(0, len(I), 2)
            )
            bits.append(f"({p.text()}){ds}")
        return "DiffOperator(" + " + ".join(bits) + ")"


def compose(P: DiffOperator, Q: DiffOperator) -> DiffOperator:
    """Operator composition: ``compose(P, Q)(p) = P(Q(p))``."""
    if P.pres != Q.pres:
        raise PresentationMismatch("operands live in different presentations")
    pres = P.pres
    grades = pres.grades
    total = DiffOperator.zero(pres)
    for I, coeff in P.terms.items():
        acted = Q
        singles = []
        for k in range(0, len(I), 2):
            singles.extend([I[k]] * I[k + 1])
        for code in reversed(singles):
            acted = acted.compose_single(code, grades[code] & 1)
        total = total + acted.left_multiply(coeff)
    return total


def diamond(D1: Derivation, D2: Derivation) -> Derivation:
    """First-order part of the composition, as a derivation."""
    if D1.pres != D2.pres:
        raise PresentationMismatch("operands live in different presentations")
    full = compose(D1.to_diff_operator(), D2.to_diff_operator())
    return full.first_order_part(degree=D1.degree + D2.degree)


def diamond_power(D: Derivation, N: int) -> Derivation:
    """Right-associated diamond power D <> (D <> (... <> D))."""
    if N < 1:
        raise AlgebraError("diamond power needs N >= 1")
    acc = D
    for _ in range(N - 1):
        acc = diamond(D, acc)
    return acc


# -- graded vector-field powers -------------------------------------------------


def _variable_list(pres: Presentation, variables: Sequence["GVar | str"] | None):
    if variables is None:
        return list(pres.generators)
    out = []
    for v in variables:
        if isinstance(v, str):
            v = parse_label(v)
        out.append(pres.codes[v] if isinstance(v, GVar) else v)
    return out


def field_power_direct(
    pres: Presentation,
    coefficients: Sequence[GradedPolynomial],
    N: int,
    variables: Sequence["GVar | str"] | None = None,
) -> DiffOperator:
    """N-fold composition of the vector field sum(a_i d_i); the reference
    semantics for the closed combinatorial formula."""
    codes = _variable_list(pres, variables)
    if len(codes) != len(coefficients):
        raise AlgebraError("coefficient list does not match the variable list")
    D = DiffOperator(
        pres,
        {
            (c, 1): a
            for c, a in zip(codes, coefficients)
            if not a.is_zero()
        },
    )
    out = D
    for _ in range(N - 1):
        out = compose(D, out)
    return out


def field_power_closed(
    pres: Presentation,
    coefficients: Sequence[GradedPolynomial],
    N: int,
    variables: Sequence["GVar | str"] | None = None,
    max_n: int = 6,
) -> DiffOperator:
    """Closed combinatorial expansion of the N-th power of a graded vector
    field.

    The sum runs over placement maps f: [N] -> [m] choosing a summand for
    every composition slot and over target maps alpha: [N-1] -> [2, N+1]
    with alpha(i) > i: the partial at slot i either differentiates the
    coefficient at slot alpha(i) or (alpha(i) = N+1) survives to the final
    operator part; the slot-N partial always survives.  Signs are Koszul
    signs accumulated while the partials travel right past the coefficient
    factors in their current (already differentiated) state, plus the
    normal ordering of the surviving partials; this calibration is forced
    by requiring agreement with ``field_power_direct``.

    Each coefficient must be homogeneous and the summands a_i d_i must all
    carry one common degree.
    """
    if N > max_n:
        raise AlgebraError(f"closed field power bound exceeded (N={N} > {max_n})")
    codes = _variable_list(pres, variables)
    if len(codes) != len(coefficients):
        raise AlgebraError("coefficient list does not match the variable list")
    grades = pres.grades

    active = [(c, a) for c, a in zip(codes, coefficients) if not a.is_zero()]
    if not active:
        return DiffOperator.zero(pres)
    op_degrees = set()
    for c, a in active:
        g = a.grade()
        if g is None:
            raise AlgebraError("closed field power needs homogeneous coefficients")
        op_degrees.add(g - grades[c])
    if len(op_degrees) != 1:
        raise AlgebraError("summands a_i d_i must share a common degree")

    m = len(active)
    total = DiffOperator.zero(pres)

    def alphas(j: int, current: list[int]):
        if j == N:  # alpha defined on 1..N-1
            yield tuple(current)
            return
        for target in range(j + 1, N + 2):
            current.append(target)
            yield from alphas(j + 1, current)
            current.pop()

    import itertools

    for f in itertools.product(range(m), repeat=N):
        coeff_polys = [active[i][1] for i in f]  # slot k -> a_{f(k)}
        var_codes = [active[i][0] for i in f]
        xpar = [grades[c] & 1 for c in var_codes]
        for alpha in alphas(1, []):
            # current parity of the factor at each slot (1-based index k-1)
            fac_par = []
            for k in range(N):
                g = coeff_polys[k].grade()
                fac_par.append(g & 1)
            sexp = 0
            dead = False
            # resolve partials from slot N-1 down to 1 (0-based N-2..0)
            derived: list[list[int]] = [[] for _ in range(N)]
            for j in range(N - 1, 0, -1):  # 1-based slot j
                tgt = alpha[j - 1]
                stop = (tgt - 1) if tgt <= N else N
                for mpos in range(j + 1, stop + 1):
                    sexp ^= xpar[j - 1] & fac_par[mpos - 1]
                if tgt <= N:
                    fac_par[tgt - 1] ^= xpar[j - 1]
                    derived[tgt - 1].append(j)
            # coefficient product, factors in slot order
            prod = pres.one()
            for k in range(N):
                piece = coeff_polys[k]
                for j in sorted(derived[k], reverse=True):
                    piece = piece.derivative(var_codes[j - 1])
                    if piece.is_zero():
                        break
                if piece.is_zero():
                    dead = True
                    break
                prod = prod * piece
                if prod.is_zero():
                    dead = True
                    break
            if dead:
                continue
            # surviving partials, in slot order, then normal ordered
            surv = [j for j in range(1, N) if alpha[j - 1] == N + 1] + [N]
            J: MultiExp = ()
            ssign = 1
            for j in reversed(surv):
                hit = _insert_partial(J, var_codes[j - 1], grades)
                if hit is None:
                    dead = True
                    break
                s, J = hit
                ssign *= s
            if dead:
                continue
            sign = ssign * (-1 if sexp else 1)
            total = total + DiffOperator(pres, {J: prod * sign})
    return total


# -- induced derivation on endomorphisms ----------------------------------------


class EndOperator:
    """Formal integer/rational combination of composition words of operators."""

    __slots__ = ("pres", "words", "degree")

    def __init__(self, pres: Presentation, words: dict[tuple, Fraction], degree: int):
        self.pres = pres
        self.words = {w: c for w, c in words.items() if c}
        self.degree = degree

    @classmethod
    def from_operator(cls, op: Derivation) -> "EndOperator":
        return cls(op.pres, {(op,): Fraction(1)}, op.degree)

    def apply(self, p: GradedPolynomial) -> GradedPolynomial:
        out = self.pres.zero()
        for word, c in self.words.items():
            q = p
            for op in reversed(word):
                q = op.apply(q)
                if q.is_zero():
                    break
            out = out + q * c
        return out

    __call__ = apply

    def __add__(self, other: "EndOperator") -> "EndOperator":
        if self.degree != other.degree:
            raise AlgebraError("cannot add end-operators of different degree")
        words = dict(self.words)
        for w, c in other.words.items():
            s = words.get(w, Fraction(0)) + c
            if s:
                words[w] = s
            else:
                words.pop(w, None)
        return EndOperator(self.pres, words, self.degree)

    def scale(self, q) -> "EndOperator":
        q = Fraction(q)
        return EndOperator(self.pres, {w: c * q for w, c in self.words.items()}, self.degree)

    def then_compose(self, other: "EndOperator") -> "EndOperator":
        """Word concatenation: (self o other)."""
        words: dict[tuple, Fraction] = {}
        for w1, c1 in self.words.items():
            for w2, c2 in other.words.items():
                w = w1 + w2
                s = words.get(w, Fraction(0)) + c1 * c2
                if s:
                    words[w] = s
                else:
                    words.pop(w, None)
        return EndOperator(self.pres, words, self.degree + other.degree)

    def power(self, n: int) -> "EndOperator":
        if n < 1:
            raise AlgebraError("power needs n >= 1")
        out = self
        for _ in range(n - 1):
            out = out.then_compose(self)
        return out


def end_derivative(d: Derivation, e: Derivation, l: int) -> EndOperator:
    """l-fold derivative of e under the induced differential on
    endomorphisms, d_End(phi) = d o phi - (-1)^|phi| phi o d."""
    if d.pres != e.pres:
        raise PresentationMismatch("operands live in different presentations")
    phi = EndOperator.from_operator(e)
    dd = EndOperator.from_operator(d)
    for _ in range(l):
        # d o phi - (-1)^|phi| phi o d
        left = dd.then_compose(phi)
        right = phi.then_compose(dd).scale(-1 if phi.degree % 2 == 0 else 1)
        phi = left + right
    return phi


# -- verdicts --------------------------------------------------------------------


@dataclass(frozen=True)
class NilpotencyVerdict:
    """Outcome of a bounded nilpotency certification."""

    order_tested: int
    degree_bound: int
    word_bound: int
    verified: bool
    counterexample: "tuple[str, GradedPolynomial] | None" = None

    def to_json(self) -> dict:
        doc = {
            "order": self.order_tested,
            "degree_bound": self.degree_bound,
            "word_bound": self.word_bound,
            "outcome": "verified-up-to-bounds" if self.verified else "counterexample",
        }
        if self.counterexample is not None:
            doc["counterexample"] = {
                "monomial": self.counterexample[0],
                "image": self.counterexample[1].text(),
            }
        return doc


def nilpotency_check(
    D: Derivation, N: int, degree_bound: int = 6, word_bound: int = 4
) -> NilpotencyVerdict:
    """Apply D N times to every normal monomial within the bounds.

    The first nonzero image, in canonical monomial order, is returned as a
    counterexample; otherwise the verdict is verified-up-to-bounds.
    """
    if N < 1:
        raise AlgebraError("nilpotency order must be >= 1")
    pres = D.pres
    for mon in pres.normal_monomials(degree_bound, word_bound):
        p = GradedPolynomial(pres, {mon: Fraction(1)})
        q = p
        for _ in range(N):
            q = D.apply(q)
            if q.is_zero():
                break
        if not q.is_zero():
            return NilpotencyVerdict(
                N, degree_bound, word_bound, False, (pres.monomial_pretty(mon), q)
            )
    return NilpotencyVerdict(N, degree_bound, word_bound, True)


@dataclass(frozen=True)
class CurvatureReport:
    """Curvature-power criterion versus the direct deformation check."""

    curvature: NilpotencyVerdict
    direct: NilpotencyVerdict

    @property
    def agree(self) -> bool:
        return self.curvature.verified == self.direct.verified


def curvature_condition(
    d: Derivation,
    e: Derivation,
    N: int,
    degree_bound: int = 6,
    word_bound: int = 4,
) -> CurvatureReport:
    """Deformation criterion for a square-zero differential.

    With F = d_End(e) + e o e, evaluates F^(N/2) (even N) or
    F^((N-1)/2) o (d+e) (odd N) on all bounded normal monomials, and
    cross-checks the verdict against the direct bounded nilpotency check
    of d + e.
    """
    base = nilpotency_check(d, 2, degree_bound, word_bound)
    if not base.verified:
        raise AlgebraError("the undeformed differential is not 2-nilpotent within bounds")
    if N < 2:
        raise AlgebraError("curvature criterion needs N >= 2")
    pres = d.pres
    F = end_derivative(d, e, 1) + EndOperator(pres, {(e, e): Fraction(1)}, 2)
    if N % 2 == 0:
        G = F.power(N // 2)
    else:
        G = F.power((N - 1) // 2).then_compose(EndOperator.from_operator(d + e))
    counter = None
    for mon in pres.normal_monomials(degree_bound, word_bound):
        p = GradedPolynomial(pres, {mon: Fraction(1)})
        q = G.apply(p)
        if not q.is_zero():
            counter = (pres.monomial_pretty(mon), q)
            break
    curv = NilpotencyVerdict(N, degree_bound, word_bound, counter is None, counter)
    direct = nilpotency_check(d + e, N, degree_bound, word_bound)
    return CurvatureReport(curv, direct)
