"""Depth-N form algebras, simplicial functoriality, and difference forms.

``omega_space`` builds the polynomial form algebra on affine n-space (or on
the n-simplex) with higher differentials d^j x_i of degree j, the relations
d^j x_i d^k x_i = 0 for positive depths, and the depth-shift differential.
On the simplex the coordinate x_0 and its differentials are eliminated by
triangular substitutions; the elimination set is closed under d so the
differential descends (the two displayed ideal generators alone are not
d-stable once depths exceed one).

``dn_space`` is the discrete analogue on the integer lattice: coefficient
functions are polynomials, the difference operator replaces the derivative
in direction i by the unit shift difference, and the generators delta^j m_i
carry degree j with the same same-site annihilation.

Order-preserving maps between simplices act contravariantly on both form
algebras through :class:`AlgebraMorphism`; ``omega_sset_basis`` solves the
gluing constraints of a finitely generated simplicial set as one exact
linear system.

Quotient scope note: on the simplex with two or more surviving sites the
substitution image of a site-0 annihilator pair is a non-monomial quadratic
that this presentation machinery deliberately does not quotient by (see the
package's non-goals); every operation here touches only the surfaces where
that residue is invisible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .galgebra import (
    AlgebraError,
    DgaPresentation,
    GradedPolynomial,
    GVar,
    ParseError,
    Presentation,
    make_var,
    parse_label,
)
from .kernel import monomial_grade
from .linalg import kernel_basis, matrix
from .operators import Derivation

__all__ = [
    "FormsPresentation",
    "omega_space",
    "AlgebraMorphism",
    "omega_map",
    "SimplicialSet",
    "omega_sset_basis",
    "DNSpace",
    "dn_space",
    "dn_simplex",
    "dn_map",
    "DifferenceForm",
    "delta_apply",
]

FormsPresentation = DgaPresentation


def _depth_vars(family: str, site: int, N: int) -> list[GVar]:
    return [make_var(family, site, j) for j in range(N)]


def _same_site_annihilators(family: str, site: int, N: int) -> list[tuple[GVar, GVar]]:
    out = []
    for j in range(1, N):
        for k in range(j, N):
            out.append((make_var(family, site, j), make_var(family, site, k)))
    return out


def omega_space(
    N: int, n: int, simplex: bool = False, first_site: int = 1
) -> FormsPresentation:
    """The depth-N form algebra on affine n-space, or on the n-simplex.

    Claimed nilpotency order n(N-1)+1; callers certify it with
    ``nilpotency_check`` rather than trusting the claim.  ``first_site``
    offsets the coordinate numbering (handy for building tensor factors on
    disjoint variables); it applies to the affine case only.
    """
    if N < 2:
        raise AlgebraError("depth-N forms need N >= 2")
    if n < 0 or (not simplex and n < 1):
        raise AlgebraError("need at least one coordinate")
    if simplex and first_site != 1:
        raise AlgebraError("simplex coordinates are numbered from zero")
    sites = range(0, n + 1) if simplex else range(first_site, first_site + n)
    variables: list[GVar] = []
    annih: list[tuple[GVar, GVar]] = []
    for i in sites:
        variables.extend(_depth_vars("x", i, N))
        annih.extend(_same_site_annihilators("x", i, N))
    subs = {}
    if simplex:
        rest = [f"x{i}" for i in range(1, n + 1)]
        subs[make_var("x", 0, 0)] = "1" + "".join(f"-{r}" for r in rest) if rest else "1"
        for j in range(1, N):
            image = "".join(f"-d{j}x{i}" for i in range(1, n + 1))
            subs[make_var("x", 0, j)] = image if image else "0"
    pres = Presentation(variables, annih, subs)
    images = {}
    for i in sites:
        if simplex and i == 0:
            continue
        for j in range(N - 1):
            images[make_var("x", i, j)] = pres.var(make_var("x", i, j + 1))
    d = Derivation.from_images(pres, 1, images)
    return FormsPresentation(pres, d, n * (N - 1) + 1)


# -- morphisms ------------------------------------------------------------------


class AlgebraMorphism:
    """Algebra morphism given by images of source variables.

    ``images`` covers every source variable (eliminated ones included, for
    inspection); application uses generator images only, since normal forms
    never mention eliminated variables.
    """

    def __init__(self, source: Presentation, target: Presentation, images: dict[GVar, GradedPolynomial]):
        self.source = source
        self.target = target
        self.images = images

    def image_of(self, var: "GVar | str") -> GradedPolynomial:
        if isinstance(var, str):
            var = parse_label(var)
        return self.images[var]

    def apply(self, p: GradedPolynomial) -> GradedPolynomial:
        if p.pres != self.source:
            raise AlgebraError("polynomial does not live in the morphism source")
        out = self.target.zero()
        for mon, c in p.terms.items():
            piece = self.target.const(c)
            for k in range(0, len(mon), 2):
                img = self.images[self.source.variables[mon[k]]]
                for _ in range(mon[k + 1]):
                    piece = piece * img
                if piece.is_zero():
                    break
            out = out + piece
        return out

    __call__ = apply

    def after(self, other: "AlgebraMorphism") -> "AlgebraMorphism":
        """Composite self o other (apply ``other`` first)."""
        if other.target != self.source:
            raise AlgebraError("morphisms do not compose")
        images = {v: self.apply(p) for v, p in other.images.items()}
        return AlgebraMorphism(other.source, self.target, images)

    def agrees_with(self, other: "AlgebraMorphism") -> bool:
        if self.source != other.source or self.target != other.target:
            return False
        keys = set(self.images) | set(other.images)
        return all(
            self.images.get(v, self.target.zero())
            == other.images.get(v, self.target.zero())
            for v in keys
        )


def _check_order_preserving(f: Sequence[int], m: int):
    if any(f[i] > f[i + 1] for i in range(len(f) - 1)):
        raise AlgebraError(f"map {tuple(f)} is not order-preserving")
    if f and (min(f) < 0 or max(f) > m):
        raise AlgebraError(f"map {tuple(f)} does not land in 0..{m}")


def _span_morphism(
    f: Sequence[int], source: Presentation, target: Presentation, family: str, N: int, m: int
) -> AlgebraMorphism:
    """Variable images (family, j, p) -> sum over f-preimages of j."""
    images: dict[GVar, GradedPolynomial] = {}
    for v in source.variables:
        pre = [i for i, fj in enumerate(f) if fj == v.site]
        images[v] = target.poly(
            [(1, [(make_var(family, i, v.depth), 1)]) for i in pre]
        )
    return AlgebraMorphism(source, target, images)


def omega_map(f: Sequence[int], N: int, m: int | None = None) -> AlgebraMorphism:
    """Contravariant action of f in Delta(n, m) on simplex forms:
    a morphism from the forms on the m-simplex to the forms on the
    n-simplex, with x_j pulling back to the sum of x_i over f(i) = j."""
    f = tuple(f)
    n = len(f) - 1
    if n < 0:
        raise AlgebraError("the domain simplex has at least one vertex")
    if m is None:
        m = max(f)
    _check_order_preserving(f, m)
    source = omega_space(N, m, simplex=True).presentation
    target = omega_space(N, n, simplex=True).presentation
    return _span_morphism(f, source, target, "x", N, m)


# -- simplicial sets ---------------------------------------------------------------


@dataclass
class SimplicialSet:
    """Finitely generated simplicial set: tracked simplices per dimension
    with face (and optional degeneracy) incidence."""

    K: int
    simplices: dict[int, list[str]]
    faces: dict[str, list[str]]
    degeneracies: dict[str, list] = field(default_factory=dict)

    def __post_init__(self):
        self.dim_of = {}
        for d, names in self.simplices.items():
            for name in names:
                if name in self.dim_of:
                    raise AlgebraError(f"simplex name {name!r} repeats")
                self.dim_of[name] = d
        for p, fs in self.faces.items():
            d = self.dim_of[p]
            if len(fs) != d + 1:
                raise AlgebraError(f"{p!r} has {len(fs)} faces, expected {d + 1}")
            for q in fs:
                if self.dim_of.get(q) != d - 1:
                    raise AlgebraError(f"face {q!r} of {p!r} has the wrong dimension")
        self._validate_identities()

    def _validate_identities(self):
        # d_i d_j = d_{j-1} d_i for i < j, whenever all parties are tracked
        for p, fs in self.faces.items():
            d = self.dim_of[p]
            if d < 2:
                continue
            for j in range(d + 1):
                for i in range(j):
                    fj = self.faces.get(fs[j])
                    fi = self.faces.get(fs[i])
                    if fj is None or fi is None:
                        continue
                    if fj[i] != fi[j - 1]:
                        raise AlgebraError(
                            f"simplicial identity fails at {p!r} (i={i}, j={j})"
                        )

    @classmethod
    def from_json(cls, doc: dict) -> "SimplicialSet":
        simp = {int(k): list(v) for k, v in doc.get("simplices", {}).items()}
        return cls(
            K=int(doc.get("K", max(simp) if simp else 0)),
            simplices=simp,
            faces={k: list(v) for k, v in doc.get("faces", {}).items()},
            degeneracies={k: list(v) for k, v in doc.get("degeneracies", {}).items()},
        )

    def sorted_simplices(self) -> list[str]:
        return [
            name
            for d in sorted(self.simplices)
            for name in sorted(self.simplices[d])
        ]


def _delta_face(k: int, n: int) -> tuple[int, ...]:
    """The injection 0..n-1 -> 0..n missing k."""
    return tuple(i if i < k else i + 1 for i in range(n))


def _delta_degeneracy(k: int, n: int) -> tuple[int, ...]:
    """The surjection 0..n+1 -> 0..n repeating k."""
    return tuple(i if i <= k else i - 1 for i in range(n + 2))


def _form_basis(pres: Presentation, degree: int, poly_bound: int) -> list[tuple]:
    """Normal monomials of the stated grade with coordinate degree within
    the polynomial bound, deterministic order."""
    grades = pres.grades
    out = []
    for mon in pres.normal_monomials(degree, poly_bound + degree):
        if monomial_grade(mon, grades) != degree:
            continue
        xdeg = sum(
            mon[k + 1] for k in range(0, len(mon), 2) if grades[mon[k]] == 0
        )
        if xdeg <= poly_bound:
            out.append(mon)
    return sorted(out)


def omega_sset_basis(
    sset: SimplicialSet, N: int, degree: int, poly_bound: int
) -> list[dict[str, GradedPolynomial]]:
    """Basis of the compatible families of forms on a finitely generated
    simplicial set, truncated to the stated coefficient degree.

    A family assigns a form on the d-simplex to every tracked simplex of
    dimension d; the constraints are the face (and listed degeneracy)
    pullback equations.  Returns one dict per basis family.
    """
    presentations = {
        d: omega_space(N, d, simplex=True).presentation for d in sset.simplices
    }
    bases = {d: _form_basis(presentations[d], degree, poly_bound) for d in presentations}
    order = sset.sorted_simplices()
    offsets = {}
    total = 0
    for name in order:
        offsets[name] = total
        total += len(bases[sset.dim_of[name]])
    if total == 0:
        return []

    rows: list[list[Fraction]] = []

    # Equations: for simplex p of dimension d and face index j,
    # pullback(a_p) = a_{face_j(p)}, one row per target basis entry.
    morphism_cache: dict[tuple, AlgebraMorphism] = {}

    def face_morphism(k: int, d: int) -> AlgebraMorphism:
        key = ("face", k, d)
        if key not in morphism_cache:
            morphism_cache[key] = omega_map(_delta_face(k, d), N, m=d)
        return morphism_cache[key]

    def degeneracy_morphism(k: int, d: int) -> AlgebraMorphism:
        key = ("deg", k, d)
        if key not in morphism_cache:
            morphism_cache[key] = omega_map(_delta_degeneracy(k, d), N, m=d)
        return morphism_cache[key]

    def emit(phi: AlgebraMorphism, p: str, q: str):
        dp, dq = sset.dim_of[p], sset.dim_of[q]
        src_basis = bases[dp]
        dst_basis = bases[dq]
        dst_set = set(dst_basis)
        images = [
            phi.apply(GradedPolynomial(presentations[dp], {mon: Fraction(1)}))
            for mon in src_basis
        ]
        for img in images:
            for m in img.terms:
                if m not in dst_set:
                    raise AlgebraError("image leaves the truncated basis")
        for i, bm in enumerate(dst_basis):
            row = [Fraction(0)] * total
            for col, img in enumerate(images):
                c = img.terms.get(bm)
                if c:
                    row[offsets[p] + col] += c
            row[offsets[q] + i] -= Fraction(1)
            rows.append(row)

    for p in order:
        d = sset.dim_of[p]
        if p in sset.faces:
            for k, q in enumerate(sset.faces[p]):
                emit(face_morphism(k, d), p, q)
    for q, spec in sset.degeneracies.items():
        # entry: q = sigma_k(p), encoded as [p, k]
        p, k = spec[0], int(spec[1])
        emit(degeneracy_morphism(k, sset.dim_of[p]), p, q)

    if rows:
        sol = kernel_basis(matrix(rows))
    else:
        sol = kernel_basis(matrix([[Fraction(0)] * total]))

    families = []
    for vec in sol:
        fam = {}
        for name in order:
            d = sset.dim_of[name]
            terms = {}
            for i, mon in enumerate(bases[d]):
                c = vec[offsets[name] + i]
                if c:
                    terms[mon] = c
            fam[name] = GradedPolynomial(presentations[d], terms)
        families.append(fam)
    return families


# -- difference forms -----------------------------------------------------------


@dataclass(frozen=True)
class DNSpace:
    """Difference forms of depth N on the integer lattice (or on the
    lattice simplex, with the site-0 coordinate eliminated)."""

    n: int
    N: int
    simplex: bool
    presentation: Presentation

    @property
    def order(self) -> int:
        return self.n * (self.N - 1) + 1

    def form(self, poly: "GradedPolynomial | str") -> "DifferenceForm":
        if isinstance(poly, str):
            poly = self.presentation.parse(poly)
        return DifferenceForm(self, poly)

    def zero(self) -> "DifferenceForm":
        return DifferenceForm(self, self.presentation.zero())


def dn_space(N: int, n: int) -> DNSpace:
    """Difference forms of depth N on the rank-n integer lattice."""
    if N < 2:
        raise AlgebraError("difference forms need N >= 2")
    variables: list[GVar] = []
    annih: list[tuple[GVar, GVar]] = []
    for i in range(1, n + 1):
        variables.extend(_depth_vars("m", i, N))
        annih.extend(_same_site_annihilators("m", i, N))
    return DNSpace(n, N, False, Presentation(variables, annih))


def dn_simplex(n: int, N: int) -> DNSpace:
    """Difference forms on the weight-one lattice slice of the n-simplex;
    the site-0 coordinate and its generators are substituted away
    (delta-closed elimination, mirroring the simplex form algebra)."""
    variables: list[GVar] = []
    annih: list[tuple[GVar, GVar]] = []
    for i in range(0, n + 1):
        variables.extend(_depth_vars("m", i, N))
        annih.extend(_same_site_annihilators("m", i, N))
    subs: dict[GVar, str] = {}
    rest = [f"m{i}" for i in range(1, n + 1)]
    subs[make_var("m", 0, 0)] = "1" + "".join(f"-{r}" for r in rest) if rest else "1"
    for j in range(1, N):
        image = "".join(f"-d{j}m{i}" for i in range(1, n + 1))
        subs[make_var("m", 0, j)] = image if image else "0"
    return DNSpace(n, N, True, Presentation(variables, annih, subs))


class DifferenceForm:
    """A difference form: rational polynomial coefficients times products
    of the depth generators, stored as one graded polynomial."""

    __slots__ = ("space", "poly")

    def __init__(self, space: DNSpace, poly: GradedPolynomial):
        if poly.pres != space.presentation:
            raise AlgebraError("polynomial does not live on this lattice space")
        self.space = space
        self.poly = poly

    # -- (I, coefficient) component view ---------------------------------

    def components(self) -> dict[tuple, GradedPolynomial]:
        """Map from depth profiles I (length-n tuples) to coefficients."""
        pres = self.space.presentation
        out: dict[tuple, dict] = {}
        for mon, c in self.poly.terms.items():
            I = [0] * self.space.n
            coeff_mon = []
            for k in range(0, len(mon), 2):
                v = pres.variables[mon[k]]
                if v.depth == 0:
                    coeff_mon.extend((mon[k], mon[k + 1]))
                else:
                    I[v.site - 1] = v.depth
            key = tuple(I)
            out.setdefault(key, {})[tuple(coeff_mon)] = c
        return {
            I: GradedPolynomial(pres, terms) for I, terms in sorted(out.items())
        }

    @classmethod
    def from_components(
        cls, space: DNSpace, comps: Mapping[tuple, "GradedPolynomial | str"]
    ) -> "DifferenceForm":
        pres = space.presentation
        total = pres.zero()
        for I, coeff in comps.items():
            if isinstance(coeff, str):
                coeff = pres.parse(coeff)
            gen = pres.one()
            for i, depth in enumerate(I, start=1):
                if depth:
                    gen = gen * pres.var(make_var("m", i, depth))
            total = total + coeff * gen
        return cls(space, total)

    def __add__(self, other: "DifferenceForm") -> "DifferenceForm":
        return DifferenceForm(self.space, self.poly + other.poly)

    def __mul__(self, other):
        if isinstance(other, DifferenceForm):
            return DifferenceForm(self.space, self.poly * other.poly)
        return DifferenceForm(self.space, self.poly * other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DifferenceForm)
            and self.space == other.space
            and self.poly == other.poly
        )

    def __hash__(self):
        return hash(self.poly)

    def is_zero(self) -> bool:
        return self.poly.is_zero()

    def text(self) -> str:
        return self.poly.text()

    def __repr__(self):
        return f"<DForm {self.text()}>"


def _shift(poly: GradedPolynomial, site: int) -> GradedPolynomial:
    """Substitute the site coordinate by itself plus one."""
    pres = poly.pres
    code = pres.codes[make_var("m", site, 0)]
    raw = []
    for mon, c in poly.terms.items():
        factors = []
        shift_exp = 0
        for k in range(0, len(mon), 2):
            if mon[k] == code:
                shift_exp = mon[k + 1]
            else:
                factors.append((pres.variables[mon[k]], mon[k + 1]))
        if shift_exp == 0:
            raw.append((c, factors))
        else:
            # (m + 1)^e expanded binomially
            from math import comb

            for j in range(shift_exp + 1):
                fs = list(factors)
                if j:
                    fs.append((pres.variables[code], j))
                raw.append((c * comb(shift_exp, j), fs))
    return pres.poly(raw)


def _difference(poly: GradedPolynomial, site: int) -> GradedPolynomial:
    """Unit-shift finite difference of a coefficient polynomial."""
    return _shift(poly, site) - poly


def delta_apply(form: DifferenceForm, check: bool = True) -> DifferenceForm:
    """The difference operator on a form.

    Computes the twisted Leibniz expansion term by term, and (by default)
    independently evaluates the closed component recurrence

        (dw)_J = sum over J(i) = 1 of (-1)^|J<i| Delta_i w_{J - e_i}
               + sum over J(i) >= 2 of (-1)^|J<i| w_{J - e_i}

    asserting the two agree before returning.
    """
    space = form.space
    N = space.N
    pres = space.presentation
    comps = form.components()

    direct: dict[tuple, GradedPolynomial] = {}

    def put(J, poly):
        if poly.is_zero():
            return
        cur = direct.get(J)
        direct[J] = poly if cur is None else cur + poly
        if direct[J].is_zero():
            del direct[J]

    for I, coeff in comps.items():
        for i in range(1, space.n + 1):
            sgn = -1 if sum(I[: i - 1]) & 1 else 1
            # difference of the coefficient, with a new depth-one factor
            if I[i - 1] == 0:
                J = I[: i - 1] + (1,) + I[i:]
                put(J, _difference(coeff, i) * sgn)
            else:
                # depth shift of the existing factor
                if I[i - 1] <= N - 2:
                    J = I[: i - 1] + (I[i - 1] + 1,) + I[i:]
                    put(J, coeff * sgn)

    if check:
        closed: dict[tuple, GradedPolynomial] = {}
        candidates = set()
        for I in comps:
            for i in range(space.n):
                if I[i] + 1 <= N - 1:
                    candidates.add(I[:i] + (I[i] + 1,) + I[i + 1:])
        for J in sorted(candidates):
            acc = pres.zero()
            for i in range(1, space.n + 1):
                if J[i - 1] == 0:
                    continue
                sgn = -1 if sum(J[: i - 1]) & 1 else 1
                prev = J[: i - 1] + (J[i - 1] - 1,) + J[i:]
                w = comps.get(prev)
                if w is None:
                    continue
                if J[i - 1] == 1:
                    acc = acc + _difference(w, i) * sgn
                else:
                    acc = acc + w * sgn
            if not acc.is_zero():
                closed[J] = acc
        if closed != direct:
            raise AlgebraError("difference-operator routes disagree")

    return DifferenceForm.from_components(space, direct)


def dn_map(f: Sequence[int], N: int, k: int | None = None) -> AlgebraMorphism:
    """Contravariant action of f in Delta(n, k) on simplex difference
    forms: coefficients pull back along the coordinate sums, generators map
    to the matching sums of generators."""
    f = tuple(f)
    n = len(f) - 1
    if n < 0:
        raise AlgebraError("the domain simplex has at least one vertex")
    if k is None:
        k = max(f)
    _check_order_preserving(f, k)
    source = dn_simplex(k, N).presentation
    target = dn_simplex(n, N).presentation
    return _span_morphism(f, source, target, "m", N, k)
