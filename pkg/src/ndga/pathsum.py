"""Weighted path sums on the multi-index graph and deformation coefficients.

Vertices are finite tuples over the naturals (the empty tuple is the start
vertex).  From a vertex s the legal moves are: prepend a zero, stay, or
increment one entry.  Moves are weighted

    s -> (0, s)      weight 1
    s -> s           weight (-1)^(|s| + l(s))
    s -> s + e_i     weight (-1)^(|s_<i| + i - 1)

where l is the length, |s| the entry sum and s_<i the prefix before slot i.
The coefficient c(s, N) is the total weight of length-N paths from the
start to s; these coefficients assemble the condition for a deformed
derivation d + e on a square-cube algebra (d^3 = 0) to be N-nilpotent.

Two independent validation layers live here as well:

* a noncommutative word oracle over the alphabet {d, e} that expands both
  sides of the deformation identity and compares integer word tables;
* the square-zero-parameter expansion whose coefficients are signed counts
  of compositions, checked against c((N-k-1), N).

The word oracle deliberately sums over *all* admissible multi-indices: the
rewriting of the letter for the j-th endomorphism derivative is nonzero for
every j (for example j = 3 yields d^2 e d - d e d^2 modulo words containing
d^3), so dropping entries >= 3 would break exact word-table equality for
N >= 4 even though those terms do not contribute new operator content at
the displayed-equation level.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "MultiIndex",
    "EMPTY",
    "length",
    "entry_sum",
    "prefix_before",
    "in_level_set",
    "level",
    "moves",
    "Path",
    "enumerate_paths",
    "path_count",
    "mc_coefficient",
    "NCPolynomial",
    "mc_equation",
    "mc_equation_all_indices",
    "Composition",
    "compositions",
    "composition_weight",
    "infinitesimal_coefficients",
    "WordTable",
    "word_mul",
    "drop_run_words",
    "letter_derivative_words",
    "verify_mc_identity",
    "WordIdentityVerdict",
    "infinitesimal_word_identity",
    "kernel",
    "multi_index_graph",
]

MultiIndex = tuple
EMPTY: MultiIndex = ()


def length(s: MultiIndex) -> int:
    return len(s)


def entry_sum(s: MultiIndex) -> int:
    return sum(s)


def prefix_before(s: MultiIndex, i: int) -> MultiIndex:
    """Entries strictly before slot i (1-based)."""
    return s[: i - 1]


def level(s: MultiIndex) -> int:
    """The monotone quantity |s| + l(s)."""
    return sum(s) + len(s)


def in_level_set(s: MultiIndex, N: int) -> bool:
    """Membership in E_N: nonempty with |s| + l(s) <= N."""
    return s != EMPTY and level(s) <= N


def remaining_power(s: MultiIndex, N: int) -> int:
    """N(s) = N - |s| - l(s)."""
    return N - level(s)


def moves(s: MultiIndex) -> list[tuple[MultiIndex, int]]:
    """Outgoing edges with weights, in canonical order (stay, prepend,
    increments by slot)."""
    out = [(s, -1 if level(s) & 1 else 1), ((0,) + s, 1)]
    for i in range(1, len(s) + 1):
        w = -1 if (entry_sum(prefix_before(s, i)) + i - 1) & 1 else 1
        out.append((s[: i - 1] + (s[i - 1] + 1,) + s[i:], w))
    return out


@dataclass(frozen=True)
class Path:
    """A walk on the multi-index graph, stored by its vertex sequence."""

    vertices: tuple
    weight: int

    @property
    def steps(self) -> tuple:
        return tuple(zip(self.vertices, self.vertices[1:]))

    def recomputed_weight(self) -> int:
        w = 1
        for src, tgt in self.steps:
            for cand, cw in moves(src):
                if cand == tgt:
                    w *= cw
                    break
            else:
                raise ValueError(f"illegal step {src} -> {tgt}")
        return w

    def arrows(self) -> str:
        def fmt(v):
            return "<>" if v == EMPTY else "(" + ",".join(map(str, v)) + ")"

        return " -> ".join(fmt(v) for v in self.vertices)


def _reachable(s: MultiIndex, target: MultiIndex, steps_left: int) -> bool:
    """Prune: s must be entry-dominated by a suffix of the target and the
    level gap must fit in the remaining steps."""
    gap = level(target) - level(s)
    if gap < 0 or gap > steps_left:
        return False
    off = len(target) - len(s)
    if off < 0:
        return False
    return all(s[j] <= target[off + j] for j in range(len(s)))


def enumerate_paths(target: MultiIndex, N: int) -> list[Path]:
    """All length-N paths from the start vertex to the target, canonical
    order (move order: stay, prepend, increment by slot)."""
    target = tuple(target)
    out: list[Path] = []

    def walk(s, left, acc, w):
        if left == 0:
            if s == target:
                out.append(Path(tuple(acc), w))
            return
        for tgt, ew in moves(s):
            if _reachable(tgt, target, left - 1):
                acc.append(tgt)
                walk(tgt, left - 1, acc, w * ew)
                acc.pop()

    if N >= 0:
        walk(EMPTY, N, [EMPTY], 1)
    return out


def path_count(s: MultiIndex, N: int) -> int:
    return len(enumerate_paths(s, N))


def mc_coefficient(s: MultiIndex, N: int) -> int:
    """Total weight c(s, N) of length-N paths from the start to s.

    Memoized weighted count; materializes no paths.
    """
    target = tuple(s)
    memo: dict[tuple, int] = {}

    def count(v, left):
        if left == 0:
            return 1 if v == target else 0
        key = (v, left)
        hit = memo.get(key)
        if hit is not None:
            return hit
        total = 0
        for tgt, w in moves(v):
            if _reachable(tgt, target, left - 1):
                total += w * count(tgt, left - 1)
        memo[key] = total
        return total

    if not _reachable(EMPTY, target, N):
        return 0
    return count(EMPTY, N)


# -- symbolic coefficients -------------------------------------------------------


class NCPolynomial:
    """Integer combination of noncommutative words in the letters E_j
    (the j-th endomorphism derivative of the deformation) with an optional
    trailing power of the base differential."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple, int] | None = None):
        # key: (word tuple of letter indices, trailing d power)
        self.terms = {k: v for k, v in (terms or {}).items() if v}

    def __add__(self, other: "NCPolynomial") -> "NCPolynomial":
        terms = dict(self.terms)
        for k, v in other.terms.items():
            s = terms.get(k, 0) + v
            if s:
                terms[k] = s
            else:
                del terms[k]
        return NCPolynomial(terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, NCPolynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    @classmethod
    def from_word(cls, word: Sequence[int], coeff: int = 1, dpow: int = 0) -> "NCPolynomial":
        return cls({(tuple(word), dpow): coeff})

    def render(self) -> str:
        """Paper-style rendering: e, d(e), d2(e), juxtaposition, ^ powers."""
        if not self.terms:
            return "0"

        def letter(j):
            if j == 0:
                return "e"
            if j == 1:
                return "d(e)"
            return f"d{j}(e)"

        def word_str(word, dpow):
            bits = []
            k = 0
            while k < len(word):
                j = word[k]
                run = 1
                while k + run < len(word) and word[k + run] == j:
                    run += 1
                lett = letter(j)
                if run == 1:
                    bits.append(lett)
                elif j == 0:
                    bits.append(f"e^{run}")
                else:
                    bits.append(f"({lett})^{run}")
                k += run
            if dpow == 1:
                bits.append("d")
            elif dpow > 1:
                bits.append(f"d^{dpow}")
            return "".join(bits) if bits else "1"

        chunks = []
        for (word, dpow), c in sorted(self.terms.items(), key=lambda kv: (kv[0][1], len(kv[0][0]), kv[0][0])):
            body = word_str(word, dpow)
            if c == 1:
                piece = body
            elif c == -1:
                piece = f"-{body}"
            else:
                piece = f"{c}{body}"
            if chunks and not piece.startswith("-"):
                chunks.append("+ " + piece)
            elif chunks:
                chunks.append("- " + piece[1:])
            else:
                chunks.append(piece)
        return " ".join(chunks)

    def to_json(self) -> list:
        return [
            {"word": list(word), "dpow": dpow, "coeff": c}
            for (word, dpow), c in sorted(self.terms.items())
        ]

    def __repr__(self):
        return f"<NC {self.render()}>"


def _index_level_set(N: int) -> Iterator[MultiIndex]:
    """All nonempty multi-indices with |s| + l(s) <= N."""

    def gen(prefix, budget):
        for first in range(0, budget):  # entry 'first' consumes first+1 level
            s = prefix + (first,)
            yield s
            yield from gen(s, budget - first - 1)

    yield from gen((), N)


def mc_equation(N: int, entry_bound: int = 3) -> dict[int, NCPolynomial]:
    """Coefficients c_k of the deformation equation, k = 0 .. N-1.

    c_k sums c(s, N) * E_{s_1}...E_{s_l} over multi-indices with
    N(s) = k and all entries below ``entry_bound`` (the bound reflects the
    cube-zero base differential in the displayed equation).
    """
    if N < 3:
        raise ValueError("the deformation equation needs N >= 3")
    out = {k: NCPolynomial() for k in range(N)}
    for s in _index_level_set(N):
        if any(e >= entry_bound for e in s):
            continue
        k = remaining_power(s, N)
        c = mc_coefficient(s, N)
        if c:
            out[k] = out[k] + NCPolynomial.from_word(s, c)
    return out


def mc_equation_all_indices(N: int) -> dict[int, NCPolynomial]:
    """Like :func:`mc_equation` but without the entry filter (used by the
    word oracle, where every letter has a nonzero word expansion)."""
    out = {k: NCPolynomial() for k in range(N + 1)}
    for s in _index_level_set(N):
        k = remaining_power(s, N)
        c = mc_coefficient(s, N)
        if c:
            out[k] = out[k] + NCPolynomial.from_word(s, c)
    out[N] = out[N] + NCPolynomial.from_word((), mc_coefficient(EMPTY, N))
    return out


# -- compositions and the square-zero-parameter expansion -----------------------


@dataclass(frozen=True)
class Composition:
    """A tuple of non-negative parts with fixed length."""

    parts: tuple

    @property
    def weight(self) -> int:
        return sum(i * p for i, p in enumerate(self.parts))

    def __iter__(self):
        return iter(self.parts)


def compositions(k: int, parts: int) -> Iterator[Composition]:
    """All tuples of ``parts`` non-negative integers summing to k."""
    if parts == 0:
        if k == 0:
            yield Composition(())
        return

    def gen(prefix, remaining, slots):
        if slots == 1:
            yield Composition(prefix + (remaining,))
            return
        for v in range(remaining + 1):
            yield from gen(prefix + (v,), remaining - v, slots - 1)

    yield from gen((), k, parts)


def composition_weight(p: Sequence[int]) -> int:
    return sum(i * v for i, v in enumerate(p))


def infinitesimal_coefficients(N: int) -> list[int]:
    """Signed composition counts sum((-1)^w(p)) over compositions of k into
    N-k+1 parts, for k = 0 .. N-1.

    Equal, term by term, to the path coefficient c((N-k-1), N); the
    acceptance suite asserts that identity.
    """
    if N < 2:
        raise ValueError("needs N >= 2")
    out = []
    for k in range(N):
        total = 0
        for p in compositions(k, N - k + 1):
            total += -1 if p.weight & 1 else 1
        out.append(total)
    return out


# -- noncommutative word oracle ---------------------------------------------------

WordTable = dict  # str word over {"d", "e"} -> int coefficient


def word_mul(a: WordTable, b: WordTable) -> WordTable:
    out: WordTable = {}
    for w1, c1 in a.items():
        for w2, c2 in b.items():
            w = w1 + w2
            s = out.get(w, 0) + c1 * c2
            if s:
                out[w] = s
            else:
                out.pop(w, None)
    return out


def word_add(a: WordTable, b: WordTable, scale: int = 1) -> WordTable:
    out = {w: c for w, c in a.items() if c}
    for w, c in b.items():
        s = out.get(w, 0) + scale * c
        if s:
            out[w] = s
        else:
            out.pop(w, None)
    return out


def drop_run_words(table: WordTable, run: int, letter: str = "d") -> WordTable:
    """Delete words containing ``run`` consecutive copies of the letter."""
    bad = letter * run
    return {w: c for w, c in table.items() if bad not in w}


def letter_derivative_words(j: int) -> WordTable:
    """Word expansion of the j-th endomorphism derivative of e.

    Recursion: W_0 = e, W_{j+1} = d W_j - (-1)^(j+1) W_j d (the letter has
    degree j + 1).
    """
    w: WordTable = {"e": 1}
    for step in range(j):
        degree = step + 1
        sign = -1 if degree % 2 == 0 else 1
        w = word_add(word_mul({"d": 1}, w), word_mul(w, {"d": 1}), scale=sign)
    return w


@dataclass(frozen=True)
class WordIdentityVerdict:
    N: int
    equal: bool
    lhs_words: int
    rhs_words: int
    mismatches: tuple

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "equal": self.equal,
            "lhs_words": self.lhs_words,
            "rhs_words": self.rhs_words,
            "mismatches": [list(m) for m in self.mismatches],
        }


def verify_mc_identity(N: int, run: int = 3) -> WordIdentityVerdict:
    """Word-level check that (d+e)^N equals the assembled coefficient
    expansion, modulo words containing d^run.

    The left side expands the 2^N binomial words.  The right side expands
    every coefficient term through the letter recursion (all multi-index
    entries, see the module docstring) and appends the trailing d power.
    """
    if N < run:
        raise ValueError(f"needs N >= {run}")
    lhs: WordTable = {"": 1}
    for _ in range(N):
        lhs = word_add(word_mul(lhs, {"d": 1}), word_mul(lhs, {"e": 1}))
    lhs = drop_run_words(lhs, run)

    rhs: WordTable = {}
    letter_cache: dict[int, WordTable] = {}

    def letter(j):
        if j not in letter_cache:
            letter_cache[j] = letter_derivative_words(j)
        return letter_cache[j]

    coeffs = mc_equation_all_indices(N)
    for k, nc in coeffs.items():
        for (word, dpow), c in nc.terms.items():
            assert dpow == 0
            table: WordTable = {"": c}
            for j in word:
                table = word_mul(table, letter(j))
            if k:
                table = word_mul(table, {"d" * k: 1})
            rhs = word_add(rhs, table)
    rhs = drop_run_words(rhs, run)

    mismatches = []
    for w in sorted(set(lhs) | set(rhs)):
        if lhs.get(w, 0) != rhs.get(w, 0):
            mismatches.append((w, lhs.get(w, 0), rhs.get(w, 0)))
    return WordIdentityVerdict(N, not mismatches, len(lhs), len(rhs), tuple(mismatches))


def infinitesimal_word_identity(N: int) -> bool:
    """Check the square-zero-parameter expansion at the word level.

    Ambient differential is N-nilpotent, the deformation parameter squares
    to zero: both sides keep only words with at most one e and no run of N
    d's.  The right side uses the trailing power d^k (the grouping forced
    by the expansion D^N = sum c_k d^k)."""
    lhs: WordTable = {"": 1}
    for _ in range(N):
        lhs = word_add(word_mul(lhs, {"d": 1}), word_mul(lhs, {"e": 1}))
    lhs = {w: c for w, c in lhs.items() if w.count("e") <= 1}
    lhs.pop("d" * N, None)
    lhs = drop_run_words(lhs, N)

    coeffs = infinitesimal_coefficients(N)
    rhs: WordTable = {}
    for k in range(N):
        table: WordTable = {"": coeffs[k]}
        table = word_mul(table, letter_derivative_words(N - k - 1))
        if k:
            table = word_mul(table, {"d" * k: 1})
        rhs = word_add(rhs, table)
    rhs = drop_run_words(rhs, N)
    return lhs == rhs


# -- generic weighted path kernel --------------------------------------------------


def multi_index_graph(bound: int) -> dict:
    """The multi-index graph restricted to vertices with level <= bound.

    Edges whose target leaves the level set are dropped; path queries whose
    endpoints satisfy the bound are unaffected because the level never
    decreases along an edge (the pruning certificate for this infinite
    graph).
    """
    verts = [EMPTY] + [s for s in _index_level_set(bound)]
    vset = set(verts)
    return {v: [(t, w) for t, w in moves(v) if t in vset] for v in verts}


def kernel(graph: Mapping, n: int, x, y, method: str = "both"):
    """n-step weighted path kernel from x to y on an explicit digraph.

    ``graph`` maps vertex -> list of (target, weight).  Backends:
    enumeration (depth-first product sums) and matrix (repeated
    vector-matrix products); ``both`` runs the two and asserts agreement.
    """
    if x not in graph or y not in graph:
        raise KeyError("endpoints must be vertices of the graph")

    def enum():
        total = 0

        def walk(v, left, w):
            nonlocal total
            if left == 0:
                if v == y:
                    total += w
                return
            for t, ew in graph.get(v, ()):
                walk(t, left - 1, w * ew)

        walk(x, n, 1)
        return total

    def matrix():
        vec = {x: 1}
        for _ in range(n):
            nxt: dict = {}
            for v, c in vec.items():
                for t, w in graph.get(v, ()):
                    nxt[t] = nxt.get(t, 0) + c * w
            vec = {v: c for v, c in nxt.items() if c}
        return vec.get(y, 0)

    if method == "enumeration":
        return enum()
    if method == "matrix":
        return matrix()
    a, b = enum(), matrix()
    if a != b:
        raise AssertionError(f"kernel backends disagree: {a} != {b}")
    return a
