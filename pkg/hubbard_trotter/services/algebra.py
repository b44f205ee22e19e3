"""Symbolic algebra for fermionic lattice operators.

Expressions are immutable values built from three kinds of leaves (hopping,
signed hopping, number operator), products of leaves and sums. Every
constructor in this module returns the canonical form:

- hopping terms store their sites in lexicographic order; signed hopping terms
  flip their sign when reordered;
- products are flat and hold unit-weight leaves. Non-commuting factors keep the
  order in which they were produced, and commuting factors are sorted;
- sums are sorted, like terms are merged and weights below SCALAR_TOL dropped.

Commutators of leaves are evaluated from their one-body matrices and extended
to sums by bilinearity and to products by the Leibniz rule. Translation
invariant operators are carried as a single local representative together with
the sublattice Λ' of their translations.
"""

from __future__ import annotations

import functools
import itertools
import logging
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, replace
from enum import IntEnum
from fractions import Fraction
from functools import cached_property, lru_cache
from numbers import Rational

import numpy as np

from hubbard_trotter import HubbardTrotterError
from hubbard_trotter.config import SCALAR_TOL

logger = logging.getLogger(__name__)

Site = tuple[int, ...]
Scalar = Fraction | float
Degree = tuple[int, int]

ONE = Fraction(1)


class OperatorError(HubbardTrotterError, ValueError):
    """Raised for malformed operator terms or incompatible operands."""


class Spin(IntEnum):
    UP = 0
    DOWN = 1

    def flip(self) -> Spin:
        return Spin(1 - self.value)

    def __str__(self) -> str:
        return "↑" if self is Spin.UP else "↓"


Mode = tuple[Site, Spin]


def as_scalar(value) -> Scalar:
    """Integers and rationals stay exact, everything else becomes a float."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise OperatorError("boolean is not a valid operator weight")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, Rational):
        return Fraction(value)
    return float(value)


def as_site(coords) -> Site:
    if isinstance(coords, (int, np.integer)):
        return (int(coords),)
    return tuple(int(c) for c in coords)


def _negligible(value: Scalar) -> bool:
    return abs(value) < SCALAR_TOL


def _shift(site: Site, d: Site) -> Site:
    if len(site) != len(d):
        raise OperatorError(f"displacement {d} does not match site dimension {len(site)}")
    return tuple(a + b for a, b in zip(site, d))


def format_scalar(value: Scalar) -> str:
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return f"{value:.6g}"


def _fmt_site(site: Site) -> str:
    if len(site) == 1:
        return str(site[0])
    return "(" + ",".join(str(c) for c in site) + ")"


# ---------------------------------------------------------------------------
# Expression classes
# ---------------------------------------------------------------------------


class OpExpr:
    """Base class of all operator expressions."""

    is_zero = False

    def terms(self) -> Iterator[tuple[Scalar, OpExpr]]:
        """Yield (weight, unit term) pairs."""
        raise NotImplementedError

    def modes(self) -> frozenset[Mode]:
        raise NotImplementedError

    def translate(self, d: Site) -> OpExpr:
        raise NotImplementedError

    def scale(self, c) -> OpExpr:
        c = as_scalar(c)
        return _sum((w * c, u) for w, u in self.terms())

    @property
    def sites(self) -> frozenset[Site]:
        return frozenset(site for site, _ in self.modes())

    @property
    def is_quadratic(self) -> bool:
        return all(isinstance(u, _LEAF_TYPES) for _, u in self.terms())

    def __add__(self, other: OpExpr) -> OpExpr:
        if not isinstance(other, OpExpr):
            return NotImplemented
        return _sum(itertools.chain(self.terms(), other.terms()))

    def __neg__(self) -> OpExpr:
        return self.scale(-1)

    def __sub__(self, other: OpExpr) -> OpExpr:
        if not isinstance(other, OpExpr):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other) -> OpExpr:
        if isinstance(other, OpExpr):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other) -> OpExpr:
        return self.scale(other)

    def __str__(self) -> str:
        return format_expr(self)


class _Leaf(OpExpr):
    """Shared behaviour of hopping, signed hopping and number operators."""

    rank = -1
    symbol = "?"

    def unit(self) -> OpExpr:
        return self if self.coeff == ONE else replace(self, coeff=ONE)

    def scale(self, c) -> OpExpr:
        w = self.coeff * as_scalar(c)
        return ZERO if _negligible(w) else replace(self, coeff=w)

    def terms(self) -> Iterator[tuple[Scalar, OpExpr]]:
        if not _negligible(self.coeff):
            yield self.coeff, self.unit()

    def factors(self) -> tuple[OpExpr, ...]:
        return (self.unit(),)

    def sort_key(self) -> tuple:
        return (self.rank, self.site_pair, int(self.spin))

    def modes(self) -> frozenset[Mode]:
        return frozenset((s, self.spin) for s in self.site_pair)

    def one_body(self) -> dict[tuple[Site, Site], Fraction]:
        raise NotImplementedError

    def label(self) -> str:
        inner = ",".join(_fmt_site(s) for s in self.site_pair)
        return f"{self.symbol}({inner},{self.spin})"


@dataclass(frozen=True)
class HoppingOp(_Leaf):
    """coeff · (a†_i a_j + a†_j a_i) for one spin."""

    i: Site
    j: Site
    spin: Spin
    coeff: Scalar = ONE

    rank = 0
    symbol = "h"

    def __post_init__(self):
        i, j = as_site(self.i), as_site(self.j)
        if len(i) != len(j):
            raise OperatorError(f"sites {i} and {j} have different dimensions")
        if i == j:
            raise OperatorError(f"hopping term needs two distinct sites, got {i} twice")
        if j < i:
            i, j = j, i
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "spin", Spin(self.spin))
        object.__setattr__(self, "coeff", as_scalar(self.coeff))

    @property
    def site_pair(self) -> tuple[Site, ...]:
        return (self.i, self.j)

    def translate(self, d: Site) -> OpExpr:
        return replace(self, i=_shift(self.i, d), j=_shift(self.j, d))

    def one_body(self):
        return {(self.i, self.j): ONE, (self.j, self.i): ONE}


@dataclass(frozen=True)
class AntisymmHoppingOp(_Leaf):
    """coeff · (a†_i a_j - a†_j a_i) for one spin."""

    i: Site
    j: Site
    spin: Spin
    coeff: Scalar = ONE

    rank = 1
    symbol = "h~"

    def __post_init__(self):
        i, j = as_site(self.i), as_site(self.j)
        coeff = as_scalar(self.coeff)
        if len(i) != len(j):
            raise OperatorError(f"sites {i} and {j} have different dimensions")
        if i == j:
            raise OperatorError(f"signed hopping on a single site {i} is zero; use ahop()")
        if j < i:
            i, j, coeff = j, i, -coeff
        object.__setattr__(self, "i", i)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "spin", Spin(self.spin))
        object.__setattr__(self, "coeff", coeff)

    @property
    def site_pair(self) -> tuple[Site, ...]:
        return (self.i, self.j)

    def translate(self, d: Site) -> OpExpr:
        return replace(self, i=_shift(self.i, d), j=_shift(self.j, d))

    def one_body(self):
        return {(self.i, self.j): ONE, (self.j, self.i): -ONE}


@dataclass(frozen=True)
class NumberOp(_Leaf):
    """coeff · a†_i a_i for one spin."""

    i: Site
    spin: Spin
    coeff: Scalar = ONE

    rank = 2
    symbol = "n"

    def __post_init__(self):
        object.__setattr__(self, "i", as_site(self.i))
        object.__setattr__(self, "spin", Spin(self.spin))
        object.__setattr__(self, "coeff", as_scalar(self.coeff))

    @property
    def site_pair(self) -> tuple[Site, ...]:
        return (self.i,)

    def translate(self, d: Site) -> OpExpr:
        return replace(self, i=_shift(self.i, d))

    def one_body(self):
        return {(self.i, self.i): ONE}


_LEAF_TYPES = (HoppingOp, AntisymmHoppingOp, NumberOp)


@dataclass(frozen=True)
class ZeroOp(OpExpr):
    """The zero operator."""

    is_zero = True

    def terms(self):
        return iter(())

    def modes(self):
        return frozenset()

    def translate(self, d: Site) -> OpExpr:
        return self

    def scale(self, c) -> OpExpr:
        return self


ZERO = ZeroOp()


@dataclass(frozen=True)
class ProductOp(OpExpr):
    """coeff · F_1 F_2 ... F_n with unit-weight leaf factors in normal order."""

    word: tuple[OpExpr, ...]
    coeff: Scalar = ONE

    def __post_init__(self):
        object.__setattr__(self, "coeff", as_scalar(self.coeff))

    def unit(self) -> OpExpr:
        return self if self.coeff == ONE else replace(self, coeff=ONE)

    def factors(self) -> tuple[OpExpr, ...]:
        return self.word

    def terms(self):
        if not _negligible(self.coeff):
            yield self.coeff, self.unit()

    def scale(self, c) -> OpExpr:
        w = self.coeff * as_scalar(c)
        return ZERO if _negligible(w) else replace(self, coeff=w)

    @cached_property
    def _modes(self) -> frozenset[Mode]:
        return frozenset().union(*(f.modes() for f in self.word))

    def modes(self):
        return self._modes

    def sort_key(self) -> tuple:
        return (3, tuple(f.sort_key() for f in self.word))

    def translate(self, d: Site) -> OpExpr:
        return replace(self, word=tuple(f.translate(d) for f in self.word))


@dataclass(frozen=True)
class SumOp(OpExpr):
    """Sum of weighted leaves and products in canonical order."""

    summands: tuple[OpExpr, ...]

    def terms(self):
        for t in self.summands:
            yield from t.terms()

    @cached_property
    def _modes(self) -> frozenset[Mode]:
        return frozenset().union(*(t.modes() for t in self.summands))

    def modes(self):
        return self._modes

    def translate(self, d: Site) -> OpExpr:
        return SumOp(tuple(t.translate(d) for t in self.summands))


# ---------------------------------------------------------------------------
# Constructors and canonical form
# ---------------------------------------------------------------------------


def hop(i, j, spin: Spin, coeff=1) -> OpExpr:
    """coeff · h_ijσ."""
    return HoppingOp(i, j, spin).scale(coeff)


def ahop(i, j, spin: Spin, coeff=1) -> OpExpr:
    """coeff · h̃_ijσ; zero when i = j."""
    if as_site(i) == as_site(j):
        return ZERO
    return AntisymmHoppingOp(i, j, spin).scale(coeff)


def num(i, spin: Spin, coeff=1) -> OpExpr:
    """coeff · n_iσ."""
    return NumberOp(i, spin).scale(coeff)


def total(exprs: Iterable[OpExpr]) -> OpExpr:
    return _sum(itertools.chain.from_iterable(e.terms() for e in exprs))


def _sum(pairs: Iterable[tuple[Scalar, OpExpr]]) -> OpExpr:
    acc: dict[OpExpr, Scalar] = {}
    for w, u in pairs:
        prev = acc.get(u)
        acc[u] = w if prev is None else prev + w
    items = sorted(
        ((u, w) for u, w in acc.items() if not _negligible(w)),
        key=lambda uw: uw[0].sort_key(),
    )
    if not items:
        return ZERO
    summands = tuple(u.scale(w) for u, w in items)
    if len(summands) == 1:
        return summands[0]
    return SumOp(summands)


def _commute_factors(f: OpExpr, g: OpExpr) -> bool:
    if f == g:
        return True
    if isinstance(f, NumberOp) and isinstance(g, NumberOp):
        return True
    return f.modes().isdisjoint(g.modes())


def _normal_order(factors: Sequence[OpExpr]) -> list[OpExpr]:
    # Lexicographically smallest word reachable by swapping adjacent commuting factors.
    remaining = list(factors)
    out: list[OpExpr] = []
    while remaining:
        best = None
        for k, f in enumerate(remaining):
            if best is not None and f.sort_key() >= remaining[best].sort_key():
                continue
            if all(_commute_factors(g, f) for g in remaining[:k]):
                best = k
        f = remaining.pop(best)
        if out and isinstance(f, NumberOp) and out[-1] == f:
            continue  # n·n = n
        out.append(f)
    return out


def _product(coeff: Scalar, factors: Sequence[OpExpr]) -> OpExpr:
    if _negligible(coeff):
        return ZERO
    ordered = _normal_order(factors)
    if len(ordered) == 1:
        return ordered[0].scale(coeff)
    return ProductOp(tuple(ordered), coeff)


def multiply(a: OpExpr, b: OpExpr) -> OpExpr:
    """Operator product a·b, expanded over sums."""
    pairs = []
    for wa, ua in a.terms():
        for wb, ub in b.terms():
            pairs.extend(_product(wa * wb, ua.factors() + ub.factors()).terms())
    return _sum(pairs)


def canonicalize(expr: OpExpr) -> OpExpr:
    return _sum(expr.terms())


def support(expr: OpExpr) -> frozenset[Mode]:
    """Set of (site, spin) modes the expression acts on."""
    return expr.modes()


def translate(expr: OpExpr, d) -> OpExpr:
    """Shift every site of the expression by d."""
    return expr.translate(as_site(d))


# ---------------------------------------------------------------------------
# Commutators
# ---------------------------------------------------------------------------


def commute_elementary(a: OpExpr, b: OpExpr) -> OpExpr:
    """[a, b] for two leaves via their one-body matrices."""
    if not (isinstance(a, _LEAF_TYPES) and isinstance(b, _LEAF_TYPES)):
        raise OperatorError("commute_elementary expects hopping, signed hopping or number terms")
    if a.spin != b.spin or a.modes().isdisjoint(b.modes()):
        return ZERO
    m, n = a.one_body(), b.one_body()
    c: dict[tuple[Site, Site], Fraction] = {}
    for (p, q), x in m.items():
        for (r, s), y in n.items():
            if q == r:
                c[p, s] = c.get((p, s), 0) + x * y
            if s == p:
                c[r, q] = c.get((r, q), 0) - x * y

    spin = a.spin
    pairs = []
    seen = set()
    for (p, s), x in c.items():
        if p == s:
            pairs.append((x, NumberOp(p, spin)))
            continue
        lo, hi = min(p, s), max(p, s)
        if (lo, hi) in seen:
            continue
        seen.add((lo, hi))
        fwd, bwd = c.get((lo, hi), 0), c.get((hi, lo), 0)
        pairs.append((Fraction(fwd + bwd, 2), HoppingOp(lo, hi, spin)))
        pairs.append((Fraction(fwd - bwd, 2), AntisymmHoppingOp(lo, hi, spin)))
    return _sum(pairs).scale(a.coeff * b.coeff)


def _commute_units(x: OpExpr, y: OpExpr, weight: Scalar) -> list[tuple[Scalar, OpExpr]]:
    # [X_1..X_n, Y_1..Y_m] = Σ_kl X_<k Y_<l [X_k, Y_l] Y_>l X_>k
    xf, yf = x.factors(), y.factors()
    out = []
    for k, xk in enumerate(xf):
        for l, yl in enumerate(yf):
            if xk.modes().isdisjoint(yl.modes()):
                continue
            for w, leaf in commute_elementary(xk, yl).terms():
                word = xf[:k] + yf[:l] + (leaf,) + yf[l + 1:] + xf[k + 1:]
                out.extend(_product(weight * w, word).terms())
    return out


def commutator(a: OpExpr, b: OpExpr) -> OpExpr:
    """[a, b] expanded by bilinearity and the Leibniz rule."""
    pairs = []
    for wa, ua in a.terms():
        for wb, ub in b.terms():
            if ua == ub or ua.modes().isdisjoint(ub.modes()):
                continue
            # expand every unordered pair in one orientation so that [b,a] = -[a,b] term by term
            if ua.sort_key() <= ub.sort_key():
                pairs.extend(_commute_units(ua, ub, wa * wb))
            else:
                pairs.extend((-w, u) for w, u in _commute_units(ub, ua, wa * wb))
    return _sum(pairs)


# ---------------------------------------------------------------------------
# Translation invariant operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubLattice:
    """Translation group Λ' spanned by integer unit vectors."""

    unit_vectors: tuple[Site, ...]

    def __post_init__(self):
        vecs = tuple(as_site(v) for v in self.unit_vectors)
        if not vecs:
            raise OperatorError("a sublattice needs at least one unit vector")
        if len({len(v) for v in vecs}) != 1:
            raise OperatorError("sublattice unit vectors have different dimensions")
        if np.linalg.matrix_rank(np.array(vecs, dtype=float)) != len(vecs):
            raise OperatorError(f"sublattice unit vectors {vecs} are linearly dependent")
        object.__setattr__(self, "unit_vectors", vecs)

    @property
    def dim(self) -> int:
        return len(self.unit_vectors[0])

    @cached_property
    def _basis(self) -> np.ndarray:
        return np.array(self.unit_vectors, dtype=float).T

    def _coefficients(self, vec: Site) -> np.ndarray:
        if len(vec) != self.dim:
            raise OperatorError(f"vector {vec} does not match sublattice dimension {self.dim}")
        coeffs, *_ = np.linalg.lstsq(self._basis, np.asarray(vec, dtype=float), rcond=None)
        return coeffs

    def combine(self, coeffs: Sequence[int]) -> Site:
        return tuple(
            sum(int(c) * v[k] for c, v in zip(coeffs, self.unit_vectors))
            for k in range(self.dim)
        )

    def contains(self, vec) -> bool:
        return _lattice_contains(self, as_site(vec))

    def reduce(self, site) -> tuple[Site, Site]:
        """Split a site into (coset representative, Λ' vector)."""
        return _lattice_reduce(self, as_site(site))

    def vectors_within(self, radius: int) -> list[Site]:
        """All Λ' vectors with integer coefficients in [-radius, radius], shortest first."""
        span = range(-radius, radius + 1)
        vecs = {self.combine(c) for c in itertools.product(span, repeat=len(self.unit_vectors))}
        return sorted(vecs, key=lambda v: (sum(abs(x) for x in v), v))


@lru_cache(maxsize=65536)
def _lattice_contains(lattice: SubLattice, vec: Site) -> bool:
    coeffs = np.rint(lattice._coefficients(vec)).astype(int)
    return lattice.combine(coeffs) == vec


@lru_cache(maxsize=65536)
def _lattice_reduce(lattice: SubLattice, site: Site) -> tuple[Site, Site]:
    coeffs = np.floor(lattice._coefficients(site) + 1e-9).astype(int)
    shift = lattice.combine(coeffs)
    return tuple(s - d for s, d in zip(site, shift)), shift


@dataclass(frozen=True)
class TranslatedOperator:
    """Σ_{i∈Λ'} translate(local, i), carried by its local representative."""

    local: OpExpr
    sublattice: SubLattice

    @property
    def is_zero(self) -> bool:
        return self.local.is_zero

    def __str__(self) -> str:
        return f"Σ_{{i∈Λ'}} [{format_expr(self.local)}]"


def merge_translates(expr: OpExpr, sublattice: SubLattice) -> OpExpr:
    """Merge summands that are Λ'-translates of each other.

    Each class is placed where its canonically first member sits; the translated
    sum over Λ' is unchanged.
    """
    groups: dict[OpExpr, list] = {}
    for w, u in expr.terms():
        _, shift = sublattice.reduce(min(u.sites))
        key = u.translate(tuple(-x for x in shift))
        if key in groups:
            groups[key][1] += w
        else:
            groups[key] = [shift, w]
    return _sum((w, key.translate(shift)) for key, (shift, w) in groups.items())


def commute_translated(a: TranslatedOperator, b: TranslatedOperator) -> TranslatedOperator:
    """Commutator of two translation invariant sums.

    The outer operand is translated over Λ' onto the support of the inner one,
    which stays at the origin: Σ_ℓ [a_ℓ, b_0].
    """
    if a.sublattice != b.sublattice:
        raise OperatorError("commutator operands live on different sublattices")
    lattice = a.sublattice
    if a.is_zero or b.is_zero:
        return TranslatedOperator(ZERO, lattice)
    shifts = sorted({
        tuple(q - p for p, q in zip(sa, sb))
        for sa in a.local.sites
        for sb in b.local.sites
    })
    pairs = []
    for d in shifts:
        if not lattice.contains(d):
            continue
        pairs.extend(commutator(a.local.translate(d), b.local).terms())
    return TranslatedOperator(merge_translates(_sum(pairs), lattice), lattice)


@dataclass(frozen=True)
class GradedOperator:
    """Translated operator split into homogeneous parts keyed by (v_deg, u_deg)."""

    components: tuple[tuple[Degree, TranslatedOperator], ...]
    sublattice: SubLattice

    @classmethod
    def single(cls, op: TranslatedOperator, degree: Degree) -> GradedOperator:
        if op.is_zero:
            return cls((), op.sublattice)
        return cls(((degree, op),), op.sublattice)

    @classmethod
    def _build(cls, parts: dict[Degree, list[OpExpr]], sublattice: SubLattice) -> GradedOperator:
        comps = []
        for degree in sorted(parts):
            local = merge_translates(total(parts[degree]), sublattice)
            if not local.is_zero:
                comps.append((degree, TranslatedOperator(local, sublattice)))
        return cls(tuple(comps), sublattice)

    @property
    def is_zero(self) -> bool:
        return not self.components

    def as_dict(self) -> dict[Degree, TranslatedOperator]:
        return dict(self.components)

    def __add__(self, other: GradedOperator) -> GradedOperator:
        parts: dict[Degree, list[OpExpr]] = {}
        for degree, op in self.components + other.components:
            parts.setdefault(degree, []).append(op.local)
        return GradedOperator._build(parts, self.sublattice)

    def commutator(self, other: GradedOperator) -> GradedOperator:
        parts: dict[Degree, list[OpExpr]] = {}
        for da, a in self.components:
            for db, b in other.components:
                c = commute_translated(a, b)
                if not c.is_zero:
                    parts.setdefault((da[0] + db[0], da[1] + db[1]), []).append(c.local)
        return GradedOperator._build(parts, self.sublattice)


def monomial_degree(chain: Sequence[int], v_terms: Iterable[int]) -> Degree:
    """(v_deg, u_deg) of a nested commutator over the given term indices."""
    v_terms = set(v_terms)
    v_deg = sum(1 for g in chain if g in v_terms)
    return v_deg, len(chain) - v_deg


# ---------------------------------------------------------------------------
# Text output
# ---------------------------------------------------------------------------


def _fmt_unit(u: OpExpr) -> str:
    if isinstance(u, ProductOp):
        return "·".join(f.label() for f in u.factors())
    return u.label()


def format_expr(expr: OpExpr) -> str:
    parts = []
    for w, u in expr.terms():
        sign = "-" if w < 0 else "+"
        mag = abs(w)
        body = _fmt_unit(u) if mag == 1 else f"{format_scalar(mag)} {_fmt_unit(u)}"
        parts.append((sign, body))
    if not parts:
        return "0"
    text = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def _map_leaf(leaf: OpExpr, fn) -> OpExpr:
    if isinstance(leaf, HoppingOp):
        return hop(fn(leaf.i), fn(leaf.j), leaf.spin)
    if isinstance(leaf, AntisymmHoppingOp):
        return ahop(fn(leaf.i), fn(leaf.j), leaf.spin)
    return num(fn(leaf.i), leaf.spin)


def map_sites(expr: OpExpr, fn) -> OpExpr:
    """Rebuild the expression with every site replaced by fn(site)."""
    out = []
    for w, u in expr.terms():
        factors = [_map_leaf(f, fn) for f in u.factors()]
        out.append(functools.reduce(multiply, factors).scale(w))
    return total(out)
