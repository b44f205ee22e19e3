"""Lattice geometries and the Fermi-Hubbard decompositions H_FH = Σ_γ H_γ.

Each decomposition term is translation invariant under a sublattice Λ' and is
stored by its local representative at the origin, with unit coupling; the
coupling tag ("v" for kinetic, "u" for interaction) records which parameter the
term carries.

Triangular lattice sites use the integer embedding (1, 0) ↦ (2, -1, -1),
(1/2, √3/2) ↦ (1, 1, -2); embedded coordinates always sum to zero.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

from hubbard_trotter import HubbardTrotterError
from hubbard_trotter.services.algebra import (
    GradedOperator,
    OpExpr,
    Site,
    Spin,
    SubLattice,
    TranslatedOperator,
    hop,
    map_sites,
    num,
    total,
    translate,
)

logger = logging.getLogger(__name__)


class LatticeError(HubbardTrotterError, ValueError):
    """Raised for unknown geometries or torus extents incompatible with Λ'."""


# Hexagon vertices g_1..g_6 of the triangular lattice, counterclockwise from angle 0
HEXAGON = (
    (2, -1, -1),
    (1, 1, -2),
    (-1, 2, -1),
    (-2, 1, 1),
    (-1, -1, 2),
    (1, -2, 1),
)

# Square plaquette vertices p_1..p_4
PLAQUETTE = ((0, 0), (1, 0), (1, 1), (0, 1))

# Nearest-neighbour directions in lattice coordinates
_NEIGHBOURS = {
    "1d": ((1,),),
    "square": ((1, 0), (0, 1)),
    "triangular": ((1, 0), (0, 1), (-1, 1)),
}

# Smallest torus extent per axis and the step extents must be a multiple of
_EXTENT_RULES = {
    "1d": (4, 2),
    "square": (4, 2),
    "triangular": (3, 3),
}


@dataclass(frozen=True)
class Geometry:
    kind: str
    sublattice: SubLattice
    site_ratio: int

    @property
    def dim(self) -> int:
        return self.sublattice.dim

    @property
    def lattice_dim(self) -> int:
        return len(_NEIGHBOURS[self.kind][0])

    def to_lattice(self, site: Site) -> tuple[int, ...]:
        """Embedded coordinates → integer lattice coordinates."""
        if self.kind != "triangular":
            return tuple(site)
        x0, x1, _ = site
        return ((x0 - x1) // 3, (x0 + 2 * x1) // 3)

    def from_lattice(self, coords: Sequence[int]) -> Site:
        if self.kind != "triangular":
            return tuple(int(c) for c in coords)
        a, b = coords
        return (2 * a + b, -a + b, -a - 2 * b)

    def check_extents(self, extents: Sequence[int]) -> tuple[int, ...]:
        extents = tuple(int(n) for n in extents)
        if len(extents) != self.lattice_dim:
            raise LatticeError(
                f"{self.kind} torus needs {self.lattice_dim} extents, got {len(extents)}"
            )
        minimum, step = _EXTENT_RULES[self.kind]
        for n in extents:
            if n < minimum:
                raise LatticeError(
                    f"extent {n} too small for a {self.kind} torus (minimum {minimum}); "
                    "wrap-around would produce coincident bonds"
                )
            if n % step:
                raise LatticeError(f"extent {n} is not commensurate with Λ' (multiple of {step})")
        return extents

    def wrap(self, site: Site, extents: Sequence[int]) -> Site:
        coords = self.to_lattice(site)
        return self.from_lattice(tuple(c % n for c, n in zip(coords, extents)))

    def torus_sites(self, extents: Sequence[int]) -> list[Site]:
        extents = self.check_extents(extents)
        return [self.from_lattice(c) for c in itertools.product(*(range(n) for n in extents))]

    def cell_origins(self, extents: Sequence[int]) -> list[Site]:
        """Points of Λ' inside the torus."""
        return [s for s in self.torus_sites(extents) if self.sublattice.contains(s)]

    def bonds(self, extents: Sequence[int]) -> list[tuple[Site, Site]]:
        """Nearest-neighbour bonds of the torus, each listed once."""
        out = []
        for coords in itertools.product(*(range(n) for n in self.check_extents(extents))):
            for step in _NEIGHBOURS[self.kind]:
                other = tuple((c + d) % n for c, d, n in zip(coords, step, extents))
                out.append((self.from_lattice(coords), self.from_lattice(other)))
        return out


@dataclass(frozen=True)
class HamiltonianTerm:
    op: TranslatedOperator
    coupling: str
    label: str


@dataclass(frozen=True)
class Decomposition:
    geometry: Geometry
    terms: tuple[HamiltonianTerm, ...]

    @property
    def gamma(self) -> int:
        return len(self.terms)

    @property
    def v_terms(self) -> frozenset[int]:
        return frozenset(k for k, t in enumerate(self.terms) if t.coupling == "v")

    def graded(self, index: int) -> GradedOperator:
        term = self.terms[index]
        degree = (1, 0) if term.coupling == "v" else (0, 1)
        return GradedOperator.single(term.op, degree)

    def scaled_local(self, index: int, v: float = 1, u: float = 1) -> OpExpr:
        term = self.terms[index]
        return term.op.local.scale(v if term.coupling == "v" else u)


def _double_occupancy(site: Site, weight=1) -> OpExpr:
    return num(site, Spin.UP) * num(site, Spin.DOWN) * weight


def _hops(pairs: Sequence[tuple[Site, Site]]) -> OpExpr:
    return total(hop(i, j, spin) for i, j in pairs for spin in Spin)


def _decomposition(geometry: Geometry, locals_: Sequence[tuple[OpExpr, str]]) -> Decomposition:
    terms = tuple(
        HamiltonianTerm(TranslatedOperator(local, geometry.sublattice), coupling, f"H{k + 1}")
        for k, (local, coupling) in enumerate(locals_)
    )
    return Decomposition(geometry, terms)


def build_1d() -> tuple[Geometry, Decomposition]:
    """Even-odd hopping split of the chain, Λ' = 2ℤ."""
    geometry = Geometry("1d", SubLattice(((2,),)), 2)
    h1 = _hops([((0,), (1,))])
    h2 = _hops([((-1,), (0,))])
    h3 = total(_double_occupancy(s) for s in ((0,), (1,)))
    return geometry, _decomposition(geometry, [(h1, "v"), (h2, "v"), (h3, "u")])


def build_square() -> tuple[Geometry, Decomposition]:
    """Plaquette split of the square lattice, Λ' spanned by (2, 0) and (0, 2)."""
    geometry = Geometry("square", SubLattice(((2, 0), (0, 2))), 4)
    edges = [(PLAQUETTE[k], PLAQUETTE[(k + 1) % 4]) for k in range(4)]
    h1 = _hops(edges)
    h2 = translate(h1, (-1, -1))
    h3 = total(_double_occupancy(p) for p in PLAQUETTE)
    return geometry, _decomposition(geometry, [(h1, "v"), (h2, "v"), (h3, "u")])


def build_triangular() -> tuple[Geometry, Decomposition]:
    """Three rotated triangle hop groups plus hexagon interactions, Λ' at hexagon centres."""
    geometry = Geometry("triangular", SubLattice(((3, 0, -3), (0, 3, -3))), 3)
    origin = (0, 0, 0)
    locals_ = []
    for ell in range(3):
        a, b = HEXAGON[2 * ell], HEXAGON[2 * ell + 1]
        locals_.append((_hops([(origin, a), (a, b), (b, origin)]), "v"))
    h4 = _double_occupancy(origin) + total(
        _double_occupancy(g, Fraction(1, 3)) for g in HEXAGON
    )
    locals_.append((h4, "u"))
    return geometry, _decomposition(geometry, locals_)


GEOMETRIES = {
    "1d": build_1d,
    "square": build_square,
    "triangular": build_triangular,
}


def build(name: str) -> tuple[Geometry, Decomposition]:
    key = name.strip().lower()
    if key not in GEOMETRIES:
        raise LatticeError(f"unknown geometry {name!r}; choose from {', '.join(GEOMETRIES)}")
    return GEOMETRIES[key]()


def rotate_triangular(site: Site, steps: int = 1) -> Site:
    """Rotate an embedded triangular site by steps · 2π/3."""
    x = tuple(site)
    for _ in range(steps % 3):
        x = (x[2], x[0], x[1])
    return x


def realize_on_torus(
    dec: Decomposition, extents: Sequence[int], v: float = 1, u: float = 1,
) -> list[OpExpr]:
    """Explicit periodic sums Σ_{i∈Λ'} H_γ^loc(i), one per decomposition term."""
    geometry = dec.geometry
    extents = geometry.check_extents(extents)
    origins = geometry.cell_origins(extents)
    out = []
    for k in range(dec.gamma):
        local = dec.scaled_local(k, v, u)
        out.append(total(
            map_sites(translate(local, i), lambda s: geometry.wrap(s, extents))
            for i in origins
        ))
    logger.debug("realized %s decomposition on torus %s: %d cells", geometry.kind, extents, len(origins))
    return out


def build_hamiltonian(
    geometry: Geometry, extents: Sequence[int], v: float = 1, u: float = 1,
) -> OpExpr:
    """H_FH = v Σ_<ij>,σ h_ijσ + u Σ_i n_i↑ n_i↓ on a torus."""
    kinetic = total(hop(i, j, spin, v) for i, j in geometry.bonds(extents) for spin in Spin)
    interaction = total(_double_occupancy(s, u) for s in geometry.torus_sites(extents))
    return kinetic + interaction
