"""Numerically exact splitting error on small tori."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from hubbard_trotter import HubbardTrotterError
from hubbard_trotter.config import DEFAULT_T_GRID, MAX_EVOLUTION_MODES
from hubbard_trotter.services.algebra import OpExpr, Spin, support, total
from hubbard_trotter.services.lattice import Decomposition, realize_on_torus
from hubbard_trotter.services.norms import ModeIndex, sector_blocks, to_matrix
from hubbard_trotter.services.splitting import ProductFormula, Propagator

logger = logging.getLogger(__name__)


class SystemTooLargeError(HubbardTrotterError):
    """Raised when a torus has more modes than exact evolution allows."""


def default_times() -> np.ndarray:
    start, stop, count = DEFAULT_T_GRID
    return np.geomspace(start, stop, count)


class SectorSystem:
    """Operators restricted to the (N↑, N↓) sectors of a fixed mode set."""

    def __init__(self, modes: ModeIndex):
        if len(modes) > MAX_EVOLUTION_MODES:
            raise SystemTooLargeError(
                f"{len(modes)} modes exceed the exact evolution limit of {MAX_EVOLUTION_MODES}"
            )
        self.modes = modes
        self.sectors = sector_blocks(modes)

    def blocks(self, expr: OpExpr) -> list[np.ndarray]:
        mat: sparse.csr_matrix = to_matrix(expr, self.modes, limit=MAX_EVOLUTION_MODES).tocsr()
        return [mat[idx][:, idx].toarray() for idx in self.sectors]

    def propagators(self, expr: OpExpr) -> list[Propagator]:
        return [Propagator(block) for block in self.blocks(expr)]

    def assemble(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        dim = 2 ** len(self.modes)
        out = np.zeros((dim, dim), dtype=complex)
        for idx, block in zip(self.sectors, blocks):
            out[np.ix_(idx, idx)] = block
        return out


def exact_evolution(h: OpExpr, t: float, modes: ModeIndex | None = None) -> np.ndarray:
    """e^{-itH} as a dense matrix, built sector by sector."""
    system = SectorSystem(modes or ModeIndex.of(h))
    return system.assemble([p(t) for p in system.propagators(h)])


@dataclass
class EmpiricalRun:
    geometry: str
    extents: tuple[int, ...]
    v: float
    u: float
    formula: str
    order: int
    times: np.ndarray
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def slope(self, t_min: float = 1e-3, t_max: float = 1e-2) -> float:
        """Log-log slope of the error over [t_min, t_max]."""
        mask = (self.times >= t_min) & (self.times <= t_max) & (self.errors > 0)
        if mask.sum() < 2:
            raise ValueError(f"fewer than two positive samples in [{t_min}, {t_max}]")
        slope, _ = np.polyfit(np.log(self.times[mask]), np.log(self.errors[mask]), 1)
        return float(slope)


def splitting_error(
    dec: Decomposition,
    f: ProductFormula,
    extents: Sequence[int],
    v: float = -1.0,
    u: float = 1.0,
    times: Sequence[float] | None = None,
) -> EmpiricalRun:
    """Per-site ‖S(t) - e^{-itH}‖ on a torus for every t in the grid."""
    geometry = dec.geometry
    extents = geometry.check_extents(extents)
    times = default_times() if times is None else np.asarray(times, dtype=float)
    sites = geometry.torus_sites(extents)
    modes = ModeIndex((s, spin) for s in sites for spin in Spin)
    system = SectorSystem(modes)
    logger.info(
        "empirical %s on %s torus %s: %d modes, %d sectors, %d times",
        f.name, geometry.kind, extents, len(modes), len(system.sectors), len(times),
    )

    terms = realize_on_torus(dec, extents, v, u)
    h = total(terms)
    missing = support(h) - set(modes.modes)
    if missing:
        raise HubbardTrotterError(f"torus Hamiltonian acts on unexpected modes {sorted(missing)}")
    exact = system.propagators(h)
    # per sector, one propagator per decomposition term
    per_term = list(zip(*(system.propagators(term) for term in terms)))

    errors = []
    for t in times:
        worst = 0.0
        for props, exact_prop in zip(per_term, exact):
            diff = f.evolve(props, t) - exact_prop(t)
            worst = max(worst, float(np.linalg.norm(diff, 2)))
        errors.append(worst / len(sites))
    return EmpiricalRun(
        geometry.kind, extents, v, u, f.name, f.order, times, np.array(errors),
    )
