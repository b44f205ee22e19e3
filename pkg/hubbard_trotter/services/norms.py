"""Spectral norms of symbolic operators.

Three evaluation paths:

- quadratic: expressions made of hopping, signed hopping and number terms are
  reduced to their single-particle coefficient matrix;
- dense-block: Jordan-Wigner matrices on at most MAX_DENSE_MODES modes,
  diagonalized per (N↑, N↓) sector;
- clustered: summands grouped into clusters of overlapping support, each
  evaluated exactly, combined by the triangle inequality (an upper bound).
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import cache, lru_cache

import numpy as np
import scipy.linalg
from scipy import sparse

from hubbard_trotter import HubbardTrotterError
from hubbard_trotter.config import MAX_DENSE_MODES, NORM_CACHE_SIZE, SHIFT_WINDOW
from hubbard_trotter.services.algebra import (
    AntisymmHoppingOp,
    HoppingOp,
    Mode,
    NumberOp,
    OpExpr,
    Spin,
    TranslatedOperator,
    canonicalize,
    support,
    total,
)
from hubbard_trotter.services.lattice import Geometry

logger = logging.getLogger(__name__)

if MAX_DENSE_MODES > 14:
    logger.warning(
        "HUBBARD_MAX_DENSE_MODES=%d exceeds 14; dense blocks may need a lot of memory",
        MAX_DENSE_MODES,
    )


class UnsupportedNormError(HubbardTrotterError):
    """Raised when no evaluation path can handle an operator."""


@dataclass(frozen=True)
class NormResult:
    value: float
    exact: bool
    method: str  # "dense-block" | "quadratic" | "clustered" | "zero"
    modes: int = 0
    clusters: int = 1

    def scaled(self, factor: float) -> NormResult:
        return NormResult(self.value * factor, self.exact, self.method, self.modes, self.clusters)


ZERO_NORM = NormResult(0.0, True, "zero", 0, 0)


class ModeIndex:
    """Contiguous numbering of (site, spin) modes, lexicographic by site then spin."""

    def __init__(self, modes: Iterable[Mode]):
        self.modes: tuple[Mode, ...] = tuple(sorted(set(modes), key=lambda m: (m[0], int(m[1]))))
        self._index = {m: k for k, m in enumerate(self.modes)}

    @classmethod
    def of(cls, expr: OpExpr) -> ModeIndex:
        return cls(support(expr))

    def __len__(self) -> int:
        return len(self.modes)

    def __getitem__(self, mode: Mode) -> int:
        return self._index[mode]

    def __contains__(self, mode: Mode) -> bool:
        return mode in self._index

    def spin_mask(self, spin: Spin) -> int:
        """Bit mask of the modes with the given spin in basis-state indices."""
        m = len(self.modes)
        return sum(1 << (m - 1 - k) for k, (_, s) in enumerate(self.modes) if s == spin)


# ---------------------------------------------------------------------------
# Jordan-Wigner matrices
# ---------------------------------------------------------------------------


@cache
def fermionic_operators(nmodes: int) -> tuple[list[sparse.csr_matrix], list[sparse.csr_matrix]]:
    """Creation and annihilation matrices on 2^nmodes states.

    Mode k is the k-th tensor factor (most significant bit); a†_k carries a
    parity string over the modes before it.
    """
    id2 = sparse.identity(2, format="csr")
    z = sparse.csr_matrix([[1.0, 0.0], [0.0, -1.0]])
    u = sparse.csr_matrix([[0.0, 0.0], [1.0, 0.0]])
    clist = []
    for k in range(nmodes):
        c = sparse.identity(1, format="csr")
        for j in range(nmodes):
            c = sparse.kron(c, z if j < k else u if j == k else id2, format="csr")
        c.eliminate_zeros()
        clist.append(c)
    alist = [sparse.csr_matrix(c.T) for c in clist]
    return clist, alist


def _leaf_matrix(leaf: OpExpr, modes: ModeIndex) -> sparse.csr_matrix:
    clist, alist = fermionic_operators(len(modes))
    if isinstance(leaf, NumberOp):
        k = modes[(leaf.i, leaf.spin)]
        return clist[k] @ alist[k]
    i, j = modes[(leaf.i, leaf.spin)], modes[(leaf.j, leaf.spin)]
    forward, backward = clist[i] @ alist[j], clist[j] @ alist[i]
    if isinstance(leaf, HoppingOp):
        return forward + backward
    if isinstance(leaf, AntisymmHoppingOp):
        return forward - backward
    raise UnsupportedNormError(f"no matrix form for {type(leaf).__name__}")


def to_matrix(
    expr: OpExpr, modes: ModeIndex | None = None, limit: int = MAX_DENSE_MODES,
) -> sparse.csr_matrix:
    """Jordan-Wigner matrix of an expression over the given modes."""
    modes = modes or ModeIndex.of(expr)
    m = len(modes)
    if m > limit:
        raise UnsupportedNormError(f"{m} modes exceed the limit of {limit}")
    missing = [mode for mode in support(expr) if mode not in modes]
    if missing:
        raise UnsupportedNormError(f"modes {missing} are not in the mode index")
    dim = 2 ** m
    out = sparse.csr_matrix((dim, dim))
    leaf_cache: dict[OpExpr, sparse.csr_matrix] = {}
    for w, unit in expr.terms():
        mat = None
        for f in unit.factors():
            if f not in leaf_cache:
                leaf_cache[f] = _leaf_matrix(f, modes)
            mat = leaf_cache[f] if mat is None else mat @ leaf_cache[f]
        out = out + float(w) * mat
    return out


def _popcount(values: np.ndarray, bits: int) -> np.ndarray:
    return sum((values >> b) & 1 for b in range(bits))


def sector_blocks(modes: ModeIndex) -> list[np.ndarray]:
    """Basis-state indices grouped by (N↑, N↓)."""
    m = len(modes)
    states = np.arange(2 ** m)
    up = np.bitwise_and(states, modes.spin_mask(Spin.UP))
    down = np.bitwise_and(states, modes.spin_mask(Spin.DOWN))
    key = _popcount(up, m) * (m + 1) + _popcount(down, m)
    order = np.argsort(key, kind="stable")
    _, starts = np.unique(key[order], return_index=True)
    return np.split(order, starts[1:])


def _block_norm(block: np.ndarray) -> float:
    if np.allclose(block, block.conj().T, atol=1e-12):
        vals = scipy.linalg.eigvalsh(block)
    elif np.allclose(block, -block.conj().T, atol=1e-12):
        vals = scipy.linalg.eigvalsh(1j * block)
    else:
        vals = scipy.linalg.svdvals(block)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def spectral_norm_exact(expr: OpExpr) -> NormResult:
    """Largest singular value over particle-number sectors of the Jordan-Wigner matrix."""
    if expr.is_zero:
        return ZERO_NORM
    modes = ModeIndex.of(expr)
    mat = to_matrix(expr, modes).tocsr()
    value = 0.0
    for idx in sector_blocks(modes):
        block = mat[idx][:, idx].toarray()
        if not block.any():
            continue
        value = max(value, _block_norm(block))
    return NormResult(value, True, "dense-block", len(modes))


def single_particle_matrix(expr: OpExpr, modes: ModeIndex | None = None) -> np.ndarray:
    """Coefficient matrix M of a quadratic expression Σ M_pq a†_p a_q."""
    if not expr.is_quadratic:
        raise UnsupportedNormError("single-particle reduction needs a quadratic expression")
    modes = modes or ModeIndex.of(expr)
    m = np.zeros((len(modes), len(modes)))
    for w, leaf in expr.terms():
        for (p, q), x in leaf.one_body().items():
            m[modes[(p, leaf.spin)], modes[(q, leaf.spin)]] += float(w * x)
    return m


def spectral_norm_quadratic(expr: OpExpr) -> NormResult:
    """Many-body norm of a quadratic expression from single-particle eigenvalues.

    The extreme many-body eigenvalues are the sums of the positive and of the
    negative single-particle eigenvalues.
    """
    if expr.is_zero:
        return ZERO_NORM
    m = single_particle_matrix(expr)
    if np.allclose(m, m.T, atol=1e-12):
        vals = scipy.linalg.eigvalsh(m)
    elif np.allclose(m, -m.T, atol=1e-12):
        vals = scipy.linalg.eigvalsh(1j * m)
    else:
        raise UnsupportedNormError("quadratic expression is neither Hermitian nor anti-Hermitian")
    value = max(float(vals[vals > 0].sum()), float(-vals[vals < 0].sum()))
    return NormResult(value, True, "quadratic", len(m))


def _exact(expr: OpExpr) -> NormResult:
    if expr.is_quadratic:
        return spectral_norm_quadratic(expr)
    if len(support(expr)) > MAX_DENSE_MODES:
        raise UnsupportedNormError(
            f"non-quadratic term on {len(support(expr))} modes exceeds the dense limit of {MAX_DENSE_MODES}"
        )
    return spectral_norm_exact(expr)


def _components(pieces: Sequence[OpExpr]) -> list[list[OpExpr]]:
    # union-find over shared modes
    parent = list(range(len(pieces)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    owner: dict[Mode, int] = {}
    for k, piece in enumerate(pieces):
        for mode in piece.modes():
            if mode in owner:
                parent[find(k)] = find(owner[mode])
            else:
                owner[mode] = k
    groups: dict[int, list[OpExpr]] = {}
    for k, piece in enumerate(pieces):
        groups.setdefault(find(k), []).append(piece)
    return list(groups.values())


def _split_oversized(pieces: list[OpExpr]) -> tuple[list[OpExpr], list[OpExpr]]:
    """Drop summands until the rest fits MAX_DENSE_MODES; returns (kept, dropped)."""
    kept = list(pieces)
    dropped = []
    counts = Counter(mode for piece in kept for mode in piece.modes())
    while len(counts) > MAX_DENSE_MODES and len(kept) > 1:
        # the summand owning the most modes no other summand touches
        best = max(range(len(kept)), key=lambda k: sum(counts[m] == 1 for m in kept[k].modes()))
        piece = kept.pop(best)
        counts.subtract(piece.modes())
        counts = +counts
        dropped.append(piece)
    return kept, dropped


def spectral_norm_clustered(expr: OpExpr) -> NormResult:
    """Triangle-inequality bound over clusters of at most MAX_DENSE_MODES modes."""
    if expr.is_zero:
        return ZERO_NORM
    pending = [[u.scale(w) for w, u in expr.terms()]]
    value = 0.0
    clusters = 0
    while pending:
        pieces = pending.pop()
        for group in _components(pieces):
            cluster = total(group)
            if cluster.is_quadratic or len(support(cluster)) <= MAX_DENSE_MODES:
                value += _exact(cluster).value
                clusters += 1
                continue
            if len(group) == 1:
                raise UnsupportedNormError(
                    f"single summand on {len(support(cluster))} modes exceeds the dense limit"
                )
            kept, dropped = _split_oversized(group)
            logger.debug("split cluster of %d summands: kept %d", len(group), len(kept))
            pending.append(kept)
            pending.append(dropped)
    return NormResult(value, False, "clustered", len(support(expr)), clusters)


def spectral_norm(expr: OpExpr) -> NormResult:
    """Exact norm when a path allows it, clustered upper bound otherwise. Cached."""
    return _cached_norm(canonicalize(expr))


@lru_cache(maxsize=NORM_CACHE_SIZE)
def _cached_norm(expr: OpExpr) -> NormResult:
    if expr.is_zero:
        result = ZERO_NORM
    elif expr.is_quadratic or len(support(expr)) <= MAX_DENSE_MODES:
        result = _exact(expr)
    else:
        result = spectral_norm_clustered(expr)
        logger.warning(
            "operator on %d modes bounded by %d clusters: %.6g",
            result.modes, result.clusters, result.value,
        )
    return result


def clear_cache() -> None:
    _cached_norm.cache_clear()


def cache_info():
    return _cached_norm.cache_info()


# ---------------------------------------------------------------------------
# Per-site norms of translation invariant operators
# ---------------------------------------------------------------------------

Box = tuple[tuple[int, ...], tuple[int, ...]]


def _box(sites: Iterable[tuple[int, ...]]) -> Box:
    sites = list(sites)
    return (
        tuple(min(c) for c in zip(*sites)),
        tuple(max(c) for c in zip(*sites)),
    )


def _union(a: Box | None, b: Box) -> Box:
    if a is None:
        return b
    return (
        tuple(map(min, a[0], b[0])),
        tuple(map(max, a[1], b[1])),
    )


def _overlap(a: Box | None, b: Box) -> int:
    """Number of integer points in the intersection of two boxes."""
    if a is None:
        return 0
    count = 1
    for lo_a, hi_a, lo_b, hi_b in zip(a[0], a[1], b[0], b[1]):
        width = min(hi_a, hi_b) - max(lo_a, lo_b) + 1
        if width <= 0:
            return 0
        count *= width
    return count


def telescope(expr: OpExpr, shifts: Sequence[tuple[int, ...]]) -> OpExpr:
    """Move each summand by the shift that best overlaps the summands placed before it."""
    placed = []
    union = None
    for w, unit in expr.terms():
        best, best_score = None, -1
        for d in shifts:
            moved = unit.translate(d)
            score = _overlap(union, _box(moved.sites))
            if score > best_score:
                best, best_score = moved, score
        placed.append(best.scale(w))
        union = _union(union, _box(best.sites))
    return total(placed)


def per_site_norm(
    op: TranslatedOperator, geometry: Geometry, window: int = SHIFT_WINDOW,
) -> NormResult:
    """Norm bound of Σ_{i∈Λ'} op per lattice site.

    The representative is telescoped for every window radius 0..window and the
    smallest resulting norm is kept, then divided by the number of sites per
    Λ' cell.
    """
    if op.is_zero:
        return ZERO_NORM
    best = None
    for radius in range(window + 1):
        shifts = op.sublattice.vectors_within(radius)
        result = spectral_norm(telescope(op.local, shifts))
        logger.debug("window %d: %s norm %.6g", radius, result.method, result.value)
        if best is None or result.value < best.value - 1e-12:
            best = result
    return best.scaled(1 / geometry.site_ratio)


def triangle_bound(pieces: Iterable[OpExpr]) -> float:
    """Σ‖piece‖, each piece evaluated exactly."""
    return sum(_exact(canonicalize(p)).value for p in pieces)

