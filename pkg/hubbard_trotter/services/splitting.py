"""Product formulas and the commutator terms of their error bounds.

A formula is stored as its factor sequence in application order: the factor
(a_k, γ_k) at position k stands for e^{-i t a_k H_γk}, and

    S(t) = e^{-i t A_K} ... e^{-i t A_2} e^{-i t A_1}.

Term indices γ are 0-based in code and printed 1-based ("H1", "H2", ...).
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.linalg

from hubbard_trotter import HubbardTrotterError
from hubbard_trotter.config import CONSISTENCY_TOL, DATA_DIR, SCALAR_TOL

logger = logging.getLogger(__name__)

Scalar = Fraction | float
Factor = tuple[Scalar, int]
Level = tuple[tuple[int, Scalar], ...]
Chain = tuple[int, ...]


class FormulaError(HubbardTrotterError, ValueError):
    """Raised for invalid product formulas or bound-term requests."""


def _coefficient(value) -> Scalar:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return float(value)


def _merge(factors: Iterable[Factor]) -> tuple[Factor, ...]:
    """Fuse neighbouring factors of the same term; vanishing factors are dropped."""
    out: list[Factor] = []
    for a, gamma in factors:
        if abs(a) < SCALAR_TOL:
            continue
        if out and out[-1][1] == gamma:
            total = out[-1][0] + a
            out.pop()
            if abs(total) >= SCALAR_TOL:
                out.append((total, gamma))
            continue
        out.append((a, gamma))
    return tuple(out)


@dataclass(frozen=True)
class ProductFormula:
    name: str
    order: int
    gamma: int
    factors: tuple[Factor, ...]

    def __post_init__(self):
        if self.gamma < 1:
            raise FormulaError(f"a product formula needs at least one term, got Γ = {self.gamma}")
        if self.order < 1:
            raise FormulaError(f"invalid order {self.order}")
        factors = tuple((_coefficient(a), int(g)) for a, g in self.factors)
        if not factors:
            raise FormulaError("a product formula needs at least one factor")
        for a, g in factors:
            if not 0 <= g < self.gamma:
                raise FormulaError(f"factor refers to H{g + 1}, formula has Γ = {self.gamma}")
        for (_, g1), (_, g2) in itertools.pairwise(factors):
            if g1 == g2:
                raise FormulaError(f"adjacent factors share H{g1 + 1}; merge them first")
        sums = self.coefficient_sums(factors)
        for g, s in enumerate(sums):
            if abs(s - 1) > CONSISTENCY_TOL:
                raise FormulaError(
                    f"coefficients of H{g + 1} sum to {float(s):.15g}, expected 1"
                )
        object.__setattr__(self, "factors", factors)

    def coefficient_sums(self, factors: Sequence[Factor] | None = None) -> list[Scalar]:
        sums: list[Scalar] = [Fraction(0)] * self.gamma
        for a, g in factors if factors is not None else self.factors:
            sums[g] += a
        return sums

    @property
    def K(self) -> int:
        return len(self.factors)

    @property
    def default_s(self) -> int:
        return math.ceil(self.K / 2)

    @property
    def is_strang(self) -> bool:
        return self.order == 2 and self.factors == strang(self.gamma).factors

    @property
    def is_palindromic(self) -> bool:
        return self.factors == self.factors[::-1]

    def evolve(self, propagators: Sequence[Callable[[float], np.ndarray]], t: float) -> np.ndarray:
        """S(t) from per-term propagators τ ↦ e^{-iτH_γ}."""
        u = None
        for a, g in self.factors:
            step = propagators[g](float(a) * t)
            u = step if u is None else step @ u
        return u

    def describe(self) -> str:
        parts = [f"{float(a):.6g} H{g + 1}" for a, g in self.factors]
        return f"{self.name} (p = {self.order}, K = {self.K}): " + ", ".join(parts)


# ---------------------------------------------------------------------------
# Formula families
# ---------------------------------------------------------------------------


def lie_trotter(gamma: int) -> ProductFormula:
    if gamma < 1:
        raise FormulaError(f"Γ must be at least 1, got {gamma}")
    return ProductFormula("lie-trotter", 1, gamma, tuple((Fraction(1), g) for g in range(gamma)))


def _strang_factors(gamma: int) -> list[Factor]:
    half = Fraction(1, 2)
    up = [(half, g) for g in range(gamma - 1)]
    return up + [(Fraction(1), gamma - 1)] + up[::-1]


def strang(gamma: int) -> ProductFormula:
    """Second-order symmetric splitting with half steps on all but the last term."""
    if gamma < 1:
        raise FormulaError(f"Γ must be at least 1, got {gamma}")
    return ProductFormula("strang", 2, gamma, _strang_factors(gamma))


def _suzuki_factors(k: int, gamma: int) -> list[Factor]:
    if k == 1:
        return _strang_factors(gamma)
    u = 1 / (4 - 4 ** (1 / (2 * k - 1)))
    inner = _suzuki_factors(k - 1, gamma)
    return [(float(a) * w, g) for w in (u, u, 1 - 4 * u, u, u) for a, g in inner]


def suzuki(order: int, gamma: int) -> ProductFormula:
    """Recursive symmetric formula of the given even order.

    S_2k(t) = S_2k-2(u t)² S_2k-2((1 - 4u) t) S_2k-2(u t)² with
    u = 1 / (4 - 4^(1/(2k-1))).
    """
    if order < 2 or order % 2:
        raise FormulaError(f"Suzuki formulas have even order >= 2, got {order}")
    if gamma < 1:
        raise FormulaError(f"Γ must be at least 1, got {gamma}")
    if order == 2:
        return strang(gamma)
    factors = _merge(_suzuki_factors(order // 2, gamma))
    return ProductFormula(f"suzuki{order}", order, gamma, factors)


def custom(
    stages: Sequence[Sequence],
    order: int,
    perm: Sequence[int] | None = None,
    alternate: bool = False,
    name: str = "custom",
) -> ProductFormula:
    """Formula from a table of stage coefficients.

    Row v holds the coefficients a_{v,1..Γ} of one stage. Within a stage the
    terms are applied in `perm` order (0-based, default 0..Γ-1); with
    `alternate` every second stage runs in reverse. Zero entries are skipped
    and neighbouring factors of the same term are merged.
    """
    if not stages:
        raise FormulaError("coefficient table has no stages")
    widths = {len(row) for row in stages}
    if len(widths) != 1:
        raise FormulaError(f"stage rows have different lengths {sorted(widths)}")
    gamma = widths.pop()
    sequence = list(perm) if perm is not None else list(range(gamma))
    if sorted(sequence) != list(range(gamma)):
        raise FormulaError(f"stage ordering {sequence} is not a permutation of the {gamma} terms")
    raw: list[Factor] = []
    for v, row in enumerate(stages):
        order_v = sequence[::-1] if alternate and v % 2 else sequence
        raw.extend((_coefficient(row[g]), g) for g in order_v)
    return ProductFormula(name, order, gamma, _merge(raw))


def _parse_coefficient(token: str, lineno: int) -> Scalar:
    try:
        if "/" in token or token.lstrip("+-").isdigit():
            return Fraction(token)
        return float(token)
    except (ValueError, ZeroDivisionError):
        raise FormulaError(f"line {lineno}: cannot read coefficient {token!r}") from None


def load_formula(path: str | Path, name: str | None = None) -> ProductFormula:
    """Read a custom formula file; see data/README.md for the format."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise FormulaError(f"cannot read formula file {path}: {e}") from e

    order = None
    perm = None
    alternate = False
    stages: list[list[Scalar]] = []
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, *rest = line.split()
        key = key.lower()
        if key == "order":
            if len(rest) != 1 or not rest[0].isdigit():
                raise FormulaError(f"line {lineno}: expected 'order <p>'")
            order = int(rest[0])
        elif key == "perm":
            try:
                perm = [int(x) - 1 for x in rest]
            except ValueError:
                raise FormulaError(f"line {lineno}: permutation entries must be integers") from None
        elif key == "alternate":
            alternate = bool(rest) and rest[0].lower() in ("yes", "true", "1")
        else:
            stages.append([_parse_coefficient(tok, lineno) for tok in line.split()])

    if order is None:
        raise FormulaError(f"{path}: missing 'order' line")
    f = custom(stages, order, perm=perm, alternate=alternate, name=name or path.stem)
    logger.info("loaded %s from %s: Γ = %d, K = %d, p = %d", f.name, path, f.gamma, f.K, f.order)
    return f


# ---------------------------------------------------------------------------
# Numerical order check
# ---------------------------------------------------------------------------


class Propagator:
    """τ ↦ e^{-iτh} for a fixed Hermitian matrix, from one eigendecomposition."""

    def __init__(self, h: np.ndarray):
        self.values, self.vectors = scipy.linalg.eigh(h)

    def __call__(self, tau: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * tau * self.values)) @ self.vectors.conj().T


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    """Random complex Hermitian matrix with spectral norm `scale`."""
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (x + x.conj().T) / 2
    return h * (scale / np.linalg.norm(h, 2))


def formula_residuals(f: ProductFormula, terms: Sequence[np.ndarray], times: Iterable[float]) -> np.ndarray:
    """‖S(t) - e^{-itH}‖ for matrices substituted for the H_γ."""
    if len(terms) != f.gamma:
        raise FormulaError(f"{f.name} needs {f.gamma} matrices, got {len(terms)}")
    props = [Propagator(h) for h in terms]
    exact = Propagator(sum(terms))
    return np.array([np.linalg.norm(f.evolve(props, t) - exact(t), 2) for t in times])


def verify_order(
    f: ProductFormula,
    trials: int = 3,
    dim: int = 8,
    scale: float = 20.0,
    t_range: tuple[float, float] = (1e-3, 1e-2),
    points: int = 6,
    seed: int = 7,
) -> float:
    """Fitted log-log slope of the splitting error on random Hermitian matrices.

    A formula of order p has slope p + 1. Formulas that are exact for the
    sampled matrices (Γ = 1) return inf.
    """
    rng = np.random.default_rng(seed)
    times = np.geomspace(*t_range, points)
    slopes = []
    for _ in range(trials):
        terms = [random_hermitian(rng, dim, scale) for _ in range(f.gamma)]
        residuals = formula_residuals(f, terms, times)
        if residuals.max() < 1e-12:
            logger.debug("%s is exact on the sampled matrices", f.name)
            return math.inf
        slope, _ = np.polyfit(np.log(times), np.log(residuals), 1)
        slopes.append(slope)
    logger.debug("%s fitted slopes %s", f.name, slopes)
    return float(np.mean(slopes))


# ---------------------------------------------------------------------------
# Bound terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundTerm:
    """prefactor · ‖ad_{L_1} ad_{L_2} ... ad_{L_n} T‖ · t^{p+1}.

    Each level L_i and the target T are weighted sums of the H_γ, listed
    outermost first. For terms of the general product-formula bound the levels
    are single terms with unit weight, the |a_k| powers being folded into the
    prefactor.
    """

    prefactor: Scalar
    levels: tuple[Level, ...]
    target: Level
    j: int | None = None

    @property
    def depth(self) -> int:
        return len(self.levels) + 1

    def __str__(self) -> str:
        text = _format_level(self.target)
        for level in reversed(self.levels):
            text = f"[{_format_level(level)},{text}]"
        return f"{float(self.prefactor):.6g} ‖{text}‖"


def _format_level(level: Level) -> str:
    if len(level) == 1 and level[0][1] == 1:
        return f"H{level[0][0] + 1}"
    inner = " + ".join(
        f"H{g + 1}" if w == 1 else f"{float(w):.6g} H{g + 1}" for g, w in level
    )
    return f"({inner})"


def format_chain(chain: Chain) -> str:
    """(0, 1, 0) → "[H1,[H2,H1]]"."""
    text = f"H{chain[-1] + 1}"
    for g in reversed(chain[:-1]):
        text = f"[H{g + 1},{text}]"
    return text


def canonical_chain(chain: Sequence[int]) -> Chain | None:
    """Order the innermost pair with the larger index outside; None if it commutes trivially."""
    chain = tuple(chain)
    if len(chain) < 2:
        return chain
    a, b = chain[-2], chain[-1]
    if a == b:
        return None
    if a < b:
        chain = chain[:-2] + (b, a)
    return chain


def _check_s(f: ProductFormula, s: int | None) -> int:
    s = f.default_s if s is None else int(s)
    if not 1 <= s <= f.K:
        raise FormulaError(f"s = {s} outside 1..{f.K} for {f.name}")
    return s


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Non-negative integer vectors of the given length summing to total, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _partial_sums(f: ProductFormula) -> list[Level]:
    # B_j for j = 1..K (index j-1), merged by term
    out = []
    acc: dict[int, Scalar] = {}
    for a, g in f.factors:
        out.append(tuple(sorted((h, w) for h, w in acc.items() if abs(w) >= SCALAR_TOL)))
        acc[g] = acc.get(g, Fraction(0)) + a
    return out


def general_bound_terms(f: ProductFormula, s: int | None = None) -> list[BoundTerm]:
    """Terms of the general commutator bound for a formula of order p.

    For j ≤ s the chain is ad_{A_s}^{q_s} ... ad_{A_j}^{q_j} B_j, for j > s it is
    ad_{A_{s+1}}^{q_{s+1}} ... ad_{A_j}^{q_j} B_j, with q summing to p and the
    innermost power q_j nonzero. Positions j and s are 1-based.
    """
    s = _check_s(f, s)
    p = f.order
    base = Fraction(1, math.factorial(p + 1))
    partial = _partial_sums(f)
    terms = []
    for j in range(2, f.K + 1):
        target = partial[j - 1]
        if not target:
            continue
        # factor positions, outermost first (1-based)
        positions = list(range(s, j - 1, -1)) if j <= s else list(range(s + 1, j + 1))
        inner = positions.index(j)
        for q in _compositions(p, len(positions)):
            if q[inner] == 0:
                continue
            prefactor = base * math.factorial(p)
            levels = []
            for k, qk in zip(positions, q):
                if qk == 0:
                    continue
                a, g = f.factors[k - 1]
                prefactor = prefactor / math.factorial(qk) * abs(a) ** qk
                levels.extend([((g, Fraction(1)),)] * qk)
            terms.append(BoundTerm(prefactor, tuple(levels), target, j))
    logger.debug("%s, s = %d: %d bound terms", f.name, s, len(terms))
    return terms


def tight_bound_terms(gamma: int) -> list[BoundTerm]:
    """Tight second-order bound: per γ₁, (1/12)‖[Σ_{>γ₁}, [Σ_{>γ₁}, H_γ₁]]‖ and (1/24)‖[H_γ₁, [Σ_{>γ₁}, H_γ₁]]‖."""
    if gamma < 1:
        raise FormulaError(f"Γ must be at least 1, got {gamma}")
    one = Fraction(1)
    terms = []
    for g1 in range(gamma - 1):
        rest = tuple((g, one) for g in range(g1 + 1, gamma))
        single = ((g1, one),)
        terms.append(BoundTerm(Fraction(1, 12), (rest, rest), single))
        terms.append(BoundTerm(Fraction(1, 24), (single, rest), single))
    return terms


def expand_terms(terms: Iterable[BoundTerm]) -> dict[Chain, Scalar]:
    """Triangle-inequality expansion into per-chain coefficients.

    Chains are canonical (see canonical_chain); chains with a trivially
    vanishing innermost commutator are dropped.
    """
    out: dict[Chain, Scalar] = {}
    for term in terms:
        for combo in itertools.product(*term.levels, term.target):
            chain = canonical_chain(g for g, _ in combo)
            if chain is None:
                continue
            coeff = term.prefactor
            for _, w in combo:
                coeff = coeff * abs(w)
            out[chain] = out.get(chain, 0) + coeff
    return dict(sorted(out.items()))


def general_chain_weights(f: ProductFormula, s: int | None = None) -> dict[Chain, Scalar]:
    """Same result as expand_terms(general_bound_terms(f, s)) without listing every composition.

    Partial chains are carried as a table keyed by their term sequence, so the
    cost grows with K · Γ^p instead of with the number of compositions.
    """
    s = _check_s(f, s)
    p = f.order
    partial = _partial_sums(f)
    out: dict[Chain, Scalar] = {}

    def absorb(states: dict[Chain, Scalar], k: int, minimum: int, exact: bool):
        a, g = f.factors[k - 1]
        new: dict[Chain, Scalar] = {}
        for chain, w in states.items():
            left = p - len(chain)
            for q in range(minimum, left + 1):
                if exact and q != left:
                    continue
                key = chain + (g,) * q
                new[key] = new.get(key, 0) + w * abs(a) ** q / math.factorial(q)
        return new

    def finish(states: dict[Chain, Scalar], j: int):
        for chain, w in states.items():
            for g, b in partial[j - 1]:
                full = canonical_chain(chain + (g,))
                if full is None:
                    continue
                out[full] = out.get(full, 0) + w * abs(b) / (p + 1)

    # j ≤ s: prefix over positions s..j+1 grows towards the inside as j decreases
    prefix: dict[Chain, Scalar] = {(): Fraction(1)}
    for j in range(s, 1, -1):
        finish(absorb(prefix, j, 1, True), j)
        prefix = absorb(prefix, j, 0, False)

    # j > s: outer part over positions s+1..j-1
    prefix = {(): Fraction(1)}
    for j in range(s + 1, f.K + 1):
        finish(absorb(prefix, j, 1, True), j)
        prefix = absorb(prefix, j, 0, False)
    return dict(sorted(out.items()))


FORMULAS: dict[str, Callable[[int], ProductFormula]] = {
    "lie-trotter": lie_trotter,
    "strang": strang,
    "suzuki4": lambda gamma: suzuki(4, gamma),
    "suzuki6": lambda gamma: suzuki(6, gamma),
}


def formula_from_name(name: str, gamma: int) -> ProductFormula:
    """Built-in family name, or "custom:<path>" (bare file names are looked up in the data directory)."""
    key = name.strip()
    if key.lower().startswith("custom:"):
        path = Path(key.split(":", 1)[1])
        if not path.exists() and (DATA_DIR / path).exists():
            path = DATA_DIR / path
        return load_formula(path)
    builder = FORMULAS.get(key.lower())
    if builder is None:
        raise FormulaError(f"unknown formula {name!r}; choose from {', '.join(FORMULAS)} or custom:<path>")
    return builder(gamma)
