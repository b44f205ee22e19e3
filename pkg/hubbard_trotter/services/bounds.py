"""Bound engine: nested commutator norms assembled into the error polynomial.

The bound of a product formula of order p is a homogeneous polynomial

    t^{p+1} Σ c_{a,b} |v|^a |u|^b,   a + b = p + 1,

per lattice site. Every distinct nested commutator chain is evaluated once on
the translation invariant representatives, its per-site norm multiplied by the
chain's accumulated prefactor and added to the monomial of its degree.
"""

from __future__ import annotations

import asyncio
import logging
import re
import threading
from dataclasses import dataclass, field

from hubbard_trotter import HubbardTrotterError
from hubbard_trotter.config import NORM_CONCURRENCY, OUTPUT_SIG_FIGS, SHIFT_WINDOW
from hubbard_trotter.services.algebra import Degree, GradedOperator
from hubbard_trotter.services.lattice import Decomposition
from hubbard_trotter.services.norms import NormResult, UnsupportedNormError, per_site_norm
from hubbard_trotter.services.splitting import (
    Chain,
    FormulaError,
    ProductFormula,
    expand_terms,
    format_chain,
    general_chain_weights,
    tight_bound_terms,
)

logger = logging.getLogger(__name__)

MODES = ("general", "tight", "auto")
# older spellings accepted on the command line
MODE_ALIASES = {"theorem1": "general", "prop10": "tight"}


class CommutatorSyntaxError(HubbardTrotterError, ValueError):
    """Raised for commutator expressions that do not parse."""


def format_monomial(degree: Degree) -> str:
    v_deg, u_deg = degree
    parts = []
    for name, power in (("v", v_deg), ("u", u_deg)):
        if power == 1:
            parts.append(f"|{name}|")
        elif power > 1:
            parts.append(f"|{name}|^{power}")
    return "".join(parts) or "1"


@dataclass(frozen=True)
class ChainContribution:
    chain: Chain
    degree: Degree
    prefactor: float
    norm: float
    exact: bool
    method: str

    @property
    def label(self) -> str:
        return format_chain(self.chain)

    @property
    def contribution(self) -> float:
        return self.prefactor * self.norm


@dataclass
class BoundPolynomial:
    t_power: int
    coefficients: dict[Degree, float]
    formula: str = ""
    geometry: str = ""
    s: int | None = None
    mode: str = "general"
    breakdown: list[ChainContribution] = field(default_factory=list)

    def monomials(self) -> list[tuple[Degree, float]]:
        """(degree, coefficient) pairs, highest power of |v| first."""
        return sorted(self.coefficients.items(), key=lambda item: (-item[0][0], item[0][1]))

    def evaluate_at(self, t: float, v: float, u: float) -> float:
        return evaluate_at(self, t, v, u)

    def format(self, sig_figs: int = OUTPUT_SIG_FIGS) -> str:
        body = " + ".join(f"{c:.{sig_figs}g}{format_monomial(d)}" for d, c in self.monomials())
        return f"t^{self.t_power} ({body or '0'})"

    def __str__(self) -> str:
        return self.format()


def evaluate_at(bp: BoundPolynomial, t: float, v: float, u: float) -> float:
    """Σ c · t^{p+1} |v|^a |u|^b."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    return sum(
        c * t ** bp.t_power * abs(v) ** vd * abs(u) ** ud
        for (vd, ud), c in bp.coefficients.items()
    )


class ChainEvaluator:
    """Nested commutators of one decomposition, memoized by innermost suffix."""

    def __init__(self, dec: Decomposition, window: int = SHIFT_WINDOW):
        self.dec = dec
        self.window = window
        self._ops: dict[Chain, GradedOperator] = {}
        self._norms: dict[Chain, dict[Degree, NormResult]] = {}
        self._lock = threading.Lock()

    def operator(self, chain: Chain) -> GradedOperator:
        with self._lock:
            hit = self._ops.get(chain)
        if hit is not None:
            return hit
        if len(chain) == 1:
            result = self.dec.graded(chain[0])
        else:
            result = self.dec.graded(chain[0]).commutator(self.operator(chain[1:]))
        with self._lock:
            self._ops[chain] = result
        return result

    def norms(self, chain: Chain) -> dict[Degree, NormResult]:
        """Per-site norm of every homogeneous component of the chain."""
        with self._lock:
            hit = self._norms.get(chain)
        if hit is not None:
            return hit
        op = self.operator(chain)
        try:
            result = {
                degree: per_site_norm(comp, self.dec.geometry, self.window)
                for degree, comp in op.components
            }
        except UnsupportedNormError as e:
            raise UnsupportedNormError(f"{format_chain(chain)}: {e}") from e
        for degree, norm in result.items():
            logger.debug("%s %s: %s %.6g", format_chain(chain), degree, norm.method, norm.value)
        with self._lock:
            self._norms[chain] = result
        return result


def resolve_mode(f: ProductFormula, mode: str) -> str:
    mode = MODE_ALIASES.get(mode, mode)
    if mode not in MODES:
        raise FormulaError(f"unknown bound mode {mode!r}; choose from {', '.join(MODES)}")
    if mode == "auto":
        return "tight" if f.is_strang else "general"
    if mode == "tight" and not f.is_strang:
        raise FormulaError(f"the tight second-order bound applies to Strang splitting only, not {f.name}")
    return mode


def chain_weights(f: ProductFormula, s: int | None, mode: str) -> dict[Chain, float]:
    if mode == "tight":
        return expand_terms(tight_bound_terms(f.gamma))
    return general_chain_weights(f, s)


async def evaluate_bound_async(
    dec: Decomposition,
    f: ProductFormula,
    s: int | None = None,
    mode: str = "auto",
    window: int = SHIFT_WINDOW,
    evaluator: ChainEvaluator | None = None,
) -> BoundPolynomial:
    if f.gamma != dec.gamma:
        raise FormulaError(f"{f.name} has {f.gamma} terms but the {dec.geometry.kind} decomposition has {dec.gamma}")
    mode = resolve_mode(f, mode)
    if mode == "general":
        s = f.default_s if s is None else s
    elif s is not None:
        raise FormulaError(f"split index s = {s} only applies to the general bound, not the tight one")
    weights = chain_weights(f, s, mode)
    evaluator = evaluator or ChainEvaluator(dec, window)
    logger.info(
        "bounding %s on %s (%s, s = %s): %d distinct commutators",
        f.name, dec.geometry.kind, mode, s, len(weights),
    )

    semaphore = asyncio.Semaphore(NORM_CONCURRENCY)

    async def evaluate(chain: Chain):
        async with semaphore:
            return chain, await asyncio.to_thread(evaluator.norms, chain)

    results = await asyncio.gather(*(evaluate(chain) for chain in weights))

    t_power = f.order + 1
    coefficients: dict[Degree, float] = {}
    breakdown = []
    for chain, norms in results:
        weight = float(weights[chain])
        for degree, norm in norms.items():
            if sum(degree) != t_power:
                raise HubbardTrotterError(f"{format_chain(chain)} has degree {degree}, expected total {t_power}")
            breakdown.append(ChainContribution(chain, degree, weight, norm.value, norm.exact, norm.method))
            coefficients[degree] = coefficients.get(degree, 0.0) + weight * norm.value
    coefficients = {d: c for d, c in coefficients.items() if c > 0}
    return BoundPolynomial(t_power, coefficients, f.name, dec.geometry.kind, s, mode, breakdown)


def evaluate_bound(
    dec: Decomposition,
    f: ProductFormula,
    s: int | None = None,
    mode: str = "auto",
    window: int = SHIFT_WINDOW,
    evaluator: ChainEvaluator | None = None,
) -> BoundPolynomial:
    return asyncio.run(evaluate_bound_async(dec, f, s, mode, window, evaluator))


@dataclass
class ScanResult:
    best_s: int
    best: BoundPolynomial
    values: dict[int, float]


def scan_s(
    dec: Decomposition,
    f: ProductFormula,
    t: float = 1.0,
    v: float = -1.0,
    u: float = 1.0,
    window: int = SHIFT_WINDOW,
) -> ScanResult:
    """Evaluate the general bound for every s and keep the smallest at (t, v, u)."""
    evaluator = ChainEvaluator(dec, window)
    values = {}
    best = None
    best_s = None
    for s in range(1, f.K + 1):
        bp = evaluate_bound(dec, f, s, "general", window, evaluator)
        values[s] = evaluate_at(bp, t, v, u)
        if best is None or values[s] < values[best_s]:
            best, best_s = bp, s
    logger.info("s scan for %s: best s = %d (%.6g)", f.name, best_s, values[best_s])
    return ScanResult(best_s, best, values)


# ---------------------------------------------------------------------------
# Ad-hoc commutator queries
# ---------------------------------------------------------------------------

Tree = int | tuple["Tree", "Tree"]

_TOKEN = re.compile(r"\[|\]|,|H(\d+)")


def parse_commutator(text: str, gamma: int | None = None) -> Tree:
    """Parse "[H1,[H2,H1]]" into a tree of 0-based term indices."""
    compact = re.sub(r"\s+", "", text)
    tokens = []
    pos = 0
    while pos < len(compact):
        m = _TOKEN.match(compact, pos)
        if m is None:
            raise CommutatorSyntaxError(f"unexpected {compact[pos:]!r} in {text!r}")
        tokens.append(m.group(0))
        pos = m.end()

    def term(k: int) -> tuple[Tree, int]:
        if k >= len(tokens):
            raise CommutatorSyntaxError(f"{text!r} ends early")
        tok = tokens[k]
        if tok.startswith("H"):
            index = int(tok[1:]) - 1
            if index < 0 or (gamma is not None and index >= gamma):
                raise CommutatorSyntaxError(f"{tok} is not one of H1..H{gamma}")
            return index, k + 1
        if tok != "[":
            raise CommutatorSyntaxError(f"expected H<n> or '[' in {text!r}, got {tok!r}")
        left, k = term(k + 1)
        if k >= len(tokens) or tokens[k] != ",":
            raise CommutatorSyntaxError(f"missing ',' in {text!r}")
        right, k = term(k + 1)
        if k >= len(tokens) or tokens[k] != "]":
            raise CommutatorSyntaxError(f"missing ']' in {text!r}")
        return (left, right), k + 1

    tree, end = term(0)
    if end != len(tokens):
        raise CommutatorSyntaxError(f"trailing input in {text!r}")
    return tree


def format_tree(tree: Tree) -> str:
    if isinstance(tree, int):
        return f"H{tree + 1}"
    return f"[{format_tree(tree[0])},{format_tree(tree[1])}]"


@dataclass
class CommutatorReport:
    expression: str
    operator: GradedOperator
    norms: dict[Degree, NormResult]

    @property
    def is_zero(self) -> bool:
        return self.operator.is_zero


def evaluate_tree(dec: Decomposition, tree: Tree) -> GradedOperator:
    if isinstance(tree, int):
        return dec.graded(tree)
    return evaluate_tree(dec, tree[0]).commutator(evaluate_tree(dec, tree[1]))


def evaluate_commutator(dec: Decomposition, text: str, window: int = SHIFT_WINDOW) -> CommutatorReport:
    tree = parse_commutator(text, dec.gamma)
    op = evaluate_tree(dec, tree)
    norms = {
        degree: per_site_norm(comp, dec.geometry, window) for degree, comp in op.components
    }
    return CommutatorReport(format_tree(tree), op, norms)
