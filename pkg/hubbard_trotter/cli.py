"""Command-line front end: bound | empirical | commutator."""

import argparse
import logging
import sys

import numpy as np
from pydantic import ValidationError

from hubbard_trotter import HubbardTrotterError
from hubbard_trotter.config import LOG_LEVEL, OUTPUT_SIG_FIGS
from hubbard_trotter.models import RunConfig
from hubbard_trotter.services import exporter
from hubbard_trotter.services.algebra import format_expr
from hubbard_trotter.services.bounds import (
    CommutatorSyntaxError,
    evaluate_bound,
    evaluate_commutator,
    format_monomial,
    scan_s,
)
from hubbard_trotter.services.empirical import splitting_error
from hubbard_trotter.services.lattice import LatticeError, build
from hubbard_trotter.services.splitting import FormulaError, formula_from_name

logger = logging.getLogger(__name__)

USAGE_ERRORS = (ValidationError, LatticeError, FormulaError, CommutatorSyntaxError)


def _extents(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace("x", ",").split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"extents must look like 4 or 4,4, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hubbard-trotter",
        description="Trotter error bounds for the Fermi-Hubbard model.",
    )
    parser.add_argument("--log-level", default=LOG_LEVEL, help="logging level (default from HUBBARD_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--geometry", default="1d", help="1d | square | triangular")
    common.add_argument("--window", type=int, help="telescoping shift radius")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--formula", default="strang", help="strang | suzuki4 | suzuki6 | lie-trotter | custom:<path>")
    run.add_argument("--v", type=float, default=-1.0, help="hopping coefficient")
    run.add_argument("--u", type=float, default=1.0, help="interaction coefficient")
    run.add_argument("--output", help="output directory (default from HUBBARD_OUTPUT_DIR)")

    bound = sub.add_parser("bound", parents=[common, run], help="commutator bound polynomial")
    bound.add_argument("--s", default="auto", help="split index, 'auto' or 'scan'")
    bound.add_argument("--mode", default="auto", help="general | tight | auto (theorem1 and prop10 also accepted)")
    bound.add_argument(
        "--format", dest="formats", action="append", choices=["csv", "text", "xlsx"],
        help="output format, repeatable (default csv and text)",
    )

    empirical = sub.add_parser("empirical", parents=[common, run], help="exact error on a small torus")
    empirical.add_argument("--extents", type=_extents, help="torus size, e.g. 4 or 4,4")
    empirical.add_argument("--t-grid", help="start:stop:count (log-spaced) or a comma list")
    empirical.add_argument("--no-bound", action="store_true", help="skip the bound column")

    commutator = sub.add_parser("commutator", parents=[common], help="evaluate a nested commutator")
    commutator.add_argument("expression", help="e.g. [H1,[H2,H1]]")
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    fields = {
        key: value for key, value in vars(args).items()
        if value is not None and key in RunConfig.model_fields
    }
    return RunConfig(**fields)


def cmd_bound(cfg: RunConfig) -> int:
    geometry, dec = build(cfg.geometry)
    f = formula_from_name(cfg.formula, dec.gamma)
    if cfg.s == "scan":
        result = scan_s(dec, f, t=1.0, v=cfg.v, u=cfg.u, window=cfg.window)
        for s, value in result.values.items():
            marker = "  <- best" if s == result.best_s else ""
            print(f"s = {s:3d}: {value:.{OUTPUT_SIG_FIGS}g}{marker}")
        bp = result.best
    else:
        bp = evaluate_bound(dec, f, cfg.fixed_s(), cfg.mode, cfg.window)

    print(f"{geometry.kind}, {f.name}, {bp.mode}" + (f", s = {bp.s}" if bp.s else ""))
    print(f"error per site <= {bp.format()}")
    stem = cfg.stem(f.name)
    if "csv" in cfg.formats:
        exporter.bound_csv(bp, cfg.output / f"{stem}.csv")
    if "text" in cfg.formats:
        exporter.write_bound_text(bp, cfg.output / f"{stem}.txt")
    if "xlsx" in cfg.formats:
        exporter.write_excel(bp, cfg.output / f"{stem}.xlsx")
    return 0


def cmd_empirical(cfg: RunConfig, with_bound: bool = True) -> int:
    _, dec = build(cfg.geometry)
    f = formula_from_name(cfg.formula, dec.gamma)
    run = splitting_error(dec, f, cfg.resolved_extents(), cfg.v, cfg.u, np.array(cfg.times()))
    bp = evaluate_bound(dec, f, mode="auto", window=cfg.window) if with_bound else None
    path = exporter.empirical_csv(run, cfg.output / f"{cfg.stem(f.name)}.csv", bp)
    print(f"{f.name} on {cfg.geometry} torus {run.extents}: {len(run.times)} points -> {path}")
    return 0


def cmd_commutator(cfg: RunConfig) -> int:
    _, dec = build(cfg.geometry)
    report = evaluate_commutator(dec, cfg.expression, cfg.window)
    print(report.expression)
    if report.is_zero:
        print("= 0")
        return 0
    for degree, comp in report.operator.components:
        norm = report.norms[degree]
        print(f"  {format_monomial(degree)}: Σ_{{i∈Λ'}} {format_expr(comp.local)}")
        kind = "exact" if norm.exact else "upper bound"
        print(f"    per-site norm {norm.value:.{OUTPUT_SIG_FIGS}g} ({norm.method}, {kind})")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        if cfg.command == "bound":
            return cmd_bound(cfg)
        if cfg.command == "empirical":
            return cmd_empirical(cfg, with_bound=not args.no_bound)
        return cmd_commutator(cfg)
    except USAGE_ERRORS as e:
        logger.error("%s", e)
        return 2
    except (HubbardTrotterError, np.linalg.LinAlgError, MemoryError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
