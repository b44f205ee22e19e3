"""Result writers: monomial CSV, structured text, Excel workbook, empirical CSV."""

import csv
import io
import logging
from pathlib import Path

from openpyxl import Workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side

from hubbard_trotter.config import OUTPUT_SIG_FIGS
from hubbard_trotter.services.bounds import BoundPolynomial, evaluate_at, format_monomial
from hubbard_trotter.services.empirical import EmpiricalRun

logger = logging.getLogger(__name__)

MONOMIAL_HEADERS = ["v_deg", "u_deg", "monomial", "coefficient"]
BREAKDOWN_HEADERS = ["commutator", "v_deg", "u_deg", "prefactor", "norm_per_site", "contribution", "exact", "method"]
EMPIRICAL_HEADERS = ["t", "empirical_error_per_site", "bound_per_site", "ratio"]
TEXT_COLUMNS = {"commutator", "monomial", "exact", "method"}


def _fmt(x: float, sig_figs: int = OUTPUT_SIG_FIGS) -> str:
    return f"{x:.{sig_figs}g}"


def monomial_rows(bp: BoundPolynomial) -> list[list[str]]:
    return [[str(vd), str(ud), format_monomial((vd, ud)), _fmt(c)] for (vd, ud), c in bp.monomials()]


def breakdown_rows(bp: BoundPolynomial) -> list[list[str]]:
    rows = []
    for item in sorted(bp.breakdown, key=lambda b: (b.chain, b.degree)):
        rows.append([
            item.label, str(item.degree[0]), str(item.degree[1]),
            _fmt(item.prefactor), _fmt(item.norm), _fmt(item.contribution),
            "yes" if item.exact else "no", item.method,
        ])
    return rows


def write_csv(path: Path, headers: list[str], rows: list[list[str]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        writer.writerows(rows)
    logger.info("wrote %s (%d rows)", path, len(rows))
    return path


def bound_csv(bp: BoundPolynomial, path: Path) -> Path:
    return write_csv(path, MONOMIAL_HEADERS, monomial_rows(bp))


def bound_text(bp: BoundPolynomial) -> str:
    """Key-value header, monomial table and per-commutator breakdown."""
    lines = [
        f"geometry: {bp.geometry}",
        f"formula: {bp.formula}",
        f"mode: {bp.mode}",
        f"s: {bp.s if bp.s is not None else '-'}",
        f"t_power: {bp.t_power}",
        f"bound_per_site: {bp.format()}",
        "",
        "[monomials]",
        "\t".join(MONOMIAL_HEADERS),
    ]
    lines += ["\t".join(row) for row in monomial_rows(bp)]
    lines += ["", "[breakdown]", "\t".join(BREAKDOWN_HEADERS)]
    lines += ["\t".join(row) for row in breakdown_rows(bp)]
    return "\n".join(lines) + "\n"


def write_bound_text(bp: BoundPolynomial, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(bound_text(bp), encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def create_excel_export(bp: BoundPolynomial) -> io.BytesIO:
    """Workbook with "Monomials" and "Breakdown" sheets. Returns a BytesIO buffer."""
    wb = Workbook()

    # Header styling
    header_fill = PatternFill(start_color="1A365D", end_color="1A365D", fill_type="solid")
    header_font = Font(bold=True, color="FFFFFF", size=10)
    thin_border = Border(bottom=Side(style="thin", color="E2E8F0"))

    sheets = [
        ("Monomials", MONOMIAL_HEADERS, monomial_rows(bp), [8, 8, 16, 16]),
        ("Breakdown", BREAKDOWN_HEADERS, breakdown_rows(bp), [34, 8, 8, 14, 14, 14, 8, 14]),
    ]
    ws = wb.active
    for k, (title, headers, rows, widths) in enumerate(sheets):
        if k:
            ws = wb.create_sheet()
        ws.title = title
        for col, h in enumerate(headers, 1):
            cell = ws.cell(row=1, column=col, value=h)
            cell.fill = header_fill
            cell.font = header_font
            cell.alignment = Alignment(horizontal="center", vertical="center")
        for row_idx, row in enumerate(rows, 2):
            for col, value in enumerate(row, 1):
                if headers[col - 1] not in TEXT_COLUMNS:
                    value = float(value)
                ws.cell(row=row_idx, column=col, value=value).border = thin_border
        for i, w in enumerate(widths, 1):
            ws.column_dimensions[chr(64 + i)].width = w
        ws.freeze_panes = "A2"

    buffer = io.BytesIO()
    wb.save(buffer)
    buffer.seek(0)
    return buffer


def write_excel(bp: BoundPolynomial, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(create_excel_export(bp).getvalue())
    logger.info("wrote %s", path)
    return path


def empirical_rows(run: EmpiricalRun, bp: BoundPolynomial | None = None) -> list[list[str]]:
    rows = []
    for t, err in zip(run.times, run.errors):
        if bp is None:
            rows.append([_fmt(t), _fmt(err), "", ""])
            continue
        bound = evaluate_at(bp, float(t), run.v, run.u)
        ratio = bound / err if err > 0 else float("nan")
        rows.append([_fmt(t), _fmt(err), _fmt(bound), _fmt(ratio)])
    return rows


def empirical_csv(run: EmpiricalRun, path: Path, bp: BoundPolynomial | None = None) -> Path:
    return write_csv(path, EMPIRICAL_HEADERS, empirical_rows(run, bp))
