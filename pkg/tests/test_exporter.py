import csv
from fractions import Fraction

import numpy as np
import pytest
from openpyxl import load_workbook

from hubbard_trotter.services import exporter
from hubbard_trotter.services.bounds import BoundPolynomial, ChainContribution
from hubbard_trotter.services.empirical import EmpiricalRun


@pytest.fixture
def bp():
    breakdown = [
        ChainContribution((0, 1, 0), (3, 0), float(Fraction(1, 24)), 4.0, True, "quadratic"),
        ChainContribution((1, 1, 0), (3, 0), float(Fraction(1, 12)), 4.0, True, "quadratic"),
        ChainContribution((2, 2, 0), (1, 2), float(Fraction(1, 12)), 2.0, True, "dense-block"),
    ]
    return BoundPolynomial(3, {(1, 2): 1 / 6, (3, 0): 0.5}, "strang", "1d", None, "tight", breakdown)


def test_monomial_rows(bp):
    assert exporter.monomial_rows(bp) == [
        ["3", "0", "|v|^3", "0.5"],
        ["1", "2", "|v||u|^2", "0.166667"],
    ]


def test_breakdown_rows(bp):
    rows = exporter.breakdown_rows(bp)
    assert [r[0] for r in rows] == ["[H1,[H2,H1]]", "[H2,[H2,H1]]", "[H3,[H3,H1]]"]
    assert rows[0][5] == "0.166667"
    assert rows[2][6:] == ["yes", "dense-block"]


def test_csv_file(bp, tmp_path):
    path = exporter.bound_csv(bp, tmp_path / "out" / "bound.csv")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == exporter.MONOMIAL_HEADERS
    assert len(rows) == 3


def test_text_record(bp, tmp_path):
    text = exporter.write_bound_text(bp, tmp_path / "bound.txt").read_text(encoding="utf-8")
    assert "formula: strang\n" in text
    assert "s: -\n" in text
    assert "bound_per_site: t^3 (0.5|v|^3 + 0.166667|v||u|^2)\n" in text
    assert text.index("[monomials]") < text.index("[breakdown]")


def test_excel_workbook(bp):
    wb = load_workbook(exporter.create_excel_export(bp))
    assert wb.sheetnames == ["Monomials", "Breakdown"]
    sheet = wb["Monomials"]
    assert sheet["A1"].value == "v_deg"
    assert sheet["D2"].value == pytest.approx(0.5)
    assert sheet["C2"].value == "|v|^3"
    assert wb["Breakdown"].max_row == 4


def test_empirical_rows(bp):
    run = EmpiricalRun("1d", (4,), -1.0, 1.0, "strang", 2, np.array([0.0, 0.1]), np.array([0.0, 1e-4]))
    rows = exporter.empirical_rows(run, bp)
    assert rows[0][:3] == ["0", "0", "0"]
    assert rows[0][3] == "nan"
    bound = (0.5 + 1 / 6) * 0.1 ** 3
    assert float(rows[1][2]) == pytest.approx(bound, rel=1e-5)
    assert float(rows[1][3]) == pytest.approx(bound / 1e-4, rel=1e-5)
    assert exporter.empirical_rows(run)[1][2:] == ["", ""]
