import pytest

from hubbard_trotter.config import DATA_DIR
from hubbard_trotter.services.bounds import (
    ChainEvaluator,
    CommutatorSyntaxError,
    evaluate_at,
    evaluate_bound,
    evaluate_commutator,
    format_monomial,
    format_tree,
    parse_commutator,
    resolve_mode,
    scan_s,
)
from hubbard_trotter.services.splitting import FormulaError, load_formula, strang, suzuki


@pytest.fixture(scope="module")
def strang_1d(chain_1d):
    _, dec = chain_1d
    return evaluate_bound(dec, strang(3), mode="tight")


def coefficients(bp):
    return [c for _, c in bp.monomials()]


def test_second_order_chain_bound(strang_1d):
    assert strang_1d.t_power == 3
    assert [d for d, _ in strang_1d.monomials()] == [(3, 0), (2, 1), (1, 2)]
    assert coefficients(strang_1d) == pytest.approx([3 / 6, 4 / 6, 1 / 6], rel=1e-9)
    assert strang_1d.mode == "tight"
    assert strang_1d.s is None


def test_bound_text(strang_1d):
    assert strang_1d.format() == "t^3 (0.5|v|^3 + 0.666667|v|^2|u| + 0.166667|v||u|^2)"


def test_breakdown_adds_up(strang_1d):
    total = sum(item.contribution for item in strang_1d.breakdown)
    assert total == pytest.approx(sum(coefficients(strang_1d)))
    labels = {item.label for item in strang_1d.breakdown}
    assert "[H1,[H2,H1]]" in labels
    assert all(item.exact for item in strang_1d.breakdown)


def test_evaluate_at(strang_1d):
    assert evaluate_at(strang_1d, 0.0, -1, 1) == 0.0
    assert evaluate_at(strang_1d, 1.0, -1, 1) == pytest.approx(8 / 6)
    ratio = evaluate_at(strang_1d, 0.2, -1, 2) / 0.2 ** 3
    assert evaluate_at(strang_1d, 0.05, -1, 2) / 0.05 ** 3 == pytest.approx(ratio)
    with pytest.raises(ValueError):
        evaluate_at(strang_1d, -0.1, -1, 1)


def test_tight_bound_beats_general_bound(chain_1d):
    _, dec = chain_1d
    evaluator = ChainEvaluator(dec)
    tight = evaluate_bound(dec, strang(3), mode="tight", evaluator=evaluator)
    general = evaluate_bound(dec, strang(3), mode="general", evaluator=evaluator)
    assert general.s == 3
    assert evaluate_at(tight, 1.0, -1, 1) <= evaluate_at(general, 1.0, -1, 1) + 1e-12


def test_every_monomial_has_full_degree(chain_1d):
    _, dec = chain_1d
    bp = evaluate_bound(dec, strang(3), mode="general", s=2)
    assert all(sum(d) == 3 for d in bp.coefficients)
    assert all(c > 0 for c in bp.coefficients.values())


def test_scan_never_loses_to_default(chain_1d):
    _, dec = chain_1d
    f = strang(3)
    result = scan_s(dec, f)
    assert sorted(result.values) == list(range(1, f.K + 1))
    assert result.values[result.best_s] <= result.values[f.default_s]
    assert result.best.s == result.best_s


def test_mode_resolution():
    assert resolve_mode(strang(3), "auto") == "tight"
    assert resolve_mode(suzuki(4, 3), "auto") == "general"
    with pytest.raises(FormulaError, match="Strang"):
        resolve_mode(suzuki(4, 3), "tight")
    with pytest.raises(FormulaError, match="unknown bound mode"):
        resolve_mode(strang(3), "exact")
    assert resolve_mode(strang(3), "prop10") == "tight"
    assert resolve_mode(suzuki(4, 3), "theorem1") == "general"


def test_split_index_does_not_apply_to_tight_bound(chain_1d):
    _, dec = chain_1d
    with pytest.raises(FormulaError, match="split index"):
        evaluate_bound(dec, strang(3), s=2, mode="tight")


def test_term_count_must_match(chain_1d):
    _, dec = chain_1d
    with pytest.raises(FormulaError, match="terms"):
        evaluate_bound(dec, strang(4))


def test_format_monomial():
    assert format_monomial((3, 0)) == "|v|^3"
    assert format_monomial((2, 1)) == "|v|^2|u|"
    assert format_monomial((1, 2)) == "|v||u|^2"


@pytest.mark.parametrize(
    "text,tree",
    [
        ("H2", 1),
        ("[H1,H2]", (0, 1)),
        ("[H1,[H2,H1]]", (0, (1, 0))),
        (" [ [H1, H2] , H3 ] ", ((0, 1), 2)),
    ],
)
def test_parse_commutator(text, tree):
    assert parse_commutator(text, 3) == tree
    assert format_tree(tree) == text.replace(" ", "")


@pytest.mark.parametrize("text", ["[H1,H2", "[H1 H2]", "H4", "H0", "[H1,H2]]", "[x,H1]", ""])
def test_parse_commutator_rejects(text):
    with pytest.raises(CommutatorSyntaxError):
        parse_commutator(text, 3)


def test_commutator_of_a_term_with_itself(chain_1d):
    _, dec = chain_1d
    assert evaluate_commutator(dec, "[H1,H1]").is_zero


def test_commutator_report(chain_1d):
    _, dec = chain_1d
    report = evaluate_commutator(dec, "[H1, [H2, H1]]")
    assert report.expression == "[H1,[H2,H1]]"
    assert list(report.norms) == [(3, 0)]
    assert report.norms[(3, 0)].value == pytest.approx(4.0)


def test_interaction_commutator_degrees(chain_1d):
    _, dec = chain_1d
    assert [d for d, _ in evaluate_commutator(dec, "[H3,[H2,H1]]").operator.components] == [(2, 1)]
    assert [d for d, _ in evaluate_commutator(dec, "[H2,[H2,H1]]").operator.components] == [(3, 0)]


# (geometry, formula, s, coefficients produced here, reference coefficients they must not exceed)
REGRESSIONS = [
    (
        "1d", suzuki(4, 3), 11,
        [1.34047, 8.54575, 2.34343, 0.40015, 0.06001],
        [1.3405, 8.8233, 2.3945, 0.4137, 0.06001],
    ),
    (
        "square", strang(3), None,
        [4.4142 / 6, 7.6704 / 6, 1.0 / 6],
        [4.4142 / 6, 8.0889 / 6, 1.3062 / 6],
    ),
    (
        "square", suzuki(4, 3), None,
        [2.1485, 92.1642, 14.3445, 1.0712, 0.07938],
        [2.1485, 92.1642, 14.3445, 1.0712, 0.07938],
    ),
    (
        "triangular", strang(4), None,
        [35.666 / 6, 18.2357 / 6, 1.4142 / 6],
        [39.4721 / 6, 20.1594 / 6, 1.9546 / 6],
    ),
    (
        "triangular", suzuki(4, 4), None,
        [124.815, 493.917, 60.4106, 2.9855, 0.1206],
        [124.815, 493.917, 60.4106, 2.9855, 0.1206],
    ),
]


@pytest.mark.slow
@pytest.mark.parametrize("geometry,formula,s,measured,published", REGRESSIONS)
def test_published_bounds(request, geometry, formula, s, measured, published):
    _, dec = request.getfixturevalue({"1d": "chain_1d"}.get(geometry, geometry))
    got = coefficients(evaluate_bound(dec, formula, s))
    assert got == pytest.approx(measured, rel=5e-3)
    assert all(g <= p * (1 + 5e-3) for g, p in zip(got, published))


@pytest.mark.slow
def test_eleven_stage_fourth_order_bound(chain_1d):
    path = DATA_DIR / "ak11-4.txt"
    if not path.exists():
        pytest.skip("ak11-4.txt coefficient table is not bundled")
    _, dec = chain_1d
    bp = evaluate_bound(dec, load_formula(path))
    published = [3.0745, 28.2247, 13.4738, 4.9908, 0.9155]
    got = coefficients(bp)
    assert len(got) == len(published)
    assert all(0 < g <= p * (1 + 5e-3) for g, p in zip(got, published))
