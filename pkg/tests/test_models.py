import pytest
from pydantic import ValidationError

from hubbard_trotter.models import RunConfig, TGridSpec


def test_log_spaced_grid():
    grid = TGridSpec.parse("1e-3:1e-1:3")
    assert grid.points == pytest.approx([1e-3, 1e-2, 1e-1])


def test_explicit_grid():
    assert TGridSpec.parse("0, 0.1,0.2").points == [0.0, 0.1, 0.2]


@pytest.mark.parametrize("text", ["1:2", "0:1:3", "1:0.5:3", "", "-0.1"])
def test_bad_grids(text):
    with pytest.raises(ValueError):
        TGridSpec.parse(text)


def test_defaults():
    cfg = RunConfig(command="bound")
    assert (cfg.geometry, cfg.formula, cfg.s, cfg.v, cfg.u) == ("1d", "strang", "auto", -1.0, 1.0)
    assert cfg.fixed_s() is None
    assert cfg.resolved_extents() == (4,)
    assert len(cfg.times()) == 20
    assert cfg.stem("strang") == "bound_1d_strang"
    assert cfg.formats == ["csv", "text"]


def test_numeric_split_index():
    cfg = RunConfig(command="bound", s="3", geometry="Square")
    assert cfg.fixed_s() == 3
    assert cfg.geometry == "square"
    assert cfg.resolved_extents() == (4, 4)


@pytest.mark.parametrize("given,mode", [("prop10", "tight"), ("theorem1", "general"), ("Tight", "tight"), ("auto", "auto")])
def test_mode_spellings(given, mode):
    assert RunConfig(command="bound", mode=given).mode == mode


@pytest.mark.parametrize(
    "fields",
    [
        {"command": "bound", "geometry": "kagome"},
        {"command": "bound", "s": 0},
        {"command": "bound", "window": -1},
        {"command": "bound", "mode": "exact"},
        {"command": "empirical", "t_grid": "1:2"},
        {"command": "commutator"},
        {"command": "plot"},
    ],
)
def test_invalid_configs(fields):
    with pytest.raises(ValidationError):
        RunConfig(**fields)
