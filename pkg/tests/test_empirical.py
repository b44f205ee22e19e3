import numpy as np
import pytest

from hubbard_trotter.services.algebra import Spin, hop, num, total
from hubbard_trotter.services.bounds import evaluate_at, evaluate_bound
from hubbard_trotter.services.empirical import (
    SectorSystem,
    SystemTooLargeError,
    exact_evolution,
    splitting_error,
)
from hubbard_trotter.services.norms import ModeIndex
from hubbard_trotter.services.splitting import strang, suzuki

UP, DOWN = Spin.UP, Spin.DOWN


@pytest.fixture(scope="module")
def small_h():
    return total([hop(0, 1, s, -1) for s in Spin] + [hop(1, 2, s, -1) for s in Spin] + [num(1, UP) * num(1, DOWN)])


def test_evolution_at_zero_is_identity(small_h):
    u = exact_evolution(small_h, 0.0)
    assert np.allclose(u, np.eye(u.shape[0]))


def test_evolution_is_unitary(small_h):
    u = exact_evolution(small_h, 0.7)
    assert np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])) < 1e-10


def test_evolution_group_law(small_h):
    a, b = exact_evolution(small_h, 0.3), exact_evolution(small_h, 0.45)
    assert np.linalg.norm(a @ b - exact_evolution(small_h, 0.75)) < 1e-10


def test_too_many_modes():
    modes = ModeIndex(((i,), s) for i in range(9) for s in Spin)
    with pytest.raises(SystemTooLargeError):
        SectorSystem(modes)


@pytest.fixture(scope="module")
def strang_run(chain_1d):
    _, dec = chain_1d
    times = np.concatenate([[0.0], np.geomspace(1e-3, 1e-2, 5), [0.05, 0.1]])
    return splitting_error(dec, strang(3), (4,), times=times)


def test_error_vanishes_at_zero(strang_run):
    assert strang_run.errors[0] < 1e-12
    assert np.all(strang_run.errors >= 0)


def test_second_order_slope(strang_run):
    assert strang_run.slope() == pytest.approx(3.0, abs=0.15)


def test_fourth_order_slope(chain_1d):
    _, dec = chain_1d
    run = splitting_error(dec, suzuki(4, 3), (4,), times=np.geomspace(1e-2, 5e-2, 5))
    assert run.slope(1e-2, 5e-2) == pytest.approx(5.0, abs=0.3)


def test_bound_dominates_error(chain_1d, strang_run):
    _, dec = chain_1d
    bp = evaluate_bound(dec, strang(3), mode="tight")
    for t, err in zip(strang_run.times, strang_run.errors):
        assert err <= evaluate_at(bp, t, -1, 1) + 1e-12


def test_slope_needs_samples(strang_run):
    with pytest.raises(ValueError):
        strang_run.slope(1.0, 2.0)


@pytest.mark.slow
@pytest.mark.parametrize("formula,low,high", [(strang(3), 3, 30), (suzuki(4, 3), 100, 10000)])
def test_overestimation_at_moderate_time(chain_1d, formula, low, high):
    _, dec = chain_1d
    t = 0.05
    run = splitting_error(dec, formula, (4,), times=[t])
    bound = evaluate_at(evaluate_bound(dec, formula), t, -1, 1)
    assert low <= bound / run.errors[0] <= high
