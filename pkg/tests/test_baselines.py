import itertools

import numpy as np
import pytest

from megc.baselines import (SYMMETRIC, _grid_search, best_offload_ratio, fra_policy, golden_section, grid_points,
                            oracle_per_slot, rra_policy)
from megc.env import sample_tasks
from megc.latency import Action, slot_latency
from megc.system import MBIT, SystemParams, TaskArrivals, sample_channel


def paired_slots(n, seed=0, fading=True):
    params = SystemParams()
    rng = np.random.default_rng(seed)
    return [(sample_channel(params, rng, fading=fading), sample_tasks(rng, params)) for _ in range(n)]


def test_fra_is_constant_and_feasible():
    assert fra_policy() is fra_policy()
    assert fra_policy() == SYMMETRIC
    assert SYMMETRIC.violation() == 0.0 or SYMMETRIC.violation() < 1e-15
    custom = Action.from_free(0.3, 0.6, 0.4, 0.2, 0.5, 0.25)
    assert fra_policy(custom) is custom


def test_rra_draws_are_feasible_and_centred():
    rng = np.random.default_rng(0)
    draws = [rra_policy(rng) for _ in range(100_000)]
    assert max(a.violation() for a in draws) <= 1e-9
    assert np.mean([a.lam for a in draws]) == pytest.approx(0.5, rel=0.01)
    assert np.mean([a.omega_aigc for a in draws]) == pytest.approx(1 / 3, rel=0.01)


def test_rra_is_reproducible():
    a = [rra_policy(np.random.default_rng(5)) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_grid_points():
    np.testing.assert_array_equal(grid_points(0.5), [0.0, 0.5, 1.0])
    assert len(grid_points(0.05)) == 21 and len(grid_points(0.02)) == 51
    for bad in (0.0, 0.6, -1):
        with pytest.raises(ValueError):
            grid_points(bad)


def test_golden_section_on_parabola():
    x, fx = golden_section(lambda t: (t - 0.3) ** 2, 0.0, 1.0)
    assert x == pytest.approx(0.3, abs=1e-6) and fx < 1e-12


def test_closed_form_offload_ratio_equalizes_branches():
    params = SystemParams()
    channel, tasks = paired_slots(1)[0]
    lam = best_offload_ratio(0.4, 0.3, channel, tasks, params)
    b = slot_latency(Action.from_free(0.4, 0.5, 0.5, lam, 0.3, 0.3), channel, tasks, params)
    assert b.comp_local == pytest.approx(b.comp_off + b.comp_es, rel=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_decomposed_grid_equals_brute_force(seed):
    params = SystemParams()
    channel, tasks = paired_slots(1, seed=seed)[0]
    g = grid_points(0.25)
    best = np.inf
    simplex = [(i, j) for i in range(5) for j in range(5) if i + j <= 4]
    for a_off, a_back, beta, lam in itertools.product(g, repeat=4):
        for i, j in simplex:
            action = Action.from_free(a_off, a_back, beta, lam, g[i], g[j])
            best = min(best, slot_latency(action, channel, tasks, params).slot_total)
    found = _grid_search(channel, tasks, params, g)
    assert slot_latency(found, channel, tasks, params).slot_total == pytest.approx(best, rel=1e-12)


def test_single_user_work_pushes_its_resources_up():
    params = SystemParams()
    tasks = TaskArrivals.from_inputs(1.0, 1.0, 12 * MBIT, params.psi)
    action, _ = oracle_per_slot(sample_channel(params), tasks, params)
    assert action.alpha_aigc_back > 0.95
    assert action.beta > 0.95


def test_single_user_work_in_compute_bound_regime():
    # with a slow ES the compute shares matter; the fixed inference cost keeps
    # the VE share alive, but the idle computing user gets (almost) nothing
    params = SystemParams().replace(f_es=1e3)
    tasks = TaskArrivals.from_inputs(1.0, 1.0, 12 * MBIT, params.psi)
    action, _ = oracle_per_slot(sample_channel(params), tasks, params)
    assert action.omega_comp < 0.01
    assert action.omega_aigc >= action.omega_ve


def test_oracle_dominates_fixed_and_random():
    params = SystemParams()
    rng = np.random.default_rng(1)
    for channel, tasks in paired_slots(30, seed=1):
        _, best = oracle_per_slot(channel, tasks, params)
        for other in (SYMMETRIC, rra_policy(rng)):
            assert best <= slot_latency(other, channel, tasks, params).slot_total


def test_oracle_returns_feasible_action_and_its_value():
    params = SystemParams()
    for channel, tasks in paired_slots(5, seed=2):
        action, value = oracle_per_slot(channel, tasks, params)
        assert action.is_feasible(1e-9)
        assert value == slot_latency(action, channel, tasks, params).slot_total


def test_grid_monotone_under_refinement():
    params = SystemParams()
    for channel, tasks in paired_slots(20, seed=3):
        values = [oracle_per_slot(channel, tasks, params, r, polish=False)[1] for r in (0.5, 0.25, 0.125, 0.05, 0.025)]
        assert values[0] >= values[1] >= values[2]
        assert values[3] >= values[4]


def test_resolution_gap_is_small():
    params = SystemParams()
    worst = 0.0
    for channel, tasks in paired_slots(100, seed=4):
        coarse = oracle_per_slot(channel, tasks, params, 0.05)[1]
        fine = oracle_per_slot(channel, tasks, params, 0.02)[1]
        assert fine <= coarse * (1 + 1e-9)
        worst = max(worst, abs(coarse - fine) / fine)
    assert worst < 0.03


def test_oracle_is_deterministic():
    params = SystemParams()
    channel, tasks = paired_slots(1, seed=5)[0]
    assert oracle_per_slot(channel, tasks, params) == oracle_per_slot(channel, tasks, params)
