import numpy as np
import pytest

from swiptsec import (
    ChannelRealization,
    SolverConfig,
    SystemParams,
    solve_stepwise,
    solve_upper_bound,
)
from swiptsec.rates import eve_rate_vector
from swiptsec.splitsearch import assigned_rates_for_splits
from swiptsec.verification import unit_instance


def single_link(target, user_snr=3.0, eve_snr=1.0):
    params = SystemParams(num_users=1, num_subcarriers=1, total_power_w=1.0,
                          noise_power_w=1.0, conversion_efficiency=0.4,
                          secrecy_targets=np.array([float(target)]))
    channels = ChannelRealization(user_gains=[[user_snr]],
                                  eve_gains=[eve_snr])
    return params, channels


def test_closed_form_inversion():
    # (log2(1 + 3(1-rho)) - 1)+ = 0.5  =>  1-rho = (2^1.5 - 1)/3
    params, channels = single_link(0.5)
    sol = solve_stepwise(params, channels)
    assert sol.feasible
    expect = 1 - (2 ** 1.5 - 1) / 3
    assert expect == pytest.approx(0.3905242917512699, abs=1e-12)
    assert sol.splits.values[0] == pytest.approx(expect, abs=2e-6)


def test_zero_targets_full_harvest():
    rng = np.random.default_rng(1)
    params = SystemParams(num_users=2, num_subcarriers=4, total_power_w=4.0,
                          noise_power_w=1.0, conversion_efficiency=0.4,
                          secrecy_targets=np.zeros(2))
    channels = ChannelRealization(user_gains=rng.exponential(1.0, (2, 4)),
                                  eve_gains=rng.exponential(0.5, 4))
    sol = solve_stepwise(params, channels)
    assert sol.feasible
    assert np.all(sol.splits.values == 1.0)
    assert sol.harvested_total_w == pytest.approx(
        0.4 * float(np.sum(channels.user_gains)), rel=1e-12)


def test_zero_split_exact_target_returns_zero():
    # at a zero split the rate is exactly 1 bit; the target of 1 bit must
    # come back as rho = 0 without bisection drift
    params, channels = single_link(1.0)
    sol = solve_stepwise(params, channels)
    assert sol.feasible
    assert sol.splits.values[0] == 0.0


def test_rates_sit_on_the_boundary():
    config = SolverConfig()
    for seed in range(20, 30):
        params, channels = unit_instance(2, 4, seed, 1.0)
        sol = solve_stepwise(params, channels, config)
        if not sol.feasible:
            continue
        for k in range(2):
            target = params.secrecy_targets[k]
            rate = sol.secrecy_rates[k]
            assert rate >= target
            assert rate - target <= config.bisect_tol * target


def test_boundary_maximality_small_push_violates():
    config = SolverConfig()
    eps = config.bisect_tol
    for seed in range(20, 26):
        params, channels = unit_instance(2, 4, seed, 1.0)
        sol = solve_stepwise(params, channels, config)
        if not sol.feasible:
            continue
        eve = eve_rate_vector(params, channels)
        for k in range(2):
            target = params.secrecy_targets[k]
            rho_k = sol.splits.values[k]
            if target == 0 or rho_k >= 1.0:
                continue
            pushed = sol.splits.values.copy()
            pushed[k] = min(1.0, rho_k + 10 * eps * target)
            rates = assigned_rates_for_splits(
                sol.assignment.x, pushed, params.subcarrier_power_w,
                params.noise_power_w, channels.user_gains, eve)
            assert rates[k] < target


def test_matches_grid_search_boundary():
    config = SolverConfig()
    for seed in (31, 33, 38):
        params, channels = unit_instance(2, 4, seed, 1.0)
        sol = solve_stepwise(params, channels, config)
        if not sol.feasible:
            continue
        eve = eve_rate_vector(params, channels)
        grid = np.linspace(0.0, 1.0, 10001)
        for k in range(2):
            rates = assigned_rates_for_splits(
                np.repeat(sol.assignment.x[k][None, :], grid.size, axis=0),
                grid, params.subcarrier_power_w, params.noise_power_w,
                np.repeat(channels.user_gains[k][None, :], grid.size, axis=0),
                eve)
            feasible_grid = grid[rates >= params.secrecy_targets[k]]
            assert feasible_grid.size > 0
            assert abs(sol.splits.values[k] - feasible_grid.max()) <= 2e-4


def test_feasibility_inheritance():
    config = SolverConfig(max_dual_iters=120)
    checked = 0
    for seed in range(100, 130):
        params, channels = unit_instance(2, 4, seed, 1.0)
        ub = solve_upper_bound(params, channels, config)
        sol = solve_stepwise(params, channels, config, relaxation=ub)
        if ub.feasible:
            checked += 1
            assert sol.feasible
    assert checked >= 10


def test_never_exceeds_relaxation_value():
    config = SolverConfig(max_dual_iters=120)
    for seed in range(100, 115):
        params, channels = unit_instance(2, 4, seed, 1.0)
        ub = solve_upper_bound(params, channels, config)
        sol = solve_stepwise(params, channels, config, relaxation=ub)
        if sol.feasible and ub.feasible:
            assert sol.harvested_total_w <= ub.harvested_total_w * (1 + 1e-6)


def test_unassigned_subcarriers_stay_unassigned():
    params, channels = unit_instance(2, 4, 33, 1.0)
    ub = solve_upper_bound(params, channels)
    sol = solve_stepwise(params, channels, relaxation=ub)
    assert np.array_equal(sol.assignment.x, ub.assignment.x)
