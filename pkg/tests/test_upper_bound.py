import math

import numpy as np
import pytest

from swiptsec import (
    ChannelRealization,
    SolverConfig,
    SystemParams,
    solve_fsa,
    solve_fps,
    solve_iterative,
    solve_stepwise,
    solve_upper_bound,
)
from swiptsec.rates import clamped_rate_matrix, eve_rate_vector
from swiptsec.upper_bound import (
    assign_subcarriers_ub,
    dual_value_exact,
    optimal_split_ub,
    split_matrix,
)
from swiptsec.verification import unit_instance


def make_instance(k, n, seed=0, targets=0.0, eve_mean=0.5):
    rng = np.random.default_rng(seed)
    params = SystemParams(
        num_users=k, num_subcarriers=n, total_power_w=float(n),
        noise_power_w=1.0, conversion_efficiency=0.4,
        secrecy_targets=np.full(k, float(targets)))
    channels = ChannelRealization(
        user_gains=rng.exponential(1.0, (k, n)),
        eve_gains=rng.exponential(eve_mean, n))
    return params, channels


def test_split_zero_multiplier_all_harvest():
    params, channels = make_instance(2, 3, seed=1)
    for n in range(3):
        assert optimal_split_ub(0, n, 0.0, channels, params) == 1.0


def test_split_eve_dominated_goes_full_harvest():
    params = SystemParams(num_users=1, num_subcarriers=1, total_power_w=1.0,
                          noise_power_w=1.0, conversion_efficiency=0.4,
                          secrecy_targets=np.zeros(1))
    channels = ChannelRealization(user_gains=[[0.5]], eve_gains=[5.0])
    assert optimal_split_ub(0, 0, 50.0, channels, params) == 1.0


# Golden-section oracle on the published per-subcarrier objective
# 0.4*rho + 0.2*max(0, log2(1+(1-rho)/0.1)), frozen from
# scipy.optimize.minimize_scalar(..., method='bounded', xatol=1e-12):
GOLDEN_MAXIMIZER = 0.37865248528134643
# The published closed form evaluates to a different point; the gap is a
# documented property of the printed rule, which this solver implements
# verbatim (the dual bound is computed separately by exact maximization).
PRINTED_VALUE = 1 - 0.2 / (0.4 * math.log(2)) + 0.1 / math.log(2)


def test_split_formula_matches_print_and_gap_to_maximizer_is_known():
    params = SystemParams(num_users=1, num_subcarriers=1, total_power_w=1.0,
                          noise_power_w=0.1, conversion_efficiency=0.4,
                          secrecy_targets=np.zeros(1))
    channels = ChannelRealization(user_gains=[[1.0]], eve_gains=[0.0])
    value = optimal_split_ub(0, 0, 0.2, channels, params)
    assert value == pytest.approx(PRINTED_VALUE, abs=1e-12)
    assert value == pytest.approx(0.4229219836444146, abs=1e-12)
    assert abs(value - GOLDEN_MAXIMIZER) == pytest.approx(0.04427, abs=1e-4)


def test_dual_value_exact_dominates_grid_search():
    # the exact per-term maximization must match a fine grid search
    params, channels = make_instance(2, 4, seed=3, targets=0.4)
    eve = eve_rate_vector(params, channels)
    lam = np.array([0.3, 0.9])
    p = params.subcarrier_power_w
    s2 = params.noise_power_w
    zeta = params.conversion_efficiency
    h = channels.user_gains

    grid = np.linspace(0.0, 1.0, 20001)
    total = 0.0
    for n in range(4):
        best_n = zeta * p * h[:, n].sum()  # unassigned: everyone harvests
        for k in range(2):
            rates = np.maximum(
                0.0, np.log2(1 + (1 - grid) * p * h[k, n] / s2) - eve[n])
            f = zeta * p * h[k, n] * grid + lam[k] * rates
            others = zeta * p * (h[:, n].sum() - h[k, n])
            best_n = max(best_n, others + float(f.max()))
        total += best_n
    total -= float(lam @ params.secrecy_targets)
    exact = dual_value_exact(lam, params, channels, eve)
    assert exact >= total - 1e-9
    assert exact == pytest.approx(total, rel=1e-6)


def test_two_case_rule_invariant():
    params, channels = make_instance(3, 6, seed=4)
    eve = eve_rate_vector(params, channels)
    for lam_scale in (0.1, 1.0, 10.0):
        lam = np.full(3, lam_scale)
        rho = split_matrix(lam, params, channels, eve)
        user_rate = np.log2(1 + (1 - rho) * params.subcarrier_power_w
                            * channels.user_gains / params.noise_power_w)
        partial = rho < 1.0
        assert np.all(user_rate[partial] >= eve[None, :].repeat(3, 0)[partial])


def test_assignment_zero_multipliers_tie_breaks_to_user_zero():
    params, channels = make_instance(3, 5, seed=5)
    eve = eve_rate_vector(params, channels)
    lam = np.zeros(3)
    rho = split_matrix(lam, params, channels, eve)
    assignment = assign_subcarriers_ub(lam, rho, params, channels, eve)
    assert np.all(assignment.owner == 0)


def test_assignment_matches_exhaustive_argmax():
    params, channels = make_instance(2, 3, seed=6, targets=0.3)
    eve = eve_rate_vector(params, channels)
    lam = np.array([0.7, 1.3])
    rho = split_matrix(lam, params, channels, eve)
    rates = clamped_rate_matrix(params.subcarrier_power_w,
                                params.noise_power_w, channels.user_gains,
                                eve, rho)
    assignment = assign_subcarriers_ub(lam, rho, params, channels, eve)
    p = params.subcarrier_power_w
    zeta = params.conversion_efficiency
    for n in range(3):
        harvest = zeta * p * float((rho[:, n] * channels.user_gains[:, n]).sum())
        scores = [harvest + lam[k] * rates[k, n] for k in range(2)]
        assert assignment.owner[n] == int(np.argmax(scores))


def test_assignment_column_sums():
    params, channels = make_instance(4, 7, seed=8)
    eve = eve_rate_vector(params, channels)
    for lam_seed in range(5):
        lam = np.random.default_rng(lam_seed).exponential(1.0, 4)
        rho = split_matrix(lam, params, channels, eve)
        assignment = assign_subcarriers_ub(lam, rho, params, channels, eve)
        assert np.all(assignment.x.sum(axis=0) <= 1)


def test_solve_unconstrained_harvests_everything():
    params, channels = make_instance(2, 4, seed=9, targets=0.0)
    sol = solve_upper_bound(params, channels)
    assert sol.feasible
    assert np.all(sol.splits.values == 1.0)
    expect = 0.4 * float(np.sum(channels.user_gains))
    assert sol.harvested_total_w == pytest.approx(expect, rel=1e-12)


def test_solve_unreachable_target_infeasible():
    params, channels = make_instance(2, 2, seed=10, targets=50.0)
    sol = solve_upper_bound(params, channels)
    assert not sol.feasible
    assert "unreachable" in sol.diagnostics


def test_solve_within_tolerance_of_relaxation_oracle():
    from swiptsec import brute_force_per_subcarrier_split

    config = SolverConfig(max_dual_iters=200)
    # frozen seeded instance: the dual solver lands on the enumerated optimum
    params, channels = unit_instance(2, 4, 33, 1.0)
    sol = solve_upper_bound(params, channels, config)
    oracle = brute_force_per_subcarrier_split(params, channels, config)
    assert sol.feasible and oracle.feasible
    assert sol.harvested_total_w <= oracle.harvested_total_w * (1 + 1e-6)
    assert sol.harvested_total_w >= oracle.harvested_total_w * (1 - 1e-3)

    # batch guard: never above the oracle, and the heuristic gap stays
    # bounded (the returned point privileges the assignment the step-wise
    # solver inherits, which costs some relaxation value on odd instances)
    gaps = []
    for seed in range(30, 45):
        params, channels = unit_instance(2, 4, seed, 1.0)
        sol = solve_upper_bound(params, channels, config)
        oracle = brute_force_per_subcarrier_split(params, channels, config)
        if sol.feasible and oracle.feasible:
            assert sol.harvested_total_w <= oracle.harvested_total_w * (
                1 + 1e-6)
            gaps.append(1 - sol.harvested_total_w / oracle.harvested_total_w)
    assert len(gaps) >= 5
    assert max(gaps) <= 0.35
    assert float(np.mean(gaps)) <= 0.12


def test_upper_bound_dominates_every_feasible_scheme():
    config = SolverConfig(max_dual_iters=150)
    for seed in range(50, 60):
        params, channels = unit_instance(2, 4, seed, 0.8)
        ub = solve_upper_bound(params, channels, config)
        if not ub.feasible:
            continue
        others = [solve_stepwise(params, channels, config, relaxation=ub),
                  solve_iterative(params, channels, config),
                  solve_fps(params, channels, config),
                  solve_fsa(params, channels, seed + 5, config)]
        for other in others:
            if other.feasible:
                assert ub.harvested_total_w >= other.harvested_total_w * (
                    1 - 1e-6)


def test_partial_splits_meet_two_case_rule_in_solution():
    params, channels = unit_instance(2, 4, 41, 1.0)
    sol = solve_upper_bound(params, channels)
    if not sol.feasible:
        pytest.skip("instance infeasible")
    eve = eve_rate_vector(params, channels)
    rho = sol.splits.values
    user_rate = np.log2(1 + (1 - rho) * params.subcarrier_power_w
                        * channels.user_gains / params.noise_power_w)
    partial = rho < 1.0
    eve_mat = np.repeat(eve[None, :], 2, axis=0)
    assert np.all(user_rate[partial] >= eve_mat[partial] - 1e-12)
