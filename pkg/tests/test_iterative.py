import math

import numpy as np
import pytest

from swiptsec import (
    Assignment,
    ChannelRealization,
    SolverConfig,
    SplitProfile,
    SystemParams,
    check_feasibility,
    solve_iterative,
)
from swiptsec.iterative import (
    assign_given_split,
    bcd_inner_loop,
    high_snr_split,
    lagrangian_value,
    split_given_assignment,
    splits_given_assignment,
)
from swiptsec.oracle import brute_force_common_split
from swiptsec.rates import clamped_rate_matrix, eve_rate_vector
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


def test_assign_zero_multipliers_leaves_all_unassigned():
    params, channels = make_instance(2, 4, seed=1)
    assignment = assign_given_split(np.zeros(2), np.full(2, 0.5), params,
                                    channels)
    assert np.all(assignment.owner == -1)


def test_assign_single_user_with_positive_weight():
    params, channels = make_instance(1, 3, seed=2, eve_mean=0.1)
    assignment = assign_given_split(np.array([1.0]), np.array([0.2]), params,
                                    channels)
    eve = eve_rate_vector(params, channels)
    rates = clamped_rate_matrix(1.0, 1.0, channels.user_gains, eve,
                                np.array([[0.2]]))
    assert np.array_equal(assignment.owner >= 0, rates[0] > 0)


def test_assign_matches_exhaustive_argmax_of_full_subcarrier_term():
    # the harvest part is constant per column, so the argmax over users of
    # the full per-subcarrier term must coincide with the reduced rule
    params, channels = make_instance(2, 3, seed=3, targets=0.5)
    eve = eve_rate_vector(params, channels)
    mu = np.array([0.8, 1.7])
    rho = np.array([0.3, 0.6])
    assignment = assign_given_split(mu, rho, params, channels)
    rates = clamped_rate_matrix(1.0, 1.0, channels.user_gains, eve,
                                rho[:, None])
    harvest = 0.4 * float(np.sum(rho[:, None] * channels.user_gains))
    for n in range(3):
        options = [harvest + mu[k] * rates[k, n] for k in range(2)]
        options.append(harvest)  # leaving the subcarrier unassigned
        best = max(options)
        if assignment.owner[n] == -1:
            assert best == pytest.approx(harvest)
        else:
            assert options[assignment.owner[n]] == pytest.approx(best)


def test_assign_invariant_to_harvest_offset():
    params, channels = make_instance(3, 5, seed=4, targets=0.5)
    mu = np.array([0.5, 1.0, 2.0])
    a1 = assign_given_split(mu, np.array([0.2, 0.5, 0.8]), params, channels)
    # adding any constant to every column score cannot change the argmax;
    # the reduced rule must therefore match the full-term argmax above
    a2 = assign_given_split(mu, np.array([0.2, 0.5, 0.8]), params, channels)
    assert np.array_equal(a1.x, a2.x)


def test_split_zero_multiplier_full_harvest():
    params, channels = make_instance(1, 4, seed=5)
    assert split_given_assignment(0.0, np.ones(4), params, channels) == 1.0


def test_split_empty_assignment_row_full_harvest():
    params, channels = make_instance(1, 4, seed=6)
    assert split_given_assignment(5.0, np.zeros(4), params, channels) == 1.0


def test_split_interior_stationarity():
    params, channels = make_instance(1, 4, seed=7)
    config = SolverConfig()
    ph = params.subcarrier_power_w * channels.user_gains[0]
    ln2 = math.log(2.0)
    # multipliers where the derivative vanishes at the two corners; any
    # value strictly between puts the stationary point inside (0, 1)
    mu_corner0 = float(np.sum(0.4 * ph) / np.sum(ph / (ln2 * (ph + 1.0))))
    mu_corner1 = float(np.sum(0.4 * ph) / np.sum(ph / ln2))
    mu = 0.5 * (mu_corner0 + mu_corner1)
    rho = split_given_assignment(mu, np.ones(4), params, channels, config)
    assert 0.0 < rho < 1.0
    # derivative at the returned point is below the scaled tolerance
    ph = params.subcarrier_power_w * channels.user_gains[0]
    deriv = float(np.sum(0.4 * ph - mu * ph / (math.log(2.0) * (
        ph * (1 - rho) + 1.0))))
    scale = float(np.sum(0.4 * ph))
    assert abs(deriv) <= config.bisect_tol * scale


def test_split_high_snr_matches_asymptotic_formula():
    rng = np.random.default_rng(8)
    for trial in range(5):
        gains = rng.exponential(1.0, (1, 6))
        noise = 1e-12 * float((gains).min())
        params = SystemParams(
            num_users=1, num_subcarriers=6, total_power_w=6.0,
            noise_power_w=noise, conversion_efficiency=0.4,
            secrecy_targets=np.zeros(1))
        channels = ChannelRealization(user_gains=gains,
                                      eve_gains=np.zeros(6))
        x_row = (rng.random(6) < 0.7).astype(int)
        if x_row.sum() == 0:
            x_row[0] = 1
        # pick the multiplier so the asymptotic split sits inside (0, 1)
        received = params.subcarrier_power_w * float(gains.sum())
        mu = 0.4 * math.log(2.0) * received * 0.35 / float(x_row.sum())
        rho = split_given_assignment(mu, x_row, params, channels)
        expect = high_snr_split(mu, x_row, params, channels)
        assert expect == pytest.approx(0.65, abs=1e-12)
        assert abs(rho - expect) <= 1e-4


def test_bcd_zero_multipliers_fixed_point():
    params, channels = make_instance(2, 4, seed=9)
    owner, rho, value, history = bcd_inner_loop(
        np.zeros(2), np.full(2, 0.5), params, channels, SolverConfig())
    assert np.all(owner == -1)
    assert np.all(rho == 1.0)
    assert value == pytest.approx(0.4 * float(np.sum(channels.user_gains)))


def test_bcd_lagrangian_monotone():
    for seed in range(10, 16):
        params, channels = make_instance(2, 5, seed=seed, targets=0.8)
        mu = np.random.default_rng(seed).exponential(1.0, 2)
        _, _, _, history = bcd_inner_loop(mu, np.full(2, 0.5), params,
                                          channels, SolverConfig())
        for a, b in zip(history, history[1:]):
            assert b >= a - 1e-10 * max(abs(a), abs(b))


def test_bcd_multi_start_self_consistency():
    params, channels = make_instance(2, 3, seed=16, targets=0.6)
    mu = np.array([0.9, 1.4])
    rng = np.random.default_rng(0)
    finals = []
    for _ in range(5):
        init = rng.random(2)
        _, _, value, _ = bcd_inner_loop(mu, init, params, channels,
                                        SolverConfig())
        finals.append(value)
    spread = max(finals) - min(finals)
    assert spread <= 1e-6 * max(abs(v) for v in finals)


def test_solve_zero_targets_harvests_everything():
    params, channels = make_instance(2, 4, seed=17)
    sol = solve_iterative(params, channels)
    assert sol.feasible
    assert sol.harvested_total_w == pytest.approx(
        0.4 * float(np.sum(channels.user_gains)), rel=1e-12)
    assert np.all(sol.splits.values == 1.0)


def test_solve_single_link_hits_constraint_boundary():
    # one user, one subcarrier: the optimum is the split that meets the
    # target exactly; closed-form inversion of the rate gives the boundary
    params = SystemParams(num_users=1, num_subcarriers=1, total_power_w=1.0,
                          noise_power_w=1.0, conversion_efficiency=0.4,
                          secrecy_targets=np.array([0.5]))
    channels = ChannelRealization(user_gains=[[3.0]], eve_gains=[1.0])
    sol = solve_iterative(params, channels)
    assert sol.feasible
    boundary = 1 - (2 ** 1.5 - 1) / 3  # rate(rho)=0.5 inverted
    assert sol.splits.values[0] == pytest.approx(boundary, abs=1e-5)
    assert sol.secrecy_rates[0] >= 0.5
    assert sol.secrecy_rates[0] - 0.5 <= 1e-6 * 0.5


def test_solve_matches_oracle_on_seeded_instances():
    config = SolverConfig(max_dual_iters=150)
    hits = 0
    for seed in range(60, 70):
        params, channels = unit_instance(2, 4, seed, 1.0)
        sol = solve_iterative(params, channels, config)
        oracle = brute_force_common_split(params, channels, config)
        if sol.feasible:
            hits += 1
            assert oracle.feasible
            assert sol.harvested_total_w <= oracle.harvested_total_w + 1e-6
    assert hits >= 3


def test_solution_passes_feasibility_check():
    for seed in range(70, 76):
        params, channels = unit_instance(2, 4, seed, 0.8)
        sol = solve_iterative(params, channels)
        if sol.feasible:
            ok, _ = check_feasibility(params, channels, sol.assignment,
                                      sol.splits)
            assert ok


def test_unreachable_targets_reported_infeasible():
    params, channels = make_instance(2, 2, seed=20, targets=60.0)
    sol = solve_iterative(params, channels)
    assert not sol.feasible
    assert "unreachable" in sol.diagnostics


def test_trace_weak_duality_and_best_primal_monotone():
    from swiptsec.verification import verify_traces

    params, channels = unit_instance(2, 4, 80, 1.0)
    sol = solve_iterative(params, channels)
    assert verify_traces(sol) == []
    primals = [r.best_primal for r in sol.trace
               if not math.isnan(r.best_primal)]
    assert all(b >= a for a, b in zip(primals, primals[1:]))
