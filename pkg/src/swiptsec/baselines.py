"""Benchmark schemes: fixed power splitting and fixed subcarrier assignment.

FPS pins every split ratio at one half and only adapts the assignment (via
the same dual loop the alternating solver uses for its assignment block), so
its harvest is a constant and the dual search is purely a feasibility hunt.
A deterministic deficit-greedy assignment is tried when the dual search comes
up empty, which keeps the scheme's feasibility region stable across nearby
targets.

FSA draws the assignment uniformly at random (every subcarrier assigned) and
only optimizes the splits, by the same boundary bisection the step-wise
solver uses.
"""

from __future__ import annotations

import math

import numpy as np

from . import dual
from .core import (
    Assignment,
    ChannelRealization,
    Solution,
    SolverConfig,
    SplitProfile,
    SystemParams,
    TraceRow,
    harvested_power_total,
    info_receiver_power,
)
from .iterative import _assign_owner, _owner_rates, lagrangian_value
from .rates import clamped_rate_matrix, eve_rate_vector
from .splitsearch import (
    assigned_rates_for_splits,
    greedy_assignment,
    max_feasible_common_splits,
)


def solve_fps(params: SystemParams, channels: ChannelRealization,
              config: SolverConfig | None = None) -> Solution:
    config = config or SolverConfig()
    eve_rates = eve_rate_vector(params, channels)
    targets = params.secrecy_targets
    k = params.num_users
    rho = np.full(k, 0.5)
    splits = SplitProfile.per_user(rho)
    harvested = harvested_power_total(params, channels, splits)
    rate_half = clamped_rate_matrix(params.subcarrier_power_w,
                                    params.noise_power_w, channels.user_gains,
                                    eve_rates, rho[:, None])

    def build(owner, rates, feasible, trace, dual_values, message=""):
        return Solution(
            assignment=Assignment.from_owner(owner, k), splits=splits,
            harvested_total_w=harvested,
            info_power_w=info_receiver_power(params, channels, splits),
            secrecy_rates=rates, feasible=feasible, dual_values=dual_values,
            trace=trace, diagnostics=message)

    if np.any(rate_half.sum(axis=1) < targets):
        short = np.nonzero(rate_half.sum(axis=1) < targets)[0]
        return build(np.full(params.num_subcarriers, -1), np.zeros(k), False,
                     [], np.zeros(k),
                     f"targets unreachable at a half split for users "
                     f"{short.tolist()}")

    step = dual.effective_step_gain(
        config, dual.common_split_multiplier_scale(params, channels), targets)
    state = dual.DualState(np.zeros(k), step_gain=step,
                           schedule=config.step_schedule)
    trace: list[TraceRow] = []
    while True:
        mu = state.multipliers
        owner = _assign_owner(mu, rho, params, channels, eve_rates)
        rates = _owner_rates(owner, rho, params, channels, eve_rates)
        if np.all(rates >= targets):
            dual.consider(state, dual.Snapshot(harvested, owner.copy(),
                                               splits, rates))
        best = state.best_feasible
        trace.append(TraceRow(
            iteration=state.iteration + 1,
            dual_objective=lagrangian_value(mu, owner, rho, params, channels,
                                            eve_rates),
            best_primal=best.harvested_w if best else math.nan,
            max_violation=float(np.max(targets - rates))))
        prev = state.multipliers.copy()
        state = dual.subgradient_step(state, targets - rates)
        if dual.converged(state, prev, config):
            break

    if state.best_feasible is None:
        owner = greedy_assignment(targets, rate_half)
        if owner is not None:
            rates = _owner_rates(owner, rho, params, channels, eve_rates)
            if np.all(rates >= targets):
                dual.consider(state, dual.Snapshot(harvested, owner, splits,
                                                   rates))

    if state.best_feasible is None:
        return build(np.full(params.num_subcarriers, -1), np.zeros(k), False,
                     trace, state.multipliers,
                     "no feasible assignment found at a half split")
    snap = state.best_feasible
    return build(snap.owner, snap.rates, True, trace, state.multipliers)


def solve_fsa(params: SystemParams, channels: ChannelRealization, seed: int,
              config: SolverConfig | None = None) -> Solution:
    """Uniform random assignment (seeded), then boundary splits per user."""
    config = config or SolverConfig()
    eve_rates = eve_rate_vector(params, channels)
    rng = np.random.default_rng(seed)
    owner = rng.integers(0, params.num_users, size=params.num_subcarriers)
    assignment = Assignment.from_owner(owner, params.num_users)
    rho, ok = max_feasible_common_splits(
        params.secrecy_targets, assignment.x, params.subcarrier_power_w,
        params.noise_power_w, channels.user_gains, eve_rates, config)
    splits = SplitProfile.per_user(rho)
    rates = assigned_rates_for_splits(assignment.x, rho,
                                      params.subcarrier_power_w,
                                      params.noise_power_w,
                                      channels.user_gains, eve_rates)
    feasible = bool(np.all(ok))
    message = "" if feasible else (
        f"users {np.nonzero(~ok)[0].tolist()} cannot meet their target on "
        f"the drawn assignment")
    return Solution(
        assignment=assignment, splits=splits,
        harvested_total_w=harvested_power_total(params, channels, splits),
        info_power_w=info_receiver_power(params, channels, splits),
        secrecy_rates=rates, feasible=feasible,
        dual_values=np.zeros(params.num_users), diagnostics=message)
