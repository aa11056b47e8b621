"""Alternating (block-coordinate) solver for the common-split problem.

For fixed multipliers the Lagrangian is maximized by alternating two exact
block updates: the assignment block is a per-subcarrier argmax, and each
user's split ratio is a 1-D concave maximization solved by bisection on the
derivative.  The multipliers are then moved by projected subgradient steps.

The best feasible operating point seen across all iterations is returned,
after a final per-user polish that pushes each split ratio out to the
constraint boundary for the chosen assignment (a pure improvement: the rate is
non-increasing in the ratio, so the boundary ratio maximizes harvest).
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
    SplitMode,
    SplitProfile,
    SystemParams,
    TraceRow,
)
from .rates import clamped_rate_matrix, eve_rate_vector, max_possible_rates
from .splitsearch import max_feasible_common_splits, restoration_assignments


def lagrangian_value(multipliers: np.ndarray, owner: np.ndarray,
                     rho: np.ndarray, params: SystemParams,
                     channels: ChannelRealization,
                     eve_rates: np.ndarray) -> float:
    """Relaxed objective: harvest plus multiplier-weighted rate slacks."""
    p = params.subcarrier_power_w
    harvest = params.conversion_efficiency * p * float(
        np.sum(rho[:, None] * channels.user_gains))
    rates = _owner_rates(owner, rho, params, channels, eve_rates)
    slack = rates - params.secrecy_targets
    return harvest + float(np.dot(multipliers, slack))


def _owner_rates(owner: np.ndarray, rho: np.ndarray, params: SystemParams,
                 channels: ChannelRealization,
                 eve_rates: np.ndarray) -> np.ndarray:
    rates = clamped_rate_matrix(params.subcarrier_power_w,
                                params.noise_power_w, channels.user_gains,
                                eve_rates, rho[:, None])
    out = np.zeros(params.num_users)
    assigned = owner >= 0
    np.add.at(out, owner[assigned], rates[owner[assigned],
                                          np.nonzero(assigned)[0]])
    return out


def assign_given_split(multipliers: np.ndarray, rho: np.ndarray,
                       params: SystemParams, channels: ChannelRealization,
                       eve_rates: np.ndarray | None = None) -> Assignment:
    """Per-subcarrier argmax of the Lagrangian for fixed splits.

    The harvest part of each subcarrier's term is the same whichever user is
    picked, so the choice reduces to the largest multiplier-weighted secrecy
    rate.  Ties go to the lowest user index; a subcarrier whose best weighted
    rate is zero is left unassigned and carries power only.
    """
    if eve_rates is None:
        eve_rates = eve_rate_vector(params, channels)
    owner = _assign_owner(multipliers, rho, params, channels, eve_rates)
    return Assignment.from_owner(owner, params.num_users)


def _assign_owner(multipliers, rho, params, channels, eve_rates) -> np.ndarray:
    rates = clamped_rate_matrix(params.subcarrier_power_w,
                                params.noise_power_w, channels.user_gains,
                                eve_rates, np.asarray(rho)[:, None])
    scores = np.asarray(multipliers)[:, None] * rates
    best = np.argmax(scores, axis=0)
    owner = np.where(scores[best, np.arange(scores.shape[1])] > 0.0, best, -1)
    return owner


def _split_derivative(rho: np.ndarray, multipliers: np.ndarray,
                      x: np.ndarray, params: SystemParams,
                      channels: ChannelRealization) -> np.ndarray:
    """d/d(rho_k) of each user's Lagrangian block at per-user rho."""
    p = params.subcarrier_power_w
    ph = p * channels.user_gains
    harvest = params.conversion_efficiency * ph.sum(axis=1)
    denom = math.log(2.0) * (ph * (1.0 - rho[:, None]) + params.noise_power_w)
    rate_term = np.sum(x * ph / denom, axis=1)
    return harvest - multipliers * rate_term


def splits_given_assignment(multipliers: np.ndarray, x: np.ndarray,
                            params: SystemParams,
                            channels: ChannelRealization,
                            config: SolverConfig) -> np.ndarray:
    """Optimal per-user splits for a fixed assignment, all users at once.

    The block derivative decreases monotonically in the ratio, so each user's
    stationary point is bisected to |derivative| below ``bisect_tol`` times
    the harvest-gradient scale.  Corner cases: a derivative that stays
    positive (e.g. a zero multiplier or an empty assignment row) gives 1, one
    that starts negative gives 0.
    """
    k = params.num_users
    scale = (params.conversion_efficiency * params.subcarrier_power_w
             * channels.user_gains.sum(axis=1))
    d_at_one = _split_derivative(np.ones(k), multipliers, x, params, channels)
    d_at_zero = _split_derivative(np.zeros(k), multipliers, x, params,
                                  channels)
    rho = np.ones(k)
    rho[d_at_zero < 0.0] = 0.0
    active = (d_at_one <= 0.0) & (d_at_zero >= 0.0)
    if not np.any(active):
        return rho

    lo = np.zeros(k)
    hi = np.ones(k)
    mid = 0.5 * np.ones(k)
    for _ in range(config.max_bisect_iters):
        deriv = _split_derivative(mid, multipliers, x, params, channels)
        done = ~active | (np.abs(deriv) < config.bisect_tol * scale)
        if np.all(done):
            break
        lo = np.where(~done & (deriv > 0), mid, lo)
        hi = np.where(~done & (deriv <= 0), mid, hi)
        mid = np.where(done, mid, 0.5 * (lo + hi))
    rho[active] = mid[active]
    return rho


def split_given_assignment(mu_k: float, x_row: np.ndarray,
                           params: SystemParams,
                           channels: ChannelRealization,
                           config: SolverConfig | None = None,
                           k: int = 0) -> float:
    """Single-user view of :func:`splits_given_assignment` (row ``k``)."""
    config = config or SolverConfig()
    multipliers = np.zeros(params.num_users)
    multipliers[k] = mu_k
    x = np.zeros_like(channels.user_gains, dtype=np.int8)
    x[k] = np.asarray(x_row, dtype=np.int8)
    return float(splits_given_assignment(multipliers, x, params, channels,
                                         config)[k])


def high_snr_split(mu_k: float, x_row: np.ndarray, params: SystemParams,
                   channels: ChannelRealization, k: int = 0) -> float:
    """Asymptotic split for vanishing noise: the information share is the
    multiplier (over conversion efficiency and ln 2) times the assigned
    subcarrier count over the user's total received power."""
    count = float(np.sum(x_row))
    received = params.subcarrier_power_w * float(channels.user_gains[k].sum())
    info_share = mu_k * count / (
        params.conversion_efficiency * math.log(2.0) * received)
    return float(np.clip(1.0 - info_share, 0.0, 1.0))


def bcd_inner_loop(multipliers: np.ndarray, init_rho: np.ndarray,
                   params: SystemParams, channels: ChannelRealization,
                   config: SolverConfig,
                   eve_rates: np.ndarray | None = None):
    """Alternate assignment and split blocks until the Lagrangian settles.

    Returns ``(owner, rho, value, history)`` where history holds the
    Lagrangian after every half step.  Each block update is an exact block
    maximization (the split block keeps the previous ratio when the bisected
    candidate evaluates worse, so the value never decreases).
    """
    if eve_rates is None:
        eve_rates = eve_rate_vector(params, channels)
    rho = np.array(init_rho, dtype=float)
    history: list[float] = []
    prev_value = None
    owner = np.full(params.num_subcarriers, -1)
    for _ in range(config.max_bcd_iters):
        owner = _assign_owner(multipliers, rho, params, channels, eve_rates)
        x = np.zeros_like(channels.user_gains, dtype=np.int8)
        assigned = owner >= 0
        x[owner[assigned], np.nonzero(assigned)[0]] = 1
        history.append(lagrangian_value(multipliers, owner, rho, params,
                                        channels, eve_rates))

        candidate = splits_given_assignment(multipliers, x, params, channels,
                                            config)
        rho = _better_splits(rho, candidate, multipliers, x, params, channels,
                             eve_rates)
        value = lagrangian_value(multipliers, owner, rho, params, channels,
                                 eve_rates)
        history.append(value)
        if prev_value is not None and (
                abs(value - prev_value) <= config.bcd_tol
                * max(abs(value), 1e-300)):
            break
        prev_value = value
    return owner, rho, history[-1], history


def _better_splits(rho_old, rho_new, multipliers, x, params, channels,
                   eve_rates):
    """Per user, keep whichever split gives the larger Lagrangian block."""
    p = params.subcarrier_power_w
    ph = p * channels.user_gains

    def block_values(rho):
        rates = clamped_rate_matrix(p, params.noise_power_w,
                                    channels.user_gains, eve_rates,
                                    rho[:, None])
        harvest = params.conversion_efficiency * rho * ph.sum(axis=1)
        return harvest + multipliers * np.sum(x * rates, axis=1)

    keep_old = block_values(rho_old) > block_values(rho_new)
    return np.where(keep_old, rho_old, rho_new)


def solve_iterative(params: SystemParams, channels: ChannelRealization,
                    config: SolverConfig | None = None) -> Solution:
    """Dual loop around the alternating inner solver; returns the best
    feasible operating point found, boundary-polished per user."""
    config = config or SolverConfig()
    eve_rates = eve_rate_vector(params, channels)
    targets = params.secrecy_targets
    p = params.subcarrier_power_w
    noise = params.noise_power_w
    gains = channels.user_gains
    zeta = params.conversion_efficiency

    ceiling = max_possible_rates(params, channels, eve_rates)
    if np.any(ceiling < targets):
        short = np.nonzero(ceiling < targets)[0]
        return _infeasible_solution(
            params, channels,
            f"targets unreachable even with every subcarrier at a zero "
            f"split for users {short.tolist()}")

    step = dual.effective_step_gain(
        config, dual.common_split_multiplier_scale(params, channels), targets)
    state = dual.DualState(np.zeros(params.num_users), step_gain=step,
                           schedule=config.step_schedule)

    # Deterministic feasibility restoration seeds the feasible pool; the dual
    # iterates only have to beat it, never to rediscover feasibility inside
    # the narrow multiplier bands where balanced assignments live.
    rate_zero = clamped_rate_matrix(p, noise, gains, eve_rates,
                                    np.zeros((params.num_users, 1)))
    for owner_r in restoration_assignments(targets, rate_zero, gains):
        x_r = Assignment.from_owner(owner_r, params.num_users).x
        rho_r, ok_r = max_feasible_common_splits(targets, x_r, p, noise,
                                                 gains, eve_rates, config)
        if np.all(ok_r):
            rates_r = _owner_rates(owner_r, rho_r, params, channels,
                                   eve_rates)
            dual.consider(state, dual.Snapshot(
                zeta * p * float(np.sum(rho_r[:, None] * gains)),
                owner_r, SplitProfile.per_user(rho_r), rates_r))

    trace: list[TraceRow] = []
    bcd_logs: list[list[float]] = []
    # Midpoint restart every iteration: warm-starting from a previous
    # all-harvest iterate (rho = 1) would zero every rate and freeze the
    # assignment block empty forever.
    rho_init = np.full(params.num_users, 0.5)

    while True:
        mu = state.multipliers
        owner, rho, value, history = bcd_inner_loop(mu, rho_init, params,
                                                    channels, config,
                                                    eve_rates)
        bcd_logs.append(history)
        dual_estimate = value

        # Re-evaluating the best feasible point at the current multipliers
        # keeps the reported dual estimate above every primal found so far.
        if state.best_feasible is not None:
            rho_b = state.best_feasible.splits.values
            owner_b = _assign_owner(mu, rho_b, params, channels, eve_rates)
            warm_value = lagrangian_value(mu, owner_b, rho_b, params,
                                          channels, eve_rates)
            if warm_value > dual_estimate:
                dual_estimate = warm_value
                owner, rho, value = owner_b, rho_b, warm_value

        x = Assignment.from_owner(owner, params.num_users).x
        rates = _owner_rates(owner, rho, params, channels, eve_rates)
        if np.all(rates >= targets):
            harvested = zeta * p * float(np.sum(rho[:, None] * gains))
            dual.consider(state, dual.Snapshot(
                harvested, owner.copy(), SplitProfile.per_user(rho), rates))

        rho_pol, ok = max_feasible_common_splits(targets, x, p, noise, gains,
                                                 eve_rates, config)
        if np.all(ok):
            rates_pol = _owner_rates(owner, rho_pol, params, channels,
                                     eve_rates)
            dual_estimate = max(dual_estimate, lagrangian_value(
                mu, owner, rho_pol, params, channels, eve_rates))
            harvested = zeta * p * float(np.sum(rho_pol[:, None] * gains))
            dual.consider(state, dual.Snapshot(
                harvested, owner.copy(), SplitProfile.per_user(rho_pol),
                rates_pol))

        best = state.best_feasible
        trace.append(TraceRow(
            iteration=state.iteration + 1,
            dual_objective=dual_estimate,
            best_primal=best.harvested_w if best else math.nan,
            max_violation=float(np.max(targets - rates)),
        ))
        prev = state.multipliers.copy()
        state = dual.subgradient_step(state, targets - rates)
        if dual.converged(state, prev, config):
            break

    if state.best_feasible is None:
        return _infeasible_solution(
            params, channels, "no feasible operating point found by the "
            "dual search", trace=trace, bcd_logs=bcd_logs,
            dual_values=state.multipliers)
    return _finish(params, channels, state.best_feasible, state.multipliers,
                   trace, bcd_logs)


def _infeasible_solution(params, channels, message, trace=None, bcd_logs=None,
                         dual_values=None) -> Solution:
    k, n = params.num_users, params.num_subcarriers
    assignment = Assignment(np.zeros((k, n), dtype=np.int8))
    splits = SplitProfile.per_user(np.zeros(k))
    return Solution(
        assignment=assignment, splits=splits, harvested_total_w=0.0,
        info_power_w=0.0, secrecy_rates=np.zeros(k), feasible=False,
        dual_values=np.zeros(k) if dual_values is None else dual_values,
        trace=trace or [], bcd_lagrangians=bcd_logs or [],
        diagnostics=message)


def _finish(params, channels, snapshot, dual_values, trace,
            bcd_logs) -> Solution:
    from .core import harvested_power_total, info_receiver_power

    assignment = Assignment.from_owner(snapshot.owner, params.num_users)
    harvested = harvested_power_total(params, channels, snapshot.splits)
    info = info_receiver_power(params, channels, snapshot.splits)
    return Solution(
        assignment=assignment, splits=snapshot.splits,
        harvested_total_w=harvested, info_power_w=info,
        secrecy_rates=snapshot.rates, feasible=True,
        dual_values=np.array(dual_values, dtype=float), trace=trace,
        bcd_lagrangians=bcd_logs)
