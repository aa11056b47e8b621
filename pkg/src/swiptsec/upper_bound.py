"""Dual solver for the per-subcarrier split relaxation.

Letting every user split independently on every subcarrier decouples the
problem per subcarrier for fixed multipliers: splits follow a closed-form
rule, the assignment is a per-subcarrier argmax, and the multipliers take
projected subgradient steps.  The resulting objective upper-bounds every
common-split solution, and its assignment seeds the step-wise solver.

The closed-form split rule is implemented exactly as published.  It is not
the exact stationary point of the per-subcarrier Lagrangian term (the tests
document the gap against a golden-section maximizer), so the dual bound
recorded in the trace is computed separately by exact per-term maximization;
that keeps weak duality intact regardless of the rule driving the iterates.

Feasible operating points are recovered at every iteration: the iterate
itself when it already meets all targets, otherwise a per-user repair that
re-tightens the closed-form rule with a private multiplier.  A final
candidate maps the best assignment's boundary common splits to per-subcarrier
form, which dominates the step-wise solution on the same assignment by
construction.
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
)
from .rates import clamped_rate_matrix, eve_rate_vector, max_possible_rates
from .splitsearch import max_feasible_common_splits, restoration_assignments


def split_matrix(multipliers: np.ndarray, params: SystemParams,
                 channels: ChannelRealization,
                 eve_rates: np.ndarray) -> np.ndarray:
    """Closed-form per-(user, subcarrier) splits for given multipliers.

    Two-case rule: the clamped closed form applies where it leaves the user
    rate at or above the eavesdropper rate, otherwise the subcarrier goes to
    pure harvesting (ratio 1).
    """
    p = params.subcarrier_power_w
    h = channels.user_gains
    s2 = params.noise_power_w
    ln2 = math.log(2.0)
    zeta = params.conversion_efficiency
    col_sums = h.sum(axis=0)[None, :]
    rho_dot = (1.0
               - np.asarray(multipliers)[:, None] * h / (zeta * ln2 * p * col_sums)
               + s2 / (ln2 * h * p))
    rho_dot = np.clip(rho_dot, 0.0, 1.0)
    user_rate = np.log2(1.0 + (1.0 - rho_dot) * p * h / s2)
    return np.where(user_rate >= eve_rates[None, :], rho_dot, 1.0)


def optimal_split_ub(k: int, n: int, multiplier_k: float,
                     channels: ChannelRealization, params: SystemParams,
                     eve_rates: np.ndarray | None = None) -> float:
    """Scalar view of :func:`split_matrix` for user ``k``, subcarrier ``n``."""
    if multiplier_k < 0:
        raise ValueError("multiplier must be non-negative")
    if eve_rates is None:
        eve_rates = eve_rate_vector(params, channels)
    lam = np.zeros(params.num_users)
    lam[k] = multiplier_k
    return float(split_matrix(lam, params, channels, eve_rates)[k, n])


def assign_subcarriers_ub(multipliers: np.ndarray, rho: np.ndarray,
                          params: SystemParams,
                          channels: ChannelRealization,
                          eve_rates: np.ndarray) -> Assignment:
    """Per-subcarrier argmax of harvest-plus-weighted-rate; ties to the
    lowest user index.  Every subcarrier is assigned."""
    owner = _assign_owner(multipliers, rho, params, channels, eve_rates)
    return Assignment.from_owner(owner, params.num_users)


def _assign_owner(multipliers, rho, params, channels, eve_rates) -> np.ndarray:
    p = params.subcarrier_power_w
    rates = clamped_rate_matrix(p, params.noise_power_w, channels.user_gains,
                                eve_rates, rho)
    harvest_col = (params.conversion_efficiency * p
                   * np.sum(rho * channels.user_gains, axis=0))
    scores = harvest_col[None, :] + np.asarray(multipliers)[:, None] * rates
    return np.argmax(scores, axis=0)


def dual_value_exact(multipliers: np.ndarray, params: SystemParams,
                     channels: ChannelRealization,
                     eve_rates: np.ndarray) -> float:
    """True dual function value: exact maximization of every subcarrier term.

    Per (user, subcarrier) the term is piecewise concave in the split; the
    maximum is the better of the all-harvest corner and the clamped true
    stationary point on the positive-rate segment.  Per subcarrier the best
    user (or leaving it unassigned) is picked exactly.
    """
    p = params.subcarrier_power_w
    h = channels.user_gains
    s2 = params.noise_power_w
    ln2 = math.log(2.0)
    zeta = params.conversion_efficiency
    lam = np.asarray(multipliers, dtype=float)

    base = zeta * p * h  # value of the all-harvest corner
    rho_cap = 1.0 - (np.exp2(eve_rates)[None, :] - 1.0) * s2 / (p * h)
    has_segment = rho_cap > 0.0
    rho_cap_clipped = np.clip(rho_cap, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        rho_stat = 1.0 - lam[:, None] / (zeta * ln2 * p * h) + s2 / (p * h)
    rho_star = np.clip(rho_stat, 0.0, rho_cap_clipped)
    seg_rate = np.log2(1.0 + (1.0 - rho_star) * p * h / s2) - eve_rates[None, :]
    seg_value = zeta * p * h * rho_star + lam[:, None] * seg_rate
    best_term = np.where(has_segment, np.maximum(base, seg_value), base)

    col_base = zeta * p * h.sum(axis=0)
    candidates = col_base[None, :] - base + best_term
    per_subcarrier = np.maximum(col_base, candidates.max(axis=0))
    return float(per_subcarrier.sum() - np.dot(lam, params.secrecy_targets))


def _exact_recovery(x: np.ndarray, params: SystemParams,
                    channels: ChannelRealization, eve_rates: np.ndarray,
                    config: SolverConfig):
    """Per-user optimal per-subcarrier splits for a fixed assignment.

    For one user the problem (maximize harvest over its assigned subcarriers
    subject to its rate target) is concave once splits are capped at the
    level where the rate term would clamp; bisecting the user's private
    multiplier in the true stationarity rule lands on the tight constraint.
    Splits that end exactly at their cap contribute no rate and are lifted
    to full harvesting.  All users are bisected at once.

    Returns ``(rho_matrix, ok)``; users whose target is unreachable on their
    assigned set have ``ok`` False.
    """
    p = params.subcarrier_power_w
    h = channels.user_gains
    s2 = params.noise_power_w
    ln2 = math.log(2.0)
    zeta = params.conversion_efficiency
    targets = params.secrecy_targets
    k = params.num_users

    rate_zero = clamped_rate_matrix(p, s2, h, eve_rates,
                                    np.zeros((k, 1)))
    eligible = (x > 0) & (rate_zero > 0.0)
    caps = np.clip(1.0 - (np.exp2(eve_rates)[None, :] - 1.0) * s2 / (p * h),
                   0.0, 1.0)
    ok = rate_zero.sum(axis=1, where=eligible) >= targets

    def splits_for(nu: np.ndarray) -> np.ndarray:
        rho = np.clip(1.0 - nu[:, None] / (zeta * ln2 * p * h) + s2 / (p * h),
                      0.0, caps)
        return np.where(eligible, rho, 1.0)

    def rates_for(nu: np.ndarray) -> np.ndarray:
        rho = splits_for(nu)
        rate = np.log2(1.0 + (1.0 - rho) * p * h / s2) - eve_rates[None, :]
        return rate.sum(axis=1, where=eligible)

    hi = 1.01 * np.max(np.where(eligible, zeta * ln2 * (p * h + s2), 0.0),
                       axis=1)
    hi = np.maximum(hi, 1.0)
    lo = np.zeros(k)
    rate_hi = rates_for(hi)
    active = ok & (targets > 0)
    tol = config.bisect_tol * targets
    for _ in range(config.max_bisect_iters):
        done = ~active | (rate_hi - targets <= tol)
        if np.all(done):
            break
        mid = 0.5 * (lo + hi)
        rate_mid = rates_for(mid)
        takes = ~done & (rate_mid >= targets)
        hi = np.where(takes, mid, hi)
        rate_hi = np.where(takes, rate_mid, rate_hi)
        lo = np.where(~done & ~takes, mid, lo)
    rho = splits_for(np.where(targets > 0, hi, 0.0))
    idle = eligible & (rho >= caps)  # capped entries contribute no rate
    rho = np.where(idle, 1.0, rho)
    return rho, ok


def _per_subcarrier_profile(x: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Iterate splits on assigned entries, full harvesting elsewhere."""
    return np.where(x > 0, rho, 1.0)


def solve_upper_bound(params: SystemParams, channels: ChannelRealization,
                      config: SolverConfig | None = None) -> Solution:
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
        return _infeasible(params, f"targets unreachable even with every "
                           f"subcarrier at a zero split for users "
                           f"{short.tolist()}")

    step = dual.effective_step_gain(
        config, dual.per_subcarrier_multiplier_scale(params, channels),
        targets)
    state = dual.DualState(np.zeros(params.num_users), step_gain=step,
                           schedule=config.step_schedule)
    trace: list[TraceRow] = []
    owner = np.zeros(params.num_subcarriers, dtype=int)

    def common_split_candidate(owner_vec):
        # Boundary common splits on a fixed assignment, mapped to
        # per-subcarrier form (full harvesting wherever the rate term is
        # clamped or the subcarrier is unassigned).  Dominates the step-wise
        # value on the same assignment; that underlying step-wise value is
        # returned alongside for ranking assignments by downstream worth.
        x_c = Assignment.from_owner(owner_vec, params.num_users).x
        rho_common, ok = max_feasible_common_splits(
            targets, x_c, p, noise, gains, eve_rates, config)
        if not np.all(ok):
            return None, -math.inf
        rates_common = clamped_rate_matrix(p, noise, gains, eve_rates,
                                           rho_common[:, None])
        contributes = (x_c > 0) & (rates_common > 0.0)
        profile = np.where(contributes,
                           rho_common[:, None] * np.ones_like(gains), 1.0)
        snapshot = dual.Snapshot(
            zeta * p * float(np.sum(profile * gains)),
            np.array(owner_vec), SplitProfile.per_subcarrier(profile),
            np.sum(x_c * rates_common, axis=1))
        stepwise_value = zeta * p * float(
            np.dot(rho_common, gains.sum(axis=1)))
        return snapshot, stepwise_value

    def recovery_candidate(owner_vec):
        x_c = Assignment.from_owner(owner_vec, params.num_users).x
        rho_rec, ok = _exact_recovery(x_c, params, channels, eve_rates,
                                      config)
        if not np.all(ok):
            return None
        rec_rates = np.sum(x_c * clamped_rate_matrix(p, noise, gains,
                                                     eve_rates, rho_rec),
                           axis=1)
        if not np.all(rec_rates >= targets):
            return None
        profile = _per_subcarrier_profile(x_c, rho_rec)
        return dual.Snapshot(zeta * p * float(np.sum(profile * gains)),
                             np.array(owner_vec),
                             SplitProfile.per_subcarrier(profile), rec_rates)

    seen_owners: dict[bytes, np.ndarray] = {}

    def remember(owner_vec):
        key = np.asarray(owner_vec, dtype=np.int64).tobytes()
        if key not in seen_owners:
            seen_owners[key] = np.array(owner_vec, dtype=int)

    # Deterministic feasibility restoration, as in the common-split solver.
    rate_zero = clamped_rate_matrix(p, noise, gains, eve_rates,
                                    np.zeros((params.num_users, 1)))
    for owner_r in restoration_assignments(targets, rate_zero, gains):
        remember(owner_r)
        for candidate in (recovery_candidate(owner_r),
                          common_split_candidate(owner_r)[0]):
            if candidate is not None:
                dual.consider(state, candidate)

    while True:
        lam = state.multipliers
        rho = split_matrix(lam, params, channels, eve_rates)
        owner = _assign_owner(lam, rho, params, channels, eve_rates)
        remember(owner)
        x = Assignment.from_owner(owner, params.num_users).x
        rates_mat = clamped_rate_matrix(p, noise, gains, eve_rates, rho)
        user_rates = np.sum(x * rates_mat, axis=1)

        if np.all(user_rates >= targets):
            profile = _per_subcarrier_profile(x, rho)
            dual.consider(state, dual.Snapshot(
                zeta * p * float(np.sum(profile * gains)), owner.copy(),
                SplitProfile.per_subcarrier(profile), user_rates))
        candidate = recovery_candidate(owner)
        if candidate is not None:
            dual.consider(state, candidate)
        else:
            fallback = common_split_candidate(owner)[0]
            if fallback is not None:
                dual.consider(state, fallback)

        best = state.best_feasible
        trace.append(TraceRow(
            iteration=state.iteration + 1,
            dual_objective=dual_value_exact(lam, params, channels, eve_rates),
            best_primal=best.harvested_w if best else math.nan,
            max_violation=float(np.max(targets - user_rates)),
        ))
        prev = state.multipliers.copy()
        state = dual.subgradient_step(state, targets - user_rates)
        if dual.converged(state, prev, config):
            break

    # Crown the assignment whose boundary COMMON splits harvest the most over
    # every assignment encountered.  The step-wise solver inherits this
    # assignment, so its value becomes a maximum of per-assignment monotone
    # curves; the returned per-subcarrier point keeps its recovery slack on
    # top of that (any per-subcarrier-feasible assignment also admits
    # feasible common splits, so this search cannot miss feasibility).
    best_common = None
    best_value = -math.inf
    for owner_vec in seen_owners.values():
        candidate, stepwise_value = common_split_candidate(owner_vec)
        if candidate is not None and stepwise_value > best_value:
            best_common = candidate
            best_value = stepwise_value

    if best_common is None:
        sol = _infeasible(params, "no feasible operating point found by the "
                          "dual search")
        sol.assignment = Assignment.from_owner(owner, params.num_users)
        sol.trace = trace
        sol.dual_values = state.multipliers
        return sol

    final = recovery_candidate(best_common.owner)
    if final is None or final.harvested_w < best_common.harvested_w:
        final = best_common

    from .core import harvested_power_total, info_receiver_power

    assignment = Assignment.from_owner(final.owner, params.num_users)
    return Solution(
        assignment=assignment, splits=final.splits,
        harvested_total_w=harvested_power_total(params, channels,
                                                final.splits),
        info_power_w=info_receiver_power(params, channels, final.splits),
        secrecy_rates=final.rates, feasible=True,
        dual_values=state.multipliers, trace=trace)


def _infeasible(params: SystemParams, message: str) -> Solution:
    k, n = params.num_users, params.num_subcarriers
    return Solution(
        assignment=Assignment(np.zeros((k, n), dtype=np.int8)),
        splits=SplitProfile.per_subcarrier(np.ones((k, n))),
        harvested_total_w=0.0, info_power_w=0.0, secrecy_rates=np.zeros(k),
        feasible=False, dual_values=np.zeros(k), diagnostics=message)
