"""Exhaustive small-instance references for the solvers.

Both oracles enumerate every subcarrier assignment (each subcarrier goes to
one user or stays unassigned) and solve the per-assignment split problem
exactly, so they are correct up to bisection precision, which is driven to
the width of a double:

* common splits: for a fixed assignment the problem separates per user, the
  harvest is increasing in the ratio and the rate non-increasing, so the
  optimum is the largest ratio meeting the target, found by bisection kept on
  the feasible side;
* per-subcarrier splits: per user, any subcarrier whose rate term would be
  clamped to zero harvests fully, so the optimum picks an active subset of
  its assigned subcarriers and solves a concave program on it; active subsets
  are enumerated outright (exact for up to 14 eligible subcarriers per user,
  a single two-branch dual bisection beyond) and the subset program is solved
  by bisection on its scalar multiplier.

Work per user and assigned set is cached, so the enumeration cost is the
assignment count itself, guarded at (K+1)^N <= 1e6.  Results are
deterministic: assignments are scanned in lexicographic order (user 0 first,
unassigned last) and only strict improvements are kept.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import (
    Assignment,
    ChannelRealization,
    Solution,
    SolverConfig,
    SplitProfile,
    SystemParams,
    ValidationError,
    harvested_power_total,
    info_receiver_power,
)
from .rates import eve_rate_vector

_EXACT_SUBSET_CAP = 14


def _guard(params: SystemParams) -> None:
    if (params.num_users + 1) ** params.num_subcarriers > 1_000_000:
        raise ValidationError(
            "instance too large for exhaustive enumeration: need "
            "(K+1)^N <= 1e6")


def _assignment_masks(choice: tuple, num_users: int) -> list[int]:
    masks = [0] * num_users
    for n, c in enumerate(choice):
        if c < num_users:
            masks[c] |= 1 << n
    return masks


def _mask_cols(mask: int, n: int) -> np.ndarray:
    return np.array([j for j in range(n) if mask >> j & 1], dtype=int)


def brute_force_common_split(params: SystemParams,
                             channels: ChannelRealization,
                             config: SolverConfig | None = None) -> Solution:
    """Exact optimum of the common-split problem by full enumeration."""
    _guard(params)
    config = config or SolverConfig()
    eve_rates = eve_rate_vector(params, channels)
    p = params.subcarrier_power_w
    noise = params.noise_power_w
    h = channels.user_gains
    zeta = params.conversion_efficiency
    targets = params.secrecy_targets
    k_users, n_sub = params.num_users, params.num_subcarriers
    received = p * h.sum(axis=1)

    cache: dict[tuple[int, int], float | None] = {}

    def best_split(k: int, mask: int):
        key = (k, mask)
        if key not in cache:
            cols = _mask_cols(mask, n_sub)
            cache[key] = _boundary_split(targets[k], p * h[k, cols],
                                         eve_rates[cols], noise)
        return cache[key]

    best_value = -math.inf
    best_choice = None
    best_rho = None
    for choice in itertools.product(range(k_users + 1), repeat=n_sub):
        masks = _assignment_masks(choice, k_users)
        rho = np.empty(k_users)
        ok = True
        for k in range(k_users):
            r = best_split(k, masks[k])
            if r is None:
                ok = False
                break
            rho[k] = r
        if not ok:
            continue
        value = zeta * float(np.dot(rho, received))
        if value > best_value:
            best_value = value
            best_choice = choice
            best_rho = rho.copy()

    if best_choice is None:
        return _infeasible(params, "no assignment admits feasible splits")
    owner = np.array([c if c < k_users else -1 for c in best_choice])
    return _build(params, channels, owner,
                  SplitProfile.per_user(best_rho), eve_rates)


def _boundary_split(target: float, ph: np.ndarray, eve: np.ndarray,
                    noise: float):
    """Largest common split with rate >= target; None if unreachable.

    Bisection keeps the feasible lower end and halves to double-precision
    width, so the result undershoots the true boundary by a negligible
    amount and never violates the target.
    """
    if target == 0.0:
        return 1.0

    def rate(rho: float) -> float:
        if ph.size == 0:
            return 0.0
        return float(np.sum(np.maximum(
            0.0, np.log2(1.0 + (1.0 - rho) * ph / noise) - eve)))

    r0 = rate(0.0)
    if r0 < target:
        return None
    if r0 == target:
        return 0.0
    lo, hi = 0.0, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if rate(mid) >= target:
            lo = mid
        else:
            hi = mid
    return lo


def brute_force_per_subcarrier_split(params: SystemParams,
                                     channels: ChannelRealization,
                                     config: SolverConfig | None = None
                                     ) -> Solution:
    """Exact optimum of the per-subcarrier relaxation by full enumeration."""
    _guard(params)
    config = config or SolverConfig()
    eve_rates = eve_rate_vector(params, channels)
    p = params.subcarrier_power_w
    noise = params.noise_power_w
    h = channels.user_gains
    zeta = params.conversion_efficiency
    targets = params.secrecy_targets
    k_users, n_sub = params.num_users, params.num_subcarriers
    rate_zero = np.maximum(0.0, np.log2(1.0 + p * h / noise) - eve_rates)

    cache: dict[tuple[int, int], tuple | None] = {}

    def user_optimum(k: int, mask: int):
        key = (k, mask)
        if key not in cache:
            cache[key] = _per_subcarrier_user_optimum(
                targets[k], _mask_cols(mask, n_sub), p, noise, h[k],
                eve_rates, rate_zero[k], zeta)
        return cache[key]

    best_value = -math.inf
    best_choice = None
    best_profiles = None
    for choice in itertools.product(range(k_users + 1), repeat=n_sub):
        masks = _assignment_masks(choice, k_users)
        value = 0.0
        profiles = []
        ok = True
        for k in range(k_users):
            res = user_optimum(k, masks[k])
            if res is None:
                ok = False
                break
            harvest_k, cols, rho_cols = res
            value += harvest_k
            profiles.append((cols, rho_cols))
        if not ok:
            continue
        if value > best_value:
            best_value = value
            best_choice = choice
            best_profiles = profiles

    if best_choice is None:
        return _infeasible(params, "no assignment admits feasible splits")
    owner = np.array([c if c < k_users else -1 for c in best_choice])
    rho_mat = np.ones((k_users, n_sub))
    for k, (cols, rho_cols) in enumerate(best_profiles):
        rho_mat[k, cols] = rho_cols
    return _build(params, channels, owner,
                  SplitProfile.per_subcarrier(rho_mat), eve_rates)


def _per_subcarrier_user_optimum(target, cols, p, noise, h_row, eve_rates,
                                 rate_zero_row, zeta):
    """Max harvest for one user on assigned columns, per-subcarrier splits.

    Returns ``(harvest, cols, rho_on_cols)`` or None when infeasible; the
    harvest already includes full harvesting on all other subcarriers.
    """
    full_harvest = zeta * p * float(h_row.sum())
    if target == 0.0:
        return full_harvest, cols, np.ones(cols.size)
    elig = cols[rate_zero_row[cols] > 0.0]
    if float(rate_zero_row[elig].sum()) < target:
        return None

    ph = p * h_row
    if elig.size > _EXACT_SUBSET_CAP:
        loss, rho_elig = _two_branch_bisect(target, ph[elig], eve_rates[elig],
                                            noise, zeta)
        rho_cols = np.ones(cols.size)
        rho_cols[np.isin(cols, elig)] = rho_elig
        return full_harvest - loss, cols, rho_cols

    best = None
    elig_list = list(elig)
    for r in range(1, len(elig_list) + 1):
        for subset in itertools.combinations(elig_list, r):
            a = np.array(subset, dtype=int)
            if float(rate_zero_row[a].sum()) < target:
                continue
            loss, rho_a = _active_set_bisect(target, ph[a], eve_rates[a],
                                             noise, zeta)
            if best is None or loss < best[0]:
                best = (loss, a, rho_a)
    if best is None:
        return None
    loss, a, rho_a = best
    rho_cols = np.ones(cols.size)
    rho_cols[np.isin(cols, a)] = rho_a
    return full_harvest - loss, cols, rho_cols


def _active_set_bisect(target, ph, eve, noise, zeta):
    """Tight splits on a fixed active set via its scalar dual multiplier.

    Within the set each split stays below the level where the rate term
    would clamp, so the rate is continuous and increasing in the multiplier;
    bisection lands on the smallest multiplier meeting the target.  Returns
    (harvest loss vs. full harvesting, splits).
    """
    ln2 = math.log(2.0)
    cap = np.minimum(1.0, 1.0 - (np.exp2(eve) - 1.0) * noise / ph)

    def splits(nu: float) -> np.ndarray:
        return np.clip(1.0 - nu / (zeta * ln2 * ph) + noise / ph, 0.0, cap)

    def rate(nu: float) -> float:
        rho = splits(nu)
        return float(np.sum(np.log2(1.0 + (1.0 - rho) * ph / noise) - eve))

    hi = 1.01 * float(np.max(zeta * ln2 * (ph + noise)))
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if rate(mid) >= target:
            hi = mid
        else:
            lo = mid
    rho = splits(hi)
    loss = zeta * float(np.sum((1.0 - rho) * ph))
    return loss, rho


def _two_branch_bisect(target, ph, eve, noise, zeta):
    """Single-multiplier approximation used past the exact-subset cap.

    Per subcarrier the better of the clamped stationary split and full
    harvesting is taken; the rate is then non-decreasing in the multiplier
    but can jump, so the result may be slightly conservative at branch
    flips.
    """
    ln2 = math.log(2.0)
    cap = np.minimum(1.0, 1.0 - (np.exp2(eve) - 1.0) * noise / ph)

    def evaluate(nu: float):
        rho_int = np.clip(1.0 - nu / (zeta * ln2 * ph) + noise / ph, 0.0, cap)
        seg_rate = np.log2(1.0 + (1.0 - rho_int) * ph / noise) - eve
        f_int = zeta * ph * rho_int + nu * seg_rate
        interior = f_int >= zeta * ph
        rho = np.where(interior, rho_int, 1.0)
        rate = float(np.sum(np.where(interior, seg_rate, 0.0)))
        return rho, rate

    hi = 1.01 * float(np.max(zeta * ln2 * (ph + noise)))
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        _, r = evaluate(mid)
        if r >= target:
            hi = mid
        else:
            lo = mid
    rho, _ = evaluate(hi)
    loss = zeta * float(np.sum((1.0 - rho) * ph))
    return loss, rho


def _build(params, channels, owner, splits, eve_rates) -> Solution:
    from .rates import per_user_rates

    assignment = Assignment.from_owner(owner, params.num_users)
    rates = per_user_rates(params, channels, assignment, splits, eve_rates)
    return Solution(
        assignment=assignment, splits=splits,
        harvested_total_w=harvested_power_total(params, channels, splits),
        info_power_w=info_receiver_power(params, channels, splits),
        secrecy_rates=rates, feasible=True,
        dual_values=np.zeros(params.num_users))


def _infeasible(params: SystemParams, message: str) -> Solution:
    k, n = params.num_users, params.num_subcarriers
    return Solution(
        assignment=Assignment(np.zeros((k, n), dtype=np.int8)),
        splits=SplitProfile.per_user(np.zeros(k)),
        harvested_total_w=0.0, info_power_w=0.0, secrecy_rates=np.zeros(k),
        feasible=False, dual_values=np.zeros(k), diagnostics=message)
