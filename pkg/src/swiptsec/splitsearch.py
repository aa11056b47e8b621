"""Boundary search for common (per-user) power-splitting ratios.

For a fixed assignment the per-user secrecy rate is continuous and
non-increasing in the user's split ratio, so the largest ratio that still
meets the target is found by bisection.  The search maintains a bracket whose
lower end always satisfies the target and returns that end, so returned
ratios never violate the constraint; the bracket is also shrunk below the
stopping tolerance so the result sits tight against the boundary.
"""

from __future__ import annotations

import numpy as np

from .core import SolverConfig
from .rates import clamped_rate_matrix


def assigned_rates_for_splits(x: np.ndarray, rho: np.ndarray, p_n: float,
                              noise: float, gains: np.ndarray,
                              eve_rates: np.ndarray) -> np.ndarray:
    """Per-user rate sums over assigned subcarriers for per-user splits."""
    rates = clamped_rate_matrix(p_n, noise, gains, eve_rates, rho[:, None])
    return np.sum(x * rates, axis=1)


def max_feasible_common_splits(targets: np.ndarray, x: np.ndarray, p_n: float,
                               noise: float, gains: np.ndarray,
                               eve_rates: np.ndarray,
                               config: SolverConfig):
    """Largest per-user split meeting each target, for a fixed assignment.

    Returns ``(rho, ok)``: users with ``ok[k]`` False cannot meet their target
    even at a zero split (their rho is set to 0, the best effort).  Users with
    a zero target take rho = 1.  The stopping rule is relative to the target:
    the returned rate overshoot is at most ``bisect_tol * target``.
    """
    targets = np.asarray(targets, dtype=float)
    k = targets.size
    rho = np.ones(k)
    x = np.asarray(x)
    rate_at_zero = assigned_rates_for_splits(x, np.zeros(k), p_n, noise,
                                             gains, eve_rates)
    ok = rate_at_zero >= targets
    active = ok & (targets > 0) & (rate_at_zero > targets)
    rho[~ok] = 0.0
    rho[ok & (targets > 0) & ~active] = 0.0  # target met exactly at zero split

    if not np.any(active):
        return rho, ok

    lo = np.zeros(k)
    hi = np.ones(k)
    rate_lo = rate_at_zero.copy()
    tol = config.bisect_tol * targets
    for _ in range(config.max_bisect_iters):
        done = ~active | ((rate_lo - targets <= tol) & (hi - lo <= tol))
        if np.all(done):
            break
        mid = 0.5 * (lo + hi)
        rate_mid = assigned_rates_for_splits(x, mid, p_n, noise, gains,
                                             eve_rates)
        takes = ~done & (rate_mid >= targets)
        lo = np.where(takes, mid, lo)
        rate_lo = np.where(takes, rate_mid, rate_lo)
        hi = np.where(~done & ~takes, mid, hi)
    rho[active] = lo[active]
    return rho, ok


def greedy_assignment(targets: np.ndarray, rate_matrix: np.ndarray,
                      preference: np.ndarray | None = None):
    """Deficit-greedy feasibility restoration for a fixed rate matrix.

    Repeatedly hands the user with the largest outstanding deficit its
    highest-preference remaining subcarrier (preference defaults to the rate
    itself); deficits shrink by the rate.  Returns an owner vector (length
    N, -1 where unassigned) or None when some deficit cannot be covered.
    Deterministic, so nearby targets produce stable feasibility decisions.
    """
    if preference is None:
        preference = rate_matrix
    deficits = np.array(targets, dtype=float)
    owner = np.full(rate_matrix.shape[1], -1)
    available = np.ones(rate_matrix.shape[1], dtype=bool)
    while np.any(deficits > 0):
        needy = int(np.argmax(deficits))
        usable = available & (rate_matrix[needy] > 0.0)
        scores = np.where(usable, preference[needy], -1.0)
        n = int(np.argmax(scores))
        if scores[n] <= 0.0:
            return None
        owner[n] = needy
        available[n] = False
        deficits[needy] -= rate_matrix[needy, n]
    return owner


def regret_greedy_assignment(targets: np.ndarray, rate_matrix: np.ndarray):
    """Greedy restoration in regret order.

    Subcarriers where the best and second-best user differ most are settled
    first, each going to the deficient user with the highest rate on it.
    Covers cases where a user must forgo its best subcarrier because another
    user has no alternative.
    """
    k, n = rate_matrix.shape
    if k > 1:
        top2 = np.partition(rate_matrix, -2, axis=0)[-2:]
        regret = top2[1] - top2[0]
    else:
        regret = rate_matrix[0]
    deficits = np.array(targets, dtype=float)
    owner = np.full(n, -1)
    for col in np.argsort(-regret, kind="stable"):
        if not np.any(deficits > 0):
            break
        rates = np.where(deficits > 0, rate_matrix[:, col], -1.0)
        best = int(np.argmax(rates))
        if rates[best] > 0.0:
            owner[col] = best
            deficits[best] -= rates[best]
    return owner if not np.any(deficits > 0) else None


def draft_assignment(rate_matrix: np.ndarray):
    """Full round-robin draft: users take turns picking their best remaining
    subcarrier until none carries a positive rate for anyone.

    Spreads subcarriers evenly, which is what maximizes harvest when targets
    are loose: a user holding more subcarriers needs a smaller information
    share for the same rate.
    """
    k, n = rate_matrix.shape
    owner = np.full(n, -1)
    available = np.ones(n, dtype=bool)
    stalled = np.zeros(k, dtype=bool)
    while not np.all(stalled) and np.any(available):
        for user in range(k):
            if stalled[user]:
                continue
            scores = np.where(available, rate_matrix[user], -1.0)
            col = int(np.argmax(scores))
            if scores[col] <= 0.0:
                stalled[user] = True
                continue
            owner[col] = user
            available[col] = False
    return owner


def densify_assignment(owner: np.ndarray, rate_matrix: np.ndarray):
    """Spread leftover subcarriers across users with a round-robin draft.

    A common split earns more rate per unit information share the more
    subcarriers the user holds, so extending a partial assignment never
    hurts and usually helps; spreading (rather than dumping leftovers on one
    user) keeps every user's rate curve steep.  Columns with no positive
    rate for anyone stay unassigned (power only).
    """
    owner = np.array(owner, copy=True)
    k = rate_matrix.shape[0]
    available = owner < 0
    stalled = np.zeros(k, dtype=bool)
    while not np.all(stalled) and np.any(available):
        for user in range(k):
            if stalled[user]:
                continue
            scores = np.where(available, rate_matrix[user], -1.0)
            col = int(np.argmax(scores))
            if scores[col] <= 0.0:
                stalled[user] = True
                continue
            owner[col] = user
            available[col] = False
    return owner


def restoration_assignments(targets: np.ndarray, rate_matrix: np.ndarray,
                            gains: np.ndarray | None = None):
    """Candidate owner vectors for feasibility restoration.

    Deficit-greedy (by rate, and by rate per unit harvested power when gains
    are given), regret-ordered greedy, a round-robin draft, and
    best-user-per-subcarrier; each can succeed, or harvest better, where the
    others fall short.  The rate-per-gain variant prefers earning rate on
    weak subcarriers so strong ones keep harvesting.  All candidates are
    densified: leftover subcarriers go to their best-rate user.
    """
    candidates = []
    owner = greedy_assignment(targets, rate_matrix)
    if owner is not None:
        candidates.append(owner)
    if gains is not None:
        efficiency = np.where(gains > 0, rate_matrix / gains, 0.0)
        owner = greedy_assignment(targets, rate_matrix, preference=efficiency)
        if owner is not None:
            candidates.append(owner)
    owner = regret_greedy_assignment(targets, rate_matrix)
    if owner is not None:
        candidates.append(owner)
    candidates.append(draft_assignment(rate_matrix))
    best_user = np.argmax(rate_matrix, axis=0)
    best_rate = rate_matrix[best_user, np.arange(rate_matrix.shape[1])]
    candidates.append(np.where(best_rate > 0.0, best_user, -1))
    return [densify_assignment(owner, rate_matrix) for owner in candidates]
