"""Master dual-ascent machinery shared by the dual-domain solvers.

The solvers relax the per-user secrecy constraints with non-negative
multipliers, maximize the resulting Lagrangian per subcarrier, and descend the
dual function with projected subgradient steps.  This module owns the
multiplier state, the step rule, convergence detection and the bookkeeping of
the best feasible operating point seen so far; the per-problem subproblem math
lives with each solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import ChannelRealization, SolverConfig, SplitProfile, SystemParams


@dataclass(frozen=True)
class Snapshot:
    """A feasible operating point remembered across dual iterations."""

    harvested_w: float
    owner: np.ndarray
    splits: SplitProfile
    rates: np.ndarray


@dataclass
class DualState:
    """Multiplier vector plus step schedule; one instance per solver run.

    ``step_gain`` may be a scalar or a per-user vector.
    """

    multipliers: np.ndarray
    step_gain: float | np.ndarray
    schedule: str = "diminishing"
    iteration: int = 0
    best_feasible: Snapshot | None = None

    def __post_init__(self):
        m = np.array(self.multipliers, dtype=float)
        if np.any(m < 0):
            raise ValueError("multipliers must be non-negative")
        self.multipliers = m


def subgradient_step(state: DualState, violations: np.ndarray) -> DualState:
    """Projected subgradient update.

    ``violations[k]`` is the constraint gap ``target_k - achieved_rate_k``.
    The step size is ``step_gain / sqrt(t)`` under the diminishing schedule
    and ``step_gain`` under the constant one, with t the 1-based step index.
    """
    t = state.iteration + 1
    alpha = np.asarray(state.step_gain, dtype=float)
    if state.schedule == "diminishing":
        alpha = alpha / math.sqrt(t)
    updated = np.maximum(0.0, state.multipliers + alpha * np.asarray(violations))
    return replace(state, multipliers=updated, iteration=t)


def converged(state: DualState, prev_multipliers: np.ndarray,
              config: SolverConfig) -> bool:
    """Max-norm relative multiplier change below tolerance, or iteration cap."""
    if state.iteration >= config.max_dual_iters:
        return True
    prev = np.asarray(prev_multipliers, dtype=float)
    scale = max(float(np.max(np.abs(prev))), 1e-300)
    change = float(np.max(np.abs(state.multipliers - prev)))
    return change / scale <= config.dual_tol


def consider(state: DualState, candidate: Snapshot) -> bool:
    """Keep the candidate if it beats the best feasible snapshot so far."""
    if state.best_feasible is None or (
            candidate.harvested_w > state.best_feasible.harvested_w):
        state.best_feasible = candidate
        return True
    return False


def common_split_multiplier_scale(params: SystemParams,
                                  channels: ChannelRealization) -> np.ndarray:
    """Per-user magnitude estimate of the common-split multipliers.

    Balances the harvest gradient against the rate gradient at a half split
    with every subcarrier assigned, then corrects for the user only holding
    roughly a 1/K share of the subcarriers.  Keeps physical (watt-level)
    instances on a sane step size where a fixed textbook value would be off
    by orders of magnitude.
    """
    p = params.subcarrier_power_w
    ph = p * channels.user_gains
    zeta = params.conversion_efficiency
    rate_grad = ph / (math.log(2.0) * (0.5 * ph + params.noise_power_w))
    per_user = zeta * ph.sum(axis=1) / np.maximum(rate_grad.sum(axis=1), 1e-300)
    return per_user * params.num_users


def per_subcarrier_multiplier_scale(params: SystemParams,
                                    channels: ChannelRealization) -> np.ndarray:
    """Per-user multiplier scale for the per-subcarrier relaxation solver.

    For each (user, subcarrier) pair this is the multiplier at which the
    closed-form split rule leaves the all-harvest corner; the per-user lower
    quartile tracks the subcarriers that actually react.  Weak users have
    thresholds orders of magnitude above strong ones, so a shared scalar
    would leave them starved (or blow the strong users up).
    """
    p = params.subcarrier_power_w
    h = channels.user_gains
    ln2 = math.log(2.0)
    sigma_term = params.noise_power_w / (ln2 * h * p)
    col_sums = h.sum(axis=0)[None, :]
    flip = (0.5 + sigma_term) * params.conversion_efficiency * ln2 * p * (
        col_sums / h)
    return np.percentile(flip, 25.0, axis=1)


def effective_step_gain(config: SolverConfig, scale_estimate: np.ndarray,
                        targets: np.ndarray) -> np.ndarray:
    """Per-user initial subgradient step: configured gain times the scale.

    An explicit ``dual_step_scale`` overrides the estimate.  Each scale is
    divided by the user's target (falling back to the typical positive
    target) so one unit step moves that multiplier by about ``dual_step`` of
    its natural magnitude.
    """
    targets = np.asarray(targets, dtype=float)
    if config.dual_step_scale is not None:
        return np.full(targets.shape, config.dual_step
                       * config.dual_step_scale)
    positive = targets[targets > 0]
    typical = float(np.mean(positive)) if positive.size else 1.0
    return config.dual_step * np.asarray(scale_estimate) / np.where(
        targets > 0, targets, typical)
