"""Two-stage solver: relaxation assignment, then boundary splits.

Stage one takes the subcarrier assignment from the per-subcarrier relaxation
solver.  Stage two bisects each user's common split ratio out to the point
where the secrecy target is met exactly, which maximizes that user's harvest
for the fixed assignment.  Whenever the relaxation solver returns a feasible
point, stage two is feasible as well: the relaxation's rates on the same
assignment are a lower bound on what a zero split achieves.
"""

from __future__ import annotations

import numpy as np

from .core import (
    ChannelRealization,
    Solution,
    SolverConfig,
    SplitProfile,
    SystemParams,
    harvested_power_total,
    info_receiver_power,
)
from .rates import eve_rate_vector
from .splitsearch import assigned_rates_for_splits, max_feasible_common_splits
from .upper_bound import solve_upper_bound


def solve_stepwise(params: SystemParams, channels: ChannelRealization,
                   config: SolverConfig | None = None,
                   relaxation: Solution | None = None) -> Solution:
    """Boundary common splits on the relaxation solver's assignment.

    ``relaxation`` may pass a precomputed upper-bound solution for the same
    instance to avoid solving it twice.
    """
    config = config or SolverConfig()
    ub = relaxation or solve_upper_bound(params, channels, config)
    eve_rates = eve_rate_vector(params, channels)
    x = ub.assignment.x
    rho, ok = max_feasible_common_splits(
        params.secrecy_targets, x, params.subcarrier_power_w,
        params.noise_power_w, channels.user_gains, eve_rates, config)
    splits = SplitProfile.per_user(rho)
    rates = assigned_rates_for_splits(x, rho, params.subcarrier_power_w,
                                      params.noise_power_w,
                                      channels.user_gains, eve_rates)
    feasible = bool(np.all(ok))
    diagnostics = ""
    if not feasible:
        failed = np.nonzero(~ok)[0].tolist()
        diagnostics = (f"users {failed} cannot meet their target on the "
                       f"relaxation assignment even at a zero split")
    return Solution(
        assignment=ub.assignment, splits=splits,
        harvested_total_w=harvested_power_total(params, channels, splits),
        info_power_w=info_receiver_power(params, channels, splits),
        secrecy_rates=rates, feasible=feasible, dual_values=ub.dual_values,
        trace=ub.trace, diagnostics=diagnostics)
