"""Secure SWIPT-OFDMA downlink: harvested-power maximization under per-user
secrecy-rate constraints.

Solvers: a per-subcarrier relaxation (performance upper bound), an
alternating common-split solver, a two-stage step-wise solver, two baselines
(fixed split, random assignment), and exhaustive small-instance oracles.
"""

from .baselines import solve_fps, solve_fsa
from .channels import (
    GeometryParams,
    Placement,
    dump_channels_csv,
    generate,
    load_channels_csv,
    pathloss,
)
from .core import (
    Assignment,
    ChannelRealization,
    CsiMode,
    Solution,
    SolverConfig,
    SplitMode,
    SplitProfile,
    SystemParams,
    ValidationError,
    check_feasibility,
    harvested_power_total,
    info_receiver_power,
)
from .experiments import (
    ExperimentConfig,
    SweepKind,
    aggregate,
    dbm_to_watts,
    emit_csv,
    run_experiment,
    watts_to_dbm,
)
from .iterative import solve_iterative
from .oracle import brute_force_common_split, brute_force_per_subcarrier_split
from .rates import (
    RateContext,
    eve_rate,
    eve_rate_vector,
    exp_integral_e1,
    scaled_exp_integral_e1,
    secrecy_rate_subcarrier,
    secrecy_rate_user,
)
from .stepwise import solve_stepwise
from .upper_bound import solve_upper_bound

__all__ = [
    "Assignment", "ChannelRealization", "CsiMode", "ExperimentConfig",
    "GeometryParams", "Placement", "RateContext", "Solution", "SolverConfig",
    "SplitMode", "SplitProfile", "SweepKind", "SystemParams",
    "ValidationError", "aggregate", "brute_force_common_split",
    "brute_force_per_subcarrier_split", "check_feasibility", "dbm_to_watts",
    "dump_channels_csv", "emit_csv", "eve_rate", "eve_rate_vector",
    "exp_integral_e1", "generate", "harvested_power_total",
    "info_receiver_power", "load_channels_csv", "pathloss",
    "run_experiment", "scaled_exp_integral_e1", "secrecy_rate_subcarrier",
    "secrecy_rate_user", "solve_fps", "solve_fsa", "solve_iterative",
    "solve_stepwise", "solve_upper_bound", "watts_to_dbm",
]
