"""Problem data model shared by all solvers.

A scenario is described by :class:`SystemParams` (static quantities) plus one
:class:`ChannelRealization` (a seeded draw of all channel power gains).  A
candidate operating point is an :class:`Assignment` (exclusive
subcarrier-to-user map) together with a :class:`SplitProfile` (power-splitting
ratios, either one per user or one per user per subcarrier).  Solvers return a
:class:`Solution`.

All powers are stored in watts; dBm only appears at the CLI boundary.  All
value objects are immutable after construction and every operation in this
module is pure, so instances can be shared freely between workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """Raised when inputs violate a documented structural invariant."""


class CsiMode(enum.Enum):
    """How much the transmitter knows about the eavesdropper channel."""

    FULL = "full"
    STATISTICAL = "stat"


class SplitMode(enum.Enum):
    PER_USER = "per-user"
    PER_SUBCARRIER = "per-subcarrier"


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SystemParams:
    """Static scenario description.

    Power is split uniformly over subcarriers, so the per-subcarrier transmit
    power is ``total_power_w / num_subcarriers`` exactly.
    """

    num_users: int
    num_subcarriers: int
    total_power_w: float
    noise_power_w: float
    conversion_efficiency: float
    secrecy_targets: np.ndarray
    csi_mode: CsiMode = CsiMode.FULL

    def __post_init__(self):
        if self.num_users < 1 or self.num_subcarriers < 1:
            raise ValidationError("need at least one user and one subcarrier")
        if not (self.total_power_w > 0 and self.noise_power_w > 0):
            raise ValidationError("total power and noise power must be positive")
        if not (0.0 < self.conversion_efficiency < 1.0):
            raise ValidationError("conversion efficiency must lie in (0, 1)")
        targets = _freeze(np.atleast_1d(self.secrecy_targets))
        if targets.shape != (self.num_users,):
            raise ValidationError(
                f"secrecy_targets shape {targets.shape} != ({self.num_users},)"
            )
        if np.any(targets < 0) or not np.all(np.isfinite(targets)):
            raise ValidationError("secrecy targets must be finite and >= 0")
        object.__setattr__(self, "secrecy_targets", targets)

    @property
    def subcarrier_power_w(self) -> float:
        return self.total_power_w / self.num_subcarriers


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of all channel power gains.

    ``user_gains`` is K x N and strictly positive.  ``eve_gains`` holds the
    per-subcarrier eavesdropper draw used in full-CSI mode; ``eve_mean_gains``
    holds the fading mean used in statistical-CSI mode.  Either may be None
    when the corresponding mode is never exercised.
    """

    user_gains: np.ndarray
    eve_gains: np.ndarray | None = None
    eve_mean_gains: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        h = _freeze(np.atleast_2d(self.user_gains))
        if h.ndim != 2:
            raise ValidationError("user_gains must be a K x N matrix")
        if not np.all(np.isfinite(h)) or np.any(h <= 0):
            raise ValidationError("user gains must be finite and strictly positive")
        object.__setattr__(self, "user_gains", h)
        n = h.shape[1]
        for name, positive in (("eve_gains", False), ("eve_mean_gains", True)):
            v = getattr(self, name)
            if v is None:
                continue
            v = _freeze(np.atleast_1d(v))
            if v.shape != (n,):
                raise ValidationError(f"{name} shape {v.shape} != ({n},)")
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ValidationError(f"{name} must be finite and non-negative")
            if positive and np.any(v <= 0):
                raise ValidationError(f"{name} must be strictly positive")
            object.__setattr__(self, name, v)

    @property
    def num_users(self) -> int:
        return self.user_gains.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.user_gains.shape[1]


@dataclass(frozen=True)
class Assignment:
    """Binary subcarrier-to-user map; each subcarrier serves at most one user.

    A column of zeros means the subcarrier carries power only.
    """

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, copy=True)
        if x.ndim != 2:
            raise ValidationError("assignment must be a K x N matrix")
        if not np.all((x == 0) | (x == 1)):
            raise ValidationError("assignment entries must be binary")
        x = x.astype(np.int8)
        if np.any(x.sum(axis=0) > 1):
            raise ValidationError("a subcarrier may serve at most one user")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    @classmethod
    def from_owner(cls, owner: np.ndarray, num_users: int) -> "Assignment":
        """Build from a length-N vector of user indices, -1 = unassigned."""
        owner = np.asarray(owner, dtype=int)
        x = np.zeros((num_users, owner.size), dtype=np.int8)
        assigned = owner >= 0
        x[owner[assigned], np.nonzero(assigned)[0]] = 1
        return cls(x)

    @property
    def owner(self) -> np.ndarray:
        """Length-N vector of owning user indices, -1 where unassigned."""
        own = np.full(self.x.shape[1], -1, dtype=int)
        rows, cols = np.nonzero(self.x)
        own[cols] = rows
        return own


@dataclass(frozen=True)
class SplitProfile:
    """Power-splitting ratios: fraction of received power sent to harvesting.

    ``PER_USER`` carries one ratio per user (hardware splits before OFDM
    demodulation); ``PER_SUBCARRIER`` carries a K x N matrix (the relaxation
    used for the performance upper bound).
    """

    mode: SplitMode
    values: np.ndarray

    def __post_init__(self):
        v = _freeze(self.values)
        expect_ndim = 1 if self.mode is SplitMode.PER_USER else 2
        if v.ndim != expect_ndim:
            raise ValidationError(
                f"{self.mode.value} splits must have ndim {expect_ndim}"
            )
        if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
            raise ValidationError("split ratios must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @classmethod
    def per_user(cls, values) -> "SplitProfile":
        return cls(SplitMode.PER_USER, np.atleast_1d(values))

    @classmethod
    def per_subcarrier(cls, values) -> "SplitProfile":
        return cls(SplitMode.PER_SUBCARRIER, np.atleast_2d(values))

    def as_matrix(self, num_subcarriers: int) -> np.ndarray:
        """Broadcast to a K x N matrix regardless of mode."""
        if self.mode is SplitMode.PER_USER:
            return np.repeat(self.values[:, None], num_subcarriers, axis=1)
        return np.array(self.values)


@dataclass
class SolverConfig:
    """Numerical knobs shared by the solvers.

    ``dual_step`` is a dimensionless gain on the subgradient step; the
    effective initial step is ``dual_step * dual_step_scale`` where the scale
    defaults to an instance-derived estimate of the multiplier magnitude
    (``None``).  Pass an explicit scale (e.g. 1.0) to reproduce the raw
    textbook step.
    """

    bisect_tol: float = 1e-6
    max_bisect_iters: int = 100
    dual_step: float = 0.1
    dual_step_scale: float | None = None
    max_dual_iters: int = 500
    dual_tol: float = 1e-5
    bcd_tol: float = 1e-6
    max_bcd_iters: int = 50
    tol_feas: float = 1e-6
    step_schedule: str = "diminishing"
    tie_break: str = "lowest-index"

    def __post_init__(self):
        for name in ("bisect_tol", "dual_step", "dual_tol", "bcd_tol", "tol_feas"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")
        for name in ("max_bisect_iters", "max_dual_iters", "max_bcd_iters"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.step_schedule not in ("diminishing", "constant"):
            raise ValidationError("step_schedule must be diminishing or constant")
        if self.tie_break != "lowest-index":
            raise ValidationError("only lowest-index tie-breaking is supported")


@dataclass
class TraceRow:
    """One master-iteration record of a dual solver run."""

    iteration: int
    dual_objective: float
    best_primal: float  # best feasible objective found so far; nan if none
    max_violation: float  # max_k (target_k - rate_k)


@dataclass
class Solution:
    """Solver output: operating point, its metrics, and the run trace."""

    assignment: Assignment
    splits: SplitProfile
    harvested_total_w: float
    info_power_w: float
    secrecy_rates: np.ndarray
    feasible: bool
    dual_values: np.ndarray
    trace: list[TraceRow] = field(default_factory=list)
    bcd_lagrangians: list[list[float]] = field(default_factory=list)
    diagnostics: str = ""


def _split_matrix(params: SystemParams, channels: ChannelRealization,
                  splits: SplitProfile) -> np.ndarray:
    k, n = params.num_users, params.num_subcarriers
    if channels.user_gains.shape != (k, n):
        raise ValidationError(
            f"channel matrix {channels.user_gains.shape} does not match "
            f"params ({k}, {n})"
        )
    expect = (k,) if splits.mode is SplitMode.PER_USER else (k, n)
    if splits.values.shape != expect:
        raise ValidationError(
            f"split shape {splits.values.shape} does not match {expect}"
        )
    return splits.as_matrix(n)


def harvested_power_total(params: SystemParams, channels: ChannelRealization,
                          splits: SplitProfile) -> float:
    """Total harvested power in watts.

    Every user harvests from every subcarrier (assignment only gates the
    information rate), so this is
    ``zeta * sum_{k,n} rho * p_n * h[k][n]`` with rho per user or per
    user-subcarrier depending on the split mode.
    """
    rho = _split_matrix(params, channels, splits)
    p = params.subcarrier_power_w
    return float(params.conversion_efficiency * p
                 * np.sum(rho * channels.user_gains))


def info_receiver_power(params: SystemParams, channels: ChannelRealization,
                        splits: SplitProfile) -> float:
    """Received signal power diverted to the information decoders, in watts.

    The complement of the harvested share, without the conversion-efficiency
    factor: that factor models harvesting losses only.
    """
    rho = _split_matrix(params, channels, splits)
    p = params.subcarrier_power_w
    return float(p * np.sum((1.0 - rho) * channels.user_gains))


def check_feasibility(params: SystemParams, channels: ChannelRealization,
                      assignment: Assignment, splits: SplitProfile,
                      config: SolverConfig | None = None):
    """Per-user secrecy-rate slack check.

    Returns ``(feasible, slacks)`` with ``slacks[k] = rate_k - target_k``;
    feasible iff the minimum slack is >= -tol_feas.
    """
    from . import rates

    config = config or SolverConfig()
    user_rates = rates.per_user_rates(params, channels, assignment, splits)
    slacks = user_rates - params.secrecy_targets
    return bool(np.min(slacks) >= -config.tol_feas), slacks
