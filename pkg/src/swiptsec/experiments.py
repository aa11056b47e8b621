"""Experiment sweeps: scheme comparison over secrecy targets or transmit power.

One channel realization is drawn per trial (seed = base seed + trial) and
shared by every scheme and sweep point, so comparisons are paired.  Rows are
emitted per (sweep value, scheme, trial) and sorted deterministically, so a
run with the same configuration and seed produces an identical CSV body
regardless of worker count or completion order.

dBm only exists here, at the boundary: everything below works in watts.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import solve_fps, solve_fsa
from .channels import GeometryParams, Placement, generate
from .core import (
    ChannelRealization,
    CsiMode,
    Solution,
    SolverConfig,
    SystemParams,
    ValidationError,
)
from .iterative import solve_iterative
from .stepwise import solve_stepwise
from .upper_bound import solve_upper_bound

_FSA_SEED_OFFSET = 10_000_019  # keeps the assignment stream off the channel stream


class SweepKind(enum.Enum):
    SECRECY_TARGET = "ctarget"
    TRANSMIT_POWER = "pt_dbm"


SCHEMES = ("upper_bound", "iterative", "stepwise", "fps", "fsa")

_SCHEME_ALIASES = {
    "upperbound": "upper_bound", "upper_bound": "upper_bound",
    "ub": "upper_bound", "iterative": "iterative", "stepwise": "stepwise",
    "fps": "fps", "fsa": "fsa",
}


def canonical_scheme(name: str) -> str:
    key = name.strip().lower().replace("-", "_")
    if key not in _SCHEME_ALIASES:
        raise ValidationError(f"unknown scheme {name!r}; pick from {SCHEMES}")
    return _SCHEME_ALIASES[key]


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


@dataclass
class ExperimentConfig:
    sweep_kind: SweepKind
    sweep_values: tuple
    schemes: tuple = SCHEMES
    trials: int = 1
    base_seed: int = 1
    num_users: int = 8
    num_subcarriers: int = 128
    total_power_dbm: float = 30.0
    noise_power_dbm: float = -30.0
    conversion_efficiency: float = 0.4
    fixed_ctarget: float = 0.5
    csi_mode: CsiMode = CsiMode.FULL
    geometry: GeometryParams = field(default_factory=GeometryParams)
    solver: SolverConfig = field(default_factory=SolverConfig)
    workers: int = 1
    output_path: str | None = None

    def __post_init__(self):
        if len(self.sweep_values) == 0:
            raise ValidationError("sweep values must be non-empty")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        self.schemes = tuple(canonical_scheme(s) for s in self.schemes)
        self.sweep_values = tuple(float(v) for v in self.sweep_values)


@dataclass
class Row:
    sweep_var: str
    sweep_value: float
    scheme: str
    trial: int
    seed: int
    feasible: bool
    e_sum_w: float
    info_power_w: float
    delta: float | None
    min_slack_bits: float


@dataclass
class AggregateRow:
    sweep_value: float
    scheme: str
    mean_e_sum_w: float  # infeasible trials contribute zero
    feasible_fraction: float
    mean_e_sum_feasible_w: float | None
    mean_info_power_feasible_w: float | None
    mean_delta: float | None


def _params_for(config: ExperimentConfig, sweep_value: float) -> SystemParams:
    if config.sweep_kind is SweepKind.SECRECY_TARGET:
        pt_dbm, ctarget = config.total_power_dbm, sweep_value
    else:
        pt_dbm, ctarget = sweep_value, config.fixed_ctarget
    return SystemParams(
        num_users=config.num_users,
        num_subcarriers=config.num_subcarriers,
        total_power_w=dbm_to_watts(pt_dbm),
        noise_power_w=dbm_to_watts(config.noise_power_dbm),
        conversion_efficiency=config.conversion_efficiency,
        secrecy_targets=np.full(config.num_users, ctarget),
        csi_mode=config.csi_mode)


def _solve_scheme(scheme: str, params: SystemParams,
                  channels: ChannelRealization, solver: SolverConfig,
                  seed: int, relaxation: Solution | None) -> Solution:
    if scheme == "upper_bound":
        return relaxation if relaxation is not None else solve_upper_bound(
            params, channels, solver)
    if scheme == "iterative":
        return solve_iterative(params, channels, solver)
    if scheme == "stepwise":
        return solve_stepwise(params, channels, solver, relaxation=relaxation)
    if scheme == "fps":
        return solve_fps(params, channels, solver)
    if scheme == "fsa":
        return solve_fsa(params, channels, seed + _FSA_SEED_OFFSET, solver)
    raise ValidationError(f"unknown scheme {scheme!r}")


def run_trial(config: ExperimentConfig, trial: int) -> list[Row]:
    """All sweep points and schemes for one channel realization."""
    seed = config.base_seed + trial
    proto = _params_for(config, config.sweep_values[0])
    channels = generate(proto, config.geometry, seed)
    rows: list[Row] = []
    needs_ub = ("upper_bound" in config.schemes
                or "stepwise" in config.schemes)
    for value in config.sweep_values:
        params = _params_for(config, value)
        relaxation = None
        if needs_ub:
            try:
                relaxation = solve_upper_bound(params, channels,
                                               config.solver)
            except Exception:
                relaxation = None
        ub_e = (relaxation.harvested_total_w
                if relaxation is not None and relaxation.feasible else None)
        for scheme in config.schemes:
            try:
                sol = _solve_scheme(scheme, params, channels, config.solver,
                                    seed, relaxation)
                feasible = sol.feasible
                e_sum = sol.harvested_total_w
                info = sol.info_power_w
                min_slack = float(np.min(sol.secrecy_rates
                                         - params.secrecy_targets))
            except Exception:
                feasible, e_sum, info, min_slack = False, 0.0, 0.0, math.nan
            delta = None
            if ub_e is not None and ub_e > 0 and feasible:
                delta = e_sum / ub_e
            rows.append(Row(
                sweep_var=config.sweep_kind.value, sweep_value=value,
                scheme=scheme, trial=trial, seed=seed, feasible=feasible,
                e_sum_w=e_sum, info_power_w=info, delta=delta,
                min_slack_bits=min_slack))
    return rows


def run_experiment(config: ExperimentConfig) -> list[Row]:
    """Run all trials; rows come back sorted by (sweep value, scheme, trial)."""
    if config.workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(run_trial, [config] * config.trials,
                                   range(config.trials)))
    else:
        chunks = [run_trial(config, t) for t in range(config.trials)]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.sweep_value, r.scheme, r.trial))
    return rows


def aggregate(rows: list[Row]) -> list[AggregateRow]:
    """Per (sweep value, scheme): zero-filled mean, feasible-only means, and
    the feasibility fraction.  Never mixes the two averaging conventions."""
    keys = sorted({(r.sweep_value, r.scheme) for r in rows})
    out = []
    for value, scheme in keys:
        group = [r for r in rows if r.sweep_value == value
                 and r.scheme == scheme]
        feas = [r for r in group if r.feasible]
        deltas = [r.delta for r in feas if r.delta is not None]
        out.append(AggregateRow(
            sweep_value=value, scheme=scheme,
            mean_e_sum_w=float(np.mean([r.e_sum_w if r.feasible else 0.0
                                        for r in group])),
            feasible_fraction=len(feas) / len(group),
            mean_e_sum_feasible_w=(float(np.mean([r.e_sum_w for r in feas]))
                                   if feas else None),
            mean_info_power_feasible_w=(
                float(np.mean([r.info_power_w for r in feas]))
                if feas else None),
            mean_delta=float(np.mean(deltas)) if deltas else None))
    return out


_CSV_HEADER = ("sweep_var,sweep_value,scheme,trial,seed,feasible,"
               "E_sum_W,info_power_W,delta,min_slack_bits")
_G = "%.10g"


def emit_csv(rows: list[Row], path, timestamp: str | None = None) -> None:
    """Write the row table; 10 significant digits on floating columns.

    The optional timestamp goes into a leading comment so the body below the
    header is byte-identical across reruns of the same configuration.
    """
    lines = []
    if timestamp:
        lines.append(f"# generated: {timestamp}")
    lines.append(_CSV_HEADER)
    for r in rows:
        delta = "" if r.delta is None else _G % r.delta
        slack = "nan" if math.isnan(r.min_slack_bits) else _G % r.min_slack_bits
        lines.append(",".join([
            r.sweep_var, _G % r.sweep_value, r.scheme, str(r.trial),
            str(r.seed), "1" if r.feasible else "0", _G % r.e_sum_w,
            _G % r.info_power_w, delta, slack]))
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write result CSV to {path}: {exc}") from exc


def parse_csv(path) -> list[Row]:
    """Read back a file written by :func:`emit_csv`."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line == _CSV_HEADER:
                continue
            (sweep_var, value, scheme, trial, seed, feas, e_sum, info, delta,
             slack) = line.split(",")
            rows.append(Row(
                sweep_var=sweep_var, sweep_value=float(value), scheme=scheme,
                trial=int(trial), seed=int(seed), feasible=feas == "1",
                e_sum_w=float(e_sum), info_power_w=float(info),
                delta=float(delta) if delta else None,
                min_slack_bits=float(slack)))
    return rows


_CONFIG_KEYS = """\
sweep            ctarget | pt_dbm
values           comma-separated sweep values
schemes          comma-separated subset of upper_bound,iterative,stepwise,fps,fsa
trials           integer >= 1
base_seed        integer
k                number of users
n                number of subcarriers
pt_dbm           total transmit power in dBm (fixed value for ctarget sweeps)
noise_dbm        noise power in dBm
zeta             harvesting conversion efficiency in (0,1)
ctarget          per-user secrecy target (fixed value for pt_dbm sweeps)
csi              full | stat
cell_radius      cell radius in meters
eve_distance     eavesdropper distance in meters
pathloss_exponent  path-loss exponent
reference_loss_db  reference loss at 1 m, dB
min_user_distance  minimum user distance in meters
placement        radius | area
workers          worker processes for trials
dual_step        subgradient step gain
dual_step_scale  explicit step scale (omit for instance-derived)
max_dual_iters   master iteration cap
max_bcd_iters    inner alternation cap
out              output CSV path
"""


def parse_config_file(path) -> dict:
    """Flat ``key=value`` text; '#' starts a comment.  Keys are documented in
    ``describe_config_keys``."""
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(
                    f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def describe_config_keys() -> str:
    return _CONFIG_KEYS


def build_experiment_config(mapping: dict) -> ExperimentConfig:
    """Assemble an :class:`ExperimentConfig` from flat string settings."""
    def floats(text):
        return tuple(float(v) for v in text.split(",") if v.strip())

    known = {line.split()[0] for line in _CONFIG_KEYS.splitlines()}
    unknown = set(mapping) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "sweep" not in mapping or "values" not in mapping:
        raise ValidationError("config needs at least 'sweep' and 'values'")
    try:
        sweep_kind = SweepKind(mapping["sweep"])
    except ValueError:
        raise ValidationError("sweep must be 'ctarget' or 'pt_dbm'") from None

    geometry = GeometryParams(
        cell_radius_m=float(mapping.get("cell_radius", 10.0)),
        eve_distance_m=float(mapping.get("eve_distance", 10.0)),
        pathloss_exponent=float(mapping.get("pathloss_exponent", 3.0)),
        reference_loss_db=float(mapping.get("reference_loss_db", 30.0)),
        min_user_distance_m=float(mapping.get("min_user_distance", 1.0)),
        placement=Placement(mapping.get("placement", "radius")))
    solver = SolverConfig(
        dual_step=float(mapping.get("dual_step", 0.1)),
        dual_step_scale=(float(mapping["dual_step_scale"])
                         if "dual_step_scale" in mapping else None),
        max_dual_iters=int(mapping.get("max_dual_iters", 500)),
        max_bcd_iters=int(mapping.get("max_bcd_iters", 50)))
    return ExperimentConfig(
        sweep_kind=sweep_kind,
        sweep_values=floats(mapping["values"]),
        schemes=tuple(s for s in mapping.get(
            "schemes", ",".join(SCHEMES)).split(",") if s.strip()),
        trials=int(mapping.get("trials", 1)),
        base_seed=int(mapping.get("base_seed", 1)),
        num_users=int(mapping.get("k", 8)),
        num_subcarriers=int(mapping.get("n", 128)),
        total_power_dbm=float(mapping.get("pt_dbm", 30.0)),
        noise_power_dbm=float(mapping.get("noise_dbm", -30.0)),
        conversion_efficiency=float(mapping.get("zeta", 0.4)),
        fixed_ctarget=float(mapping.get("ctarget", 0.5)),
        csi_mode=CsiMode(mapping.get("csi", "full")),
        geometry=geometry, solver=solver,
        workers=int(mapping.get("workers", 1)),
        output_path=mapping.get("out"))


def apply_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Replace fields with any non-None override values."""
    actual = {k: v for k, v in overrides.items() if v is not None}
    return replace(config, **actual) if actual else config
