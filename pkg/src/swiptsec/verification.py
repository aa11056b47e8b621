"""Cross-solver consistency checks against the exhaustive references.

Used both by the test suite and by the ``oracle-check`` CLI subcommand.  The
checks run on small synthetic instances at unit scale (unit per-subcarrier
power and noise) where the exhaustive oracles are cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import solve_fps, solve_fsa
from .core import (
    ChannelRealization,
    CsiMode,
    Solution,
    SolverConfig,
    SystemParams,
)
from .iterative import solve_iterative
from .oracle import brute_force_common_split, brute_force_per_subcarrier_split
from .stepwise import solve_stepwise
from .upper_bound import solve_upper_bound

HEURISTIC_SCHEMES = ("iterative", "stepwise", "fps", "fsa")


def unit_instance(num_users: int, num_subcarriers: int, seed: int,
                  ctarget: float, csi_mode: CsiMode = CsiMode.FULL,
                  eve_mean: float = 0.5):
    """Synthetic unit-scale instance: unit subcarrier power and noise,
    unit-mean user fading, eavesdropper fading with the given mean."""
    rng = np.random.default_rng(seed)
    gains = rng.exponential(1.0, size=(num_users, num_subcarriers))
    eve = rng.exponential(eve_mean, size=num_subcarriers)
    params = SystemParams(
        num_users=num_users, num_subcarriers=num_subcarriers,
        total_power_w=float(num_subcarriers), noise_power_w=1.0,
        conversion_efficiency=0.4,
        secrecy_targets=np.full(num_users, ctarget), csi_mode=csi_mode)
    channels = ChannelRealization(
        user_gains=gains, eve_gains=eve,
        eve_mean_gains=np.full(num_subcarriers, eve_mean), seed=seed)
    return params, channels


@dataclass
class InstanceRecord:
    seed: int
    params: SystemParams
    channels: ChannelRealization
    solutions: dict[str, Solution]


def solve_instance(params, channels, config: SolverConfig,
                   seed: int) -> dict[str, Solution]:
    ub = solve_upper_bound(params, channels, config)
    return {
        "ppa_oracle": brute_force_common_split(params, channels, config),
        "pub_oracle": brute_force_per_subcarrier_split(params, channels,
                                                       config),
        "upper_bound": ub,
        "stepwise": solve_stepwise(params, channels, config, relaxation=ub),
        "iterative": solve_iterative(params, channels, config),
        "fps": solve_fps(params, channels, config),
        "fsa": solve_fsa(params, channels, seed + 1, config),
    }


def run_oracle_batch(num_instances: int, base_seed: int, ctarget: float,
                     num_users: int = 2, num_subcarriers: int = 4,
                     config: SolverConfig | None = None
                     ) -> list[InstanceRecord]:
    config = config or SolverConfig()
    records = []
    for i in range(num_instances):
        seed = base_seed + i
        params, channels = unit_instance(num_users, num_subcarriers, seed,
                                         ctarget)
        records.append(InstanceRecord(
            seed=seed, params=params, channels=channels,
            solutions=solve_instance(params, channels, config, seed)))
    return records


@dataclass
class CheckReport:
    checks: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def count(self, name: str):
        self.checks[name] = self.checks.get(name, 0) + 1

    def fail(self, message: str):
        self.failures.append(message)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_oracle_sandwich(records: list[InstanceRecord]) -> CheckReport:
    """Relaxation dominance, heuristic optimality bound, upper-bound
    sandwich, and feasibility inheritance, per instance."""
    report = CheckReport()
    for rec in records:
        s = rec.solutions
        ppa, pub, ub, sw = (s["ppa_oracle"], s["pub_oracle"],
                            s["upper_bound"], s["stepwise"])

        report.count("relaxation dominance")
        if ppa.feasible and not pub.feasible:
            report.fail(f"seed {rec.seed}: relaxation infeasible while the "
                        f"common-split oracle is feasible")
        if ppa.feasible and pub.feasible:
            gap = ppa.harvested_total_w - pub.harvested_total_w
            if gap > 1e-12 * max(1.0, pub.harvested_total_w):
                report.fail(f"seed {rec.seed}: common-split optimum exceeds "
                            f"the relaxation optimum by {gap:.3e}")

        report.count("heuristics below oracle optimum")
        for name in HEURISTIC_SCHEMES:
            sol = s[name]
            if not sol.feasible:
                continue
            if not ppa.feasible:
                report.fail(f"seed {rec.seed}: {name} feasible but the "
                            f"oracle is not")
            elif sol.harvested_total_w > ppa.harvested_total_w + 1e-9:
                report.fail(
                    f"seed {rec.seed}: {name} harvest "
                    f"{sol.harvested_total_w:.12g} exceeds oracle optimum "
                    f"{ppa.harvested_total_w:.12g}")

        report.count("upper-bound sandwich")
        if ub.feasible:
            if sw.feasible and (ub.harvested_total_w
                                < sw.harvested_total_w - 1e-6):
                report.fail(f"seed {rec.seed}: upper-bound primal below "
                            f"step-wise value")
            if ub.trace:
                dual_final = ub.trace[-1].dual_objective
                if ub.harvested_total_w > dual_final * (1 + 1e-6) + 1e-12:
                    report.fail(f"seed {rec.seed}: upper-bound primal "
                                f"{ub.harvested_total_w:.12g} above final "
                                f"dual value {dual_final:.12g}")
            if pub.feasible and (ub.harvested_total_w
                                 > pub.harvested_total_w
                                 * (1 + 1e-6) + 1e-12):
                report.fail(f"seed {rec.seed}: upper-bound primal above the "
                            f"relaxation oracle optimum")

        report.count("feasibility inheritance")
        if ub.feasible and not sw.feasible:
            report.fail(f"seed {rec.seed}: relaxation feasible but the "
                        f"step-wise solver is not")
    return report


def verify_traces(sol: Solution, dual_rel_tol: float = 1e-9,
                  bcd_rel_tol: float = 1e-10) -> list[str]:
    """Weak duality and inner-loop monotonicity violations in a solver trace."""
    problems = []
    for row in sol.trace:
        if math.isnan(row.best_primal):
            continue
        slack = dual_rel_tol * max(abs(row.dual_objective),
                                   abs(row.best_primal), 1e-300)
        if row.dual_objective < row.best_primal - slack:
            problems.append(
                f"iteration {row.iteration}: dual value "
                f"{row.dual_objective:.12g} below best primal "
                f"{row.best_primal:.12g}")
    for i, history in enumerate(sol.bcd_lagrangians):
        for a, b in zip(history, history[1:]):
            if b < a - bcd_rel_tol * max(abs(a), abs(b), 1e-300):
                problems.append(
                    f"inner pass {i}: value decreased from {a:.12g} "
                    f"to {b:.12g}")
    return problems


def check_all_traces(records: list[InstanceRecord]) -> CheckReport:
    report = CheckReport()
    for rec in records:
        for name, sol in rec.solutions.items():
            report.count("trace invariants")
            for problem in verify_traces(sol):
                report.fail(f"seed {rec.seed} {name}: {problem}")
    return report
