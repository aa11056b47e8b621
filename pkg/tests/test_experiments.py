import numpy as np
import pytest

from swiptsec import ExperimentConfig, SweepKind, ValidationError
from swiptsec.channels import GeometryParams
from swiptsec.core import SolverConfig
from swiptsec.experiments import (
    Row,
    aggregate,
    build_experiment_config,
    canonical_scheme,
    dbm_to_watts,
    emit_csv,
    parse_config_file,
    parse_csv,
    run_experiment,
    watts_to_dbm,
)

SMALL_GEOMETRY = GeometryParams(cell_radius_m=10.0, eve_distance_m=11.0)


def small_config(**overrides):
    base = dict(
        sweep_kind=SweepKind.SECRECY_TARGET,
        sweep_values=(0.05, 0.2, 0.8),
        schemes=("upper_bound", "stepwise", "fsa"),
        trials=2, base_seed=11, num_users=3, num_subcarriers=8,
        geometry=SMALL_GEOMETRY,
        solver=SolverConfig(max_dual_iters=40))
    base.update(overrides)
    return ExperimentConfig(**base)


def test_dbm_conversions():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-30.0) == pytest.approx(1e-6)
    assert watts_to_dbm(1.0) == pytest.approx(30.0)
    assert watts_to_dbm(dbm_to_watts(17.3)) == pytest.approx(17.3)


def test_scheme_aliases():
    assert canonical_scheme("UpperBound") == "upper_bound"
    assert canonical_scheme("ub") == "upper_bound"
    assert canonical_scheme("FPS") == "fps"
    with pytest.raises(ValidationError):
        canonical_scheme("magic")


def test_config_validation():
    with pytest.raises(ValidationError):
        small_config(sweep_values=())
    with pytest.raises(ValidationError):
        small_config(trials=0)


def test_rows_sorted_and_complete():
    config = small_config()
    rows = run_experiment(config)
    assert len(rows) == 3 * 3 * 2  # sweep x scheme x trial
    keys = [(r.sweep_value, r.scheme, r.trial) for r in rows]
    assert keys == sorted(keys)
    assert {r.scheme for r in rows} == {"upper_bound", "stepwise", "fsa"}


def test_paired_seeding_across_schemes():
    rows = run_experiment(small_config())
    for value in (0.05, 0.2, 0.8):
        for trial in (0, 1):
            seeds = {r.seed for r in rows
                     if r.sweep_value == value and r.trial == trial}
            assert len(seeds) == 1


def test_determinism_identical_runs():
    a = run_experiment(small_config())
    b = run_experiment(small_config())
    assert a == b


def test_stepwise_nonincreasing_in_target_fixed_realization():
    config = small_config(trials=1, sweep_values=(0.05, 0.1, 0.2, 0.4, 0.8))
    rows = [r for r in run_experiment(config) if r.scheme == "stepwise"]
    values = [r.e_sum_w if r.feasible else 0.0 for r in rows]
    assert all(b <= a + 1e-15 for a, b in zip(values, values[1:]))


def test_delta_of_upper_bound_is_one():
    rows = run_experiment(small_config())
    for r in rows:
        if r.scheme == "upper_bound" and r.delta is not None:
            assert r.delta == pytest.approx(1.0, abs=1e-12)


def test_delta_undefined_without_upper_bound():
    rows = run_experiment(small_config(schemes=("fsa",)))
    assert all(r.delta is None for r in rows)


def test_aggregate_zero_fills_infeasible():
    rows = [
        Row("ctarget", 1.0, "fsa", 0, 10, True, 2.0, 1.0, 0.5, 0.1),
        Row("ctarget", 1.0, "fsa", 1, 11, False, 9.0, 1.0, None, -0.2),
    ]
    agg = aggregate(rows)
    assert len(agg) == 1
    assert agg[0].mean_e_sum_w == pytest.approx(1.0)  # (2 + 0) / 2
    assert agg[0].feasible_fraction == 0.5
    assert agg[0].mean_e_sum_feasible_w == pytest.approx(2.0)
    assert agg[0].mean_delta == pytest.approx(0.5)


def test_emit_csv_header_only_for_empty_table(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], path)
    lines = path.read_text().splitlines()
    assert lines == ["sweep_var,sweep_value,scheme,trial,seed,feasible,"
                     "E_sum_W,info_power_W,delta,min_slack_bits"]


def test_emit_csv_single_row(tmp_path):
    path = tmp_path / "one.csv"
    emit_csv([Row("ctarget", 0.5, "fps", 0, 3, True, 1.25e-4, 2e-5, 0.75,
                  0.01)], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1] == "ctarget,0.5,fps,0,3,1,0.000125,2e-05,0.75,0.01"


def test_csv_round_trip(tmp_path):
    rows = run_experiment(small_config())
    path = tmp_path / "out.csv"
    emit_csv(rows, path, timestamp="2026-01-01T00:00:00+00:00")
    back = parse_csv(path)
    assert len(back) == len(rows)
    for a, b in zip(rows, back):
        assert a.scheme == b.scheme and a.trial == b.trial
        assert b.e_sum_w == pytest.approx(a.e_sum_w, rel=1e-9)
        assert (a.delta is None) == (b.delta is None)
        if a.delta is not None:
            assert b.delta == pytest.approx(a.delta, rel=1e-9)


def test_csv_bodies_identical_apart_from_timestamp(tmp_path):
    rows = run_experiment(small_config())
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(rows, p1, timestamp="2026-01-01T00:00:00+00:00")
    emit_csv(rows, p2, timestamp="2026-02-02T22:22:22+00:00")
    body1 = p1.read_text().splitlines()[1:]
    body2 = p2.read_text().splitlines()[1:]
    assert body1 == body2


def test_parse_config_file(tmp_path):
    path = tmp_path / "exp.conf"
    path.write_text(
        "# comment line\n"
        "sweep=ctarget\n"
        "values=0.1,0.2\n"
        "schemes=ub,stepwise\n"
        "trials=3\n"
        "k=4\n"
        "n=16\n"
        "csi=stat\n"
        "eve_distance=11\n")
    config = build_experiment_config(parse_config_file(path))
    assert config.sweep_kind is SweepKind.SECRECY_TARGET
    assert config.sweep_values == (0.1, 0.2)
    assert config.schemes == ("upper_bound", "stepwise")
    assert config.trials == 3
    assert config.num_users == 4
    assert config.geometry.eve_distance_m == 11.0


def test_parse_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("sweep=ctarget\nvalues=0.1\nbogus=1\n")
    with pytest.raises(ValidationError):
        build_experiment_config(parse_config_file(path))


def test_parse_config_requires_sweep(tmp_path):
    path = tmp_path / "bad2.conf"
    path.write_text("trials=2\n")
    with pytest.raises(ValidationError):
        build_experiment_config(parse_config_file(path))


def test_power_sweep_changes_power_not_channels():
    config = small_config(
        sweep_kind=SweepKind.TRANSMIT_POWER,
        sweep_values=(20.0, 30.0), fixed_ctarget=0.05,
        schemes=("stepwise",), trials=1)
    rows = run_experiment(config)
    assert len(rows) == 2
    assert {r.sweep_var for r in rows} == {"pt_dbm"}
