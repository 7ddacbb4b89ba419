"""Harness behaviour: fleet IO, sweeps, CSV determinism, CLI exit codes."""

import numpy as np
import pytest
from click.testing import CliRunner

from gridclear import (ConfigurationError, FleetParseError, RunConfig,
                       aggregate_net_load, committed_requirement, emit_csv,
                       generate_scenarios, load_fleet, run_alpha_sweep,
                       run_penetration_sweep, scenario_config)
from gridclear.cli import main
from gridclear.experiment import (ALPHA_SWEEP_COLUMNS, PENETRATION_SWEEP_COLUMNS,
                                  derive_capacity)

# ---------------------------------------------------------------------------
# fleet loading


def test_builtin_fleet_shape():
    fleet = load_fleet("builtin")
    assert len(fleet) == 7
    assert fleet.total_capacity == 960.0
    assert list(fleet.ask_prices) == [7.37, 22.23, 31.55, 176.05, 180.75, 241.91, 315.81]
    assert list(fleet.p_maxs) == [400, 155, 76, 197, 100, 12, 20]


def test_fleet_csv_roundtrip(tmp_path):
    path = tmp_path / "fleet.csv"
    path.write_text(
        "name,ask_price,p_min,p_max,rp_max,ramp_max,hot_start,cold_start,no_load_cost\n"
        "b,20,0,100,100,100,5,9,1\n"
        "a,10,0,200,200,200,0,0,0\n")
    fleet = load_fleet(str(path))
    assert [g.name for g in fleet.generators] == ["a", "b"]  # sorted by ask


def test_fleet_duplicate_prices_rejected(tmp_path):
    path = tmp_path / "fleet.csv"
    path.write_text(
        "name,ask_price,p_min,p_max,rp_max,ramp_max,hot_start,cold_start,no_load_cost\n"
        "a,5,0,100,100,100,0,0,0\n"
        "b,5,0,100,100,100,0,0,0\n")
    with pytest.raises(ValueError, match="strictly increasing"):
        load_fleet(str(path))


def test_fleet_negative_capacity_rejected(tmp_path):
    path = tmp_path / "fleet.csv"
    path.write_text(
        "name,ask_price,p_min,p_max,rp_max,ramp_max,hot_start,cold_start,no_load_cost\n"
        "a,5,0,-100,100,100,0,0,0\n")
    with pytest.raises(FleetParseError) as err:
        load_fleet(str(path))
    assert err.value.line_number == 2


def test_fleet_malformed_row_names_line(tmp_path):
    path = tmp_path / "fleet.csv"
    path.write_text(
        "name,ask_price,p_min,p_max,rp_max,ramp_max,hot_start,cold_start,no_load_cost\n"
        "a,5,0,100,100,100,0,0,0\n"
        "b,oops,0,100,100,100,0,0,0\n")
    with pytest.raises(FleetParseError) as err:
        load_fleet(str(path))
    assert err.value.line_number == 3


# ---------------------------------------------------------------------------
# config plumbing


def test_empty_alpha_grid_rejected():
    with pytest.raises(ConfigurationError):
        RunConfig(alphas=())


def test_capacity_modes():
    tracking = derive_capacity((100.0, 100.0), 0.5, "tracking")
    assert np.allclose(tracking, 0.5 * 100.0 / 0.85)
    buildout = derive_capacity((100.0, 100.0), 0.5, "buildout")
    assert np.allclose(buildout, 110.0)


# ---------------------------------------------------------------------------
# sweeps


def test_alpha_sweep_monotone_committed():
    run = RunConfig(capacity_mode="tracking", penetrations=(0.009,))
    rows = run_alpha_sweep(run)
    assert len(rows) == len(run.alphas)
    committed = [r["committed_mw"] for r in rows]
    assert all(b >= a for a, b in zip(committed, committed[1:]))


def test_alpha_sweep_deterministic_load_rows_identical():
    run = RunConfig(capacity_mode="tracking", penetrations=(0.0,),
                    load_std_frac=0.0, alphas=(0.5, 0.9))
    rows = run_alpha_sweep(run)
    a, b = rows
    assert all(a[k] == b[k] for k in a if k != "alpha")


def test_alpha_sweep_committed_meets_requirement():
    run = RunConfig(capacity_mode="tracking", penetrations=(0.009,))
    sset = generate_scenarios(scenario_config(run, 0.009))
    for row in run_alpha_sweep(run):
        sample = aggregate_net_load(sset, 0)
        assert committed_requirement(sample, row["alpha"], row["committed_mw"]) == 0.0


def test_penetration_sweep_committed_meets_requirement():
    run = RunConfig(capacity_mode="buildout", alphas=(0.95,))
    for row in run_penetration_sweep(run):
        sset = generate_scenarios(scenario_config(run, row["penetration"]))
        sample = aggregate_net_load(sset, 0)
        assert committed_requirement(sample, 0.95, row["committed_mw"]) == 0.0


def test_multi_hour_horizon_runs():
    from gridclear import evaluate_point
    run = RunConfig(capacity_mode="tracking", penetrations=(0.009,), horizon=3,
                    alphas=(0.9,))
    fleet = load_fleet("builtin")
    sset = generate_scenarios(scenario_config(run, 0.009))
    point = evaluate_point(fleet, run, sset, 0.9, 0.009)
    assert point.committed.shape == (3, 7)
    assert point.realized.shape == (run.n_scenarios, 3, 7)
    s = point.settlement
    assert s.deviation_cost == s.expected_profit - s.realized_profit
    assert s.h_total >= 0.0 and s.lambda_w >= 0.0


def test_penetration_sweep_zero_point_matches_load_tail():
    run = RunConfig(capacity_mode="buildout", alphas=(0.95,))
    rows = run_penetration_sweep(run)
    sset = generate_scenarios(scenario_config(run, 0.0))
    from gridclear import cvar_direct
    want = cvar_direct(aggregate_net_load(sset, 0), 0.95)
    assert rows[0]["committed_mw"] == pytest.approx(want, abs=1e-9)


def test_penetration_sweep_no_uncertainty_monotone():
    run = RunConfig(capacity_mode="buildout", alphas=(0.95,), uncertainty_growth=0.0)
    rows = run_penetration_sweep(run)
    committed = [r["committed_mw"] for r in rows]
    assert all(b <= a + 1e-9 for a, b in zip(committed, committed[1:]))


def test_sweep_rows_are_deterministic():
    run = RunConfig(capacity_mode="buildout", alphas=(0.95,))
    a = run_penetration_sweep(run)
    b = run_penetration_sweep(run)
    assert a == b


def test_infeasible_point_becomes_diagnostic(tmp_path):
    # a tiny fleet cannot carry the default load; rows are skipped, not fatal
    path = tmp_path / "fleet.csv"
    path.write_text(
        "name,ask_price,p_min,p_max,rp_max,ramp_max,hot_start,cold_start,no_load_cost\n"
        "a,5,0,10,10,10,0,0,0\n")
    run = RunConfig(fleet_source=str(path), capacity_mode="tracking",
                    penetrations=(0.0,), alphas=(0.5, 0.9))
    notes: list[str] = []
    rows = run_alpha_sweep(run, diagnostics=notes)
    assert rows == [] and len(notes) == 2


# ---------------------------------------------------------------------------
# CSV emission


def test_emit_csv_empty_rows_header_only(tmp_path):
    path = emit_csv([], tmp_path / "x.csv", ("a", "b"))
    assert path.read_text() == "a,b\n"


def test_emit_csv_one_row(tmp_path):
    path = emit_csv([{"a": 1.0, "b": 2}], tmp_path / "x.csv", ("a", "b"))
    assert path.read_text() == "a,b\n1.000000,2\n"


def test_emit_csv_bit_identical(tmp_path):
    rows = [{"a": 0.1234567, "b": 7}, {"a": 2.5, "b": 8}]
    p1 = emit_csv(rows, tmp_path / "x1.csv", ("a", "b"))
    p2 = emit_csv(rows, tmp_path / "x2.csv", ("a", "b"))
    assert p1.read_bytes() == p2.read_bytes()


def test_emit_csv_schema_mismatch(tmp_path):
    with pytest.raises(ConfigurationError):
        emit_csv([{"a": 1.0}], tmp_path / "x.csv", ("a", "b"))


# ---------------------------------------------------------------------------
# CLI


def test_cli_sweep_alpha_writes_csv(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["sweep-alpha", "--alpha", "0.5,0.9",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "alpha_sweep.csv").read_text().splitlines()
    assert lines[0] == ",".join(ALPHA_SWEEP_COLUMNS)
    assert len(lines) == 3


def test_cli_sweep_penetration_writes_csv(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["sweep-penetration", "--penetration", "0.0,0.5",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "penetration_sweep.csv").read_text().splitlines()
    assert lines[0] == ",".join(PENETRATION_SWEEP_COLUMNS)
    assert len(lines) == 3


def test_cli_end_to_end_determinism(tmp_path):
    runner = CliRunner()
    args = ["sweep-penetration", "--seed", "9", "--scenarios", "100"]
    r1 = runner.invoke(main, args + ["--out", str(tmp_path / "a")])
    r2 = runner.invoke(main, args + ["--out", str(tmp_path / "b")])
    assert r1.exit_code == 0 and r2.exit_code == 0
    a = (tmp_path / "a" / "penetration_sweep.csv").read_bytes()
    b = (tmp_path / "b" / "penetration_sweep.csv").read_bytes()
    assert a == b


def test_cli_empty_alpha_grid_is_usage_error(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["sweep-alpha", "--alpha", "", "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_cli_bad_fleet_is_config_error(tmp_path):
    fleet = tmp_path / "fleet.csv"
    fleet.write_text("wrong,header\n")
    runner = CliRunner()
    result = runner.invoke(main, ["sweep-alpha", "--fleet", str(fleet),
                                  "--out", str(tmp_path)])
    assert result.exit_code == 2


def test_cli_infeasible_single_run_exits_3(tmp_path):
    fleet = tmp_path / "fleet.csv"
    fleet.write_text(
        "name,ask_price,p_min,p_max,rp_max,ramp_max,hot_start,cold_start,no_load_cost\n"
        "a,5,0,10,10,10,0,0,0\n")
    runner = CliRunner()
    result = runner.invoke(main, ["settle", "--fleet", str(fleet),
                                  "--out", str(tmp_path)])
    assert result.exit_code == 3


def test_cli_dispatch_uncongested(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["dispatch", "--alpha", "0.9",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "dispatch.csv").read_text().splitlines()
    assert lines[0] == "generator,committed_mw,ask_price,lmp"
    assert len(lines) == 8  # 7 units


def test_cli_dispatch_radial(tmp_path):
    # modest loads keep the feeder inside each unit's reach
    runner = CliRunner()
    result = runner.invoke(main, [
        "dispatch", "--alpha", "0.9", "--line-limit", "80",
        "--load-mean", "150,80,50", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "dispatch.csv").read_text().splitlines()
    assert len(lines) == 4  # 3 feeder buses


def test_cli_dispatch_radial_default_load_infeasible(tmp_path):
    # the default aggregate load exceeds what bus 0's unit can serve alone
    runner = CliRunner()
    result = runner.invoke(main, [
        "dispatch", "--alpha", "0.9", "--line-limit", "80", "--out", str(tmp_path)])
    assert result.exit_code == 3


def test_cli_settle_writes_settlement(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["settle", "--alpha", "0.9", "--cost-recovery", "1",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "settlement.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[:4] == ["run_id", "alpha", "penetration", "CR"]
    assert len(lines) == 2


def test_cli_settle_radial(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["settle", "--alpha", "0.9", "--line-limit", "80",
                                  "--load-mean", "150,80,50", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "settlement.csv").read_text().splitlines()
    assert len(lines) == 2
