import csv
import json

import pytest
import yaml

from nsaclab.cli import EXIT_BREACH, EXIT_INVALID, EXIT_NO_SOLUTION, build_parser, main

V_M = 2.2437013755407387
U_M = 0.882916597708717


@pytest.fixture
def runs(tmp_path, monkeypatch):
    monkeypatch.setenv("NSAC_RUNS", str(tmp_path))
    return tmp_path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_riemann_reference_matches_frozen_values(runs, capsys):
    assert main(["riemann"]) == 0
    out = capsys.readouterr().out
    assert f"v_m = {V_M!r}" in out and f"u_m = {U_M!r}" in out
    summary = json.loads((runs / "reference" / "summary.json").read_text())
    assert summary["v_m"] == V_M and summary["u_m"] == U_M
    rows = read_csv(runs / "reference" / "riemann.csv")
    assert list(rows[0]) == ["xi", "V", "U", "Theta", "S"] and len(rows) == 201
    resolved = yaml.safe_load((runs / "reference" / "config.resolved").read_text())
    assert resolved["derived"]["v_m"] == V_M


def test_riemann_zero_strength(runs, capsys):
    code = main(["riemann", "--name", "flat", "--set", "ends.v_plus=1", "--set", "ends.u_plus=0"])
    assert code == 0
    out = capsys.readouterr().out
    assert "constant state" in out and out.count("(empty)") == 2
    rows = read_csv(runs / "flat" / "riemann.csv")
    assert {r["V"] for r in rows} == {"1.0"}


def test_riemann_shock_data_exits_cleanly(runs, capsys):
    assert main(["riemann", "--set", "ends.u_plus=-2"]) == EXIT_NO_SOLUTION
    assert "shock" in capsys.readouterr().err


@pytest.mark.parametrize("args", [["--set", "gas.gamma=0.5"], ["--set", "bogus=1"],
                                  ["--set", "ends.theta_plus=5"], ["--preset", "missing"]])
def test_invalid_input_exit_code(runs, args, capsys):
    assert main(["riemann", *args]) == EXIT_INVALID
    assert capsys.readouterr().err.startswith("error:")


def test_profile_snapshots_are_deterministic(runs):
    args = ["profile", "--t", "0", "10", "100", "--samples", "21"]
    assert main(args) == 0
    first = (runs / "reference" / "profile.csv").read_bytes()
    assert main(args) == 0
    assert (runs / "reference" / "profile.csv").read_bytes() == first
    rows = read_csv(runs / "reference" / "profile.csv")
    assert len(rows) == 63
    assert list(rows[0]) == ["t", "x", "V", "U", "Theta", "S", "V_x", "U_x", "g", "q", "r"]
    assert sorted({float(r["t"]) for r in rows}) == [0.0, 10.0, 100.0]


def test_simulate_equilibrium(runs):
    assert main(["simulate", "--preset", "equilibrium"]) == 0
    d = runs / "equilibrium"
    summary = json.loads((d / "summary.json").read_text())
    assert summary["status"] == "ok" and summary["t_final"] == 1.0
    diag = read_csv(d / "diagnostics.csv")
    assert [float(r["t"]) for r in diag] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert all(float(r["E"]) == 0.0 for r in diag)
    last = read_csv(d / "fields_000004.csv")
    assert list(last[0]) == ["t", "x", "v", "u", "theta", "chi", "s", "mu"]
    assert {r["v"] for r in last} == {"1.0"}
    resolved = yaml.safe_load((d / "config.resolved").read_text())
    for key in ("K_q", "t0", "dt0", "delta"):
        assert key in resolved["derived"]


def test_simulate_outputs_repeat_byte_for_byte(runs):
    assert main(["simulate", "--name", "a"]) == 0
    assert main(["simulate", "--name", "b"]) == 0
    files = sorted(p.name for p in (runs / "a").glob("*.csv"))
    assert files == sorted(p.name for p in (runs / "b").glob("*.csv"))
    for name in files:
        assert (runs / "a" / name).read_bytes() == (runs / "b" / name).read_bytes()


def test_simulate_breach_writes_partial_output(runs):
    code = main(["simulate", "--name", "unstable", "--set", "solver.cfl_parabolic=1.0",
                 "--set", "solver.cfl_hyperbolic=1.0", "--set", "grid.n_cells=128",
                 "--set", "solver.t_end=20"])
    assert code == EXIT_BREACH
    d = runs / "unstable"
    summary = json.loads((d / "summary.json").read_text())
    assert summary["status"] == "positivity_breach"
    assert summary["aborted"]["field"] in ("v", "theta")
    assert 0 < summary["t_final"] < 20
    assert read_csv(d / "diagnostics.csv")
    assert len(list(d.glob("fields_*.csv"))) >= 2


def test_simulate_nonpositive_initial_data(runs):
    assert main(["simulate", "--set", "perturbation.v.amplitude=-5"]) == EXIT_BREACH


def test_sweep_runs_each_value(runs, capsys):
    code = main(["sweep", "--param", "gas.gamma=1.05,1.2", "--set", "solver.t_end=0.5",
                 "--set", "grid.n_cells=64"])
    assert code == 0
    out = capsys.readouterr().out
    for name in ("quick_gas-gamma_1.05", "quick_gas-gamma_1.2"):
        assert f"{name}: ok" in out
        assert (runs / name / "summary.json").exists()


def test_sweep_requires_values(runs):
    assert main(["sweep", "--param", "gas.gamma"]) == EXIT_INVALID


def test_help_documents_csv_columns(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    text = capsys.readouterr().out
    for token in ("riemann.csv", "profile.csv", "fields_<k>.csv", "diagnostics.csv", "NSAC_RUNS"):
        assert token in text


def test_subcommands_listed():
    parser = build_parser()
    for cmd in ("riemann", "profile", "simulate", "verify", "sweep"):
        assert parser.parse_args([cmd, "quick"] if cmd == "verify" else
                                 [cmd, "--param", "a=1"] if cmd == "sweep" else [cmd]).command == cmd
