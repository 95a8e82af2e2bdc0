import pytest
import yaml

from nsaclab import NoTwoRarefactionSolution
from nsaclab.config import DEFAULTS, ExperimentConfig, apply_override, dump_yaml

PRESETS = ["reference", "stability", "equilibrium", "quick", "mms"]


@pytest.mark.parametrize("name", PRESETS)
def test_presets_load_and_validate(name):
    cfg = ExperimentConfig.preset(name)
    assert cfg.name == name
    cfg.gas(), cfg.ends(), cfg.solver(), cfg.perturbation()


def test_stability_preset_matches_intended_setup():
    cfg = ExperimentConfig.preset("stability")
    gas = cfg.gas()
    assert gas.gamma == 1.05
    pert = cfg.perturbation()
    assert pert.theta.amplitude == pytest.approx((gas.gamma - 1) ** 0.5, rel=1e-15)
    assert pert.v.shape == pert.u.shape == pert.theta.shape == "dsech2"
    ends = cfg.ends()
    assert ends.entropies(gas)[0] == pytest.approx(ends.entropies(gas)[1], abs=1e-14)
    assert len(cfg.raw["diagnostics"]["probes"]) >= 3


def test_overrides_parse_yaml_values():
    cfg = ExperimentConfig.preset("quick", ["gas.gamma=1.2", "grid.n_cells=64",
                                            "perturbation.v.shape=bump", "diagnostics.probes=[1.5, 2.5]"])
    assert cfg.gas().gamma == 1.2
    assert cfg.raw["grid"]["n_cells"] == 64
    assert cfg.perturbation().v.shape == "bump"
    assert cfg.raw["diagnostics"]["probes"] == [1.5, 2.5]


@pytest.mark.parametrize("bad", ["gas.gama=1.2", "nope=1", "gas=1", "grid.n_cells"])
def test_bad_overrides_rejected(bad):
    with pytest.raises(ValueError):
        ExperimentConfig.preset("quick", [bad])


@pytest.mark.parametrize(
    "data",
    [
        {"gas": {"gamma": 0.9}},
        {"gas": {"nu": -1.0}},
        {"grid": {"n_cells": 8}},
        {"grid": {"margin": 0.5}},
        {"solver": {"cfl_parabolic": 2.0}},
        {"perturbation": {"v": {"shape": "triangle"}}},
        {"smoothing": {"q_exp": 1.0}},
        {"diagnostics": {"chi_tol": 1.5}},
        {"mms": {"levels": [64]}},
        {"unknown_block": {}},
        {"gas": {"R": 1.0, "cp": 2.0}},
        {"gas": {"gamma": "steam"}},
        {"grid": {"n_cells": [1, 2]}},
    ],
)
def test_invalid_config_rejected_before_compute(data):
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict(data)


def test_entropy_mismatch_rejected():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"ends": {"theta_plus": 3.0}})


def test_explicit_matched_temperature_accepted():
    auto = ExperimentConfig.from_dict({})
    theta_plus = auto.ends().theta_plus
    cfg = ExperimentConfig.from_dict({"ends": {"theta_plus": theta_plus}})
    assert cfg.ends().theta_plus == theta_plus


def test_shock_data_fails_at_riemann_solve():
    cfg = ExperimentConfig.from_dict({"ends": {"u_plus": -3.0}})
    with pytest.raises(NoTwoRarefactionSolution):
        cfg.riemann()


def test_auto_half_width_covers_far_field():
    cfg = ExperimentConfig.preset("stability", ["grid.n_cells=256"])
    prof = cfg.profile()
    grid = cfg.grid(prof)
    assert grid.x_max == pytest.approx(1.2 * prof.farfield_halfwidth(100.0))
    fixed = ExperimentConfig.preset("quick").grid()
    assert fixed.x_max == 40.0


def test_resolved_echo_contains_derived_constants(tmp_path):
    cfg = ExperimentConfig.preset("reference")
    rd = cfg.riemann()
    grid = cfg.grid()
    echo = cfg.resolved(rd, grid=grid, dt0=0.01)
    for key in ("K_q", "t0", "delta", "v_m", "u_m", "dt0", "dx"):
        assert key in echo["derived"]
    assert echo["derived"]["v_m"] == rd.v_m
    assert echo["ends"]["theta_plus"] == rd.ends.theta_plus
    path = tmp_path / "config.resolved"
    dump_yaml(echo, path)
    back = yaml.safe_load(path.read_text())
    assert back["derived"]["K_q"] == pytest.approx(4 / 3.141592653589793, rel=1e-12)
    # the echo reloads as a config once the derived block is dropped
    back.pop("derived")
    assert ExperimentConfig.from_dict(back).riemann().v_m == rd.v_m


def test_load_from_file(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("name: mine\ngas: {gamma: 1.3}\n")
    cfg = ExperimentConfig.load(path, ["grid.n_cells=32"])
    assert cfg.name == "mine" and cfg.gas().gamma == 1.3 and cfg.raw["grid"]["n_cells"] == 32


def test_defaults_are_not_mutated():
    before = yaml.safe_dump(DEFAULTS)
    raw = ExperimentConfig.from_dict({}).raw
    apply_override(raw, "gas.gamma=1.7")
    assert yaml.safe_dump(DEFAULTS) == before
