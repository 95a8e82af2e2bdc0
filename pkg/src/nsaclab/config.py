"""Experiment configuration: YAML file with nested blocks plus dotted overrides."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .gas import GasModel
from .profile import SmoothingParams, WaveProfile
from .riemann import EndStates, RiemannData, solve_intermediate
from .solver import Grid, Perturbation, PerturbationShape, SolverConfig

DEFAULTS = {
    "name": "experiment",
    "seed": 0,
    "gas": {"R": 1.0, "gamma": 1.4, "nu": 1.0, "kappa": 1.0, "A": None},
    "ends": {"v_minus": 1.0, "u_minus": 0.0, "theta_minus": 1.0,
             "v_plus": 2.0, "u_plus": 1.0, "theta_plus": None},
    "smoothing": {"eps_w": 0.1, "q_exp": 2.0},
    "grid": {"n_cells": 1024, "half_width": None, "margin": 1.2, "farfield_tol": 1e-6},
    "solver": {"t_end": 1.0, "cfl_hyperbolic": 0.5, "cfl_parabolic": 0.4,
               "output_dt": None, "with_phase_field": True},
    "perturbation": {f: {"amplitude": 0.0, "width": 1.0, "center": 0.0, "shape": "sech2"}
                     for f in ("v", "u", "theta", "chi")},
    "diagnostics": {"probes": [], "chi_tol": 0.01, "energy_factor": 10.0,
                    "snapshot_every": 0, "profile_times": [0.0, 10.0, 100.0], "samples": 401},
    "mms": {"x_min": 0.0, "x_max": 10.0, "levels": [256, 512, 1024], "dt_factor": 0.2,
            "min_order": 1.9},
}


def _merge(base, over, path=""):
    out = copy.deepcopy(base)
    for key, val in (over or {}).items():
        if key not in base:
            raise ValueError(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict) and base[key]:
            if not isinstance(val, dict):
                raise ValueError(f"config key {path + key!r} must be a mapping")
            out[key] = _merge(base[key], val, path + key + ".")
        else:
            out[key] = val
    return out


def apply_override(raw: dict, assignment: str):
    """Apply ``block.key=value``; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ValueError(f"override {assignment!r} must look like key=value")
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = raw
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ValueError(f"unknown config key {key!r}")
        node = node[p]
    last = parts[-1]
    if last not in node:
        raise ValueError(f"unknown config key {key!r}")
    value = yaml.safe_load(text)
    if isinstance(node[last], dict) and node[last]:
        if not isinstance(value, dict):
            raise ValueError(f"config key {key!r} is a block and needs a mapping")
        value = _merge(node[last], value, key.strip() + ".")
    node[last] = value


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, data: dict, overrides=()):
        raw = _merge(DEFAULTS, data)
        for item in overrides:
            apply_override(raw, item)
        cfg = cls(raw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, overrides=()):
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        return cls.from_dict(data, overrides)

    @classmethod
    def preset(cls, name, overrides=()):
        text = resources.files("nsaclab").joinpath("presets", f"{name}.yaml").read_text()
        return cls.from_dict(yaml.safe_load(text) or {}, overrides)

    @property
    def name(self):
        return str(self.raw["name"])

    # -- builders -----------------------------------------------------------

    def gas(self) -> GasModel:
        return GasModel(**self.raw["gas"])

    def ends(self) -> EndStates:
        e = dict(self.raw["ends"])
        gas = self.gas()
        if e.get("theta_plus") is None:
            return EndStates.entropy_matched(gas, e["v_minus"], e["u_minus"], e["theta_minus"],
                                             e["v_plus"], e["u_plus"])
        ends = EndStates(**e)
        ends.check_entropy(gas)
        return ends

    def smoothing(self) -> SmoothingParams:
        return SmoothingParams(**self.raw["smoothing"])

    def solver(self) -> SolverConfig:
        return SolverConfig(**self.raw["solver"])

    def perturbation(self) -> Perturbation:
        return Perturbation(**{k: PerturbationShape(**v) for k, v in self.raw["perturbation"].items()})

    def riemann(self) -> RiemannData:
        return solve_intermediate(self.gas(), self.ends())

    def profile(self, riemann: RiemannData | None = None) -> WaveProfile:
        return WaveProfile(self.gas(), riemann or self.riemann(), self.smoothing())

    def grid(self, profile: WaveProfile | None = None) -> Grid:
        g = self.raw["grid"]
        half = g["half_width"]
        if half is None:
            prof = profile or self.profile()
            half = g["margin"] * prof.farfield_halfwidth(self.raw["solver"]["t_end"], g["farfield_tol"])
        return Grid.symmetric(float(half), int(g["n_cells"]))

    def validate(self):
        """Build every block once so bad input fails before any computation."""
        try:
            self._validate()
        except TypeError as exc:
            raise ValueError(f"invalid config value: {exc}") from exc

    def _validate(self):
        self.gas()
        self.ends()
        self.smoothing()
        self.solver()
        self.perturbation()
        g = self.raw["grid"]
        if int(g["n_cells"]) < 16:
            raise ValueError("grid.n_cells must be at least 16")
        if g["half_width"] is not None and not float(g["half_width"]) > 0:
            raise ValueError("grid.half_width must be positive")
        if not float(g["margin"]) >= 1.0:
            raise ValueError("grid.margin must be at least 1")
        d = self.raw["diagnostics"]
        if int(d["snapshot_every"]) < 0 or int(d["samples"]) < 2:
            raise ValueError("diagnostics.snapshot_every must be >= 0 and samples >= 2")
        if not 0 <= float(d["chi_tol"]) < 1:
            raise ValueError("diagnostics.chi_tol must lie in [0, 1)")
        m = self.raw["mms"]
        if not float(m["x_max"]) > float(m["x_min"]) or len(m["levels"]) < 2:
            raise ValueError("mms block needs x_max > x_min and at least two levels")

    def resolved(self, riemann=None, grid=None, dt0=None):
        """Config echo with derived quantities filled in."""
        out = copy.deepcopy(self.raw)
        rd = riemann or self.riemann()
        sp = self.smoothing()
        ends = rd.ends
        out["ends"]["theta_plus"] = ends.theta_plus
        out["derived"] = {
            "K_q": sp.K_q,
            "t0": sp.t0,
            "delta": rd.delta,
            "v_m": rd.v_m,
            "u_m": rd.u_m,
            "theta_m": rd.theta_m,
            "s_bar": rd.s_bar,
            "fan1": list(rd.fan1),
            "fan3": list(rd.fan3),
            "cv": self.gas().cv,
        }
        if grid is not None:
            out["derived"].update({"x_min": grid.x_min, "x_max": grid.x_max, "dx": grid.dx})
        if dt0 is not None:
            out["derived"]["dt0"] = dt0
        return out


def dump_yaml(data, path: Path):
    with open(path, "w") as fh:
        yaml.safe_dump(_plain(data), fh, sort_keys=True)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj

