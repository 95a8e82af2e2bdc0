"""Command-line front end: ``nsaclab {riemann,profile,simulate,verify,sweep}``.

Outputs go to ``$NSAC_RUNS/<name>/`` (default ``./runs/<name>/``)::

    config.resolved    YAML echo of the config with derived constants
    riemann.csv        xi, V, U, Theta, S              (riemann)
    profile.csv        t, x, V, U, Theta, S, V_x, U_x, g, q, r   (profile)
    fields_<k>.csv     t, x, v, u, theta, chi, s, mu   (simulate, one per snapshot)
    diagnostics.csv    one row per output tick         (simulate)
    summary.json       run status and headline numbers

Exit status is 0 on success, 2 for invalid input, 3 when no
two-rarefaction solution exists, 4 on a positivity breach and 1 when
``verify`` has a failing criterion.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, dump_yaml
from .diagnostics import BoundsMonitor, Diagnostics
from .errors import NoTwoRarefactionSolution, NonConvergence, PositivityBreach
from .solver import chemical_potential, initial_state, profile_boundary, run, stable_dt
from .verify import _jsonable, run_suite, write_csv

log = logging.getLogger("nsaclab")

EXIT_INVALID = 2
EXIT_NO_SOLUTION = 3
EXIT_BREACH = 4

COLUMNS = """\
CSV columns:
  riemann.csv      xi, V, U, Theta, S (similarity coordinate and Riemann solution)
  profile.csv      t, x, V, U, Theta, S, V_x, U_x, g, q, r (smooth wave and its residuals)
  fields_<k>.csv   t, x, v, u, theta, chi, s, mu (solution snapshot, entropy, chemical potential)
  diagnostics.csv  t, E, D, int_D, entropy_excess, convexity, convexity_min, energy_C,
                   energy_norms, <field>_{L2,H1,H2,Linf} for phi/psi/zeta/xi, zeta_weighted,
                   running extrema v/theta/chi min/max, n_flags
Environment:
  NSAC_RUNS        output root (default ./runs)
"""


def output_root() -> Path:
    return Path(os.environ.get("NSAC_RUNS", "runs"))


def _load(args) -> ExperimentConfig:
    overrides = list(args.set or [])
    if args.name:
        overrides.append(f"name={args.name}")
    if args.config:
        return ExperimentConfig.load(args.config, overrides)
    return ExperimentConfig.preset(args.preset, overrides)


def _run_dir(cfg: ExperimentConfig) -> Path:
    d = output_root() / cfg.name
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(_jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands --------------------------------------------------------------


def cmd_riemann(args):
    cfg = _load(args)
    rd = cfg.riemann()
    out = _run_dir(cfg)
    dump_yaml(cfg.resolved(rd), out / "config.resolved")
    lo, hi = rd.fan1[0], rd.fan3[1]
    pad = max(0.25 * (hi - lo), 0.5)
    xi = np.linspace(lo - pad, hi + pad, args.samples)
    write_csv(out / "riemann.csv", ("xi", "V", "U", "Theta", "S"), zip(xi, *rd.evaluate(xi)))
    if rd.delta == 0.0:
        print("constant state: no waves")
    print(f"v_m = {rd.v_m!r}")
    print(f"u_m = {rd.u_m!r}")
    print(f"theta_m = {rd.theta_m!r}")
    print(f"1-fan speeds: [{rd.fan1[0]!r}, {rd.fan1[1]!r}]" + (" (empty)" if rd.trivial1 else ""))
    print(f"3-fan speeds: [{rd.fan3[0]!r}, {rd.fan3[1]!r}]" + (" (empty)" if rd.trivial3 else ""))
    _write_json(out / "summary.json", {"status": "ok", "v_m": rd.v_m, "u_m": rd.u_m,
                                       "theta_m": rd.theta_m, "fan1": rd.fan1, "fan3": rd.fan3,
                                       "delta": rd.delta})
    return 0


def cmd_profile(args):
    cfg = _load(args)
    rd = cfg.riemann()
    prof = cfg.profile(rd)
    out = _run_dir(cfg)
    d = cfg.raw["diagnostics"]
    times = args.t if args.t else d["profile_times"]
    samples = args.samples or d["samples"]
    dump_yaml(cfg.resolved(rd), out / "config.resolved")
    rows = []
    for t in times:
        half = cfg.raw["grid"]["half_width"] or prof.farfield_halfwidth(float(t))
        x = np.linspace(-half, half, samples)
        st = prof.evaluate(float(t), x)
        res = prof.residuals(float(t), x, st)
        tt = np.full(x.shape, float(t))
        rows.extend(zip(tt, x, st.V, st.U, st.Theta, st.S, st.V_x, st.U_x, res.g, res.q, res.r))
    write_csv(out / "profile.csv", ("t", "x", "V", "U", "Theta", "S", "V_x", "U_x", "g", "q", "r"), rows)
    _write_json(out / "summary.json", {"status": "ok", "times": [float(t) for t in times],
                                       "samples": samples})
    print(f"wrote {out / 'profile.csv'}")
    return 0


def write_fields(path, gas, grid, state):
    mu = chemical_potential(gas, grid, state)
    t = np.full(grid.x.shape, state.t)
    write_csv(path, ("t", "x", "v", "u", "theta", "chi", "s", "mu"),
              zip(t, grid.x, state.v, state.u, state.theta, state.chi, state.entropy(gas), mu))


def simulate(cfg: ExperimentConfig, out: Path):
    """Run one experiment into ``out``; returns (exit code, summary dict)."""
    gas = cfg.gas()
    rd = cfg.riemann()
    prof = cfg.profile(rd)
    grid = cfg.grid(prof)
    pert = cfg.perturbation()
    warn = pert.temperature_warning(gas)
    if warn:
        log.warning(warn)
    init = initial_state(grid, prof, pert)
    solver_cfg = cfg.solver()
    dt0 = stable_dt(gas, grid, init, solver_cfg)
    dump_yaml(cfg.resolved(rd, grid, dt0), out / "config.resolved")
    d = cfg.raw["diagnostics"]
    diag = Diagnostics(gas, grid, prof, BoundsMonitor(chi_tol=d["chi_tol"]))
    every = int(d["snapshot_every"])
    tick = {"k": 0, "last": None, "written": -1}

    def on_output(state):
        diag(state)
        if tick["k"] == 0 or (every and tick["k"] % every == 0):
            write_fields(out / f"fields_{tick['k']:06d}.csv", gas, grid, state)
            tick["written"] = tick["k"]
        tick["last"] = state
        tick["k"] += 1

    status, code, n_steps, aborted = "ok", 0, 0, None
    try:
        res = run(gas, grid, solver_cfg, init, profile_boundary(prof, grid), on_output=on_output)
        n_steps = res.n_steps
    except PositivityBreach as exc:
        status, code, n_steps = "positivity_breach", EXIT_BREACH, exc.partial.n_steps
        aborted = {"field": exc.field, "index": exc.index, "t": exc.t}
    last = tick["last"]
    # the last tick reached is always written, also after a breach
    if last is not None and tick["written"] != tick["k"] - 1:
        write_fields(out / f"fields_{tick['k'] - 1:06d}.csv", gas, grid, last)
    rows = [r.row() for r in diag.reports]
    if rows:
        header = list(rows[0].keys())
        write_csv(out / "diagnostics.csv", header, [[r[k] for k in header] for r in rows])
    summary = {
        "status": status, "n_steps": n_steps, "t_final": last.t if last is not None else 0.0,
        "dt0": dt0, "n_cells": grid.n_cells, "dx": grid.dx, "aborted": aborted,
        "flags": [f for r in diag.reports for f in r.flags],
        "E0": rows[0]["E"] if rows else None,
        "max_E_plus_int_D": max(r["E"] + r["int_D"] for r in rows) if rows else None,
    }
    _write_json(out / "summary.json", summary)
    return code, summary


def cmd_simulate(args):
    cfg = _load(args)
    out = _run_dir(cfg)
    code, summary = simulate(cfg, out)
    print(f"{summary['status']}: {summary['n_steps']} steps to t = {summary['t_final']:g}; output in {out}")
    return code


def cmd_verify(args):
    out = Path(args.out) if args.out else output_root() / f"verify_{args.level}"
    verdict = run_suite(args.level, out, compare=Path(args.compare) if args.compare else None,
                        workers=args.workers)
    print(f"verdict: {'PASS' if verdict['passed'] else 'FAIL'} ({out / 'verdict.json'})")
    return 0 if verdict["passed"] else 1


def _sweep_one(item):
    raw_cfg, name = item
    cfg = ExperimentConfig.from_dict(raw_cfg, [f"name={name}"])
    out = output_root() / name
    out.mkdir(parents=True, exist_ok=True)
    try:
        code, summary = simulate(cfg, out)
    except (NoTwoRarefactionSolution, NonConvergence, ValueError) as exc:
        return name, EXIT_INVALID, str(exc)
    return name, code, summary["status"]


def cmd_sweep(args):
    base = _load(args)
    key, _, values = args.param.partition("=")
    if not values:
        raise ValueError("--param must look like key=v1,v2,...")
    items = []
    for val in values.split(","):
        cfg = ExperimentConfig.from_dict(base.raw, [f"{key}={val}"])
        items.append((cfg.raw, f"{base.name}_{key.replace('.', '-')}_{val}"))
    worst = 0
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        for name, code, status in pool.map(_sweep_one, items):
            print(f"{name}: {status}")
            worst = max(worst, code)
    return worst


# -- parser -------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nsaclab", description="Composite rarefaction waves for the 1-D NSAC system.",
        epilog=COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, preset="reference"):
        p.add_argument("--config", help="YAML experiment file")
        p.add_argument("--preset", default=preset, help=f"shipped preset (default {preset})")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key, e.g. --set gas.gamma=1.2 (repeatable)")
        p.add_argument("--name", help="run name (output directory)")
        return p

    p = with_config(sub.add_parser("riemann", help="solve the Riemann problem, write riemann.csv",
                                   epilog=COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter))
    p.add_argument("--samples", type=int, default=201)
    p.set_defaults(func=cmd_riemann)

    p = with_config(sub.add_parser("profile", help="evaluate the smooth wave, write profile.csv",
                                   epilog=COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter))
    p.add_argument("--t", type=float, nargs="+", help="snapshot times")
    p.add_argument("--samples", type=int, help="points per snapshot")
    p.set_defaults(func=cmd_profile)

    p = with_config(sub.add_parser("simulate", help="run the solver with diagnostics",
                                   epilog=COLUMNS, formatter_class=argparse.RawDescriptionHelpFormatter),
                    preset="quick")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the acceptance property suite")
    p.add_argument("level", choices=("quick", "full"))
    p.add_argument("--out", help="output directory (default $NSAC_RUNS/verify_<level>)")
    p.add_argument("--compare", help="earlier verify directory; adds the CSV determinism check")
    p.add_argument("--workers", type=int, default=2)
    p.set_defaults(func=cmd_verify)

    p = with_config(sub.add_parser("sweep", help="simulate over a list of values of one key"),
                    preset="quick")
    p.add_argument("--param", required=True, metavar="KEY=V1,V2,...")
    p.add_argument("--workers", type=int, default=2)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NoTwoRarefactionSolution as exc:
        print(f"error: no two-rarefaction solution: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except PositivityBreach as exc:
        # raised here only when the initial data itself is nonpositive
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREACH
    except (ValueError, TypeError, FileNotFoundError, NonConvergence) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
