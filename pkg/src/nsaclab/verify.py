"""Property suite behind ``nsaclab verify``.

Every criterion function returns a :class:`CriterionResult` and writes its
numbers to a CSV in the output directory.  CSVs hold only computed values
(never timings) so two runs of the same level are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .diagnostics import BoundsMonitor, Diagnostics, JiangHistory, jiang_check
from .errors import InsufficientHistory, PositivityBreach
from .gas import GasModel
from .mms import Manufactured
from .profile import SmoothingParams, WaveProfile, burgers_eval, t_sup_wx
from .riemann import EndStates, solve_intermediate
from .solver import (
    FieldState,
    Grid,
    SolverConfig,
    initial_state,
    profile_boundary,
    run,
    stable_dt,
    step,
)

LEVELS = {
    "quick": {"mms": (128, 256, 512), "stability": ((512, 0.25), (1024, 0.25)),
              "equilibrium_n": 64, "reduction_n": 256},
    "full": {"mms": (256, 512, 1024), "stability": ((2048, 0.25), (4096, 0.125)),
             "equilibrium_n": 256, "reduction_n": 1024},
}


@dataclass
class CriterionResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    runtime: float = 0.0


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.runtime = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- 1. thermodynamic closure -------------------------------------------------


@_timed
def c1_thermodynamics(out: Path, seed=0) -> CriterionResult:
    """Entropy/temperature round trip on random states; p_tilde_v finite-difference order."""
    rng = np.random.default_rng(seed)
    n = 1000
    gamma = rng.uniform(1.01, 1.9, n)
    A = rng.uniform(0.5, 2.0, n)
    v = np.exp(rng.uniform(-3, 3, n))
    theta = np.exp(rng.uniform(-3, 3, n))
    worst = 0.0
    for i in range(n):
        g = GasModel(R=1.0, gamma=float(gamma[i]), A=float(A[i]))
        s = g.entropy_from_vtheta(v[i], theta[i])
        worst = max(worst, abs(g.theta_from_vs(v[i], s) - theta[i]) / theta[i])
    g = GasModel(gamma=1.4)
    vs = np.linspace(0.5, 3.0, 26)
    s = 0.3
    exact = g.p_tilde_v(vs, s)
    rows, errs = [], []
    for h in (1e-2, 5e-3, 2.5e-3):
        fd = (g.p_tilde(vs + h, s) - g.p_tilde(vs - h, s)) / (2 * h)
        errs.append(float(np.max(np.abs(fd - exact))))
        rows.append((h, errs[-1]))
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(len(errs) - 1)]
    write_csv(out / "c1_thermo.csv", ("h", "max_abs_error"), rows)
    passed = worst <= 1e-12 and min(orders) >= 1.9
    return CriterionResult("c1_thermodynamics", passed,
                           {"roundtrip_max_rel_error": worst, "fd_orders": orders})


# -- 2. Riemann construction --------------------------------------------------


@_timed
def c2_riemann(out: Path) -> CriterionResult:
    """Intermediate-state residual, fan self-similarity, edge continuity, zero-strength case."""
    g = GasModel(gamma=1.4)
    rd = solve_intermediate(g, EndStates.entropy_matched(g, 1.0, 0.0, 1.0, 2.0, 1.0))
    s = rd.s_bar
    worst_lam = 0.0
    rows = []
    for fam, (a, b) in ((1, rd.fan1), (3, rd.fan3)):
        xi = np.linspace(a, b, 52)[1:-1]
        V, U, Th, S = rd.evaluate(xi)
        worst_lam = max(worst_lam, float(np.max(np.abs(g.lam(fam, V, s) - xi))))
        rows.extend(zip(xi, V, U, Th, S))
    jumps = 0.0
    for edge in (*rd.fan1, *rd.fan3):
        lo = rd.evaluate(np.array([edge * (1 - 1e-13) - 1e-13]))
        hi = rd.evaluate(np.array([edge * (1 + 1e-13) + 1e-13]))
        jumps = max(jumps, max(abs(a[0] - b[0]) for a, b in zip(lo, hi)))
    flat = solve_intermediate(g, EndStates(1.0, 0.5, 1.0, 1.0, 0.5, 1.0))
    V, U, Th, _ = flat.evaluate(np.linspace(-2, 2, 9))
    flat_exact = (flat.delta == 0.0 and np.all(V == 1.0) and np.all(U == 0.5) and np.all(Th == 1.0))
    write_csv(out / "c2_riemann.csv", ("xi", "V", "U", "Theta", "S"), rows)
    passed = rd.residual <= 1e-12 and worst_lam <= 1e-12 and jumps <= 1e-9 and bool(flat_exact)
    return CriterionResult("c2_riemann", passed, {
        "v_m": rd.v_m, "u_m": rd.u_m, "residual": rd.residual, "self_similarity": worst_lam,
        "edge_jump": jumps, "zero_strength_exact": bool(flat_exact)})


# -- 3. profile properties ----------------------------------------------------


def _riemann_distance(prof: WaveProfile, t):
    rd = prof.riemann
    lo = rd.fan1[0] - 1.0
    hi = rd.fan3[1] + 1.0
    xi = np.linspace(lo, hi, 20001)
    x = xi * t
    st = prof.evaluate(t, x)
    V, U, Th, _ = rd.evaluate(xi)
    return float(max(np.max(np.abs(st.V - V)), np.max(np.abs(st.U - U)), np.max(np.abs(st.Theta - Th))))


@_timed
def c3_profile(out: Path, seed=0) -> CriterionResult:
    """Burgers monotonicity, t sup w_x trend, mass relation, approach to the Riemann fan."""
    rng = np.random.default_rng(seed)
    g = GasModel(gamma=1.4)
    rd = solve_intermediate(g, EndStates.entropy_matched(g, 1.0, 0.0, 1.0, 2.0, 1.0))
    sp = SmoothingParams(0.1, 2.0)
    prof = WaveProfile(g, rd, sp)
    times = (10.0, 100.0, 1000.0, 10000.0)
    min_wx = math.inf
    for t in times:
        x = np.sort(rng.uniform(-3 * t - 100, 3 * t + 100, 2500))
        for wm, wp in (rd.fan1, rd.fan3):
            _, wx, _ = burgers_eval(sp, wm, wp, t, x)
            min_wx = min(min_wx, float(wx.min()))
    tsup = [t_sup_wx(sp, rd.fan1[0], rd.fan1[1], t) for t in times]
    nonincreasing = all(tsup[k + 1] <= tsup[k] * 1.05 for k in range(len(tsup) - 1))
    mass, min_ux = 0.0, math.inf
    for t in (0.0,) + times:
        x = np.linspace(-3 * t - 200, 3 * t + 200, 4001)
        st = prof.evaluate(t, x)
        mass = max(mass, float(np.max(np.abs(st.V_t - st.U_x))))
        min_ux = min(min_ux, float(st.U_x.min()))
    dist = [_riemann_distance(prof, t) for t in times]
    decreasing = all(dist[k + 1] < dist[k] for k in range(len(dist) - 1))
    write_csv(out / "c3_profile.csv", ("t", "t_sup_wx", "sup_distance_to_riemann"),
              list(zip(times, tsup, dist)))
    checks = {
        "w_x_positive": min_wx > 0,
        "t_sup_wx_nonincreasing": nonincreasing,
        "mass_relation": mass <= 1e-8 and min_ux > 0,
        "riemann_distance_decreasing": decreasing,
    }
    return CriterionResult("c3_profile", all(checks.values()), {
        **checks, "min_w_x": min_wx, "t_sup_wx": tsup, "max_Vt_minus_Ux": mass,
        "min_U_x": min_ux, "sup_distance": dist})


# -- 4. solver verification ---------------------------------------------------


def mms_errors(n, t_end=0.5, x_min=0.0, x_max=10.0, dt_factor=0.2, with_phase_field=True):
    """Max-norm errors of the four fields against the manufactured solution."""
    gas = GasModel(gamma=1.4, nu=1.0, kappa=1.0)
    man = Manufactured()
    grid = Grid(x_min, x_max, n)
    n_steps = int(math.ceil(t_end / (dt_factor * grid.dx**2)))
    dt = t_end / n_steps
    cfg = SolverConfig(t_end=t_end, with_phase_field=with_phase_field, max_steps=n_steps + 10)
    res = run(gas, grid, cfg, man.state(0.0, grid), man.boundary(grid),
              source=man.source(gas, with_phase_field), dt_fixed=dt)
    exact = man.exact(t_end, grid.x)
    fin = res.final
    errs = [float(np.max(np.abs(a - b))) for a, b in zip(fin.arrays(), exact)]
    return dt, errs


def equilibrium_drift(n=64, steps=10_000):
    gas = GasModel(gamma=1.4)
    grid = Grid(-10.0, 10.0, n)
    ones = np.ones(n)
    st = FieldState(0.0, 1.3 * ones, 0.2 * ones, 0.9 * ones, ones.copy())
    init = FieldState(0.0, *[a.copy() for a in st.arrays()])
    fixed = ((1.3, 0.2, 0.9, 1.0), (1.3, 0.2, 0.9, 1.0))
    dt = stable_dt(gas, grid, st, SolverConfig())
    for _ in range(steps):
        st = step(gas, grid, st, dt, lambda t: fixed)
    return max(float(np.max(np.abs(a - b))) for a, b in zip(st.arrays(), init.arrays()))


def reduction_gap(n=1024, t_end=1.0):
    """Max difference at ``t_end`` between the full system with chi = 1 and the NS-only path."""
    cfg = ExperimentConfig.preset("reference", [f"grid.n_cells={n}", "grid.half_width=40",
                                                f"solver.t_end={t_end}"])
    gas, prof = cfg.gas(), cfg.profile()
    grid = cfg.grid(prof)
    init = initial_state(grid, prof)
    bnd = profile_boundary(prof, grid)
    dt = stable_dt(gas, grid, init, SolverConfig())
    dt = t_end / math.ceil(t_end / dt)
    a = run(gas, grid, SolverConfig(t_end=t_end, with_phase_field=True), init, bnd, dt_fixed=dt).final
    b = run(gas, grid, SolverConfig(t_end=t_end, with_phase_field=False), init, bnd, dt_fixed=dt).final
    return max(float(np.max(np.abs(x - y))) for x, y in zip(a.arrays()[:3], b.arrays()[:3]))


@_timed
def c4_solver(out: Path, level="quick") -> CriterionResult:
    """MMS order over three levels, equilibrium preservation, chi = 1 reduction."""
    lv = LEVELS[level]
    rows, errs = [], []
    for n in lv["mms"]:
        dt, e = mms_errors(n)
        errs.append(e)
        rows.append((n, dt, *e))
    orders = [[math.log2(errs[k][f] / errs[k + 1][f]) for f in range(4)] for k in range(len(errs) - 1)]
    write_csv(out / "c4_mms.csv", ("n", "dt", "err_v", "err_u", "err_theta", "err_chi"), rows)
    drift = equilibrium_drift(lv["equilibrium_n"])
    gap = reduction_gap(lv["reduction_n"])
    min_order = min(min(o) for o in orders)
    passed = min_order >= 1.9 and drift <= 1e-12 and gap <= 1e-10
    return CriterionResult("c4_solver", passed, {
        "mms_orders": orders, "min_order": min_order, "equilibrium_drift": drift,
        "reduction_gap": gap})


# -- 5-7. stability run and post-processing ----------------------------------


def stability_run(n_cells, output_dt, overrides=()):
    """Run the stability preset at one resolution; returns plain data (picklable)."""
    cfg = ExperimentConfig.preset("stability", [f"grid.n_cells={n_cells}",
                                                f"solver.output_dt={output_dt}", *overrides])
    gas, prof = cfg.gas(), cfg.profile()
    grid = cfg.grid(prof)
    d = cfg.raw["diagnostics"]
    hist = JiangHistory(grid, d["probes"]) if d["probes"] else None
    diag = Diagnostics(gas, grid, prof, BoundsMonitor(chi_tol=d["chi_tol"]), history=hist)
    t0 = time.perf_counter()
    aborted = None
    try:
        res = run(gas, grid, cfg.solver(), initial_state(grid, prof, cfg.perturbation()),
                  profile_boundary(prof, grid), on_output=diag)
        n_steps = res.n_steps
    except PositivityBreach as exc:
        aborted = str(exc)
        n_steps = exc.partial.n_steps
    runtime = time.perf_counter() - t0
    jiang, jiang_error = None, None
    t1 = time.perf_counter()
    if hist is not None and aborted is None:
        try:
            jiang = {float(k): v for k, v in jiang_check(gas, hist).items()}
        except InsufficientHistory as exc:
            jiang_error = str(exc)
    return {
        "n": n_cells, "dx": grid.dx, "output_dt": output_dt, "rows": [r.row() for r in diag.reports],
        "flags": [f for r in diag.reports for f in r.flags], "aborted": aborted,
        "n_steps": n_steps, "runtime": runtime, "jiang": jiang, "jiang_error": jiang_error,
        "jiang_runtime": time.perf_counter() - t1,
        "energy_factor": float(d["energy_factor"]),
    }


def _write_rows(path, rows):
    header = list(rows[0].keys())
    write_csv(path, header, [[r[k] for k in header] for r in rows])


def c5_stability(out: Path, data) -> CriterionResult:
    """Positivity, phase-field range, decay of perturbations, energy monitor."""
    rows = data["rows"]
    _write_rows(out / f"c5_stability_n{data['n']}.csv", rows)
    ratios = {}
    for f in ("phi", "psi", "zeta", "xi"):
        peak = max(r[f"{f}_Linf"] for r in rows)
        ratios[f] = rows[-1][f"{f}_Linf"] / peak if peak > 0 else 0.0
    E0 = rows[0]["E"]
    budget = max(r["E"] + r["int_D"] for r in rows)
    # the relative entropy is nonnegative by construction; a negative value means a broken Phi
    E_min = min(r["E"] for r in rows)
    checks = {
        "no_positivity_breach": data["aborted"] is None,
        "chi_in_range": not any(f.startswith("chi") for f in data["flags"]),
        "decay": all(v <= 0.2 for v in ratios.values()),
        "energy_monitor": budget <= data["energy_factor"] * (E0 + 1.0) and E_min >= 0.0,
    }
    return CriterionResult("c5_stability", all(checks.values()), {
        **checks, "n": data["n"], "t_end": rows[-1]["t"], "decay_ratios": ratios, "E0": E0, "E_min": E_min,
        "max_E_plus_int_D": budget, "chi_min": rows[-1]["chi_min"], "chi_max": rows[-1]["chi_max"],
        "n_steps": data["n_steps"], "aborted": data["aborted"]}, data["runtime"])


def c6_jiang(out: Path, coarse, fine) -> CriterionResult:
    """Representation-formula error at the probes below 3% and shrinking under refinement."""
    rows = []
    ok = coarse["jiang"] is not None and fine["jiang"] is not None
    details = {"coarse_error": coarse["jiang_error"], "fine_error": fine["jiang_error"]}
    if ok:
        probes = sorted(fine["jiang"])
        for p in probes:
            for d in (coarse, fine):
                rows.append((d["n"], p, *d["jiang"][p]))
        small = all(fine["jiang"][p][0] <= 0.03 for p in probes)
        shrinking = all(fine["jiang"][p][0] < coarse["jiang"][p][0] for p in probes)
        ok = len(probes) >= 3 and small and shrinking
        details.update({"probes": probes, "within_3_percent": small, "decreasing": shrinking,
                        "errors": {str(p): [coarse["jiang"][p][0], fine["jiang"][p][0]] for p in probes}})
    write_csv(out / "c6_jiang.csv", ("n", "probe", "relative_error", "quadrature_estimate"), rows)
    return CriterionResult("c6_jiang", ok, details, coarse["jiang_runtime"] + fine["jiang_runtime"])


def c7_entropy(out: Path, data) -> CriterionResult:
    """Cumulative entropy excess non-decreasing up to 1e-8 n dx per unit time."""
    rows = data["rows"]
    t = np.array([r["t"] for r in rows])
    ee = np.array([r["entropy_excess"] for r in rows])
    slack = 1e-8 * data["n"] * data["dx"]
    inc = np.diff(ee)
    allowed = -slack * np.diff(t)
    write_csv(out / "c7_entropy.csv", ("t", "entropy_excess"), list(zip(t, ee)))
    worst = float(np.min(inc - allowed)) if len(inc) else 0.0
    return CriterionResult("c7_entropy", bool(worst >= 0), {
        "min_increment": float(inc.min()) if len(inc) else 0.0, "slack_per_unit_time": slack,
        "n": data["n"]})


# -- 8. determinism -----------------------------------------------------------


def c8_determinism(dir_a: Path, dir_b: Path) -> CriterionResult:
    """Byte comparison of every CSV written by two verify invocations."""
    t0 = time.perf_counter()
    names_a = sorted(p.name for p in Path(dir_a).glob("*.csv"))
    names_b = sorted(p.name for p in Path(dir_b).glob("*.csv"))
    differ = [n for n in names_a if n in names_b
              and (Path(dir_a) / n).read_bytes() != (Path(dir_b) / n).read_bytes()]
    ok = bool(names_a) and names_a == names_b and not differ
    return CriterionResult("c8_determinism", ok, {"files": names_a, "differ": differ,
                                                   "same_file_set": names_a == names_b},
                           time.perf_counter() - t0)


# -- driver -------------------------------------------------------------------


def run_suite(level: str, out: Path, compare: Path | None = None, workers=2, log=print):
    """Run criteria 1-7 (and 8 when ``compare`` names an earlier output directory)."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; choose from {sorted(LEVELS)}")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    results = []

    def report(res):
        results.append(res)
        log(f"{'PASS' if res.passed else 'FAIL'} {res.name} ({res.runtime:.1f} s)")

    sizes = LEVELS[level]["stability"]
    with ProcessPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(stability_run, n, odt) for n, odt in sizes]
        report(c1_thermodynamics(out))
        report(c2_riemann(out))
        report(c3_profile(out))
        report(c4_solver(out, level))
        runs = [f.result() for f in futures]
    for r in runs:
        if r["aborted"]:
            log(f"stability run n={r['n']} aborted: {r['aborted']}")
    report(c5_stability(out, runs[-1]))
    report(c6_jiang(out, runs[0], runs[-1]))
    report(c7_entropy(out, runs[-1]))
    if compare is not None:
        report(c8_determinism(compare, out))
    verdict = {
        "level": level,
        "passed": all(r.passed for r in results),
        "criteria": {r.name: _jsonable(asdict(r)) for r in results},
    }
    with open(out / "verdict.json", "w") as fh:
        json.dump(verdict, fh, indent=2, sort_keys=True)
    return verdict


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj

