import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import nsaclab.gas
from nsaclab import EndStates, GasModel, InsufficientHistory, SmoothingParams, WaveProfile, solve_intermediate
from nsaclab.config import ExperimentConfig
from nsaclab.diagnostics import (
    BoundsMonitor,
    Diagnostics,
    JiangHistory,
    PerturbationState,
    bounds_monitor,
    convexity_term,
    dissipation_density,
    dissipation_rate,
    dissipation_rate_reference,
    energy_functional,
    energy_norm_bound,
    jiang_check,
    norms,
)
from nsaclab.solver import (
    FieldState,
    Grid,
    Perturbation,
    PerturbationShape,
    SolverConfig,
    initial_state,
    profile_boundary,
    run,
)
from nsaclab.verify import c5_stability


@pytest.fixture(scope="module")
def grid():
    return Grid.symmetric(60.0, 256)


def perturbed(wave, grid, t=3.0, amp=0.2):
    ps = wave.evaluate(t, grid.x)
    bump = amp * np.exp(-0.05 * grid.x**2)
    state = FieldState(t, ps.V + bump, ps.U - bump, ps.Theta + 0.5 * bump, 1.0 - bump)
    return state, ps


def test_norms_of_gaussian():
    # f = exp(-x^2/2): L2^2 = sqrt(pi), |f'|^2 = sqrt(pi)/2, |f''|^2 = 3 sqrt(pi)/4
    grid = Grid.symmetric(20.0, 4096)
    f = np.exp(-0.5 * grid.x**2)
    zero = np.zeros_like(f)
    tab = norms(PerturbationState(f, zero, zero, zero, zero), grid)
    rp = math.sqrt(math.pi)
    assert tab["phi"]["L2"] == pytest.approx(math.sqrt(rp), rel=1e-6)
    assert tab["phi"]["H1"] == pytest.approx(math.sqrt(1.5 * rp), rel=1e-4)
    assert tab["phi"]["H2"] == pytest.approx(math.sqrt(2.25 * rp), rel=1e-4)
    assert tab["phi"]["Linf"] == pytest.approx(1.0, abs=1e-3)
    assert tab["psi"] == {"L2": 0.0, "H1": 0.0, "H2": 0.0, "Linf": 0.0}


def test_weighted_temperature_norm(grid, wave14):
    state, ps = perturbed(wave14, grid)
    pert = PerturbationState.from_state(wave14.gas, state, ps)
    tab = norms(pert, grid, wave14.gas)
    assert tab["zeta_weighted"] == pytest.approx(tab["zeta"]["L2"] / math.sqrt(0.4))


def test_energy_vanishes_on_profile(grid, wave14):
    ps = wave14.evaluate(5.0, grid.x)
    state = FieldState(5.0, ps.V.copy(), ps.U.copy(), ps.Theta.copy(), np.ones_like(ps.V))
    assert energy_functional(wave14.gas, state, ps, grid) == 0.0
    assert dissipation_rate(wave14.gas, state, ps, grid) == pytest.approx(0.0, abs=1e-30)
    # the superposed Theta leaves s(V, Theta) - S ~ 1e-5 where the waves meet;
    # the convexity term is quadratic in it
    integral, pmin = convexity_term(wave14.gas, state, ps, grid)
    assert abs(integral) <= 1e-10 and abs(pmin) <= 1e-14


@settings(max_examples=25, deadline=None)
@given(amp=st.floats(-0.4, 0.4).filter(lambda a: abs(a) > 1e-3), t=st.floats(0.0, 50.0))
def test_energy_and_dissipation_nonnegative(amp, t):
    g = GasModel(gamma=1.4)
    wave = WaveProfile(g, solve_intermediate(g, EndStates.entropy_matched(g, 1, 0, 1, 2, 1)),
                       SmoothingParams())
    grid = Grid.symmetric(60.0, 128)
    state, ps = perturbed(wave, grid, t, amp)
    assert energy_functional(g, state, ps, grid) > 0
    assert np.all(dissipation_density(g, state, ps, grid) >= 0)


def test_dissipation_matches_loop_reference(grid, wave14):
    state, ps = perturbed(wave14, grid)
    fast = dissipation_rate(wave14.gas, state, ps, grid)
    slow = dissipation_rate_reference(wave14.gas, state, ps, grid)
    assert fast == pytest.approx(slow, rel=1e-12)


def test_energy_bounded_by_norms(grid, wave14):
    for amp in (0.05, 0.2, 0.4):
        state, ps = perturbed(wave14, grid, amp=amp)
        E, C, total = energy_norm_bound(wave14.gas, state, ps, grid)
        assert 0 < E <= C * total


def test_convexity_term_nonnegative_for_gamma_above_one(grid, wave14):
    # p~ is convex in (v, s) for an ideal gas and U_x > 0
    state, ps = perturbed(wave14, grid, amp=0.3)
    integral, pmin = convexity_term(wave14.gas, state, ps, grid)
    assert integral > 0 and pmin >= -1e-15


def test_bounds_monitor_flags():
    mon = BoundsMonitor(chi_tol=0.01, v_range=(0.5, 3.0))
    one = np.ones(8)
    ok = FieldState(0.0, one, one, one, one)
    assert mon.update(ok) == []
    bad = FieldState(1.0, 4 * one, one, one, np.r_[one[:-1], 1.02])
    new = mon.update(bad)
    assert len(new) == 2 and new[0].startswith("chi")
    assert mon.extrema()["v_max"] == 4.0 and mon.extrema()["chi_max"] == 1.02
    assert bounds_monitor(ok) == []


def test_observer_accumulates_dissipation(wave14):
    gas = wave14.gas
    grid = Grid.symmetric(50.0, 128)
    pert = Perturbation(v=PerturbationShape(0.2, 2.0, shape="dsech2"))
    diag = Diagnostics(gas, grid, wave14)
    run(gas, grid, SolverConfig(t_end=1.0, output_dt=0.25), initial_state(grid, wave14, pert),
        profile_boundary(wave14, grid), on_output=diag)
    reps = diag.reports
    assert [r.t for r in reps] == [0.0, 0.25, 0.5, 0.75, 1.0]
    manual = sum(0.5 * (b.t - a.t) * (a.dissipation + b.dissipation) for a, b in zip(reps, reps[1:]))
    assert reps[-1].int_dissipation == pytest.approx(manual, rel=1e-14)
    row = reps[-1].row()
    assert {"t", "E", "D", "int_D", "phi_Linf", "xi_H1", "chi_min", "n_flags"} <= set(row)
    # energy plus dissipated energy is roughly conserved for this small perturbation
    assert reps[-1].energy + reps[-1].int_dissipation < 1.5 * reps[0].energy + 0.1


# -- representation formula ---------------------------------------------------


def constant_history(n_snap=9):
    grid = Grid.symmetric(20.0, 160)
    hist = JiangHistory(grid, (-3.5, 0.25, 4.5))
    one = np.ones(grid.n_cells)
    for k in range(n_snap):
        hist.record(FieldState(0.1 * k, 1.7 * one, 0.3 * one, 0.8 * one, one))
    return hist


def test_representation_exact_for_constant_state():
    out = jiang_check(GasModel(), constant_history())
    assert set(out) == {-3.5, 0.25, 4.5}
    for err, est in out.values():
        assert err <= 1e-12 and est <= 1e-12


def test_representation_needs_three_snapshots():
    with pytest.raises(InsufficientHistory):
        jiang_check(GasModel(), constant_history(2))


def test_history_window_must_fit():
    with pytest.raises(ValueError):
        JiangHistory(Grid.symmetric(5.0, 32), (4.5,))


def test_unresolved_history_is_rejected():
    # odd snapshots carry a temperature spike the every-other subset never sees
    grid = Grid.symmetric(20.0, 160)
    hist = JiangHistory(grid, (0.25,))
    one = np.ones(grid.n_cells)
    for k in range(5):
        th = (2.0 if k % 2 else 0.8) * one
        hist.record(FieldState(0.5 * k, 1.7 * one, 0.3 * one, th, one))
    with pytest.raises(InsufficientHistory):
        jiang_check(GasModel(), hist)


def test_representation_on_a_run(wave14):
    gas = wave14.gas
    grid = Grid.symmetric(50.0, 256)
    hist = JiangHistory(grid, (-10.5, 0.5, 10.5))
    pert = Perturbation(v=PerturbationShape(0.3, 2.0, shape="dsech2"))
    run(gas, grid, SolverConfig(t_end=2.0, output_dt=0.02), initial_state(grid, wave14, pert),
        profile_boundary(wave14, grid), on_output=hist.record)
    out = jiang_check(gas, hist)
    for err, _ in out.values():
        assert err <= 1e-3


# -- mutation smoke test ------------------------------------------------------


def short_stability_data(n=256, t_end=2.0):
    cfg = ExperimentConfig.preset("stability", [f"grid.n_cells={n}", f"solver.t_end={t_end}",
                                                "solver.output_dt=0.5", "diagnostics.probes=[]"])
    gas, prof = cfg.gas(), cfg.profile()
    grid = cfg.grid(prof)
    diag = Diagnostics(gas, grid, prof)
    res = run(gas, grid, cfg.solver(), initial_state(grid, prof, cfg.perturbation()),
              profile_boundary(prof, grid), on_output=diag)
    return {"n": n, "dx": grid.dx, "rows": [r.row() for r in diag.reports], "flags": [],
            "aborted": None, "n_steps": res.n_steps, "runtime": 0.0, "energy_factor": 10.0}


def test_sign_flipped_phi_fails_energy_criterion(monkeypatch, tmp_path):
    honest = c5_stability(tmp_path, short_stability_data())
    assert honest.details["energy_monitor"]
    original = nsaclab.gas.phi_convex
    monkeypatch.setattr(nsaclab.gas, "phi_convex", lambda x: -original(x))
    tampered = c5_stability(tmp_path, short_stability_data())
    assert not tampered.details["energy_monitor"]
    assert not tampered.passed
    assert tampered.details["E0"] < 0
