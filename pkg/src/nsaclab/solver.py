"""Explicit finite-difference integrator for the Lagrangian NSAC system.

Unknowns ``(v, u, theta, chi)`` live at the centers of a uniform grid.  The
first and last cells are Dirichlet cells whose values come from the smooth
wave profile (with ``chi = 1``) and are reset at every Runge-Kutta stage.

Interior discretization, with faces ``i+1/2`` and face volume
``v_f = (v_i + v_{i+1}) / 2``::

    v_t     = (u_{i+1} - u_{i-1}) / (2 dx)
    u_t     = -(p_{i+1} - p_{i-1}) / (2 dx) + D[nu du/(dx v_f)] - D[(dchi/dx)^2 / (2 v_f^2)]
    mu      = -D[dchi/(dx v_f)] + chi^3 - chi
    chi_t   = -v mu
    Cv th_t = -p (u_{i+1} - u_{i-1}) / (2 dx) + D[kappa dth/(dx v_f)] + avg(nu (du/dx)^2 / v_f) + v mu^2

where ``D[f] = (f_{i+1/2} - f_{i-1/2}) / dx``.  Using the same centered
velocity difference in the mass and temperature equations makes the
pressure work cancel pointwise in the entropy balance, and averaging the
face viscous heating closes the kinetic-energy budget.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import PositivityBreach
from .gas import GasModel

log = logging.getLogger(__name__)

FIELDS = ("v", "u", "theta", "chi")


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        if self.n_cells < 16:
            raise ValueError("n_cells must be at least 16")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def x(self):
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @classmethod
    def symmetric(cls, half_width, n_cells):
        return cls(-float(half_width), float(half_width), int(n_cells))


@dataclass(frozen=True)
class FieldState:
    t: float
    v: np.ndarray
    u: np.ndarray
    theta: np.ndarray
    chi: np.ndarray

    def entropy(self, gas: GasModel):
        return gas.entropy_from_vtheta(self.v, self.theta)

    def pressure(self, gas: GasModel):
        return gas.pressure(self.v, self.theta)

    def arrays(self):
        return self.v, self.u, self.theta, self.chi

    def check_positive(self):
        for name, arr in (("v", self.v), ("theta", self.theta)):
            bad = np.flatnonzero(~(arr > 0))
            if bad.size:
                raise PositivityBreach(name, int(bad[0]), self.t)


@dataclass(frozen=True)
class PerturbationShape:
    """One localized bump added to a field: ``amplitude * shape((x - center) / width)``.

    ``sech2`` is ``sech(r)^2``; ``bump`` is the C2 compact ``(1 - r^2)^3`` on
    ``|r| < 1``; ``dsech2`` is ``-2 tanh(r) sech(r)^2``, odd with zero mass.
    """

    amplitude: float = 0.0
    width: float = 1.0
    center: float = 0.0
    shape: str = "sech2"

    def __post_init__(self):
        if self.shape not in ("sech2", "bump", "dsech2"):
            raise ValueError(f"unknown perturbation shape {self.shape!r}")
        if not self.width > 0:
            raise ValueError("perturbation width must be positive")

    def __call__(self, x):
        r = (np.asarray(x, dtype=float) - self.center) / self.width
        # sech^2 through exp(-2|r|) so wide domains do not overflow cosh
        e = np.exp(-2.0 * np.abs(r))
        sech2 = 4.0 * e / (1.0 + e) ** 2
        if self.shape == "sech2":
            base = sech2
        elif self.shape == "bump":
            base = np.where(np.abs(r) < 1.0, (1.0 - r * r) ** 3, 0.0)
        else:
            base = -2.0 * np.tanh(r) * sech2
        return self.amplitude * base


@dataclass(frozen=True)
class Perturbation:
    """Initial perturbation of ``(v, u, theta, chi)`` about the profile."""

    v: PerturbationShape = field(default_factory=PerturbationShape)
    u: PerturbationShape = field(default_factory=PerturbationShape)
    theta: PerturbationShape = field(default_factory=PerturbationShape)
    chi: PerturbationShape = field(default_factory=PerturbationShape)

    def temperature_warning(self, gas: GasModel):
        """Message when the temperature bump is large against sqrt(gamma - 1), else None."""
        scale = np.sqrt(gas.gamma - 1.0)
        if abs(self.theta.amplitude) > scale:
            return (
                f"temperature perturbation {self.theta.amplitude:g} exceeds "
                f"sqrt(gamma-1) = {scale:.3g}"
            )
        return None


@dataclass(frozen=True)
class SolverConfig:
    t_end: float = 1.0
    cfl_hyperbolic: float = 0.5
    cfl_parabolic: float = 0.4
    output_dt: float | None = None
    with_phase_field: bool = True
    max_steps: int = 10_000_000

    def __post_init__(self):
        for name in ("cfl_hyperbolic", "cfl_parabolic"):
            val = getattr(self, name)
            if not 0 < val <= 1:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.output_dt is not None and not self.output_dt > 0:
            raise ValueError("output_dt must be positive")


BoundaryFn = Callable[[float], tuple]
SourceFn = Callable[[float, np.ndarray], tuple]


def profile_boundary(profile, grid: Grid) -> BoundaryFn:
    """Dirichlet values ``((v, u, theta, chi) left, (...) right)`` from the smooth profile."""
    xb = np.array([grid.x[0], grid.x[-1]])
    cache: dict = {}

    def boundary(t):
        # the last stage of one step and the first of the next share a time
        if t not in cache:
            if len(cache) > 4:
                cache.clear()
            st = profile.evaluate(t, xb)
            cache[t] = ((st.V[0], st.U[0], st.Theta[0], 1.0), (st.V[1], st.U[1], st.Theta[1], 1.0))
        return cache[t]

    return boundary


def _apply_boundary(arrays, values):
    left, right = values
    for arr, a, b in zip(arrays, left, right):
        arr[0] = a
        arr[-1] = b


def chemical_potential(gas: GasModel, grid: Grid, state: FieldState):
    """``mu = -(chi_x / v)_x + chi^3 - chi`` at every cell.

    Interior cells use the face-flux form of the integrator; the two end
    cells use one-sided second-order differences.
    """
    dx = grid.dx
    v, chi = state.v, state.chi
    mu = np.empty_like(chi)
    flux = np.diff(chi) / (dx * 0.5 * (v[1:] + v[:-1]))
    mu[1:-1] = -np.diff(flux) / dx
    chi_x = np.gradient(chi, dx, edge_order=2)
    f = chi_x / v
    mu[0] = -(-3 * f[0] + 4 * f[1] - f[2]) / (2 * dx)
    mu[-1] = -(3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * dx)
    return mu + chi**3 - chi


def rhs(gas: GasModel, grid: Grid, state: FieldState, source: SourceFn | None = None):
    """Time derivatives ``(v_t, u_t, theta_t, chi_t)``; zero in the two Dirichlet cells."""
    state.check_positive()
    dx = grid.dx
    v, u, th, chi = state.arrays()
    nu, kappa, cv = gas.nu, gas.kappa, gas.cv

    vf = 0.5 * (v[1:] + v[:-1])
    du = np.diff(u) / dx
    dchi = np.diff(chi) / dx
    dth = np.diff(th) / dx
    p = gas.R * th / v

    ux = (u[2:] - u[:-2]) / (2 * dx)
    px = (p[2:] - p[:-2]) / (2 * dx)
    visc = nu * du / vf
    cap = 0.5 * dchi**2 / vf**2
    heat = kappa * dth / vf
    visc_heat = nu * du**2 / vf

    vi, ci = v[1:-1], chi[1:-1]
    mu = -np.diff(dchi / vf) / dx + ci**3 - ci

    v_t = np.zeros_like(v)
    u_t = np.zeros_like(u)
    th_t = np.zeros_like(th)
    chi_t = np.zeros_like(chi)
    v_t[1:-1] = ux
    u_t[1:-1] = -px + np.diff(visc) / dx - np.diff(cap) / dx
    chi_t[1:-1] = -vi * mu
    th_t[1:-1] = (
        -p[1:-1] * ux
        + np.diff(heat) / dx
        + 0.5 * (visc_heat[1:] + visc_heat[:-1])
        + vi * mu**2
    ) / cv
    if source is not None:
        _add_source(grid, state.t, (v_t, u_t, th_t, chi_t), source)
    return v_t, u_t, th_t, chi_t


def rhs_navier_stokes(gas: GasModel, grid: Grid, state: FieldState, source: SourceFn | None = None):
    """Same discretization with every phase-field term removed; ``chi_t = 0``."""
    state.check_positive()
    dx = grid.dx
    v, u, th, _ = state.arrays()
    vf = 0.5 * (v[1:] + v[:-1])
    du = np.diff(u) / dx
    p = gas.R * th / v
    ux = (u[2:] - u[:-2]) / (2 * dx)

    v_t = np.zeros_like(v)
    u_t = np.zeros_like(u)
    th_t = np.zeros_like(th)
    v_t[1:-1] = ux
    u_t[1:-1] = -(p[2:] - p[:-2]) / (2 * dx) + np.diff(gas.nu * du / vf) / dx
    vh = gas.nu * du**2 / vf
    th_t[1:-1] = (
        -p[1:-1] * ux + np.diff(gas.kappa * (np.diff(th) / dx) / vf) / dx + 0.5 * (vh[1:] + vh[:-1])
    ) / gas.cv
    out = (v_t, u_t, th_t, np.zeros_like(v))
    if source is not None:
        _add_source(grid, state.t, out, source)
    return out


def _add_source(grid, t, derivs, source):
    x = grid.x[1:-1]
    for d, s in zip(derivs, source(t, x)):
        d[1:-1] += s


def stable_dt(gas: GasModel, grid: Grid, state: FieldState, cfg: SolverConfig):
    """Explicit step from the acoustic and diffusive limits.

    Diffusivities are ``nu / v`` for velocity, ``kappa / (Cv v)`` for
    temperature and ``v_i / v_face`` for the phase field; the last one sits
    near 1 for smooth ``v`` and takes the place of the bare unit coefficient.
    """
    dx = grid.dx
    v = state.v
    s = gas.entropy_from_vtheta(v, state.theta)
    c_max = float(np.max(gas.sound_speed(v, s)))
    v_min = float(np.min(v))
    dt_h = cfg.cfl_hyperbolic * dx / c_max
    diff = max(gas.nu, gas.kappa / gas.cv) / v_min
    if cfg.with_phase_field:
        vf = 0.5 * (v[1:] + v[:-1])
        diff = max(diff, float(np.max(v[1:-1] / np.minimum(vf[1:], vf[:-1]))))
    dt_p = cfg.cfl_parabolic * dx * dx / diff
    return min(dt_h, dt_p)


def step(gas, grid, state: FieldState, dt, boundary: BoundaryFn, *, with_phase_field=True,
         source: SourceFn | None = None) -> FieldState:
    """One SSP-RK3 step; Dirichlet cells are reset from ``boundary`` at every stage time."""
    f = rhs if with_phase_field else rhs_navier_stokes
    t = state.t
    y0 = [a.copy() for a in state.arrays()]

    def make(arrs, tt):
        _apply_boundary(arrs, boundary(tt))
        return FieldState(tt, *arrs)

    k0 = f(gas, grid, state, source)
    y1 = [a + dt * k for a, k in zip(y0, k0)]
    s1 = make(y1, t + dt)
    k1 = f(gas, grid, s1, source)
    y2 = [0.75 * a + 0.25 * (b + dt * k) for a, b, k in zip(y0, y1, k1)]
    s2 = make(y2, t + 0.5 * dt)
    k2 = f(gas, grid, s2, source)
    y3 = [a / 3.0 + 2.0 / 3.0 * (b + dt * k) for a, b, k in zip(y0, y2, k2)]
    out = make(y3, t + dt)
    out.check_positive()
    return out


def initial_state(grid: Grid, profile, perturbation: Perturbation | None = None) -> FieldState:
    """Profile at ``t = 0`` plus the perturbation; ``chi = 1`` before perturbing."""
    x = grid.x
    st = profile.evaluate(0.0, x)
    pert = perturbation or Perturbation()
    state = FieldState(
        0.0,
        st.V + pert.v(x),
        st.U + pert.u(x),
        st.Theta + pert.theta(x),
        1.0 + pert.chi(x),
    )
    state.check_positive()
    return state


@dataclass
class RunResult:
    states: list = field(default_factory=list)
    dt_history: list = field(default_factory=list)
    n_steps: int = 0
    aborted: dict | None = None

    @property
    def final(self) -> FieldState:
        return self.states[-1]


def run(gas: GasModel, grid: Grid, cfg: SolverConfig, initial: FieldState, boundary: BoundaryFn,
        *, source: SourceFn | None = None, on_step=None, on_output=None,
        dt_fixed: float | None = None) -> RunResult:
    """Integrate ``initial`` to ``cfg.t_end``.

    Output ticks fall at multiples of ``cfg.output_dt`` (and at ``t_end``);
    steps are shortened to land on them exactly.  ``on_step(old, new, dt)``
    runs after every accepted step and ``on_output(state)`` at every tick.
    A positivity breach is re-raised with the partial result attached as
    ``exc.partial``.
    """
    result = RunResult()
    state = initial
    _apply_boundary(list(state.arrays()), boundary(state.t))
    result.states.append(state)
    if on_output is not None:
        on_output(state)
    out_dt = cfg.output_dt or cfg.t_end
    next_tick = min(out_dt, cfg.t_end) if cfg.t_end > 0 else None
    tick_index = 1
    while next_tick is not None:
        if result.n_steps >= cfg.max_steps:
            raise RuntimeError("step cap reached before t_end")
        dt = dt_fixed if dt_fixed is not None else stable_dt(gas, grid, state, cfg)
        hit = state.t + dt >= next_tick * (1 - 1e-14)
        if hit:
            dt = next_tick - state.t
        try:
            new = step(gas, grid, state, dt, boundary, with_phase_field=cfg.with_phase_field,
                       source=source)
        except PositivityBreach as exc:
            result.aborted = {"field": exc.field, "index": exc.index, "t": exc.t}
            exc.partial = result
            log.error("run aborted: %s", exc)
            raise
        result.n_steps += 1
        result.dt_history.append(dt)
        if on_step is not None:
            on_step(state, new, dt)
        state = new
        if hit:
            state = replace(state, t=next_tick)
            result.states.append(state)
            if on_output is not None:
                on_output(state)
            tick_index += 1
            if next_tick >= cfg.t_end:
                next_tick = None
            else:
                next_tick = min(tick_index * out_dt, cfg.t_end)
    return result


__all__ = [
    "Grid",
    "FieldState",
    "Perturbation",
    "PerturbationShape",
    "SolverConfig",
    "RunResult",
    "chemical_potential",
    "rhs",
    "rhs_navier_stokes",
    "stable_dt",
    "step",
    "initial_state",
    "profile_boundary",
    "run",
]
