"""Functionals monitored along a run: perturbation norms, relative entropy,
dissipation, bound flags and the representation-formula cross-check.

Everything is recomputed from a ``FieldState`` and the wave profile; the
perturbation is never integrated on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import gas as _gas
from .errors import InsufficientHistory
from .gas import GasModel
from .solver import FieldState, Grid, chemical_potential

PERT_FIELDS = ("phi", "psi", "zeta", "xi", "varphi")


def _dx_(f, dx):
    return np.gradient(f, dx, edge_order=2)


@dataclass(frozen=True)
class PerturbationState:
    """Deviations from the profile: ``v - V``, ``u - U``, ``theta - Theta``, ``chi - 1``, ``s - S``."""

    phi: np.ndarray
    psi: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    varphi: np.ndarray

    @classmethod
    def from_state(cls, gas: GasModel, state: FieldState, prof_state):
        return cls(
            phi=state.v - prof_state.V,
            psi=state.u - prof_state.U,
            zeta=state.theta - prof_state.Theta,
            xi=state.chi - 1.0,
            varphi=gas.entropy_from_vtheta(state.v, state.theta) - prof_state.S,
        )


def norms(pert: PerturbationState, grid: Grid, gas: GasModel | None = None):
    """L2, H1, H2 and sup norms of every perturbation field (trapezoid rule).

    With ``gas`` given the table also holds ``zeta_weighted``, the L2 norm of
    ``zeta / sqrt(gamma - 1)``.
    """
    dx = grid.dx
    table = {}
    for name in PERT_FIELDS:
        f = getattr(pert, name)
        f1 = _dx_(f, dx)
        f2 = _dx_(f1, dx)
        l2sq = trapezoid(f * f, dx=dx)
        h1sq = l2sq + trapezoid(f1 * f1, dx=dx)
        h2sq = h1sq + trapezoid(f2 * f2, dx=dx)
        table[name] = {
            "L2": math.sqrt(l2sq),
            "H1": math.sqrt(h1sq),
            "H2": math.sqrt(h2sq),
            "Linf": float(np.max(np.abs(f))) if f.size else 0.0,
        }
    if gas is not None:
        table["zeta_weighted"] = table["zeta"]["L2"] / math.sqrt(gas.gamma - 1.0)
    return table


def energy_density(gas: GasModel, state: FieldState, prof_state, grid: Grid):
    v, th, chi = state.v, state.theta, state.chi
    V, Th = prof_state.V, prof_state.Theta
    psi = state.u - prof_state.U
    xi = chi - 1.0
    xi_x = _dx_(xi, grid.dx)
    # looked up at call time so the mutation smoke test can swap it
    phi_fn = _gas.phi_convex
    return (
        gas.R * Th * phi_fn(v / V)
        + 0.5 * psi * psi
        + gas.cv * Th * phi_fn(th / Th)
        + xi_x**2 / (2.0 * v)
        + xi**2 * (xi + 2.0) ** 2 / 4.0
    )


def energy_functional(gas: GasModel, state: FieldState, prof_state, grid: Grid):
    """Relative-entropy energy ``E(t)``, the integral of the nonnegative density above."""
    return float(trapezoid(energy_density(gas, state, prof_state, grid), dx=grid.dx))


def dissipation_density(gas: GasModel, state: FieldState, prof_state, grid: Grid):
    dx = grid.dx
    v, th = state.v, state.theta
    Th = prof_state.Theta
    mu = chemical_potential(gas, grid, state)
    psi_x = _dx_(state.u - prof_state.U, dx)
    zeta_x = _dx_(state.theta - prof_state.Theta, dx)
    return (
        v * Th / th * mu**2
        + gas.nu * Th / (v * th) * psi_x**2
        + gas.kappa * Th / (v * th**2) * zeta_x**2
    )


def dissipation_rate(gas: GasModel, state: FieldState, prof_state, grid: Grid):
    """Dissipation ``D(t)`` paired with ``E(t)``; nonnegative term by term."""
    return float(trapezoid(dissipation_density(gas, state, prof_state, grid), dx=grid.dx))


def dissipation_rate_reference(gas: GasModel, state: FieldState, prof_state, grid: Grid):
    """Cell-by-cell loop version of ``dissipation_rate`` kept as an independent check."""
    n, h = grid.n_cells, grid.dx
    v, u, th, chi = (list(map(float, a)) for a in state.arrays())
    U = list(map(float, prof_state.U))
    Th = list(map(float, prof_state.Theta))

    def deriv(f, i):
        if i == 0:
            return (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
        if i == n - 1:
            return (3 * f[n - 1] - 4 * f[n - 2] + f[n - 3]) / (2 * h)
        return (f[i + 1] - f[i - 1]) / (2 * h)

    g = [deriv(chi, i) / v[i] for i in range(n)]
    psi = [u[i] - U[i] for i in range(n)]
    zeta = [th[i] - Th[i] for i in range(n)]
    dens = []
    for i in range(n):
        if i == 0 or i == n - 1:
            lap = deriv(g, i)
        else:
            right = (chi[i + 1] - chi[i]) / (h * 0.5 * (v[i] + v[i + 1]))
            left = (chi[i] - chi[i - 1]) / (h * 0.5 * (v[i] + v[i - 1]))
            lap = (right - left) / h
        mu = -lap + chi[i] ** 3 - chi[i]
        dens.append(
            v[i] * Th[i] / th[i] * mu * mu
            + gas.nu * Th[i] / (v[i] * th[i]) * deriv(psi, i) ** 2
            + gas.kappa * Th[i] / (v[i] * th[i] ** 2) * deriv(zeta, i) ** 2
        )
    total = 0.0
    for i in range(n - 1):
        total += 0.5 * h * (dens[i] + dens[i + 1])
    return total


def convexity_term(gas: GasModel, state: FieldState, prof_state, grid: Grid):
    """Integrand ``[p~(v,s) - p~(V,S) - p~_v(V,S) phi - p~_s(V,S) varphi] U_x``.

    Returns ``(integral, pointwise minimum)``; it is watched, not enforced.
    """
    s = gas.entropy_from_vtheta(state.v, state.theta)
    V, S = prof_state.V, prof_state.S
    phi, varphi = state.v - V, s - S
    dens = (
        gas.p_tilde(state.v, s)
        - gas.p_tilde(V, S)
        - gas.p_tilde_v(V, S) * phi
        - gas.p_tilde_s(V, S) * varphi
    ) * prof_state.U_x
    return float(trapezoid(dens, dx=grid.dx)), float(dens.min())


def energy_norm_bound(gas: GasModel, state: FieldState, prof_state, grid: Grid):
    """Constant ``C`` with ``E <= C (|phi|^2 + |psi|^2 + |zeta|^2 + |xi|_{H1}^2)``.

    Built from the monitored field bounds and ``Phi(x) <= (x-1)^2 / (2 min(1,x)^2)``.
    Returns ``(E, C, norm_sum)``.
    """
    v, th = state.v, state.theta
    V, Th = prof_state.V, prof_state.Theta
    pert = PerturbationState.from_state(gas, state, prof_state)
    tab = norms(pert, grid)
    vmin = float(min(v.min(), V.min()))
    thmin = float(min(th.min(), Th.min()))
    thmax = float(Th.max())
    xi_shift = float(np.max(np.abs(pert.xi + 2.0)))
    C = max(
        gas.R * thmax / (2.0 * vmin**2),
        0.5,
        gas.cv * thmax / (2.0 * thmin**2),
        1.0 / (2.0 * float(v.min())),
        xi_shift**2 / 4.0,
    )
    total = tab["phi"]["L2"] ** 2 + tab["psi"]["L2"] ** 2 + tab["zeta"]["L2"] ** 2 + tab["xi"]["H1"] ** 2
    return energy_functional(gas, state, prof_state, grid), C, total


@dataclass
class BoundsMonitor:
    """Running extrema with flags for ``chi`` outside ``[-chi_tol, 1 + chi_tol]``
    and ``v`` or ``theta`` outside their envelopes."""

    chi_tol: float = 0.01
    v_range: tuple = (0.0, math.inf)
    theta_range: tuple = (0.0, math.inf)
    v_min: float = math.inf
    v_max: float = -math.inf
    theta_min: float = math.inf
    theta_max: float = -math.inf
    chi_min: float = math.inf
    chi_max: float = -math.inf
    flags: list = field(default_factory=list)

    def update(self, state: FieldState):
        self.v_min = min(self.v_min, float(state.v.min()))
        self.v_max = max(self.v_max, float(state.v.max()))
        self.theta_min = min(self.theta_min, float(state.theta.min()))
        self.theta_max = max(self.theta_max, float(state.theta.max()))
        cmin, cmax = float(state.chi.min()), float(state.chi.max())
        self.chi_min = min(self.chi_min, cmin)
        self.chi_max = max(self.chi_max, cmax)
        new = []
        if cmin < -self.chi_tol or cmax > 1.0 + self.chi_tol:
            new.append(f"chi out of range at t={state.t:.6g}: [{cmin:.6g}, {cmax:.6g}]")
        if state.v.min() < self.v_range[0] or state.v.max() > self.v_range[1]:
            new.append(f"v outside envelope at t={state.t:.6g}")
        if state.theta.min() < self.theta_range[0] or state.theta.max() > self.theta_range[1]:
            new.append(f"theta outside envelope at t={state.t:.6g}")
        self.flags.extend(new)
        return new

    def extrema(self):
        return {
            "v_min": self.v_min, "v_max": self.v_max,
            "theta_min": self.theta_min, "theta_max": self.theta_max,
            "chi_min": self.chi_min, "chi_max": self.chi_max,
        }


def bounds_monitor(state: FieldState, monitor: BoundsMonitor | None = None):
    mon = monitor if monitor is not None else BoundsMonitor()
    return mon.update(state)


@dataclass(frozen=True)
class DiagnosticsReport:
    t: float
    norms: dict
    energy: float
    dissipation: float
    int_dissipation: float
    entropy_excess: float
    convexity: float
    convexity_min: float
    energy_bound_C: float
    energy_bound_norms: float
    bounds: dict
    flags: tuple

    def row(self):
        """Flat scalar record for the diagnostics CSV."""
        out = {"t": self.t, "E": self.energy, "D": self.dissipation, "int_D": self.int_dissipation,
               "entropy_excess": self.entropy_excess, "convexity": self.convexity,
               "convexity_min": self.convexity_min, "energy_C": self.energy_bound_C,
               "energy_norms": self.energy_bound_norms}
        for name in PERT_FIELDS:
            for k, val in self.norms[name].items():
                out[f"{name}_{k}"] = val
        out["zeta_weighted"] = self.norms["zeta_weighted"]
        out.update(self.bounds)
        out["n_flags"] = len(self.flags)
        return out


class Diagnostics:
    """Observer for ``solver.run``: one report per output tick.

    ``int_D`` is the trapezoid rule in time over the ticks, so the tick
    spacing sets its accuracy.
    """

    def __init__(self, gas: GasModel, grid: Grid, profile, monitor: BoundsMonitor | None = None,
                 history: "JiangHistory | None" = None):
        self.gas = gas
        self.grid = grid
        self.profile = profile
        self.monitor = monitor or BoundsMonitor()
        self.history = history
        self.reports: list[DiagnosticsReport] = []

    def __call__(self, state: FieldState):
        gas, grid = self.gas, self.grid
        ps = self.profile.evaluate(state.t, grid.x)
        pert = PerturbationState.from_state(gas, state, ps)
        D = dissipation_rate(gas, state, ps, grid)
        if self.reports:
            prev = self.reports[-1]
            int_D = prev.int_dissipation + 0.5 * (state.t - prev.t) * (D + prev.dissipation)
        else:
            int_D = 0.0
        E, C, nsum = energy_norm_bound(gas, state, ps, grid)
        conv, conv_min = convexity_term(gas, state, ps, grid)
        flags = self.monitor.update(state)
        rep = DiagnosticsReport(
            t=float(state.t),
            norms=norms(pert, grid, gas),
            energy=E,
            dissipation=D,
            int_dissipation=int_D,
            entropy_excess=float(trapezoid(pert.varphi[1:-1], dx=grid.dx)),
            convexity=conv,
            convexity_min=conv_min,
            energy_bound_C=C,
            energy_bound_norms=nsum,
            bounds=self.monitor.extrema(),
            flags=tuple(flags),
        )
        self.reports.append(rep)
        if self.history is not None:
            self.history.record(state)
        return rep


# -- representation formula ---------------------------------------------------


class JiangHistory:
    """Append-only record of the fields on a window of cells around the probes."""

    def __init__(self, grid: Grid, probes, margin=3.0):
        self.grid = grid
        self.probes = tuple(float(p) for p in probes)
        lo = math.floor(min(self.probes)) - margin
        hi = math.floor(max(self.probes)) + 2 + margin
        x = grid.x
        if lo < x[0] or hi > x[-1]:
            raise ValueError("probe windows must lie inside the grid")
        self.sl = slice(int(np.searchsorted(x, lo)), int(np.searchsorted(x, hi)) + 1)
        self.x = x[self.sl]
        self.t: list[float] = []
        self.v: list[np.ndarray] = []
        self.u: list[np.ndarray] = []
        self.theta: list[np.ndarray] = []
        self.chi: list[np.ndarray] = []

    def record(self, state: FieldState):
        self.t.append(float(state.t))
        for name in ("v", "u", "theta", "chi"):
            getattr(self, name).append(np.array(getattr(state, name)[self.sl]))

    def __len__(self):
        return len(self.t)


def _fine(a, b, dx):
    m = max(int(math.ceil((b - a) / (0.25 * dx))), 2)
    return np.linspace(a, b, m + 1)


def _exp_weighted(F, L, t):
    """Integral of F exp(-L) with F linear and L linear on each interval."""
    total = 0.0
    for k in range(len(t) - 1):
        h = t[k + 1] - t[k]
        a, d = L[k], L[k + 1] - L[k]
        if abs(d) < 1e-6:
            i0 = h * math.exp(-a) * (1 - d / 2 + d * d / 6)
            i1 = h * math.exp(-a) * (0.5 - d / 3 + d * d / 8)
        else:
            i0 = h * math.exp(-a) * (-math.expm1(-d)) / d
            i1 = h * math.exp(-a) * (1 - math.exp(-d) * (1 + d)) / (d * d)
        total += F[k] * i0 + (F[k + 1] - F[k]) * i1
    return total


def _representation(gas: GasModel, hist: JiangHistory, x_probe, idx):
    """``v(t_end, x)`` rebuilt from the snapshots ``idx`` of the history."""
    nu, R, dx = gas.nu, gas.R, hist.grid.dx
    i = math.floor(x_probe)
    xs = hist.x
    ys = _fine(x_probe, i + 2.0, dx)
    beta = np.clip(i + 2.0 - ys, 0.0, 1.0)
    zs = _fine(i + 1.0, i + 2.0, dx)
    u0 = np.interp(ys, xs, hist.u[0])
    v0 = float(np.interp(x_probe, xs, hist.v[0]))
    times = np.array([hist.t[k] for k in idx])
    logB, Eint, F = [], [], []
    for k in idx:
        v, u, th, chi = hist.v[k], hist.u[k], hist.theta[k], hist.chi[k]
        u_x = _dx_(u, dx)
        chi_x = _dx_(chi, dx)
        logB.append(math.log(v0) + trapezoid((u0 - np.interp(ys, xs, u)) * beta, ys) / nu)
        stress = nu * u_x / v - chi_x**2 / (2 * v * v) - R * th / v
        Eint.append(trapezoid(np.interp(zs, xs, stress), zs))
        F.append(float(np.interp(x_probe, xs, R * th + chi_x**2 / (2 * v))))
    logY = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (np.array(Eint[1:]) + Eint[:-1]))]) / nu
    L = np.array(logB) + logY
    integral = _exp_weighted(np.array(F), L, times)
    return math.exp(L[-1]) * (1.0 + integral / nu)


def jiang_check(gas: GasModel, history: JiangHistory, x_probes=None, floor=1e-3):
    """Relative error of the representation formula for ``v`` at the last snapshot.

    Returns ``{probe: (relative_error, quadrature_error_estimate)}``.  The
    estimate compares the full snapshot set with every other snapshot
    (Richardson, second order); ``InsufficientHistory`` is raised when it
    exceeds ``max(0.1 * error, floor)``.
    """
    probes = history.probes if x_probes is None else tuple(x_probes)
    n = len(history)
    if n < 3:
        raise InsufficientHistory("need at least three snapshots")
    full = list(range(n))
    # every other snapshot, always keeping the endpoints
    half = list(range(0, n, 2)) if (n - 1) % 2 == 0 else list(range(0, n - 1, 2)) + [n - 1]
    out = {}
    for xp in probes:
        i = math.floor(xp)
        if i + 2 > history.x[-1] or xp < history.x[0]:
            raise ValueError(f"probe {xp} lacks the interval [i+1, i+2] inside the history window")
        v_true = float(np.interp(xp, history.x, history.v[-1]))
        rep_full = _representation(gas, history, xp, full)
        rep_half = _representation(gas, history, xp, half)
        err = abs(rep_full - v_true) / v_true
        est = abs(rep_full - rep_half) / 3.0 / v_true
        if est > max(0.1 * err, floor):
            raise InsufficientHistory(
                f"probe {xp}: quadrature error estimate {est:.3e} exceeds tolerance "
                f"(residual {err:.3e})"
            )
        out[xp] = (err, est)
    return out


__all__ = [
    "PerturbationState",
    "norms",
    "energy_functional",
    "energy_density",
    "dissipation_rate",
    "dissipation_rate_reference",
    "dissipation_density",
    "convexity_term",
    "energy_norm_bound",
    "BoundsMonitor",
    "bounds_monitor",
    "DiagnosticsReport",
    "Diagnostics",
    "JiangHistory",
    "jiang_check",
]
