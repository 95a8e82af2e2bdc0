"""Manufactured smooth fields and the forcing that makes them exact solutions.

Each field is ``mean + amp * sin(k x + w t + phase)``, so all derivatives are
closed form.  The forcing is the residual of the PDE applied to these fields;
adding it to the semi-discrete right-hand side turns the exact fields into a
solution, and the discrete error then measures truncation error alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gas import GasModel
from .solver import FieldState, Grid


@dataclass(frozen=True)
class Wave:
    mean: float
    amp: float
    k: float
    w: float
    phase: float = 0.0

    def arg(self, t, x):
        return self.k * x + self.w * t + self.phase

    def f(self, t, x):
        return self.mean + self.amp * np.sin(self.arg(t, x))

    def f_t(self, t, x):
        return self.amp * self.w * np.cos(self.arg(t, x))

    def f_x(self, t, x):
        return self.amp * self.k * np.cos(self.arg(t, x))

    def f_xx(self, t, x):
        return -self.amp * self.k**2 * np.sin(self.arg(t, x))


K = 2 * np.pi / 10.0


@dataclass(frozen=True)
class Manufactured:
    v: Wave = Wave(1.5, 0.3, K, 1.0)
    u: Wave = Wave(0.0, 0.2, K, -1.0, 0.5)
    theta: Wave = Wave(1.0, 0.2, K, 0.7, 1.0)
    chi: Wave = Wave(0.8, 0.1, K, 2.0, 2.0)

    def exact(self, t, x):
        return tuple(wv.f(t, x) for wv in (self.v, self.u, self.theta, self.chi))

    def state(self, t, grid: Grid) -> FieldState:
        return FieldState(float(t), *self.exact(t, grid.x))

    def boundary(self, grid: Grid):
        xb = np.array([grid.x[0], grid.x[-1]])

        def values(t):
            v, u, th, chi = self.exact(t, xb)
            return (v[0], u[0], th[0], chi[0]), (v[1], u[1], th[1], chi[1])

        return values

    def source(self, gas: GasModel, with_phase_field=True):
        """Forcing ``(S_v, S_u, S_theta, S_chi)`` as a function of ``(t, x)``."""
        R, nu, kappa, cv = gas.R, gas.nu, gas.kappa, gas.cv
        V, U, T, C = self.v, self.u, self.theta, self.chi

        def forcing(t, x):
            v, v_t, v_x = V.f(t, x), V.f_t(t, x), V.f_x(t, x)
            u_t, u_x, u_xx = U.f_t(t, x), U.f_x(t, x), U.f_xx(t, x)
            th, th_t, th_x, th_xx = T.f(t, x), T.f_t(t, x), T.f_x(t, x), T.f_xx(t, x)
            p = R * th / v
            p_x = R * (th_x * v - th * v_x) / v**2
            visc_x = u_xx / v - u_x * v_x / v**2
            heat_x = th_xx / v - th_x * v_x / v**2
            s_v = v_t - u_x
            s_u = u_t + p_x - nu * visc_x
            heating = -p * u_x + kappa * heat_x + nu * u_x**2 / v
            s_chi = np.zeros_like(x)
            if with_phase_field:
                c, c_t, c_x, c_xx = C.f(t, x), C.f_t(t, x), C.f_x(t, x), C.f_xx(t, x)
                cap_x = c_x * c_xx / v**2 - c_x**2 * v_x / v**3
                mu = -(c_xx / v - c_x * v_x / v**2) + c**3 - c
                s_u = s_u + cap_x
                heating = heating + v * mu**2
                s_chi = c_t + v * mu
            s_th = th_t - heating / cv
            return s_v, s_u, s_th, s_chi

        return forcing
