"""Ideal-gas closure for the Lagrangian NSAC system.

All maps are closed forms in ``(v, theta)`` or ``(v, s)``:

    p(v, theta)   = R theta / v
    s(v, theta)   = R/(gamma-1) ln((R/A) theta v^(gamma-1))
    theta(v, s)   = (A/R) v^(1-gamma) exp((gamma-1) s / R)
    p~(v, s)      = A v^(-gamma) exp((gamma-1) s / R)

The functions accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _require_positive(name, x):
    if np.any(np.asarray(x) <= 0):
        raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class GasModel:
    """Thermodynamic and transport constants.

    ``A`` defaults to ``R`` so that ``entropy_from_vtheta(1, 1) == 0``.
    """

    R: float = 1.0
    gamma: float = 1.4
    nu: float = 1.0
    kappa: float = 1.0
    A: float | None = None
    eps_interface: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.A is None:
            object.__setattr__(self, "A", self.R)
        if not (self.R > 0 and self.A > 0):
            raise ValueError("R and A must be positive")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not (self.nu > 0 and self.kappa > 0):
            raise ValueError("nu and kappa must be positive")

    @property
    def cv(self):
        return self.R / (self.gamma - 1.0)

    # -- (v, theta) variables -------------------------------------------------

    def pressure(self, v, theta):
        _require_positive("v", v)
        return self.R * theta / v

    def p_v(self, v, theta):
        return -self.R * theta / (v * v)

    def p_theta(self, v, theta):
        return self.R / v

    def internal_energy(self, theta):
        return self.cv * theta

    def entropy_from_vtheta(self, v, theta):
        _require_positive("v", v)
        _require_positive("theta", theta)
        g1 = self.gamma - 1.0
        return (self.R / g1) * np.log((self.R / self.A) * theta * v**g1)

    # -- (v, s) variables -----------------------------------------------------

    def _entropy_factor(self, s):
        return np.exp((self.gamma - 1.0) * s / self.R)

    def theta_from_vs(self, v, s):
        _require_positive("v", v)
        return (self.A / self.R) * v ** (1.0 - self.gamma) * self._entropy_factor(s)

    def theta_tilde_v(self, v, s):
        """d theta / d v at fixed entropy."""
        return (1.0 - self.gamma) * self.theta_from_vs(v, s) / v

    def p_tilde(self, v, s):
        _require_positive("v", v)
        return self.A * v ** (-self.gamma) * self._entropy_factor(s)

    def p_tilde_v(self, v, s):
        _require_positive("v", v)
        return -self.A * self.gamma * v ** (-self.gamma - 1.0) * self._entropy_factor(s)

    def p_tilde_s(self, v, s):
        return (self.gamma - 1.0) / self.R * self.p_tilde(v, s)

    def sound_speed(self, v, s):
        """sqrt(-p~_v), the Lagrangian characteristic speed magnitude."""
        _require_positive("v", v)
        return (
            np.sqrt(self.A * self.gamma * self._entropy_factor(s))
            * v ** (-(self.gamma + 1.0) / 2.0)
        )

    def lam(self, family, v, s):
        """Characteristic speed of family 1 (negative) or 3 (positive)."""
        c = self.sound_speed(v, s)
        if family == 1:
            return -c
        if family == 3:
            return c
        raise ValueError(f"family must be 1 or 3, got {family!r}")

    def lam_v(self, family, v, s):
        """d lambda / d v; positive for family 1, negative for family 3."""
        return -(self.gamma + 1.0) / 2.0 * self.lam(family, v, s) / v

    def lam_inverse(self, family, w, s):
        """Specific volume at which ``lam(family, v, s) == w``."""
        w = np.asarray(w, dtype=float)
        if family == 1:
            if np.any(w >= 0):
                raise ValueError("family-1 speeds must be negative")
        elif family == 3:
            if np.any(w <= 0):
                raise ValueError("family-3 speeds must be positive")
        else:
            raise ValueError(f"family must be 1 or 3, got {family!r}")
        base = self.A * self.gamma * self._entropy_factor(s) / (w * w)
        out = base ** (1.0 / (self.gamma + 1.0))
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class ThermoState:
    v: float
    theta: float

    def __post_init__(self):
        if not (self.v > 0 and self.theta > 0):
            raise ValueError("ThermoState requires v > 0 and theta > 0")

    def entropy(self, gas):
        return gas.entropy_from_vtheta(self.v, self.theta)

    def pressure(self, gas):
        return gas.pressure(self.v, self.theta)


def phi_convex(x):
    """Phi(x) = x - 1 - ln x, the relative-entropy kernel (zero only at x = 1)."""
    _require_positive("x", x)
    d = np.asarray(x, dtype=float) - 1.0
    out = d - np.log1p(d)
    return out if out.ndim else float(out)
