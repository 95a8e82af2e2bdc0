"""Self-similar Euler solution made of a 1-rarefaction and a 3-rarefaction.

In Lagrangian coordinates the characteristic speeds are ``-c(v)`` and
``+c(v)`` with ``c = sqrt(-p~_v)`` decreasing in ``v``.  Across the 1-wave
``v`` and ``u`` both increase; across the 3-wave ``u`` increases while ``v``
decreases, so the intermediate volume satisfies ``v_m >= max(v_-, v_+)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoTwoRarefactionSolution, NonConvergence
from .gas import GasModel

_GAMMA_LIMIT = 1e-8


@dataclass(frozen=True)
class EndStates:
    v_minus: float
    u_minus: float
    theta_minus: float
    v_plus: float
    u_plus: float
    theta_plus: float
    chi_far: float = 1.0

    def __post_init__(self):
        if min(self.v_minus, self.v_plus, self.theta_minus, self.theta_plus) <= 0:
            raise ValueError("end-state volumes and temperatures must be positive")
        if self.chi_far != 1.0:
            raise ValueError("far-field phase value is fixed at 1")

    @classmethod
    def entropy_matched(cls, gas, v_minus, u_minus, theta_minus, v_plus, u_plus):
        """Build end states whose right temperature shares the left entropy."""
        s = gas.entropy_from_vtheta(v_minus, theta_minus)
        theta_plus = float(gas.theta_from_vs(v_plus, s))
        return cls(v_minus, u_minus, theta_minus, v_plus, u_plus, theta_plus)

    def entropies(self, gas):
        return (
            float(gas.entropy_from_vtheta(self.v_minus, self.theta_minus)),
            float(gas.entropy_from_vtheta(self.v_plus, self.theta_plus)),
        )

    def check_entropy(self, gas, tol=1e-10):
        s_minus, s_plus = self.entropies(gas)
        if abs(s_plus - s_minus) > tol * max(1.0, abs(s_minus)):
            raise ValueError(
                f"end states must share entropy: s- = {s_minus!r}, s+ = {s_plus!r}"
            )
        return s_minus


def rarefaction_integral(gas: GasModel, v_a, v_b, s):
    """Closed form of the integral of ``c(z, s)`` for ``z`` from ``v_a`` to ``v_b``."""
    v_a = np.asarray(v_a, dtype=float)
    v_b = np.asarray(v_b, dtype=float)
    if np.any(v_a <= 0) or np.any(v_b <= 0):
        raise ValueError("volumes must be positive")
    g1 = gas.gamma - 1.0
    amp = math.sqrt(gas.A * gas.gamma) * np.exp(g1 * s / (2.0 * gas.R))
    la, lb = np.log(v_a), np.log(v_b)
    if g1 < _GAMMA_LIMIT:
        out = amp * (lb - la)
    else:
        k = g1 / 2.0
        # a^-k - b^-k written with expm1 so it stays accurate as gamma -> 1
        out = amp * np.exp(-k * lb) * np.expm1(-k * (la - lb)) / k
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class RiemannData:
    gas: GasModel
    ends: EndStates
    s_bar: float
    v_m: float
    u_m: float
    theta_m: float
    fan1: tuple[float, float]
    fan3: tuple[float, float]
    delta: float
    residual: float

    @property
    def trivial1(self):
        return self.v_m == self.ends.v_minus

    @property
    def trivial3(self):
        return self.v_m == self.ends.v_plus

    def evaluate(self, xi):
        """Riemann solution ``(V, U, Theta, S)`` at similarity coordinate ``xi = x/t``."""
        return riemann_eval(self, self.ends, xi)


def _intermediate_residual(gas, ends, s, vm):
    return (
        rarefaction_integral(gas, ends.v_minus, vm, s)
        + rarefaction_integral(gas, ends.v_plus, vm, s)
        - (ends.u_plus - ends.u_minus)
    )


def solve_intermediate(gas: GasModel, ends: EndStates, max_iter=400) -> RiemannData:
    """Find ``(v_m, u_m)`` joining the end states through two rarefactions.

    Bisection in ``log v`` on the monotone residual, then Newton polish
    using its derivative ``2 c(v_m)``.
    """
    s = ends.check_entropy(gas)
    du = ends.u_plus - ends.u_minus
    v_floor = max(ends.v_minus, ends.v_plus)
    tol = 1e-12 * (1.0 + abs(du))

    f_floor = _intermediate_residual(gas, ends, s, v_floor)
    if f_floor > tol:
        raise NoTwoRarefactionSolution(
            f"u+ - u- = {du:.6g} is below the two-rarefaction threshold "
            f"{du + f_floor:.6g}; the solution contains a shock"
        )
    if abs(f_floor) <= tol:
        vm = v_floor
    else:
        lo = math.log(v_floor)
        hi = math.log(max(ends.v_minus, ends.v_plus) * 1e6)
        if _intermediate_residual(gas, ends, s, math.exp(hi)) < 0:
            raise NoTwoRarefactionSolution(
                f"u+ - u- = {du:.6g} exceeds the bracket; the solution reaches vacuum"
            )
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            if _intermediate_residual(gas, ends, s, math.exp(mid)) > 0:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-9:
                break
        else:
            raise NonConvergence("bisection for v_m did not converge")
        vm = math.exp(0.5 * (lo + hi))
        for _ in range(50):
            f = _intermediate_residual(gas, ends, s, vm)
            if abs(f) <= tol:
                break
            step = f / (2.0 * gas.sound_speed(vm, s))
            vm_new = vm - step
            if not (math.exp(lo) * (1 - 1e-12) <= vm_new <= math.exp(hi) * (1 + 1e-12)):
                raise NonConvergence("Newton polish for v_m left the bracket")
            if vm_new == vm:
                break
            vm = vm_new
        else:
            raise NonConvergence("Newton polish for v_m did not converge")

    residual = abs(_intermediate_residual(gas, ends, s, vm))
    if residual > tol:
        raise NonConvergence(f"v_m residual {residual:.3e} above tolerance {tol:.3e}")
    um = ends.u_minus + rarefaction_integral(gas, ends.v_minus, vm, s)
    if vm < v_floor or um < ends.u_minus or ends.u_plus < um - tol:
        raise NoTwoRarefactionSolution("intermediate state violates rarefaction admissibility")

    fan1 = (float(gas.lam(1, ends.v_minus, s)), float(gas.lam(1, vm, s)))
    fan3 = (float(gas.lam(3, vm, s)), float(gas.lam(3, ends.v_plus, s)))
    delta = abs(ends.v_plus - ends.v_minus) + abs(ends.u_plus - ends.u_minus)
    return RiemannData(
        gas=gas,
        ends=ends,
        s_bar=float(s),
        v_m=float(vm),
        u_m=float(um),
        theta_m=float(gas.theta_from_vs(vm, s)),
        fan1=fan1,
        fan3=fan3,
        delta=float(delta),
        residual=float(residual),
    )


def riemann_eval(data: RiemannData, ends: EndStates, xi):
    """Evaluate the composite rarefaction solution at ``xi``.

    Returns ``(V, U, Theta, S)`` arrays with the shape of ``xi``.
    """
    gas = data.gas
    s = data.s_bar
    xi = np.asarray(xi, dtype=float)

    v1 = np.full(xi.shape, data.v_m)
    v1[xi <= data.fan1[0]] = ends.v_minus
    in1 = (xi > data.fan1[0]) & (xi < data.fan1[1])
    if np.any(in1):
        v1[in1] = gas.lam_inverse(1, xi[in1], s)
    u1 = ends.u_minus + rarefaction_integral(gas, ends.v_minus, v1, s)

    v3 = np.full(xi.shape, data.v_m)
    v3[xi >= data.fan3[1]] = ends.v_plus
    in3 = (xi > data.fan3[0]) & (xi < data.fan3[1])
    if np.any(in3):
        v3[in3] = gas.lam_inverse(3, xi[in3], s)
    u3 = data.u_m - rarefaction_integral(gas, data.v_m, v3, s)

    V = v1 + v3 - data.v_m
    U = u1 + u3 - data.u_m
    # the two fans never overlap, so theta(V) equals the sum of per-wave temperatures
    Theta = gas.theta_from_vs(V, s)
    left = xi <= data.fan1[0]
    right = xi >= data.fan3[1]
    V[left], U[left], Theta[left] = ends.v_minus, ends.u_minus, ends.theta_minus
    V[right], U[right], Theta[right] = ends.v_plus, ends.u_plus, ends.theta_plus
    S = np.full(xi.shape, s)
    return V, U, Theta, S
