"""Smooth composite rarefaction wave built from exact Burgers characteristics.

Each nontrivial family ``i`` carries a Burgers solution ``w_i`` started from
monotone data that interpolates the fan-edge speeds; the wave volume is
``V_i = lambda_i^{-1}(w_i)`` and the composite wave is superposed about the
intermediate state.  The Burgers time is shifted by ``t0 = 1/eps_w**2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import NonConvergence
from .gas import GasModel
from .riemann import RiemannData, rarefaction_integral

_QUAD_BREAKS = (0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0)


def _kq_integral(q):
    """Integral of (1+y^2)^-q over [0, inf): Gauss-Kronrod on [0, Y] plus a tail series."""
    total = 0.0
    for a, b in zip(_QUAD_BREAKS[:-1], _QUAD_BREAKS[1:]):
        val, _ = integrate.quad(
            lambda y: (1.0 + y * y) ** (-q), a, b, epsabs=0.0, epsrel=1e-13, limit=200
        )
        total += val
    Y = _QUAD_BREAKS[-1]
    # (1+y^2)^-q = y^-2q (1 - q y^-2 + ...)
    tail = Y ** (1 - 2 * q) / (2 * q - 1) - q * Y ** (-1 - 2 * q) / (2 * q + 1)
    return total + tail


@dataclass(frozen=True)
class SmoothingParams:
    eps_w: float = 0.1
    q_exp: float = 2.0
    K_q: float = field(init=False)
    t0: float = field(init=False)

    def __post_init__(self):
        if not self.eps_w > 0:
            raise ValueError("eps_w must be positive")
        if not self.q_exp > 1.5:
            raise ValueError("q_exp must exceed 3/2")
        object.__setattr__(self, "K_q", 1.0 / _kq_integral(self.q_exp))
        object.__setattr__(self, "t0", 1.0 / self.eps_w**2)

    def step(self, x):
        """K_q * integral of (1+y^2)^-q from 0 to eps_w*x; odd, with limits -1 and 1.

        Evaluated through the regularized incomplete beta function, using
        the substitution y = tan(phi).
        """
        z = self.eps_w * np.asarray(x, dtype=float)
        a, b = 0.5, self.q_exp - 0.5
        z2 = z * z
        inner = np.abs(z) <= 1.0
        frac = np.where(
            inner,
            special.betainc(a, b, z2 / (1.0 + z2)),
            special.betaincc(b, a, 1.0 / (1.0 + z2)),
        )
        norm = self.K_q * 0.5 * special.beta(a, b)
        return np.sign(z) * norm * frac

    def step_x(self, x):
        z = self.eps_w * np.asarray(x, dtype=float)
        return self.K_q * self.eps_w * (1.0 + z * z) ** (-self.q_exp)


def burgers_initial(sp: SmoothingParams, w_minus, w_plus, x):
    return 0.5 * (w_plus + w_minus) + 0.5 * (w_plus - w_minus) * sp.step(x)


def burgers_initial_x(sp: SmoothingParams, w_minus, w_plus, x):
    return 0.5 * (w_plus - w_minus) * sp.step_x(x)


def characteristic_foot(sp, w_minus, w_plus, t, x, max_iter=200):
    """Solve ``y + t * w0(y) = x`` for the characteristic foot ``y``.

    Safeguarded Newton inside the bracket ``[x - t w+, x - t w-]``; the map
    is strictly increasing so the root is unique.  Starting from the
    inflection point ``y = 0`` makes the Newton iterates monotone: the map
    is convex to the left of 0 and concave to the right.
    """
    x = np.asarray(x, dtype=float)
    lo = x - t * w_plus
    hi = x - t * w_minus
    y = np.clip(np.zeros(x.shape), lo, hi)
    eps = np.finfo(float).eps
    for _ in range(max_iter):
        g = y + t * burgers_initial(sp, w_minus, w_plus, y) - x
        # |y| enters the scale because the residual cannot beat the spacing of floats near y
        done = np.abs(g) <= 2e-13 * (1.0 + np.abs(x) + np.abs(y))
        if done.all():
            return y
        lo = np.where(g < 0, y, lo)
        hi = np.where(g > 0, y, hi)
        dg = 1.0 + t * burgers_initial_x(sp, w_minus, w_plus, y)
        y_new = y - g / dg
        outside = (y_new <= lo) | (y_new >= hi)
        y_new = np.where(outside, 0.5 * (lo + hi), y_new)
        # once t * w0 dominates, roundoff in the sum can exceed tol; a vanishing step ends it
        stalled = np.abs(y_new - y) <= 4 * eps * (1.0 + np.abs(y))
        y = np.where(done, y, y_new)
        if np.all(done | stalled):
            return y
    raise NonConvergence("characteristic root solve exceeded iteration cap")


def burgers_eval(sp: SmoothingParams, w_minus, w_plus, t, x):
    """Smooth Burgers solution and its derivatives ``(w, w_x, w_t)`` at ``(t, x)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    x = np.asarray(x, dtype=float)
    if w_minus == w_plus:
        w = np.full(x.shape, float(w_minus))
        zero = np.zeros(x.shape)
        return w, zero, zero.copy()
    if not w_minus < w_plus:
        raise ValueError("Burgers data must be increasing (w_minus < w_plus)")
    y = characteristic_foot(sp, w_minus, w_plus, t, x)
    w = burgers_initial(sp, w_minus, w_plus, y)
    d0 = burgers_initial_x(sp, w_minus, w_plus, y)
    w_x = d0 / (1.0 + t * d0)
    return w, w_x, -w * w_x


@dataclass(frozen=True)
class WaveComponent:
    """One rarefaction family sampled at points ``x``."""

    w: np.ndarray
    w_x: np.ndarray
    V: np.ndarray
    U: np.ndarray
    Theta: np.ndarray
    V_x: np.ndarray
    U_x: np.ndarray
    Theta_x: np.ndarray
    V_t: np.ndarray
    U_t: np.ndarray
    Theta_t: np.ndarray


@dataclass(frozen=True)
class ProfileState:
    V: np.ndarray
    U: np.ndarray
    Theta: np.ndarray
    S: np.ndarray
    V_x: np.ndarray
    U_x: np.ndarray
    Theta_x: np.ndarray
    V_t: np.ndarray
    U_t: np.ndarray
    Theta_t: np.ndarray
    wave1: WaveComponent
    wave3: WaveComponent


@dataclass(frozen=True)
class Residuals:
    g: np.ndarray
    g_x: np.ndarray
    q: np.ndarray
    r: np.ndarray


class WaveProfile:
    """Evaluable smooth approximation ``(V, U, Theta, S)(t, x)`` of the Riemann fan."""

    def __init__(self, gas: GasModel, riemann: RiemannData, smoothing: SmoothingParams):
        self.gas = gas
        self.riemann = riemann
        self.smoothing = smoothing
        self.w1 = riemann.fan1
        self.w3 = riemann.fan3
        if self.w1[0] > self.w1[1] or self.w3[0] > self.w3[1]:
            raise ValueError("fan speeds must be ordered")

    @property
    def t0(self):
        return self.smoothing.t0

    def _component(self, family, t, x):
        gas, rd = self.gas, self.riemann
        s = rd.s_bar
        if family == 1:
            w_minus, w_plus = self.w1
            v_ref, u_ref, sign = rd.ends.v_minus, rd.ends.u_minus, 1.0
            trivial = rd.trivial1
            v_const, u_const, th_const = rd.ends.v_minus, rd.ends.u_minus, rd.ends.theta_minus
        else:
            w_minus, w_plus = self.w3
            v_ref, u_ref, sign = rd.v_m, rd.u_m, -1.0
            trivial = rd.trivial3
            v_const, u_const, th_const = rd.v_m, rd.u_m, rd.theta_m
        if trivial:
            zero = np.zeros(x.shape)
            return WaveComponent(
                w=np.full(x.shape, w_minus), w_x=zero,
                V=np.full(x.shape, v_const), U=np.full(x.shape, u_const),
                Theta=np.full(x.shape, th_const),
                V_x=zero, U_x=zero, Theta_x=zero, V_t=zero, U_t=zero, Theta_t=zero,
            )
        w, w_x, w_t = burgers_eval(self.smoothing, w_minus, w_plus, t + self.t0, x)
        V = np.asarray(gas.lam_inverse(family, w, s), dtype=float)
        dV_dw = 1.0 / gas.lam_v(family, V, s)
        V_x, V_t = w_x * dV_dw, w_t * dV_dw
        c = gas.sound_speed(V, s)
        U = u_ref + sign * rarefaction_integral(gas, v_ref, V, s)
        Theta = gas.theta_from_vs(V, s)
        dTh = gas.theta_tilde_v(V, s)
        return WaveComponent(
            w=w, w_x=w_x, V=V, U=U, Theta=Theta,
            V_x=V_x, U_x=sign * c * V_x, Theta_x=dTh * V_x,
            V_t=V_t, U_t=sign * c * V_t, Theta_t=dTh * V_t,
        )

    def evaluate(self, t, x):
        if t < 0:
            raise ValueError("t must be nonnegative")
        x = np.asarray(x, dtype=float)
        rd = self.riemann
        c1 = self._component(1, t, x)
        c3 = self._component(3, t, x)
        return ProfileState(
            V=c1.V + c3.V - rd.v_m,
            U=c1.U + c3.U - rd.u_m,
            Theta=c1.Theta + c3.Theta - rd.theta_m,
            S=np.full(x.shape, rd.s_bar),
            V_x=c1.V_x + c3.V_x,
            U_x=c1.U_x + c3.U_x,
            Theta_x=c1.Theta_x + c3.Theta_x,
            V_t=c1.V_t + c3.V_t,
            U_t=c1.U_t + c3.U_t,
            Theta_t=c1.Theta_t + c3.Theta_t,
            wave1=c1,
            wave3=c3,
        )

    def residuals(self, t, x, state: ProfileState | None = None) -> Residuals:
        """Source terms left over when the composite wave is put into the Euler system.

        ``g`` is the pressure interaction, ``r`` the temperature-equation
        residual and ``q`` the total-energy residual; all vanish for a
        single wave.
        """
        gas, rd = self.gas, self.riemann
        st = self.evaluate(t, x) if state is None else state
        s = rd.s_bar
        p = gas.pressure(st.V, st.Theta)
        p_x = gas.p_v(st.V, st.Theta) * st.V_x + gas.p_theta(st.V, st.Theta) * st.Theta_x
        p_m = gas.pressure(rd.v_m, rd.theta_m)
        w1, w3 = st.wave1, st.wave3
        g = p - gas.p_tilde(w1.V, s) - gas.p_tilde(w3.V, s) + p_m
        g_x = p_x - gas.p_tilde_v(w1.V, s) * w1.V_x - gas.p_tilde_v(w3.V, s) * w3.V_x
        cv_theta_t = gas.cv * st.Theta_t
        r = cv_theta_t + p * st.U_x
        q = cv_theta_t + st.U * st.U_t + p * st.U_x + st.U * p_x
        return Residuals(g=g, g_x=g_x, q=q, r=r)

    def far_state(self):
        e = self.riemann.ends
        return (e.v_minus, e.u_minus, e.theta_minus), (e.v_plus, e.u_plus, e.theta_plus)

    def farfield_halfwidth(self, t, tol=1e-6):
        """Smallest ``X`` (to 1%) with the profile within ``tol`` of both end states for ``|x| >= X``."""
        (vl, ul, tl), (vr, ur, tr) = self.far_state()

        def deviation(X):
            st = self.evaluate(t, np.array([-X, X]))
            left = max(abs(st.V[0] - vl), abs(st.U[0] - ul), abs(st.Theta[0] - tl))
            right = max(abs(st.V[1] - vr), abs(st.U[1] - ur), abs(st.Theta[1] - tr))
            return max(left, right)

        speed = max(abs(self.w1[0]), abs(self.w3[1]), 1e-12)
        X = speed * (t + self.t0) + 1.0 / self.smoothing.eps_w
        while deviation(X) > tol:
            X *= 2.0
            if X > 1e12:
                raise NonConvergence("far-field half-width search diverged")
        lo, hi = 0.0, X
        while hi - lo > 0.01 * hi:
            mid = 0.5 * (lo + hi)
            if deviation(mid) > tol:
                lo = mid
            else:
                hi = mid
        return hi


def profile_eval(p: WaveProfile, t, x) -> ProfileState:
    return p.evaluate(t, x)


def profile_residuals(p: WaveProfile, t, x) -> Residuals:
    return p.residuals(t, x)


def kq_closed_form(q):
    """Reference value of K_q from the Beta function (used to cross-check quadrature)."""
    return 2.0 / special.beta(0.5, q - 0.5)


def t_sup_wx(sp: SmoothingParams, w_minus, w_plus, t):
    """``t * sup_x w_x(t, .)``; the supremum sits on the characteristic from ``y = 0``."""
    a = float(burgers_initial_x(sp, w_minus, w_plus, 0.0))
    return t * a / (1.0 + t * a) if t > 0 else 0.0


__all__ = [
    "SmoothingParams",
    "WaveProfile",
    "ProfileState",
    "Residuals",
    "profile_eval",
    "profile_residuals",
    "burgers_initial",
    "burgers_eval",
    "characteristic_foot",
    "kq_closed_form",
    "t_sup_wx",
]
