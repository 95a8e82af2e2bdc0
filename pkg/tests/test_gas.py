import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsaclab.gas import GasModel, ThermoState, phi_convex

positive = st.floats(min_value=0.1, max_value=10.0)
gammas = st.floats(min_value=1.01, max_value=3.0)


@given(v=positive, theta=positive, gamma=gammas, A=st.floats(0.2, 5.0))
def test_entropy_temperature_round_trip(v, theta, gamma, A):
    gas = GasModel(gamma=gamma, A=A)
    s = gas.entropy_from_vtheta(v, theta)
    assert gas.theta_from_vs(v, s) == pytest.approx(theta, rel=1e-12)
    assert gas.entropy_from_vtheta(v, gas.theta_from_vs(v, s)) == pytest.approx(s, abs=1e-12 * max(1, abs(s)))


@given(v=positive, theta=positive, gamma=gammas)
def test_pressure_matches_isentropic_form(v, theta, gamma):
    gas = GasModel(gamma=gamma, A=1.7)
    s = gas.entropy_from_vtheta(v, theta)
    assert gas.p_tilde(v, s) == pytest.approx(gas.pressure(v, theta), rel=1e-12)


@pytest.mark.parametrize("gamma", [1.05, 1.4, 5 / 3])
@pytest.mark.parametrize("v", [0.3, 1.0, 4.0])
def test_derivatives_against_finite_differences(gamma, v):
    gas = GasModel(gamma=gamma)
    s, h = 0.37, 1e-5 * v
    fd = lambda f: (f(v + h) - f(v - h)) / (2 * h)
    assert gas.p_tilde_v(v, s) == pytest.approx(fd(lambda z: gas.p_tilde(z, s)), rel=1e-8)
    assert gas.theta_tilde_v(v, s) == pytest.approx(fd(lambda z: gas.theta_from_vs(z, s)), rel=1e-8)
    for fam in (1, 3):
        assert gas.lam_v(fam, v, s) == pytest.approx(fd(lambda z: gas.lam(fam, z, s)), rel=1e-8)
    ds = 1e-6
    fds = (gas.p_tilde(v, s + ds) - gas.p_tilde(v, s - ds)) / (2 * ds)
    assert gas.p_tilde_s(v, s) == pytest.approx(fds, rel=1e-8)


def test_sound_speed_squared_is_minus_p_v():
    gas = GasModel(gamma=1.4)
    v = np.linspace(0.2, 5, 50)
    assert np.allclose(gas.sound_speed(v, 0.1) ** 2, -gas.p_tilde_v(v, 0.1), rtol=1e-13)


@pytest.mark.parametrize("family", [1, 3])
def test_lambda_inverse_round_trip(family):
    gas = GasModel(gamma=1.4)
    v = np.geomspace(0.1, 10, 200)
    w = gas.lam(family, v, -0.4)
    assert np.allclose(gas.lam_inverse(family, w, -0.4), v, rtol=1e-13)


def test_lambda_monotone_directions():
    gas = GasModel(gamma=1.4)
    v = np.geomspace(0.1, 10, 100)
    assert np.all(np.diff(gas.lam(1, v, 0.0)) > 0)
    assert np.all(np.diff(gas.lam(3, v, 0.0)) < 0)


@pytest.mark.parametrize("family,w", [(1, 0.5), (3, -0.5), (2, 1.0)])
def test_lambda_inverse_rejects_bad_speed(family, w):
    with pytest.raises(ValueError):
        GasModel().lam_inverse(family, w, 0.0)


@pytest.mark.parametrize(
    "kwargs", [dict(gamma=1.0), dict(R=-1.0), dict(nu=0.0), dict(kappa=-1.0), dict(A=0.0)]
)
def test_invalid_gas_parameters(kwargs):
    with pytest.raises(ValueError):
        GasModel(**kwargs)


def test_nonpositive_state_rejected():
    gas = GasModel()
    with pytest.raises(ValueError):
        gas.pressure(0.0, 1.0)
    with pytest.raises(ValueError):
        gas.entropy_from_vtheta(1.0, -1.0)
    with pytest.raises(ValueError):
        ThermoState(1.0, 0.0)


def test_reference_state_has_zero_entropy():
    gas = GasModel(R=2.0, gamma=1.3)
    assert gas.entropy_from_vtheta(1.0, 1.0) == 0.0
    assert gas.cv == pytest.approx(2.0 / 0.3)


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_phi_convex_nonnegative_and_bounded(x):
    val = phi_convex(x)
    assert val >= 0
    assert val <= (x - 1) ** 2 / (2 * min(1.0, x) ** 2) + 1e-15


def test_phi_convex_small_argument_accuracy():
    d = 1e-9
    assert phi_convex(1 + d) == pytest.approx(d * d / 2, rel=1e-6)
    with pytest.raises(ValueError):
        phi_convex(0.0)


@settings(max_examples=50)
@given(v=positive, theta=positive)
def test_thermo_state_matches_gas(v, theta):
    gas = GasModel()
    ts = ThermoState(v, theta)
    assert ts.pressure(gas) == gas.pressure(v, theta)
    assert ts.entropy(gas) == gas.entropy_from_vtheta(v, theta)
