import ast
import inspect

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import aerograsp.controller as controller
from aerograsp.controller import (DEFAULT_K_HAT_INIT, DEFAULT_LAMBDA, DEFAULT_NU, DEFAULT_PHI,
                                  AdaptiveGains, BaselineSmcConfig, ControllerConfig,
                                  baseline_smc_step, control_law, gain_rate,
                                  proposed_controller_step, sliding_variable, tracking_error,
                                  uncertainty_gain_rho)
from aerograsp.dynamics import SystemState
from aerograsp.trajectory import DesiredPoint

finite = st.floats(-50, 50, allow_nan=False)
vec8 = st.lists(finite, min_size=8, max_size=8).map(np.array)
positive = st.floats(1e-6, 20, allow_nan=False)


def _desired(chi_d, chi_d_dot):
    return DesiredPoint(np.asarray(chi_d, float), np.asarray(chi_d_dot, float), np.zeros(8))


# -- sliding variable ------------------------------------------------------------

def test_sliding_variable_zero():
    np.testing.assert_array_equal(sliding_variable(np.zeros(8), np.zeros(8), DEFAULT_PHI),
                                  np.zeros(8))


def test_sliding_variable_identity_phi():
    rng = np.random.default_rng(0)
    e, e_dot = rng.normal(size=8), rng.normal(size=8)
    np.testing.assert_allclose(sliding_variable(e, e_dot, np.eye(8)), e_dot + e)


def test_sliding_variable_scaled_unit_error():
    Phi = np.diag([2.0] + [1.0] * 7)
    s = sliding_variable(np.eye(8)[0], np.zeros(8), Phi)
    np.testing.assert_array_equal(s, [2.0] + [0.0] * 7)


# -- adaptive law ----------------------------------------------------------------

def test_gain_rate_pure_leak():
    rate = gain_rate(AdaptiveGains(), 0.0, 0.0, DEFAULT_NU)
    assert rate[0] == pytest.approx(-0.2)


def test_gain_rate_substitution():
    rate = gain_rate(np.array([0.1, 0.1, 0.1]), 1.0, 2.0, (2.0, 5.0, 5.0))
    np.testing.assert_allclose(rate, [0.8, 1.5, 3.5], atol=1e-15)


@given(s_norm=st.floats(0, 100), xi=st.floats(0, 100))
def test_gain_rate_nonnegative_at_zero_gain(s_norm, xi):
    assert np.all(gain_rate(np.zeros(3), s_norm, xi, DEFAULT_NU) >= 0)


def test_adaptive_gains_must_be_positive():
    with pytest.raises(ValueError):
        AdaptiveGains(np.array([0.1, 0.0, 0.1]))
    with pytest.raises(ValueError):
        AdaptiveGains(np.array([0.1, np.nan, 0.1]))


# -- uncertainty gain --------------------------------------------------------------

def test_rho_at_zero_error():
    assert uncertainty_gain_rho(np.array([0.7, 2.0, 3.0]), 0.0) == 0.7


def test_rho_substitutions():
    assert uncertainty_gain_rho(np.array([0.1, 0.1, 0.1]), 1.0) == pytest.approx(0.3)
    assert uncertainty_gain_rho(np.array([1.0, 2.0, 3.0]), 2.0) == pytest.approx(17.0)


@given(k=st.lists(positive, min_size=3, max_size=3), a=st.floats(0, 50), b=st.floats(0, 50))
def test_rho_monotone_in_error(k, a, b):
    lo, hi = sorted((a, b))
    k = np.array(k)
    assert uncertainty_gain_rho(k, lo) <= uncertainty_gain_rho(k, hi)
    assert uncertainty_gain_rho(k, lo) > 0


# -- control law --------------------------------------------------------------------

def test_control_law_zero_surface():
    np.testing.assert_array_equal(control_law(np.zeros(8), 3.0, DEFAULT_LAMBDA, 0.1), np.zeros(8))


def test_control_law_substitution():
    s = np.eye(8)[0]
    tau = control_law(s, 1.0, 2.0 * np.eye(8), 0.1)
    assert tau[0] == pytest.approx(-2.0 - 1.0 / np.sqrt(1.1))
    assert tau[0] == pytest.approx(-2.9535, abs=5e-5)
    np.testing.assert_array_equal(tau[1:], 0.0)


def test_switching_term_saturates_at_rho():
    s = 1e6 * np.eye(8)[3]
    tau = control_law(s, 2.5, np.zeros(8) + 1e-300, 0.1)
    assert -tau[3] == pytest.approx(2.5, rel=1e-9)


def test_control_law_accepts_matrix_or_diagonal():
    rng = np.random.default_rng(3)
    s = rng.normal(size=8)
    np.testing.assert_allclose(control_law(s, 0.4, np.diag(DEFAULT_LAMBDA), 0.1),
                               control_law(s, 0.4, np.array(DEFAULT_LAMBDA), 0.1))


@given(s=vec8, rho=st.floats(0, 100))
def test_control_law_is_dissipative(s, rho):
    tau = control_law(s, rho, DEFAULT_LAMBDA, 0.1)
    assert s @ tau <= 1e-12 * max(1.0, s @ s)


@settings(max_examples=50)
@given(s=vec8, ds=vec8)
def test_control_law_lipschitz(s, ds):
    # smooth through s = 0: bounded change for small perturbations
    h = 1e-7
    a = control_law(s, 1.0, DEFAULT_LAMBDA, 0.1)
    b = control_law(s + h * ds, 1.0, DEFAULT_LAMBDA, 0.1)
    bound = (max(DEFAULT_LAMBDA) + 2.0 / np.sqrt(0.1)) * h * np.linalg.norm(ds)
    assert np.linalg.norm(b - a) <= bound + 1e-12


# -- full step --------------------------------------------------------------------

def test_perfect_tracking_step():
    cfg = ControllerConfig()
    chi = np.linspace(0, 1, 8)
    tau, rate = proposed_controller_step(SystemState(chi, np.zeros(8)), _desired(chi, np.zeros(8)),
                                         cfg.initial_gains(), cfg)
    np.testing.assert_array_equal(tau, np.zeros(8))
    np.testing.assert_allclose(rate, -np.array(DEFAULT_NU) * np.array(DEFAULT_K_HAT_INIT))


def test_step_matches_hand_composition():
    rng = np.random.default_rng(7)
    cfg = ControllerConfig()
    Phi, Lam = np.diag(DEFAULT_PHI), np.diag(DEFAULT_LAMBDA)
    for _ in range(100):
        state = SystemState(rng.normal(size=8), rng.normal(size=8))
        des = _desired(rng.normal(size=8), rng.normal(size=8))
        k = rng.uniform(0.01, 3.0, size=3)
        e = state.chi - des.chi_d
        e_dot = state.chi_dot - des.chi_d_dot
        s = e_dot + Phi @ e
        xi = np.linalg.norm(np.concatenate([e, e_dot]))
        rho = k[0] + k[1] * xi + k[2] * xi ** 2
        tau_ref = -Lam @ s - rho * s / np.sqrt(s @ s + 0.1)
        rate_ref = np.linalg.norm(s) * xi ** np.arange(3) - np.array(DEFAULT_NU) * k
        tau, rate = proposed_controller_step(state, des, AdaptiveGains(k), cfg)
        np.testing.assert_allclose(tau, tau_ref, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(rate, rate_ref, rtol=1e-13, atol=1e-13)


def test_step_is_pure():
    cfg = ControllerConfig()
    state = SystemState(np.ones(8), -np.ones(8))
    des = _desired(np.zeros(8), np.zeros(8))
    gains = AdaptiveGains(np.array([0.3, 0.2, 0.1]))
    first = proposed_controller_step(state, des, gains, cfg)
    second = proposed_controller_step(state, des, gains, cfg)
    np.testing.assert_array_equal(first[0], second[0])
    np.testing.assert_array_equal(first[1], second[1])
    np.testing.assert_array_equal(gains.k_hat, [0.3, 0.2, 0.1])


def test_controller_module_is_model_free():
    tree = ast.parse(inspect.getsource(controller))
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            imported.add(node.module or "")
        elif isinstance(node, ast.Import):
            imported.update(alias.name for alias in node.names)
    assert not any("dynamics" in name or "simkernel" in name for name in imported)
    assert "UamParams" not in inspect.getsource(controller)


def test_tracking_error_xi_norm():
    err = tracking_error(SystemState(np.full(8, 1.0), np.full(8, 2.0)),
                         _desired(np.zeros(8), np.zeros(8)))
    assert err.xi_norm == pytest.approx(np.sqrt(8 + 32))


# -- configs and baseline -------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        ControllerConfig(Lambda=(1.0,) * 7 + (0.0,))
    with pytest.raises(ValueError):
        ControllerConfig(nu=(1.0, 1.0))
    with pytest.raises(ValueError):
        ControllerConfig(delta=0.0)
    with pytest.raises(ValueError):
        ControllerConfig(Phi=np.ones((8, 8)))
    assert ControllerConfig(Phi=np.diag(DEFAULT_PHI)).Phi == DEFAULT_PHI


def test_baseline_zero_surface_and_pure_proportional():
    cfg = BaselineSmcConfig(fixed_rho=0.0)
    chi = np.zeros(8)
    des = _desired(np.zeros(8), np.zeros(8))
    np.testing.assert_array_equal(baseline_smc_step(SystemState(chi, chi), des, cfg), np.zeros(8))
    state = SystemState(np.ones(8), np.zeros(8))
    s = sliding_variable(np.ones(8), np.zeros(8), DEFAULT_PHI)
    np.testing.assert_allclose(baseline_smc_step(state, des, cfg), -np.array(DEFAULT_LAMBDA) * s)


def test_baseline_matches_proposed_at_equal_rho():
    rng = np.random.default_rng(11)
    cfg = ControllerConfig()
    state = SystemState(rng.normal(size=8), rng.normal(size=8))
    des = _desired(np.zeros(8), np.zeros(8))
    gains = AdaptiveGains(np.array([0.4, 0.3, 0.2]))
    err = tracking_error(state, des)
    rho = uncertainty_gain_rho(gains, err.xi_norm)
    tau, _ = proposed_controller_step(state, des, gains, cfg)
    tau_b = baseline_smc_step(state, des, BaselineSmcConfig(fixed_rho=rho))
    np.testing.assert_allclose(tau_b, tau, rtol=1e-14, atol=1e-14)


def test_mistuned_baseline():
    cfg = BaselineSmcConfig.mistuned()
    np.testing.assert_allclose(cfg.Lambda, 0.5 * np.array(DEFAULT_LAMBDA))
    assert cfg.fixed_rho == 0.1
    with pytest.raises(ValueError):
        BaselineSmcConfig(fixed_rho=-1.0)
