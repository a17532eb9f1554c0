import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aerograsp.controller import DEFAULT_NU, ControllerConfig
from aerograsp.dynamics import UamParams, mass_matrix
from aerograsp.simkernel import (RunTrace, SimulationDiverged, gain_envelope, lyapunov_value,
                                 rms, run, sim_truth_bounds, uub_certify)
from aerograsp.trajectory import Event, ScenarioSpec, Waypoint, WindModel, build_scenario2
from aerograsp.verify import random_state

HOVER = (0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, np.pi / 2)


def _hover_spec(duration=1.0, **kw):
    return ScenarioSpec("hover", duration, (Waypoint(0.0, HOVER),), **kw)


@pytest.fixture(scope="module")
def windy_run():
    spec = _hover_spec(2.0, wind=WindModel(mean=(0.5, -0.3, 0.0), gust_amplitude=0.3,
                                           torque_amplitude=0.02, seed=1))
    return spec, run(spec)


# -- rms ----------------------------------------------------------------------------

def test_rms_examples():
    assert rms(np.zeros(10)) == 0.0
    assert rms(np.full(7, -2.5)) == pytest.approx(2.5)
    assert round(rms([3.0, 4.0]), 4) == 3.5355
    np.testing.assert_allclose(rms(np.array([[3.0, 1.0], [4.0, 1.0]])), [3.5355339, 1.0])
    assert rms(np.array([[3.0, 1.0], [4.0, 1.0]]), channel=0) == pytest.approx(3.5355339)
    with pytest.raises(ValueError):
        rms([])


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=50), st.floats(-10, 10))
def test_rms_permutation_and_scaling(values, c):
    x = np.array(values)
    assert rms(x[::-1]) == pytest.approx(rms(x), rel=1e-12, abs=1e-12)
    assert rms(c * x) == pytest.approx(abs(c) * rms(x), rel=1e-9, abs=1e-9)


# -- Lyapunov function ------------------------------------------------------------------

def test_lyapunov_examples():
    M = np.eye(8)
    k_star = (1.0, 2.0, 3.0)
    assert lyapunov_value(np.zeros(8), M, np.array(k_star), k_star) == 0.0
    assert lyapunov_value(np.zeros(8), M, np.array([0.0, 0.0, 0.0]), k_star) == pytest.approx(7.0)


@settings(max_examples=50)
@given(st.integers(0, 2 ** 31))
def test_lyapunov_quadratic_bound(seed):
    rng = np.random.default_rng(seed)
    M = mass_matrix(random_state(rng), UamParams())
    s = rng.normal(size=8)
    k = rng.uniform(0, 2, 3)
    V = lyapunov_value(s, M, k, rng.uniform(0, 5, 3))
    assert V >= 0.5 * np.linalg.eigvalsh(M)[0] * (s @ s) - 1e-12


# -- bounds -----------------------------------------------------------------------

def test_k_star_zero_without_gravity_disturbance_or_motion():
    spec = _hover_spec(1.0, d_bar=0.0)
    bounds = sim_truth_bounds(spec, UamParams(gravity=0.0))
    assert bounds.k_star[0] == 0.0
    assert bounds.chi_d_dot_sup == 0.0 and bounds.chi_d_ddot_sup == 0.0


def test_k_star_additive_in_d_bar():
    a = sim_truth_bounds(_hover_spec(1.0, d_bar=3.0))
    b = sim_truth_bounds(_hover_spec(1.0, d_bar=6.0))
    assert b.k_star[0] - a.k_star[0] == pytest.approx(3.0, abs=1e-12)
    assert a.k_star[1:] == b.k_star[1:]


def test_default_bounds_finite_and_positive():
    bounds = sim_truth_bounds(build_scenario2(case=1))
    values = [bounds.m_bar, bounds.m_lower, bounds.c_bar, bounds.g_bar, bounds.varrho,
              bounds.zeta, *bounds.k_star]
    assert all(np.isfinite(v) and v > 0 for v in values)
    assert bounds.m_lower <= bounds.m_bar
    assert bounds.samples == 1000


def test_bounds_need_enough_samples():
    with pytest.raises(ValueError):
        sim_truth_bounds(_hover_spec(), envelope_samples=999)


def test_b_bar_kappa_range():
    bounds = sim_truth_bounds(_hover_spec())
    assert bounds.b_bar() == pytest.approx(2 * bounds.zeta / bounds.varrho)
    for bad in (0.0, bounds.varrho, -1.0):
        with pytest.raises(ValueError):
            bounds.b_bar(bad)


# -- UUB certification -------------------------------------------------------------

def _synthetic_trace(n, s, khat):
    z = np.zeros((n, 8))
    return RunTrace(dt=0.01, t=0.01 * np.arange(n), chi=z, chi_dot=z, chi_d=z, chi_d_dot=z,
                    e=z, s=s, tau=z, khat=khat, u1=np.zeros(n), V=np.zeros(n),
                    half_sMs=0.5 * np.sum(s * s, axis=1), payload=np.zeros(n),
                    d_norm=np.zeros(n), gripper=["flat"] * n, event=[""] * n)


def test_uub_trivial_trace():
    bounds = sim_truth_bounds(_hover_spec())
    n = 50
    trace = _synthetic_trace(n, np.zeros((n, 8)), np.tile(bounds.k_star, (n, 1)))
    report = uub_certify(trace, bounds)
    assert report.satisfied
    assert report.radius == 0.0
    assert report.kappa == pytest.approx(bounds.varrho / 2)


def test_uub_detects_injected_spike(windy_run):
    spec, trace = windy_run
    bounds = sim_truth_bounds(spec, trace=trace)
    assert uub_certify(trace, bounds).satisfied
    report = uub_certify(trace, bounds)
    V = trace.half_sMs + 0.5 * np.sum((trace.khat - np.array(bounds.k_star)) ** 2, axis=1)
    V[len(V) // 2] = report.lyapunov_bound + 1.0
    spiked = uub_certify(trace, bounds, V=V)
    assert not spiked.satisfied
    assert spiked.max_excess == pytest.approx(1.0)
    with pytest.raises(ValueError):
        uub_certify(trace, bounds, kappa=2 * bounds.varrho)


def test_recorded_v_matches_recomputation(windy_run):
    spec, trace = windy_run
    bounds = sim_truth_bounds(spec)
    dk = trace.khat - np.array(bounds.k_star)
    np.testing.assert_allclose(trace.V, trace.half_sMs + 0.5 * np.sum(dk * dk, axis=1),
                               rtol=1e-12)


# -- runs ---------------------------------------------------------------------------

def test_zero_length_scenario():
    trace = run(_hover_spec(0.0))
    assert len(trace) == 1
    np.testing.assert_array_equal(trace.chi[0], HOVER)
    np.testing.assert_array_equal(trace.khat[0], [0.1, 0.1, 0.1])


def test_identical_inputs_identical_traces(windy_run):
    spec, trace = windy_run
    again = run(spec)
    for name in ("t", "chi", "chi_dot", "e", "s", "tau", "khat", "u1", "V"):
        np.testing.assert_array_equal(getattr(again, name), getattr(trace, name))
    assert again.gripper == trace.gripper and again.event == trace.event


def test_gains_stay_positive_and_in_envelope(windy_run):
    _, trace = windy_run
    assert np.all(trace.khat > 0)
    env = gain_envelope(trace, DEFAULT_NU, (0.1, 0.1, 0.1))
    assert np.all(trace.khat <= env + 1e-6)


def test_hover_trim_holds_hover_without_disturbance():
    trace = run(_hover_spec(1.0))
    np.testing.assert_allclose(trace.e, 0.0, atol=1e-12)
    # pure leak from the initial gains
    np.testing.assert_allclose(trace.khat[-1], 0.1 * np.exp(-np.array(DEFAULT_NU)), rtol=1e-6)


def test_payload_schedule_conservation():
    events = (Event("grasp", time=0.3), Event("release", time=0.7))
    spec = _hover_spec(1.0, events=events, payload_mass=0.25)
    trace = run(spec)
    assert trace.event_times("grasp") == [pytest.approx(0.3)]
    assert trace.event_times("drop") == [pytest.approx(0.7)]
    steps = np.diff(trace.payload)
    np.testing.assert_allclose(steps[steps != 0], [0.25, -0.25])
    assert trace.payload[0] == 0.0 and trace.payload[-1] == 0.0


def test_baseline_run_has_constant_gain():
    trace = run(_hover_spec(0.2), "baseline")
    assert trace.controller == "baseline"
    np.testing.assert_array_equal(trace.khat, np.tile([5.0, 0.0, 0.0], (len(trace), 1)))


def test_divergence_keeps_partial_trace():
    spec = _hover_spec(1.0, events=(Event("disturbance", time=0.0, force=(1.0, 0.0, 0.0),
                                          duration=1.0),))
    with pytest.raises(SimulationDiverged) as info:
        run(spec, dt=0.05, controller_cfg=ControllerConfig(Lambda=(1e4,) * 8))
    assert len(info.value.trace) >= 1


def test_run_argument_validation():
    with pytest.raises(ValueError):
        run(_hover_spec(), dt=0.0)
    with pytest.raises(ValueError):
        run(_hover_spec(), "pid")
    with pytest.raises(ValueError):
        run(_hover_spec(), trim="bogus")
