"""
Randomized property suite over the model, controller, gripper and references.

Each check draws ``samples`` random cases from a seeded generator and reports
the largest residual against its tolerance. ``coriolis_fn`` replaces the
Coriolis evaluation in the skew-symmetry and residual checks so that broken
implementations can be fed through the suite.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional

import numpy as np

from .controller import (DEFAULT_LAMBDA, ControllerConfig, control_law, gain_rate,
                         proposed_controller_step, uncertainty_gain_rho)
from .dynamics import (N_DOF, SystemState, UamParams, _model_terms, forward_dynamics,
                       rk4_step, rotation_matrix, total_energy)
from .gripper import GripperModel, activation_time, effective_trigger_force
from .trajectory import DesiredPoint, build_scenario1, build_scenario2

DEFAULT_TOLERANCES = {
    "mass_symmetry": 1e-12,
    "skew_symmetry": 1e-6,
    "rotation_orthonormality": 1e-12,
    "energy_drift": 1e-5,
    "dynamics_residual": 1e-9,
    "gain_envelope": 1e-6,
    "trajectory_continuity": 1e-6,
}


@dataclass
class CheckResult:
    name: str
    samples: int
    max_residual: float
    tolerance: float
    passed: bool
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{verdict} {self.name:<28} n={self.samples:<6d} "
                f"max={self.max_residual:.3e} tol={self.tolerance:.1e}")


def random_state(rng: np.random.Generator, speed: float = 1.0) -> SystemState:
    """Random configuration away from the pitch singularity, random velocity."""
    chi = np.r_[rng.uniform(-2, 2, 3), rng.uniform(-1.2, 1.2, 3), rng.uniform(-2.5, 2.5, 2)]
    return SystemState(chi, speed * rng.normal(size=N_DOF))


def _default_coriolis(chi, chi_dot, params):
    return _model_terms(chi, chi_dot, params)[1]


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - start
        return result
    wrapper.__name__ = fn.__name__
    return wrapper


@_timed
def check_mass_matrix(rng, n, tol, params):
    worst, min_eig = 0.0, np.inf
    for _ in range(n):
        st = random_state(rng)
        M = _model_terms(st.chi, st.chi_dot, params, with_coriolis=False)[0]
        worst = max(worst, float(np.max(np.abs(M - M.T))))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(M)[0]))
    # positivity is reported through the sign of the smallest eigenvalue
    return CheckResult("mass_symmetry_and_pd", n, worst, tol, worst <= tol and min_eig > 0)


@_timed
def check_skew(rng, n, tol, params, coriolis_fn):
    """|r^T (Mdot - 2C) r| with Mdot from a central difference of M along chi_dot."""
    worst = 0.0
    h = 1e-6
    for _ in range(n):
        st = random_state(rng)
        r = rng.normal(size=N_DOF)
        M_plus = _model_terms(st.chi + h * st.chi_dot, st.chi_dot, params, False)[0]
        M_minus = _model_terms(st.chi - h * st.chi_dot, st.chi_dot, params, False)[0]
        M_dot = (M_plus - M_minus) / (2 * h)
        C = coriolis_fn(st.chi, st.chi_dot, params)
        value = abs(r @ (M_dot - 2 * C) @ r)
        scale = (r @ r) * (1 + np.linalg.norm(st.chi_dot))
        worst = max(worst, value / scale)
    return CheckResult("skew_symmetry", n, worst, tol, worst <= tol)


@_timed
def check_rotation(rng, n, tol):
    worst = 0.0
    for _ in range(n):
        R = rotation_matrix(*rng.uniform(-1.5, 1.5, 3))
        worst = max(worst, float(np.max(np.abs(R.T @ R - np.eye(3)))),
                    abs(np.linalg.det(R) - 1))
    return CheckResult("rotation_orthonormality", n, worst, tol, worst <= tol)


@_timed
def check_residual(rng, n, tol, params, coriolis_fn):
    worst = 0.0
    for _ in range(n):
        st = random_state(rng)
        tau = rng.normal(scale=5.0, size=N_DOF)
        d = rng.normal(scale=1.0, size=N_DOF)
        acc = forward_dynamics(st, tau, d, params)
        M, _, g = _model_terms(st.chi, st.chi_dot, params)
        C = coriolis_fn(st.chi, st.chi_dot, params)
        res = M @ acc + C @ st.chi_dot + g + d - tau
        scale = 1 + np.linalg.norm(tau) + np.linalg.norm(g) + np.linalg.norm(d)
        worst = max(worst, float(np.linalg.norm(res)) / scale)
    return CheckResult("dynamics_residual", n, worst, tol, worst <= tol)


@_timed
def check_energy(rng, n_runs, tol, params, duration=5.0, dt=1e-3):
    """Unforced flight (tau = d = 0): relative drift of kinetic + potential energy."""
    worst = 0.0

    def f(_t, y):
        st = SystemState(y[:N_DOF], y[N_DOF:])
        return np.r_[st.chi_dot, forward_dynamics(st, np.zeros(N_DOF), np.zeros(N_DOF), params)]

    for _ in range(n_runs):
        chi = np.r_[rng.uniform(-1, 1, 3), rng.uniform(-0.3, 0.3, 3), rng.uniform(-1, 1, 2)]
        y = np.r_[chi, 0.3 * rng.normal(size=N_DOF)]
        e0 = total_energy(SystemState(y[:N_DOF], y[N_DOF:]), params)
        t = 0.0
        for _ in range(int(round(duration / dt))):
            y = rk4_step(f, t, y, dt)
            t += dt
        e1 = total_energy(SystemState(y[:N_DOF], y[N_DOF:]), params)
        worst = max(worst, abs(e1 - e0) / max(abs(e0), 1.0))
    return CheckResult("energy_drift", n_runs, worst, tol, worst <= tol)


@_timed
def check_controller(rng, n, tol):
    """Composition, rho monotonicity, gain positivity and the gain envelope."""
    cfg = ControllerConfig()
    worst = 0.0
    ok = True
    for _ in range(n):
        chi, chi_dot = rng.normal(size=N_DOF), rng.normal(size=N_DOF)
        des = DesiredPoint(rng.normal(size=N_DOF), rng.normal(size=N_DOF), np.zeros(N_DOF))
        k_hat = rng.uniform(0.01, 3.0, 3)
        tau, rate = proposed_controller_step(SystemState(chi, chi_dot), des, k_hat, cfg)
        e, e_dot = chi - des.chi_d, chi_dot - des.chi_d_dot
        s = e_dot + np.asarray(cfg.Phi) * e
        xi = np.sqrt(e @ e + e_dot @ e_dot)
        rho = k_hat @ xi ** np.arange(3)
        tau_ref = -np.asarray(cfg.Lambda) * s - rho * s / np.sqrt(s @ s + cfg.delta)
        rate_ref = np.linalg.norm(s) * xi ** np.arange(3) - np.asarray(cfg.nu) * k_hat
        worst = max(worst, float(np.max(np.abs(tau - tau_ref))),
                    float(np.max(np.abs(rate - rate_ref))))
        a, b = np.sort(rng.uniform(0, 5, 2))
        ok &= uncertainty_gain_rho(k_hat, a) <= uncertainty_gain_rho(k_hat, b)
    # positivity and boundedness under a bounded random drive, integrated at 1 ms
    dt, k = 1e-3, np.array(cfg.k_hat_init)
    drive_s = np.abs(rng.normal(size=2000))
    drive_xi = np.abs(rng.normal(size=2000))
    sup = np.zeros(3)
    excess = -np.inf
    for s_n, xi_n in zip(drive_s, drive_xi):
        sup = np.maximum(sup, s_n * xi_n ** np.arange(3))
        k = rk4_step(lambda _t, y: gain_rate(y, s_n, xi_n, cfg.nu), 0.0, k, dt)
        ok &= bool(np.all(k > 0))
        envelope = np.maximum(np.array(cfg.k_hat_init), sup / np.asarray(cfg.nu))
        excess = max(excess, float(np.max(k - envelope)))
    worst = max(worst, excess, 0.0)
    return CheckResult("controller_invariants", n, worst, tol, ok and worst <= tol)


@_timed
def check_control_continuity(rng, n, tol):
    """Smoothed law is Lipschitz on a ball: |tau(s1) - tau(s2)| <= L |s1 - s2|."""
    lam = np.asarray(DEFAULT_LAMBDA)
    rho, delta = 2.0, 0.1
    bound = lam.max() + rho / np.sqrt(delta)  # Lipschitz constant of the smoothed law
    worst = 0.0
    for _ in range(n):
        s1 = rng.normal(size=N_DOF)
        s2 = s1 + 1e-3 * rng.normal(size=N_DOF)
        ratio = np.linalg.norm(control_law(s1, rho, lam, delta) - control_law(s2, rho, lam, delta))
        ratio /= np.linalg.norm(s1 - s2)
        worst = max(worst, ratio - bound)
    return CheckResult("control_continuity", n, max(worst, 0.0), tol, worst <= tol)


@_timed
def check_gripper(rng, n, tol):
    """Trigger force falls with pretension, rises with offset; activation time rises."""
    worst = 0.0
    for _ in range(n):
        p1, p2 = np.sort(rng.uniform(0, 3.21, 2))
        o1, o2 = np.sort(rng.uniform(0, 60, 2))
        f_lo = effective_trigger_force(GripperModel(pretension=p2), o1)
        f_hi = effective_trigger_force(GripperModel(pretension=p1), o1)
        worst = max(worst, f_lo - f_hi)
        model = GripperModel()
        worst = max(worst, effective_trigger_force(model, o1) - effective_trigger_force(model, o2))
        a1, a2 = np.sort(rng.uniform(0, 35, 2))
        worst = max(worst, activation_time(a1, model) - activation_time(a2, model))
    return CheckResult("gripper_monotonicity", n, max(worst, 0.0), tol, worst <= tol)


@_timed
def check_trajectories(tol):
    """Reference and its derivatives agree on both sides of every knot."""
    worst, count = 0.0, 0
    eps = 1e-9
    specs = [build_scenario1()] + [build_scenario2(case=c) for c in (1, 2, 3)]
    for spec in specs:
        traj = spec.trajectory()
        for wp in spec.waypoints:
            a, b = traj(wp.t - eps), traj(wp.t + eps)
            for u, v in ((a.chi_d, b.chi_d), (a.chi_d_dot, b.chi_d_dot),
                         (a.chi_d_ddot, b.chi_d_ddot)):
                worst = max(worst, float(np.max(np.abs(u - v))))
            count += 1
    return CheckResult("trajectory_continuity", count, worst, tol, worst <= tol)


def run_property_suite(samples: int = 1000, seed: int = 0,
                       tolerances: Optional[Mapping[str, float]] = None,
                       params: Optional[UamParams] = None,
                       coriolis_fn: Optional[Callable] = None,
                       energy_runs: int = 3) -> List[CheckResult]:
    tol: Dict[str, float] = dict(DEFAULT_TOLERANCES)
    for key, value in (tolerances or {}).items():
        if key not in tol:
            raise KeyError(f"unknown tolerance {key!r}")
        tol[key] = float(value)
    params = params or UamParams(payload_mass=0.2)
    coriolis_fn = coriolis_fn or _default_coriolis
    rng = np.random.default_rng(seed)
    return [
        check_mass_matrix(rng, samples, tol["mass_symmetry"], params),
        check_skew(rng, samples, tol["skew_symmetry"], params, coriolis_fn),
        check_rotation(rng, samples, tol["rotation_orthonormality"]),
        check_residual(rng, samples, tol["dynamics_residual"], params, coriolis_fn),
        check_energy(rng, energy_runs, tol["energy_drift"], params),
        check_controller(rng, samples, tol["gain_envelope"]),
        check_control_continuity(rng, samples, 1e-9),
        check_gripper(rng, samples, 1e-12),
        check_trajectories(tol["trajectory_continuity"]),
    ]
