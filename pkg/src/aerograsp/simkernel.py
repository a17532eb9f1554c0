"""
Closed-loop simulation: plant, controller, gripper and scripted events.

The controller output is applied as a generalized force on all eight
coordinates. By default the plant adds a static gravity offload computed from
the nominal (payload-free) model, playing the role of the hover trim of a
real vehicle; everything else (payload, contact pulses, wind, coupling and
dynamic terms) reaches the controller as unmodelled uncertainty.

Plant, adaptive gains and controller share one RK4 step on the augmented
state [chi, chi_dot, K0, K1, K2].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np

from .controller import (BaselineSmcConfig, ControllerConfig, control_law, gain_rate,
                         sliding_variable)
from .dynamics import (N_DOF, DynamicsError, SystemState, UamParams, _model_terms,
                       _param_vector, _solve_spd, end_effector, rk4_step, rotation_matrix,
                       thrust_allocation)
from .gripper import (MAX_CHARACTERIZED_OFFSET_MM, GripperState, activation_time,
                      gripper_update, open_gripper)
from .trajectory import ImpactEvent, ScenarioSpec, disturbance_eval, reference_extremes

log = logging.getLogger(__name__)

TRIM_MODES = ("nominal_gravity", "hover", "none")
N_AUG = 2 * N_DOF + 3


class SimulationDiverged(DynamicsError):
    """Integration failed; ``trace`` holds every row recorded before the failure."""

    def __init__(self, message: str, trace: "RunTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass
class RunTrace:
    """Uniformly sampled closed-loop record (one row per integration step)."""

    dt: float
    t: np.ndarray
    chi: np.ndarray
    chi_dot: np.ndarray
    chi_d: np.ndarray
    chi_d_dot: np.ndarray
    e: np.ndarray
    s: np.ndarray
    tau: np.ndarray
    khat: np.ndarray
    u1: np.ndarray
    V: np.ndarray
    half_sMs: np.ndarray
    payload: np.ndarray
    d_norm: np.ndarray
    gripper: List[str]
    event: List[str]
    scenario: str = ""
    controller: str = ""

    def __len__(self) -> int:
        return len(self.t)

    def event_times(self, name: str) -> List[float]:
        return [float(t) for t, ev in zip(self.t, self.event) if name in ev.split(";")]

    def holding_mask(self) -> np.ndarray:
        return np.array([g == "holding" for g in self.gripper])

    def xi_norm(self) -> np.ndarray:
        e_dot = self.chi_dot - self.chi_d_dot
        return np.sqrt(np.sum(self.e ** 2, axis=1) + np.sum(e_dot ** 2, axis=1))


@dataclass(frozen=True)
class SimTruthBounds:
    m_bar: float
    m_lower: float
    c_bar: float
    g_bar: float
    d_bar: float
    chi_d_dot_sup: float
    chi_d_ddot_sup: float
    phi_norm: float
    lambda_min: float
    nu: tuple
    k_star: tuple
    varrho: float
    zeta: float
    samples: int

    def b_bar(self, kappa: Optional[float] = None) -> float:
        kappa = 0.5 * self.varrho if kappa is None else kappa
        if not 0 < kappa < self.varrho:
            raise ValueError(f"kappa must lie in (0, {self.varrho}), got {kappa}")
        return self.zeta / (self.varrho - kappa)


@dataclass(frozen=True)
class UubReport:
    entry_time: float
    radius: float
    lyapunov_bound: float
    satisfied: bool
    max_excess: float
    b_bar: float
    kappa: float


# -- metrics ---------------------------------------------------------------------

def rms(series, channel: Optional[int] = None) -> Union[float, np.ndarray]:
    """Root mean square over samples, per channel (or of one channel)."""
    arr = np.asarray(series, dtype=float)
    if arr.size == 0 or len(arr) == 0:
        raise ValueError("rms of an empty series")
    if channel is not None:
        arr = arr[:, channel] if arr.ndim == 2 else arr
        return float(np.sqrt(np.mean(arr ** 2)))
    out = np.sqrt(np.mean(arr ** 2, axis=0))
    return float(out) if np.ndim(out) == 0 else out


def lyapunov_value(s, M, gains, k_star) -> float:
    """V = 1/2 s^T M s + 1/2 sum (K_i - K*_i)^2."""
    s = np.asarray(s, dtype=float)
    k_hat = np.asarray(getattr(gains, "k_hat", gains), dtype=float)
    dk = k_hat - np.asarray(k_star, dtype=float)
    return float(0.5 * s @ np.asarray(M) @ s + 0.5 * dk @ dk)


def _phi_norm(cfg) -> float:
    return float(np.max(cfg.Phi))


def sim_truth_bounds(spec: ScenarioSpec, params: Optional[UamParams] = None,
                     envelope_samples: int = 1000, trace: Optional[RunTrace] = None,
                     controller_cfg: Optional[ControllerConfig] = None,
                     trim: str = "nominal_gravity", seed: int = 0,
                     attitude_margin: float = 0.25, arm_margin: float = 0.25) -> SimTruthBounds:
    """Sampled model bounds over the run envelope and the resulting K*, varrho, zeta.

    The configuration box spans the reference (and ``trace`` if given) widened
    by the margins; each sample is evaluated with and without the payload.
    The gravity bound is taken on the part of gravity the trim does not cancel.
    """
    if envelope_samples < 1000:
        raise ValueError("envelope_samples must be at least 1000")
    params = params or UamParams()
    cfg = controller_cfg or ControllerConfig()
    _, chi_d, _, _ = spec.trajectory().sample(0.0, max(spec.duration, 1e-3), 0.01)
    lo, hi = chi_d.min(axis=0), chi_d.max(axis=0)
    if trace is not None and len(trace):
        lo = np.minimum(lo, trace.chi.min(axis=0))
        hi = np.maximum(hi, trace.chi.max(axis=0))
    margin = np.r_[np.zeros(3), np.full(3, attitude_margin), np.full(2, arm_margin)]
    lo, hi = lo - margin, hi + margin
    lo[4], hi[4] = max(lo[4], -1.4), min(hi[4], 1.4)

    rng = np.random.default_rng(seed)
    loaded = params.with_payload(spec.payload_mass)
    nominal = params.with_payload(0.0)
    m_bar, m_lower, c_bar, g_bar = 0.0, np.inf, 0.0, 0.0
    for _ in range(envelope_samples):
        chi = rng.uniform(lo, hi)
        direction = rng.normal(size=N_DOF)
        direction /= np.linalg.norm(direction)
        trim_vec = _trim_force(trim, chi, nominal)
        for p in (nominal, loaded):
            M, C, g = _model_terms(chi, direction, p)
            eig = np.linalg.eigvalsh(M)
            m_bar = max(m_bar, eig[-1])
            m_lower = min(m_lower, eig[0])
            c_bar = max(c_bar, np.linalg.norm(C, 2))
            g_bar = max(g_bar, np.linalg.norm(g - trim_vec))

    vd, ad = reference_extremes(spec)
    phi = _phi_norm(cfg)
    d_bar = float(spec.d_bar)
    k_star = (
        d_bar + g_bar + c_bar * vd ** 2 + m_bar * ad,
        c_bar * vd * (3 + phi) + m_bar * phi,
        c_bar * (2 + phi),
    )
    nu = tuple(float(v) for v in cfg.nu)
    lam_min = float(np.min(cfg.Lambda))
    varrho = min(lam_min, min(nu) / 2) / max(m_bar / 2, 0.5)
    zeta = 0.5 * sum(n * k * k for n, k in zip(nu, k_star))
    return SimTruthBounds(float(m_bar), float(m_lower), float(c_bar), float(g_bar), d_bar,
                          vd, ad, phi, lam_min, nu, tuple(float(k) for k in k_star),
                          float(varrho), float(zeta), envelope_samples)


def uub_certify(trace: RunTrace, bounds: SimTruthBounds, kappa: Optional[float] = None,
                tol: float = 1e-6, V: Optional[np.ndarray] = None) -> UubReport:
    """Check V(t) <= max(V(0), B) samplewise and report the residual ball of |s|.

    The entry time is the first sample after which |s| never again exceeds
    its final-segment supremum (the last 10 % of the run).
    """
    kappa = 0.5 * bounds.varrho if kappa is None else kappa
    b_bar = bounds.b_bar(kappa)
    if V is None:
        dk = trace.khat - np.asarray(bounds.k_star)
        V = trace.half_sMs + 0.5 * np.sum(dk * dk, axis=1)
    V = np.asarray(V, dtype=float)
    bound = max(float(V[0]), b_bar)
    excess = float(np.max(V - bound))
    s_norm = np.linalg.norm(trace.s, axis=1)
    tail = s_norm[int(0.9 * len(s_norm)):]
    radius = float(tail.max()) if len(tail) else 0.0
    above = np.nonzero(s_norm > radius)[0]
    entry = float(trace.t[above[-1] + 1]) if len(above) and above[-1] + 1 < len(trace.t) else (
        float(trace.t[0]) if not len(above) else float(trace.t[-1]))
    return UubReport(entry, radius, bound, excess <= tol, excess, b_bar, kappa)


def gain_envelope(trace: RunTrace, nu, k_hat_init) -> np.ndarray:
    """Running bound max(K_i(0), sup_{tau<=t} |s||xi|^i / nu_i) per sample."""
    s_norm = np.linalg.norm(trace.s, axis=1)
    xi = trace.xi_norm()
    drive = s_norm[:, None] * xi[:, None] ** np.arange(3)
    sup = np.maximum.accumulate(drive, axis=0) / np.asarray(nu)
    return np.maximum(sup, np.asarray(k_hat_init))


# -- simulation ------------------------------------------------------------------

def _trim_force(mode: str, chi, nominal: UamParams) -> np.ndarray:
    if mode == "none":
        return np.zeros(N_DOF)
    if mode == "hover":
        out = np.zeros(N_DOF)
        out[2] = nominal.total_mass * nominal.gravity
        return out
    if mode == "nominal_gravity":
        return _model_terms(np.asarray(chi, dtype=float), np.zeros(N_DOF), nominal,
                            with_coriolis=False)[2]
    raise ValueError(f"trim must be one of {TRIM_MODES}, got {mode!r}")


def _controller_parts(choice, controller_cfg, baseline_cfg):
    if choice == "proposed":
        cfg = controller_cfg or ControllerConfig()
        return "proposed", cfg, np.array(cfg.k_hat_init, dtype=float)
    if choice == "baseline":
        cfg = baseline_cfg or BaselineSmcConfig()
        # the fixed bound is stored as K0 with zero rate, so rho has the same form
        return "baseline", cfg, np.array([cfg.fixed_rho, 0.0, 0.0])
    raise ValueError(f"controller must be 'proposed' or 'baseline', got {choice!r}")


@dataclass
class _Plant:
    """Mutable per-run plant status owned by the simulation loop."""

    params: UamParams
    gripper: GripperState = field(default_factory=GripperState)
    impacts: List[ImpactEvent] = field(default_factory=list)
    in_contact: bool = False
    last_penetration: float = float("inf")
    carried: bool = False


def run(spec: ScenarioSpec, controller_choice: str = "proposed",
        params: Optional[UamParams] = None, dt: float = 1e-3, *,
        controller_cfg: Optional[ControllerConfig] = None,
        baseline_cfg: Optional[BaselineSmcConfig] = None,
        trim: str = "nominal_gravity", bounds: Optional[SimTruthBounds] = None) -> RunTrace:
    """Simulate ``spec`` in closed loop and return the sampled trace.

    ``bounds`` supplies K* for the recorded Lyapunov column; by default they
    are sampled from the reference envelope before the run.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if trim not in TRIM_MODES:
        raise ValueError(f"trim must be one of {TRIM_MODES}, got {trim!r}")
    base = params or UamParams()
    nominal = base.with_payload(0.0)
    name, cfg, k0 = _controller_parts(controller_choice, controller_cfg, baseline_cfg)
    adaptive = name == "proposed"
    if bounds is None:
        bounds = sim_truth_bounds(spec, base, controller_cfg=controller_cfg, trim=trim)
    k_star = np.asarray(bounds.k_star)

    traj = spec.trajectory()
    Phi = np.asarray(cfg.Phi)
    Lambda = np.asarray(cfg.Lambda)
    delta = cfg.delta
    nu = np.asarray(cfg.nu) if adaptive else None
    n_steps = int(round(spec.duration / dt))
    rows = n_steps + 1

    plant = _Plant(nominal)
    contact_events = [ev for ev in spec.events if ev.kind == "grasp" and ev.trigger == "contact"]
    armed_from = min((ev.armed_from or 0.0) for ev in contact_events) if contact_events else None
    timed = sorted((ev for ev in spec.events if ev.trigger == "time" and ev.kind != "disturbance"),
                   key=lambda ev: ev.time)
    timed_done = [False] * len(timed)

    def control(t, chi, chi_dot, k_hat, desired=None):
        des = desired or traj(t)
        e = chi - des.chi_d
        e_dot = chi_dot - des.chi_d_dot
        s = sliding_variable(e, e_dot, Phi)
        xi = np.sqrt(e @ e + e_dot @ e_dot)
        rho = k_hat[0] + k_hat[1] * xi + k_hat[2] * xi * xi
        tau = control_law(s, rho, Lambda, delta)
        rate = gain_rate(k_hat, float(np.linalg.norm(s)), xi, nu) if adaptive else np.zeros(3)
        return tau, rate, des, e, e_dot, s

    def rhs(t, y):
        chi, chi_dot, k_hat = y[:N_DOF], y[N_DOF:2 * N_DOF], y[2 * N_DOF:]
        tau, rate, _, _, _, _ = control(t, chi, chi_dot, k_hat)
        M, C, g = _model_terms(chi, chi_dot, plant.params)
        d = disturbance_eval(spec, t, chi, plant.impacts, plant.params)
        applied = tau + _trim_force(trim, chi, nominal)
        acc = _solve_spd(M, applied - C @ chi_dot - g - d)
        return np.concatenate([chi_dot, acc, rate])

    def gripper_step(t, chi, chi_dot, labels):
        if spec.grasp_target is None or armed_from is None or plant.carried:
            return
        if t < armed_from - 0.5 * dt:
            return
        target = spec.grasp_target
        ee, jac = end_effector(chi, plant.params)
        pen = target.penetration(ee)
        offset_mm = 1000.0 * target.band_offset(ee)
        floor = -target.release_gap if plant.in_contact else 0.0
        within = (floor <= pen <= target.capture_depth and target.on_face(ee)
                  and abs(offset_mm) <= MAX_CHARACTERIZED_OFFSET_MM)
        # contact starts only by crossing the object's face, never from behind or the side
        touching = within and (plant.in_contact or plant.last_penetration < 0.0)
        plant.last_penetration = pen
        force = 0.0
        if touching:
            if not plant.in_contact:
                speed = float(np.asarray(target.normal) @ (jac @ chi_dot))
                duration = activation_time(min(abs(offset_mm), 35.0), spec.gripper)
                plant.impacts.append(ImpactEvent(t, duration, spec.impact.peak(speed),
                                                 tuple(target.normal), speed))
                labels.append("contact")
            force = target.press_stiffness * max(pen, 0.0) + sum(ev.magnitude(t) for ev in plant.impacts)
            force = max(force, 1e-12)
        plant.in_contact = touching
        before = plant.gripper
        plant.gripper = gripper_update(before, spec.gripper, force, offset_mm, dt)
        if plant.gripper.band_state != before.band_state:
            labels.append("trigger")
        if plant.gripper.holding and not before.holding:
            plant.params = base.with_payload(spec.payload_mass)
            plant.carried = True
            labels.append("grasp")

    def timed_events(t, labels):
        for i, ev in enumerate(timed):
            if timed_done[i] or t < ev.time - 0.5 * dt:
                continue
            timed_done[i] = True
            if ev.kind == "grasp" and not plant.carried:
                plant.params = base.with_payload(spec.payload_mass)
                plant.carried = True
                labels.append("grasp")
            elif ev.kind == "release":
                if plant.gripper.band_state.value == "curled":
                    plant.gripper = open_gripper(plant.gripper)
                plant.params = nominal
                plant.carried = False
                labels.append("drop")

    store = {
        "t": np.zeros(rows), "chi": np.zeros((rows, N_DOF)), "chi_dot": np.zeros((rows, N_DOF)),
        "chi_d": np.zeros((rows, N_DOF)),
        "chi_d_dot": np.zeros((rows, N_DOF)), "e": np.zeros((rows, N_DOF)),
        "s": np.zeros((rows, N_DOF)), "tau": np.zeros((rows, N_DOF)),
        "khat": np.zeros((rows, 3)), "u1": np.zeros(rows), "V": np.zeros(rows),
        "half_sMs": np.zeros(rows), "payload": np.zeros(rows), "d_norm": np.zeros(rows),
    }
    gripper_col: List[str] = []
    event_col: List[str] = []

    def make_trace(n):
        data = {k: v[:n].copy() for k, v in store.items()}
        return RunTrace(dt=dt, gripper=gripper_col[:n], event=event_col[:n],
                        scenario=spec.name, controller=name, **data)

    des0 = traj(0.0)
    y = np.concatenate([des0.chi_d, des0.chi_d_dot, k0])
    for n in range(rows):
        t = n * dt
        chi, chi_dot, k_hat = y[:N_DOF], y[N_DOF:2 * N_DOF], y[2 * N_DOF:]
        labels: List[str] = []
        try:
            gripper_step(t, chi, chi_dot, labels)
            timed_events(t, labels)
            tau, _, des, e, e_dot, s = control(t, chi, chi_dot, k_hat)
            M, _, _ = _model_terms(chi, chi_dot, plant.params, with_coriolis=False)
            applied = tau + _trim_force(trim, chi, nominal)
            R = rotation_matrix(*chi[3:6])
            u1, _ = thrust_allocation(applied[:3], R)
            d = disturbance_eval(spec, t, chi, plant.impacts, plant.params)
        except DynamicsError as exc:
            raise SimulationDiverged(str(exc), make_trace(n)) from exc
        half = 0.5 * float(s @ M @ s)
        dk = k_hat - k_star
        store["t"][n] = t
        store["chi"][n] = chi
        store["chi_dot"][n] = chi_dot
        store["chi_d"][n] = des.chi_d
        store["chi_d_dot"][n] = des.chi_d_dot
        store["e"][n] = e
        store["s"][n] = s
        store["tau"][n] = tau
        store["khat"][n] = k_hat
        store["u1"][n] = u1
        store["half_sMs"][n] = half
        store["V"][n] = half + 0.5 * float(dk @ dk)
        store["payload"][n] = plant.params.payload_mass
        store["d_norm"][n] = float(np.linalg.norm(d))
        gripper_col.append(plant.gripper.label)
        event_col.append(";".join(labels))
        if n == rows - 1:
            break
        try:
            y = rk4_step(rhs, t, y, dt)
        except DynamicsError as exc:
            log.error("run %s/%s diverged at t=%.3f: %s", spec.name, name, t, exc)
            raise SimulationDiverged(str(exc), make_trace(n + 1)) from exc
        if adaptive and np.any(y[2 * N_DOF:] <= 0):
            raise SimulationDiverged("adaptive gain lost positivity", make_trace(n + 1))
    return make_trace(rows)
