"""
Desired trajectories, scenario scripts and the external-disturbance model.

A trajectory is a list of time-tagged waypoints (position, velocity and
acceleration of all eight coordinates) joined by quintic polynomials. Matching
position, velocity and acceleration at every knot makes the reference C^2.
Constant-speed legs are waypoints with equal velocities, for which the
quintic degenerates to a straight line.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .dynamics import N_DOF, UamParams, end_effector
from .gripper import GripperModel

SCENARIO2_SPEEDS = {1: 0.4, 2: 0.3, 3: 0.2}


@dataclass(frozen=True)
class DesiredPoint:
    chi_d: np.ndarray
    chi_d_dot: np.ndarray
    chi_d_ddot: np.ndarray


@dataclass(frozen=True)
class Waypoint:
    t: float
    chi: Tuple[float, ...]
    chi_dot: Tuple[float, ...] = (0.0,) * N_DOF
    chi_ddot: Tuple[float, ...] = (0.0,) * N_DOF

    def __post_init__(self):
        for name in ("chi", "chi_dot", "chi_ddot"):
            vals = tuple(float(v) for v in getattr(self, name))
            if len(vals) != N_DOF or not np.all(np.isfinite(vals)):
                raise ValueError(f"waypoint {name} must be {N_DOF} finite values")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "t", float(self.t))


class QuinticSegment:
    """Quintic in time per coordinate, fixed by position/velocity/acceleration at both ends."""

    def __init__(self, t0, t1, p0, v0, a0, p1, v1, a1):
        if not t1 > t0:
            raise ValueError("segment must have positive duration")
        self.t0, self.t1 = float(t0), float(t1)
        T = self.t1 - self.t0
        p0, v0, a0, p1, v1, a1 = (np.asarray(x, dtype=float) for x in (p0, v0, a0, p1, v1, a1))
        # closed-form coefficients of p(tau) = sum c_k tau^k, tau in [0, T]
        h = p1 - p0
        c3 = (20 * h - (8 * v1 + 12 * v0) * T - (3 * a0 - a1) * T ** 2) / (2 * T ** 3)
        c4 = (-30 * h + (14 * v1 + 16 * v0) * T + (3 * a0 - 2 * a1) * T ** 2) / (2 * T ** 4)
        c5 = (12 * h - 6 * (v1 + v0) * T - (a0 - a1) * T ** 2) / (2 * T ** 5)
        self.coeffs = np.stack([p0, v0, 0.5 * a0, c3, c4, c5])

    @classmethod
    def between(cls, a: Waypoint, b: Waypoint) -> "QuinticSegment":
        return cls(a.t, b.t, a.chi, a.chi_dot, a.chi_ddot, b.chi, b.chi_dot, b.chi_ddot)


def quintic_eval(segment: QuinticSegment, t: float) -> DesiredPoint:
    if not segment.t0 - 1e-12 <= t <= segment.t1 + 1e-12:
        raise ValueError(f"t = {t} outside segment [{segment.t0}, {segment.t1}]")
    tau = t - segment.t0
    c = segment.coeffs
    pos = c[0] + tau * (c[1] + tau * (c[2] + tau * (c[3] + tau * (c[4] + tau * c[5]))))
    vel = c[1] + tau * (2 * c[2] + tau * (3 * c[3] + tau * (4 * c[4] + tau * 5 * c[5])))
    acc = 2 * c[2] + tau * (6 * c[3] + tau * (12 * c[4] + tau * 20 * c[5]))
    return DesiredPoint(pos, vel, acc)


class Trajectory:
    """Piecewise-quintic reference through a waypoint list.

    Before the first waypoint the reference holds its position; after the
    last one it continues at the last waypoint's velocity.
    """

    def __init__(self, waypoints: Sequence[Waypoint]):
        if not waypoints:
            raise ValueError("at least one waypoint is required")
        times = [w.t for w in waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        self.waypoints = list(waypoints)
        self.segments = [QuinticSegment.between(a, b) for a, b in zip(waypoints, waypoints[1:])]
        self._starts = [s.t0 for s in self.segments]

    def __call__(self, t: float) -> DesiredPoint:
        first, last = self.waypoints[0], self.waypoints[-1]
        if t <= first.t:
            return DesiredPoint(np.array(first.chi), np.zeros(N_DOF), np.zeros(N_DOF))
        if t >= last.t:
            v = np.array(last.chi_dot)
            return DesiredPoint(np.array(last.chi) + v * (t - last.t), v, np.zeros(N_DOF))
        idx = bisect_right(self._starts, t) - 1
        return quintic_eval(self.segments[idx], t)

    def sample(self, t0: float, t1: float, dt: float):
        ts = np.arange(t0, t1 + 0.5 * dt, dt)
        pts = [self(t) for t in ts]
        return (ts, np.array([p.chi_d for p in pts]), np.array([p.chi_d_dot for p in pts]),
                np.array([p.chi_d_ddot for p in pts]))


# -- disturbances ----------------------------------------------------------------

@dataclass(frozen=True)
class WindModel:
    """Constant force plus sinusoidal gusts on the quadrotor body.

    ``gust_amplitude`` (N) acts on the translational channels and
    ``torque_amplitude`` (N m) on the attitude channels. Gust phases and
    channel weights are drawn from ``seed``.
    """

    mean: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    gust_amplitude: float = 0.0
    torque_amplitude: float = 0.0
    gust_frequencies: Tuple[float, ...] = (0.13, 0.37, 0.71)
    seed: int = 0

    @cached_property
    def _gusts(self):
        rng = np.random.default_rng(self.seed)
        n = len(self.gust_frequencies)
        phases = rng.uniform(0.0, 2 * np.pi, size=(n, 6))
        weights = rng.uniform(0.5, 1.0, size=(n, 6))
        weights /= weights.sum(axis=0, keepdims=True)
        omega = 2 * np.pi * np.asarray(self.gust_frequencies, dtype=float)[:, None]
        scale = np.array([self.gust_amplitude] * 3 + [self.torque_amplitude] * 3)
        return phases, weights * scale, omega

    def wrench(self, t: float) -> np.ndarray:
        """Force (N) and Euler-angle torque (N m) stacked as a 6-vector."""
        w = np.zeros(6)
        w[:3] = self.mean
        if self.gust_amplitude or self.torque_amplitude:
            phases, weights, omega = self._gusts
            w += np.sum(weights * np.sin(omega * t + phases), axis=0)
        return w

    def force(self, t: float) -> np.ndarray:
        return self.wrench(t)[:3]

    @property
    def bound(self) -> float:
        return (float(np.linalg.norm(self.mean))
                + np.sqrt(3.0) * (abs(self.gust_amplitude) + abs(self.torque_amplitude)))


@dataclass(frozen=True)
class ImpactModel:
    """Half-sine reaction pulse at first contact, peak linear in approach speed."""

    peak_at_reference: float = 5.0
    reference_speed: float = 0.4

    def peak(self, approach_speed: float) -> float:
        return self.peak_at_reference * max(approach_speed, 0.0) / self.reference_speed


@dataclass(frozen=True)
class ImpactEvent:
    t_start: float
    duration: float
    peak: float
    direction: Tuple[float, float, float]
    approach_speed: float = 0.0

    def magnitude(self, t: float) -> float:
        tau = t - self.t_start
        if tau < 0 or tau > self.duration:
            return 0.0
        return self.peak * np.sin(np.pi * tau / self.duration)


@dataclass(frozen=True)
class GraspTarget:
    """Object to be grasped: grasp point, approach direction and contact face.

    The face is the plane with normal ``normal`` located ``lead`` metres
    before ``position`` along the approach. ``band_axis`` is the direction
    along the gripper band (perpendicular to the arm plane); the offset along
    it is what the gripper's offset characterization refers to. Misalignment
    within the arm plane only matters through the face's half width.
    """

    position: Tuple[float, float, float]
    normal: Tuple[float, float, float]
    lead: float = 0.05
    capture_depth: float = 0.10
    release_gap: float = 0.01  # a curling band keeps contact this far off the face
    press_stiffness: float = 200.0  # N/m, quasi-static pressing force
    band_axis: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    face_half_width: float = 0.10

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        b = np.asarray(self.band_axis, dtype=float)
        if abs(np.linalg.norm(n) - 1) > 1e-9 or abs(np.linalg.norm(b) - 1) > 1e-9:
            raise ValueError("normal and band_axis must be unit vectors")
        if abs(n @ b) > 1e-9:
            raise ValueError("band_axis must lie in the contact face")

    def _relative(self, ee):
        return np.asarray(ee, dtype=float) - np.asarray(self.position)

    def penetration(self, ee: np.ndarray) -> float:
        return float(self._relative(ee) @ np.asarray(self.normal) + self.lead)

    def band_offset(self, ee: np.ndarray) -> float:
        """Signed contact offset from the band centre (m)."""
        return float(self._relative(ee) @ np.asarray(self.band_axis))

    def in_plane_offset(self, ee: np.ndarray) -> float:
        rel = self._relative(ee)
        n, b = np.asarray(self.normal), np.asarray(self.band_axis)
        return float(np.linalg.norm(rel - (rel @ n) * n - (rel @ b) * b))

    def on_face(self, ee: np.ndarray) -> bool:
        return self.in_plane_offset(ee) <= self.face_half_width


@dataclass(frozen=True)
class Event:
    kind: str  # "grasp", "release" or "disturbance"
    time: Optional[float] = None
    trigger: str = "time"  # "time" or "contact"
    force: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    duration: float = 0.0
    armed_from: Optional[float] = None  # contact triggers are ignored before this time

    def __post_init__(self):
        if self.kind not in ("grasp", "release", "disturbance"):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.trigger not in ("time", "contact"):
            raise ValueError(f"unknown trigger {self.trigger!r}")
        if self.trigger == "time" and self.time is None:
            raise ValueError("time-triggered events need a time")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    duration: float
    waypoints: Tuple[Waypoint, ...]
    events: Tuple[Event, ...] = ()
    grasp_target: Optional[GraspTarget] = None
    approach_speed: Optional[float] = None
    payload_mass: float = 0.2
    wind: WindModel = WindModel()
    impact: ImpactModel = ImpactModel()
    d_bar: float = 10.0
    gripper: GripperModel = GripperModel()
    case: Optional[int] = None

    def __post_init__(self):
        times = [w.t for w in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("waypoint times must be strictly increasing")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.payload_mass < 0 or self.d_bar < 0:
            raise ValueError("payload_mass and d_bar must be non-negative")

    def trajectory(self) -> Trajectory:
        return Trajectory(self.waypoints)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"cannot serialize {type(obj)}")


def disturbance_eval(spec: ScenarioSpec, t: float, state, events: Sequence[ImpactEvent] = (),
                     params: Optional[UamParams] = None) -> np.ndarray:
    """Generalized disturbance d(t) entering the left-hand side of the dynamics.

    Wind acts on the quadrotor COM; contact pulses act at the gripper and are
    mapped through its Jacobian. The result is scaled to respect ``spec.d_bar``.
    """
    d = np.zeros(N_DOF)
    d[:6] = -spec.wind.wrench(t)
    chi = getattr(state, "chi", state)
    jac = None
    for ev in events:
        mag = ev.magnitude(t)
        if mag == 0.0:
            continue
        if jac is None:
            jac = end_effector(chi, params or UamParams())[1]
        # reaction on the gripper opposes the approach direction
        d += mag * (jac.T @ np.asarray(ev.direction))
    for ev in spec.events:
        if ev.kind == "disturbance" and ev.time <= t <= ev.time + ev.duration:
            d[:3] -= np.asarray(ev.force)
    norm = np.linalg.norm(d)
    if norm > spec.d_bar:
        d = d * (spec.d_bar / norm) if norm > 0 else d
    return d


# -- scenario builders -------------------------------------------------------------

SCENARIO1_DEFAULTS = {
    "z_hover": 1.0,
    "x_pick": -0.8,
    "x_drop": 0.8,
    "arm_initial_deg": (0.0, 110.0),
    "arm_pregrasp_deg": (45.0, 70.0),
    "arm_grasp_deg": (45.0, 35.0),
    "t_takeoff_end": 4.0,
    "t_move_pick_start": 1.0,
    "t_move_pick_end": 9.0,
    "t_arm_start": 8.0,
    "t_pregrasp": 10.0,
    "t_grasp": 12.0,
    "t_retract": 14.0,
    "t_transfer_start": 14.0,
    "t_transfer_end": 30.0,
    "t_drop": 31.0,
    "duration": 35.0,
    "grasp_lead": 0.05,
    "grasp_time": None,
}

SCENARIO2_DEFAULTS = {
    "start_xy": (0.5, 0.0),
    "z_hover": 0.65,
    "grasp_position": (0.0, 0.0, 0.15),
    "end_position": (-0.5, 0.0, 0.65),
    "arm_deg": (0.0, 90.0),
    "t_takeoff_end": 4.0,
    "t_approach": 6.0,
    "blend_accel": 0.4,  # mean acceleration of the speed ramps, m/s^2
    "reversal_time": 0.5,
    "grasp_lead": 0.05,
    "duration": 20.0,
}

_COMMON_DEFAULTS = {
    "payload_mass": 0.2,
    "d_bar": 10.0,
    "wind_mean": (0.03, 0.03, 0.0),
    "wind_gust": 0.05,
    "wind_torque": 0.005,
    "wind_seed": 0,
    "impact_peak": 5.0,
    "impact_reference_speed": 0.4,
}


def _merged(defaults, cfg):
    out = dict(_COMMON_DEFAULTS)
    out.update(defaults)
    for key, value in (cfg or {}).items():
        if key not in out and not key.startswith("gripper."):
            raise KeyError(f"unknown scenario key {key!r}")
        out[key] = value
    return out


def _gripper_from(cfg) -> GripperModel:
    overrides = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("gripper.")}
    for key, value in overrides.items():
        if isinstance(value, list):
            overrides[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
    return GripperModel(**overrides)


def _common_fields(cfg):
    return dict(
        payload_mass=float(cfg["payload_mass"]),
        wind=WindModel(mean=tuple(float(v) for v in cfg["wind_mean"]),
                       gust_amplitude=float(cfg["wind_gust"]),
                       torque_amplitude=float(cfg["wind_torque"]), seed=int(cfg["wind_seed"])),
        impact=ImpactModel(float(cfg["impact_peak"]), float(cfg["impact_reference_speed"])),
        d_bar=float(cfg["d_bar"]),
        gripper=_gripper_from(cfg),
    )


def _chi(pos, att=(0.0, 0.0, 0.0), arm_deg=(0.0, 0.0)):
    return tuple(pos) + tuple(att) + tuple(np.radians(arm_deg))


def compose_channels(start: Sequence[float], knots) -> List[Waypoint]:
    """Waypoints from independent per-coordinate knot lists.

    ``knots`` maps a channel to ``(t, position, velocity)`` tuples (zero
    acceleration at every knot). Each channel is a piecewise quintic through
    its own knots and holds still outside them; the result samples every
    channel at the union of all knot times, which reproduces each channel's
    quintics exactly.
    """
    profiles = {}
    for ch, items in knots.items():
        items = sorted((float(t), float(p), float(v)) for t, p, v in items)
        if any(b[0] <= a[0] for a, b in zip(items, items[1:])):
            raise ValueError(f"knot times on channel {ch} must be strictly increasing")
        if items[0][2] != 0.0 or items[-1][2] != 0.0:
            raise ValueError(f"channel {ch} must start and end at rest")
        segs = [QuinticSegment(a[0], b[0], a[1], a[2], 0.0, b[1], b[2], 0.0)
                for a, b in zip(items, items[1:])]
        profiles[ch] = (items, segs)
    times = sorted({0.0} | {float(t) for items in knots.values() for t, _, _ in items})

    def channel_state(ch, t):
        if ch not in profiles:
            return float(start[ch]), 0.0, 0.0
        items, segs = profiles[ch]
        if t <= items[0][0]:
            return items[0][1], 0.0, 0.0
        if t >= items[-1][0]:
            return items[-1][1], 0.0, 0.0
        for seg in segs:
            if seg.t0 <= t <= seg.t1:
                pt = quintic_eval(seg, t)
                return float(pt.chi_d), float(pt.chi_d_dot), float(pt.chi_d_ddot)
        raise AssertionError("unreachable")

    for ch, (items, _) in profiles.items():
        if items[0][0] > 0.0 and not np.isclose(items[0][1], start[ch]):
            raise ValueError(f"channel {ch} jumps before its first knot")
    return [Waypoint(t, *zip(*(channel_state(ch, t) for ch in range(N_DOF)))) for t in times]


def rest_to_rest_waypoints(start: Sequence[float], moves) -> List[Waypoint]:
    """Waypoints for independent rest-to-rest quintic moves per coordinate.

    ``moves`` holds ``(channel, t0, t1, target)`` entries; moves on the same
    channel must not overlap.
    """
    knots = {}
    for ch, t0, t1, target in sorted(moves, key=lambda m: (m[0], m[1])):
        if not t1 > t0:
            raise ValueError("move end time must follow its start")
        items = knots.setdefault(ch, [])
        if items and t0 < items[-1][0]:
            raise ValueError(f"overlapping moves on channel {ch}")
        pos = items[-1][1] if items else float(start[ch])
        if not items or t0 > items[-1][0]:
            items.append((t0, pos, 0.0))
        items.append((t1, float(target), 0.0))
    return compose_channels(start, knots)


def build_scenario1(cfg: Optional[Mapping] = None, params: Optional[UamParams] = None) -> ScenarioSpec:
    """Horizontal pick-and-drop: the arm swings onto the object while hovering."""
    c = _merged(SCENARIO1_DEFAULTS, cfg)
    params = params or UamParams()
    z, xp, xd = c["z_hover"], c["x_pick"], c["x_drop"]
    a0 = np.radians(c["arm_initial_deg"])
    a_pre = np.radians(c["arm_pregrasp_deg"])
    a_grasp = np.radians(c["arm_grasp_deg"])
    start = _chi((0.0, 0.0, 0.0), arm_deg=c["arm_initial_deg"])
    moves = [
        (2, 0.0, c["t_takeoff_end"], z),
        (0, c["t_move_pick_start"], c["t_move_pick_end"], xp),
        (0, c["t_transfer_start"], c["t_transfer_end"], xd),
    ]
    for j in range(2):
        ch = 6 + j
        moves += [
            (ch, c["t_arm_start"], c["t_pregrasp"], a_pre[j]),
            (ch, c["t_pregrasp"], c["t_grasp"], a_grasp[j]),
            (ch, c["t_grasp"], c["t_retract"], a_pre[j]),
        ]
    # a channel that does not change over a move is skipped (no degenerate knots)
    moves = [m for m in moves if not np.isclose(_target_before(start, moves, m), m[3])]
    wps = rest_to_rest_waypoints(start, moves)

    traj = Trajectory(wps)
    ee_grasp, _ = end_effector(traj(c["t_grasp"]).chi_d, params)
    ee_before, _ = end_effector(traj(c["t_grasp"] - 0.25).chi_d, params)
    normal = ee_grasp - ee_before
    normal /= np.linalg.norm(normal)
    target = GraspTarget(tuple(ee_grasp), tuple(normal), lead=float(c["grasp_lead"]))
    if c["grasp_time"] is None:
        grasp = Event("grasp", trigger="contact", armed_from=float(c["t_pregrasp"]))
    else:
        # scripted pickup, used to give compared controllers the same payload schedule
        grasp = Event("grasp", time=float(c["grasp_time"]))
    events = (grasp, Event("release", time=float(c["t_drop"])))
    return ScenarioSpec("scenario1", float(c["duration"]), tuple(wps), events, target,
                        **_common_fields(c))


def _target_before(start, moves, move):
    ch, t0 = move[0], move[1]
    prior = [m for m in moves if m[0] == ch and m[2] <= t0]
    return max(prior, key=lambda m: m[2])[3] if prior else start[ch]


def build_scenario2(cfg: Optional[Mapping] = None, case: int = 1,
                    params: Optional[UamParams] = None) -> ScenarioSpec:
    """Grasp of a standing object driven by the quadrotor's approach speed.

    The pass is V-shaped: x runs at constant speed -v from the start column
    to the end column while z descends at -v, turns around at the grasp point
    and climbs at +v. The gripper meets the object moving horizontally.
    """
    if case not in SCENARIO2_SPEEDS:
        raise ValueError(f"scenario 2 case must be 1, 2 or 3, got {case!r}")
    c = _merged(SCENARIO2_DEFAULTS, cfg)
    params = params or UamParams()
    v = SCENARIO2_SPEEDS[case]
    arm = c["arm_deg"]
    x0, y0 = c["start_xy"]
    z_top = float(c["z_hover"])
    xg, yg, zg = (float(q) for q in c["grasp_position"])
    x_end, y_end, z_end = (float(q) for q in c["end_position"])
    tb, tr = v / float(c["blend_accel"]), float(c["reversal_time"])
    if abs(y0 - yg) > 1e-12 or abs(y_end - yg) > 1e-12:
        raise ValueError("the pass must stay in a vertical x-z plane")

    # x: ramp to -v, cruise through the grasp point, ramp down at the end column
    ramp = 0.5 * v * tb
    t0 = float(c["t_approach"]) + 0.75 * tr
    legs = (x0 - xg, xg - x_end)
    if min(legs) <= ramp:
        raise ValueError("blend_accel too low for the pass")
    t_mid = t0 + tb + (legs[0] - ramp) / v
    t_end = t_mid + (legs[1] - ramp) / v + tb
    x_knots = [(t0, x0, 0.0), (t0 + tb, x0 - ramp, -v),
               (t_end - tb, x_end + ramp, -v), (t_end, x_end, 0.0)]
    # z: ramp to -v, turn around smoothly at t_mid (the turn dips v*tr/4 below its ends)
    dip = 0.25 * v * tr
    down, up = z_top - zg, z_end - zg
    z_start = t_mid - tr - (down - ramp - dip) / v - tb
    z_stop = t_mid + tr + (up - ramp - dip) / v + tb
    if z_start < t0 - tr or min(down, up) <= ramp + dip:
        raise ValueError("z pass does not fit the configured timing")
    z_knots = [(z_start, z_top, 0.0), (z_start + tb, z_top - ramp, -v),
               (t_mid - tr, zg + dip, -v), (t_mid + tr, zg + dip, v),
               (z_stop - tb, z_end - ramp, v), (z_stop, z_end, 0.0)]
    start = _chi((x0, y0, 0.0), arm_deg=arm)
    takeoff = [(0.0, 0.0, 0.0), (float(c["t_takeoff_end"]), z_top, 0.0)]
    if z_start <= takeoff[-1][0]:
        raise ValueError("the pass must start after takeoff")
    wps = compose_channels(start, {0: x_knots, 2: takeoff + z_knots})
    duration = float(c["duration"])
    if max(t_end, z_stop) > duration:
        raise ValueError("scenario 2 timeline exceeds the configured duration")

    chi_grasp = Trajectory(wps)(t_mid).chi_d
    ee_grasp, _ = end_effector(chi_grasp, params)
    target = GraspTarget(tuple(ee_grasp), (-1.0, 0.0, 0.0), lead=float(c["grasp_lead"]))
    events = (Event("grasp", trigger="contact"),)
    return ScenarioSpec("scenario2", duration, tuple(wps), events, target, approach_speed=v,
                        case=case, **_common_fields(c))


def build_scenario(name: str, cfg: Optional[Mapping] = None, case: int = 1,
                   params: Optional[UamParams] = None) -> ScenarioSpec:
    if name == "scenario1":
        return build_scenario1(cfg, params)
    if name == "scenario2":
        return build_scenario2(cfg, case, params)
    raise ValueError(f"unknown scenario {name!r}")


def reference_extremes(spec: ScenarioSpec, dt: float = 1e-3) -> Tuple[float, float]:
    """Sup of |chi_d_dot| and |chi_d_ddot| over the scenario."""
    _, _, vel, acc = spec.trajectory().sample(0.0, max(spec.duration, dt), dt)
    return float(np.linalg.norm(vel, axis=1).max()), float(np.linalg.norm(acc, axis=1).max())
