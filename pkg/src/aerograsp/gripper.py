"""
Bistable band gripper: empirical force/time models and the grasp state machine.

Forces are in N, distances in mm, times in s. The default tables encode the
bench characterization of the 140 mm support-distance base:

* no pretension: 4.05 N triggering force at the band centre;
* 2.37 N of spring pretension brings it into the 0.5-1 N band (0.75 N used);
* off-centre contact barely matters up to 40 mm and roughly quadruples the
  force at 60 mm;
* activation takes 0.17 s at 35 mm offset.

Table entries not pinned by those figures (intermediate pretension levels,
activation time below 35 mm) are placeholders and can be overridden.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Tuple

import numpy as np

log = logging.getLogger(__name__)

SUPPORT_RANGE_MM = (65.0, 140.0)
GRASP_WINDOW_MM = 40.0
MAX_CHARACTERIZED_OFFSET_MM = 60.0
MAX_ACTIVATION_TIME = 0.175
_TIMER_EPS = 1e-12

FIT_COEFFS = (0.008, -0.24, 20.66)
SPRING_K = 0.274  # N/mm


class GripperError(ValueError):
    pass


class UncharacterizedRegion(GripperError):
    """Requested operating point lies outside the measured range."""


class BandState(str, enum.Enum):
    FLAT = "flat"
    CURLED = "curled"


def _check_monotone_table(table, name, increasing=True):
    xs = np.array([p[0] for p in table], dtype=float)
    ys = np.array([p[1] for p in table], dtype=float)
    if len(xs) < 2 or np.any(np.diff(xs) <= 0):
        raise ValueError(f"{name}: abscissae must be strictly increasing")
    dy = np.diff(ys)
    if (increasing and np.any(dy < 0)) or (not increasing and np.any(dy > 0)):
        raise ValueError(f"{name}: values must be monotone")
    return xs, ys


@dataclass(frozen=True)
class GripperModel:
    support_distance: float = 140.0
    pretension: float = 2.37
    spring_k: float = SPRING_K
    poly_coeffs: Tuple[float, float, float] = FIT_COEFFS
    base_trigger_force_140: float = 4.05
    # (pretension N, centred trigger force N) at 140 mm support distance
    pretension_table: Tuple[Tuple[float, float], ...] = (
        (0.0, 4.05), (1.25, 1.30), (1.93, 0.95), (2.37, 0.75), (3.21, 0.45))
    # (|offset| mm, force multiplier)
    offset_curve: Tuple[Tuple[float, float], ...] = ((0.0, 1.0), (40.0, 1.25), (60.0, 4.0))
    # (|offset| mm, activation time s)
    activation_table: Tuple[Tuple[float, float], ...] = (
        (0.0, 0.10), (15.0, 0.12), (25.0, 0.14), (35.0, 0.17))
    grasp_window: float = GRASP_WINDOW_MM

    def __post_init__(self):
        lo, hi = SUPPORT_RANGE_MM
        if not lo <= self.support_distance <= hi:
            raise UncharacterizedRegion(
                f"support distance {self.support_distance} mm outside [{lo}, {hi}]")
        if self.pretension < 0:
            raise ValueError("pretension must be non-negative")
        if self.spring_k <= 0 or self.base_trigger_force_140 <= 0:
            raise ValueError("spring_k and base_trigger_force_140 must be positive")
        _check_monotone_table(self.pretension_table, "pretension_table", increasing=False)
        xs, ys = _check_monotone_table(self.offset_curve, "offset_curve")
        if xs[0] != 0.0 or ys[0] != 1.0:
            raise ValueError("offset_curve must start at (0, 1)")
        xs, ys = _check_monotone_table(self.activation_table, "activation_table")
        if xs[0] != 0.0 or ys.min() < 0 or ys.max() > MAX_ACTIVATION_TIME:
            raise ValueError("activation_table must start at 0 mm and stay within [0, 0.175] s")
        if not 0 < self.grasp_window <= MAX_CHARACTERIZED_OFFSET_MM:
            raise ValueError("grasp_window must lie in (0, 60] mm")


@dataclass(frozen=True)
class GripperState:
    band_state: BandState = BandState.FLAT
    holding: bool = False
    activation_timer: float = 0.0
    contact_offset: float = 0.0

    def __post_init__(self):
        if self.holding and self.band_state is not BandState.CURLED:
            raise ValueError("a flat band cannot hold an object")
        if not 0.0 <= self.activation_timer <= MAX_ACTIVATION_TIME:
            raise ValueError("activation timer outside [0, 0.175] s")

    @property
    def pending(self) -> bool:
        """Band is curling around an object and has not closed yet."""
        return self.band_state is BandState.CURLED and self.activation_timer > 0

    @property
    def label(self) -> str:
        if self.holding:
            return "holding"
        if self.pending:
            return "curling"
        return self.band_state.value


def trigger_force_fit(support_distance: float) -> float:
    """Quadratic trigger-force fit over support distance, evaluated as printed.

    The fit is in its own (unstated) units; at 140 mm it gives 143.86 rather
    than the measured 4.05 N, so the gripper model does not use it.
    """
    lo, hi = SUPPORT_RANGE_MM
    if not lo <= support_distance <= hi:
        raise UncharacterizedRegion(f"support distance {support_distance} outside [{lo}, {hi}] mm")
    a, b, c = FIT_COEFFS
    x = float(support_distance)
    return a * x * x + b * x + c


def trigger_force_fit_vertex() -> Tuple[float, float]:
    """Location and value of the fit's minimum (outside the measured span)."""
    a, b, c = FIT_COEFFS
    x = -b / (2 * a)
    return x, a * x * x + b * x + c


def spring_pretension(delta_x: float, k: float = SPRING_K) -> float:
    if delta_x < 0:
        raise ValueError("spring extension must be non-negative")
    return k * delta_x


def offset_multiplier(model: GripperModel, offset: float) -> float:
    off = abs(float(offset))
    if off > MAX_CHARACTERIZED_OFFSET_MM:
        raise UncharacterizedRegion(f"offset {off} mm beyond the characterized 60 mm")
    xs, ys = zip(*model.offset_curve)
    return float(np.interp(off, xs, ys))


def centered_trigger_force(model: GripperModel) -> float:
    xs, ys = zip(*model.pretension_table)
    scale = model.base_trigger_force_140 / ys[0]
    return float(scale * np.interp(model.pretension, xs, ys))


def effective_trigger_force(model: GripperModel, offset: float) -> float:
    return centered_trigger_force(model) * offset_multiplier(model, offset)


def activation_time(offset: float, model: GripperModel | None = None) -> float:
    model = model or GripperModel()
    off = abs(float(offset))
    xs, ys = zip(*model.activation_table)
    if off > xs[-1]:
        log.warning("activation time requested at %.1f mm, clamped to %.0f mm", off, xs[-1])
    return float(np.interp(off, xs, ys))


def gripper_update(gstate: GripperState, model: GripperModel, contact_normal_force: float,
                   contact_offset: float, dt: float) -> GripperState:
    """Advance the grasp state machine by one step.

    ``contact_normal_force > 0`` means the band touches the object.
    """
    in_contact = contact_normal_force > 0.0
    if gstate.band_state is BandState.FLAT:
        if not in_contact or abs(contact_offset) > model.grasp_window:
            return gstate
        if contact_normal_force < effective_trigger_force(model, contact_offset):
            return gstate
        return GripperState(BandState.CURLED, False, activation_time(contact_offset, model),
                            float(contact_offset))

    if not gstate.pending:
        return gstate
    if not in_contact:
        # object slipped away while the band was still closing
        return replace(gstate, activation_timer=0.0)
    timer = gstate.activation_timer - dt
    if timer <= _TIMER_EPS:
        return replace(gstate, activation_timer=0.0, holding=True)
    return replace(gstate, activation_timer=timer)


def open_gripper(gstate: GripperState) -> GripperState:
    """Flatten the band with the cable drive (treated as instantaneous)."""
    if gstate.band_state is not BandState.CURLED:
        raise GripperError("gripper is already open")
    return GripperState()
