"""
Model-free adaptive sliding controller and a fixed-gain sliding baseline.

Nothing in this module reads plant parameters: the proposed law only sees
the tracking error, the adaptive gain estimates and its own configuration.

    s      = e_dot + Phi e
    rho    = K0 + K1 |xi| + K2 |xi|^2,          xi = [e, e_dot]
    tau    = -Lambda s - rho s / sqrt(|s|^2 + delta)
    K_i'   = |s| |xi|^i - nu_i K_i,             K_i(0) > 0
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

N_GAINS = 3

DEFAULT_PHI = (1.0, 1.0, 1.2, 1.1, 1.1, 1.0, 1.2, 1.2)
DEFAULT_LAMBDA = (2.0, 2.0, 3.5, 1.5, 1.5, 1.2, 3.0, 3.0)
DEFAULT_NU = (2.0, 5.0, 5.0)
DEFAULT_DELTA = 0.1
DEFAULT_K_HAT_INIT = (0.1, 0.1, 0.1)


def _diag(values, name, size=8):
    """Accept a diagonal given as a vector or as a diagonal matrix."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2:
        if arr.shape != (size, size) or np.any(arr != np.diag(np.diag(arr))):
            raise ValueError(f"{name} must be a {size}x{size} diagonal matrix")
        arr = np.diag(arr).copy()
    if arr.shape != (size,):
        raise ValueError(f"{name} must have {size} diagonal entries")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be positive definite")
    return arr


@dataclass
class AdaptiveGains:
    """Estimates (K0, K1, K2) of the uncertainty-bound coefficients."""

    k_hat: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_K_HAT_INIT))

    def __post_init__(self):
        self.k_hat = np.asarray(self.k_hat, dtype=float).reshape(N_GAINS)
        if not np.all(np.isfinite(self.k_hat)) or np.any(self.k_hat <= 0):
            raise ValueError("adaptive gains must be finite and strictly positive")


@dataclass(frozen=True)
class ControllerConfig:
    Phi: tuple = DEFAULT_PHI
    Lambda: tuple = DEFAULT_LAMBDA
    nu: tuple = DEFAULT_NU
    delta: float = DEFAULT_DELTA
    k_hat_init: tuple = DEFAULT_K_HAT_INIT

    def __post_init__(self):
        object.__setattr__(self, "Phi", tuple(_diag(self.Phi, "Phi")))
        object.__setattr__(self, "Lambda", tuple(_diag(self.Lambda, "Lambda")))
        nu = np.asarray(self.nu, dtype=float)
        if nu.shape != (N_GAINS,) or np.any(nu <= 0):
            raise ValueError("nu must be three positive leak rates")
        object.__setattr__(self, "nu", tuple(nu))
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        AdaptiveGains(self.k_hat_init)
        object.__setattr__(self, "k_hat_init", tuple(float(k) for k in self.k_hat_init))

    def initial_gains(self) -> AdaptiveGains:
        return AdaptiveGains(np.array(self.k_hat_init))


@dataclass(frozen=True)
class BaselineSmcConfig:
    """Fixed-gain sliding controller; needs a user-supplied uncertainty bound."""

    Lambda: tuple = DEFAULT_LAMBDA
    fixed_rho: float = 5.0
    delta: float = DEFAULT_DELTA
    Phi: tuple = DEFAULT_PHI

    def __post_init__(self):
        object.__setattr__(self, "Lambda", tuple(_diag(self.Lambda, "Lambda")))
        object.__setattr__(self, "Phi", tuple(_diag(self.Phi, "Phi")))
        if self.fixed_rho < 0:
            raise ValueError("fixed_rho must be non-negative")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @classmethod
    def mistuned(cls, lambda_scale: float = 0.5, fixed_rho: float = 0.1) -> "BaselineSmcConfig":
        """Baseline tuned for a lighter, better-known plant than the real one."""
        return cls(Lambda=tuple(lambda_scale * np.asarray(DEFAULT_LAMBDA)), fixed_rho=fixed_rho)


@dataclass
class TrackingError:
    e: np.ndarray
    e_dot: np.ndarray

    @property
    def xi_norm(self) -> float:
        return float(np.sqrt(self.e @ self.e + self.e_dot @ self.e_dot))


def tracking_error(state, desired) -> TrackingError:
    return TrackingError(np.asarray(state.chi) - desired.chi_d,
                         np.asarray(state.chi_dot) - desired.chi_d_dot)


def sliding_variable(e, e_dot, Phi) -> np.ndarray:
    Phi = np.asarray(Phi, dtype=float)
    e = np.asarray(e, dtype=float)
    if Phi.ndim == 2:
        return np.asarray(e_dot, dtype=float) + Phi @ e
    return np.asarray(e_dot, dtype=float) + Phi * e


def gain_rate(gains, s_norm: float, xi_norm: float, nu) -> np.ndarray:
    """Right-hand side of the adaptive law for all three estimates."""
    k_hat = np.asarray(getattr(gains, "k_hat", gains), dtype=float)
    drive = s_norm * xi_norm ** np.arange(N_GAINS)
    return drive - np.asarray(nu, dtype=float) * k_hat


def uncertainty_gain_rho(gains, xi_norm: float) -> float:
    k_hat = np.asarray(getattr(gains, "k_hat", gains), dtype=float)
    return float(k_hat[0] + k_hat[1] * xi_norm + k_hat[2] * xi_norm * xi_norm)


def control_law(s, rho: float, Lambda, delta: float) -> np.ndarray:
    """-Lambda s - rho s / sqrt(|s|^2 + delta); smooth through s = 0."""
    s = np.asarray(s, dtype=float)
    Lambda = np.asarray(Lambda, dtype=float)
    linear = Lambda @ s if Lambda.ndim == 2 else Lambda * s
    return -linear - rho * s / np.sqrt(s @ s + delta)


def proposed_controller_step(state, desired, gains, cfg: ControllerConfig):
    """Return (tau, gain_rate) for the adaptive law at one instant."""
    err = tracking_error(state, desired)
    xi_norm = err.xi_norm
    s = sliding_variable(err.e, err.e_dot, np.asarray(cfg.Phi))
    rho = uncertainty_gain_rho(gains, xi_norm)
    tau = control_law(s, rho, np.asarray(cfg.Lambda), cfg.delta)
    return tau, gain_rate(gains, float(np.linalg.norm(s)), xi_norm, cfg.nu)


def baseline_smc_step(state, desired, cfg: BaselineSmcConfig) -> np.ndarray:
    err = tracking_error(state, desired)
    s = sliding_variable(err.e, err.e_dot, np.asarray(cfg.Phi))
    return control_law(s, cfg.fixed_rho, np.asarray(cfg.Lambda), cfg.delta)
