"""
Euler-Lagrange model of a quadrotor carrying a planar two-link arm.

Generalized coordinates
-----------------------
chi = [x, y, z, phi, theta, psi, alpha1, alpha2]

    x, y, z           quadrotor COM in the world frame [m], z up
    phi, theta, psi   ZYX Euler angles (roll, pitch, yaw) [rad]
    alpha1, alpha2    arm joint angles [rad]

The arm hangs below the COM at ``(0, 0, -mount_offset)`` in the body frame
and moves in the body x-z plane. A link at absolute angle ``beta`` points
along ``(sin beta, 0, -cos beta)``, so ``alpha1 = 0`` is straight down and
``alpha2`` is measured relative to link 1. The payload is a point mass at the
tip of link 2 (the gripper).

The model is

    M(chi) chi_ddot + C(chi, chi_dot) chi_dot + g(chi) + d = tau

with ``g = dU/dchi`` (so the z entry of ``g`` is ``+m_total * gravity``) and
``C`` built from the Christoffel symbols of ``M``, which makes
``M_dot - 2 C`` skew-symmetric up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from numba import njit

N_DOF = 8
POS = slice(0, 3)
ATT = slice(3, 6)
ARM = slice(6, 8)

SINGULARITY_EPS = 1e-6
MAX_CONDITION = 1e12
DIVERGENCE_LIMIT = 1e6

_EY = np.array([0.0, 1.0, 0.0])
# d(beta_j)/d(alpha) for link j, as rows
_LINK_SELECT = np.array([[1.0, 0.0], [1.0, 1.0]])


class DynamicsError(RuntimeError):
    """Base class for numerical failures of the plant model."""


class SingularityError(DynamicsError):
    """Euler-angle parameterization too close to gimbal lock."""


class ConditioningError(DynamicsError):
    """Mass matrix is numerically singular (bad parameters)."""


class DivergenceError(DynamicsError):
    """Integrated state left the admissible range."""


@dataclass(frozen=True)
class UamParams:
    """Inertial and geometric constants of the aerial manipulator.

    Defaults give a 3.0 kg platform (quadrotor plus arm, no payload).
    """

    quad_mass: float = 2.55
    quad_inertia: Tuple[float, float, float] = (0.035, 0.035, 0.060)
    link_masses: Tuple[float, float] = (0.25, 0.20)
    link_lengths: Tuple[float, float] = (0.25, 0.25)
    link_com_offsets: Tuple[float, float] = (0.125, 0.125)
    link_inertias: Tuple[float, float] = (1.3e-3, 1.05e-3)
    mount_offset: float = 0.10
    payload_mass: float = 0.0
    gravity: float = 9.81

    def __post_init__(self):
        if self.quad_mass <= 0:
            raise ValueError("quad_mass must be positive")
        if len(self.quad_inertia) != 3 or min(self.quad_inertia) <= 0:
            raise ValueError("quad_inertia must be three positive values")
        for name in ("link_masses", "link_lengths", "link_com_offsets", "link_inertias"):
            if len(getattr(self, name)) != 2:
                raise ValueError(f"{name} must have two entries")
        if min(self.link_lengths) <= 0:
            raise ValueError("link lengths must be positive")
        if min(self.link_masses) < 0 or min(self.link_inertias) < 0:
            raise ValueError("link masses and inertias must be non-negative")
        if self.payload_mass < 0:
            raise ValueError("payload_mass must be non-negative")
        if self.gravity < 0:
            raise ValueError("gravity must be non-negative")

    @property
    def total_mass(self) -> float:
        return self.quad_mass + sum(self.link_masses) + self.payload_mass

    def with_payload(self, mass: float) -> "UamParams":
        return replace(self, payload_mass=float(mass))


@dataclass
class SystemState:
    chi: np.ndarray = field(default_factory=lambda: np.zeros(N_DOF))
    chi_dot: np.ndarray = field(default_factory=lambda: np.zeros(N_DOF))

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=float).reshape(N_DOF)
        self.chi_dot = np.asarray(self.chi_dot, dtype=float).reshape(N_DOF)
        if not (np.all(np.isfinite(self.chi)) and np.all(np.isfinite(self.chi_dot))):
            raise ValueError("state entries must be finite")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.chi, self.chi_dot])

    @classmethod
    def from_vector(cls, y) -> "SystemState":
        y = np.asarray(y, dtype=float)
        return cls(y[:N_DOF].copy(), y[N_DOF:2 * N_DOF].copy())


# -- rotations ---------------------------------------------------------------

def _elementary(phi, theta, psi):
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cf, -sf], [0.0, sf, cf]])
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    rz = np.array([[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]])
    drx = np.array([[0.0, 0.0, 0.0], [0.0, -sf, -cf], [0.0, cf, -sf]])
    dry = np.array([[-st, 0.0, ct], [0.0, 0.0, 0.0], [-ct, 0.0, -st]])
    drz = np.array([[-sp, -cp, 0.0], [cp, -sp, 0.0], [0.0, 0.0, 0.0]])
    return rx, ry, rz, drx, dry, drz


def rotation_matrix(phi: float, theta: float, psi: float) -> np.ndarray:
    """Body-to-world rotation for ZYX Euler angles, R = Rz(psi) Ry(theta) Rx(phi)."""
    angles = np.array([phi, theta, psi], dtype=float)
    if not np.all(np.isfinite(angles)):
        raise ValueError("angles must be finite")
    if abs(theta) >= np.pi / 2 - SINGULARITY_EPS:
        raise SingularityError(f"pitch {theta:.6f} rad is at the Euler singularity")
    rx, ry, rz, *_ = _elementary(phi, theta, psi)
    return rz @ ry @ rx


def _rotation_and_derivatives(phi, theta, psi):
    rx, ry, rz, drx, dry, drz = _elementary(phi, theta, psi)
    rzy = rz @ ry
    R = rzy @ rx
    dR = np.stack([rzy @ drx, rz @ dry @ rx, drz @ ry @ rx])
    return R, dR


def _euler_rate_map(phi, theta):
    """W such that body angular velocity = W @ [phi_dot, theta_dot, psi_dot]."""
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    W = np.array([[1.0, 0.0, -st], [0.0, cf, sf * ct], [0.0, -sf, cf * ct]])
    dW = np.zeros((3, 3, 3))
    dW[0] = [[0.0, 0.0, 0.0], [0.0, -sf, cf * ct], [0.0, -cf, -sf * ct]]
    dW[1] = [[0.0, 0.0, -ct], [0.0, 0.0, -sf * st], [0.0, 0.0, -cf * st]]
    return W, dW


def _skew(v):
    """Cross-product matrices for a stack of vectors (..., 3) -> (..., 3, 3)."""
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


# -- arm kinematics ------------------------------------------------------------

def _arm_points(alpha, params: UamParams):
    """Body-frame positions of the point masses and their alpha-derivatives.

    Bodies are ordered (quadrotor, link 1 COM, link 2 COM, payload/tip).
    Returns r (4,3), dr (4,3,2) and ddr (4,3,2,2).
    """
    a1, a12 = alpha[0], alpha[0] + alpha[1]
    u = np.array([[np.sin(a1), 0.0, -np.cos(a1)], [np.sin(a12), 0.0, -np.cos(a12)]])
    w = np.array([[np.cos(a1), 0.0, np.sin(a1)], [np.cos(a12), 0.0, np.sin(a12)]])
    l1, l2 = params.link_lengths
    c1, c2 = params.link_com_offsets
    base = np.array([0.0, 0.0, -params.mount_offset])

    r = np.empty((4, 3))
    r[0] = 0.0
    r[1] = base + c1 * u[0]
    r[2] = base + l1 * u[0] + c2 * u[1]
    r[3] = base + l1 * u[0] + l2 * u[1]

    dr = np.zeros((4, 3, 2))
    dr[1, :, 0] = c1 * w[0]
    dr[2, :, 0] = l1 * w[0] + c2 * w[1]
    dr[2, :, 1] = c2 * w[1]
    dr[3, :, 0] = l1 * w[0] + l2 * w[1]
    dr[3, :, 1] = l2 * w[1]

    ddr = np.zeros((4, 3, 2, 2))
    ddr[1, :, 0, 0] = -c1 * u[0]
    for b, reach in ((2, c2), (3, l2)):
        ddr[b, :, 0, 0] = -l1 * u[0] - reach * u[1]
        ddr[b, :, 0, 1] = ddr[b, :, 1, 0] = ddr[b, :, 1, 1] = -reach * u[1]
    return r, dr, ddr, u, w


def _masses(params: UamParams):
    return np.array([params.quad_mass, params.link_masses[0], params.link_masses[1],
                     params.payload_mass])


# -- M, C, g -------------------------------------------------------------------
#
# The assembly below runs several times per integration step, so it is written
# as an explicit-loop kernel compiled with numba. Bodies are point masses
# (quadrotor, link 1 COM, link 2 COM, payload) plus rotational inertia of the
# quadrotor (diagonal, body frame) and of each link (slender rod,
# I_j (E - u_j u_j^T)). For every body the body-frame velocity Jacobian is
#
#     J_b = [R^T | -[r_b]x W | dr_b/dalpha]
#
# and M = sum m_b J_b^T J_b + rotational terms. The partial derivatives of M
# with respect to the five angles give the Christoffel symbols of C.


@lru_cache(maxsize=64)
def _param_vector(params: UamParams) -> np.ndarray:
    vec = np.array([
        params.quad_mass, *params.quad_inertia, *params.link_masses,
        *params.link_lengths, *params.link_com_offsets, *params.link_inertias,
        params.mount_offset, params.payload_mass, params.gravity,
    ], dtype=np.float64)
    vec.flags.writeable = False
    return vec


@njit(cache=True)
def _kernel(chi, qd, prm, with_coriolis):
    mq = prm[0]
    Iq = prm[1:4]
    l1, l2 = prm[6], prm[7]
    c1, c2 = prm[8], prm[9]
    Il = prm[10:12]
    mount = prm[12]
    gz = prm[14]
    m = np.empty(4)
    m[0] = mq
    m[1] = prm[4]
    m[2] = prm[5]
    m[3] = prm[13]

    phi, theta, psi = chi[3], chi[4], chi[5]
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)

    R = np.empty((3, 3))
    R[0, 0] = cp * ct
    R[0, 1] = cp * st * sf - sp * cf
    R[0, 2] = cp * st * cf + sp * sf
    R[1, 0] = sp * ct
    R[1, 1] = sp * st * sf + cp * cf
    R[1, 2] = sp * st * cf - cp * sf
    R[2, 0] = -st
    R[2, 1] = ct * sf
    R[2, 2] = ct * cf
    dR = np.zeros((3, 3, 3))
    # d/dphi
    dR[0, 0, 1] = cp * st * cf + sp * sf
    dR[0, 0, 2] = -cp * st * sf + sp * cf
    dR[0, 1, 1] = sp * st * cf - cp * sf
    dR[0, 1, 2] = -sp * st * sf - cp * cf
    dR[0, 2, 1] = ct * cf
    dR[0, 2, 2] = -ct * sf
    # d/dtheta
    dR[1, 0, 0] = -cp * st
    dR[1, 0, 1] = cp * ct * sf
    dR[1, 0, 2] = cp * ct * cf
    dR[1, 1, 0] = -sp * st
    dR[1, 1, 1] = sp * ct * sf
    dR[1, 1, 2] = sp * ct * cf
    dR[1, 2, 0] = -ct
    dR[1, 2, 1] = -st * sf
    dR[1, 2, 2] = -st * cf
    # d/dpsi
    for j in range(3):
        dR[2, 0, j] = -R[1, j]
        dR[2, 1, j] = R[0, j]

    W = np.zeros((3, 3))
    W[0, 0] = 1.0
    W[0, 2] = -st
    W[1, 1] = cf
    W[1, 2] = sf * ct
    W[2, 1] = -sf
    W[2, 2] = cf * ct
    dW = np.zeros((3, 3, 3))
    dW[0, 1, 1] = -sf
    dW[0, 1, 2] = cf * ct
    dW[0, 2, 1] = -cf
    dW[0, 2, 2] = -sf * ct
    dW[1, 0, 2] = -ct
    dW[1, 1, 2] = -sf * st
    dW[1, 2, 2] = -cf * st

    # arm geometry in the body frame
    b1, b12 = chi[6], chi[6] + chi[7]
    u = np.zeros((2, 3))
    w = np.zeros((2, 3))
    u[0, 0], u[0, 2] = np.sin(b1), -np.cos(b1)
    u[1, 0], u[1, 2] = np.sin(b12), -np.cos(b12)
    w[0, 0], w[0, 2] = np.cos(b1), np.sin(b1)
    w[1, 0], w[1, 2] = np.cos(b12), np.sin(b12)
    r = np.zeros((4, 3))
    dr = np.zeros((4, 3, 2))
    ddr = np.zeros((4, 3, 2, 2))
    for x in range(3):
        base = -mount if x == 2 else 0.0
        r[1, x] = base + c1 * u[0, x]
        r[2, x] = base + l1 * u[0, x] + c2 * u[1, x]
        r[3, x] = base + l1 * u[0, x] + l2 * u[1, x]
        dr[1, x, 0] = c1 * w[0, x]
        dr[2, x, 0] = l1 * w[0, x] + c2 * w[1, x]
        dr[2, x, 1] = c2 * w[1, x]
        dr[3, x, 0] = l1 * w[0, x] + l2 * w[1, x]
        dr[3, x, 1] = l2 * w[1, x]
        ddr[1, x, 0, 0] = -c1 * u[0, x]
        ddr[2, x, 0, 0] = -l1 * u[0, x] - c2 * u[1, x]
        ddr[2, x, 0, 1] = -c2 * u[1, x]
        ddr[2, x, 1, 0] = -c2 * u[1, x]
        ddr[2, x, 1, 1] = -c2 * u[1, x]
        ddr[3, x, 0, 0] = -l1 * u[0, x] - l2 * u[1, x]
        ddr[3, x, 0, 1] = -l2 * u[1, x]
        ddr[3, x, 1, 0] = -l2 * u[1, x]
        ddr[3, x, 1, 1] = -l2 * u[1, x]

    # translational Jacobians
    J = np.zeros((4, 3, 8))
    for b in range(4):
        sk = _skew3(r[b])
        for x in range(3):
            for i in range(3):
                J[b, x, i] = R[i, x]
                acc = 0.0
                for y in range(3):
                    acc += sk[x, y] * W[y, i]
                J[b, x, 3 + i] = -acc
            J[b, x, 6] = dr[b, x, 0]
            J[b, x, 7] = dr[b, x, 1]

    # link angular-velocity Jacobians and rod inertia tensors
    Jl = np.zeros((2, 3, 8))
    P = np.zeros((2, 3, 3))
    for j in range(2):
        for x in range(3):
            for i in range(3):
                Jl[j, x, 3 + i] = W[x, i]
            for y in range(3):
                P[j, x, y] = Il[j] * ((1.0 if x == y else 0.0) - u[j, x] * u[j, y])
    Jl[0, 1, 6] = -1.0
    Jl[1, 1, 6] = -1.0
    Jl[1, 1, 7] = -1.0

    M = np.zeros((8, 8))
    for b in range(4):
        M += m[b] * (J[b].T @ J[b])
    Wt = W.T.copy()
    for x in range(3):
        for i in range(3):
            for k in range(3):
                M[3 + i, 3 + k] += Wt[i, x] * Iq[x] * W[x, k]
    for j in range(2):
        M += Jl[j].T @ (P[j] @ Jl[j])
    M = 0.5 * (M + M.T)

    g = np.zeros(8)
    g[2] = gz * (m[0] + m[1] + m[2] + m[3])
    for b in range(4):
        for k in range(3):
            for x in range(3):
                g[3 + k] += gz * m[b] * dR[k, 2, x] * r[b, x]
        for l in range(2):
            for x in range(3):
                g[6 + l] += gz * m[b] * R[2, x] * dr[b, x, l]

    C = np.zeros((8, 8))
    if not with_coriolis:
        return M, C, g

    # dM/dq_k for the five angles, k = 0..4 <-> phi, theta, psi, alpha1, alpha2
    dM = np.zeros((5, 8, 8))
    dJ = np.zeros((3, 8))
    for k in range(5):
        for b in range(4):
            if m[b] == 0.0:
                continue
            dJ[:, :] = 0.0
            if k < 3:
                sk = _skew3(r[b])
                for x in range(3):
                    for i in range(3):
                        dJ[x, i] = dR[k, i, x]
                        acc = 0.0
                        for y in range(3):
                            acc += sk[x, y] * dW[k, y, i]
                        dJ[x, 3 + i] = -acc
            else:
                l = k - 3
                sk = _skew3(dr[b, :, l].copy())
                for x in range(3):
                    for i in range(3):
                        acc = 0.0
                        for y in range(3):
                            acc += sk[x, y] * W[y, i]
                        dJ[x, 3 + i] = -acc
                    dJ[x, 6] = ddr[b, x, 0, l]
                    dJ[x, 7] = ddr[b, x, 1, l]
            A = m[b] * (dJ.T @ J[b])
            dM[k] += A + A.T
        if k < 3:
            dJw = np.zeros((3, 8))
            for x in range(3):
                for i in range(3):
                    dJw[x, 3 + i] = dW[k, x, i]
            Jw = np.zeros((3, 8))
            for x in range(3):
                for i in range(3):
                    Jw[x, 3 + i] = W[x, i] * Iq[x]
            A = dJw.T @ Jw
            for j in range(2):
                A += dJw.T @ (P[j] @ Jl[j])
            dM[k] += A + A.T
        else:
            l = k - 3
            for j in range(2):
                sel = 1.0 if (l == 0 or j == 1) else 0.0
                if sel == 0.0:
                    continue
                dP = np.zeros((3, 3))
                for x in range(3):
                    for y in range(3):
                        dP[x, y] = -Il[j] * (w[j, x] * u[j, y] + u[j, x] * w[j, y])
                dM[k] += Jl[j].T @ (dP @ Jl[j])

    # Christoffel construction: C_kj = 1/2 sum_i (dM_kj/dq_i + dM_ki/dq_j - dM_ij/dq_k) qd_i
    for k in range(8):
        for j in range(8):
            acc = 0.0
            for i in range(5):
                acc += dM[i, k, j] * qd[3 + i]
            if j >= 3:
                for i in range(8):
                    acc += dM[j - 3, k, i] * qd[i]
            if k >= 3:
                for i in range(8):
                    acc -= dM[k - 3, i, j] * qd[i]
            C[k, j] = 0.5 * acc
    return M, C, g


@njit(cache=True)
def _skew3(v):
    out = np.zeros((3, 3))
    out[0, 1] = -v[2]
    out[0, 2] = v[1]
    out[1, 0] = v[2]
    out[1, 2] = -v[0]
    out[2, 0] = -v[1]
    out[2, 1] = v[0]
    return out


def _model_terms(chi, chi_dot, params: UamParams, with_coriolis: bool = True):
    """Return (M, C, g) for raw coordinate/velocity arrays.

    ``C`` is None when ``with_coriolis`` is False.
    """
    if abs(chi[4]) >= np.pi / 2 - SINGULARITY_EPS:
        raise SingularityError(f"pitch {chi[4]:.6f} rad is at the Euler singularity")
    M, C, g = _kernel(np.ascontiguousarray(chi, dtype=np.float64),
                      np.ascontiguousarray(chi_dot, dtype=np.float64),
                      _param_vector(params), with_coriolis)
    return M, (C if with_coriolis else None), g


def _state_arrays(state):
    if isinstance(state, SystemState):
        return state.chi, state.chi_dot
    chi, chi_dot = state
    return np.asarray(chi, dtype=float), np.asarray(chi_dot, dtype=float)


def mass_matrix(state, params: UamParams) -> np.ndarray:
    chi, chi_dot = _state_arrays(state)
    return _model_terms(chi, chi_dot, params, with_coriolis=False)[0]


def coriolis_matrix(state, params: UamParams) -> np.ndarray:
    chi, chi_dot = _state_arrays(state)
    return _model_terms(chi, chi_dot, params)[1]


def gravity_vector(state, params: UamParams) -> np.ndarray:
    chi, chi_dot = _state_arrays(state)
    return _model_terms(chi, chi_dot, params, with_coriolis=False)[2]


def mass_matrix_derivative(state, params: UamParams) -> np.ndarray:
    """Time derivative of M along the state velocity (used by checks)."""
    chi, chi_dot = _state_arrays(state)
    M, C, _ = _model_terms(chi, chi_dot, params)
    # C + C^T = M_dot for the Christoffel construction
    return C + C.T


@njit(cache=True)
def _cholesky_solve(M, rhs):
    """Solve M x = rhs for SPD M; returns (x, ok, condition estimate)."""
    n = M.shape[0]
    L = np.zeros((n, n))
    for j in range(n):
        acc = M[j, j]
        for k in range(j):
            acc -= L[j, k] * L[j, k]
        if not acc > 0.0:
            return np.zeros(n), False, np.inf
        L[j, j] = np.sqrt(acc)
        for i in range(j + 1, n):
            acc = M[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            L[i, j] = acc / L[j, j]
    y = np.zeros(n)
    for i in range(n):
        acc = rhs[i]
        for k in range(i):
            acc -= L[i, k] * y[k]
        y[i] = acc / L[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for k in range(i + 1, n):
            acc -= L[k, i] * x[k]
        x[i] = acc / L[i, i]
    dmax, dmin = 0.0, np.inf
    for i in range(n):
        dmax = max(dmax, L[i, i])
        dmin = min(dmin, L[i, i])
    return x, True, (dmax / dmin) ** 2


def _solve_spd(M, rhs):
    x, ok, cond = _cholesky_solve(M, np.ascontiguousarray(rhs, dtype=np.float64))
    if not ok:
        raise ConditioningError("mass matrix is not positive definite")
    if cond > MAX_CONDITION:
        raise ConditioningError("mass matrix condition estimate exceeds 1e12")
    return x


def forward_dynamics(state, tau, d, params: UamParams) -> np.ndarray:
    """chi_ddot = M^-1 (tau - C chi_dot - g - d)."""
    chi, chi_dot = _state_arrays(state)
    M, C, g = _model_terms(chi, chi_dot, params)
    rhs = np.asarray(tau, dtype=float) - C @ chi_dot - g - np.asarray(d, dtype=float)
    return _solve_spd(M, rhs)


def thrust_allocation(tau_p, R) -> Tuple[float, np.ndarray]:
    """Thrust u1 realizing tau_p = R [0, 0, u1]; also returns the lateral residual.

    The residual is the body x/y part of R^T tau_p, which a pure thrust
    vector cannot produce.
    """
    body = np.asarray(R, dtype=float).T @ np.asarray(tau_p, dtype=float)
    return float(body[2]), body[:2].copy()


def potential_energy(state, params: UamParams) -> float:
    chi, _ = _state_arrays(state)
    R = rotation_matrix(*chi[ATT])
    r, *_ = _arm_points(chi[ARM], params)
    heights = chi[2] + r @ R[2]
    return float(params.gravity * _masses(params) @ heights)


def total_energy(state, params: UamParams) -> float:
    chi, chi_dot = _state_arrays(state)
    M = mass_matrix((chi, chi_dot), params)
    return 0.5 * float(chi_dot @ M @ chi_dot) + potential_energy((chi, chi_dot), params)


def end_effector(chi, params: UamParams) -> Tuple[np.ndarray, np.ndarray]:
    """World position of the gripper (tip of link 2) and its 3x8 world Jacobian."""
    chi = np.asarray(chi, dtype=float)
    R = rotation_matrix(*chi[ATT])
    W, _ = _euler_rate_map(chi[3], chi[4])
    r, dr, *_ = _arm_points(chi[ARM], params)
    tip, dtip = r[3], dr[3]
    J = np.empty((3, N_DOF))
    J[:, POS] = np.eye(3)
    J[:, ATT] = -R @ _skew(tip) @ W
    J[:, ARM] = R @ dtip
    return chi[POS] + R @ tip, J


# -- integration ---------------------------------------------------------------

def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray,
             dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of y' = f(t, y)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    y_next = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)) or np.max(np.abs(y_next)) > DIVERGENCE_LIMIT:
        raise DivergenceError(f"state diverged near t = {t + dt:.4f} s")
    return y_next


def step_rk4(state: SystemState, gains, closed_loop_rhs, dt: float = 1e-3, t: float = 0.0):
    """Advance the augmented state [chi, chi_dot, K0, K1, K2] by one RK4 step.

    ``closed_loop_rhs(t, y)`` returns the derivative of the 19-vector
    augmented state. ``gains`` is an ``AdaptiveGains`` (or a 3-vector).
    """
    k_hat = np.asarray(getattr(gains, "k_hat", gains), dtype=float)
    y = np.concatenate([state.chi, state.chi_dot, k_hat])
    y_next = rk4_step(closed_loop_rhs, t, y, dt)
    new_state = SystemState.from_vector(y_next)
    new_gains = y_next[2 * N_DOF:]
    if hasattr(gains, "k_hat"):
        new_gains = type(gains)(new_gains)
    return new_state, new_gains
