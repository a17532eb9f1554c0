"""Plain-numpy assembly of M, C, g used as a cross-check for the compiled kernel.

Written independently with einsum over stacked Jacobians; shares only the
arm geometry helpers with the package.
"""

import numpy as np

from aerograsp.dynamics import (ARM, ATT, N_DOF, POS, _arm_points, _euler_rate_map,
                                _rotation_and_derivatives, _skew)

_EY = np.array([0.0, 1.0, 0.0])
_LINK_SELECT = np.array([[1.0, 0.0], [1.0, 1.0]])


def reference_terms(chi, chi_dot, params):
    phi, theta, psi = chi[3], chi[4], chi[5]
    R, dR = _rotation_and_derivatives(phi, theta, psi)
    W, dW = _euler_rate_map(phi, theta)
    r, dr, ddr, u, w = _arm_points(chi[ARM], params)
    m = np.array([params.quad_mass, *params.link_masses, params.payload_mass])
    Iq = np.asarray(params.quad_inertia, dtype=float)
    Il = np.asarray(params.link_inertias, dtype=float)

    skr = _skew(r)
    J = np.empty((4, 3, N_DOF))
    J[:, :, POS] = R.T
    J[:, :, ATT] = -skr @ W
    J[:, :, ARM] = dr
    Jw = np.zeros((3, N_DOF))
    Jw[:, ATT] = W
    Jl = np.zeros((2, 3, N_DOF))
    Jl[:, :, ATT] = W
    Jl[:, :, ARM] = -_EY[None, :, None] * _LINK_SELECT[:, None, :]
    P = Il[:, None, None] * (np.eye(3) - u[:, :, None] * u[:, None, :])

    M = np.einsum("b,bxi,bxj->ij", m, J, J)
    M += Jw.T @ (Iq[:, None] * Jw)
    M += np.einsum("jxi,jxy,jyk->ik", Jl, P, Jl)

    gz = params.gravity
    g = np.zeros(N_DOF)
    g[2] = gz * m.sum()
    g[ATT] = gz * np.einsum("b,kx,bx->k", m, dR[:, 2, :], r)
    g[ARM] = gz * np.einsum("b,x,bxl->l", m, R[2], dr)

    dJ = np.zeros((5, 4, 3, N_DOF))
    dJ[:3, :, :, POS] = np.swapaxes(dR, 1, 2)[:, None]
    dJ[:3, :, :, ATT] = -np.einsum("bxy,kyz->kbxz", skr, dW)
    skdr = _skew(np.swapaxes(dr, 1, 2))
    dJ[3:, :, :, ATT] = -np.einsum("blxy,yz->lbxz", skdr, W)
    dJ[3:, :, :, ARM] = np.transpose(ddr, (3, 0, 1, 2))
    dJw = np.zeros((3, 3, N_DOF))
    dJw[:, :, ATT] = dW

    A = np.einsum("b,kbxi,bxj->kij", m, dJ, J)
    B = np.einsum("kxi,x,xj->kij", dJw, Iq, Jw)
    L = np.einsum("kxi,jxy,jyz->kiz", dJw, P, Jl)
    dM = A + np.swapaxes(A, 1, 2)
    dM[:3] += B + np.swapaxes(B, 1, 2) + L + np.swapaxes(L, 1, 2)
    dP = -Il[:, None, None] * (w[:, :, None] * u[:, None, :] + u[:, :, None] * w[:, None, :])
    dPa = np.einsum("jl,jxy->ljxy", _LINK_SELECT, dP)
    dM[3:] += np.einsum("jxi,ljxy,jyk->lik", Jl, dPa, Jl)

    D = np.zeros((N_DOF, N_DOF, N_DOF))
    D[3:] = dM
    qd = np.asarray(chi_dot, dtype=float)
    Mdot = np.tensordot(qd, D, axes=(0, 0))
    C = 0.5 * (Mdot + (D @ qd).T - qd @ D)
    return M, C, g
