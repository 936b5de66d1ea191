"""
Reference solver for small obstacle TV-L2 problems.

An alternating-direction multiplier method with a dense linear solve per
iteration. It shares no code with the primal-dual solver and serves as an
independent check of its energies on grids of a few hundred cells.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve


def difference_matrix(ny: int, nx: int, sp: float) -> np.ndarray:
    """Dense forward-difference matrix, zero flux on the far edges; rows are x then y parts."""
    n = ny * nx
    idx = np.arange(n).reshape(ny, nx)
    D = np.zeros((2 * n, n))
    for j in range(ny):
        for i in range(nx):
            k = idx[j, i]
            if i < nx - 1:
                D[k, k] = -1 / sp
                D[k, idx[j, i + 1]] = 1 / sp
            if j < ny - 1:
                D[n + k, k] = -1 / sp
                D[n + k, idx[j + 1, i]] = 1 / sp
    return D


def energy(u: np.ndarray, f: np.ndarray, h: float, sp: float) -> float:
    """Isotropic TV plus quadratic fidelity, both weighted by the cell area."""
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = np.diff(u, axis=1) / sp
    gy[:-1, :] = np.diff(u, axis=0) / sp
    return float(np.sum(np.hypot(gx, gy)) + np.sum((u - f) ** 2) / (2 * h)) * sp * sp


def admm_obstacle_tv(f: np.ndarray, v: np.ndarray | None, h: float, sp: float, iters: int = 20000,
                     rho: float | None = None) -> np.ndarray:
    """Alternating-direction multiplier method for the obstacle TV-L2 problem.

    Splits ``p = Du`` (shrinkage step) and ``w = u`` (projection on
    ``w >= v``); the ``u`` step is a dense linear solve.
    """
    ny, nx = f.shape
    n = ny * nx
    D = difference_matrix(ny, nx, sp)
    rho = rho if rho is not None else 1.0 / np.sqrt(h)
    fv = f.ravel()
    vv = None if v is None else v.ravel()
    A = np.eye(n) * (1 / h + rho) + rho * D.T @ D
    factor = cho_factor(A)
    u = fv.copy()
    p = D @ u
    a = np.zeros(2 * n)
    w = u.copy() if vv is None else np.maximum(u, vv)
    b = np.zeros(n)
    for _ in range(iters):
        u = cho_solve(factor, fv / h + rho * D.T @ (p - a) + rho * (w - b))
        Du = D @ u
        q = Du + a
        qx, qy = q[:n], q[n:]
        nrm = np.hypot(qx, qy)
        shrink = np.maximum(nrm - 1 / rho, 0) / np.where(nrm > 0, nrm, 1)
        p = np.concatenate([qx * shrink, qy * shrink])
        w = u + b if vv is None else np.maximum(u + b, vv)
        a += Du - p
        b += u - w
    return w.reshape(ny, nx)
