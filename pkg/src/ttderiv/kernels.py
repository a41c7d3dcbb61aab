"""Hot numeric loops: filtering recursions, path stepping, PDE stepping.

Every kernel exists twice: a loop implementation compiled with numba and a
pure-NumPy twin. The module-level names bind to the numba build unless
``TTDERIV_NO_NUMBA=1`` is set (see :mod:`ttderiv._accel`); both twins stay
importable so the benchmark and the parity tests can compare them directly.

All kernels are deterministic: they consume pre-drawn noise arrays and never
touch a random generator themselves.
"""

import numpy as np
from scipy.signal import lfilter

from ._accel import NUMBA_ENABLED, jit_kernel


# ---------------------------------------------------------------------------
# ARMA innovations recursion (Harvey state space, unit innovation variance)
# ---------------------------------------------------------------------------

def _arma_innovations_loop(y, phi, theta, P0):
    # phi is padded to length m = max(p, q+1); theta to length m-1.
    n = y.shape[0]
    m = P0.shape[0]
    r = np.zeros(m)
    r[0] = 1.0
    for j in range(theta.shape[0]):
        r[j + 1] = theta[j]

    a = np.zeros(m)
    P = P0.copy()
    e = np.empty(n)
    v = np.empty(n)
    K = np.zeros(m)
    TP = np.empty((m, m))
    Pn = np.empty((m, m))
    steady = False
    v_prev = -1.0

    for t in range(n):
        vt = P[0, 0]
        v[t] = vt
        e[t] = y[t] - a[0]
        if not steady:
            for i in range(m - 1):
                K[i] = (phi[i] * P[0, 0] + P[i + 1, 0]) / vt
            K[m - 1] = phi[m - 1] * P[0, 0] / vt
        a0 = a[0]
        for i in range(m - 1):
            a[i] = phi[i] * a0 + a[i + 1] + K[i] * e[t]
        a[m - 1] = phi[m - 1] * a0 + K[m - 1] * e[t]
        if not steady:
            for j in range(m):
                for i in range(m - 1):
                    TP[i, j] = phi[i] * P[0, j] + P[i + 1, j]
                TP[m - 1, j] = phi[m - 1] * P[0, j]
            for i in range(m):
                for j in range(m - 1):
                    Pn[i, j] = phi[j] * TP[i, 0] + TP[i, j + 1]
                Pn[i, m - 1] = phi[m - 1] * TP[i, 0]
            for i in range(m):
                for j in range(m):
                    P[i, j] = Pn[i, j] - vt * K[i] * K[j] + r[i] * r[j]
            if v_prev > 0.0 and abs(vt - v_prev) < 1e-13 * vt:
                steady = True
            v_prev = vt
    return e, v


def _arma_innovations_numpy(y, phi, theta, P0):
    n = y.shape[0]
    m = P0.shape[0]
    T = np.zeros((m, m))
    T[:, 0] = phi
    if m > 1:
        T[: m - 1, 1:] = np.eye(m - 1)
    r = np.zeros(m)
    r[0] = 1.0
    r[1 : 1 + theta.shape[0]] = theta
    RR = np.outer(r, r)

    a = np.zeros(m)
    P = P0.copy()
    e = np.empty(n)
    v = np.empty(n)
    K = np.zeros(m)
    steady = False
    v_prev = -1.0
    for t in range(n):
        vt = P[0, 0]
        v[t] = vt
        e[t] = y[t] - a[0]
        if not steady:
            K = (T @ P)[:, 0] / vt
        a = T @ a + K * e[t]
        if not steady:
            P = T @ P @ T.T - vt * np.outer(K, K) + RR
            if v_prev > 0.0 and abs(vt - v_prev) < 1e-13 * vt:
                steady = True
            v_prev = vt
    return e, v


# ---------------------------------------------------------------------------
# Kalman filter for an exactly discretized continuous state-space model
# ---------------------------------------------------------------------------

def _carma_kalman_loop(y, F, Q, b, P0):
    # Exact observation y_t = b . x_t, so there is no measurement-noise term.
    n = y.shape[0]
    m = F.shape[0]
    xp = np.zeros(m)
    Pp = P0.copy()
    xf = np.empty((n, m))
    pred = np.empty(n)
    e = np.empty(n)
    v = np.empty(n)
    Pb = np.zeros(m)
    Pf = np.empty((m, m))
    FP = np.empty((m, m))
    steady = False
    v_prev = -1.0
    vt = 0.0

    for t in range(n):
        yhat = 0.0
        for i in range(m):
            yhat += b[i] * xp[i]
        if not steady:
            vt = 0.0
            for i in range(m):
                s = 0.0
                for j in range(m):
                    s += Pp[i, j] * b[j]
                Pb[i] = s
                vt += b[i] * s
        pred[t] = yhat
        e[t] = y[t] - yhat
        v[t] = vt
        ixf = xf[t]
        if vt > 1e-300:
            g = e[t] / vt
            for i in range(m):
                ixf[i] = xp[i] + Pb[i] * g
        else:
            for i in range(m):
                ixf[i] = xp[i]
        for i in range(m):
            s = 0.0
            for j in range(m):
                s += F[i, j] * ixf[j]
            xp[i] = s
        if not steady:
            if vt > 1e-300:
                for i in range(m):
                    for j in range(m):
                        Pf[i, j] = Pp[i, j] - Pb[i] * Pb[j] / vt
            else:
                for i in range(m):
                    for j in range(m):
                        Pf[i, j] = Pp[i, j]
            for i in range(m):
                for j in range(m):
                    s = 0.0
                    for k in range(m):
                        s += F[i, k] * Pf[k, j]
                    FP[i, j] = s
            for i in range(m):
                for j in range(m):
                    s = Q[i, j]
                    for k in range(m):
                        s += FP[i, k] * F[j, k]
                    Pp[i, j] = s
            if v_prev > 0.0 and abs(vt - v_prev) < 1e-13 * vt:
                steady = True
            v_prev = vt
    return xf, pred, e, v


def _carma_kalman_numpy(y, F, Q, b, P0):
    n = y.shape[0]
    m = F.shape[0]
    xp = np.zeros(m)
    Pp = P0.copy()
    xf = np.empty((n, m))
    pred = np.empty(n)
    e = np.empty(n)
    v = np.empty(n)
    steady = False
    v_prev = -1.0
    Pb = np.zeros(m)
    vt = 0.0
    for t in range(n):
        pred[t] = b @ xp
        if not steady:
            Pb = Pp @ b
            vt = b @ Pb
        e[t] = y[t] - pred[t]
        v[t] = vt
        if vt > 1e-300:
            xf[t] = xp + Pb * (e[t] / vt)
        else:
            xf[t] = xp
        xp = F @ xf[t]
        if not steady:
            Pf = Pp - np.outer(Pb, Pb) / vt if vt > 1e-300 else Pp
            Pp = F @ Pf @ F.T + Q
            if v_prev > 0.0 and abs(vt - v_prev) < 1e-13 * vt:
                steady = True
            v_prev = vt
    return xf, pred, e, v


# ---------------------------------------------------------------------------
# Monte Carlo path block for the pricing engine
# ---------------------------------------------------------------------------

def _mc_path_block_loop(F, L, drift, x0, brow, z):
    # z has shape (B, n, d); d == m for plain state noise, d == m+1 when the
    # last channel carries the Brownian increment of the driving motion.
    B, n, d = z.shape
    m = F.shape[0]
    track = d == m + 1
    obs = np.empty((B, n + 1))
    sumdw = np.zeros(B)
    for ip in range(B):
        x = x0.copy()
        o = 0.0
        for i in range(m):
            o += brow[i] * x[i]
        obs[ip, 0] = o
        for k in range(n):
            xn = np.empty(m)
            for i in range(m):
                s = drift[k, i]
                for j in range(m):
                    s += F[i, j] * x[j]
                for j in range(d):
                    s += L[i, j] * z[ip, k, j]
                xn[i] = s
            if track:
                w = 0.0
                for j in range(d):
                    w += L[m, j] * z[ip, k, j]
                sumdw[ip] += w
            x = xn
            o = 0.0
            for i in range(m):
                o += brow[i] * x[i]
            obs[ip, k + 1] = o
    return obs, sumdw


def _mc_path_block_numpy(F, L, drift, x0, brow, z):
    B, n, d = z.shape
    m = F.shape[0]
    X = np.repeat(x0[None, :], B, axis=0)
    obs = np.empty((B, n + 1))
    obs[:, 0] = X @ brow
    sumdw = np.zeros(B)
    eta = z @ L.T
    for k in range(n):
        X = X @ F.T + drift[k] + eta[:, k, :m]
        if d == m + 1:
            sumdw += eta[:, k, m]
        obs[:, k + 1] = X @ brow
    return obs, sumdw


# ---------------------------------------------------------------------------
# Single exact-discretization state path (simulation front door)
# ---------------------------------------------------------------------------

def _carma_state_path_loop(F, L, x0, z):
    n, m = z.shape[0], F.shape[0]
    out = np.empty((n + 1, m))
    for i in range(m):
        out[0, i] = x0[i]
    x = x0.copy()
    for k in range(n):
        xn = np.empty(m)
        for i in range(m):
            s = 0.0
            for j in range(m):
                s += F[i, j] * x[j]
            for j in range(m):
                s += L[i, j] * z[k, j]
            xn[i] = s
        x = xn
        for i in range(m):
            out[k + 1, i] = x[i]
    return out


def _carma_state_path_numpy(F, L, x0, z):
    n, m = z.shape[0], F.shape[0]
    out = np.empty((n + 1, m))
    out[0] = x0
    eta = z @ L.T
    x = x0.copy()
    for k in range(n):
        x = F @ x + eta[k]
        out[k + 1] = x
    return out


# ---------------------------------------------------------------------------
# Zero-mean ARMA recursion over given innovations
# ---------------------------------------------------------------------------

def _arma_recursion_loop(phi, theta, eps):
    n = eps.shape[0]
    p = phi.shape[0]
    q = theta.shape[0]
    x = np.zeros(n)
    for t in range(n):
        s = eps[t]
        for i in range(p):
            if t - 1 - i >= 0:
                s += phi[i] * x[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                s += theta[j] * eps[t - 1 - j]
        x[t] = s
    return x


def _arma_recursion_numpy(phi, theta, eps):
    b = np.concatenate(([1.0], theta))
    a = np.concatenate(([1.0], -phi))
    return lfilter(b, a, eps)


# ---------------------------------------------------------------------------
# Explicit upwind backward stepping for the Asian-call pricing PDE
# ---------------------------------------------------------------------------

def _pde_asian_backward_loop(v0, ax, xg, yg, dx, dy, dz, half_sig2, r, dt, nt):
    # Interior: first-order upwind advection + central diffusion in x.
    # Faces: z-low absorbed at 0, all other faces linear extrapolation.
    nx, ny, nz = v0.shape
    v = v0.copy()
    vn = np.empty_like(v)
    inv_dx2 = 1.0 / (dx * dx)
    for _ in range(nt):
        for i in range(1, nx - 1):
            ai = ax[i]
            cy = xg[i]
            for j in range(1, ny - 1):
                cz = yg[j]
                for k in range(1, nz - 1):
                    c = v[i, j, k]
                    rhs = half_sig2 * (v[i + 1, j, k] - 2.0 * c + v[i - 1, j, k]) * inv_dx2
                    if ai >= 0.0:
                        rhs += ai * (v[i + 1, j, k] - c) / dx
                    else:
                        rhs += ai * (c - v[i - 1, j, k]) / dx
                    if cy >= 0.0:
                        rhs += cy * (v[i, j + 1, k] - c) / dy
                    else:
                        rhs += cy * (c - v[i, j - 1, k]) / dy
                    if cz >= 0.0:
                        rhs += cz * (v[i, j, k + 1] - c) / dz
                    else:
                        rhs += cz * (c - v[i, j, k - 1]) / dz
                    vn[i, j, k] = c + dt * (rhs - r * c)
        for i in range(1, nx - 1):
            for j in range(1, ny - 1):
                vn[i, j, 0] = 0.0
                vn[i, j, nz - 1] = 2.0 * vn[i, j, nz - 2] - vn[i, j, nz - 3]
        for i in range(1, nx - 1):
            for k in range(nz):
                vn[i, 0, k] = 2.0 * vn[i, 1, k] - vn[i, 2, k]
                vn[i, ny - 1, k] = 2.0 * vn[i, ny - 2, k] - vn[i, ny - 3, k]
        for j in range(ny):
            for k in range(nz):
                vn[0, j, k] = 2.0 * vn[1, j, k] - vn[2, j, k]
                vn[nx - 1, j, k] = 2.0 * vn[nx - 2, j, k] - vn[nx - 3, j, k]
        v, vn = vn, v
    return v


def _pde_asian_backward_numpy(v0, ax, xg, yg, dx, dy, dz, half_sig2, r, dt, nt):
    v = v0.copy()
    axp = np.maximum(ax[1:-1], 0.0)[:, None, None]
    axm = np.minimum(ax[1:-1], 0.0)[:, None, None]
    cyp = np.maximum(xg[1:-1], 0.0)[:, None, None]
    cym = np.minimum(xg[1:-1], 0.0)[:, None, None]
    czp = np.maximum(yg[1:-1], 0.0)[None, :, None]
    czm = np.minimum(yg[1:-1], 0.0)[None, :, None]
    for _ in range(nt):
        vn = np.empty_like(v)
        c = v[1:-1, 1:-1, 1:-1]
        rhs = half_sig2 * (v[2:, 1:-1, 1:-1] - 2.0 * c + v[:-2, 1:-1, 1:-1]) / dx**2
        rhs += axp * (v[2:, 1:-1, 1:-1] - c) / dx + axm * (c - v[:-2, 1:-1, 1:-1]) / dx
        rhs += cyp * (v[1:-1, 2:, 1:-1] - c) / dy + cym * (c - v[1:-1, :-2, 1:-1]) / dy
        rhs += czp * (v[1:-1, 1:-1, 2:] - c) / dz + czm * (c - v[1:-1, 1:-1, :-2]) / dz
        vn[1:-1, 1:-1, 1:-1] = c + dt * (rhs - r * c)
        vn[1:-1, 1:-1, 0] = 0.0
        vn[1:-1, 1:-1, -1] = 2.0 * vn[1:-1, 1:-1, -2] - vn[1:-1, 1:-1, -3]
        vn[1:-1, 0, :] = 2.0 * vn[1:-1, 1, :] - vn[1:-1, 2, :]
        vn[1:-1, -1, :] = 2.0 * vn[1:-1, -2, :] - vn[1:-1, -3, :]
        vn[0, :, :] = 2.0 * vn[1, :, :] - vn[2, :, :]
        vn[-1, :, :] = 2.0 * vn[-2, :, :] - vn[-3, :, :]
        v = vn
    return v


# ---------------------------------------------------------------------------
# Backend binding
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    arma_innovations = jit_kernel(_arma_innovations_loop)
    carma_kalman = jit_kernel(_carma_kalman_loop)
    mc_path_block = jit_kernel(_mc_path_block_loop)
    carma_state_path = jit_kernel(_carma_state_path_loop)
    arma_recursion = jit_kernel(_arma_recursion_loop)
    pde_asian_backward = jit_kernel(_pde_asian_backward_loop)
    BACKEND = "numba"
else:
    arma_innovations = _arma_innovations_numpy
    carma_kalman = _carma_kalman_numpy
    mc_path_block = _mc_path_block_numpy
    carma_state_path = _carma_state_path_numpy
    arma_recursion = _arma_recursion_numpy
    pde_asian_backward = _pde_asian_backward_numpy
    BACKEND = "numpy"

# Twins by name, for the parity tests and the backend benchmark.
IMPLEMENTATIONS = {
    "arma_innovations": (_arma_innovations_loop, _arma_innovations_numpy),
    "carma_kalman": (_carma_kalman_loop, _carma_kalman_numpy),
    "mc_path_block": (_mc_path_block_loop, _mc_path_block_numpy),
    "carma_state_path": (_carma_state_path_loop, _carma_state_path_numpy),
    "arma_recursion": (_arma_recursion_loop, _arma_recursion_numpy),
    "pde_asian_backward": (_pde_asian_backward_loop, _pde_asian_backward_numpy),
}
