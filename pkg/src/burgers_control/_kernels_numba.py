"""Numba-compiled time-stepping kernels.

Same algorithms and signatures as ``_kernels_np``; the tridiagonal solve is a
hand-written Thomas sweep because the step loops run inside a single JIT
region.  Importing this module raises ImportError when numba is unavailable,
and the dispatcher in ``_kernels`` then falls back to the NumPy lane.

Status codes:
    0  success
    1  Newton iteration failed to converge within the iteration cap
    2  non-finite values encountered
    3  singular tridiagonal system
"""
from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
NEWTON_FAIL = 1
NONFINITE = 2
SINGULAR = 3

_LS_MAX = 30


@njit(cache=True)
def _thomas(lower, diag, upper, rhs, out):
    """In-place Thomas sweep; returns a status code (0 ok, 3 singular)."""
    m = diag.shape[0]
    cp = np.empty(m)
    dp = np.empty(m)
    piv = diag[0]
    if abs(piv) < 1e-300 or not np.isfinite(piv):
        return SINGULAR
    cp[0] = upper[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, m):
        piv = diag[i] - lower[i] * cp[i - 1]
        if abs(piv) < 1e-300 or not np.isfinite(piv):
            return SINGULAR
        cp[i] = upper[i] / piv
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / piv
    out[m - 1] = dp[m - 1]
    for i in range(m - 2, -1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
    return OK


def thomas_solve(lower, diag, upper, rhs):
    """Wrapper matching the NumPy-lane signature: returns (solution, status)."""
    out = np.zeros(diag.shape[0])
    if not (np.all(np.isfinite(diag)) and np.all(np.isfinite(rhs))
            and np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        return out, NONFINITE
    st = _thomas(lower, diag, upper, rhs, out)
    if st != OK or not np.all(np.isfinite(out)):
        return np.zeros(diag.shape[0]), SINGULAR if st == OK else st
    return out, OK


@njit(cache=True)
def _burgers_residual(u_new, u_old, f_mid, nu, dx, dt, out):
    c_diff = 0.5 * nu / (dx * dx)
    inv8dx = 1.0 / (8.0 * dx)
    for i in range(1, u_new.shape[0] - 1):
        lap_new = u_new[i - 1] - 2.0 * u_new[i] + u_new[i + 1]
        lap_old = u_old[i - 1] - 2.0 * u_old[i] + u_old[i + 1]
        flux_new = (u_new[i + 1] * u_new[i + 1] - u_new[i - 1] * u_new[i - 1]) * inv8dx
        flux_old = (u_old[i + 1] * u_old[i + 1] - u_old[i - 1] * u_old[i - 1]) * inv8dx
        rhs = c_diff * (lap_new + lap_old) - (flux_new + flux_old) + f_mid[i]
        out[i - 1] = u_new[i] - u_old[i] - dt * rhs


@njit(cache=True)
def _inf_norm(v):
    r = 0.0
    for i in range(v.shape[0]):
        a = abs(v[i])
        if a > r or not np.isfinite(a):
            r = a
            if not np.isfinite(a):
                return a
    return r


@njit(cache=True)
def _burgers_step(u_old, f_mid, nu, dx, dt, tol, max_iter, u_out):
    n1 = u_old.shape[0]
    m = n1 - 2
    u = u_old.copy()
    u[0] = 0.0
    u[n1 - 1] = 0.0
    res_vec = np.empty(m)
    _burgers_residual(u, u_old, f_mid, nu, dx, dt, res_vec)
    res = _inf_norm(res_vec)
    c_diff = 0.5 * nu / (dx * dx)
    c_adv = dt / (4.0 * dx)
    diag = np.empty(m)
    lower = np.empty(m)
    upper = np.empty(m)
    delta = np.empty(m)
    u_try = np.empty(n1)
    vec_try = np.empty(m)
    for _ in range(max_iter):
        if not np.isfinite(res):
            u_out[:] = u
            return NONFINITE
        if res <= tol:
            u_out[:] = u
            return OK
        for j in range(m):
            diag[j] = 1.0 + 2.0 * dt * c_diff
            lower[j] = -dt * c_diff - c_adv * u[j]
            upper[j] = -dt * c_diff + c_adv * u[j + 2]
        st = _thomas(lower, diag, upper, res_vec, delta)
        if st != OK:
            u_out[:] = u
            return st
        alpha = 1.0
        res_try = res
        for _ in range(_LS_MAX):
            u_try[0] = 0.0
            u_try[n1 - 1] = 0.0
            for j in range(m):
                u_try[j + 1] = u[j + 1] - alpha * delta[j]
            _burgers_residual(u_try, u_old, f_mid, nu, dx, dt, vec_try)
            res_try = _inf_norm(vec_try)
            if res_try <= res:
                break
            alpha *= 0.5
        u[:] = u_try
        res_vec[:] = vec_try
        res = res_try
    u_out[:] = u
    if res <= tol:
        return OK
    if np.isfinite(res):
        return NEWTON_FAIL
    return NONFINITE


@njit(cache=True)
def burgers_integrate(u0, f_mid, nu, dx, dt, tol, max_iter):
    """Crank-Nicolson integration of the nonlinear equation.

    f_mid holds the forcing at half-steps: row k drives the step from frame k
    to frame k+1.  Returns (frames, status, failing_step).
    """
    n_steps = f_mid.shape[0]
    frames = np.zeros((n_steps + 1, u0.shape[0]))
    frames[0] = u0
    frames[0, 0] = 0.0
    frames[0, u0.shape[0] - 1] = 0.0
    u_new = np.empty(u0.shape[0])
    for k in range(n_steps):
        st = _burgers_step(frames[k], f_mid[k], nu, dx, dt, tol, max_iter, u_new)
        if st != OK:
            return frames, st, k
        frames[k + 1] = u_new
    return frames, OK, n_steps


@njit(cache=True)
def linear_integrate(w0, a_frames, nu, dx, dt):
    """Conservative-form advection-diffusion (centred flux differences)."""
    n_steps = a_frames.shape[0] - 1
    n1 = w0.shape[0]
    m = n1 - 2
    frames = np.zeros((n_steps + 1, n1))
    frames[0] = w0
    frames[0, 0] = 0.0
    frames[0, n1 - 1] = 0.0
    c_diff = 0.5 * dt * nu / (dx * dx)
    c_adv = dt / (4.0 * dx)
    diag = np.empty(m)
    lower = np.empty(m)
    upper = np.empty(m)
    rhs = np.empty(m)
    x = np.empty(m)
    for j in range(m):
        diag[j] = 1.0 + 2.0 * c_diff
    for k in range(n_steps):
        w = frames[k]
        a_old = a_frames[k]
        a_new = a_frames[k + 1]
        for j in range(m):
            i = j + 1
            lap = w[i - 1] - 2.0 * w[i] + w[i + 1]
            div = (a_old[i + 1] * w[i + 1] - a_old[i - 1] * w[i - 1]) / (4.0 * dx)
            rhs[j] = w[i] + c_diff * lap - dt * div
            lower[j] = -c_diff - c_adv * a_new[i - 1]
            upper[j] = -c_diff + c_adv * a_new[i + 1]
        st = _thomas(lower, diag, upper, rhs, x)
        if st != OK:
            return frames, st, k
        for j in range(m):
            frames[k + 1, j + 1] = x[j]
    return frames, OK, n_steps


@njit(cache=True)
def advective_integrate(z0, a_frames, nu, dx, dt):
    """Advective-form equation dz/dt = nu*z_xx + a*z_x (time already reversed
    by the caller for dual solves)."""
    n_steps = a_frames.shape[0] - 1
    n1 = z0.shape[0]
    m = n1 - 2
    frames = np.zeros((n_steps + 1, n1))
    frames[0] = z0
    frames[0, 0] = 0.0
    frames[0, n1 - 1] = 0.0
    c_diff = 0.5 * dt * nu / (dx * dx)
    c_adv = dt / (4.0 * dx)
    diag = np.empty(m)
    lower = np.empty(m)
    upper = np.empty(m)
    rhs = np.empty(m)
    x = np.empty(m)
    for j in range(m):
        diag[j] = 1.0 + 2.0 * c_diff
    for k in range(n_steps):
        z = frames[k]
        a_old = a_frames[k]
        a_new = a_frames[k + 1]
        for j in range(m):
            i = j + 1
            lap = z[i - 1] - 2.0 * z[i] + z[i + 1]
            grad = a_old[i] * (z[i + 1] - z[i - 1]) / (4.0 * dx)
            rhs[j] = z[i] + c_diff * lap + dt * grad
            lower[j] = -c_diff + c_adv * a_new[i]
            upper[j] = -c_diff - c_adv * a_new[i]
        st = _thomas(lower, diag, upper, rhs, x)
        if st != OK:
            return frames, st, k
        for j in range(m):
            frames[k + 1, j + 1] = x[j]
    return frames, OK, n_steps
