"""Pure NumPy/SciPy time-stepping kernels.

Reference lane for the JIT kernels in ``_kernels_numba``: same algorithms,
same call signatures, banded solves delegated to LAPACK via
``scipy.linalg.solve_banded``.  Selected by setting the environment variable
``BURGERS_CONTROL_DISABLE_NUMBA=1`` or automatically when numba is absent.

Status codes returned by the integrators:
    0  success
    1  Newton iteration failed to converge within the iteration cap
    2  non-finite values encountered
    3  singular tridiagonal system
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

OK = 0
NEWTON_FAIL = 1
NONFINITE = 2
SINGULAR = 3

_LS_MAX = 30  # line-search halvings before accepting the step anyway


def thomas_solve(lower: np.ndarray, diag: np.ndarray, upper: np.ndarray,
                 rhs: np.ndarray) -> tuple[np.ndarray, int]:
    """Solve a tridiagonal system; lower[0] and upper[-1] are ignored.

    Returns (solution, status).  Singular pivots give status 3 and a zero
    solution vector.
    """
    m = diag.shape[0]
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1, :] = diag
    ab[2, :-1] = lower[1:]
    if not np.all(np.isfinite(ab)) or not np.all(np.isfinite(rhs)):
        return np.zeros(m), NONFINITE
    try:
        x = solve_banded((1, 1), ab, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        return np.zeros(m), SINGULAR
    except ValueError:
        return np.zeros(m), SINGULAR
    if not np.all(np.isfinite(x)):
        return np.zeros(m), SINGULAR
    return x, OK


def _burgers_residual(u_new: np.ndarray, u_old: np.ndarray, f_mid: np.ndarray,
                      nu: float, dx: float, dt: float) -> np.ndarray:
    """Residual of the Crank-Nicolson step on interior nodes."""
    c_diff = 0.5 * nu / (dx * dx)
    lap_new = u_new[:-2] - 2.0 * u_new[1:-1] + u_new[2:]
    lap_old = u_old[:-2] - 2.0 * u_old[1:-1] + u_old[2:]
    flux_new = (u_new[2:] ** 2 - u_new[:-2] ** 2) / (8.0 * dx)
    flux_old = (u_old[2:] ** 2 - u_old[:-2] ** 2) / (8.0 * dx)
    rhs = c_diff * (lap_new + lap_old) - (flux_new + flux_old) + f_mid[1:-1]
    return u_new[1:-1] - u_old[1:-1] - dt * rhs


def burgers_step(u_old: np.ndarray, f_mid: np.ndarray, nu: float, dx: float,
                 dt: float, tol: float, max_iter: int) -> tuple[np.ndarray, int]:
    """One damped-Newton Crank-Nicolson step of the nonlinear equation."""
    u = u_old.copy()
    u[0] = 0.0
    u[-1] = 0.0
    res_vec = _burgers_residual(u, u_old, f_mid, nu, dx, dt)
    res = float(np.max(np.abs(res_vec))) if res_vec.size else 0.0
    c_diff = 0.5 * nu / (dx * dx)
    c_adv = dt / (4.0 * dx)
    for _ in range(max_iter):
        if not np.isfinite(res):
            return u, NONFINITE
        if res <= tol:
            return u, OK
        diag = np.full(u.shape[0] - 2, 1.0 + 2.0 * dt * c_diff)
        lower = -dt * c_diff - c_adv * u[:-2]
        upper = -dt * c_diff + c_adv * u[2:]
        delta, st = thomas_solve(lower, diag, upper, res_vec)
        if st != OK:
            return u, st
        alpha = 1.0
        for _ in range(_LS_MAX):
            u_try = u.copy()
            u_try[1:-1] -= alpha * delta
            vec_try = _burgers_residual(u_try, u_old, f_mid, nu, dx, dt)
            res_try = float(np.max(np.abs(vec_try)))
            if res_try <= res:
                break
            alpha *= 0.5
        u = u_try
        res_vec = vec_try
        res = res_try
    if res <= tol:
        return u, OK
    return u, NEWTON_FAIL if np.isfinite(res) else NONFINITE


def burgers_integrate(u0: np.ndarray, f_mid: np.ndarray, nu: float, dx: float,
                      dt: float, tol: float, max_iter: int
                      ) -> tuple[np.ndarray, int, int]:
    """Crank-Nicolson integration of the nonlinear equation.

    f_mid holds the forcing sampled at half-steps: row k applies to the step
    from frame k to frame k+1.  Returns (frames, status, failing_step).
    """
    n_steps = f_mid.shape[0]
    frames = np.zeros((n_steps + 1, u0.shape[0]))
    frames[0] = u0
    frames[0, 0] = 0.0
    frames[0, -1] = 0.0
    for k in range(n_steps):
        u_new, st = burgers_step(frames[k], f_mid[k], nu, dx, dt, tol, max_iter)
        if st != OK:
            return frames, st, k
        frames[k + 1] = u_new
    return frames, OK, n_steps


def linear_integrate(w0: np.ndarray, a_frames: np.ndarray, nu: float,
                     dx: float, dt: float) -> tuple[np.ndarray, int, int]:
    """Crank-Nicolson for the conservative advection-diffusion equation.

    The advection coefficient enters through the centred difference of the
    nodal product a*w; a_frames holds the coefficient at every frame time.
    """
    n_steps = a_frames.shape[0] - 1
    frames = np.zeros((n_steps + 1, w0.shape[0]))
    frames[0] = w0
    frames[0, 0] = 0.0
    frames[0, -1] = 0.0
    c_diff = 0.5 * dt * nu / (dx * dx)
    c_adv = dt / (4.0 * dx)
    m = w0.shape[0] - 2
    diag = np.full(m, 1.0 + 2.0 * c_diff)
    for k in range(n_steps):
        w = frames[k]
        a_old = a_frames[k]
        a_new = a_frames[k + 1]
        lap = w[:-2] - 2.0 * w[1:-1] + w[2:]
        div = (a_old[2:] * w[2:] - a_old[:-2] * w[:-2]) / (4.0 * dx)
        rhs = w[1:-1] + c_diff * lap - dt * div
        lower = -c_diff - c_adv * a_new[:-2]
        upper = -c_diff + c_adv * a_new[2:]
        x, st = thomas_solve(lower, diag, upper, rhs)
        if st != OK:
            return frames, st, k
        frames[k + 1, 1:-1] = x
    return frames, OK, n_steps


def advective_integrate(z0: np.ndarray, a_frames: np.ndarray, nu: float,
                        dx: float, dt: float) -> tuple[np.ndarray, int, int]:
    """Crank-Nicolson for the advective-form equation dz/dt = nu*z_xx + a*z_x.

    Used for the dual problem after reversing time; a_frames must already be
    ordered to match the integration direction.
    """
    n_steps = a_frames.shape[0] - 1
    frames = np.zeros((n_steps + 1, z0.shape[0]))
    frames[0] = z0
    frames[0, 0] = 0.0
    frames[0, -1] = 0.0
    c_diff = 0.5 * dt * nu / (dx * dx)
    c_adv = dt / (4.0 * dx)
    m = z0.shape[0] - 2
    diag = np.full(m, 1.0 + 2.0 * c_diff)
    for k in range(n_steps):
        z = frames[k]
        a_old = a_frames[k][1:-1]
        a_new = a_frames[k + 1][1:-1]
        lap = z[:-2] - 2.0 * z[1:-1] + z[2:]
        grad = a_old * (z[2:] - z[:-2]) / (4.0 * dx)
        rhs = z[1:-1] + c_diff * lap + dt * grad
        lower = -c_diff + c_adv * a_new
        upper = -c_diff - c_adv * a_new
        x, st = thomas_solve(lower, diag, upper, rhs)
        if st != OK:
            return frames, st, k
        frames[k + 1, 1:-1] = x
    return frames, OK, n_steps
