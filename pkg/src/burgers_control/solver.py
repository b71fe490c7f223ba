"""Crank-Nicolson solvers for the nonlinear equation, its linearisation, and
the dual of the linearisation.

All three integrators share the same second-order building blocks:

* diffusion: centred three-point Laplacian, trapezoidal in time;
* nonlinear flux: conservative form, centred difference of u^2/2;
* linear advection: conservative form, centred difference of the product a*w
  (forward), or advective form a*dz/dx (dual, integrated in reversed time).

The nonlinear step is solved by damped Newton iteration on its tridiagonal
Jacobian.  Forcing terms are sampled at half-steps t_{k+1/2} to preserve the
scheme's formal O(dt^2 + dx^2) accuracy.

A note on step sizes: the schemes are unconditionally stable, but the strict
structural inequalities (nodewise positivity, per-step L1 contraction, the
dual max-norm bound) hold to rounding only under the monotonicity conditions

    nu * dt / dx^2 <= 1      and      dx <= 2 * nu / max|coefficient|,

the CFL-like bound referred to below.  Away from it the same quantities hold
up to the scheme's O(dt^2 + dx^2) discretisation error rather than bitwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .grid import Field, Grid, Trajectory

__all__ = [
    "BurgersProblem",
    "LinearProblem",
    "SolverError",
    "StepFailureError",
    "NumericBlowupError",
    "SingularSystemError",
    "solve_burgers",
    "solve_linear",
    "solve_dual",
    "duality_pairing_drift",
]

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 50

Source = Union[None, Callable[[float, np.ndarray], np.ndarray], Trajectory]


class SolverError(RuntimeError):
    """Base class for integration failures."""


class StepFailureError(SolverError):
    """Newton iteration did not converge within the iteration cap."""


class NumericBlowupError(SolverError):
    """NaN or Inf appeared during integration."""


class SingularSystemError(SolverError):
    """The tridiagonal system of a step was singular."""


def _check_dirichlet(f: Field, name: str) -> None:
    dev = f.boundary_deviation()
    if dev > 1e-9:
        raise ValueError(
            f"{name} must vanish at the endpoints (deviation {dev:.3e}); "
            "use Field.dirichlet() to zero them"
        )


def _resolve_steps(t_span: tuple[float, float], dt: float) -> tuple[int, float]:
    t_start, t_end = float(t_span[0]), float(t_span[1])
    span = t_end - t_start
    n_steps = int(round(span / dt))
    if n_steps < 1:
        raise ValueError(f"dt={dt} exceeds the time span {span}")
    if abs(n_steps * dt - span) > 1e-8 * max(span, 1.0):
        raise ValueError(
            f"time span {span} is not an integer multiple of dt={dt}"
        )
    # Land exactly on t_end; the adjustment is below 1e-8 relative.
    return n_steps, span / n_steps


@dataclass(frozen=True)
class BurgersProblem:
    """The nonlinear problem du/dt - nu*u_xx + u*u_x = h + zeta on (0, 1)
    with homogeneous Dirichlet boundary values."""

    nu: float
    u0: Field
    t_span: tuple[float, float]
    dt: float
    h: Source = None
    zeta: Source = None

    def __post_init__(self) -> None:
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.t_span[1] > self.t_span[0]:
            raise ValueError(f"t_span must increase, got {self.t_span}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.dt > self.t_span[1] - self.t_span[0]:
            raise ValueError("dt exceeds the time span")
        if not np.all(np.isfinite(self.u0.values)):
            raise ValueError("u0 contains non-finite values")
        _check_dirichlet(self.u0, "u0")


@dataclass(frozen=True)
class LinearProblem:
    """Advection-diffusion problem around a given coefficient trajectory.

    direction 'forward' integrates the conservative equation
    dw/dt - nu*w_xx + d(a*w)/dx = 0 from initial data w0.
    direction 'backward' integrates the advective dual equation
    dz/dt + nu*z_xx + a*z_x = 0 from terminal data w0 at t_span[1].
    """

    nu: float
    coeff: Trajectory
    w0: Field
    t_span: tuple[float, float]
    dt: float
    direction: str = "forward"

    def __post_init__(self) -> None:
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if self.direction not in ("forward", "backward"):
            raise ValueError(
                f"direction must be 'forward' or 'backward', got {self.direction!r}"
            )
        if not self.t_span[1] > self.t_span[0]:
            raise ValueError(f"t_span must increase, got {self.t_span}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.coeff.grid != self.w0.grid:
            raise ValueError("coefficient and data live on different grids")
        eps = 1e-9 * max(1.0, abs(self.t_span[1]))
        if self.coeff.t0 > self.t_span[0] + eps or self.coeff.t_end < self.t_span[1] - eps:
            raise ValueError(
                f"coefficient trajectory [{self.coeff.t0}, {self.coeff.t_end}] "
                f"does not cover t_span {self.t_span}"
            )
        _check_dirichlet(self.w0, "w0")


def _sample_source(src: Source, grid: Grid, times: np.ndarray) -> np.ndarray:
    """Source values on the nodes at each requested time."""
    out = np.zeros((times.shape[0], grid.n_nodes))
    if src is None:
        return out
    if isinstance(src, Trajectory):
        if src.grid != grid:
            raise ValueError("source trajectory lives on a different grid")
        for k, t in enumerate(times):
            out[k] = src.sample(float(t))
        return out
    x = grid.x
    for k, t in enumerate(times):
        row = np.asarray(src(float(t), x), dtype=np.float64)
        if row.shape != (grid.n_nodes,):
            raise ValueError("source callable must return one value per node")
        out[k] = row
    return out


def _raise_for_status(status: int, step: int, t0: float, dt: float) -> None:
    if status == _kernels.OK:
        return
    t = t0 + (step + 1) * dt
    if status == _kernels.NEWTON_FAIL:
        raise StepFailureError(
            f"Newton iteration failed to converge within {NEWTON_MAX_ITER} "
            f"iterations at t={t:.6g}"
        )
    if status == _kernels.NONFINITE:
        raise NumericBlowupError(f"non-finite values detected at t={t:.6g}")
    if status == _kernels.SINGULAR:
        raise SingularSystemError(
            f"singular tridiagonal system at t={t:.6g}; reduce dt below the "
            "documented CFL-like bound"
        )
    raise SolverError(f"unknown kernel status {status} at t={t:.6g}")


def solve_burgers(p: BurgersProblem) -> Trajectory:
    """Integrate the nonlinear problem; returns frames at t_start + k*dt."""
    grid = p.u0.grid
    n_steps, dt = _resolve_steps(p.t_span, p.dt)
    t0 = float(p.t_span[0])
    half_times = t0 + dt * (np.arange(n_steps) + 0.5)
    f_mid = _sample_source(p.h, grid, half_times)
    if p.zeta is not None:
        f_mid += _sample_source(p.zeta, grid, half_times)
    u0 = p.u0.values.copy()
    u0[0] = 0.0
    u0[-1] = 0.0
    frames, status, step = _kernels.burgers_integrate(
        u0, f_mid, float(p.nu), grid.dx, dt, NEWTON_TOL, NEWTON_MAX_ITER
    )
    _raise_for_status(status, step, t0, dt)
    return Trajectory(grid, t0, dt, frames)


def _coeff_frames(coeff: Trajectory, t0: float, dt: float, n_steps: int) -> np.ndarray:
    """Coefficient resampled at the solver's frame times."""
    # Fast path: frame lattices coincide, slice directly.
    ratio = dt / coeff.dt
    offset = (t0 - coeff.t0) / coeff.dt
    if (abs(ratio - round(ratio)) < 1e-12 and abs(offset - round(offset)) < 1e-9
            and round(ratio) >= 1):
        r = int(round(ratio))
        o = int(round(offset))
        last = o + r * n_steps
        if 0 <= o and last <= coeff.n_frames - 1:
            return coeff.values[o : last + 1 : r].copy()
    times = t0 + dt * np.arange(n_steps + 1)
    s = (times - coeff.t0) / coeff.dt
    k = np.clip(np.floor(s).astype(int), 0, max(coeff.n_frames - 2, 0))
    theta = np.clip(s - k, 0.0, 1.0)
    if coeff.n_frames == 1:
        return np.tile(coeff.values[0], (n_steps + 1, 1))
    return ((1.0 - theta)[:, None] * coeff.values[k]
            + theta[:, None] * coeff.values[k + 1])


def solve_linear(p: LinearProblem) -> Trajectory:
    """Integrate the conservative linearised equation forward in time."""
    if p.direction != "forward":
        raise ValueError("solve_linear requires direction='forward'")
    grid = p.w0.grid
    n_steps, dt = _resolve_steps(p.t_span, p.dt)
    t0 = float(p.t_span[0])
    a = _coeff_frames(p.coeff, t0, dt, n_steps)
    w0 = p.w0.values.copy()
    frames, status, step = _kernels.linear_integrate(w0, a, float(p.nu), grid.dx, dt)
    _raise_for_status(status, step, t0, dt)
    return Trajectory(grid, t0, dt, frames)


def solve_dual(p: LinearProblem) -> Trajectory:
    """Integrate the dual equation backward from terminal data.

    The terminal profile p.w0 is imposed at t_span[1]; the result is returned
    with frames ordered by increasing time, so frame 0 holds z(t_start).
    """
    if p.direction != "backward":
        raise ValueError("solve_dual requires direction='backward'")
    grid = p.w0.grid
    n_steps, dt = _resolve_steps(p.t_span, p.dt)
    t0 = float(p.t_span[0])
    a = _coeff_frames(p.coeff, t0, dt, n_steps)
    a_rev = a[::-1].copy()
    z0 = p.w0.values.copy()
    frames, status, step = _kernels.advective_integrate(
        z0, a_rev, float(p.nu), grid.dx, dt
    )
    _raise_for_status(status, step, t0, dt)
    return Trajectory(grid, t0, dt, frames[::-1].copy())


def duality_pairing_drift(w: Trajectory, z: Trajectory) -> float:
    """Relative drift of the spatial pairing (w(t), z(t)) along two runs.

    Returns max_k |(w_k, z_k) - (w_0, z_0)| / max(|(w_0, z_0)|, 1e-30), where
    the pairing is the trapezoid integral of the nodal product.  The forward
    solution and the dual solution must share grid and frame times.
    """
    if w.grid != z.grid:
        raise ValueError("trajectories live on different grids")
    if w.n_frames != z.n_frames:
        raise ValueError("trajectories have different frame counts")
    eps = 1e-9 * max(1.0, abs(w.t0), abs(w.t_end))
    if abs(w.t0 - z.t0) > eps or abs(w.dt - z.dt) > 1e-12 * max(w.dt, z.dt):
        raise ValueError("trajectories cover different time windows")
    dx = w.grid.dx
    prod = w.values * z.values
    pair = dx * (np.sum(prod, axis=1) - 0.5 * (prod[:, 0] + prod[:, -1]))
    p0 = pair[0]
    return float(np.max(np.abs(pair - p0)) / max(abs(p0), 1e-30))
