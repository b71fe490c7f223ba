"""Closed-form super/sub-solutions, the comparison checker, and the
reachability-obstruction experiment.

The barriers are explicit rational functions of (t, x) whose residual under
the nonlinear operator has one sign by construction:

* kind 'cor23_super':  ((B + x) * B + L * eps) / (t + eps), a universal
  upper barrier whose eps -> 0 limit bounds any solution at time T by
  B0 * (B0 + 1) / T regardless of the initial amplitude L;
* kind 'cor23_sub': the mirrored lower barrier;
* kind 'sec44_super':  A / ((t + eps) * (a - x + eps)), singular at the
  vertical line x = a + eps, used to bound solutions on (0, a) when all
  forcing beyond h vanishes there;
* kind 'zero': the zero function (residual identically zero when h = 0).

Residual checks are pointwise (strong form) on a sampling lattice denser
than the solver grid; the barriers are smooth where sampled, so the pointwise
sign implies the integral-form inequality.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .grid import Field, Grid, Trajectory
from .solver import BurgersProblem, Source, solve_burgers

__all__ = [
    "Barrier",
    "ComparisonReport",
    "check_supersolution",
    "check_subsolution",
    "comparison_check",
    "NonControllabilityReport",
    "non_controllability_experiment",
]


def lambda_budget(nu: float, T: float, a: float, h_inf: float) -> float:
    """Smallest coefficient satisfying both growth conditions of the
    singular barrier."""
    lam_visc = 4.0 * nu * (T + 1.0) + 2.0 * (a + 1.0) ** 2
    lam_forcing = math.sqrt(2.0 * (T + 1.0) ** 2 * (a + 1.0) ** 3 * h_inf)
    return max(lam_visc, lam_forcing)


@dataclass(frozen=True)
class Barrier:
    """Closed-form barrier with analytic derivatives.

    h_inf bounds the sup norm of the admissible forcing; residuals are
    reported against the worst admissible forcing (+h_inf for super-barriers,
    -h_inf for sub-barriers).
    """

    kind: str
    eps: float
    nu: float
    T: float
    L: float = 0.0
    h_inf: float = 0.0
    a: Optional[float] = None
    N: float = 0.0
    lam: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("cor23_super", "cor23_sub", "sec44_super", "zero"):
            raise ValueError(f"unknown barrier kind {self.kind!r}")
        if self.kind != "zero" and not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.h_inf < 0.0 or self.L < 0.0 or self.N < 0.0:
            raise ValueError("L, N and h_inf must be nonnegative")
        if self.kind == "sec44_super":
            if self.a is None or not 0.0 < self.a < 1.0:
                raise ValueError("sec44_super needs a in (0, 1)")
            if self.eps > 1.0:
                raise ValueError("sec44_super is calibrated for eps <= 1")
            if self.lam is None:
                object.__setattr__(
                    self, "lam", lambda_budget(self.nu, self.T, self.a, self.h_inf)
                )
            elif self.lam < lambda_budget(self.nu, self.T, self.a, self.h_inf):
                raise ValueError(
                    f"lam={self.lam} is below the required budget "
                    f"{lambda_budget(self.nu, self.T, self.a, self.h_inf):.6g}"
                )
        if self.kind == "zero" and self.h_inf != 0.0:
            raise ValueError("the zero barrier requires h_inf = 0")

    # -- coefficient helpers -------------------------------------------------

    @property
    def B(self) -> float:
        return 1.0 + self.h_inf ** (1.0 / 3.0) * (self.T + self.eps) ** (2.0 / 3.0)

    @property
    def A(self) -> float:
        return self.lam + self.eps * (
            self.L * (self.a + self.eps) + self.N * (self.T + self.eps)
        )

    @property
    def is_super(self) -> bool:
        return self.kind in ("cor23_super", "sec44_super", "zero")

    def _tx(self, t, x):
        t = np.asarray(t, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        if self.kind != "zero" and np.any(t + self.eps <= 0.0):
            raise ValueError("barrier evaluated at or before its singular time")
        if self.kind == "sec44_super" and np.any(self.a - x + self.eps <= 0.0):
            raise ValueError(
                f"singular barrier evaluated at x >= a + eps = {self.a + self.eps}"
            )
        return t, x

    # -- evaluation ----------------------------------------------------------

    def eval(self, t, x):
        t, x = self._tx(t, x)
        if self.kind == "zero":
            return np.zeros(np.broadcast(t, x).shape)
        if self.kind == "cor23_super":
            B = self.B
            return (B * (B + x) + self.L * self.eps) / (t + self.eps)
        if self.kind == "cor23_sub":
            B = self.B
            return -(B * (B + 1.0 - x) + self.L * self.eps) / (t + self.eps)
        A = self.A
        return A / ((t + self.eps) * (self.a - x + self.eps))

    def eval_dt(self, t, x):
        t, x = self._tx(t, x)
        if self.kind == "zero":
            return np.zeros(np.broadcast(t, x).shape)
        if self.kind == "cor23_super":
            B = self.B
            return -(B * (B + x) + self.L * self.eps) / (t + self.eps) ** 2
        if self.kind == "cor23_sub":
            B = self.B
            return (B * (B + 1.0 - x) + self.L * self.eps) / (t + self.eps) ** 2
        A = self.A
        return -A / ((t + self.eps) ** 2 * (self.a - x + self.eps))

    def eval_dx(self, t, x):
        t, x = self._tx(t, x)
        if self.kind == "zero":
            return np.zeros(np.broadcast(t, x).shape)
        if self.kind in ("cor23_super", "cor23_sub"):
            return self.B / (t + self.eps) * np.ones(np.broadcast(t, x).shape)
        A = self.A
        return A / ((t + self.eps) * (self.a - x + self.eps) ** 2)

    def eval_dxx(self, t, x):
        t, x = self._tx(t, x)
        if self.kind in ("zero", "cor23_super", "cor23_sub"):
            return np.zeros(np.broadcast(t, x).shape)
        A = self.A
        return 2.0 * A / ((t + self.eps) * (self.a - x + self.eps) ** 3)

    def residual(self, t, x):
        """Strong-form residual against the worst admissible forcing."""
        u = self.eval(t, x)
        r = self.eval_dt(t, x) - self.nu * self.eval_dxx(t, x) + u * self.eval_dx(t, x)
        return r - self.h_inf if self.is_super else r + self.h_inf

    def default_x_range(self) -> tuple[float, float]:
        if self.kind == "sec44_super":
            return (0.0, self.a)
        return (0.0, 1.0)


def _sample_lattice(b: Barrier, grid: Grid, dt: float,
                    x_range: Optional[tuple[float, float]],
                    oversample: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Sampling lattice denser than the solver discretisation (4x in each
    direction by default) to catch sign dips between nodes."""
    lo, hi = x_range if x_range is not None else b.default_x_range()
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"invalid x range ({lo}, {hi})")
    nx = oversample * max(8, int(round((hi - lo) * grid.n_cells))) + 1
    xs = np.linspace(lo, hi, nx)
    nt = oversample * max(1, int(round(b.T / dt))) + 1
    ts = np.linspace(0.0, b.T, nt)
    return ts, xs


def check_supersolution(b: Barrier, grid: Grid, dt: float,
                        x_range: Optional[tuple[float, float]] = None) -> float:
    """Min sampled residual; >= -1e-10 certifies the barrier from above."""
    ts, xs = _sample_lattice(b, grid, dt, x_range)
    res = b.residual(ts[:, None], xs[None, :])
    return float(np.min(res))


def check_subsolution(b: Barrier, grid: Grid, dt: float,
                      x_range: Optional[tuple[float, float]] = None) -> float:
    """Max sampled residual; <= 1e-10 certifies the barrier from below."""
    ts, xs = _sample_lattice(b, grid, dt, x_range)
    res = b.residual(ts[:, None], xs[None, :])
    return float(np.max(res))


# ---------------------------------------------------------------------------
# comparison principle


@dataclass(frozen=True)
class ComparisonReport:
    max_violation: float
    boundary_ok: bool
    initial_ok: bool


def _values_on(obj: Union[Trajectory, Barrier], times: np.ndarray,
               xs: np.ndarray, cols: slice) -> np.ndarray:
    if isinstance(obj, Trajectory):
        return obj.values[:, cols]
    return obj.eval(times[:, None], xs[None, :])


def comparison_check(
    u_plus: Union[Trajectory, Barrier],
    u_minus: Union[Trajectory, Barrier],
    interval: tuple[float, float],
    T: Optional[float] = None,
) -> ComparisonReport:
    """Verify ordering between an upper and a lower object on a space-time
    cylinder.

    The ordering hypothesis (upper >= lower at the initial time on the whole
    interval and on its two edges for all times) is a precondition; violating
    it raises with the offending location.  The report carries the largest
    interior violation over all frames (0 for a true ordered pair, up to
    discretisation slack otherwise).
    """
    traj = None
    for cand in (u_plus, u_minus):
        if isinstance(cand, Trajectory):
            traj = cand
            break
    if traj is None:
        raise ValueError("comparison_check needs at least one trajectory")
    if isinstance(u_plus, Trajectory) and isinstance(u_minus, Trajectory):
        if u_plus.grid != u_minus.grid or u_plus.n_frames != u_minus.n_frames:
            raise ValueError("trajectories are incompatible")

    lo, hi = float(interval[0]), float(interval[1])
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError(f"invalid interval {interval!r}")
    grid = traj.grid
    i_lo = int(math.ceil(lo * grid.n_cells - 1e-9))
    i_hi = int(math.floor(hi * grid.n_cells + 1e-9))
    if i_hi - i_lo < 2:
        raise ValueError(f"interval {interval!r} holds fewer than 3 nodes")
    n_frames = traj.n_frames
    if T is not None:
        n_frames = min(n_frames, int(round((T - traj.t0) / traj.dt)) + 1)
    times = traj.t0 + traj.dt * np.arange(n_frames)
    cols = slice(i_lo, i_hi + 1)
    xs = grid.x[cols]

    up = _values_on(u_plus, times, xs, cols)[:n_frames]
    lo_v = _values_on(u_minus, times, xs, cols)[:n_frames]

    scale = 1.0 + max(float(np.max(np.abs(up[0]))), float(np.max(np.abs(lo_v[0]))))
    tol = 1e-9 * scale

    init_gap = lo_v[0] - up[0]
    j_bad = int(np.argmax(init_gap))
    if init_gap[j_bad] > tol:
        raise ValueError(
            f"ordering hypothesis fails at t={times[0]:.6g}, x={xs[j_bad]:.6g}: "
            f"lower {lo_v[0, j_bad]:.6g} > upper {up[0, j_bad]:.6g}"
        )
    initial_ok = True

    for edge in (0, -1):
        gap = lo_v[:, edge] - up[:, edge]
        k_bad = int(np.argmax(gap))
        if gap[k_bad] > tol:
            raise ValueError(
                f"ordering hypothesis fails at t={times[k_bad]:.6g}, "
                f"x={xs[edge]:.6g}: lower {lo_v[k_bad, edge]:.6g} > "
                f"upper {up[k_bad, edge]:.6g}"
            )
    boundary_ok = True

    violation = lo_v[:, 1:-1] - up[:, 1:-1]
    max_violation = float(max(np.max(violation), 0.0))
    return ComparisonReport(
        max_violation=max_violation,
        boundary_ok=boundary_ok,
        initial_ok=initial_ok,
    )


# ---------------------------------------------------------------------------
# reachability obstruction


@dataclass(frozen=True, eq=False)
class NonControllabilityReport:
    T0: float
    delta: float
    a: float
    nu: float
    rho_emp: float
    rho_formula: float
    n_runs: int
    seed: Optional[int]
    target_value: float
    R: float
    min_l2_distance: float
    run_sups: tuple[float, ...]
    run_distances: tuple[float, ...]

    @property
    def bound_holds(self) -> bool:
        return self.rho_emp <= self.rho_formula + 0.5

    def to_json(self, path) -> None:
        doc = {
            "T0": self.T0,
            "delta": self.delta,
            "a": self.a,
            "nu": self.nu,
            "rho_emp": self.rho_emp,
            "rho_formula": self.rho_formula,
            "n_runs": self.n_runs,
            "seed": self.seed,
            "target_value": self.target_value,
            "R": self.R,
            "min_l2_distance": self.min_l2_distance,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)


def _validate_control_support(control: Source, grid: Grid, a: float,
                              T0: float, index: int) -> None:
    if control is None:
        return
    mask = grid.x < a - 1e-12
    if not np.any(mask):
        return
    ts = np.linspace(0.0, T0, 33)
    if isinstance(control, Trajectory):
        worst = float(np.max(np.abs(control.values[:, mask])))
    else:
        worst = 0.0
        for t in ts:
            row = np.asarray(control(float(t), grid.x), dtype=np.float64)
            worst = max(worst, float(np.max(np.abs(row[mask]))))
    if worst != 0.0:
        raise ValueError(
            f"control {index} does not vanish on (0, {a}): max |zeta| = {worst:.3e}"
        )


def _phased_solve(u0: Field, h: Source, zeta: Source, nu: float, T0: float,
                  grid: Grid, dt: float, amp: float) -> Field:
    """Integrate to T0, resolving the steep early transient of large data on
    a temporarily refined grid before continuing on the target grid."""
    if amp <= 20.0:
        traj = solve_burgers(
            BurgersProblem(nu=nu, u0=u0, t_span=(0.0, T0), dt=dt, h=h, zeta=zeta)
        )
        return traj.frame(traj.n_frames - 1)
    refine = 8 if amp > 200.0 else 4
    fine = Grid(refine * grid.n_cells)
    dt_a = (2e-6 if amp > 200.0 else 1e-5) * T0
    dt_b = 10.0 * dt_a
    t_a, t_b = 0.01 * T0, 0.1 * T0
    u0_fine = Field.from_function(fine, lambda x: np.interp(x, grid.x, u0.values))
    ph_a = solve_burgers(
        BurgersProblem(nu=nu, u0=u0_fine.dirichlet(), t_span=(0.0, t_a),
                       dt=dt_a, h=h, zeta=zeta)
    )
    ph_b = solve_burgers(
        BurgersProblem(nu=nu, u0=ph_a.frame(ph_a.n_frames - 1),
                       t_span=(t_a, t_b), dt=dt_b, h=h, zeta=zeta)
    )
    coarse = Field(grid, ph_b.values[-1][::refine])
    # the remaining span is rarely a multiple of the caller's dt
    n_c = max(1, int(math.ceil((T0 - t_b) / dt - 1e-9)))
    ph_c = solve_burgers(
        BurgersProblem(nu=nu, u0=coarse, t_span=(t_b, T0), dt=(T0 - t_b) / n_c,
                       h=h, zeta=zeta)
    )
    return ph_c.frame(ph_c.n_frames - 1)


def non_controllability_experiment(
    T0: float,
    delta: float,
    a: float,
    nu: float,
    h: Source,
    controls: Sequence[Source],
    u0_amplitudes: Sequence[float],
    grid: Grid,
    dt: float,
    h_inf: float = 0.0,
    R: float = 10.0,
    seed: Optional[int] = None,
) -> NonControllabilityReport:
    """Drive the equation with controls supported right of x = a and record
    how large the solution can get on (0, delta) at time T0.

    Controls are paired with initial amplitudes cyclically; every control must
    vanish on (0, a) (checked, precondition error otherwise).  rho_formula is
    the barrier prediction lambda_budget / (T0 * (a - delta)); the target
    value rho_formula + sqrt(delta) * R + 1 defines the constant profile whose
    L2(0, delta) distance to each final state is reported.
    """
    if not 0.0 < delta < a < 1.0:
        raise ValueError(f"need 0 < delta < a < 1, got delta={delta}, a={a}")
    if len(controls) == 0:
        raise ValueError("need at least one control")
    for i, c in enumerate(controls):
        _validate_control_support(c, grid, a, T0, i)

    lam = lambda_budget(nu, T0, a, h_inf)
    rho_formula = lam / (T0 * (a - delta))
    target_value = rho_formula + math.sqrt(delta) * R + 1.0

    amps = list(u0_amplitudes)
    x = grid.x
    mask_delta = x <= delta + 1e-12
    n_delta = int(np.sum(mask_delta))

    run_sups = []
    run_dists = []
    for i, control in enumerate(controls):
        amp = float(amps[i % len(amps)])
        u0 = Field(grid, amp * np.sin(np.pi * x)).dirichlet()
        u_T = _phased_solve(u0, h, control, nu, T0, grid, dt, abs(amp))
        seg = u_T.values[mask_delta]
        run_sups.append(float(np.max(np.abs(seg))))
        diff = seg - target_value
        w = np.full(n_delta, grid.dx)
        w[0] *= 0.5
        w[-1] *= 0.5
        run_dists.append(float(math.sqrt(np.sum(w * diff * diff))))

    return NonControllabilityReport(
        T0=T0,
        delta=delta,
        a=a,
        nu=nu,
        rho_emp=float(max(run_sups)),
        rho_formula=rho_formula,
        n_runs=len(controls),
        seed=seed,
        target_value=target_value,
        R=R,
        min_l2_distance=float(min(run_dists)),
        run_sups=tuple(run_sups),
        run_distances=tuple(run_dists),
    )
