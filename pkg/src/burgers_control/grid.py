"""Uniform Dirichlet meshes, nodal fields, trajectories, and discrete norms.

The spatial domain is the unit interval with homogeneous Dirichlet endpoints.
All quadrature is trapezoidal and all derivatives are second-order finite
differences, so every norm here is a "discrete Sobolev norm": consistent with
the solver's accuracy rather than spectrally exact.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "Trajectory",
    "norm_l1",
    "norm_l1_on",
    "norm_l2",
    "norm_linf",
    "norm_h1",
    "norm_h2",
    "interpolation_ratio",
]


@dataclass(frozen=True)
class Grid:
    """Uniform mesh on [0, 1] with nodes x_i = i/n_cells, i = 0..n_cells."""

    n_cells: int

    def __post_init__(self) -> None:
        if not isinstance(self.n_cells, (int, np.integer)):
            raise ValueError(f"n_cells must be an integer, got {self.n_cells!r}")
        if self.n_cells < 8:
            raise ValueError(f"n_cells must be >= 8, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def x(self) -> np.ndarray:
        nodes = np.linspace(0.0, 1.0, self.n_cells + 1)
        nodes.flags.writeable = False
        return nodes

    def refine(self) -> "Grid":
        """Grid with every cell split in two (nodes of self are kept)."""
        return Grid(2 * self.n_cells)


def _as_readonly(values: np.ndarray | Sequence[float]) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field:
    """Spatial profile sampled at the nodes of a Grid (one time slice)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _as_readonly(self.values))
        if self.values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if self.values.shape[0] != self.grid.n_nodes:
            raise ValueError(
                f"values has length {self.values.shape[0]}, "
                f"grid has {self.grid.n_nodes} nodes"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.n_nodes))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> "Field":
        return cls(grid, np.asarray(fn(grid.x), dtype=np.float64))

    def boundary_deviation(self) -> float:
        """Max absolute value at the two endpoints (0 for Dirichlet data)."""
        return float(max(abs(self.values[0]), abs(self.values[-1])))

    def dirichlet(self) -> "Field":
        """Copy with the endpoint values replaced by exact zeros."""
        v = self.values.copy()
        v[0] = 0.0
        v[-1] = 0.0
        return Field(self.grid, v)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            for xi, vi in zip(self.grid.x, self.values):
                writer.writerow([repr(float(xi)), repr(float(vi))])

    @classmethod
    def from_csv(cls, path) -> "Field":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["x", "value"]:
                raise ValueError(f"expected header 'x,value', got {header!r}")
            rows = [(float(r[0]), float(r[1])) for r in reader]
        if len(rows) < 9:
            raise ValueError("too few rows to form a grid (need n_cells >= 8)")
        xs = np.array([r[0] for r in rows])
        n = len(rows) - 1
        if not np.allclose(xs, np.linspace(0.0, 1.0, n + 1), atol=1e-12):
            raise ValueError("nodes are not a uniform mesh on [0, 1]")
        return cls(Grid(n), np.array([r[1] for r in rows]))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-indexed stack of fields with a fixed step.

    Frame k lives at time t0 + k*dt.  ``values`` has shape
    (n_frames, n_nodes); rows are individual time slices.
    """

    grid: Grid
    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim != 2:
            raise ValueError("values must be two-dimensional (frames x nodes)")
        if arr.shape[1] != self.grid.n_nodes:
            raise ValueError(
                f"frames have {arr.shape[1]} nodes, grid has {self.grid.n_nodes}"
            )
        if arr.shape[0] < 1:
            raise ValueError("need at least one frame")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n_frames - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_frames)

    @property
    def frames(self) -> list[Field]:
        return [Field(self.grid, row) for row in self.values]

    def frame(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def index_of(self, t: float) -> int:
        """Frame index of a time that must sit on the frame lattice."""
        k = int(round((t - self.t0) / self.dt))
        if k < 0 or k >= self.n_frames:
            raise ValueError(f"time {t} outside [{self.t0}, {self.t_end}]")
        if abs(self.t0 + k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"time {t} does not lie on the frame lattice")
        return k

    def at_time(self, t: float) -> Field:
        return self.frame(self.index_of(t))

    def sample(self, t: float) -> np.ndarray:
        """Profile at an arbitrary time, linearly interpolated between frames."""
        s = (t - self.t0) / self.dt
        eps = 1e-9 * max(1.0, abs(t))
        if s < -eps / self.dt or s > self.n_frames - 1 + eps / self.dt:
            raise ValueError(f"time {t} outside [{self.t0}, {self.t_end}]")
        k = int(math.floor(s))
        k = min(max(k, 0), self.n_frames - 2) if self.n_frames > 1 else 0
        theta = s - k
        theta = min(max(theta, 0.0), 1.0)
        if self.n_frames == 1:
            return self.values[0].copy()
        return (1.0 - theta) * self.values[k] + theta * self.values[k + 1]

    @classmethod
    def from_callable(
        cls,
        grid: Grid,
        fn: Callable[[float, np.ndarray], np.ndarray],
        t0: float,
        dt: float,
        n_frames: int,
    ) -> "Trajectory":
        rows = np.empty((n_frames, grid.n_nodes))
        for k in range(n_frames):
            rows[k] = np.asarray(fn(t0 + k * dt, grid.x), dtype=np.float64)
        return cls(grid, t0, dt, rows)

    @classmethod
    def constant(cls, field: Field, t0: float, dt: float, n_frames: int) -> "Trajectory":
        rows = np.tile(field.values, (n_frames, 1))
        return cls(field.grid, t0, dt, rows)

    def to_csv(self, path) -> None:
        """Long-format dump with one row per (t, x) sample."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "value"])
            for k in range(self.n_frames):
                t = float(self.t0 + k * self.dt)
                for xi, vi in zip(self.grid.x, self.values[k]):
                    writer.writerow([repr(t), repr(float(xi)), repr(float(vi))])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["t", "x", "value"]:
                raise ValueError(f"expected header 't,x,value', got {header!r}")
            rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader]
        ts = sorted({r[0] for r in rows})
        xs = sorted({r[1] for r in rows})
        n = len(xs) - 1
        grid = Grid(n)
        if not np.allclose(np.array(xs), grid.x, atol=1e-12):
            raise ValueError("nodes are not a uniform mesh on [0, 1]")
        t0 = ts[0]
        dt = (ts[-1] - ts[0]) / (len(ts) - 1) if len(ts) > 1 else 1.0
        lookup = {(r[0], r[1]): r[2] for r in rows}
        vals = np.array([[lookup[(t, x)] for x in xs] for t in ts])
        return cls(grid, t0, dt, vals)

    def norm_summary(self) -> list[dict]:
        """Per-frame norm record: {t, norms: {l1, l2, linf, h1, h2}}."""
        out = []
        for k in range(self.n_frames):
            f = self.frame(k)
            out.append(
                {
                    "t": float(self.t0 + k * self.dt),
                    "norms": {
                        "l1": norm_l1(f),
                        "l2": norm_l2(f),
                        "linf": norm_linf(f),
                        "h1": norm_h1(f),
                        "h2": norm_h2(f),
                    },
                }
            )
        return out

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.norm_summary(), fh, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# discrete calculus


def _diff1(values: np.ndarray, dx: float) -> np.ndarray:
    """Centred first derivative, second-order one-sided at the endpoints."""
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - values[:-2]) / (2.0 * dx)
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx)
    d[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dx)
    return d


def _diff2(values: np.ndarray, dx: float) -> np.ndarray:
    """Three-point second difference, second-order one-sided at the endpoints."""
    h2 = dx * dx
    d = np.empty_like(values)
    d[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / h2
    d[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2
    d[-1] = (2.0 * values[-1] - 5.0 * values[-2] + 4.0 * values[-3] - values[-4]) / h2
    return d


def _trapz(g: np.ndarray, dx: float) -> float:
    return float(dx * (np.sum(g) - 0.5 * (g[0] + g[-1])))


def _abs_cells(values: np.ndarray, dx: float) -> np.ndarray:
    """Per-cell trapezoid contributions to the integral of |f|."""
    g = np.abs(values)
    return (g[:-1] + g[1:]) * (0.5 * dx)


# ---------------------------------------------------------------------------
# norms


def norm_l1(f: Field) -> float:
    """Trapezoid approximation of the integral of |f| over [0, 1]."""
    return float(np.sum(_abs_cells(f.values, f.grid.dx)))


def norm_l1_on(f: Field, sub: tuple[float, float]) -> float:
    """Integral of |f| over a closed sub-interval of [0, 1].

    The integrand |f| is interpolated linearly inside cells, so the endpoints
    of ``sub`` need not be mesh nodes.  With sub = (0, 1) this reproduces
    norm_l1 exactly (identical summation over identical cell contributions).
    """
    s0, s1 = float(sub[0]), float(sub[1])
    if not (0.0 <= s0 <= s1 <= 1.0):
        raise ValueError(f"invalid sub-interval {sub!r}: need 0 <= lo <= hi <= 1")
    if s0 == s1:
        return 0.0
    n = f.grid.n_cells
    dx = f.grid.dx
    g = np.abs(f.values)
    cells = (g[:-1] + g[1:]) * (0.5 * dx)

    k0 = min(int(math.floor(s0 * n)), n - 1)
    t0 = s0 * n - k0
    k1 = min(int(math.floor(s1 * n)), n - 1)
    t1 = s1 * n - k1

    def partial(k: int, ta: float, tb: float) -> float:
        gk = g[k]
        gk1 = g[k + 1]
        return dx * (gk * (tb - ta) + (gk1 - gk) * 0.5 * (tb * tb - ta * ta))

    if k0 == k1:
        return partial(k0, t0, t1)
    if t0 == 0.0 and t1 == 1.0:
        return float(np.sum(cells[k0 : k1 + 1]))
    left = float(cells[k0]) if t0 == 0.0 else partial(k0, t0, 1.0)
    right = float(cells[k1]) if t1 == 1.0 else partial(k1, 0.0, t1)
    return left + float(np.sum(cells[k0 + 1 : k1])) + right


def norm_linf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def norm_l2(f: Field) -> float:
    v = f.values
    return math.sqrt(max(_trapz(v * v, f.grid.dx), 0.0))


def norm_h1(f: Field) -> float:
    v = f.values
    dx = f.grid.dx
    d1 = _diff1(v, dx)
    return math.sqrt(max(_trapz(v * v, dx) + _trapz(d1 * d1, dx), 0.0))


def norm_h2(f: Field) -> float:
    v = f.values
    dx = f.grid.dx
    d1 = _diff1(v, dx)
    d2 = _diff2(v, dx)
    s = _trapz(v * v, dx) + _trapz(d1 * d1, dx) + _trapz(d2 * d2, dx)
    return math.sqrt(max(s, 0.0))


def interpolation_ratio(f: Field) -> float:
    """norm_h1(f) / (norm_l1(f)^(2/5) * norm_h2(f)^(3/5)).

    Invariant under f -> lambda*f because the exponents sum to one.
    """
    # the denominator also vanishes when the squared norms underflow, so
    # guard the product rather than the L1 norm alone
    denom = norm_l1(f) ** 0.4 * norm_h2(f) ** 0.6
    if denom == 0.0:
        raise ValueError("interpolation_ratio is undefined for a field "
                         "with zero norm at working precision")
    return norm_h1(f) / denom
