"""Scenario configuration, the batch runner, and the sweep driver.

Configs are flat JSON objects.  ``parse_config`` validates every field and
reports all violations at once rather than stopping at the first.  ``run``
executes one scenario into an output directory (report.json plus scenario
artifacts) and ``sweep`` fans a list of scenarios out over processes.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import analysis, barriers, control
from .grid import Field, Grid, Trajectory, norm_l1, norm_linf
from .solver import BurgersProblem, SolverError, solve_burgers

__all__ = [
    "ScenarioConfig",
    "parse_config",
    "RunReport",
    "run",
    "run_with_exit_code",
    "sweep",
]

KINDS = (
    "simulate",
    "stabilize",
    "dichotomy",
    "harnack",
    "barrier",
    "noncontrol",
    "contraction",
)
_KIND_ALIASES = {"non-controllability": "noncontrol"}

_FORCING_KINDS = {
    "zero": (),
    "sine": ("k", "amp"),
    "sine_cos": ("k", "amp", "omega"),
}
_INITIAL_KINDS = {
    "sine": ("k", "amp"),
    "random_fourier": ("seed", "n_modes", "amp"),
    "constant_clip": ("amp", "ramp"),
}


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    n_cells: int = 256
    dt: Optional[float] = None
    nu: float = 0.1
    t_end: float = 1.0
    seed: Optional[int] = None
    forcing: dict = field(default_factory=lambda: {"kind": "zero"})
    initial: dict = field(default_factory=lambda: {"kind": "sine", "k": 1, "amp": 1.0})
    initial_b: Optional[dict] = None
    support: tuple = (0.3, 0.7)
    inner: Optional[tuple] = None
    n_cycles: int = 10
    rho: float = 2.0
    n_scenarios: int = 20
    q: Optional[float] = None
    eps: Optional[float] = None
    K: tuple = (0.25, 0.75)
    t_early: float = 0.5
    barrier_eps: float = 0.01
    a: float = 0.5
    delta: float = 0.25
    amplitudes: tuple = (10.0,)
    R: float = 10.0
    dump_fields: bool = False

    @property
    def grid(self) -> Grid:
        return Grid(self.n_cells)

    @property
    def dt_value(self) -> float:
        return self.dt if self.dt is not None else 1.0 / self.n_cells


def _check_preset(name: str, preset, table: dict, errors: list) -> None:
    if not isinstance(preset, dict):
        errors.append(f"{name}: expected an object, got {type(preset).__name__}")
        return
    kind = preset.get("kind")
    if kind not in table:
        errors.append(
            f"{name}.kind: expected one of {sorted(table)}, got {kind!r}"
        )
        return
    allowed = set(table[kind]) | {"kind"}
    for key in preset:
        if key not in allowed:
            errors.append(f"{name}.{key}: unknown key for preset {kind!r}")
    for key in table[kind]:
        if key not in preset:
            continue
        val = preset[key]
        if key in ("k", "n_modes", "seed"):
            if not isinstance(val, int):
                errors.append(f"{name}.{key}: expected an integer, got {val!r}")
        elif not isinstance(val, (int, float)):
            errors.append(f"{name}.{key}: expected a number, got {val!r}")


def _pair(value, name: str, errors: list) -> Optional[tuple]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        errors.append(f"{name}: expected a pair [lo, hi], got {value!r}")
        return None
    try:
        return (float(value[0]), float(value[1]))
    except (TypeError, ValueError):
        errors.append(f"{name}: expected numbers, got {value!r}")
        return None


def parse_config(text: str) -> ScenarioConfig:
    """Parse and validate one scenario config.

    All violations are collected and reported in a single ValueError so a
    bad config can be fixed in one pass.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid config: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValueError("invalid config: top level must be an object")

    errors: list[str] = []
    known = {f for f in ScenarioConfig.__dataclass_fields__}
    for key in raw:
        if key not in known and key != "kind":
            errors.append(f"{key}: unknown key")

    kind = raw.get("kind")
    kind = _KIND_ALIASES.get(kind, kind)
    if kind not in KINDS:
        errors.append(f"kind: expected one of {KINDS}, got {raw.get('kind')!r}")
        kind = "simulate"

    kwargs: dict = {"kind": kind}

    n_cells = raw.get("n_cells", 256)
    if not isinstance(n_cells, int) or n_cells < 8:
        errors.append(f"n_cells: expected an integer >= 8, got {n_cells!r}")
    else:
        kwargs["n_cells"] = n_cells

    for name, lo in (("dt", 0.0), ("nu", 0.0), ("t_end", 0.0),
                     ("rho", 0.0), ("barrier_eps", 0.0), ("R", 0.0)):
        if name not in raw:
            continue
        val = raw[name]
        if name == "dt" and val is None:
            continue
        if not isinstance(val, (int, float)) or not val > lo:
            errors.append(f"{name}: expected a number > {lo}, got {val!r}")
        else:
            kwargs[name] = float(val)

    for name in ("q", "eps", "t_early", "a", "delta"):
        if name not in raw:
            continue
        val = raw[name]
        if not isinstance(val, (int, float)) or not val > 0.0:
            errors.append(f"{name}: expected a positive number, got {val!r}")
        else:
            kwargs[name] = float(val)

    for name in ("n_cycles", "n_scenarios"):
        if name not in raw:
            continue
        val = raw[name]
        if not isinstance(val, int) or val < 1:
            errors.append(f"{name}: expected an integer >= 1, got {val!r}")
        else:
            kwargs[name] = val

    if "seed" in raw and raw["seed"] is not None:
        if not isinstance(raw["seed"], int):
            errors.append(f"seed: expected an integer, got {raw['seed']!r}")
        else:
            kwargs["seed"] = raw["seed"]

    if "dump_fields" in raw:
        if not isinstance(raw["dump_fields"], bool):
            errors.append(f"dump_fields: expected true/false, got {raw['dump_fields']!r}")
        else:
            kwargs["dump_fields"] = raw["dump_fields"]

    if "support" in raw:
        pair = _pair(raw["support"], "support", errors)
        if pair is not None:
            if not 0.0 < pair[0] < pair[1] < 1.0:
                errors.append(
                    f"support: expected 0 < a < b < 1, got {list(pair)}"
                )
            else:
                kwargs["support"] = pair
    if "inner" in raw and raw["inner"] is not None:
        pair = _pair(raw["inner"], "inner", errors)
        if pair is not None:
            sup = kwargs.get("support", (0.3, 0.7))
            if not sup[0] < pair[0] < pair[1] < sup[1]:
                errors.append(
                    f"inner: expected support[0] < lo < hi < support[1], "
                    f"got {list(pair)}"
                )
            else:
                kwargs["inner"] = pair
    if "K" in raw:
        pair = _pair(raw["K"], "K", errors)
        if pair is not None:
            if not 0.0 < pair[0] < pair[1] < 1.0:
                errors.append(f"K: expected 0 < lo < hi < 1, got {list(pair)}")
            else:
                kwargs["K"] = pair

    if "amplitudes" in raw:
        val = raw["amplitudes"]
        if (not isinstance(val, (list, tuple)) or len(val) == 0
                or not all(isinstance(v, (int, float)) for v in val)):
            errors.append(f"amplitudes: expected a nonempty number list, got {val!r}")
        else:
            kwargs["amplitudes"] = tuple(float(v) for v in val)

    if "forcing" in raw:
        _check_preset("forcing", raw["forcing"], _FORCING_KINDS, errors)
        if isinstance(raw["forcing"], dict):
            kwargs["forcing"] = raw["forcing"]
    if "initial" in raw:
        _check_preset("initial", raw["initial"], _INITIAL_KINDS, errors)
        if isinstance(raw["initial"], dict):
            kwargs["initial"] = raw["initial"]
    if "initial_b" in raw and raw["initial_b"] is not None:
        _check_preset("initial_b", raw["initial_b"], _INITIAL_KINDS, errors)
        if isinstance(raw["initial_b"], dict):
            kwargs["initial_b"] = raw["initial_b"]

    # cross-field checks that only make sense once the pieces parsed
    if not errors:
        if "delta" in kwargs or "a" in kwargs:
            delta = kwargs.get("delta", 0.25)
            a_val = kwargs.get("a", 0.5)
            if not delta < a_val:
                errors.append(f"delta: expected delta < a, got {delta} >= {a_val}")
        t_early = kwargs.get("t_early", 0.5)
        t_end = kwargs.get("t_end", 1.0)
        if kind == "harnack" and not t_early < t_end:
            errors.append(
                f"t_early: expected t_early < t_end, got {t_early} >= {t_end}"
            )

    if errors:
        raise ValueError("invalid config: " + "; ".join(errors))
    return ScenarioConfig(**kwargs)


# ---------------------------------------------------------------------------
# preset factories


def forcing_callable(preset: dict) -> Optional[Callable]:
    kind = preset["kind"]
    if kind == "zero":
        return None
    k = int(preset.get("k", 1))
    amp = float(preset.get("amp", 1.0))
    if kind == "sine":
        return lambda t, x: amp * np.sin(k * np.pi * x)
    omega = float(preset.get("omega", 1.0))
    return lambda t, x: amp * np.sin(k * np.pi * x) * np.cos(omega * t)


def initial_field(preset: dict, grid: Grid) -> Field:
    kind = preset["kind"]
    x = grid.x
    amp = float(preset.get("amp", 1.0))
    if kind == "sine":
        k = int(preset.get("k", 1))
        vals = amp * np.sin(k * np.pi * x)
    elif kind == "random_fourier":
        rng = np.random.default_rng(int(preset.get("seed", 0)))
        n_modes = int(preset.get("n_modes", 4))
        vals = np.zeros_like(x)
        for m in range(1, n_modes + 1):
            vals += rng.uniform(-1.0, 1.0) / m * np.sin(m * np.pi * x)
        peak = np.max(np.abs(vals))
        if peak > 0.0:
            vals *= amp / peak
    elif kind == "constant_clip":
        ramp = float(preset.get("ramp", 0.05))
        vals = amp * np.minimum(1.0, np.minimum(x / ramp, (1.0 - x) / ramp))
    else:
        raise ValueError(f"unknown initial preset {kind!r}")
    return Field(grid, vals).dirichlet()


def _coefficient_trajectory(preset: dict, grid: Grid, t_end: float) -> Trajectory:
    """Space-time coefficient on a coarse time lattice; solvers interpolate."""
    fn = forcing_callable(preset)
    dt_c = t_end / 64.0
    if fn is None:
        return Trajectory.constant(Field.zeros(grid), 0.0, dt_c, 65)
    return Trajectory.from_callable(grid, fn, 0.0, dt_c, 65)


# ---------------------------------------------------------------------------
# runner


@dataclass(frozen=True)
class RunReport:
    kind: str
    verdict: bool
    constants: dict
    config: dict
    wall_time: float
    version: str
    error: Optional[str] = None

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=1, sort_keys=True, default=str)
            fh.write("\n")


def _forcing_sup(preset: dict, grid: Grid, t_end: float) -> float:
    fn = forcing_callable(preset)
    if fn is None:
        return 0.0
    worst = 0.0
    for t in np.linspace(0.0, t_end, 17):
        worst = max(worst, float(np.max(np.abs(fn(float(t), grid.x)))))
    return worst


def _run_simulate(cfg: ScenarioConfig, out: Path) -> tuple[bool, dict]:
    grid = cfg.grid
    u0 = initial_field(cfg.initial, grid)
    h = forcing_callable(cfg.forcing)
    traj = solve_burgers(BurgersProblem(
        nu=cfg.nu, u0=u0, t_span=(0.0, cfg.t_end), dt=cfg.dt_value, h=h))
    sup_u = float(np.max(np.abs(traj.values)))
    h_inf = _forcing_sup(cfg.forcing, grid, cfg.t_end)
    bound = norm_linf(u0) + cfg.t_end * h_inf
    slack = 0.02 * (1.0 + norm_linf(u0))
    verdict = sup_u <= bound + slack
    if cfg.dump_fields:
        traj.frame(traj.n_frames - 1).to_csv(out / "fields.csv")
    constants = {"sup_linf": sup_u, "bound": bound}
    final_norms = traj.norm_summary()[-1]["norms"]
    constants.update({f"final_{k}": v for k, v in final_norms.items()})
    return verdict, constants


def _run_stabilize(cfg: ScenarioConfig, out: Path) -> tuple[bool, dict]:
    grid = cfg.grid
    u0 = initial_field(cfg.initial, grid)
    u_ref0 = Field.zeros(grid)
    h = forcing_callable(cfg.forcing)
    cs = control.CutoffSystem(cfg.support[0], cfg.support[1],
                              *(cfg.inner if cfg.inner else (None, None)))
    run_rec = control.build_controlled_trajectory(
        u0=u0, u_ref0=u_ref0, h=h, nu=cfg.nu, cs=cs,
        n_cycles=cfg.n_cycles, dt=cfg.dt_value)
    fit = control.fit_decay(run_rec.cycles)
    run_rec.cycles_to_csv(out / "cycles.csv")
    if cfg.dump_fields:
        run_rec.u.frame(run_rec.u.n_frames - 1).to_csv(out / "fields.csv")
    verdict = fit.stabilised
    constants = {"theta": fit.theta, "gamma": fit.gamma, "C": fit.C,
                 "n_cycles": fit.n_cycles}
    return verdict, constants


def _run_dichotomy(cfg: ScenarioConfig, out: Path) -> tuple[bool, dict]:
    grid = cfg.grid
    scenarios = analysis.make_rho_ensemble(
        n=cfg.n_scenarios, rho=cfg.rho, grid=grid, T=cfg.t_end,
        dt=cfg.t_end / 64.0, seed=cfg.seed if cfg.seed is not None else 0)
    inner = cfg.inner if cfg.inner is not None else (
        cfg.support[0] + 0.25 * (cfg.support[1] - cfg.support[0]),
        cfg.support[1] - 0.25 * (cfg.support[1] - cfg.support[0]),
    )
    # With no explicit thresholds the run reports the canonical pair and the
    # coverage question is settled by q_star < 1, so evaluate fraction_failing
    # at a vacuous (q, eps).
    q_eval = cfg.q if cfg.q is not None else 1.0
    eps_eval = cfg.eps if cfg.eps is not None else 0.0
    report = analysis.ensemble_dichotomy(
        scenarios, inner=inner, T=cfg.t_end, nu=cfg.nu,
        q=q_eval, eps=eps_eval, rho=cfg.rho,
        seed=cfg.seed, dt=cfg.dt_value)
    report.to_csv(out / "scenarios.csv")
    report.to_json(out / "dichotomy.json")
    verdict = (report.fraction_failing == 0.0 and report.q_star < 1.0
               and report.eps_star > 0.0)
    constants = {"q_star": report.q_star, "eps_star": report.eps_star,
                 "fraction_failing": report.fraction_failing, "rho": cfg.rho}
    return verdict, constants


def _run_harnack(cfg: ScenarioConfig, out: Path) -> tuple[bool, dict]:
    grid = cfg.grid
    a = _coefficient_trajectory(cfg.forcing, grid, cfg.t_end)
    w0 = initial_field(cfg.initial, grid)
    est = analysis.harnack_probe(
        a, w0, K=cfg.K, t_early=cfg.t_early, t_late=cfg.t_end,
        nu=cfg.nu, dt=cfg.dt_value)
    verdict = math.isfinite(est.ratio) and est.ratio > 0.0
    constants = {"C_emp": est.ratio, "sup_early": est.sup_early,
                 "inf_late": est.inf_late}
    return verdict, constants


def _run_barrier(cfg: ScenarioConfig, out: Path) -> tuple[bool, dict]:
    grid = cfg.grid
    u0 = initial_field(cfg.initial, grid)
    h = forcing_callable(cfg.forcing)
    h_inf = _forcing_sup(cfg.forcing, grid, cfg.t_end)
    L = norm_linf(u0)
    traj = solve_burgers(BurgersProblem(
        nu=cfg.nu, u0=u0, t_span=(0.0, cfg.t_end), dt=cfg.dt_value, h=h))
    upper = barriers.Barrier(kind="cor23_super", eps=cfg.barrier_eps,
                             nu=cfg.nu, T=cfg.t_end, L=L, h_inf=h_inf)
    lower = barriers.Barrier(kind="cor23_sub", eps=cfg.barrier_eps,
                             nu=cfg.nu, T=cfg.t_end, L=L, h_inf=h_inf)
    min_res = barriers.check_supersolution(upper, grid, cfg.dt_value)
    max_res = barriers.check_subsolution(lower, grid, cfg.dt_value)
    rep_up = barriers.comparison_check(upper, traj, (0.0, 1.0))
    rep_lo = barriers.comparison_check(traj, lower, (0.0, 1.0))
    slack = 1e-6 * (1.0 + L)
    verdict = (min_res >= -1e-10 and max_res <= 1e-10
               and rep_up.max_violation <= slack
               and rep_lo.max_violation <= slack)
    constants = {
        "min_residual_super": min_res,
        "max_residual_sub": max_res,
        "max_violation_upper": rep_up.max_violation,
        "max_violation_lower": rep_lo.max_violation,
    }
    return verdict, constants


def _control_shape(grid: Grid, a: float) -> np.ndarray:
    """Smooth bump supported exactly on [a, 1]."""
    x = grid.x
    p = np.clip((x - a) / (1.0 - a), 0.0, 1.0)
    return np.where(x >= a, np.sin(np.pi * p) ** 2, 0.0)


def _run_noncontrol(cfg: ScenarioConfig, out: Path) -> tuple[bool, dict]:
    grid = cfg.grid
    h = forcing_callable(cfg.forcing)
    h_inf = _forcing_sup(cfg.forcing, grid, cfg.t_end)
    shape = _control_shape(grid, cfg.a)
    amp_c = 50.0

    def make_control(scale: float):
        return lambda t, x: scale * np.cos(2.0 * np.pi * t) * shape

    controls = [None, make_control(amp_c), make_control(-amp_c)]
    report = barriers.non_controllability_experiment(
        T0=cfg.t_end, delta=cfg.delta, a=cfg.a, nu=cfg.nu, h=h,
        controls=controls, u0_amplitudes=cfg.amplitudes,
        grid=grid, dt=cfg.dt_value, h_inf=h_inf, R=cfg.R, seed=cfg.seed)
    report.to_json(out / "noncontrol.json")
    verdict = (report.rho_emp <= report.rho_formula
               and report.min_l2_distance >= cfg.R)
    constants = {"rho_emp": report.rho_emp, "rho_formula": report.rho_formula,
                 "min_l2_distance": report.min_l2_distance,
                 "n_runs": report.n_runs}
    return verdict, constants


def _run_contraction(cfg: ScenarioConfig, out: Path) -> tuple[bool, dict]:
    grid = cfg.grid
    u0 = initial_field(cfg.initial, grid)
    if cfg.initial_b is not None:
        v0 = initial_field(cfg.initial_b, grid)
    else:
        scaled = dict(cfg.initial)
        scaled["amp"] = 0.5 * float(scaled.get("amp", 1.0))
        v0 = initial_field(scaled, grid)
    h = forcing_callable(cfg.forcing)
    dt = cfg.dt_value
    u = solve_burgers(BurgersProblem(nu=cfg.nu, u0=u0,
                                     t_span=(0.0, cfg.t_end), dt=dt, h=h))
    v = solve_burgers(BurgersProblem(nu=cfg.nu, u0=v0,
                                     t_span=(0.0, cfg.t_end), dt=dt, h=h))
    dists = [norm_l1(Field(grid, u.values[k] - v.values[k]))
             for k in range(u.n_frames)]
    steps = np.diff(np.asarray(dists))
    max_inc = float(np.max(steps)) if len(steps) else 0.0
    sup_speed = float(np.max(np.abs(np.stack([u.values, v.values]))))
    r = cfg.nu * dt / grid.dx ** 2
    compliant = r <= 1.0 + 1e-12 and grid.dx <= 2.0 * cfg.nu / max(sup_speed, 1e-30)
    if compliant:
        verdict = max_inc <= 1e-6
    else:
        verdict = dists[-1] <= dists[0] * (1.0 + 1e-9) + 0.02 * (1.0 + dists[0])
    constants = {"l1_initial": dists[0], "l1_final": dists[-1],
                 "max_step_increase": max_inc, "monotone_steps": compliant}
    return verdict, constants


_RUNNERS = {
    "simulate": _run_simulate,
    "stabilize": _run_stabilize,
    "dichotomy": _run_dichotomy,
    "harnack": _run_harnack,
    "barrier": _run_barrier,
    "noncontrol": _run_noncontrol,
    "contraction": _run_contraction,
}


def run(config: ScenarioConfig, out_dir) -> RunReport:
    """Execute one scenario, writing report.json and artifacts to out_dir."""
    from . import __version__

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    error: Optional[str] = None
    try:
        verdict, constants = _RUNNERS[config.kind](config, out)
    except SolverError as exc:
        verdict, constants, error = False, {}, f"solver failure: {exc}"
    except ValueError as exc:
        verdict, constants, error = False, {}, f"invalid scenario: {exc}"
    report = RunReport(
        kind=config.kind,
        verdict=verdict,
        constants=constants,
        config=asdict(config),
        wall_time=time.perf_counter() - started,
        version=__version__,
        error=error,
    )
    report.to_json(out / "report.json")
    return report


def exit_code_for(report: RunReport) -> int:
    if report.error is not None and report.error.startswith("solver failure"):
        return 1
    return 0 if report.verdict else 2


def run_with_exit_code(config: ScenarioConfig, out_dir) -> tuple[RunReport, int]:
    report = run(config, out_dir)
    return report, exit_code_for(report)


# ---------------------------------------------------------------------------
# sweep


def _sweep_worker(args: tuple) -> tuple[int, bool, Optional[str], int]:
    idx, cfg, out_dir = args
    report, code = run_with_exit_code(cfg, out_dir)
    return idx, report.verdict, report.error, code


def sweep(configs: Sequence[ScenarioConfig], out_dir,
          parallelism: int = 1) -> int:
    """Run scenarios into runs/run_<idx>/ under out_dir; aggregate report;
    return the worst exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(i, cfg, out / "runs" / f"run_{i}") for i, cfg in enumerate(configs)]
    results: list[tuple[int, bool, Optional[str], int]] = []
    if parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]
    results.sort(key=lambda r: r[0])
    aggregate = {
        "n_runs": len(results),
        "n_pass": sum(1 for r in results if r[3] == 0),
        "worst_exit_code": max((r[3] for r in results), default=0),
        "runs": [
            {"index": r[0], "verdict": r[1], "error": r[2], "exit_code": r[3]}
            for r in results
        ],
    }
    with open(out / "report.json", "w") as fh:
        json.dump(aggregate, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return aggregate["worst_exit_code"]
