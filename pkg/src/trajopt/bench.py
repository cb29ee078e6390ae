"""Benchmark harness: configs, solver runs, exported files and comparisons.

A run is fully described by a :class:`RunConfig`. Running it produces three
files in the output directory:

``trajectory.csv``
    header ``t, x_0..x_{n-1}, u_0..u_{m-1}``; one row per time sample. The
    final row carries the last applied control (DDP) or the control
    interpolant at the final time (GPM).
``cost_history.csv``
    ``iteration, cost``. Accepted DDP costs, or the objective after each
    outer iteration of the NLP solver.
``report.json``
    the :data:`SCHEMA_VERSION`-tagged summary described by :func:`run`.
"""
from __future__ import annotations

import copy
import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .core import BoundarySpec, TrajoptError, Trajectory, trajectory_cost
from .ddp import DdpOptions, ddp_solve
from .gpm import control_at, gpm_solve
from .nlp import NlpOptions
from .plants import BENCHMARKS, PLANTS, make_benchmark

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
METHODS = ("ddp", "gpm")

COST_CAVEAT = (
    "DDP reports the discrete sum of running costs times dt plus the terminal "
    "penalty; GPM reports the Gauss quadrature of the running cost with the "
    "final state pinned. The two are comparable only for small dt and small "
    "terminal gaps."
)


class ConfigError(TrajoptError, ValueError):
    """Invalid or inconsistent run configuration."""


_DDP_KEYS = ("dt", "N", "max_iters", "tol", "mu0", "mu_max", "integrator")
_NLP_KEYS = ("max_outer", "max_inner", "constraint_tol", "stationarity_tol", "rho0",
             "rho_growth", "rho_max", "inner")


def _ddp_defaults(problem):
    base = DdpOptions()
    out = {k: getattr(base, k) for k in _DDP_KEYS}
    out["dt"] = BENCHMARKS[problem].dt
    return out


def _gpm_defaults(problem):
    base = NlpOptions()
    out = {"K": BENCHMARKS[problem].K, "guess": "linear", "samples": 200}
    out.update({k: getattr(base, k) for k in _NLP_KEYS})
    return out


@dataclass
class RunConfig:
    """Everything needed to reproduce one solver run.

    ``weights`` holds the diagonals (or full matrices) of ``R``, ``Q`` and
    ``W_f``; ``bounds`` holds optional ``[lo, hi]`` pairs for controls and
    states; ``plant`` overrides physical parameters by keyword.
    """

    problem: str
    method: str = "ddp"
    output_dir: str = "runs"
    warm_start: str = "zero"
    weights: dict = field(default_factory=dict)
    ddp: dict = field(default_factory=dict)
    gpm: dict = field(default_factory=dict)
    plant: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=lambda: {"control": None, "state": None})

    @classmethod
    def default(cls, problem: str, method: str = "ddp") -> "RunConfig":
        if problem not in PLANTS:
            raise ConfigError(f"unknown problem {problem!r}; choose from {sorted(PLANTS)}")
        s = BENCHMARKS[problem]
        return cls(
            problem=problem, method=method,
            output_dir=os.path.join("runs", f"{problem}_{method}"),
            warm_start=s.warm_start,
            weights={"R": list(s.R), "Q": list(s.Q), "W_f": list(s.W_f)},
            ddp=_ddp_defaults(problem), gpm=_gpm_defaults(problem),
            plant=dict(s.plant), bounds={"control": None, "state": None},
        )

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "problem": self.problem,
            "method": self.method,
            "output_dir": self.output_dir,
            "warm_start": self.warm_start,
            "weights": copy.deepcopy(self.weights),
            "ddp": copy.deepcopy(self.ddp),
            "gpm": copy.deepcopy(self.gpm),
            "plant": copy.deepcopy(self.plant),
            "bounds": copy.deepcopy(self.bounds),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Validate ``data`` against the defaults for its problem.

        Missing keys take their defaults; unknown keys at any level raise
        :class:`ConfigError`.
        """
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        data = dict(data)
        version = data.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {version!r}")
        problem = data.get("problem")
        if problem not in PLANTS:
            raise ConfigError(f"unknown problem {problem!r}; choose from {sorted(PLANTS)}")
        method = data.get("method", "ddp")
        if method not in METHODS:
            raise ConfigError(f"unknown method {method!r}; choose from {list(METHODS)}")
        cfg = cls.default(problem, method)
        allowed = set(cfg.to_dict()) - {"schema_version"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("output_dir", "warm_start"):
            if key in data:
                setattr(cfg, key, data[key])
        if cfg.warm_start not in ("zero", "hover"):
            raise ConfigError(f"unknown warm_start {cfg.warm_start!r}")
        for section in ("weights", "ddp", "gpm", "bounds"):
            if section in data:
                _merge_section(section, getattr(cfg, section), data[section])
        if "plant" in data:
            if not isinstance(data["plant"], dict):
                raise ConfigError("plant must be an object of parameter overrides")
            cfg.plant = dict(data["plant"])
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config is not valid JSON: {err}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        return cls.from_json(text)

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        try:
            self.build()
            DdpOptions(**self.ddp)
            NlpOptions(**{k: self.gpm[k] for k in _NLP_KEYS})
        except ConfigError:
            raise
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from None
        if int(self.gpm["K"]) < 1 or int(self.gpm["samples"]) < 2:
            raise ConfigError("gpm.K must be >= 1 and gpm.samples >= 2")
        if self.gpm["guess"] not in ("linear", "rollout"):
            raise ConfigError(f"unknown gpm.guess {self.gpm['guess']!r}")
        if self.ddp["N"] is None and not self.ddp["dt"] > 0:
            raise ConfigError("ddp.dt must be positive")

    def build(self):
        """Return ``(plant, cost, boundary)`` for this configuration."""
        b = self.bounds
        try:
            return make_benchmark(
                self.problem,
                R=self.weights.get("R"), Q=self.weights.get("Q"), W_f=self.weights.get("W_f"),
                plant_params=self.plant,
                control_bounds=None if b.get("control") is None else tuple(b["control"]),
                state_bounds=None if b.get("state") is None else tuple(b["state"]),
            )
        except TypeError as err:
            raise ConfigError(f"bad plant parameters: {err}") from None
        except ValueError as err:
            raise ConfigError(str(err)) from None


def _merge_section(name, target: dict, values):
    if not isinstance(values, dict):
        raise ConfigError(f"{name} must be an object")
    unknown = set(values) - set(target)
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    target.update(values)


@dataclass
class RunOutcome:
    report: dict
    trajectory: Optional[Trajectory]
    final_control: Optional[np.ndarray]
    cost_history: list

    @property
    def converged(self) -> bool:
        return bool(self.report.get("converged"))


def _warm_controls(cfg: RunConfig, plant):
    if cfg.warm_start == "hover":
        if not hasattr(plant, "hover_thrust"):
            raise ConfigError("hover warm start needs a plant with a hover thrust")
        return np.full(plant.m, plant.hover_thrust)
    return None


def run(cfg: RunConfig) -> RunOutcome:
    """Solve the configured problem; no files are written.

    Solver exceptions are caught and reported with ``status="error"`` so
    the caller can still write a report.
    """
    plant, cost, boundary = cfg.build()
    warm = _warm_controls(cfg, plant)
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "problem": cfg.problem,
        "method": cfg.method,
    }
    try:
        if cfg.method == "ddp":
            outcome = _run_ddp(cfg, plant, cost, boundary, warm, report)
        else:
            outcome = _run_gpm(cfg, plant, cost, boundary, warm, report)
    except (TrajoptError, FloatingPointError, np.linalg.LinAlgError) as err:
        log.error("solver failed: %s", err)
        report.update(status="error", converged=False, message=f"{type(err).__name__}: {err}")
        return RunOutcome(report, None, None, [])
    return outcome


def _state_error(final, boundary: BoundarySpec):
    err = np.asarray(final) - boundary.x_target
    return {
        "final_state": [float(v) for v in final],
        "target_state": [float(v) for v in boundary.x_target],
        "final_state_error": [float(v) for v in err],
        "final_state_error_norm": float(np.linalg.norm(err)),
    }


def _run_ddp(cfg, plant, cost, boundary, warm, report):
    opts = DdpOptions(**cfg.ddp, initial_controls=warm)
    res = ddp_solve(plant, cost, boundary, opts)
    traj = res.trajectory
    report.update(
        status=res.status,
        converged=res.converged,
        message=res.message,
        final_cost=float(res.final_cost),
        runtime=float(res.runtime),
        iterations=int(res.iterations),
        accepted_iterations=len(res.cost_history) - 1,
        regularization_events=int(res.regularization_events),
        delta_v=abs(float(res.expected_reduction)),
        dt=float(traj.dt),
        N=int(traj.N),
        max_abs_control=float(np.max(np.abs(traj.controls))),
        **_state_error(traj.final_state, boundary),
    )
    return RunOutcome(report, traj, traj.controls[-1].copy(), list(res.cost_history))


def _run_gpm(cfg, plant, cost, boundary, warm, report):
    g = cfg.gpm
    opts = NlpOptions(**{k: g[k] for k in _NLP_KEYS})
    res = gpm_solve(plant, cost.without_terminal(), boundary, K=int(g["K"]), opts=opts,
                    guess=g["guess"], guess_controls=warm, samples=int(g["samples"]))
    sol = res.solution
    traj = res.trajectory
    u_end = control_at(sol.x, res.nlp.grid, res.nlp.layout, 1.0)
    u_all = np.vstack([traj.controls, u_end[None, :]])
    report.update(
        status=sol.status,
        converged=sol.success,
        message="",
        final_cost=float(sol.objective),
        runtime=float(sol.runtime),
        iterations=int(sol.outer_iterations),
        inner_iterations=int(sol.inner_iterations_total),
        max_violation=float(sol.max_violation),
        stationarity=float(sol.stationarity_norm),
        K=int(g["K"]),
        max_abs_control=float(np.max(np.abs(res.controls))),
        max_abs_control_sampled=float(np.max(np.abs(u_all))),
        **_state_error(res.final_state, boundary),
    )
    history = [h[1] for h in sol.history]
    return RunOutcome(report, traj, np.asarray(u_end, dtype=float), history)


def _fmt(v: float) -> str:
    return repr(float(v))


def trajectory_csv(traj: Trajectory, final_control) -> str:
    n, m = traj.n, traj.m
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x_{i}" for i in range(n)] + [f"u_{j}" for j in range(m)])
    controls = np.vstack([traj.controls, np.reshape(final_control, (1, m))])
    for t, x, u in zip(traj.times, traj.states, controls):
        w.writerow([_fmt(t)] + [_fmt(v) for v in x] + [_fmt(v) for v in u])
    return buf.getvalue()


def history_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iteration", "cost"])
    for i, c in enumerate(history):
        w.writerow([i, _fmt(c)])
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def write_outputs(outcome: RunOutcome, out_dir) -> dict:
    """Write the CSV files and ``report.json``; returns the final report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = dict(outcome.report)
    files = {}
    if outcome.trajectory is not None:
        (out / "trajectory.csv").write_text(
            trajectory_csv(outcome.trajectory, outcome.final_control))
        files["trajectory"] = str(out / "trajectory.csv")
    (out / "cost_history.csv").write_text(history_csv(outcome.cost_history))
    files["cost_history"] = str(out / "cost_history.csv")
    files["report"] = str(out / "report.json")
    report["files"] = files
    (out / "report.json").write_text(json.dumps(_json_safe(report), indent=2) + "\n")
    return report


def cmd_solve(cfg: RunConfig, out_dir=None) -> dict:
    """Run ``cfg`` and write its files to ``out_dir`` (default ``cfg.output_dir``)."""
    outcome = run(cfg)
    return write_outputs(outcome, out_dir or cfg.output_dir)


_COMPARE_FIELDS = ("final_cost", "runtime", "iterations", "max_abs_control",
                   "final_state_error_norm", "status")


def cmd_compare(cfg_a: RunConfig, cfg_b: RunConfig) -> dict:
    """Run two configs of the same problem and collect the headline numbers."""
    if cfg_a.problem != cfg_b.problem:
        raise ConfigError(f"cannot compare different problems: {cfg_a.problem!r} vs "
                          f"{cfg_b.problem!r}")
    reports = []
    for cfg in (cfg_a, cfg_b):
        reports.append(cmd_solve(cfg))
    rows = {}
    for key in _COMPARE_FIELDS:
        rows[key] = [r.get(key) for r in reports]
    rows["final_state_error"] = [r.get("final_state_error") for r in reports]
    return {
        "schema_version": SCHEMA_VERSION,
        "problem": cfg_a.problem,
        "labels": [f"a:{cfg_a.method}", f"b:{cfg_b.method}"],
        "metrics": rows,
        "reports": [r.get("files", {}).get("report") for r in reports],
        "note": COST_CAVEAT,
    }


def comparison_table(comp: dict) -> str:
    labels = comp["labels"]
    lines = [f"problem: {comp['problem']}",
             f"{'metric':<24}{labels[0]:>22}{labels[1]:>22}"]
    for key in _COMPARE_FIELDS:
        a, b = comp["metrics"][key]
        lines.append(f"{key:<24}{_cell(a):>22}{_cell(b):>22}")
    lines.append("note: " + comp["note"])
    return "\n".join(lines)


def _cell(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def read_csv_table(path):
    """Return ``(header, rows)`` with rows as a float array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, rows.reshape(-1, len(header))


def cmd_plotdata(run_dir) -> list:
    """Split a run's CSVs into one two-column series file per signal.

    Files go to ``<run_dir>/plotdata``: ``x_<i>.csv`` and ``u_<j>.csv`` with
    columns ``t, value`` and ``cost.csv`` with ``iteration, cost``.
    """
    run_dir = Path(run_dir)
    traj_path = run_dir / "trajectory.csv"
    hist_path = run_dir / "cost_history.csv"
    missing = [p.name for p in (traj_path, hist_path) if not p.is_file()]
    if missing:
        raise FileNotFoundError(f"{run_dir}: missing {', '.join(missing)}")
    header, rows = read_csv_table(traj_path)
    out = run_dir / "plotdata"
    out.mkdir(exist_ok=True)
    written = []
    for col, name in enumerate(header[1:], start=1):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "value"])
        for t, v in zip(rows[:, 0], rows[:, col]):
            w.writerow([_fmt(t), _fmt(v)])
        path = out / f"{name}.csv"
        path.write_text(buf.getvalue())
        written.append(path)
    path = out / "cost.csv"
    path.write_text(hist_path.read_text())
    written.append(path)
    return written


def reintegrate_cost(cfg: RunConfig, trajectory_file) -> float:
    """Recompute a run's cost from its exported trajectory.

    DDP rows are treated as the discrete tape (the final row's control is
    unused); GPM rows are integrated with composite Simpson on the uniform
    samples.
    """
    plant, cost, boundary = cfg.build()
    _, rows = read_csv_table(trajectory_file)
    n = plant.n
    t, X, U = rows[:, 0], rows[:, 1:1 + n], rows[:, 1 + n:]
    if cfg.method == "ddp":
        traj = Trajectory(t, X, U[:-1], t[1] - t[0])
        return trajectory_cost(cost, traj)
    rates = np.array([cost.running(x, u, tt) for tt, x, u in zip(t, X, U)])
    return simpson(rates, t[1] - t[0])


def simpson(y, h: float) -> float:
    """Composite Simpson rule on uniform samples, closing odd counts with 3/8."""
    y = np.asarray(y, dtype=float)
    n = y.size - 1
    if n < 1:
        return 0.0
    if n == 1:
        return 0.5 * h * (y[0] + y[1])
    if n % 2 == 0:
        return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))
    head = simpson(y[:-3], h) if n > 3 else 0.0
    return float(head + 3.0 * h / 8.0 * (y[-4] + 3.0 * y[-3] + 3.0 * y[-2] + y[-1]))
