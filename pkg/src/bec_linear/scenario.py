"""Scenario configuration and the end-to-end pipeline behind ``bec-linear run``.

A scenario is a flat TOML file (dotted keys allowed)::

    grid.N = 400
    grid.x_max = 8.0
    initial = "EXAMPLE1"          # or CONSTANT(c), BUMP(center, width, height), FILE(path)
    convention = "SINH_HALF_X2"
    tau_end = 50.0
    dt = 0.01
    snapshots = [0.0, 1.0, 10.0]
    nonlinear.enabled = true
"""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import evolution, kernels, nonlinear_pc, observables, operators, timechange
from .errors import ContractError
from .kernels import Convention

SUMMARY_KEYS = (
    "convention", "N_grid", "x_max", "grading", "tau_end", "dt", "steps", "t_end",
    "N0", "E0", "N_init", "E_init", "N_init_over_E_init", "E_init_over_N_init",
    "N0_over_E0", "E0_over_N0", "Cstar", "Mcal_inf", "pc_limit_ratio", "pc_final_ratio",
    "energy_residual", "drift_residual", "l2_initial", "l2_final", "b_final", "nonlinear",
)


@dataclass(frozen=True)
class InitialData:
    kind: str
    args: tuple = ()

    @classmethod
    def parse(cls, text: str) -> "InitialData":
        m = re.fullmatch(r"\s*([A-Za-z0-9_]+)\s*(?:\((.*)\))?\s*", str(text))
        if not m:
            raise ContractError(f"initial: cannot parse {text!r}")
        kind = m.group(1).upper()
        raw = m.group(2)
        if kind == "FILE":
            if not raw:
                raise ContractError("initial: FILE needs a path, FILE(path)")
            return cls(kind, (raw.strip().strip("'\""),))
        args = tuple(float(a) for a in raw.split(",")) if raw and raw.strip() else ()
        arity = {"EXAMPLE1": 0, "EXAMPLE2": 0, "CONSTANT": 1, "BUMP": 3}
        if kind not in arity:
            raise ContractError(f"initial: unknown kind {kind!r}")
        if len(args) != arity[kind]:
            raise ContractError(f"initial: {kind} takes {arity[kind]} arguments, got {len(args)}")
        return cls(kind, args)

    def __str__(self):
        return self.kind + (f"({', '.join(str(a) for a in self.args)})" if self.args else "")


@dataclass
class ScenarioConfig:
    N: int = 400
    x_max: float = 8.0
    grading: float = 2.0
    initial: InitialData = field(default_factory=lambda: InitialData("EXAMPLE1"))
    theta: float = 0.5
    tau_end: float = 50.0
    dt: float = 0.01
    qc0: float = 1.0
    convention: Convention = Convention.SINH_X2
    method: evolution.Method = evolution.Method.CRANK_NICOLSON
    monotone: bool = False
    snapshots: tuple = (0.0,)
    nonlinear: nonlinear_pc.NonlinearDriveConfig | None = None
    outputs: str = "out"

    def validate(self):
        if int(self.N) != self.N or self.N < 16:
            raise ContractError(f"grid.N must be an integer >= 16, got {self.N}")
        for name in ("x_max", "grading", "tau_end", "dt", "qc0"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ContractError(f"{name} must be a positive number, got {v!r}")
        if not 0.0 <= self.theta < 1.0:
            raise ContractError(f"theta must lie in [0, 1), got {self.theta}")
        if any(not 0.0 <= s <= self.tau_end for s in self.snapshots):
            raise ContractError("snapshots must lie in [0, tau_end]")
        return self


def _as_bool(v):
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("true", "false"):
        return str(v).lower() == "true"
    raise ValueError(f"expected true/false, got {v!r}")


# flat key -> (field, converter)
_KEYS = {
    "grid.N": ("N", int),
    "grid.x_max": ("x_max", float),
    "grid.grading": ("grading", float),
    "initial": ("initial", InitialData.parse),
    "theta": ("theta", float),
    "tau_end": ("tau_end", float),
    "dt": ("dt", float),
    "qc0": ("qc0", float),
    "convention": ("convention", Convention.parse),
    "method": ("method", evolution.Method.parse),
    "monotone": ("monotone", _as_bool),
    "snapshots": ("snapshots", lambda v: tuple(float(s) for s in v)),
    "outputs": ("outputs", str),
}
_NONLINEAR = ("nonlinear.enabled", "nonlinear.C1", "nonlinear.C2", "nonlinear.qc0")


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def parse_override(text: str) -> tuple[str, object]:
    """``key=value``; the value is read as a TOML value, else kept as a string."""
    if "=" not in text:
        raise ContractError(f"override {text!r} is not key=value")
    key, raw = (p.strip() for p in text.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def build_config(values: dict) -> ScenarioConfig:
    cfg = ScenarioConfig()
    nl = {}
    for key, value in values.items():
        if key in _NONLINEAR:
            nl[key.split(".", 1)[1]] = value
            continue
        if key not in _KEYS:
            raise ContractError(f"unknown config key {key!r}")
        name, conv = _KEYS[key]
        try:
            setattr(cfg, name, conv(value))
        except (TypeError, ValueError) as exc:
            raise ContractError(f"{key}: {exc}") from exc
    if _as_bool(nl.pop("enabled", bool(nl))):
        try:
            cfg.nonlinear = nonlinear_pc.NonlinearDriveConfig(**{k: float(v) for k, v in nl.items()})
        except TypeError as exc:
            raise ContractError(f"nonlinear: {exc}") from exc
    return cfg.validate()


def load_config(path=None, overrides=()) -> ScenarioConfig:
    values = {}
    if path is not None:
        try:
            values = _flatten(tomllib.loads(Path(path).read_text()))
        except tomllib.TOMLDecodeError as exc:
            raise ContractError(f"{path}: {exc}") from exc
        except OSError as exc:
            raise ContractError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        k, v = parse_override(item)
        values[k] = v
    return build_config(values)


def initial_state(init: InitialData, x: np.ndarray, convention) -> np.ndarray:
    """``u0`` on the nodes; the two examples are occupation perturbations divided by ``n0(1+n0)x^2``."""
    c = Convention.parse(convention).scale
    # 1/((1 + n0) x^2) with n0 = 1/(exp(2 c x^2) - 1)
    to_u = -np.expm1(-2.0 * c * x * x) / (x * x)
    if init.kind == "EXAMPLE1":
        return (1.02 / (1.0 + x * x) - 1.0) * to_u
    if init.kind == "EXAMPLE2":
        return 0.2 * np.arctan(x / 10.0) * to_u
    if init.kind == "CONSTANT":
        return np.full_like(x, init.args[0])
    if init.kind == "BUMP":
        center, width, height = init.args
        if width <= 0:
            raise ContractError("BUMP width must be positive")
        return height * np.exp(-(((x - center) / width) ** 2))
    path = Path(init.args[0])
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ContractError(f"initial FILE: {exc}") from exc
    if data.shape[1] < 2 or np.any(np.diff(data[:, 0]) <= 0):
        raise ContractError("initial FILE needs increasing x in column 1 and f in column 2")
    return np.interp(x, data[:, 0], data[:, 1])


@dataclass
class ScenarioResult:
    summary: dict
    series: observables.ObservableSeries
    tmap: timechange.TimeMap
    run: evolution.EvolutionRun
    generator: operators.GeneratorMatrix
    horizon: nonlinear_pc.HorizonResult | None = None


def _fmt(v) -> str:
    return format(float(v), ".17g")


def execute(cfg: ScenarioConfig) -> ScenarioResult:
    """Assemble, evolve, observe, change time and (optionally) run the nonlinear drive."""
    cfg.validate()
    grid = operators.make_grid(cfg.N, cfg.x_max, cfg.grading)
    w = kernels.equilibrium_weights(grid.nodes, cfg.convention)
    A = operators.assemble_generator(grid, w)
    f0 = operators.StateField(initial_state(cfg.initial, grid.nodes, cfg.convention), cfg.theta)
    sched = evolution.Schedule(tau_end=cfg.tau_end, dt=cfg.dt, method=cfg.method,
                               monotone=cfg.monotone)
    run = evolution.run(f0, A, sched)
    series = observables.drift_series(run, A, qc0=cfg.qc0)
    tmap = timechange.build_map(series)
    N0, E0 = observables.equilibrium_moments(w, grid)
    consts = observables.asymptotic_constants(f0, w, grid)
    n_init, e_init = float(series.N[0]), float(series.E[0])
    e_scale = abs(e_init) if e_init != 0 else 1.0
    horizon = None
    nl = None
    if cfg.nonlinear is not None:
        horizon = nonlinear_pc.horizon(run, cfg.nonlinear, A)
        nl = {
            "classification": horizon.classification.value,
            "Tstar": horizon.Tstar if math.isfinite(horizon.Tstar) else None,
            "Tstar_infinite": horizon.Tstar == math.inf,
            "t_partial": horizon.t_partial,
            "tail_ratios": horizon.ratios,
            "diagnostics": horizon.diagnostics,
            "C1": cfg.nonlinear.C1,
            "C2": cfg.nonlinear.C2,
            "qc0": cfg.nonlinear.qc0,
        }
    summary = {
        "convention": cfg.convention.value,
        "N_grid": grid.n,
        "x_max": grid.x_max,
        "grading": grid.grading,
        "tau_end": cfg.tau_end,
        "dt": run.dt,
        "steps": int(round(cfg.tau_end / run.dt)),
        "t_end": tmap.t_end,
        "N0": N0,
        "E0": E0,
        "N_init": n_init,
        "E_init": e_init,
        "N_init_over_E_init": n_init / e_init if e_init else None,
        "E_init_over_N_init": e_init / n_init if n_init else None,
        "N0_over_E0": N0 / E0,
        "E0_over_N0": E0 / N0,
        "Cstar": consts.Cstar,
        "Mcal_inf": consts.Mcal_inf,
        "pc_limit_ratio": consts.pc_limit_ratio,
        "pc_final_ratio": float(series.qc[-1] / series.qc[0]),
        "energy_residual": float(np.max(np.abs(series.E - e_init)) / e_scale),
        "drift_residual": float(np.max(np.abs(series.drift_residual))),
        "l2_initial": observables.l2_distance(run.states[0], consts.Cstar, A),
        "l2_final": observables.l2_distance(run.states[-1], consts.Cstar, A),
        "b_final": float(series.b[-1]),
        "nonlinear": nl,
    }
    assert tuple(summary) == SUMMARY_KEYS
    return ScenarioResult(summary, series, tmap, run, A, horizon)


def write_outputs(res: ScenarioResult, cfg: ScenarioConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    s, tm = res.series, res.tmap
    written = []
    cols = (s.tau, tm.t, s.N, s.E, s.m, s.Mcal, s.qc, s.D, s.b)
    lines = ["tau,t,N,E,m,Mcal,qc,D,b"]
    lines += [",".join(_fmt(c[i]) for c in cols) for i in range(s.tau.size)]
    p = out / "series.csv"
    p.write_text("\n".join(lines) + "\n")
    written.append(p)

    x = res.generator.grid.nodes
    snaps = []
    for k, tau in enumerate(cfg.snapshots):
        i = int(np.argmin(np.abs(res.run.times - tau)))
        f = res.run.states[i]
        p = out / f"state_{k}.csv"
        p.write_text("x,f\n" + "".join(f"{_fmt(a)},{_fmt(b)}\n" for a, b in zip(x, f)))
        written.append(p)
        snaps.append((p.name, float(res.run.times[i])))

    p = out / "summary.json"
    summary = dict(res.summary)
    summary["snapshots"] = [{"file": n, "tau": t} for n, t in snaps]
    p.write_text(json.dumps(summary, indent=2) + "\n")
    written.append(p)

    gp = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set terminal pngcairo size 900,600",
        "set output 'series.png'",
        "set multiplot layout 2,2",
        "set xlabel 'tau'",
        "plot 'series.csv' using 1:3 with lines, '' using 1:4 with lines",
        "plot 'series.csv' using 1:7 with lines",
        "set logscale y",
        "plot 'series.csv' using 1:8 with lines",
        "unset logscale y",
        "plot 'series.csv' using 1:9 with lines",
        "unset multiplot",
        "set output 'states.png'",
        "set xlabel 'x'",
        "plot " + ", ".join(f"'{n}' using 1:2 with lines title 'tau = {t:g}'" for n, t in snaps),
    ]
    p = out / "plots.gp"
    p.write_text("\n".join(gp) + "\n")
    written.append(p)
    return written


def config_dict(cfg: ScenarioConfig) -> dict:
    d = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, (Convention, evolution.Method)):
            v = v.value
        elif isinstance(v, InitialData):
            v = str(v)
        elif isinstance(v, nonlinear_pc.NonlinearDriveConfig):
            v = asdict(v)
        elif isinstance(v, tuple):
            v = list(v)
        d[f.name] = v
    return d
