"""Config-driven experiment runs and CSV output.

Config files are JSON with a ``schema_version`` field and a strict schema:
unknown keys are rejected.  Example::

    {
      "schema_version": 1,
      "problem": {"kind": "quadratic_l1", "n": 1000, "d": 50, "l1_weight": 0.01, "seed": 42},
      "algorithm": "ssrgd",
      "schedule": "T2a",
      "epsilon": 0.01,
      "seeds": [1, 2],
      "sweep": {"b": [1, 4, 16, 64, 256]},
      "output_dir": "out"
    }
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import replace
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .algorithms import DRIVERS, THEOREMS, AlgoParams, default_params
from .core import ConfigurationError, NumericOverflowError, evaluate_phi
from .problems import build_problem, reference_optimum

SCHEMA_VERSION = 1
CSV_HEADER = ["iter", "epoch", "super_epoch", "phi", "grad_map_norm",
              "sfo", "sfo_paper", "po", "wall_ms"]
SUMMARY_HEADER = ["algorithm", "seed", "b", "iterations", "epochs", "iterations_to_eps",
                  "sfo", "sfo_paper", "po", "diag_sfo", "best_grad_map_norm",
                  "final_phi", "final_gap", "success", "lambda_min_est", "status"]


# -- schema -----------------------------------------------------------------

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class QuadraticL1Config(_Strict):
    kind: Literal["quadratic_l1"]
    n: int = Field(gt=0)
    d: int = Field(gt=0)
    spectrum: tuple[float, float] = (0.1, 1.0)
    l1_weight: float = Field(0.0, ge=0)
    seed: int = 0
    noise: float = 0.1


class PLQuadraticConfig(_Strict):
    kind: Literal["pl_quadratic"]
    n: int = Field(gt=0)
    d: int = Field(gt=0)
    spectrum: tuple[float, float] = (0.5, 1.0)
    l1_weight: float = Field(0.0, ge=0)
    seed: int = 0


class RobustRegressionConfig(_Strict):
    kind: Literal["robust_regression"]
    n: int = Field(gt=0)
    d: int = Field(gt=0)
    noise: float = 0.1
    outlier_frac: float = Field(0.1, ge=0, le=1)
    seed: int = 0
    l1_weight: float = Field(0.01, ge=0)


class QuarticSaddleConfig(_Strict):
    kind: Literal["quartic_saddle"]
    n: int = Field(gt=0)
    d: int = Field(ge=2)
    neg_eig: float = Field(1.0, gt=0)
    quartic: float = Field(1.0, gt=0)
    seed: int = 0
    spectrum: tuple[float, float] = (0.5, 1.0)
    noise: float = 0.5
    radius: Optional[float] = None


BaseProblemConfig = Annotated[
    Union[QuadraticL1Config, PLQuadraticConfig, RobustRegressionConfig, QuarticSaddleConfig],
    Field(discriminator="kind")]


class OnlineConfig(_Strict):
    kind: Literal["online"]
    base: BaseProblemConfig
    sigma: Optional[float] = Field(None, ge=0)


ProblemConfig = Annotated[
    Union[QuadraticL1Config, PLQuadraticConfig, RobustRegressionConfig,
          QuarticSaddleConfig, OnlineConfig],
    Field(discriminator="kind")]


class ParamsConfig(_Strict):
    eta: Optional[float] = Field(None, gt=0)
    b: Optional[int] = Field(None, ge=1)
    B: Optional[int] = Field(None, ge=1)
    m: Optional[int] = Field(None, ge=1)
    max_iters: Optional[int] = Field(None, ge=0)
    r: Optional[float] = Field(None, ge=0)
    f_thres: Optional[float] = Field(None, gt=0)
    t_thres: Optional[int] = Field(None, ge=1)
    stop_at_epsilon: Optional[bool] = None


class SweepConfig(_Strict):
    b: list[int] = Field(min_length=1)


class ExperimentConfig(_Strict):
    schema_version: Literal[1]
    problem: ProblemConfig
    algorithm: Literal["proxgd", "proxsgd", "proxsvrg_plus", "ssrgd", "ssrgd_saddle"]
    schedule: Optional[Literal["T1a", "T1b", "T2a", "T2b", "T3a", "T3b", "T4a", "T4b", "T5"]] = None
    params: ParamsConfig = ParamsConfig()
    seeds: list[int] = Field([0], min_length=1)
    epsilon: float = Field(gt=0)
    delta: Optional[float] = Field(None, gt=0)
    zeta: float = Field(0.1, gt=0, lt=1)
    output_dir: str = "out"
    eval_stride: int = Field(1, ge=1)
    sweep: Optional[SweepConfig] = None
    x0: Optional[list[float]] = None
    reference_tol: float = Field(1e-10, gt=0)


class ConfigError(Exception):
    """Invalid configuration; ``str()`` carries ``path:line: message`` lines."""


def _line_of(text, loc):
    pos = 0
    for part in loc:
        if not isinstance(part, str):
            continue
        m = re.compile(r'"%s"' % re.escape(part)).search(text, pos)
        if m:
            pos = m.start()
    return text.count("\n", 0, pos) + 1


def parse_config(text, source="<config>"):
    """Validate config text; raise :class:`ConfigError` with line numbers."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = err["loc"]
            dotted = ".".join(str(p) for p in loc)
            if err["type"] == "extra_forbidden":
                msg = f"unknown key {str(loc[-1])!r} ({dotted})"
            else:
                msg = f"{dotted}: {err['msg']}"
            lines.append(f"{source}:{_line_of(text, loc)}: {msg}")
        raise ConfigError("\n".join(lines)) from None


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from None
    return parse_config(text, str(path))


# -- building runs ----------------------------------------------------------

def _problem_kwargs(cfg):
    d = cfg.model_dump()
    kind = d.pop("kind")
    return kind, d


def build_from_config(cfg):
    kind, kw = _problem_kwargs(cfg.problem)
    return build_problem(kind, **kw)


def ensure_reference(problem, cfg):
    if problem.phi_star is None:
        reference_optimum(problem, tol=cfg.reference_tol)
    return problem.phi_star


def params_for(cfg, problem, seed, b=None, stride=None):
    """AlgoParams for one run: the schedule (if any), then explicit overrides."""
    over = cfg.params.model_dump(exclude_none=True)
    if b is not None:
        over["b"] = b
    x0 = cfg.x0
    if cfg.schedule is not None:
        ensure_reference(problem, cfg)
        p = default_params(cfg.schedule, problem, cfg.epsilon, delta=cfg.delta,
                           zeta=cfg.zeta, b=over.get("b"), x0=x0)
    else:
        if "eta" not in over:
            raise ConfigurationError("params.eta is required when no schedule is given")
        p = AlgoParams(eta=over["eta"])
    delta = cfg.delta if cfg.delta is not None else p.delta
    return replace(p, **over, epsilon=cfg.epsilon, delta=delta, seed=seed,
                   eval_stride=stride or cfg.eval_stride)


# -- CSV --------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def emit_csv(trace, path, no_timing=False):
    """Write a trace as CSV (floats round-trip exactly at 17 significant digits)."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in trace.records:
                w.writerow([_fmt(r.iter), _fmt(r.epoch), _fmt(bool(r.super_epoch)),
                            _fmt(r.phi), _fmt(r.grad_map_norm), _fmt(r.sfo),
                            _fmt(r.sfo_paper), _fmt(r.po),
                            _fmt(0.0 if no_timing else r.wall_ms)])
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_csv(path):
    """Rows of a trace or summary CSV as dicts of strings."""
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _write_summary(rows, path):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for row in rows:
            w.writerow([_fmt(row.get(k)) for k in SUMMARY_HEADER])


# -- running ----------------------------------------------------------------

def _summarise(cfg, problem, params, trace):
    eps = cfg.epsilon
    final_phi = evaluate_phi(problem, trace.final_x)
    if cfg.algorithm == "ssrgd_saddle":
        success = trace.verdict == "yes"
    else:
        success = bool(trace.best_grad_map_norm <= eps)
    gap = None if problem.phi_star is None else final_phi - problem.phi_star
    c = trace.counters
    return {
        "algorithm": cfg.algorithm, "seed": params.seed, "b": params.b,
        "iterations": trace.iterations, "epochs": trace.epochs,
        "iterations_to_eps": trace.hitting_iter(eps),
        "sfo": c.sfo, "sfo_paper": c.sfo_paper_convention, "po": c.po,
        "diag_sfo": c.diag_sfo, "best_grad_map_norm": trace.best_grad_map_norm,
        "final_phi": final_phi, "final_gap": gap, "success": success,
        "lambda_min_est": trace.lambda_min_est, "status": "ok",
    }


def run_experiment(cfg, out_dir=None, seeds=None, no_timing=False, stride=None):
    """Run every (b, seed) combination; write traces and ``summary.csv``.

    Returns the list of summary rows.  A run that overflows is recorded with
    ``status=failed`` and the remaining runs continue.
    """
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    problem = build_from_config(cfg)
    driver = DRIVERS[cfg.algorithm]
    x0 = np.zeros(problem.dim) if cfg.x0 is None else np.asarray(cfg.x0, dtype=np.float64)
    if problem.phi_star is None and cfg.schedule is None:
        try:
            ensure_reference(problem, cfg)
        except Exception:  # reference only feeds the optional final_gap column
            pass
    b_values = cfg.sweep.b if cfg.sweep else [None]
    rows = []
    for b in b_values:
        for seed in (seeds if seeds is not None else cfg.seeds):
            params = params_for(cfg, problem, seed, b=b, stride=stride)
            name = out / f"trace_b{params.b}_seed{seed}.csv"
            try:
                trace = driver(problem, params, x0)
            except (NumericOverflowError, FloatingPointError, OverflowError) as exc:
                rows.append({"algorithm": cfg.algorithm, "seed": seed, "b": params.b,
                             "status": f"failed: {exc}", "success": False})
                name.write_text(",".join(CSV_HEADER) + "\n")
                continue
            emit_csv(trace, name, no_timing=no_timing)
            rows.append(_summarise(cfg, problem, params, trace))
    _write_summary(rows, out / "summary.csv")
    return rows


def schedule_table(cfg):
    """Parameters every theorem prescribes for the configured problem."""
    problem = build_from_config(cfg)
    try:
        ensure_reference(problem, cfg)
    except Exception:
        pass
    rows = []
    for th in THEOREMS:
        try:
            p = default_params(th, problem, cfg.epsilon, delta=cfg.delta or 0.5,
                               zeta=cfg.zeta, b=cfg.params.b, x0=cfg.x0)
        except ConfigurationError as exc:
            rows.append({"theorem": th, "error": str(exc)})
            continue
        rows.append({"theorem": th, "eta": p.eta, "b": p.b, "B": p.B, "m": p.m,
                     "T": p.max_iters, "r": p.r if th == "T5" else None,
                     "f_thres": p.f_thres, "t_thres": p.t_thres})
    return rows


def parse_seeds(spec):
    """``"a..b"`` (inclusive range) or a comma-separated list."""
    spec = spec.strip()
    if ".." in spec:
        a, b = spec.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"empty seed range {spec!r}")
        return list(range(lo, hi + 1))
    return [int(s) for s in spec.split(",") if s.strip()]


def load_vector(path):
    text = Path(path).read_text().strip()
    if text.startswith("["):
        vals = json.loads(text)
    else:
        vals = [float(t) for t in re.split(r"[\s,]+", text) if t]
    x = np.asarray(vals, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("point has non-finite entries")
    return x

