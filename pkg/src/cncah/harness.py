"""Experiment harness: score layouts against ground-truth boundaries.

The pipeline for one run: compute the true boundary from the generator's
positions, hand the topology alone to a layout algorithm, and after every
evaluation interval detect the boundary of the current drawing and log
sensitivity, specificity and accuracy until a termination criterion fires.
"""
from __future__ import annotations

import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .baselines import DHParams, FRParams, dh_iter, fr_iter
from .boundary import boundary_nodes
from .criteria import TerminationCriteria
from .errors import ConfigError, InvalidParams, UnknownNode
from .graph import Topology, VisualDrawing
from .spring import LayoutState, energy, initial_drawing, kk_iter, model_for
from .topogen import SHAPES, generate_instance
from .wkkms import WkkmsParams, wkkms_rounds

ALGORITHMS = ("wkkms", "kk", "fr", "dh")
LOG_COLUMNS = ("iter", "time_ms", "energy", "sensitivity", "specificity", "accuracy",
               "tp", "fn", "fp", "tn")
NA = "NA"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self):
        return self.tp + self.fn + self.fp + self.tn


def confusion(truth, detected, all_nodes) -> ConfusionCounts:
    nodes = set(all_nodes)
    truth, detected = set(truth), set(detected)
    for name, s in (("truth", truth), ("detected", detected)):
        extra = s - nodes
        if extra:
            raise UnknownNode(f"{name} set has unknown node {min(extra)}")
    tp = len(truth & detected)
    fn = len(truth - detected)
    fp = len(detected - truth)
    return ConfusionCounts(tp, fn, fp, len(nodes) - tp - fn - fp)


def _ratio(a, b):
    return a / b if b else None


def metrics(c: ConfusionCounts):
    """(sensitivity, specificity, accuracy); ``None`` marks an empty denominator."""
    return (
        _ratio(c.tp, c.tp + c.fn),
        _ratio(c.tn, c.tn + c.fp),
        _ratio(c.tp + c.tn, c.total),
    )


def fmt_metric(v) -> str:
    return NA if v is None else repr(float(v))


@dataclass(frozen=True)
class LogRow:
    iter: int
    time_ms: float
    energy: float
    sensitivity: Optional[float]
    specificity: Optional[float]
    accuracy: Optional[float]
    counts: Optional[ConfusionCounts]

    def cells(self):
        c = self.counts
        counts = [NA] * 4 if c is None else [str(c.tp), str(c.fn), str(c.fp), str(c.tn)]
        return [str(self.iter), repr(float(self.time_ms)), repr(float(self.energy)),
                fmt_metric(self.sensitivity), fmt_metric(self.specificity),
                fmt_metric(self.accuracy)] + counts


@dataclass
class IterationLog:
    settings: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def append(self, row: LogRow):
        if self.rows and row.iter <= self.rows[-1].iter:
            raise ValueError("iteration numbers must increase")
        self.rows.append(row)

    def to_csv(self) -> str:
        out = io.StringIO()
        for k, v in self.settings.items():
            out.write(f"# {k}={v}\n")
        out.write(",".join(LOG_COLUMNS) + "\n")
        for r in self.rows:
            out.write(",".join(r.cells()) + "\n")
        return out.getvalue()

    def write(self, path):
        Path(path).write_text(self.to_csv(), encoding="utf-8")


@dataclass(frozen=True)
class AlgorithmConfig:
    """Everything an algorithm needs besides the topology and the seed."""

    name: str = "wkkms"
    wkkms: WkkmsParams = WkkmsParams()
    fr: FRParams = FRParams()
    dh: DHParams = DHParams()

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise InvalidParams(f"unknown algorithm {self.name!r}; choose from {', '.join(ALGORITHMS)}")


def layout_steps(config: AlgorithmConfig, topology: Topology, pos: np.ndarray, seed=0,
                 model=None):
    """Iterator that advances ``pos`` in place by one evaluation interval per step."""
    if config.name == "wkkms":
        return wkkms_rounds(topology, pos, config.wkkms, seed=seed, model=model, rounds=None)
    if config.name == "kk":
        return kk_iter(model_for(topology) if model is None else model, pos, seed=seed)
    if config.name == "fr":
        return fr_iter(topology, pos, seed=seed, params=config.fr)
    return dh_iter(topology, pos, seed=seed, params=config.dh)


@dataclass
class ExperimentResult:
    state: LayoutState
    detected: Optional[frozenset]
    truth: Optional[frozenset]
    log: IterationLog
    stop_reason: str

    @property
    def final(self) -> LogRow:
        return self.log.rows[-1]

    def first_reaching(self, sensitivity) -> Optional[int]:
        """First logged interval whose sensitivity is at least the given value."""
        for r in self.log.rows:
            if r.sensitivity is not None and r.sensitivity >= sensitivity:
                return r.iter
        return None


def run_experiment(topology: Topology, truth_drawing: Optional[VisualDrawing],
                   algorithm: AlgorithmConfig | str = "wkkms",
                   criteria: Optional[TerminationCriteria] = None, seed: int = 0,
                   init: Optional[VisualDrawing] = None, clock: str = "units",
                   time_unit_ms: float = 100.0, settings: Optional[dict] = None) -> ExperimentResult:
    """Lay out ``topology`` from scratch and score every interval.

    ``clock="units"`` logs ``iter * time_unit_ms`` as the elapsed time so the
    log is reproducible; ``clock="wall"`` logs measured layout time (boundary
    detection excluded). A time limit is compared with the logged time.
    Without a ground-truth drawing only the energy is logged and metric
    targets can never be met.
    """
    config = AlgorithmConfig(algorithm) if isinstance(algorithm, str) else algorithm
    if clock not in ("units", "wall"):
        raise InvalidParams("clock must be 'units' or 'wall'")
    if not time_unit_ms > 0:
        raise InvalidParams("time_unit_ms must be positive")
    n = topology.n
    truth = None if truth_drawing is None else boundary_nodes(truth_drawing, topology)
    init = initial_drawing(n, seed) if init is None else init
    pos = init.copy_positions()
    model = model_for(topology) if n >= 2 else None

    log = IterationLog(dict(settings or {}))
    log.settings.update(algorithm=config.name, seed=seed, clock=clock, time_unit_ms=time_unit_ms)
    log.settings.update(_criteria_settings(criteria))
    log.settings.update(_algorithm_settings(config))

    nodes = range(n)
    detected = None

    def current_energy():
        return energy(model, pos) if model is not None else 0.0

    def evaluate(it, elapsed_ms):
        nonlocal detected
        if truth is None:
            log.append(LogRow(it, elapsed_ms, current_energy(), None, None, None, None))
            return None, None, None
        detected = boundary_nodes(VisualDrawing(pos), topology, strict=False)
        c = confusion(truth, detected, nodes)
        sens, spec, acc = metrics(c)
        log.append(LogRow(it, elapsed_ms, current_energy(), sens, spec, acc, c))
        return sens, spec, acc

    def elapsed(it, wall_s):
        return it * time_unit_ms if clock == "units" else wall_s * 1000.0

    it = 0
    wall = 0.0
    values = evaluate(0, 0.0)
    reason = _stop_reason(criteria, log, values, 0, 0.0)
    if reason is None:
        steps = layout_steps(config, topology, pos, seed, model) if n >= 2 else iter(())
        while True:
            t0 = time.perf_counter()
            try:
                next(steps)
            except StopIteration:
                reason = "converged"
                break
            wall += time.perf_counter() - t0
            it += 1
            ms = elapsed(it, wall)
            values = evaluate(it, ms)
            reason = _stop_reason(criteria, log, values, it, ms)
            if reason is not None:
                break
    drawing = VisualDrawing(pos)
    state = LayoutState(drawing, current_energy(), it, seed,
                        reason == "converged")
    log.settings["stop"] = reason
    return ExperimentResult(state, detected, truth, log, reason)


def _stop_reason(criteria, log, values, it, ms):
    if criteria is None:
        return None
    if criteria.targets_met(*values):
        return "target"
    if criteria.max_iters is not None and it >= criteria.max_iters:
        return "max_iters"
    if criteria.time_limit is not None and ms >= criteria.time_limit * 1000.0:
        return "time_limit"
    k = criteria.stall_iters
    if k is not None and len(log.rows) > k:
        window = [r.sensitivity for r in log.rows[-(k + 1):]]
        if all(v == window[0] for v in window):
            return "stall"
    return None


def _criteria_settings(c: Optional[TerminationCriteria]):
    if c is None:
        return {}
    return {
        "max_iters": c.max_iters,
        "target_sensitivity": c.target_sensitivity,
        "target_specificity": c.target_specificity,
        "target_accuracy": c.target_accuracy,
        "time_limit": c.time_limit,
        "stall_iters": c.stall_iters,
    }


def _algorithm_settings(config: AlgorithmConfig):
    if config.name == "wkkms":
        p = config.wkkms
        return {
            "p": p.P,
            "deltas": ",".join(repr(d) for d in p.deltas),
            "theta": p.theta,
            "epsilon": p.epsilon,
            "anchors": ",".join(str(a) for a in sorted(p.anchors)),
            "min_region_edges": p.min_region_edges,
        }
    if config.name == "fr":
        return {f"fr_{k}": v for k, v in config.fr.__dict__.items()}
    if config.name == "dh":
        return {f"dh_{k}": v for k, v in config.dh.__dict__.items()}
    return {}


# ---------------------------------------------------------------- batch runs

BENCH_KEYS = {
    "shape": str, "nodes": int, "degree": float, "seeds": str, "algorithms": str,
    "max_iters": int, "target_sensitivity": float, "target_specificity": float,
    "target_accuracy": float, "time_limit": float, "stall_iters": int,
    "p": float, "theta": float, "deltas": str, "epsilon": float,
    "freq_mhz": float, "frame_scale": float, "rssi_noise_sd": float,
    "clock": str, "time_unit_ms": float, "workers": int,
}
BENCH_DEFAULTS = {
    "nodes": "300", "degree": "8", "seeds": "1,2,3,4,5", "algorithms": "wkkms,kk,fr,dh",
    "max_iters": "60", "p": "0.1", "theta": "4", "deltas": "1.0,0.95,0.7,0.05,0.0",
    "epsilon": "0", "freq_mhz": "2400", "frame_scale": "100", "rssi_noise_sd": "0",
    "clock": "units", "time_unit_ms": "100", "workers": "1",
}
RUN_COLUMNS = ("shape", "instance_seed", "algorithm", "iters", "time_ms", "stop", "energy",
               "sensitivity", "specificity", "accuracy", "tp", "fn", "fp", "tn")


@dataclass(frozen=True)
class BenchRun:
    shape: str
    nodes: int
    degree: float
    seeds: tuple
    algorithms: tuple
    criteria: TerminationCriteria
    wkkms: WkkmsParams
    freq_mhz: float
    frame_scale: float
    rssi_noise_sd: float
    clock: str
    time_unit_ms: float


@dataclass
class BenchConfig:
    runs: list
    workers: int = 1


def _parse_float_list(text, key):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from None


def _typed(key, raw, lineno=None):
    if key not in BENCH_KEYS:
        where = f"line {lineno}: " if lineno else ""
        raise ConfigError(f"{where}unknown key {key!r}")
    try:
        return BENCH_KEYS[key](raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value for {key}: {raw!r}") from None


def parse_bench_config(text: str, base_dir=None) -> BenchConfig:
    """``key = value`` defaults, then one ``[run]`` block per experiment cell."""
    defaults = dict(BENCH_DEFAULTS)
    blocks = []
    current = defaults
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "[run]":
            current = {}
            blocks.append(current)
            continue
        if line.startswith("["):
            raise ConfigError(f"line {lineno}: unknown section {line}")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        _typed(key, value, lineno)
        current[key] = value
    if not blocks:
        raise ConfigError("config has no [run] blocks")
    runs = [_make_run({**defaults, **b}, base_dir) for b in blocks]
    return BenchConfig(runs, _typed("workers", defaults["workers"]))


def _make_run(d, base_dir) -> BenchRun:
    if "shape" not in d:
        raise ConfigError("run without a shape")
    shape = d["shape"]
    if shape not in SHAPES and base_dir is not None and not Path(shape).is_absolute():
        candidate = Path(base_dir) / shape
        if candidate.exists():
            shape = str(candidate)
    algorithms = tuple(a.strip() for a in d["algorithms"].split(",") if a.strip())
    if not algorithms:
        raise ConfigError("algorithm list is empty")
    for a in algorithms:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}")
    try:
        seeds = tuple(int(s) for s in d["seeds"].split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"seeds: expected comma-separated integers, got {d['seeds']!r}") from None
    if not seeds:
        raise ConfigError("seed list is empty")
    crit = {k: _typed(k, d[k]) for k in ("max_iters", "target_sensitivity", "target_specificity",
                                         "target_accuracy", "time_limit", "stall_iters") if k in d}
    try:
        criteria = TerminationCriteria(**crit)
        wk = WkkmsParams(P=_typed("p", d["p"]), deltas=_parse_float_list(d["deltas"], "deltas"),
                         theta=_typed("theta", d["theta"]), epsilon=_typed("epsilon", d["epsilon"]))
    except InvalidParams as exc:
        raise ConfigError(str(exc)) from None
    clock = d["clock"]
    if clock not in ("units", "wall"):
        raise ConfigError("clock must be 'units' or 'wall'")
    return BenchRun(shape, _typed("nodes", d["nodes"]), _typed("degree", d["degree"]), seeds,
                    algorithms, criteria, wk, _typed("freq_mhz", d["freq_mhz"]),
                    _typed("frame_scale", d["frame_scale"]),
                    _typed("rssi_noise_sd", d["rssi_noise_sd"]), clock,
                    _typed("time_unit_ms", d["time_unit_ms"]))


def _bench_job(args):
    run, seed = args
    topo, truth, _, _ = generate_instance(run.shape, run.nodes, run.degree, seed,
                                          freq_mhz=run.freq_mhz, frame_scale=run.frame_scale,
                                          noise_sd=run.rssi_noise_sd)
    rows = []
    for alg in run.algorithms:
        cfg = AlgorithmConfig(alg, wkkms=run.wkkms)
        res = run_experiment(topo, truth, cfg, run.criteria, seed=seed, clock=run.clock,
                             time_unit_ms=run.time_unit_ms)
        f = res.final
        rows.append({
            "shape": Path(run.shape).stem, "instance_seed": seed, "algorithm": alg,
            "iters": f.iter, "time_ms": f.time_ms, "stop": res.stop_reason, "energy": f.energy,
            "sensitivity": f.sensitivity, "specificity": f.specificity, "accuracy": f.accuracy,
            "tp": f.counts.tp, "fn": f.counts.fn, "fp": f.counts.fp, "tn": f.counts.tn,
        })
    return rows


@dataclass
class BenchResult:
    rows: list

    def summary(self):
        """Mean/min/max per (shape, algorithm), in first-appearance order."""
        groups = {}
        for r in self.rows:
            groups.setdefault((r["shape"], r["algorithm"]), []).append(r)
        out = []
        for (shape, alg), rs in groups.items():
            entry = {"shape": shape, "algorithm": alg, "runs": len(rs)}
            for key in ("sensitivity", "specificity", "accuracy", "iters", "time_ms"):
                vals = [r[key] for r in rs if r[key] is not None]
                if vals:
                    entry[f"{key}_mean"] = sum(vals) / len(vals)
                    entry[f"{key}_min"] = min(vals)
                    entry[f"{key}_max"] = max(vals)
                else:
                    entry[f"{key}_mean"] = entry[f"{key}_min"] = entry[f"{key}_max"] = None
            out.append(entry)
        return out

    def rows_csv(self) -> str:
        return _csv(RUN_COLUMNS, self.rows)

    def summary_csv(self) -> str:
        rows = self.summary()
        cols = tuple(rows[0].keys()) if rows else ("shape", "algorithm", "runs")
        return _csv(cols, rows)


def _cell(v):
    if v is None:
        return NA
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(columns, rows):
    lines = [",".join(columns)]
    lines += [",".join(_cell(r[c]) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


def bench(config: BenchConfig, workers: Optional[int] = None) -> BenchResult:
    jobs = [(run, seed) for run in config.runs for seed in run.seeds]
    workers = config.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_bench_job, jobs))
    else:
        parts = [_bench_job(j) for j in jobs]
    return BenchResult([row for part in parts for row in part])
