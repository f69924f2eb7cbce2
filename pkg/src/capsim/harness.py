"""Experiment harness: validated configs, seeded trials, CSV rows.

Every experiment kind runs some number of independent trials; trial i
derives its seed as a hash of (master seed, experiment name, i), so
reruns are byte-identical and adding trials never reshuffles existing
ones. Trials may execute in a process pool; rows are still emitted in
trial order, so the output does not depend on scheduling.

CSV schema (version 1, fixed): experiment,param,value,trial,metric,metric_value.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import fsm as fsm_mod
from . import sequences as seq_mod
from . import turing as tm_mod
from .graphgen import ModelParams, sample_stimuli
from .streams import child_seed, stream_rng

CSV_SCHEMA_VERSION = 1
CSV_HEADER = ("experiment", "param", "value", "trial", "metric", "metric_value")

KINDS = ("simple-seq", "scaffold-seq", "seq-capacity", "seq-sweep",
         "fsm-train", "fsm-run", "fsm-sweep", "fsm-strlen", "tm-run")

BUILTIN_FSMS = {
    "div3": fsm_mod.divisible_by_3_fsm,
    "even-zeros": fsm_mod.even_zeros_fsm,
}
BUILTIN_TMS = {
    "immediate-accept": tm_mod.immediate_accept_tm,
    "unary-successor": tm_mod.unary_successor_tm,
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    param: str
    value: object  # int, float, or str
    trial: int
    metric: str
    metric_value: float


@dataclass(frozen=True)
class AggregateRow:
    experiment: str
    param: str
    value: object
    metric: str
    mean: float
    low: float
    high: float


_FIELD_TYPES = {
    "kind": str, "name": str, "trials": int, "seed": int,
    "params": dict, "length": int, "presentations": int,
    "grid": list, "vary": str, "machine": str, "string": str,
    "lengths": list, "sample_size": int, "string_length": int,
    "max_steps": int, "window": int, "schedule": str,
    "capacity_threshold": float,
}


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    trials: int
    seed: int
    params: ModelParams | None = None
    length: int | None = None
    presentations: int | None = None
    delta: object = "auto"
    grid: list | None = None
    vary: str | None = None
    machine: str | None = None
    string: str | None = None
    lengths: list | None = None
    sample_size: int = 50
    string_length: int = 20
    max_steps: int = 200
    window: int | None = None
    schedule: str = "shuffled"
    capacity_threshold: float = 0.8
    base_dir: Path = field(default_factory=Path)


def parse_config(data: dict, *, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate a raw config mapping; error messages name the offending field."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    known = set(_FIELD_TYPES) | {"delta"}
    for key in data:
        if key not in known:
            raise ConfigError(f"config: unknown field {key!r}")
    for key, expected in _FIELD_TYPES.items():
        if key in data and not isinstance(data[key], expected):
            if expected is float and isinstance(data[key], int):
                continue
            raise ConfigError(f"config.{key}: expected {expected.__name__}")

    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"config.kind: must be one of {', '.join(KINDS)}; got {kind!r}")
    trials = data.get("trials", 1)
    if trials < 1:
        raise ConfigError("config.trials: must be >= 1")

    params = None
    if "params" in data:
        raw = dict(data["params"])
        k = raw.get("k")
        if k == "sqrt":
            raw["k"] = int(round(math.sqrt(raw["n"])))
        try:
            params = ModelParams(**raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config.params: {exc}") from exc

    cfg = ExperimentConfig(
        kind=kind,
        name=data.get("name", kind),
        trials=trials,
        seed=data.get("seed", 0),
        params=params,
        length=data.get("length"),
        presentations=data.get("presentations"),
        delta=data.get("delta", "auto"),
        grid=data.get("grid"),
        vary=data.get("vary"),
        machine=data.get("machine"),
        string=data.get("string"),
        lengths=data.get("lengths"),
        sample_size=data.get("sample_size", 50),
        string_length=data.get("string_length", 20),
        max_steps=data.get("max_steps", 200),
        window=data.get("window"),
        schedule=data.get("schedule", "shuffled"),
        capacity_threshold=float(data.get("capacity_threshold", 0.8)),
        base_dir=Path(base_dir),
    )
    _validate_kind(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return parse_config(data, base_dir=path.parent)


def _require(cfg, *fields):
    for name in fields:
        if getattr(cfg, name) is None:
            raise ConfigError(f"config.{name}: required for kind {cfg.kind!r}")


def _validate_kind(cfg):
    if cfg.kind in ("simple-seq", "scaffold-seq"):
        _require(cfg, "params", "length", "presentations")
    elif cfg.kind == "seq-capacity":
        _require(cfg, "params", "grid", "presentations")
    elif cfg.kind == "seq-sweep":
        _require(cfg, "grid", "vary", "length", "presentations")
        if cfg.vary not in ("n", "p"):
            raise ConfigError("config.vary: must be 'n' or 'p'")
        if cfg.vary == "p":
            _require(cfg, "params")
    elif cfg.kind == "fsm-train":
        _require(cfg, "params", "machine", "presentations")
    elif cfg.kind == "fsm-run":
        _require(cfg, "params", "machine", "presentations", "string")
    elif cfg.kind == "fsm-sweep":
        _require(cfg, "machine", "presentations", "grid", "vary")
        if cfg.vary not in ("n", "p"):
            raise ConfigError("config.vary: must be 'n' or 'p'")
        if cfg.vary == "p":
            _require(cfg, "params")
    elif cfg.kind == "fsm-strlen":
        _require(cfg, "machine", "presentations", "grid", "vary", "lengths")
        if cfg.vary not in ("n", "p"):
            raise ConfigError("config.vary: must be 'n' or 'p'")
        if cfg.vary == "p":
            _require(cfg, "params")
    elif cfg.kind == "tm-run":
        _require(cfg, "params", "machine", "presentations")
        if cfg.string is None:
            raise ConfigError("config.string: required for kind 'tm-run' "
                              "(use \"\" for an empty tape)")
    if cfg.grid is not None and len(cfg.grid) == 0:
        raise ConfigError("config.grid: must be nonempty")
    if cfg.lengths is not None and len(cfg.lengths) == 0:
        raise ConfigError("config.lengths: must be nonempty")


def _load_fsm(cfg) -> fsm_mod.Fsm:
    if cfg.machine in BUILTIN_FSMS:
        return BUILTIN_FSMS[cfg.machine]()
    return fsm_mod.parse_fsm((cfg.base_dir / cfg.machine).read_text())


def _load_tm(cfg) -> tm_mod.TuringMachine:
    if cfg.machine in BUILTIN_TMS:
        return BUILTIN_TMS[cfg.machine]()
    return tm_mod.parse_tm((cfg.base_dir / cfg.machine).read_text())


def _effective_delta(cfg, params, length):
    if cfg.delta == "auto":
        return 0 if params.k * length <= params.n else params.k
    if not isinstance(cfg.delta, int) or cfg.delta < 0:
        raise ConfigError("config.delta: must be 'auto' or a nonnegative integer")
    return cfg.delta


def _params_at(cfg, value):
    """Parameter point for a sweep value (k tracks sqrt(n) on n-sweeps)."""
    if cfg.vary == "n":
        base = cfg.params
        return ModelParams(n=value, k=int(round(math.sqrt(value))),
                           p=base.p if base else 0.2,
                           beta=base.beta if base else 0.1)
    return replace(cfg.params, p=value)


# -- per-kind trial runners ----------------------------------------------


def _row(cfg, param, value, trial, metric, metric_value, suffix=""):
    return ResultRow(cfg.name + suffix, param, value, trial, metric,
                     float(metric_value))


def _seq_trial(cfg, trial, seed):
    scaffold = cfg.kind == "scaffold-seq"
    params = cfg.params
    delta = _effective_delta(cfg, params, cfg.length)
    stimuli = sample_stimuli(params.n, params.k, cfg.length, delta,
                             stream_rng(seed, "stimuli"))
    rows = []
    reports = []

    def hook(net, trace, round_index):
        report = seq_mod.cued_recall(net, stimuli, 1, trace.rounds[-1],
                                     scaffold=scaffold)
        reports.append(report)
        rows.append(_row(cfg, "presentations", round_index + 1, trial,
                         "recall_last", report.last(seq_mod.MAIN_AREA)))
        if scaffold:
            rows.append(_row(cfg, "presentations", round_index + 1, trial,
                             "recall_last_aux", report.last(seq_mod.AUX_AREA)))

    train = seq_mod.train_scaffold if scaffold else seq_mod.train_simple
    train(params, stimuli, cfg.presentations, seed, round_hook=hook)
    final = reports[-1]
    for position, value in sorted(final.recall[seq_mod.MAIN_AREA].items()):
        rows.append(_row(cfg, "position", position, trial, "recall", value))
    rows.append(_row(cfg, "presentations", cfg.presentations, trial,
                     "max_overlap", final.max_overlap))
    return rows


def _capacity_trial(cfg, trial, seed):
    params = cfg.params
    rows = []
    first_drop = None
    for length in cfg.grid:
        delta = _effective_delta(cfg, params, length)
        stimuli = sample_stimuli(params.n, params.k, length, delta,
                                 stream_rng(seed, "stimuli", length))
        result = seq_mod.train_simple(params, stimuli, cfg.presentations,
                                      child_seed(seed, "net", length))
        report = result.recall(1)
        recall = report.last(seq_mod.MAIN_AREA)
        rows.append(_row(cfg, "length", length, trial, "recall_last", recall))
        rows.append(_row(cfg, "length", length, trial, "max_overlap",
                         report.max_overlap))
        if first_drop is None and recall < cfg.capacity_threshold:
            first_drop = length
    if first_drop is not None:
        rows.append(_row(cfg, "threshold", cfg.capacity_threshold, trial,
                         "first_drop_length", first_drop))
    return rows


def _seq_sweep_trial(cfg, trial, seed):
    rows = []
    for value in cfg.grid:
        params = _params_at(cfg, value)
        delta = _effective_delta(cfg, params, cfg.length)
        stimuli = sample_stimuli(params.n, params.k, cfg.length, delta,
                                 stream_rng(seed, "stimuli", str(value)))
        result = seq_mod.train_simple(params, stimuli, cfg.presentations,
                                      child_seed(seed, "net", str(value)))
        report = result.recall(1)
        rows.append(_row(cfg, cfg.vary, value, trial, "recall_last",
                         report.last(seq_mod.MAIN_AREA)))
        rows.append(_row(cfg, cfg.vary, value, trial, "max_overlap",
                         report.max_overlap))
    return rows


def _string_accuracy(fsmnet, count, length, rng):
    symbols = [s for s in fsmnet.fsm.alphabet if s != fsm_mod.TERMINAL]
    hits = 0
    for _ in range(count):
        s = "".join(rng.choice(symbols) for _ in range(length))
        expected, _ = fsm_mod.reference_run(fsmnet.fsm, s)
        if fsm_mod.simulate_string(fsmnet, s).accepted == expected:
            hits += 1
    return hits / count


def _fsm_train_trial(cfg, trial, seed):
    machine = _load_fsm(cfg)
    rows = []

    def hook(fsmnet, epoch):
        recalls = fsm_mod.transition_recall(fsmnet)
        values = list(recalls.values())
        rows.append(_row(cfg, "presentations", epoch + 1, trial,
                         "mean_transition_recall", sum(values) / len(values)))
        rows.append(_row(cfg, "presentations", epoch + 1, trial,
                         "min_transition_recall", min(values)))

    fsmnet = fsm_mod.train_fsm(machine, cfg.params, cfg.presentations, seed,
                               schedule=cfg.schedule, epoch_hook=hook)
    accuracy = _string_accuracy(fsmnet, cfg.sample_size, cfg.string_length,
                                stream_rng(seed, "strings"))
    rows.append(_row(cfg, "presentations", cfg.presentations, trial,
                     "classification_accuracy", accuracy))
    return rows


def _fsm_run_trial(cfg, trial, seed):
    machine = _load_fsm(cfg)
    fsmnet = fsm_mod.train_fsm(machine, cfg.params, cfg.presentations, seed,
                               schedule=cfg.schedule)
    result = fsm_mod.simulate_string(fsmnet, cfg.string)
    expected, _ = fsm_mod.reference_run(machine, cfg.string)
    rows = []
    for round_index, phase, _label, fraction in result.overlaps:
        rows.append(_row(cfg, "round", round_index, trial,
                         f"overlap_{phase}", fraction))
    rows.append(_row(cfg, "string", cfg.string, trial, "accepted",
                     float(result.accepted)))
    rows.append(_row(cfg, "string", cfg.string, trial, "matches_reference",
                     float(result.accepted == expected)))
    return rows


def _fsm_sweep_trial(cfg, trial, seed):
    machine = _load_fsm(cfg)
    rows = []
    for value in cfg.grid:
        params = _params_at(cfg, value)
        fsmnet = fsm_mod.train_fsm(machine, params, cfg.presentations,
                                   child_seed(seed, "net", str(value)),
                                   schedule=cfg.schedule)
        recalls = list(fsm_mod.transition_recall(fsmnet).values())
        accuracy = _string_accuracy(fsmnet, cfg.sample_size, cfg.string_length,
                                    stream_rng(seed, "strings", str(value)))
        rows.append(_row(cfg, cfg.vary, value, trial, "mean_transition_recall",
                         sum(recalls) / len(recalls)))
        rows.append(_row(cfg, cfg.vary, value, trial, "min_transition_recall",
                         min(recalls)))
        rows.append(_row(cfg, cfg.vary, value, trial, "classification_accuracy",
                         accuracy))
    return rows


def _fsm_strlen_trial(cfg, trial, seed):
    machine = _load_fsm(cfg)
    rows = []
    for value in cfg.grid:
        params = _params_at(cfg, value)
        fsmnet = fsm_mod.train_fsm(machine, params, cfg.presentations,
                                   child_seed(seed, "net", str(value)),
                                   schedule=cfg.schedule)
        for length in cfg.lengths:
            accuracy = _string_accuracy(
                fsmnet, cfg.sample_size, length,
                stream_rng(seed, "strings", str(value), length))
            rows.append(_row(cfg, "string_length", length, trial,
                             "classification_accuracy", accuracy,
                             suffix=f":{cfg.vary}={value}"))
    return rows


def _tm_run_trial(cfg, trial, seed):
    machine = _load_tm(cfg)
    reference = tm_mod.reference_tm_run(machine, cfg.string, cfg.max_steps)
    tmnet = tm_mod.train_tm(machine, cfg.params, cfg.presentations, seed,
                            window=cfg.window)
    result = tm_mod.run_tm(tmnet, cfg.string, cfg.max_steps)
    rows = [
        _row(cfg, "input", cfg.string or "(empty)", trial, "accepted",
             float(result.outcome is tm_mod.TmOutcome.ACCEPT)),
        _row(cfg, "input", cfg.string or "(empty)", trial, "matches_reference",
             float(result.outcome is reference.outcome)),
        _row(cfg, "input", cfg.string or "(empty)", trial, "tape_matches",
             float(result.left == reference.left and result.right == reference.right)),
        _row(cfg, "input", cfg.string or "(empty)", trial, "steps",
             float(result.steps)),
    ]
    return rows


_RUNNERS = {
    "simple-seq": _seq_trial,
    "scaffold-seq": _seq_trial,
    "seq-capacity": _capacity_trial,
    "seq-sweep": _seq_sweep_trial,
    "fsm-train": _fsm_train_trial,
    "fsm-run": _fsm_run_trial,
    "fsm-sweep": _fsm_sweep_trial,
    "fsm-strlen": _fsm_strlen_trial,
    "tm-run": _tm_run_trial,
}


def run_trial(cfg: ExperimentConfig, trial: int) -> list[ResultRow]:
    """Run one trial; the trial seed is hash(master seed, experiment name, index)."""
    seed = child_seed(cfg.seed, cfg.name, trial)
    return _RUNNERS[cfg.kind](cfg, trial, seed)


def run_experiment(cfg: ExperimentConfig, *, workers: int = 1,
                   progress=None) -> list[ResultRow]:
    """All trials of an experiment, rows concatenated in trial order."""
    per_trial: list[list[ResultRow]] = [[] for _ in range(cfg.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_trial, cfg, i): i for i in range(cfg.trials)}
            for future, i in futures.items():
                per_trial[i] = future.result()
                if progress:
                    progress(i)
    else:
        for i in range(cfg.trials):
            per_trial[i] = run_trial(cfg, i)
            if progress:
                progress(i)
    return [row for rows in per_trial for row in rows]


# -- output ---------------------------------------------------------------


def _format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: list[ResultRow], path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([row.experiment, row.param, _format_value(row.value),
                             row.trial, row.metric, _format_value(row.metric_value)])


def rows_to_csv_bytes(rows: list[ResultRow]) -> bytes:
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([row.experiment, row.param, _format_value(row.value),
                         row.trial, row.metric, _format_value(row.metric_value)])
    return buffer.getvalue().encode("utf-8")


def aggregate(rows: list[ResultRow]) -> list[AggregateRow]:
    """Mean and min/max range per (experiment, param, value, metric) group."""
    if not rows:
        raise ValueError("no rows to aggregate")
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        groups.setdefault((row.experiment, row.param, row.value, row.metric),
                          []).append(row.metric_value)
    out = []
    for (experiment, param, value, metric), values in groups.items():
        arr = np.asarray(values, dtype=np.float64)
        out.append(AggregateRow(experiment, param, value, metric,
                                float(arr.mean()), float(arr.min()), float(arr.max())))
    return out
