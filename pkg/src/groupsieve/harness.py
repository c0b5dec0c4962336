"""Experiment runner: seeded Monte Carlo trials, sweeps, CSV/JSON reporting.

Trial i always runs on the stream derived from SeedSequence((base_seed, i)),
so results are independent of execution order and of the worker count
(set via the GROUPSIEVE_WORKERS environment variable).
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .channels import parse_channel_spec
from .scheme import SchemeConfig, SchemeResult, run_scheme

WORKERS_ENV = "GROUPSIEVE_WORKERS"

CSV_COLUMNS = ["trial", "n", "k", "channel", "tests_isolation",
               "tests_identification", "tests_verify", "tests_total",
               "rounds", "failed", "fp", "fn"]

SWEEP_AXES = ("p", "n", "k", "epsilon", "f", "c", "schedule")


class ConfigError(ValueError):
    """An experiment configuration failed validation."""


@dataclass
class ExperimentConfig:
    n: int
    k: int
    channel: str
    trials: int = 1
    base_seed: int = 0
    inclusion_fraction: float = 0.5
    block_mode: str = "ratio"
    epsilon: float = 0.5
    c: float = 2.0
    delta_team: float | None = None
    tests_per_team: int | None = None
    max_rounds: int | None = None
    test_budget: int | None = None
    schedule: tuple[int, ...] = (1,)
    verify: bool = False
    verify_tests: int | None = None
    oracle_classifier: bool = False
    csv_path: str | None = None
    summary_path: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not 1 <= self.k <= self.n:
            raise ConfigError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        self.schedule = tuple(int(m) for m in self.schedule)
        try:
            parse_channel_spec(self.channel)
            self.scheme_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def scheme_config(self) -> SchemeConfig:
        return SchemeConfig(
            inclusion_fraction=self.inclusion_fraction,
            tests_per_team=self.tests_per_team,
            misclass_target=self.delta_team,
            max_rounds=self.max_rounds,
            test_budget=self.test_budget,
            schedule=self.schedule,
            oracle_classifier=self.oracle_classifier,
            block_mode=self.block_mode,
            epsilon=self.epsilon,
            multiplier=self.c,
            verify=self.verify,
            verify_tests=self.verify_tests,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = list(self.schedule)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "schedule" in d and d["schedule"] is not None:
            d["schedule"] = tuple(d["schedule"])
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)


@dataclass
class AggregateReport:
    config: ExperimentConfig
    rows: list[dict]
    summary: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        write_rows_csv(self.rows, path)

    def write_summary(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_rows_csv(rows: list[dict], path, extra_columns: tuple[str, ...] = ()) -> None:
    columns = list(extra_columns) + CSV_COLUMNS
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row[c] for c in columns})


def trial_seed(base_seed: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((base_seed, trial))


def run_trial(config: ExperimentConfig, trial: int) -> dict:
    result = run_scheme(config.n, config.k, parse_channel_spec(config.channel),
                        config.scheme_config(), trial_seed(config.base_seed, trial),
                        record_transcript=False)
    row = {"trial": trial, "n": config.n, "k": config.k, "channel": config.channel}
    row.update(result.to_row())
    return row


def _trial_worker(args) -> dict:
    config_dict, trial = args
    return run_trial(ExperimentConfig.from_dict(config_dict), trial)


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    return max(1, workers)


def run_experiment(config: ExperimentConfig) -> AggregateReport:
    """All trials of one configuration, aggregated in trial order."""
    workers = _worker_count()
    if workers == 1 or config.trials == 1:
        rows = [run_trial(config, t) for t in range(config.trials)]
    else:
        args = [(config.to_dict(), t) for t in range(config.trials)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_trial_worker, args, chunksize=8))
    rows.sort(key=lambda r: r["trial"])
    return AggregateReport(config=config, rows=rows, summary=summarize(config, rows))


def _mean_se(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))


def summarize(config: ExperimentConfig, rows: list[dict]) -> dict:
    """Summary statistics; everything here is recomputable from the rows."""
    summary: dict = {"trials": len(rows), "n": config.n, "k": config.k,
                     "channel": config.channel}
    for name in ("tests_total", "tests_isolation", "tests_identification",
                 "tests_verify", "rounds", "fp", "fn"):
        mean, se = _mean_se([r[name] for r in rows])
        summary[f"mean_{name}"] = mean
        summary[f"se_{name}"] = se
    summary["failure_rate"] = float(np.mean([r["failed"] for r in rows]))
    mistakes = [(r["fp"] + r["fn"]) / config.k for r in rows]
    summary["mean_mistake_rate"], summary["se_mistake_rate"] = _mean_se(mistakes)
    cap = parse_channel_spec(config.channel).capacity()
    baseline = config.k * math.log2(config.n / config.k) / cap if config.n > config.k else 0.0
    summary["baseline_tests"] = baseline
    summary["tests_to_baseline_ratio"] = (
        summary["mean_tests_total"] / baseline if baseline > 0 else math.inf)
    return summary


def _apply_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    d = config.to_dict()
    if axis == "p":
        kind = config.channel.split(":", 1)[0]
        d["channel"] = f"{kind}:{float(value)!r}"
    elif axis == "n":
        d["n"] = int(value)
    elif axis == "k":
        d["k"] = int(value)
    elif axis == "epsilon":
        d["epsilon"] = float(value)
    elif axis == "f":
        d["inclusion_fraction"] = float(value)
    elif axis == "c":
        d["c"] = float(value)
    elif axis == "schedule":
        d["schedule"] = [int(m) for m in value]
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    return ExperimentConfig.from_dict(d)


def sweep(config: ExperimentConfig, axis: str, values) -> list[tuple[object, AggregateReport]]:
    """One experiment per value along a single axis."""
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one axis value")
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    return [(v, run_experiment(_apply_axis(config, axis, v))) for v in values]


def sweep_rows(results: list[tuple[object, AggregateReport]], axis: str) -> list[dict]:
    """Flatten sweep reports into per-trial rows keyed by the axis value."""
    rows = []
    for value, report in results:
        key = ",".join(str(v) for v in value) if isinstance(value, (list, tuple)) else value
        for row in report.rows:
            rows.append({axis: key, **row})
    return rows


def write_sweep_csv(results, axis: str, path) -> None:
    write_rows_csv(sweep_rows(results, axis), path, extra_columns=(axis,))
