"""Seeded replications, error rates, timing and summary tables."""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .datasets import GeneratorSpec, LabeledSet, SplitSample, child_seed, prune_by_nn, read_labeled
from .errors import InvalidInput
from .estimators import knn_classify
from .selftrain import RunConfig, Trace, grid_n_for_step, run


class ReplicationError(RuntimeError):
    def __init__(self, rep, exc):
        self.rep = rep
        super().__init__(f"replication {rep}: {type(exc).__name__}: {exc}")


def error_rate(trace: Trace, hidden_labels, unclassified="error") -> float:
    """Fraction of pool points whose assigned label differs from the truth.

    Unclassified points count as errors; ``unclassified="skip"`` drops them
    from numerator and denominator instead (diagnostics only).
    """
    if hidden_labels is None:
        raise InvalidInput("hidden labels are required to score a trace")
    truth = np.asarray(hidden_labels).reshape(-1)
    if len(truth) != trace.l:
        raise InvalidInput("hidden labels do not match the trace length")
    labels = trace.labels()
    if unclassified == "skip":
        done = labels >= 0
        return float(np.mean(labels[done] != truth[done])) if done.any() else 0.0
    if unclassified != "error":
        raise InvalidInput("unclassified must be 'error' or 'skip'")
    return float(np.mean(labels != truth))


@dataclass
class Summary:
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float
    per_rep_errors: list = field(default_factory=list)
    per_rep_times: list = field(default_factory=list)

    @classmethod
    def from_values(cls, errors, times=()):
        e = np.asarray(errors, dtype=float)
        if e.size == 0:
            raise InvalidInput("no replications to summarize")
        # Quartiles: linear interpolation between order statistics.
        q = np.percentile(e, [0, 25, 50, 75, 100], method="linear")
        return cls(
            min=float(q[0]),
            q1=float(q[1]),
            median=float(q[2]),
            mean=float(e.mean()),
            q3=float(q[3]),
            max=float(q[4]),
            per_rep_errors=e.tolist(),
            per_rep_times=[float(t) for t in times],
        )

    @property
    def times_mean_s(self):
        return float(np.mean(self.per_rep_times)) if self.per_rep_times else 0.0

    def to_json_dict(self):
        return {
            "min": self.min,
            "q1": self.q1,
            "median": self.median,
            "mean": self.mean,
            "q3": self.q3,
            "max": self.max,
            "reps": len(self.per_rep_errors),
            "times_mean_s": self.times_mean_s,
        }

    def table(self):
        head = "Min.    1st Qu.  Median   Mean     3rd Qu.  Max."
        row = "  ".join(f"{v:.4f} " for v in (self.min, self.q1, self.median, self.mean, self.q3, self.max))
        return f"{head}\n{row}"


@dataclass
class CsvSource:
    """Real-data source. ``data_path`` rows are coordinates plus a trailing
    0/1 label. With ``seed_path`` the seed set is fixed; otherwise every
    replication draws ``per_class`` seeds per class at random from the data
    and the rest becomes the pool. ``prune`` applies nearest-neighbor pruning
    once, to the whole data set, before any split."""

    data_path: str
    seed_path: str | None = None
    per_class: tuple = (10, 10)
    prune: float | None = None
    header: bool = False

    def load(self):
        data = read_labeled(self.data_path, self.header)
        if self.prune is not None:
            _, kept = prune_by_nn(data.points, self.prune)
            data = LabeledSet(data.points[kept], data.labels[kept])
        return data

    def draw(self, rng_seed, data=None) -> SplitSample:
        data = self.load() if data is None else data
        if self.seed_path is not None:
            return SplitSample(read_labeled(self.seed_path, self.header), data.points, data.labels)
        rng = np.random.default_rng(int(rng_seed))
        picks = []
        for c, k in zip((0, 1), self.per_class):
            members = np.flatnonzero(data.labels == c)
            if len(members) < k:
                raise InvalidInput(f"class {c} has only {len(members)} points")
            picks.append(rng.choice(members, size=k, replace=False))
        chosen = np.sort(np.concatenate(picks))
        rest = np.setdiff1d(np.arange(len(data)), chosen)
        seed = LabeledSet(data.points[chosen], data.labels[chosen])
        return SplitSample(seed, data.points[rest], data.labels[rest])


@dataclass
class ExperimentSpec:
    generator: GeneratorSpec | CsvSource
    run: RunConfig
    replications: int = 50
    baseline_k: int | None = None
    master_seed: int = 0
    grid_step: float | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise InvalidInput("replications must be >= 1")

    def run_config(self) -> RunConfig:
        """RunConfig with grid bounds/size filled in from the generator support."""
        cfg = self.run
        if self.grid_step is None and cfg.grid_n is None:
            return cfg
        bounds = cfg.grid_bounds
        if bounds is None and isinstance(self.generator, GeneratorSpec):
            a, b = self.generator.bounds()
            bounds = (a - 1e-9, b + 1e-9) if self.generator.kind == "sine" else (a, b)
        n = cfg.grid_n
        if self.grid_step is not None:
            if bounds is None:
                raise InvalidInput("grid_step needs explicit grid bounds for CSV sources")
            n = grid_n_for_step(bounds, self.grid_step)
        return RunConfig(cfg.h, cfg.variant, cfg.fallback, n, bounds, cfg.rng_seed)


@dataclass
class RepResult:
    rep: int
    seed: int
    error: float
    time_s: float
    stalled_count: int
    baseline_error: float | None = None


def replicate(spec: ExperimentSpec, rep: int, data=None) -> RepResult:
    seed = child_seed(spec.master_seed, rep)
    try:
        if isinstance(spec.generator, CsvSource):
            sample = spec.generator.draw(seed, data)
        else:
            sample = spec.generator.draw(seed)
        cfg = spec.run_config()
        t0 = time.perf_counter()
        trace = run(sample, cfg)
        elapsed = time.perf_counter() - t0
        base = None
        if spec.baseline_k:
            pred = knn_classify(sample.seed, sample.pool, spec.baseline_k)
            base = float(np.mean(pred != sample.hidden_labels))
        return RepResult(rep, seed, error_rate(trace, sample.hidden_labels), elapsed, trace.stalled_count, base)
    except Exception as exc:
        raise ReplicationError(rep, exc) from exc


def _replicate_star(args):
    return replicate(*args)


@dataclass
class ExperimentResult:
    summary: Summary
    reps: list
    baseline: Summary | None = None


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run every replication (in ``workers`` processes) and aggregate.

    Each replication derives its own seed from ``(master_seed, rep)``, so the
    per-replication results do not depend on ``workers``.
    """
    data = spec.generator.load() if isinstance(spec.generator, CsvSource) else None
    jobs = [(spec, r, data) for r in range(spec.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reps = list(ex.map(_replicate_star, jobs))
    else:
        reps = [replicate(*j) for j in jobs]
    reps.sort(key=lambda r: r.rep)
    summary = Summary.from_values([r.error for r in reps], [r.time_s for r in reps])
    baseline = None
    if spec.baseline_k:
        baseline = Summary.from_values([r.baseline_error for r in reps])
    return ExperimentResult(summary, reps, baseline)


def reps_csv(reps, include_times=True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["rep", "seed", "error", "time_s", "stalled_count"]
    if not include_times:
        cols.remove("time_s")
    w.writerow(cols)
    for r in reps:
        row = [r.rep, r.seed, repr(r.error), repr(r.time_s), r.stalled_count]
        if not include_times:
            del row[3]
        w.writerow(row)
    return buf.getvalue()


def write_outputs(result: ExperimentResult, directory) -> dict:
    import os

    os.makedirs(directory, exist_ok=True)
    paths = {"summary": os.path.join(directory, "summary.json"), "reps": os.path.join(directory, "reps.csv")}
    doc = result.summary.to_json_dict()
    if result.baseline is not None:
        doc["baseline"] = result.baseline.to_json_dict()
    with open(paths["summary"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    with open(paths["reps"], "w", encoding="utf-8", newline="") as fh:
        fh.write(reps_csv(result.reps))
    return paths
