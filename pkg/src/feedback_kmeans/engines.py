"""The two refinement loops over an initial k-means clustering.

SME: every iteration splits the worst-evaluated cluster, merges the
globally closest centroid pair (the fresh children included, so an
iteration may undo its own split) and evaluates once, after the pair;
the cluster count is preserved at every recorded step.

S/M: every iteration applies exactly one action, split or merge, chosen
from the worst cluster's size rank, merges with the nearest centroid, and
evaluates after each action; the cluster count may drift.

Both track the best evaluation seen (strictly better per sense) but always
continue from the current clustering, never rolling back.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

from .core import (
    Action,
    Clustering,
    Dataset,
    FeedbackReport,
    NoLegalActionError,
    RunTrace,
    TraceStep,
)
from .feedback import FeedbackProvider
from .kmeans import KMeansConfig, lloyd
from .operators import (
    SMAction,
    closest_centroid_pair,
    is_splittable,
    merge_pair,
    nearest_cluster,
    sm_decide,
    split_cluster,
    worst_cluster,
)
from .rng import derive_seed


class Method(enum.Enum):
    SME = "sme"
    SM = "sm"


DEFAULT_ITERATIONS = {Method.SME: 6, Method.SM: 12}


@dataclass(frozen=True)
class EngineConfig:
    """Run parameters shared by both loops.

    iterations defaults per method (6 for SME, 12 for S/M) so that a run of
    either performs the same number of elementary split/merge operators.
    snapshot_cap bounds per-step clustering snapshots; beyond it only the
    actions (the deltas) and the best snapshot are kept.
    """

    method: Method
    feedback: FeedbackProvider
    seed: int
    iterations: int | None = None
    target_evaluation: float | None = None
    min_k: int = 2
    snapshot_cap: int | None = None

    def __post_init__(self) -> None:
        if self.iterations is not None and self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.min_k < 2:
            raise ValueError("min_k must be at least 2")

    def resolved_iterations(self) -> int:
        if self.iterations is not None:
            return self.iterations
        return DEFAULT_ITERATIONS[self.method]


def _evaluate(
    dataset: Dataset,
    clustering: Clustering,
    provider: FeedbackProvider,
    step: int,
) -> FeedbackReport:
    return provider.evaluate(dataset, clustering, provider.evaluation_rng(step))


def _badness_order(report: FeedbackReport) -> list[int]:
    """Cluster ids sorted worst-first under the report's sense, ties by id."""
    values = report.per_cluster
    if report.sense.value == "lower":
        return sorted(range(len(values)), key=lambda c: (-values[c], c))
    return sorted(range(len(values)), key=lambda c: (values[c], c))


def _pick_split_target(
    dataset: Dataset, clustering: Clustering, report: FeedbackReport
) -> int | None:
    """Worst splittable cluster, falling back down the badness order."""
    for cid in _badness_order(report):
        if is_splittable(dataset, clustering, cid):
            return cid
    return None


def _target_reached(config: EngineConfig, aggregate: float) -> bool:
    target = config.target_evaluation
    if target is None:
        return False
    if config.feedback.sense.value == "higher":
        return aggregate >= target
    return aggregate <= target


class _TraceBuilder:
    def __init__(self, dataset: Dataset, config: EngineConfig, initial: Clustering):
        self.dataset = dataset
        self.config = config
        report = _evaluate(dataset, initial, config.feedback, step=0)
        self.steps: list[TraceStep] = [
            TraceStep(index=0, actions=(Action.init(),), clustering=initial, feedback=report, is_best=True)
        ]
        self.best_index = 0
        self.best_evaluation = report.aggregate
        self.best_snapshot = initial
        self.stalled = False

    @property
    def latest_report(self) -> FeedbackReport:
        return self.steps[-1].feedback

    def record(self, actions: tuple[Action, ...], clustering: Clustering) -> FeedbackReport:
        index = len(self.steps)
        report = _evaluate(self.dataset, clustering, self.config.feedback, step=index)
        is_best = self.config.feedback.sense.better(report.aggregate, self.best_evaluation)
        if is_best:
            self.best_index = index
            self.best_evaluation = report.aggregate
            self.best_snapshot = clustering
        cap = self.config.snapshot_cap
        snapshot = clustering if cap is None or index <= cap else None
        self.steps.append(
            TraceStep(index=index, actions=actions, clustering=snapshot, feedback=report, is_best=is_best)
        )
        return report

    def build(self) -> RunTrace:
        return RunTrace(
            steps=tuple(self.steps),
            best_step_index=self.best_index,
            best_evaluation=self.best_evaluation,
            best_snapshot=self.best_snapshot,
            seed=self.config.seed,
            stalled=self.stalled,
        )


def _initial_clustering(dataset: Dataset, k: int, config: EngineConfig) -> Clustering:
    if k < max(2, config.min_k):
        raise ValueError(f"k={k} below the minimum cluster count")
    return lloyd(dataset, KMeansConfig(k=k, seed=derive_seed(config.seed, "init")))


def run_sme(dataset: Dataset, k: int, config: EngineConfig) -> RunTrace:
    """Split worst, merge closest pair, evaluate once per iteration.

    The cluster count is identical at every recorded step. A singleton (or
    duplicate-only) worst cluster falls back to the next-worst splittable
    one; if none exists the run terminates early, flagged as stalled.
    """
    if config.method is not Method.SME:
        raise ValueError("config.method must be SME")
    current = _initial_clustering(dataset, k, config)
    builder = _TraceBuilder(dataset, config, current)
    if _target_reached(config, builder.best_evaluation):
        return builder.build()
    for iteration in range(1, config.resolved_iterations() + 1):
        target = _pick_split_target(dataset, current, builder.latest_report)
        if target is None:
            builder.stalled = True
            break
        after_split = split_cluster(
            dataset, current, target, derive_seed(config.seed, "split", iteration)
        )
        pair = closest_centroid_pair(after_split)
        current = merge_pair(dataset, after_split, pair[0], pair[1])
        report = builder.record((Action.split(target), Action.merge(*pair)), current)
        if _target_reached(config, report.aggregate):
            break
    return builder.build()


def run_sm(dataset: Dataset, k: int, config: EngineConfig) -> RunTrace:
    """One split or merge per iteration, chosen by the worst cluster's size
    rank; evaluation after every action; k may drift, never below min_k."""
    if config.method is not Method.SM:
        raise ValueError("config.method must be SM")
    current = _initial_clustering(dataset, k, config)
    builder = _TraceBuilder(dataset, config, current)
    if _target_reached(config, builder.best_evaluation):
        return builder.build()
    for iteration in range(1, config.resolved_iterations() + 1):
        worst = worst_cluster(builder.latest_report)
        try:
            action = sm_decide(current, worst)
        except NoLegalActionError:
            builder.stalled = True
            break
        if action is SMAction.MERGE and current.k <= config.min_k:
            action = SMAction.SPLIT
        if action is SMAction.SPLIT:
            target = worst if is_splittable(dataset, current, worst) else None
            if target is None:
                target = _pick_split_target(dataset, current, builder.latest_report)
            if target is None:
                builder.stalled = True
                break
            current = split_cluster(
                dataset, current, target, derive_seed(config.seed, "split", iteration)
            )
            recorded = Action.split(target)
        else:
            partner = nearest_cluster(current, worst)
            current = merge_pair(dataset, current, worst, partner)
            recorded = Action.merge(worst, partner)
        report = builder.record((recorded,), current)
        if _target_reached(config, report.aggregate):
            break
    return builder.build()


def run_engine(dataset: Dataset, k: int, config: EngineConfig) -> RunTrace:
    """Dispatch to the loop selected by config.method."""
    if config.method is Method.SME:
        return run_sme(dataset, k, config)
    return run_sm(dataset, k, config)


def best_clustering(trace: RunTrace) -> tuple[Clustering, float]:
    """The best-evaluated clustering of the trace and its evaluation."""
    step = trace.steps[trace.best_step_index]
    clustering = step.clustering if step.clustering is not None else trace.best_snapshot
    return clustering, trace.best_evaluation


def trace_records(trace: RunTrace) -> list[dict]:
    """Flat export records, one per step."""
    return [
        {
            "step": step.index,
            "action": "+".join(a.label() for a in step.actions),
            "k": step.k,
            "per_cluster_feedback": [float(v) for v in step.feedback.per_cluster],
            "aggregate": float(step.feedback.aggregate),
            "is_best": bool(step.is_best),
        }
        for step in trace.steps
    ]


def write_trace(trace: RunTrace, path: str | Path) -> None:
    """JSON-lines trace export: one record per step, stable key order."""
    lines = [json.dumps(rec, sort_keys=True) for rec in trace_records(trace)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_records(path: str | Path) -> list[dict]:
    """Parse a JSON-lines trace export back into record dicts."""
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
