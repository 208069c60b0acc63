import numpy as np
import pytest

from feedback_kmeans import (
    Action,
    Clustering,
    CustomizabilityFeedback,
    EngineConfig,
    FeedbackReport,
    Method,
    RssFeedback,
    RunTrace,
    Sense,
    TraceStep,
    best_clustering,
    evaluate_clustering,
    run_sm,
    run_sme,
    validate_clustering,
    write_trace,
)
from feedback_kmeans.engines import read_trace_records, trace_records
from helpers import make_dataset


class XVarianceFeedback:
    """Toy pluggable provider: per-cluster variance of the first coordinate,
    lower is better. Prizes clusters whose points share similar horizontal
    values regardless of the other features."""

    kind = "xvar"
    sense = Sense.LOWER_IS_BETTER
    deterministic = True

    def evaluate(self, dataset, clustering, rng=None):
        values = []
        sizes = []
        for cid in range(clustering.k):
            xs = dataset.points[clustering.members(cid), 0]
            values.append(float(np.var(xs)))
            sizes.append(len(xs))
        aggregate = float(np.dot(values, np.asarray(sizes) / sum(sizes)))
        return FeedbackReport(per_cluster=tuple(values), aggregate=aggregate, sense=self.sense)

    def evaluation_rng(self, step):
        return None


def rss_config(method, **kwargs):
    return EngineConfig(method=method, feedback=RssFeedback(), seed=kwargs.pop("seed", 7), **kwargs)


# ---------------------------------------------------------------- SME

def test_sme_counting_contract(two_blobs):
    trace = run_sme(two_blobs, 2, rss_config(Method.SME))
    assert len(trace.steps) == 7  # init + 6 iterations
    assert trace.action_count() == 12  # one split + one merge per iteration
    assert trace.steps[0].actions == (Action.init(),)
    for step in trace.steps[1:]:
        assert [a.kind for a in step.actions] == ["split", "merge"]


def test_sme_preserves_k(two_blobs):
    for k in (2, 3, 4):
        trace = run_sme(two_blobs, k, rss_config(Method.SME, seed=k))
        assert {step.k for step in trace.steps} == {k}
        for step in trace.steps:
            assert step.clustering.k == k
            assert validate_clustering(two_blobs, step.clustering) == []


def test_sme_stalls_on_all_singletons():
    ds = make_dataset([[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]])
    trace = run_sme(ds, 3, rss_config(Method.SME))
    assert trace.stalled
    assert len(trace.steps) == 1  # nothing splittable after init


def test_sme_best_no_worse_than_initial(two_blobs):
    for seed in range(4):
        trace = run_sme(two_blobs, 2, rss_config(Method.SME, seed=seed))
        assert trace.best_evaluation <= trace.steps[0].feedback.aggregate


def test_sme_splits_target_the_worst_cluster(two_blobs):
    trace = run_sme(two_blobs, 3, rss_config(Method.SME))
    for prev, step in zip(trace.steps, trace.steps[1:]):
        split_action = step.actions[0]
        values = prev.feedback.per_cluster
        worst_value = max(values)  # RSS: higher is worse
        # the split target is the worst cluster unless it was unsplittable
        assert values[split_action.target] == worst_value or split_action.target != int(
            np.argmax(values)
        )


def test_sme_deterministic_traces(two_blobs):
    a = run_sme(two_blobs, 3, rss_config(Method.SME, seed=11))
    b = run_sme(two_blobs, 3, rss_config(Method.SME, seed=11))
    assert trace_records(a) == trace_records(b)
    for sa, sb in zip(a.steps, b.steps):
        np.testing.assert_array_equal(sa.clustering.assignment, sb.clustering.assignment)
        np.testing.assert_array_equal(sa.clustering.centroids, sb.clustering.centroids)


def test_sme_point_multiset_preserved(two_blobs):
    trace = run_sme(two_blobs, 3, rss_config(Method.SME))
    for step in trace.steps:
        assert step.clustering.sizes().sum() == two_blobs.n_points


def test_sme_target_evaluation_stops_early(two_blobs):
    full = run_sme(two_blobs, 2, rss_config(Method.SME, seed=3))
    lenient_target = full.steps[0].feedback.aggregate * 2
    trace = run_sme(
        two_blobs, 2, rss_config(Method.SME, seed=3, target_evaluation=lenient_target)
    )
    assert len(trace.steps) == 1  # init already meets the target


def test_sme_requires_matching_method(two_blobs):
    with pytest.raises(ValueError, match="SME"):
        run_sme(two_blobs, 2, rss_config(Method.SM))


# ---------------------------------------------------------------- S/M

def test_sm_counting_contract(planted_small):
    dataset, _ = planted_small
    trace = run_sm(dataset, 3, rss_config(Method.SM))
    assert len(trace.steps) == 13  # init + 12 single-action iterations
    assert trace.action_count() == 12
    for step in trace.steps[1:]:
        assert len(step.actions) == 1
        assert step.actions[0].kind in ("split", "merge")


def test_sm_k_can_drift(planted_small):
    dataset, _ = planted_small
    trace = run_sm(dataset, 3, rss_config(Method.SM, seed=42))
    ks = [step.k for step in trace.steps]
    assert len(set(ks)) > 1
    splits = sum(1 for s in trace.steps for a in s.actions if a.kind == "split")
    merges = sum(1 for s in trace.steps for a in s.actions if a.kind == "merge")
    assert splits != merges
    assert trace.steps[-1].k == 3 + splits - merges != 3


def test_sm_k_bounds(planted_small):
    dataset, _ = planted_small
    for seed in range(3):
        config = rss_config(Method.SM, seed=seed)
        trace = run_sm(dataset, 2, config)
        for step in trace.steps:
            assert config.min_k <= step.k <= 2 + 12
            assert validate_clustering(dataset, step.clustering) == []


def test_sm_deterministic(planted_small):
    dataset, _ = planted_small
    a = run_sm(dataset, 4, rss_config(Method.SM, seed=9))
    b = run_sm(dataset, 4, rss_config(Method.SM, seed=9))
    assert trace_records(a) == trace_records(b)


def test_sm_custom_reproducible_with_fixed_oracle_stream(planted_small):
    dataset, profile = planted_small
    def run_once():
        provider = CustomizabilityFeedback(profile.with_rng_seed(77))
        config = EngineConfig(method=Method.SM, feedback=provider, seed=5)
        return trace_records(run_sm(dataset, 3, config))
    assert run_once() == run_once()


def test_sm_evaluates_after_every_action(planted_small):
    dataset, _ = planted_small
    trace = run_sm(dataset, 3, rss_config(Method.SM))
    # one evaluation per step, init included
    assert len(trace.evaluations()) == len(trace.steps) == 13


def test_sm_respects_configured_min_k(planted_small):
    dataset, _ = planted_small
    config = EngineConfig(method=Method.SM, feedback=RssFeedback(), seed=1, min_k=4)
    trace = run_sm(dataset, 4, config)
    assert min(step.k for step in trace.steps) >= 4


def test_sm_target_evaluation_stops_mid_run(planted_small):
    dataset, _ = planted_small
    full = run_sm(dataset, 3, rss_config(Method.SM, seed=2))
    evaluations = full.evaluations()
    # pick a target only reachable after a few actions
    target = sorted(evaluations)[len(evaluations) // 2]
    if target == evaluations[0]:
        target = min(evaluations)
    trace = run_sm(dataset, 3, rss_config(Method.SM, seed=2, target_evaluation=target))
    assert len(trace.steps) < len(full.steps)
    assert trace.evaluations()[-1] <= target


def test_engine_rejects_k_below_minimum(two_blobs):
    with pytest.raises(ValueError, match="minimum cluster count"):
        run_sme(two_blobs, 1, rss_config(Method.SME))


def test_random_datasets_yield_valid_traces():
    # robustness sweep: mixed continuous/duplicate-heavy data, both engines
    rng = np.random.default_rng(99)
    for trial in range(12):
        n = int(rng.integers(10, 120))
        points = rng.normal(size=(n, 3))
        if trial % 3 == 0:
            points = np.round(points)  # duplicate-heavy
        ds = make_dataset(points)
        k = int(min(rng.integers(2, 6), len(np.unique(ds.points, axis=0))))
        if k < 2:
            continue
        sme_trace = run_sme(ds, k, rss_config(Method.SME, seed=trial, iterations=3))
        sm_trace = run_sm(ds, k, rss_config(Method.SM, seed=trial, iterations=6))
        for trace in (sme_trace, sm_trace):
            for step in trace.steps:
                assert validate_clustering(ds, step.clustering) == []
            assert trace.best_evaluation == min(trace.evaluations())


def test_best_is_optimum_over_all_evaluations(two_blobs, planted_small):
    trace = run_sme(two_blobs, 3, rss_config(Method.SME, seed=8))
    assert trace.best_evaluation == min(trace.evaluations())
    dataset, profile = planted_small
    provider = CustomizabilityFeedback(profile.with_rng_seed(4))
    custom_trace = run_sm(
        dataset, 3, EngineConfig(method=Method.SM, feedback=provider, seed=8)
    )
    assert custom_trace.best_evaluation == max(custom_trace.evaluations())


# ---------------------------------------------------------------- toy feedback scenario

def test_split_then_merges_improve_horizontal_homogeneity():
    # two x-bands, each spread across two far-apart y groups: geometric
    # clusters form along y and mix the bands; the horizontal-similarity
    # feedback drives actions that separate them
    points = []
    for y_base in (0.0, 30.0):
        for dy in range(3):
            points.append([0.0, y_base + dy])
            points.append([10.0, y_base + dy + 0.5])
    ds = make_dataset(points)
    provider = XVarianceFeedback()
    config = EngineConfig(method=Method.SM, feedback=provider, seed=0, iterations=6)
    trace = run_sm(ds, 2, config)
    initial = trace.steps[0].feedback.aggregate
    assert initial == 25.0  # both seeded initial clusters mix the two bands
    assert trace.best_evaluation == 0.0
    best, _ = best_clustering(trace)
    for cid in range(best.k):
        xs = ds.points[best.members(cid), 0]
        assert np.var(xs) <= 1e-12  # each cluster is x-homogeneous


# ---------------------------------------------------------------- best_clustering

def _manual_trace(aggregates, sense):
    ds = make_dataset([[0.0], [1.0]])
    clustering = Clustering(assignment=[0, 1], centroids=[[0.0], [1.0]], k=2)
    steps = []
    best_idx = 0
    best = aggregates[0]
    for idx, value in enumerate(aggregates):
        is_best = idx == 0 or sense.better(value, best)
        if is_best and idx > 0:
            best = value
            best_idx = idx
        actions = (Action.init(),) if idx == 0 else (Action.split(0), Action.merge(0, 1))
        steps.append(
            TraceStep(
                index=idx,
                actions=actions,
                clustering=clustering,
                feedback=FeedbackReport(per_cluster=(value, value), aggregate=value, sense=sense),
                is_best=is_best,
            )
        )
    return RunTrace(
        steps=tuple(steps),
        best_step_index=best_idx,
        best_evaluation=aggregates[best_idx],
        best_snapshot=clustering,
        seed=0,
    )


def test_best_clustering_single_step():
    trace = _manual_trace([4.0], Sense.LOWER_IS_BETTER)
    clustering, evaluation = best_clustering(trace)
    assert evaluation == 4.0
    assert trace.best_step_index == 0


def test_best_clustering_lower_is_better():
    trace = _manual_trace([5.0, 3.0, 4.0], Sense.LOWER_IS_BETTER)
    assert trace.best_step_index == 1
    assert best_clustering(trace)[1] == 3.0


def test_best_clustering_strict_improvement_keeps_first_optimum():
    trace = _manual_trace([0.1, 0.5, 0.5], Sense.HIGHER_IS_BETTER)
    assert trace.best_step_index == 1
    assert best_clustering(trace)[1] == 0.5


def test_best_clustering_snapshot_cap(two_blobs):
    config = rss_config(Method.SME, seed=2, snapshot_cap=0)
    trace = run_sme(two_blobs, 2, config)
    assert all(step.clustering is None for step in trace.steps[1:])
    clustering, evaluation = best_clustering(trace)
    assert evaluation == trace.best_evaluation
    assert validate_clustering(two_blobs, clustering) == []


# ---------------------------------------------------------------- trace export

def test_trace_jsonl_round_trip(tmp_path, two_blobs):
    trace = run_sme(two_blobs, 3, rss_config(Method.SME, seed=6))
    path = tmp_path / "trace.jsonl"
    write_trace(trace, path)
    records = read_trace_records(path)
    assert records == trace_records(trace)
    assert [r["step"] for r in records] == list(range(len(trace.steps)))
    for record in records:
        assert set(record) == {"step", "action", "k", "per_cluster_feedback", "aggregate", "is_best"}
        assert len(record["per_cluster_feedback"]) == record["k"]
    assert records[0]["action"] == "init"
    assert records[0]["is_best"] is True
