"""Metric formulas, agreement, bootstrap protocol, prevalence intervals."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roa_audit.detector import detect_all
from roa_audit.evaluation import (
    BrokerMismatchError,
    CellCounts,
    ConfusionCounts,
    EvaluationError,
    UnverifiedRunError,
    bootstrap_delta,
    classification_metrics,
    cohen_kappa,
    confusion,
    confusion_from_labels,
    explanation_accuracy,
    labels_of,
    micro_metric,
    prevalence,
    wald_interval,
)
from roa_audit.outcomes import CompletionStatus, FailureCategory, FailureReport
from roa_audit.synth import PlantSpec, generate, plant
from roa_audit.taxonomy import AuditReport, Category

CAT = Category.ADDING_STEPS


def label_map(present: set[Category] | None = None) -> dict[Category, bool]:
    present = present or set()
    return {c: c in present for c in Category}


def verified_report(broker: str, present: set[Category] | None = None) -> AuditReport:
    trace = generate(PlantSpec(broker, 1))
    report = detect_all(trace)  # benign: all absent, verified success
    if present:
        # overlay labels for label-level tests (findings not needed here)
        return AuditReport(
            broker_id=broker,
            detected_channels=report.detected_channels,
            form_fields=report.form_fields,
            labels=label_map(present),
            findings=report.findings,
            completion=report.completion,
            failure=None,
            metadata=report.metadata,
        )
    return report


# ---------------------------------------------------------------------------
# confusion
# ---------------------------------------------------------------------------

def test_identical_predictions_have_no_errors():
    preds = {f"b{i}": verified_report(f"b{i}") for i in range(10)}
    truth = {b: labels_of(r) for b, r in preds.items()}
    counts = confusion(preds, truth)
    for cell in counts.per_category.values():
        assert cell.fp == 0 and cell.fn == 0
        assert cell.total == 10


def test_hand_counted_cells():
    # truth {A:1,B:1,C:0,D:0}, pred {A:1,B:0,C:0,D:1} for one category
    truth = {
        "A": label_map({CAT}),
        "B": label_map({CAT}),
        "C": label_map(),
        "D": label_map(),
    }
    preds = {
        "A": label_map({CAT}),
        "B": label_map(),
        "C": label_map(),
        "D": label_map({CAT}),
    }
    cell = confusion_from_labels(preds, truth).per_category[CAT]
    assert (cell.tp, cell.fn, cell.tn, cell.fp) == (1, 1, 1, 1)


def test_unverified_run_rejected():
    report = verified_report("b0")
    failed = AuditReport(
        broker_id="b0",
        detected_channels=(),
        form_fields=(),
        labels=label_map(),
        findings=(),
        completion=CompletionStatus(True, False, "failure report present"),
        failure=FailureReport(FailureCategory.SECURITY_BARRIER, (), "captcha"),
        metadata=report.metadata,
    )
    with pytest.raises(UnverifiedRunError):
        confusion({"b0": failed}, {"b0": label_map()})


def test_broker_mismatch_rejected():
    preds = {"a": verified_report("a")}
    with pytest.raises(BrokerMismatchError):
        confusion(preds, {"b": label_map()})


# ---------------------------------------------------------------------------
# classification_metrics
# ---------------------------------------------------------------------------

def test_arithmetic_oracle_fixture():
    counts = ConfusionCounts({CAT: CellCounts(tp=2, fp=1, fn=1, tn=4)})
    metrics = classification_metrics(counts).per_category[CAT]
    assert abs(metrics.accuracy.value - 0.75) < 1e-9
    assert abs(metrics.precision.value - 2 / 3) < 1e-9
    assert abs(metrics.recall.value - 2 / 3) < 1e-9
    assert abs(metrics.f1.value - 2 / 3) < 1e-9


def test_degenerate_denominators_reported_absent():
    counts = ConfusionCounts({CAT: CellCounts(tp=0, fp=0, fn=0, tn=5)})
    metrics = classification_metrics(counts).per_category[CAT]
    assert metrics.accuracy.value == 1.0
    assert not metrics.precision.defined and "zero denominator" in metrics.precision.reason
    assert not metrics.recall.defined
    assert not metrics.f1.defined


def test_perfect_predictor_scores_one():
    counts = ConfusionCounts({CAT: CellCounts(tp=5, fp=0, fn=0, tn=5)})
    metrics = classification_metrics(counts).per_category[CAT]
    assert metrics.accuracy.value == metrics.precision.value == 1.0
    assert metrics.recall.value == metrics.f1.value == 1.0


def test_f1_bounded_by_max_of_precision_recall():
    for tp, fp, fn, tn in itertools.product(range(4), repeat=4):
        metrics = classification_metrics(
            ConfusionCounts({CAT: CellCounts(tp, fp, fn, tn)})
        ).per_category[CAT]
        if metrics.f1.defined:
            assert metrics.f1.value <= max(
                metrics.precision.value, metrics.recall.value
            ) + 1e-12


# ---------------------------------------------------------------------------
# explanation accuracy
# ---------------------------------------------------------------------------

def test_explanation_accuracy_counting_oracle():
    # Four true-positive pairs; one report cites a mechanism outside the
    # ground truth, so 3 of 4 pairs count as correct.
    subtype_map = {
        "b0": "coupled_outcomes",
        "b1": "coupled_outcomes",
        "b2": "coupled_outcomes",
        "b3": "ambiguous_rights_terminology",
    }
    reports, truth, truth_subtypes, traces = {}, {}, {}, {}
    for broker in subtype_map:
        trace = generate(
            PlantSpec(broker, 7, plants=frozenset({plant("coupled_outcomes")}))
        )
        reports[broker] = detect_all(trace)
        traces[broker] = trace
        truth[broker] = label_map({Category.FEEDFORWARD_AMBIGUITY})
        truth_subtypes[broker] = {
            Category.FEEDFORWARD_AMBIGUITY: frozenset({subtype_map[broker]})
        }
    value = explanation_accuracy(reports, truth, truth_subtypes, traces)
    assert abs(value.value - 0.75) < 1e-9


def test_all_matching_explanations_score_one():
    reports, truth, truth_subtypes, traces = {}, {}, {}, {}
    for i in range(3):
        broker = f"e{i}"
        trace = generate(
            PlantSpec(broker, i, plants=frozenset({plant("misdirect_pathways")}))
        )
        reports[broker] = detect_all(trace)
        traces[broker] = trace
        truth[broker] = label_map({Category.INFO_WITHOUT_CONTEXT})
        truth_subtypes[broker] = {
            Category.INFO_WITHOUT_CONTEXT: frozenset({"misdirect_pathways"})
        }
    value = explanation_accuracy(reports, truth, truth_subtypes, traces)
    assert value.value == 1.0


def test_no_true_positives_is_absent_with_reason():
    reports = {"b0": verified_report("b0")}
    truth = {"b0": label_map()}
    value = explanation_accuracy(reports, truth, {}, {})
    assert not value.defined
    assert "no true-positive" in value.reason


# ---------------------------------------------------------------------------
# Cohen's kappa
# ---------------------------------------------------------------------------

def test_kappa_balanced_disagreement_is_zero():
    # p_o = 0.5; pooled positive rate 0.5 -> p_e = 0.5; kappa = 0
    assert cohen_kappa([1, 1, 0, 0], [1, 0, 0, 1]) == 0.0


def test_kappa_constant_opposed_raters_is_minus_one():
    # p_o = 0; pooled rate 0.5 -> p_e = 0.5; kappa = -1
    assert cohen_kappa([1, 1], [0, 0]) == -1.0


def test_kappa_perfect_agreement_is_one():
    assert cohen_kappa([1, 0, 1, 0], [1, 0, 1, 0]) == 1.0


def test_kappa_constant_identical_raters_defined_as_one():
    assert cohen_kappa([1, 1, 1], [1, 1, 1]) == 1.0
    assert cohen_kappa([0, 0], [0, 0]) == 1.0


def test_kappa_rejects_empty_and_mismatched():
    with pytest.raises(EvaluationError):
        cohen_kappa([], [])
    with pytest.raises(EvaluationError):
        cohen_kappa([1, 0], [1])


@settings(max_examples=200, deadline=None)
@given(
    pairs=st.lists(
        st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40
    )
)
def test_kappa_symmetry_and_reflexivity(pairs):
    a = [x for x, _y in pairs]
    b = [y for _x, y in pairs]
    assert cohen_kappa(a, b) == cohen_kappa(b, a)
    assert cohen_kappa(a, a) == 1.0
    assert -1.0 - 1e-12 <= cohen_kappa(a, b) <= 1.0 + 1e-12


def test_kappa_matches_formula_recomputation():
    # brute-force recomputation of p_o and pooled p_e on random vectors
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        a = rng.integers(0, 2, size=n).tolist()
        b = rng.integers(0, 2, size=n).tolist()
        p_o = sum(1 for x, y in zip(a, b) if x == y) / n
        pooled = (sum(a) + sum(b)) / (2 * n)
        p_e = pooled**2 + (1 - pooled) ** 2
        expected = 1.0 if p_e == 1.0 else (p_o - p_e) / (1 - p_e)
        assert cohen_kappa(a, b) == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# bootstrap_delta
# ---------------------------------------------------------------------------

def _shift_fixture():
    """100 brokers; A predicts everything present (fp=50); B flips 20% of
    A's false positives to true negatives."""
    truth, runs_a, runs_b = {}, {}, {}
    for i in range(100):
        broker = f"b{i:03d}"
        truth[broker] = label_map({CAT} if i < 50 else set())
        runs_a[broker] = label_map({CAT})
        runs_b[broker] = label_map({CAT})
    for i in range(50, 60):
        runs_b[f"b{i:03d}"] = label_map()
    return runs_a, runs_b, truth


def test_identical_configurations_give_zero_delta():
    runs_a, _runs_b, truth = _shift_fixture()
    result = bootstrap_delta(
        micro_metric("precision"), runs_a, runs_a, truth, m=50, B=1000, seed=3
    )
    assert result.delta == 0.0
    assert (result.ci_low, result.ci_high) == (0.0, 0.0)
    assert not result.significant


def test_precision_shift_is_significant():
    runs_a, runs_b, truth = _shift_fixture()
    result = bootstrap_delta(
        micro_metric("precision"), runs_a, runs_b, truth, m=50, B=1000, seed=3,
        metric_name="precision",
    )
    assert result.delta > 0
    assert result.ci_low > 0
    assert result.significant


def test_seeded_rerun_is_bit_identical():
    runs_a, runs_b, truth = _shift_fixture()
    first = bootstrap_delta(
        micro_metric("f1"), runs_a, runs_b, truth, m=50, B=500, seed=11
    )
    second = bootstrap_delta(
        micro_metric("f1"), runs_a, runs_b, truth, m=50, B=500, seed=11
    )
    assert (first.delta, first.ci_low, first.ci_high) == (
        second.delta,
        second.ci_low,
        second.ci_high,
    )


def test_resampled_deltas_live_in_the_exhaustive_support():
    # Three brokers, m=3: enumerate all 27 ordered resamples by hand and
    # verify the bootstrap only ever produces deltas from that support,
    # with the right sign.
    brokers = ["x", "y", "z"]
    truth = {"x": label_map({CAT}), "y": label_map({CAT}), "z": label_map()}
    runs_a = {"x": label_map({CAT}), "y": label_map(), "z": label_map({CAT})}
    runs_b = {"x": label_map({CAT}), "y": label_map({CAT}), "z": label_map()}

    accuracy = micro_metric("accuracy")
    support = set()
    for resample in itertools.product(brokers, repeat=3):
        va = accuracy(runs_a, truth, list(resample))
        vb = accuracy(runs_b, truth, list(resample))
        if va is not None and vb is not None:
            support.add(round(vb - va, 12))
    assert support  # sanity: the enumeration produced values
    assert min(support) >= 0  # B dominates A pointwise here

    result = bootstrap_delta(accuracy, runs_a, runs_b, truth, m=3, B=300, seed=2)
    assert result.delta > 0
    assert round(result.ci_low, 12) in support or result.ci_low >= min(support)
    assert result.ci_high <= max(support) + 1e-12


def test_streamed_seeding_prefix_stability():
    # The i-th resample depends only on (seed, i): manually recompute the
    # first resamples for two different B and check they coincide.
    runs_a, runs_b, truth = _shift_fixture()
    brokers = sorted(truth)

    def draw(i, m=50, seed=9):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
        return [brokers[j] for j in rng.integers(0, len(brokers), size=m)]

    first_run = [draw(i) for i in range(10)]
    second_run = [draw(i) for i in range(10)]
    assert first_run == second_run


def test_metric_undefined_on_full_set_is_an_error():
    truth = {"a": label_map(), "b": label_map()}
    runs = {"a": label_map(), "b": label_map()}
    with pytest.raises(EvaluationError):
        bootstrap_delta(
            micro_metric("precision"), runs, runs, truth, m=2, B=10, seed=0
        )


def test_bootstrap_runtime_budget():
    import time

    runs_a, runs_b, truth = _shift_fixture()
    start = time.monotonic()
    bootstrap_delta(micro_metric("precision"), runs_a, runs_b, truth, m=50, B=1000, seed=1)
    assert time.monotonic() - start < 10.0


# ---------------------------------------------------------------------------
# prevalence
# ---------------------------------------------------------------------------

def test_zero_positives_gives_point_interval():
    reports = {f"b{i}": verified_report(f"b{i}") for i in range(5)}
    estimate = prevalence(reports)
    p, low, high = estimate.row(CAT)
    assert (p, low, high) == (0.0, 0.0, 0.0)


def test_even_split_interval():
    low, high = wald_interval(0.5, 100)
    assert low == pytest.approx(0.402, abs=1e-9)
    assert high == pytest.approx(0.598, abs=1e-9)


def test_wald_half_width_matches_formula_to_1e12():
    for p_hat, n in ((0.5, 100), (0.25, 81), (45 / 81, 81), (0.9, 33)):
        low, high = wald_interval(p_hat, n)
        if low > 0 and high < 1:  # unclamped
            half = (high - low) / 2
            assert abs(half - 1.96 * math.sqrt(p_hat * (1 - p_hat) / n)) < 1e-12


def test_interval_clamped_to_unit_range():
    low, high = wald_interval(0.01, 10)
    assert low == 0.0 and 0.0 < high < 1.0


def test_prevalence_excludes_failed_runs_by_construction():
    good = verified_report("ok")
    bad = AuditReport(
        broker_id="bad",
        detected_channels=(),
        form_fields=(),
        labels=label_map(),
        findings=(),
        completion=CompletionStatus(True, False, "failed"),
        failure=FailureReport(FailureCategory.NAVIGATION_FAILURE, (), "lost"),
        metadata=good.metadata,
    )
    with pytest.raises(UnverifiedRunError):
        prevalence({"ok": good, "bad": bad})


def test_prevalence_requires_runs():
    with pytest.raises(EvaluationError):
        prevalence({})
