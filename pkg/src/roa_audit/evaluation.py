"""The statistical evaluation stack: confusion metrics, explanation
accuracy, agreement, bootstrap deltas, and prevalence intervals.

Every operation here enforces the exclusion rule: runs that did not
verifiably complete are rejected at the door, so reported numbers always
describe classification within completed workflows rather than failure
rates. Ratios with zero denominators are reported as absent with a stated
reason, never silently as zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .taxonomy import AuditReport, Category
from .trace import EvidenceResolutionError, WorkflowTrace, resolve_evidence

__all__ = [
    "LabelMap",
    "CellCounts",
    "ConfusionCounts",
    "MetricValue",
    "CategoryMetrics",
    "MetricsReport",
    "BootstrapDelta",
    "PrevalenceEstimate",
    "EvaluationError",
    "UnverifiedRunError",
    "BrokerMismatchError",
    "confusion",
    "confusion_from_labels",
    "classification_metrics",
    "explanation_accuracy",
    "cohen_kappa",
    "bootstrap_delta",
    "explanation_metric",
    "explanation_accuracy_detail",
    "prevalence",
    "wald_interval",
    "micro_metric",
    "labels_of",
]

LabelMap = Mapping[Category, bool]

Z_95 = 1.96


class EvaluationError(ValueError):
    pass


class UnverifiedRunError(EvaluationError):
    """An input run was not verifiably completed; it must be excluded."""


class BrokerMismatchError(EvaluationError):
    """Prediction and truth cover different broker sets."""


@dataclass(frozen=True)
class CellCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "CellCounts") -> "CellCounts":
        return CellCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
        )


@dataclass(frozen=True)
class ConfusionCounts:
    per_category: Mapping[Category, CellCounts]

    def aggregate(self) -> CellCounts:
        total = CellCounts()
        for counts in self.per_category.values():
            total = total + counts
        return total


@dataclass(frozen=True)
class MetricValue:
    """A ratio in [0, 1], or absent with the reason it is undefined."""

    value: Optional[float]
    reason: Optional[str] = None

    @property
    def defined(self) -> bool:
        return self.value is not None

    @staticmethod
    def of(value: float) -> "MetricValue":
        return MetricValue(value=value, reason=None)

    @staticmethod
    def absent(reason: str) -> "MetricValue":
        return MetricValue(value=None, reason=reason)


@dataclass(frozen=True)
class CategoryMetrics:
    accuracy: MetricValue
    precision: MetricValue
    recall: MetricValue
    f1: MetricValue
    explanation_accuracy: MetricValue = field(
        default_factory=lambda: MetricValue.absent("not computed")
    )


@dataclass(frozen=True)
class MetricsReport:
    per_category: Mapping[Category, CategoryMetrics]
    aggregate: CategoryMetrics
    explanation_accuracy: MetricValue
    n_evaluated: int
    excluded_failed_runs: int = 0


def labels_of(report: AuditReport) -> dict[Category, bool]:
    return {category: bool(report.labels.get(category, False)) for category in Category}


def _require_verified(reports: Mapping[str, AuditReport]) -> None:
    bad = sorted(
        broker
        for broker, report in reports.items()
        if not report.completion.verified_success
    )
    if bad:
        raise UnverifiedRunError(
            f"{len(bad)} run(s) without verified completion included "
            f"(first: {bad[0]}); exclude failed runs before evaluation"
        )


def _require_same_brokers(a: Mapping[str, object], b: Mapping[str, object]) -> None:
    if set(a.keys()) != set(b.keys()):
        only_a = sorted(set(a.keys()) - set(b.keys()))[:3]
        only_b = sorted(set(b.keys()) - set(a.keys()))[:3]
        raise BrokerMismatchError(
            f"broker sets differ (only in predictions: {only_a}, "
            f"only in truth: {only_b})"
        )


def confusion_from_labels(
    predictions: Mapping[str, LabelMap],
    truth: Mapping[str, LabelMap],
    brokers: Optional[Sequence[str]] = None,
) -> ConfusionCounts:
    """Exact counting over aligned label maps. ``brokers`` may repeat ids
    (bootstrap resamples are multisets); defaults to every broker once."""
    _require_same_brokers(predictions, truth)
    roster: Sequence[str] = (
        sorted(predictions.keys()) if brokers is None else brokers
    )
    cells = {category: [0, 0, 0, 0] for category in Category}
    for broker in roster:
        pred = predictions[broker]
        true = truth[broker]
        for category in Category:
            p = bool(pred.get(category, False))
            t = bool(true.get(category, False))
            if p and t:
                cells[category][0] += 1
            elif p and not t:
                cells[category][1] += 1
            elif not p and t:
                cells[category][2] += 1
            else:
                cells[category][3] += 1
    return ConfusionCounts(
        per_category={
            category: CellCounts(*counts) for category, counts in cells.items()
        }
    )


def confusion(
    predictions: Mapping[str, AuditReport],
    truth: Mapping[str, LabelMap],
) -> ConfusionCounts:
    """Per-category confusion counts for verified-completed reports against
    ground-truth labels covering the same brokers."""
    _require_verified(predictions)
    _require_same_brokers(predictions, truth)
    return confusion_from_labels(
        {broker: labels_of(report) for broker, report in predictions.items()},
        truth,
    )


def _ratio(numerator: int, denominator: int, what: str) -> MetricValue:
    if denominator == 0:
        return MetricValue.absent(f"{what} undefined: zero denominator")
    return MetricValue.of(numerator / denominator)


def _cell_metrics(cell: CellCounts) -> CategoryMetrics:
    accuracy = _ratio(cell.tp + cell.tn, cell.total, "accuracy")
    precision = _ratio(cell.tp, cell.tp + cell.fp, "precision")
    recall = _ratio(cell.tp, cell.tp + cell.fn, "recall")
    if not precision.defined or not recall.defined:
        f1 = MetricValue.absent("f1 undefined: precision or recall undefined")
    elif precision.value + recall.value == 0:
        f1 = MetricValue.absent("f1 undefined: precision + recall is zero")
    else:
        f1 = MetricValue.of(
            2 * precision.value * recall.value / (precision.value + recall.value)
        )
    return CategoryMetrics(accuracy, precision, recall, f1)


def classification_metrics(
    counts: ConfusionCounts,
    explanation: MetricValue = MetricValue.absent("not computed"),
    per_category_explanation: Optional[Mapping[Category, MetricValue]] = None,
    excluded_failed_runs: int = 0,
) -> MetricsReport:
    """Accuracy, precision, recall, and F1 per category plus the
    micro-average over all (broker, category) pairs."""
    per_exp = per_category_explanation or {}
    per_category = {}
    for category, cell in counts.per_category.items():
        base = _cell_metrics(cell)
        per_category[category] = CategoryMetrics(
            base.accuracy,
            base.precision,
            base.recall,
            base.f1,
            per_exp.get(category, MetricValue.absent("not computed")),
        )
    aggregate_cell = counts.aggregate()
    base = _cell_metrics(aggregate_cell)
    aggregate = CategoryMetrics(
        base.accuracy, base.precision, base.recall, base.f1, explanation
    )
    return MetricsReport(
        per_category=per_category,
        aggregate=aggregate,
        explanation_accuracy=explanation,
        n_evaluated=aggregate_cell.total,
        excluded_failed_runs=excluded_failed_runs,
    )


def _explanation_cells(
    reports: Mapping[str, AuditReport],
    truth: Mapping[str, LabelMap],
    truth_subtypes: Mapping[str, Mapping[Category, frozenset[str]]],
    traces: Mapping[str, WorkflowTrace],
) -> dict[Category, tuple[int, int]]:
    """(true-positive pairs, correctly explained pairs) per category."""
    cells = {category: [0, 0] for category in Category}
    for broker in sorted(reports.keys()):
        report = reports[broker]
        pred = labels_of(report)
        trace = traces.get(broker)
        for category in Category:
            if not (pred[category] and truth[broker].get(category, False)):
                continue
            cells[category][0] += 1
            findings = [f for f in report.findings if f.category is category]
            if not findings or trace is None:
                continue
            resolved = True
            for finding in findings:
                for ref in finding.evidence:
                    try:
                        resolve_evidence(trace, ref)
                    except EvidenceResolutionError:
                        resolved = False
                        break
                if not resolved:
                    break
            expected = truth_subtypes.get(broker, {}).get(category, frozenset())
            matched = any(
                f.assessment.harm_mechanism.subtype_id in expected
                for f in findings
            )
            if resolved and matched:
                cells[category][1] += 1
    return {c: (t, k) for c, (t, k) in cells.items()}


def explanation_accuracy_detail(
    reports: Mapping[str, AuditReport],
    truth: Mapping[str, LabelMap],
    truth_subtypes: Mapping[str, Mapping[Category, frozenset[str]]],
    traces: Mapping[str, WorkflowTrace],
) -> tuple[MetricValue, dict[Category, MetricValue]]:
    """Aggregate and per-category explanation accuracy in one pass."""
    _require_verified(reports)
    _require_same_brokers(reports, truth)
    cells = _explanation_cells(reports, truth, truth_subtypes, traces)
    per_category = {}
    for category, (total, correct) in cells.items():
        if total == 0:
            per_category[category] = MetricValue.absent(
                "explanation accuracy undefined: no true-positive pairs"
            )
        else:
            per_category[category] = MetricValue.of(correct / total)
    grand_total = sum(t for t, _k in cells.values())
    grand_correct = sum(k for _t, k in cells.values())
    if grand_total == 0:
        aggregate = MetricValue.absent(
            "explanation accuracy undefined: no true-positive pairs"
        )
    else:
        aggregate = MetricValue.of(grand_correct / grand_total)
    return aggregate, per_category


def explanation_accuracy(
    reports: Mapping[str, AuditReport],
    truth: Mapping[str, LabelMap],
    truth_subtypes: Mapping[str, Mapping[Category, frozenset[str]]],
    traces: Mapping[str, WorkflowTrace],
) -> MetricValue:
    """Among true-positive (broker, category) pairs: the share whose
    findings both resolve all cited evidence against the trace and name a
    ground-truth mechanism for that pair (any-match when several exist)."""
    aggregate, _per_category = explanation_accuracy_detail(
        reports, truth, truth_subtypes, traces
    )
    return aggregate


# ---------------------------------------------------------------------------
# Agreement
# ---------------------------------------------------------------------------

def cohen_kappa(
    labels_a: Sequence[Union[bool, int]], labels_b: Sequence[Union[bool, int]]
) -> float:
    """Chance-corrected agreement on aligned binary label vectors.

    kappa = (p_o - p_e) / (1 - p_e), with chance agreement computed from
    the pooled positive rate of the two raters, so that two constant raters
    who always disagree score -1. When p_e = 1 (both raters constant and
    identical) the value is defined as 1.0, keeping kappa(a, a) total.
    """
    if len(labels_a) == 0 or len(labels_b) == 0:
        raise EvaluationError("label vectors must be nonempty")
    if len(labels_a) != len(labels_b):
        raise EvaluationError(
            f"label vectors differ in length ({len(labels_a)} vs {len(labels_b)})"
        )
    a = [bool(x) for x in labels_a]
    b = [bool(x) for x in labels_b]
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    pooled = (sum(a) + sum(b)) / (2 * n)
    p_e = pooled * pooled + (1 - pooled) * (1 - pooled)
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1 - p_e)


# ---------------------------------------------------------------------------
# Bootstrap
# ---------------------------------------------------------------------------

MetricFn = Callable[
    [Mapping[str, LabelMap], Mapping[str, LabelMap], Sequence[str]],
    Optional[float],
]


def micro_metric(name: str) -> MetricFn:
    """Metric function over a broker multiset: micro-averaged accuracy,
    precision, recall, or f1. Returns None where undefined."""
    if name not in ("accuracy", "precision", "recall", "f1"):
        raise EvaluationError(f"unknown metric {name!r}")

    def fn(
        predictions: Mapping[str, LabelMap],
        truth: Mapping[str, LabelMap],
        brokers: Sequence[str],
    ) -> Optional[float]:
        cell = confusion_from_labels(predictions, truth, brokers).aggregate()
        metrics = _cell_metrics(cell)
        return getattr(metrics, name).value

    return fn


def explanation_metric(
    reports: Mapping[str, AuditReport],
    truth: Mapping[str, LabelMap],
    truth_subtypes: Mapping[str, Mapping[Category, frozenset[str]]],
    traces: Mapping[str, WorkflowTrace],
) -> MetricFn:
    """Bootstrap-ready explanation accuracy: per-broker true-positive and
    correct-pair counts are precomputed once, then aggregated over any
    broker multiset."""
    per_broker: dict[str, tuple[int, int]] = {}
    for broker, report in reports.items():
        pred = labels_of(report)
        trace = traces.get(broker)
        tp_pairs = 0
        correct = 0
        for category in Category:
            if not (pred[category] and truth.get(broker, {}).get(category, False)):
                continue
            tp_pairs += 1
            findings = [f for f in report.findings if f.category is category]
            if not findings or trace is None:
                continue
            resolved = True
            for finding in findings:
                for ref in finding.evidence:
                    try:
                        resolve_evidence(trace, ref)
                    except EvidenceResolutionError:
                        resolved = False
                        break
                if not resolved:
                    break
            expected = truth_subtypes.get(broker, {}).get(category, frozenset())
            matched = any(
                f.assessment.harm_mechanism.subtype_id in expected for f in findings
            )
            if resolved and matched:
                correct += 1
        per_broker[broker] = (tp_pairs, correct)

    def fn(
        _predictions: Mapping[str, LabelMap],
        _truth: Mapping[str, LabelMap],
        brokers: Sequence[str],
    ) -> Optional[float]:
        total = sum(per_broker.get(b, (0, 0))[0] for b in brokers)
        good = sum(per_broker.get(b, (0, 0))[1] for b in brokers)
        if total == 0:
            return None
        return good / total

    return fn


@dataclass(frozen=True)
class BootstrapDelta:
    metric: str
    delta: float
    ci_low: float
    ci_high: float
    significant: bool
    resamples: int
    sample_size: int
    seed: int


def bootstrap_delta(
    metric_fn: MetricFn,
    runs_a: Mapping[str, LabelMap],
    runs_b: Mapping[str, LabelMap],
    truth: Mapping[str, LabelMap],
    m: int = 50,
    B: int = 1000,
    seed: int = 0,
    metric_name: str = "metric",
    max_redraws: Optional[int] = None,
    metric_fn_b: Optional[MetricFn] = None,
) -> BootstrapDelta:
    """Paired bootstrap of the metric difference (B minus A).

    Each of the B resamples draws m brokers with replacement (the broker
    set may be smaller than m), evaluates the metric on both configurations
    over the identical resample, and records the difference. The interval
    is the empirical 2.5/97.5 percentile band; the difference is
    significant exactly when the band excludes zero.

    Seeding is streamed per resample: widening B leaves earlier resamples'
    draws unchanged for the same seed. Resamples on which the metric is
    undefined for either configuration are redrawn, up to ``max_redraws``
    (default 10*B) across the whole run.

    ``metric_fn_b`` supports metrics that need side-specific context
    (for example explanation accuracy, which reads each configuration's
    findings): when given, it scores configuration B while ``metric_fn``
    scores configuration A.
    """
    _require_same_brokers(runs_a, truth)
    _require_same_brokers(runs_b, truth)
    if m < 1:
        raise EvaluationError("m must be >= 1")
    if B < 1:
        raise EvaluationError("B must be >= 1")
    brokers = sorted(truth.keys())
    if not brokers:
        raise EvaluationError("no brokers to resample")
    redraw_budget = 10 * B if max_redraws is None else max_redraws
    fn_b = metric_fn_b if metric_fn_b is not None else metric_fn

    full_a = metric_fn(runs_a, truth, brokers)
    full_b = fn_b(runs_b, truth, brokers)
    if full_a is None or full_b is None:
        raise EvaluationError(
            f"{metric_name} undefined on the full broker set"
        )

    deltas = np.empty(B, dtype=float)
    redraws = 0
    roster = np.asarray(brokers, dtype=object)
    for i in range(B):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=seed, spawn_key=(i,))
        )
        while True:
            sample = [roster[j] for j in rng.integers(0, len(roster), size=m)]
            value_a = metric_fn(runs_a, truth, sample)
            value_b = fn_b(runs_b, truth, sample)
            if value_a is not None and value_b is not None:
                deltas[i] = value_b - value_a
                break
            redraws += 1
            if redraws > redraw_budget:
                raise EvaluationError(
                    f"{metric_name} undefined on too many resamples "
                    f"({redraws} redraws; budget {redraw_budget})"
                )
    ci_low, ci_high = np.percentile(deltas, [2.5, 97.5])
    return BootstrapDelta(
        metric=metric_name,
        delta=full_b - full_a,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        significant=not (ci_low <= 0.0 <= ci_high),
        resamples=B,
        sample_size=m,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Prevalence
# ---------------------------------------------------------------------------

def wald_interval(p_hat: float, n: int) -> tuple[float, float]:
    """95% normal-approximation interval, clamped to [0, 1]."""
    if n <= 0:
        raise EvaluationError("n must be positive")
    half = Z_95 * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return (max(0.0, p_hat - half), min(1.0, p_hat + half))


@dataclass(frozen=True)
class PrevalenceEstimate:
    per_category: Mapping[Category, tuple[float, float, float]]
    n: int

    def row(self, category: Category) -> tuple[float, float, float]:
        """(p_hat, ci_low, ci_high) for one category."""
        return self.per_category[category]


def prevalence(reports: Mapping[str, AuditReport]) -> PrevalenceEstimate:
    """Per-category share of verified-completed workflows labeled present,
    with 95% Wald intervals. Workflows that did not complete never reach
    this function's denominator."""
    _require_verified(reports)
    n = len(reports)
    if n == 0:
        raise EvaluationError("prevalence requires at least one completed run")
    rows: dict[Category, tuple[float, float, float]] = {}
    for category in Category:
        positives = sum(
            1 for report in reports.values() if labels_of(report)[category]
        )
        p_hat = positives / n
        low, high = wald_interval(p_hat, n)
        rows[category] = (p_hat, low, high)
    return PrevalenceEstimate(per_category=rows, n=n)
