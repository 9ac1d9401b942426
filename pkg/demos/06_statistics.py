"""The evaluation stack: confusion metrics, agreement, bootstrap, prevalence.

Numbers here are driven by a small constructed fixture so every value can
be checked by hand.
"""

from roa_audit.evaluation import (
    CellCounts,
    ConfusionCounts,
    bootstrap_delta,
    classification_metrics,
    cohen_kappa,
    micro_metric,
    wald_interval,
)
from roa_audit.taxonomy import Category

CAT = Category.CREATING_BARRIERS

print("== classification metrics on tp=2 fp=1 fn=1 tn=4")
metrics = classification_metrics(
    ConfusionCounts({CAT: CellCounts(tp=2, fp=1, fn=1, tn=4)})
).per_category[CAT]
print(f"   accuracy={metrics.accuracy.value:.4f} precision={metrics.precision.value:.4f}")
print(f"   recall={metrics.recall.value:.4f} f1={metrics.f1.value:.4f}")

print("\n== chance-corrected agreement")
print(f"   balanced disagreement: {cohen_kappa([1, 1, 0, 0], [1, 0, 0, 1])}")
print(f"   constant opposed raters: {cohen_kappa([1, 1], [0, 0])}")
print(f"   self-agreement: {cohen_kappa([1, 0, 1], [1, 0, 1])}")

print("\n== bootstrap delta (B=1000 resamples of m=50 with replacement)")


def label_map(present: bool) -> dict:
    return {c: (c is CAT and present) for c in Category}


truth = {f"b{i:03d}": label_map(i < 50) for i in range(100)}
runs_a = {b: label_map(True) for b in truth}  # everything present: 50 fp
runs_b = dict(runs_a)
for i in range(50, 60):  # the second configuration repairs 10 fp
    runs_b[f"b{i:03d}"] = label_map(False)

delta = bootstrap_delta(
    micro_metric("precision"), runs_a, runs_b, truth,
    m=50, B=1000, seed=7, metric_name="precision",
)
print(f"   delta precision = {delta.delta:+.4f}")
print(f"   95% CI [{delta.ci_low:.4f}, {delta.ci_high:.4f}]  significant={delta.significant}")

print("\n== prevalence intervals (normal approximation, clamped)")
for positives, n in ((0, 50), (50, 100), (45, 81)):
    low, high = wald_interval(positives / n, n)
    print(f"   {positives}/{n}: p={positives / n:.3f} CI [{low:.3f}, {high:.3f}]")
