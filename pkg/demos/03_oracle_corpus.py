"""Synthetic corpora as exact ground truth.

Generates a corpus shaped like field-observed prevalence, shows the quota
assignment tracking the target mix, and demonstrates the oracle property:
the detector reproduces the planted category set on every portal.
"""

from roa_audit.detector import detect_all
from roa_audit.synth import DEFAULT_CORPUS_MIX, generate_corpus
from roa_audit.taxonomy import Category

N = 120
items = generate_corpus(N, seed=2024)

print(f"{'category':24s} {'target':>7s} {'planted':>8s}")
for category in Category:
    target = DEFAULT_CORPUS_MIX.category_rates[category]
    planted = sum(1 for item in items if item.labels[category]) / N
    print(f"{category.value:24s} {target:7.1%} {planted:8.1%}")

mismatches = 0
for item in items:
    report = detect_all(item.trace)
    detected = {c for c, v in report.labels.items() if v}
    planted = {c for c, v in item.labels.items() if v}
    if detected != planted:
        mismatches += 1
print(f"\noracle round-trip over {N} portals: {mismatches} mismatches")

sample = items[0]
print(f"\nfirst portal ({sample.trace.broker_id}):")
print(f"  pages: {len(sample.trace.pages)}, planted: {sample.planted_subtypes or '(benign)'}")
