"""One planted portal per category, and what the rule engine says about it.

Every finding carries the two-part rationale: the reasonable expectation
the interface violated, and the mechanism through which it impaired the
request. Quotes in the evidence always resolve against the trace.
"""

from roa_audit.detector import detect_all
from roa_audit.synth import PlantSpec, PortalShape, generate, plant, required_page_count
from roa_audit.taxonomy import Category

SHOWCASE = [
    "identifier_fragmentation",
    "submission_path_conflict",
    "excessive_identity_verification",
    "instruction_outcome_mismatch",
    "selective_omission",
    "misdirect_pathways",
    "cross_page_fragmentation",
    "competing_cta_dominance",
]

for subtype_id in SHOWCASE:
    plants = frozenset({plant(subtype_id)})
    spec = PlantSpec(
        broker_id=f"tour-{subtype_id}",
        seed=11,
        plants=plants,
        shape=PortalShape(page_count=max(3, required_page_count(plants))),
    )
    report = detect_all(generate(spec))
    present = [c.value for c in Category if report.labels[c]]
    print(f"== planted {subtype_id}")
    print(f"   categories present: {present}")
    for finding in report.findings:
        print(f"   mechanism: {finding.subtype.name}")
        print(f"   expectation violated: {finding.assessment.expectation_violation}")
        for ref in finding.evidence:
            print(f"   evidence ({ref.page_id} / {ref.element_or_disclosure_id}):")
            print(f"     \"{ref.quote[:72]}\"")
    print()
