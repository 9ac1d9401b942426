"""Driving portals through the interaction protocol, faults included.

A clean run locates the policy, extracts guidance, opens the form, and
exposes every field without ever submitting. Injected faults become
classified failure reports, and a failure report always overrides the
session's own idea of success.
"""

from dataclasses import replace

from roa_audit.harness import failure_rates, run_protocol
from roa_audit.synth import Fault, FaultKind, FaultPlan, PlantSpec, generate, inject_faults

trace = generate(PlantSpec("harness-demo", 33))

print("== clean run")
session, outcome = run_protocol(inject_faults(trace, FaultPlan()))
print(f"   verified success: {outcome.completion.verified_success}")
print(f"   channels seen: {[c.value for c in outcome.detected_channels]}")
print(f"   form fields exposed: {list(outcome.form_fields)}")
print(f"   steps taken: {len(session.step_log)}, submits: {session.submit_count}")

print("\n== one run per fault kind")
outcomes = []
for fault in [
    Fault(FaultKind.CRASH_AT_STEP, step=2),
    Fault(FaultKind.TIMEOUT_AT_STEP, step=1),
    Fault(FaultKind.CAPTCHA_PAGE),
    Fault(FaultKind.MALFORMED_INTERNAL_STATE),
    Fault(FaultKind.PDF_ONLY_INSTRUCTIONS),
    Fault(FaultKind.BROKEN_POLICY_LINK),
]:
    _session, outcome = run_protocol(inject_faults(trace, FaultPlan((fault,))))
    outcomes.append(outcome)
    print(f"   {fault.kind.value:26s} -> {outcome.failure.category.value}")

print("\n== the internal flag is not trusted")
multi = replace(trace, forms=tuple(replace(f, multi_page=True) for f in trace.forms))
blueprint = inject_faults(multi, FaultPlan((Fault(FaultKind.UNEXPOSED_FORM_PAGE),)))
_session, outcome = run_protocol(blueprint)
outcomes.append(outcome)
print(f"   internal_success: {outcome.completion.internal_success}")
print(f"   verified_success: {outcome.completion.verified_success}")
print(f"   reason: {outcome.completion.reason}")

print("\n== failure shares (over failed runs only)")
for category, share in failure_rates(outcomes).items():
    print(f"   {category.value:26s} {share:.1%}")
