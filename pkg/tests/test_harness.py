"""Portal sessions: protocol execution, verification, failure taxonomy."""

from __future__ import annotations

from dataclasses import replace

import pytest

from roa_audit.harness import (
    AuditOutcome,
    NoFailedRunsError,
    PortalSession,
    RawIssue,
    audit_with_detector,
    classify_failure,
    failure_rates,
    run_protocol,
    verify_completion,
)
from roa_audit.outcomes import CompletionStatus, FailureCategory
from roa_audit.synth import (
    Fault,
    FaultKind,
    FaultPlan,
    PlantSpec,
    PortalShape,
    generate,
    inject_faults,
    plant,
)
from roa_audit.taxonomy import Category


def portal(seed=5, plants=frozenset(), page_count=4, multi_page=False):
    spec = PlantSpec(
        "harness-demo",
        seed,
        plants=plants,
        shape=PortalShape(page_count=page_count, benign_padding_sections=1),
    )
    trace = generate(spec)
    if multi_page:
        trace = replace(
            trace, forms=tuple(replace(f, multi_page=True) for f in trace.forms)
        )
    return trace


def test_benign_portal_completes_with_fields_enumerated():
    trace = portal()
    session, outcome = run_protocol(inject_faults(trace, FaultPlan()))
    assert outcome.completion.internal_success
    assert outcome.completion.verified_success
    assert outcome.failure is None
    assert outcome.form_fields == ("Full name", "Email address")
    assert session.submit_count == 0


def test_multi_page_form_fully_exposed_on_clean_run():
    trace = portal(multi_page=True)
    session, outcome = run_protocol(inject_faults(trace, FaultPlan()))
    assert outcome.completion.verified_success
    assert outcome.form_fields == ("Full name", "Email address")
    assert session.unexposed_forms() == []


def test_step_log_is_deterministic():
    trace = portal(seed=9)
    blueprint = inject_faults(trace, FaultPlan())
    log_a = run_protocol(blueprint)[0].step_log
    log_b = run_protocol(blueprint)[0].step_log
    assert log_a == log_b


@pytest.mark.parametrize(
    "fault,expected",
    [
        (Fault(FaultKind.CRASH_AT_STEP, 2), FailureCategory.AUTOMATION_INSTABILITY),
        (Fault(FaultKind.TIMEOUT_AT_STEP, 1), FailureCategory.AUTOMATION_INSTABILITY),
        (Fault(FaultKind.MALFORMED_INTERNAL_STATE), FailureCategory.AGENT_INSTABILITY),
        (Fault(FaultKind.CAPTCHA_PAGE), FailureCategory.SECURITY_BARRIER),
        (Fault(FaultKind.PDF_ONLY_INSTRUCTIONS), FailureCategory.CONTENT_FORMAT_LIMITATION),
        (Fault(FaultKind.BROKEN_POLICY_LINK), FailureCategory.NAVIGATION_FAILURE),
    ],
)
def test_fault_maps_to_its_category(fault, expected):
    trace = portal()
    _session, outcome = run_protocol(inject_faults(trace, FaultPlan((fault,))))
    assert outcome.failure is not None
    assert outcome.failure.category is expected
    assert not outcome.completion.verified_success


def test_unexposed_form_page_overrides_internal_success():
    trace = portal(multi_page=True)
    blueprint = inject_faults(trace, FaultPlan((Fault(FaultKind.UNEXPOSED_FORM_PAGE),)))
    session, outcome = run_protocol(blueprint)
    # The session believed it finished; verification says otherwise.
    assert outcome.completion.internal_success is True
    assert outcome.completion.verified_success is False
    assert outcome.failure is not None
    assert outcome.failure.category is FailureCategory.INTERACTION_FAILURE


def test_verify_completion_overrides_on_any_failure_report():
    trace = portal()
    blueprint = inject_faults(trace, FaultPlan())
    session, outcome = run_protocol(blueprint)
    tampered = replace(
        outcome,
        failure=classify_failure(
            session, RawIssue(FaultKind.CAPTCHA_PAGE, 3, "blocked")
        ),
    )
    session.internal_success = True
    status = verify_completion(session, tampered)
    assert status.internal_success is True
    assert status.verified_success is False
    assert "failure report" in status.reason


def test_budget_exhaustion_is_automation_instability():
    trace = portal(page_count=5)
    _session, outcome = run_protocol(inject_faults(trace, FaultPlan()), budget=1)
    assert outcome.failure is not None
    assert outcome.failure.category is FailureCategory.AUTOMATION_INSTABILITY
    assert not outcome.completion.verified_success


def test_unmapped_issue_lands_in_agent_instability_for_review():
    trace = portal()
    session = PortalSession(inject_faults(trace, FaultPlan()), budget=10)
    report = classify_failure(session, RawIssue("cosmic_rays", 2, "bit flip"))
    assert report.category is FailureCategory.AGENT_INSTABILITY
    assert "flagged for review" in report.narrative


def test_captcha_before_form_blocks_the_run():
    trace = portal()
    blueprint = inject_faults(trace, FaultPlan((Fault(FaultKind.CAPTCHA_PAGE),)))
    session, outcome = run_protocol(blueprint)
    assert outcome.failure.category is FailureCategory.SECURITY_BARRIER
    # the form page was never entered
    assert session.cursor != trace.forms[0].page_id


def test_no_submission_guarantee_across_runs():
    total_submits = 0
    for seed in range(6):
        trace = portal(seed=seed)
        session, _outcome = run_protocol(inject_faults(trace, FaultPlan()))
        total_submits += session.submit_count
    assert total_submits == 0


def test_failure_rates_counting_oracle():
    def fake_outcome(category):
        from roa_audit.outcomes import FailureReport

        return AuditOutcome(
            broker_id="x",
            completion=CompletionStatus(False, False, "failed"),
            failure=FailureReport(category, (), "injected"),
            detected_channels=(),
            form_fields=(),
            metadata=None,
        )

    outcomes = [
        fake_outcome(FailureCategory.AUTOMATION_INSTABILITY),
        fake_outcome(FailureCategory.AUTOMATION_INSTABILITY),
        fake_outcome(FailureCategory.SECURITY_BARRIER),
        fake_outcome(FailureCategory.INTERACTION_FAILURE),
    ]
    rates = failure_rates(outcomes)
    assert rates == {
        FailureCategory.AUTOMATION_INSTABILITY: 0.5,
        FailureCategory.INTERACTION_FAILURE: 0.25,
        FailureCategory.SECURITY_BARRIER: 0.25,
    }
    assert abs(sum(rates.values()) - 1.0) < 1e-9


def test_failure_rates_reject_all_completed():
    trace = portal()
    _session, outcome = run_protocol(inject_faults(trace, FaultPlan()))
    with pytest.raises(NoFailedRunsError):
        failure_rates([outcome])


def test_single_failure_rate_is_one():
    trace = portal()
    blueprint = inject_faults(trace, FaultPlan((Fault(FaultKind.CAPTCHA_PAGE),)))
    _session, outcome = run_protocol(blueprint)
    rates = failure_rates([outcome])
    assert rates == {FailureCategory.SECURITY_BARRIER: 1.0}


def test_gated_entry_portal_is_still_traversable():
    trace = portal(plants=frozenset({plant("interaction_gated_disclosure")}))
    session, outcome = run_protocol(inject_faults(trace, FaultPlan()))
    assert outcome.completion.verified_success
    assert session.submit_count == 0


def test_deep_maze_portal_completes_with_enough_budget():
    trace = portal(
        plants=frozenset({plant("excessive_navigational_depth")}), page_count=5
    )
    _session, outcome = run_protocol(inject_faults(trace, FaultPlan()), budget=40)
    assert outcome.completion.verified_success
    assert outcome.form_fields


def test_audit_with_detector_classifies_completed_runs():
    trace = portal(plants=frozenset({plant("coupled_outcomes")}))
    outcome, report = audit_with_detector(inject_faults(trace, FaultPlan()))
    assert report.completion.verified_success
    assert report.labels[Category.FEEDFORWARD_AMBIGUITY] is True
    assert report.metadata.step_count == outcome.metadata.step_count


def test_session_log_document_shape():
    from roa_audit.harness import session_log_doc

    trace = portal(seed=14)
    blueprint = inject_faults(trace, FaultPlan((Fault(FaultKind.CAPTCHA_PAGE),)))
    session, outcome = run_protocol(blueprint)
    doc = session_log_doc(session, outcome)
    assert doc["schema_version"] == 1
    assert doc["broker_id"] == trace.broker_id
    assert doc["failure"]["category"] == "SecurityBarrier"
    assert doc["submit_count"] == 0
    assert [s["index"] for s in doc["steps"]] == list(range(len(doc["steps"])))
    assert doc["outcome"]["verified_success"] is False


def test_audit_with_detector_skips_failed_runs():
    trace = portal()
    blueprint = inject_faults(trace, FaultPlan((Fault(FaultKind.CAPTCHA_PAGE),)))
    _outcome, report = audit_with_detector(blueprint)
    assert not report.completion.verified_success
    assert report.failure is not None
    assert all(not v for v in report.labels.values())
