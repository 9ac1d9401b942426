"""Executable portal sessions: the four-step interaction protocol with
completion verification and six-way failure classification.

A :class:`~roa_audit.synth.PortalBlueprint` replays a recorded portal as a
navigation state machine. :func:`run_protocol` drives it with a scripted
policy: locate the policy page, extract submission guidance, open the
online submission mechanism, and expose every input field including
multi-page continuations. The session never submits: requests stop at the
last pre-submission step, and the portal's terminal submit transition count
is observable precisely so tests can assert it stayed at zero.

An internal success flag alone is not trusted. Verification re-derives
completion from the session: any failure report, or any form stage left
unexposed, overrides the internal flag.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

from .detector import DetectorConfig, detect_all
from .outcomes import CompletionStatus, FailureCategory, FailureReport
from .synth import FaultKind, PortalBlueprint
from .taxonomy import AuditReport, Category
from .trace import (
    ChannelKind,
    ElementKind,
    FormSpec,
    InterfaceElement,
    NavigationStep,
    RunMetadata,
    StepAction,
    TraceIndex,
    normalize_label,
)

__all__ = [
    "PortalSession",
    "AuditOutcome",
    "RawIssue",
    "ScriptedPolicy",
    "run_protocol",
    "verify_completion",
    "classify_failure",
    "failure_rates",
    "audit_with_detector",
    "failed_audit_report",
    "session_log_doc",
    "NoFailedRunsError",
]

# Issue kinds the session itself can raise, beyond injected faults.
ISSUE_BUDGET_EXHAUSTED = "budget_exhausted"
ISSUE_NOT_DISCOVERABLE = "workflow_not_discoverable"


@dataclass(frozen=True)
class RawIssue:
    kind: Union[FaultKind, str]
    step: Optional[int] = None
    note: str = ""


class _FaultSignal(Exception):
    def __init__(self, issue: RawIssue):
        self.issue = issue
        super().__init__(issue.kind)


@dataclass(frozen=True)
class ScriptedPolicy:
    """Deterministic navigation strategy for the protocol.

    The built-in policy is scripted rather than model-driven: it finds the
    policy page through a heading lexicon, reads every visible disclosure,
    then walks the shortest path to the online submission mechanism. A
    remote classifier plugs in after traversal, never during it.
    """

    rights_lexicon: tuple[str, ...] = (
        "privacy",
        "rights",
        "ccpa",
        "california",
        "do not sell",
        "policy",
    )

    def matches(self, label: str) -> bool:
        norm = normalize_label(label)
        return any(term in norm for term in self.rights_lexicon)


class PortalSession:
    """One sequential walk over a replayable portal.

    The session tracks the cursor page, which gated elements have been
    revealed, which form stages are exposed, and an append-only step log.
    Distinct sessions share no mutable state.
    """

    def __init__(self, blueprint: PortalBlueprint, budget: int):
        if budget < 1:
            raise ValueError("budget must be >= 1")
        self.blueprint = blueprint
        self.trace = blueprint.trace
        self.index = TraceIndex(self.trace)
        self.budget = budget
        start = self.index.start_page
        if start is None:
            raise ValueError("blueprint trace has no start page")
        self._start_page = start
        self.cursor: str = start.page_id
        self.exposed_gates: set[str] = set()
        self.exposed_stages: dict[str, int] = {
            f.form_id: 0 for f in self.trace.forms
        }
        self.step_log: list[NavigationStep] = []
        self.fault_state: Optional[RawIssue] = None
        self.internal_success: bool = False
        self.submit_count: int = 0
        self._action_count: int = 0
        self._captcha_pages = self._pages_guarded_by_captcha()

    # -- portal transitions ---------------------------------------------------

    def _pages_guarded_by_captcha(self) -> frozenset[str]:
        if self.blueprint.fault is None or (
            self.blueprint.fault.kind is not FaultKind.CAPTCHA_PAGE
        ):
            return frozenset()
        guarded = {
            self.index.elements[c.entry_element].page_id
            for c in self.trace.channels
            if c.kind is ChannelKind.WEBFORM
            and c.entry_element is not None
            and c.entry_element in self.index.elements
        }
        guarded.update(f.page_id for f in self.trace.forms)
        return frozenset(guarded)

    def _begin_action(self) -> int:
        self._action_count += 1
        fault = self.blueprint.fault
        if fault is not None and fault.step == self._action_count:
            if fault.kind is FaultKind.CRASH_AT_STEP:
                raise _FaultSignal(
                    RawIssue(
                        fault.kind,
                        self._action_count,
                        "browser process crashed mid-interaction",
                    )
                )
            if fault.kind is FaultKind.TIMEOUT_AT_STEP:
                raise _FaultSignal(
                    RawIssue(
                        fault.kind,
                        self._action_count,
                        "execution timed out waiting for the page",
                    )
                )
        if self._action_count > self.budget:
            raise _FaultSignal(
                RawIssue(
                    ISSUE_BUDGET_EXHAUSTED,
                    self._action_count,
                    f"step budget of {self.budget} exhausted",
                )
            )
        return self._action_count

    def _log(self, action: StepAction, element_id: Optional[str], destination: str) -> None:
        self.step_log.append(
            NavigationStep(
                index=len(self.step_log),
                source_page=self.cursor,
                action=action,
                element_id=element_id,
                destination_page=destination,
            )
        )
        self.cursor = destination

    def open_start(self) -> None:
        self._begin_action()
        self._log(StepAction.OPEN_URL, None, self._start_page.page_id)

    def visible_elements(self) -> list[InterfaceElement]:
        page = self.index.pages[self.cursor]
        return [
            e
            for e in page.elements
            if e.gated_behind is None or e.gated_behind in self.exposed_gates
        ]

    def expand(self, element_id: str) -> None:
        self._begin_action()
        self.exposed_gates.add(element_id)
        self._log(StepAction.EXPAND, element_id, self.cursor)

    def click(self, element: InterfaceElement) -> None:
        step = self._begin_action()
        fault = self.blueprint.fault
        if (
            fault is not None
            and fault.kind is FaultKind.BROKEN_POLICY_LINK
            and not any(s.action is StepAction.CLICK for s in self.step_log)
        ):
            raise _FaultSignal(
                RawIssue(
                    fault.kind,
                    step,
                    f"link {element.label_text!r} returned an error page",
                )
            )
        if element.target_page is None:
            self._log(StepAction.CLICK, element.element_id, self.cursor)
            return
        if element.target_page in self._captcha_pages:
            raise _FaultSignal(
                RawIssue(
                    FaultKind.CAPTCHA_PAGE,
                    step,
                    "a CAPTCHA interstitial blocked the submission page",
                )
            )
        self._log(StepAction.CLICK, element.element_id, element.target_page)

    def read_disclosures(self) -> list[tuple[str, frozenset[ChannelKind]]]:
        """Extract submission guidance from the cursor page's sections."""
        self._begin_action()
        fault = self.blueprint.fault
        if fault is not None and fault.kind is FaultKind.PDF_ONLY_INSTRUCTIONS:
            raise _FaultSignal(
                RawIssue(
                    fault.kind,
                    self._action_count,
                    "instructions are embedded in a PDF whose text cannot "
                    "be extracted",
                )
            )
        if fault is not None and fault.kind is FaultKind.MALFORMED_INTERNAL_STATE:
            raise _FaultSignal(
                RawIssue(
                    fault.kind,
                    self._action_count,
                    "the session's planning document failed its schema check",
                )
            )
        self._log(StepAction.FILL, None, self.cursor)
        page = self.index.pages[self.cursor]
        guidance = []
        for section in page.sections:
            for disc in section.disclosures:
                if disc.declared_channels:
                    guidance.append((disc.disclosure_id, disc.declared_channels))
        return guidance

    def next_page(self, form: FormSpec) -> None:
        self._begin_action()
        self._log(StepAction.NEXT_PAGE, None, self.cursor)
        fault = self.blueprint.fault
        if fault is not None and fault.kind is FaultKind.UNEXPOSED_FORM_PAGE:
            # The control silently does nothing; the session does not notice.
            return
        self.exposed_stages[form.form_id] = self.stages_of(form)

    def expose_first_stage(self, form: FormSpec) -> None:
        if self.exposed_stages.get(form.form_id, 0) < 1:
            self.exposed_stages[form.form_id] = 1

    def submit_form(self, form: FormSpec) -> None:
        """The portal's terminal transition. The built-in protocol never
        calls this; it exists so the no-submission guarantee is testable."""
        self.submit_count += 1

    # -- derived views ----------------------------------------------------------

    @staticmethod
    def stages_of(form: FormSpec) -> int:
        return 2 if form.multi_page else 1

    def visible_fields(self, form: FormSpec) -> tuple[str, ...]:
        exposed = self.exposed_stages.get(form.form_id, 0)
        if exposed == 0:
            return ()
        if not form.multi_page or exposed >= 2:
            return tuple(f.name for f in form.fields)
        split = (len(form.fields) + 1) // 2
        return tuple(f.name for f in form.fields[:split])

    def unexposed_forms(self) -> list[FormSpec]:
        return [
            f
            for f in self.trace.forms
            if 0 < self.exposed_stages.get(f.form_id, 0) < self.stages_of(f)
        ]


@dataclass(frozen=True)
class AuditOutcome:
    """What one protocol run observed, independent of any classifier."""

    broker_id: str
    completion: CompletionStatus
    failure: Optional[FailureReport]
    detected_channels: tuple[ChannelKind, ...]
    form_fields: tuple[str, ...]
    metadata: RunMetadata


# ---------------------------------------------------------------------------
# Failure classification
# ---------------------------------------------------------------------------

_ISSUE_CATEGORY: dict[object, FailureCategory] = {
    FaultKind.CRASH_AT_STEP: FailureCategory.AUTOMATION_INSTABILITY,
    FaultKind.TIMEOUT_AT_STEP: FailureCategory.AUTOMATION_INSTABILITY,
    ISSUE_BUDGET_EXHAUSTED: FailureCategory.AUTOMATION_INSTABILITY,
    FaultKind.MALFORMED_INTERNAL_STATE: FailureCategory.AGENT_INSTABILITY,
    FaultKind.CAPTCHA_PAGE: FailureCategory.SECURITY_BARRIER,
    FaultKind.PDF_ONLY_INSTRUCTIONS: FailureCategory.CONTENT_FORMAT_LIMITATION,
    FaultKind.BROKEN_POLICY_LINK: FailureCategory.NAVIGATION_FAILURE,
    ISSUE_NOT_DISCOVERABLE: FailureCategory.NAVIGATION_FAILURE,
    FaultKind.UNEXPOSED_FORM_PAGE: FailureCategory.INTERACTION_FAILURE,
}


def classify_failure(session: PortalSession, raw_issue: RawIssue) -> FailureReport:
    """Maps an observed issue to one of the six failure categories.

    Unknown issue kinds land in AgentInstability with the narrative flagged
    for human review rather than being dropped.
    """
    category = _ISSUE_CATEGORY.get(raw_issue.kind)
    evidence: tuple[Union[int], ...] = ()
    if raw_issue.step is not None:
        evidence = (raw_issue.step,)
    if category is None:
        return FailureReport(
            category=FailureCategory.AGENT_INSTABILITY,
            evidence=evidence,
            narrative=(
                "unmapped issue flagged for review: "
                f"{raw_issue.kind} ({raw_issue.note})"
            ),
        )
    return FailureReport(
        category=category,
        evidence=evidence,
        narrative=raw_issue.note or str(raw_issue.kind),
    )


def verify_completion(
    session: PortalSession, outcome: AuditOutcome
) -> CompletionStatus:
    """Re-derives completion from the session; a failure report or an
    unexposed form stage overrides the internal success flag."""
    internal = session.internal_success
    if outcome.failure is not None:
        return CompletionStatus(
            internal_success=internal,
            verified_success=False,
            reason=(
                f"failure report present ({outcome.failure.category.value}); "
                "run treated as unsuccessful regardless of the internal flag"
            ),
        )
    unexposed = session.unexposed_forms()
    if unexposed:
        return CompletionStatus(
            internal_success=internal,
            verified_success=False,
            reason=(
                "InteractionFailure: form stages left unexposed on "
                + ", ".join(f.form_id for f in unexposed)
            ),
        )
    if not internal:
        return CompletionStatus(
            internal_success=False,
            verified_success=False,
            reason="session ended before completing the protocol",
        )
    return CompletionStatus(
        internal_success=True,
        verified_success=True,
        reason="protocol completed; every form stage exposed",
    )


# ---------------------------------------------------------------------------
# The scripted protocol
# ---------------------------------------------------------------------------

def _shortest_element_path(
    session: PortalSession, target_page: str
) -> Optional[list[InterfaceElement]]:
    """BFS over link/button elements from the cursor to a page; returns the
    elements to activate, or None when the page is not reachable."""
    idx = session.index
    frontier = [session.cursor]
    parents: dict[str, tuple[str, InterfaceElement]] = {}
    seen = {session.cursor}
    while frontier:
        nxt: list[str] = []
        for page_id in frontier:
            if page_id == target_page:
                break
            page = idx.pages[page_id]
            for element in sorted(page.elements, key=lambda e: e.element_id):
                if element.kind not in (ElementKind.LINK, ElementKind.BUTTON):
                    continue
                if element.target_page is None or element.target_page in seen:
                    continue
                seen.add(element.target_page)
                parents[element.target_page] = (page_id, element)
                nxt.append(element.target_page)
        if target_page in seen:
            break
        frontier = nxt
    if target_page not in seen:
        return None
    path: list[InterfaceElement] = []
    cursor = target_page
    while cursor != session.cursor:
        cursor, element = parents[cursor]
        path.append(element)
    path.reverse()
    return path


def _run_policy(session: PortalSession, policy: ScriptedPolicy) -> tuple[
    tuple[ChannelKind, ...], tuple[str, ...]
]:
    """Executes protocol steps (1)-(4); returns (channels seen, form fields).

    Raises :class:`_FaultSignal` for anything that prevents completion.
    """
    session.open_start()

    # (2) locate the privacy policy or rights pages.
    candidates = [
        e
        for e in session.visible_elements()
        if e.kind in (ElementKind.LINK, ElementKind.BUTTON)
        and e.target_page is not None
        and policy.matches(e.label_text)
    ]
    if not candidates:
        raise _FaultSignal(
            RawIssue(
                ISSUE_NOT_DISCOVERABLE,
                None,
                "no rights or policy pathway is discoverable from the "
                "start page",
            )
        )
    candidates.sort(key=lambda e: (-e.prominence, e.element_id))
    session.click(candidates[0])

    # (3) review the identified pages for submission guidance.
    guidance = session.read_disclosures()
    channels_seen = {kind for _disc, kinds in guidance for kind in kinds}

    # (4) open the online submission mechanism and expose its fields.
    form_fields: list[str] = []
    entry_channels = [
        c
        for c in sorted(session.trace.channels, key=lambda c: c.channel_id)
        if c.kind is ChannelKind.WEBFORM and c.reachable and c.entry_element
    ]
    for channel in entry_channels:
        channels_seen.add(channel.kind)
        entry = session.index.elements.get(channel.entry_element or "")
        if entry is None:
            continue
        if entry.page_id != session.cursor:
            path = _shortest_element_path(session, entry.page_id)
            if path is None:
                raise _FaultSignal(
                    RawIssue(
                        ISSUE_NOT_DISCOVERABLE,
                        None,
                        "the submission mechanism is not reachable through "
                        "expected navigation",
                    )
                )
            for element in path:
                if element.gated_behind is not None:
                    session.expand(element.gated_behind)
                session.click(element)
        for form in sorted(session.trace.forms, key=lambda f: f.form_id):
            if form.page_id != session.cursor:
                continue
            session.expose_first_stage(form)
            if form.multi_page:
                session.next_page(form)
            form_fields.extend(session.visible_fields(form))

    session.internal_success = True
    return tuple(sorted(channels_seen, key=lambda k: k.value)), tuple(form_fields)


def run_protocol(
    blueprint: PortalBlueprint,
    policy: Optional[ScriptedPolicy] = None,
    budget: int = 40,
) -> tuple[PortalSession, AuditOutcome]:
    """Runs the four-step interaction protocol against a portal.

    Faults never escape as exceptions at this layer; they become failure
    reports on the outcome. The returned outcome's completion status is
    already verification-adjusted.
    """
    policy = policy or ScriptedPolicy()
    session = PortalSession(blueprint, budget=budget)

    failure: Optional[FailureReport] = None
    channels: tuple[ChannelKind, ...] = ()
    fields: tuple[str, ...] = ()
    try:
        channels, fields = _run_policy(session, policy)
    except _FaultSignal as signal:
        session.fault_state = signal.issue
        failure = classify_failure(session, signal.issue)

    if failure is None and session.unexposed_forms():
        failure = classify_failure(
            session,
            RawIssue(
                FaultKind.UNEXPOSED_FORM_PAGE,
                len(session.step_log),
                "required input fields on a later form page were never "
                "exposed",
            ),
        )

    metadata = RunMetadata(
        duration_ms=120 * len(session.step_log),
        step_count=len(session.step_log),
        token_usage=None,
        internal_success=session.internal_success,
    )
    provisional = AuditOutcome(
        broker_id=blueprint.trace.broker_id,
        completion=CompletionStatus(session.internal_success, False, "pending"),
        failure=failure,
        detected_channels=channels,
        form_fields=fields,
        metadata=metadata,
    )
    completion = verify_completion(session, provisional)
    outcome = replace(provisional, completion=completion)
    return session, outcome


def failure_rates(
    outcomes: Sequence[AuditOutcome],
) -> dict[FailureCategory, float]:
    """Share of each failure category among failed runs only; completed runs
    never enter the denominator."""
    failed = [o for o in outcomes if o.failure is not None]
    if not failed:
        raise NoFailedRunsError("failure_rates requires at least one failed run")
    counts: dict[FailureCategory, int] = {}
    for outcome in failed:
        assert outcome.failure is not None
        counts[outcome.failure.category] = counts.get(outcome.failure.category, 0) + 1
    total = len(failed)
    return {
        category: counts[category] / total
        for category in sorted(counts, key=lambda c: c.value)
    }


class NoFailedRunsError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Harness + built-in classifier
# ---------------------------------------------------------------------------

def session_log_doc(session: PortalSession, outcome: AuditOutcome) -> dict:
    """Per-run session log document: the step walk, the verified outcome,
    the failure report when one exists, and run metadata."""
    return {
        "schema_version": 1,
        "broker_id": outcome.broker_id,
        "steps": [
            {
                "index": step.index,
                "source_page": step.source_page,
                "action": step.action.value,
                "element_id": step.element_id,
                "destination_page": step.destination_page,
            }
            for step in session.step_log
        ],
        "outcome": {
            "internal_success": outcome.completion.internal_success,
            "verified_success": outcome.completion.verified_success,
            "reason": outcome.completion.reason,
        },
        "failure": (
            None
            if outcome.failure is None
            else {
                "category": outcome.failure.category.value,
                "evidence": [
                    ref if isinstance(ref, int) else {
                        "page_id": ref.page_id,
                        "element_or_disclosure_id": ref.element_or_disclosure_id,
                        "quote": ref.quote,
                    }
                    for ref in outcome.failure.evidence
                ],
                "narrative": outcome.failure.narrative,
            }
        ),
        "detected_channels": sorted(c.value for c in outcome.detected_channels),
        "form_fields": list(outcome.form_fields),
        "submit_count": session.submit_count,
        "metadata": {
            "duration_ms": outcome.metadata.duration_ms,
            "step_count": outcome.metadata.step_count,
            "token_usage": outcome.metadata.token_usage,
            "internal_success": outcome.metadata.internal_success,
        },
    }


def failed_audit_report(
    broker_id: str, outcome: AuditOutcome
) -> AuditReport:
    """All-absent report for a run that did not verifiably complete."""
    return AuditReport(
        broker_id=broker_id,
        detected_channels=outcome.detected_channels,
        form_fields=outcome.form_fields,
        labels={category: False for category in Category},
        findings=(),
        completion=outcome.completion,
        failure=outcome.failure,
        metadata=outcome.metadata,
    )


def audit_with_detector(
    blueprint: PortalBlueprint,
    config: DetectorConfig = DetectorConfig(),
    policy: Optional[ScriptedPolicy] = None,
    budget: int = 40,
) -> tuple[AuditOutcome, AuditReport]:
    """Protocol run plus the built-in rule classifier.

    Classification only happens for verifiably completed runs; failed runs
    yield an all-absent report carrying the failure, so downstream
    evaluation can exclude them.
    """
    session, outcome = run_protocol(blueprint, policy=policy, budget=budget)
    if not outcome.completion.verified_success:
        return outcome, failed_audit_report(blueprint.trace.broker_id, outcome)
    detected = detect_all(blueprint.trace, config)
    report = AuditReport(
        broker_id=detected.broker_id,
        detected_channels=detected.detected_channels,
        form_fields=detected.form_fields,
        labels=detected.labels,
        findings=detected.findings,
        completion=outcome.completion,
        failure=None,
        metadata=outcome.metadata,
    )
    return outcome, report
