"""Prompt assembly for the four classifier configurations, plus the
remote-classifier transport contract and an offline replay transport.

Prompt documents are built from ordered named sections. Section inclusion
is strictly monotone across the four levels: level 1 carries the base
sections, level 2 adds the auditor role, level 3 adds one canonical
scenario per mechanism subtype, and level 4 adds the chain-of-thought
scaffold. A section body never changes between levels, so every lower
level's content appears verbatim in every higher level.

Transports are callables from a :class:`TransportRequest` to a raw response
document. No raw response ever becomes an audit report without passing the
strict document schema and having every evidence quote resolved against the
trace being classified.
"""

from __future__ import annotations

import importlib.resources
import json
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Mapping, Optional, Sequence

from .documents import SchemaError, digest, dumps_canonical, report_from_doc, trace_to_doc
from .outcomes import CompletionStatus, FailureCategory, FailureReport
from .taxonomy import AuditReport, Category, Subtype, subtype_catalog, validate_report
from .trace import RunMetadata, WorkflowTrace

__all__ = [
    "SectionTag",
    "PromptSpec",
    "ScenarioExample",
    "TransportRequest",
    "Transport",
    "TransportError",
    "MissingScenarioError",
    "ReplayMissError",
    "load_default_scenarios",
    "assemble",
    "classify_remote",
    "replay_transport",
    "ReplayTransport",
    "LiveTransport",
    "request_digest",
]


class SectionTag(str, Enum):
    ROLE = "ROLE"
    GOAL = "GOAL"
    INTERACTION_PLAN = "INTERACTION_PLAN"
    TAXONOMY = "TAXONOMY"
    FEWSHOT_SCENARIOS = "FEWSHOT_SCENARIOS"
    COT_SCAFFOLD = "COT_SCAFFOLD"
    EVALUATION_INSTRUCTIONS = "EVALUATION_INSTRUCTIONS"
    DECISION_RULES = "DECISION_RULES"
    EVIDENCE_REQUIREMENTS = "EVIDENCE_REQUIREMENTS"
    OUTPUT_SCHEMA = "OUTPUT_SCHEMA"


# Canonical rendering order for whatever sections a level includes.
_SECTION_ORDER = (
    SectionTag.ROLE,
    SectionTag.GOAL,
    SectionTag.INTERACTION_PLAN,
    SectionTag.TAXONOMY,
    SectionTag.FEWSHOT_SCENARIOS,
    SectionTag.COT_SCAFFOLD,
    SectionTag.EVALUATION_INSTRUCTIONS,
    SectionTag.DECISION_RULES,
    SectionTag.EVIDENCE_REQUIREMENTS,
    SectionTag.OUTPUT_SCHEMA,
)

_BASE_TAGS = frozenset(
    {
        SectionTag.GOAL,
        SectionTag.INTERACTION_PLAN,
        SectionTag.TAXONOMY,
        SectionTag.EVALUATION_INSTRUCTIONS,
        SectionTag.DECISION_RULES,
        SectionTag.EVIDENCE_REQUIREMENTS,
        SectionTag.OUTPUT_SCHEMA,
    }
)

_LEVEL_ADDITIONS: dict[int, frozenset[SectionTag]] = {
    1: frozenset(),
    2: frozenset({SectionTag.ROLE}),
    3: frozenset({SectionTag.ROLE, SectionTag.FEWSHOT_SCENARIOS}),
    4: frozenset(
        {SectionTag.ROLE, SectionTag.FEWSHOT_SCENARIOS, SectionTag.COT_SCAFFOLD}
    ),
}


@dataclass(frozen=True)
class PromptSpec:
    level: int
    sections: tuple[tuple[SectionTag, str], ...]

    @property
    def tags(self) -> frozenset[SectionTag]:
        return frozenset(tag for tag, _body in self.sections)

    def render(self) -> str:
        parts = [f"[{tag.value}]\n{body.strip()}" for tag, body in self.sections]
        return "\n\n".join(parts) + "\n"


@dataclass(frozen=True)
class ScenarioExample:
    """One canonical scenario per mechanism subtype, abstracted away from
    any particular site while preserving the structural harm."""

    subtype_id: str
    problematic_interface: str
    violated_expectation: str
    resulting_harm: str
    cot_trace: tuple[str, ...] = ()


class MissingScenarioError(ValueError):
    """Level 3+ assembly requires one scenario per catalog subtype."""


def load_default_scenarios() -> tuple[ScenarioExample, ...]:
    """Loads the shipped scenario set (editable data, not code)."""
    payload = (
        importlib.resources.files("roa_audit")
        .joinpath("data/scenarios.json")
        .read_text(encoding="utf-8")
    )
    entries = json.loads(payload)
    return tuple(
        ScenarioExample(
            subtype_id=e["subtype_id"],
            problematic_interface=e["problematic_interface"],
            violated_expectation=e["violated_expectation"],
            resulting_harm=e["resulting_harm"],
            cot_trace=tuple(e.get("cot_trace", ())),
        )
        for e in entries
    )


# ---------------------------------------------------------------------------
# Section bodies
# ---------------------------------------------------------------------------

_GOAL_BODY = """\
Audit one data broker's rights-request workflow from its recorded
interaction trace. Determine, for each of the eight deceptive-design
categories, whether the workflow exhibits it; report the submission
channels you observed, the complete list of webform fields, and one
finding per detected mechanism with evidence drawn from the trace."""

_INTERACTION_PLAN_BODY = """\
The trace was produced by this fixed navigation sequence, which you should
mentally replay while reading it:
1. Open the site's start page.
2. Locate the privacy policy or any page describing data rights.
3. Review those pages for access-request guidance: valid submission
   channels, verification requirements, and restrictions.
4. Open each online submission mechanism and expose every input field,
   including later pages of multi-page forms. Do not submit anything."""

_EVALUATION_INSTRUCTIONS_BODY = """\
Judge each candidate in two parts, and record both:
1. Expectation check: does the interface violate a reasonable expectation
   of clarity, consistency, or ease of execution?
2. Mechanism check: if so, name the specific mechanism through which the
   workflow impairs the request, and categorize by the primary mechanism."""

_DECISION_RULES_BODY = """\
Label a category present only when at least one of its mechanisms is
supported by trace evidence. A workflow may exhibit several categories;
report each. Ordinary, proportionate safeguards (reasonable verification,
a short navigation path, clearly labeled controls) are not deceptive
design. When the trace shows the run did not complete, classify the cause
into exactly one failure category instead of guessing at labels."""

_EVIDENCE_REQUIREMENTS_BODY = """\
Every finding must cite at least one evidence reference consisting of the
page id, the element or disclosure id, and a verbatim quote copied exactly
from that entity's text. References that do not resolve against the trace
invalidate the finding. Include a confidence value between 0 and 1."""

_OUTPUT_SCHEMA_BODY = """\
Respond with a single JSON object, schema_version 1, containing:
broker_id; detected_channels (list); form_fields (list, empty when there
is no webform); labels (an object mapping every one of the eight category
names to "present" or "absent"); findings (a list of objects with
category, subtype, evidence list, expectation_violation, confidence);
completion {internal_success, verified_success, reason}; failure (null or
{category, evidence, narrative}); metadata {duration_ms, step_count,
token_usage, internal_success}."""

_ROLE_BODY = """\
You are a privacy-compliance auditor evaluating whether a data broker's
rights-request workflow is clear, consistent, and no harder than it needs
to be. You are measuring interface structure, not deciding legal
liability; be precise, cite what you saw, and do not speculate beyond the
trace."""

_COT_SCAFFOLD_BODY = """\
For every finding, reason in this order before concluding, and include the
rationale in the explanation:
1. Trigger: the element or statement that first raised concern.
2. Observed behavior: what the interface presents at that point.
3. Revealing actions: the interactions that expose the problem.
4. Dynamic outcome: what actually results from those interactions.
5. Step-by-step rationale: what a reasonable person expected, how the
   outcome departs from it, and why that departure matches the named
   mechanism's definition."""


def _taxonomy_body(catalog: Sequence[Subtype]) -> str:
    lines = []
    for category in Category:
        lines.append(f"{category.value}:")
        for subtype in catalog:
            if subtype.category is category:
                lines.append(f"  - {subtype.name}: {subtype.definition_text}")
    return "\n".join(lines)


def _scenarios_body(
    catalog: Sequence[Subtype], scenarios: Mapping[str, ScenarioExample]
) -> str:
    blocks = []
    for subtype in catalog:
        s = scenarios[subtype.subtype_id]
        blocks.append(
            f"Scenario ({subtype.name}, {subtype.category.value}):\n"
            f"  Interface: {s.problematic_interface}\n"
            f"  Violated expectation: {s.violated_expectation}\n"
            f"  Resulting harm: {s.resulting_harm}"
        )
    return "\n\n".join(blocks)


def _cot_body(
    catalog: Sequence[Subtype], scenarios: Mapping[str, ScenarioExample]
) -> str:
    blocks = [_COT_SCAFFOLD_BODY]
    for subtype in catalog:
        s = scenarios[subtype.subtype_id]
        if s.cot_trace:
            steps = "\n".join(f"    {line}" for line in s.cot_trace)
            blocks.append(f"  Worked reasoning ({subtype.name}):\n{steps}")
    return "\n\n".join(blocks)


def assemble(
    level: int,
    catalog: Sequence[Subtype] = subtype_catalog(),
    scenarios: Optional[Sequence[ScenarioExample]] = None,
) -> PromptSpec:
    """Builds the prompt document for one of the four configurations.

    Levels 3 and 4 require a scenario for every subtype in the catalog;
    assembly fails on partial coverage rather than shipping thin few-shot
    grounding.
    """
    if level not in (1, 2, 3, 4):
        raise ValueError(f"level must be 1-4, got {level}")
    tags = _BASE_TAGS | _LEVEL_ADDITIONS[level]

    by_id: dict[str, ScenarioExample] = {}
    if level >= 3:
        pool = scenarios if scenarios is not None else load_default_scenarios()
        by_id = {s.subtype_id: s for s in pool}
        missing = [s.subtype_id for s in catalog if s.subtype_id not in by_id]
        if missing:
            raise MissingScenarioError(
                f"level {level} assembly needs a scenario for every subtype; "
                f"missing {len(missing)}: {missing[:5]}"
            )

    bodies: dict[SectionTag, str] = {
        SectionTag.GOAL: _GOAL_BODY,
        SectionTag.INTERACTION_PLAN: _INTERACTION_PLAN_BODY,
        SectionTag.TAXONOMY: _taxonomy_body(catalog),
        SectionTag.EVALUATION_INSTRUCTIONS: _EVALUATION_INSTRUCTIONS_BODY,
        SectionTag.DECISION_RULES: _DECISION_RULES_BODY,
        SectionTag.EVIDENCE_REQUIREMENTS: _EVIDENCE_REQUIREMENTS_BODY,
        SectionTag.OUTPUT_SCHEMA: _OUTPUT_SCHEMA_BODY,
        SectionTag.ROLE: _ROLE_BODY,
    }
    if level >= 3:
        bodies[SectionTag.FEWSHOT_SCENARIOS] = _scenarios_body(catalog, by_id)
    if level >= 4:
        bodies[SectionTag.COT_SCAFFOLD] = _cot_body(catalog, by_id)

    sections = tuple(
        (tag, bodies[tag]) for tag in _SECTION_ORDER if tag in tags
    )
    return PromptSpec(level=level, sections=sections)


# ---------------------------------------------------------------------------
# Transports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransportRequest:
    """What a classifier transport receives: the prompt document, the
    canonical trace serialization, and the output schema version."""

    prompt_text: str
    trace_doc: Mapping[str, Any]
    schema_version: int = 1

    def to_doc(self) -> dict[str, Any]:
        return {
            "prompt_text": self.prompt_text,
            "trace": self.trace_doc,
            "schema_version": self.schema_version,
        }


Transport = Callable[[TransportRequest], Any]


class TransportError(RuntimeError):
    """Network-class transport failure."""


class ReplayMissError(KeyError):
    """A strict replay transport saw a request it has no recording for."""


def request_digest(request: TransportRequest) -> str:
    return digest(request.to_doc())


@dataclass(frozen=True)
class ReplayTransport:
    """Deterministic offline transport backed by a digest -> response map."""

    recording: Mapping[str, Any]
    fallback: Optional[Any] = None
    strict: bool = True

    def __call__(self, request: TransportRequest) -> Any:
        key = request_digest(request)
        if key in self.recording:
            return self.recording[key]
        if self.strict and self.fallback is None:
            raise ReplayMissError(f"no recorded response for digest {key[:12]}...")
        return self.fallback


def replay_transport(
    recording: Mapping[str, Any],
    fallback: Optional[Any] = None,
) -> ReplayTransport:
    """Builds an offline transport; unknown digests raise unless a fallback
    response is supplied."""
    return ReplayTransport(
        recording=dict(recording), fallback=fallback, strict=fallback is None
    )


class LiveTransport:
    """Chat-style HTTP transport for a hosted classifier.

    Endpoint, credentials, model name, and temperature come from
    configuration; requests and raw responses are logged verbatim when a
    log path is set, and a bounded in-flight limiter keeps interaction
    rates low.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        model: str = "",
        temperature: float = 0.0,
        max_in_flight: int = 4,
        timeout: float = 120.0,
        log_path: Optional[str] = None,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.model = model
        self.temperature = temperature
        self.timeout = timeout
        self.log_path = log_path
        self._limiter = threading.Semaphore(max_in_flight)
        self._log_lock = threading.Lock()

    def _log(self, record: dict[str, Any]) -> None:
        if self.log_path is None:
            return
        with self._log_lock, open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def __call__(self, request: TransportRequest) -> Any:
        import requests as _requests

        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {
                    "role": "user",
                    "content": request.prompt_text
                    + "\n\n[TRACE]\n"
                    + dumps_canonical(request.trace_doc),
                }
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        with self._limiter:
            try:
                response = _requests.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout
                )
            except _requests.RequestException as exc:
                raise TransportError(str(exc)) from exc
        self._log(
            {
                "digest": request_digest(request),
                "request": body,
                "status": response.status_code,
                "response": response.text,
            }
        )
        if response.status_code >= 400:
            raise TransportError(f"endpoint returned HTTP {response.status_code}")
        payload = response.json()
        # Chat-style endpoints wrap the document in a message; accept either
        # the bare document or the first message's content as JSON.
        if isinstance(payload, dict) and "choices" in payload:
            content = payload["choices"][0]["message"]["content"]
            return json.loads(content)
        return payload


# ---------------------------------------------------------------------------
# Remote classification
# ---------------------------------------------------------------------------

def _failed_report(
    broker_id: str, category: FailureCategory, narrative: str
) -> AuditReport:
    return AuditReport(
        broker_id=broker_id,
        detected_channels=(),
        form_fields=(),
        labels={c: False for c in Category},
        findings=(),
        completion=CompletionStatus(
            internal_success=False,
            verified_success=False,
            reason=narrative,
        ),
        failure=FailureReport(category=category, narrative=narrative),
        metadata=RunMetadata(internal_success=False),
    )


def classify_remote(
    trace: WorkflowTrace,
    prompt: PromptSpec,
    transport: Transport,
    max_requests: int = 3,
) -> AuditReport:
    """Sends the trace to a remote classifier and gates its response.

    A response only becomes an audit report after strict schema parsing,
    report-invariant validation, and resolution of every cited evidence
    quote against the trace. At most ``max_requests`` attempts are made;
    exhausted retries yield a failed report (AgentInstability for schema
    trouble, AutomationInstability for transport trouble) rather than an
    exception.
    """
    if max_requests < 1:
        raise ValueError("max_requests must be >= 1")
    request = TransportRequest(
        prompt_text=prompt.render(), trace_doc=trace_to_doc(trace)
    )
    last_error = ""
    transport_failed = False
    for _attempt in range(max_requests):
        try:
            raw = transport(request)
        except TransportError as exc:
            transport_failed = True
            last_error = str(exc)
            continue
        except ReplayMissError as exc:
            transport_failed = True
            last_error = str(exc)
            continue
        try:
            report = report_from_doc(raw)
        except SchemaError as exc:
            transport_failed = False
            last_error = f"response violated the output schema: {exc}"
            continue
        if report.broker_id != trace.broker_id:
            transport_failed = False
            last_error = (
                f"response names broker {report.broker_id!r}, "
                f"expected {trace.broker_id!r}"
            )
            continue
        violations = validate_report(report, trace)
        if violations:
            transport_failed = False
            last_error = (
                "response failed report validation: " + violations[0].message
            )
            continue
        return report

    if transport_failed:
        return _failed_report(
            trace.broker_id,
            FailureCategory.AUTOMATION_INSTABILITY,
            f"transport failed after {max_requests} attempt(s): {last_error}",
        )
    return _failed_report(
        trace.broker_id,
        FailureCategory.AGENT_INSTABILITY,
        f"no schema-valid response after {max_requests} attempt(s): {last_error}",
    )
