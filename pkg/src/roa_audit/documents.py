"""Interchange documents: canonical serialization and strict parsing.

One UTF-8 JSON document per broker for traces and for audit reports, both
versioned with a top-level ``schema_version: 1``. Canonical serialization
sorts every entity list by id, renders sets as sorted lists, and uses a
fixed layout, so identical values always produce identical bytes.

Parsing is strict: unknown fields, missing fields, wrong types, values
outside their closed sets, and malformed label maps are all rejected with
:class:`SchemaError`. Nothing becomes an :class:`AuditReport` or a
:class:`WorkflowTrace` without passing through these checks.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any, Mapping, Optional

from .outcomes import CompletionStatus, FailureCategory, FailureReport
from .taxonomy import (
    REPORT_SCHEMA_VERSION,
    AuditReport,
    Category,
    Finding,
    make_finding,
    subtype_by_id,
    CatalogError,
    FindingError,
)
from .trace import (
    TRACE_SCHEMA_VERSION,
    ChannelKind,
    DisclosureStatement,
    ElementKind,
    EvidenceRef,
    FormField,
    FormFraming,
    FormSpec,
    IdentifierKind,
    InterfaceElement,
    NavigationStep,
    PageState,
    Relevance,
    RightKind,
    RoleOptions,
    RunMetadata,
    Section,
    SectionKind,
    Sensitivity,
    StepAction,
    SubmissionChannel,
    WorkflowTrace,
)

__all__ = [
    "SchemaError",
    "trace_to_doc",
    "trace_from_doc",
    "report_to_doc",
    "report_from_doc",
    "dumps_canonical",
    "digest",
]


class SchemaError(ValueError):
    """A document violates the interchange schema."""


def dumps_canonical(doc: Any) -> str:
    """Fixed-layout JSON rendering; equal values give equal bytes."""
    return json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=False) + "\n"


def digest(doc: Any) -> str:
    return hashlib.sha256(dumps_canonical(doc).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Serialization helpers
# ---------------------------------------------------------------------------

def _enum_set(values) -> list[str]:
    return sorted(v.value for v in values)


def _metadata_doc(md: RunMetadata) -> dict[str, Any]:
    return {
        "duration_ms": md.duration_ms,
        "step_count": md.step_count,
        "token_usage": md.token_usage,
        "internal_success": md.internal_success,
    }


def trace_to_doc(trace: WorkflowTrace) -> dict[str, Any]:
    return {
        "schema_version": TRACE_SCHEMA_VERSION,
        "broker_id": trace.broker_id,
        "start_url": trace.start_url,
        "pages": [
            {
                "page_id": p.page_id,
                "url": p.url,
                "title": p.title,
                "is_start": p.is_start,
                "sections": [
                    {
                        "section_id": s.section_id,
                        "label": s.label,
                        "kind": s.kind.value,
                        "claims_completeness": s.claims_completeness,
                        "disclosures": [
                            {
                                "disclosure_id": d.disclosure_id,
                                "text": d.text,
                                "declared_channels": _enum_set(d.declared_channels),
                                "declared_exclusive": d.declared_exclusive,
                                "declared_rights": _enum_set(d.declared_rights),
                                "referenced_section_label": d.referenced_section_label,
                                "is_hyperlinked": d.is_hyperlinked,
                                "referenced_channel_actionable": d.referenced_channel_actionable,
                            }
                            for d in sorted(s.disclosures, key=lambda d: d.disclosure_id)
                        ],
                    }
                    for s in sorted(p.sections, key=lambda s: s.section_id)
                ],
                "elements": [
                    {
                        "element_id": e.element_id,
                        "page_id": e.page_id,
                        "kind": e.kind.value,
                        "label_text": e.label_text,
                        "link_affordance": e.link_affordance,
                        "prominence": e.prominence,
                        "persistent_overlay": e.persistent_overlay,
                        "overlaps_rights_pathway": e.overlaps_rights_pathway,
                        "gated_behind": e.gated_behind,
                        "target_page": e.target_page,
                        "advertised_rights": _enum_set(e.advertised_rights),
                        "actual_rights": _enum_set(e.actual_rights),
                        "scope_restriction": e.scope_restriction,
                        "restriction_disclosed_at_entry": e.restriction_disclosed_at_entry,
                    }
                    for e in sorted(p.elements, key=lambda e: e.element_id)
                ],
            }
            for p in sorted(trace.pages, key=lambda p: p.page_id)
        ],
        "forms": [
            {
                "form_id": f.form_id,
                "page_id": f.page_id,
                "label_text": f.label_text,
                "framing": f.framing.value,
                "multi_page": f.multi_page,
                "identifier_kinds_supported": _enum_set(f.identifier_kinds_supported),
                "identifiers_per_submission": f.identifiers_per_submission,
                "request_type_options": list(f.request_type_options),
                "multi_select_allowed": f.multi_select_allowed,
                "role_options": (
                    None
                    if f.role_options is None
                    else {
                        "options": list(f.role_options.options),
                        "has_other_option": f.role_options.has_other_option,
                    }
                ),
                "fields": [
                    {
                        "field_id": ff.field_id,
                        "name": ff.name,
                        "required": ff.required,
                        "sensitivity": ff.sensitivity.value,
                        "relevance": ff.relevance.value,
                    }
                    for ff in f.fields
                ],
                "actual_rights": _enum_set(f.actual_rights),
                "coupled_actions": _enum_set(f.coupled_actions),
                "coupled_actions_disclosed": f.coupled_actions_disclosed,
            }
            for f in sorted(trace.forms, key=lambda f: f.form_id)
        ],
        "channels": [
            {
                "channel_id": c.channel_id,
                "kind": c.kind.value,
                "declared_in": sorted(c.declared_in),
                "reachable": c.reachable,
                "entry_element": c.entry_element,
            }
            for c in sorted(trace.channels, key=lambda c: c.channel_id)
        ],
        "steps": [
            {
                "index": st.index,
                "source_page": st.source_page,
                "action": st.action.value,
                "element_id": st.element_id,
                "destination_page": st.destination_page,
            }
            for st in trace.steps
        ],
        "metadata": _metadata_doc(trace.metadata),
    }


# ---------------------------------------------------------------------------
# Strict parsing
# ---------------------------------------------------------------------------

def _require_map(doc: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(doc, Mapping):
        raise SchemaError(f"{where}: expected an object, got {type(doc).__name__}")
    return doc


def _take(doc: Mapping[str, Any], known: set[str], where: str) -> None:
    extra = set(doc.keys()) - known
    if extra:
        raise SchemaError(f"{where}: unknown fields {sorted(extra)}")
    missing = known - set(doc.keys())
    if missing:
        raise SchemaError(f"{where}: missing fields {sorted(missing)}")


def _str(doc: Mapping[str, Any], key: str, where: str) -> str:
    v = doc[key]
    if not isinstance(v, str):
        raise SchemaError(f"{where}.{key}: expected string")
    return v


def _opt_str(doc: Mapping[str, Any], key: str, where: str) -> Optional[str]:
    v = doc[key]
    if v is not None and not isinstance(v, str):
        raise SchemaError(f"{where}.{key}: expected string or null")
    return v


def _bool(doc: Mapping[str, Any], key: str, where: str) -> bool:
    v = doc[key]
    if not isinstance(v, bool):
        raise SchemaError(f"{where}.{key}: expected boolean")
    return v


def _int(doc: Mapping[str, Any], key: str, where: str) -> int:
    v = doc[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise SchemaError(f"{where}.{key}: expected integer")
    return v


def _opt_int(doc: Mapping[str, Any], key: str, where: str) -> Optional[int]:
    v = doc[key]
    if v is None:
        return None
    if not isinstance(v, int) or isinstance(v, bool):
        raise SchemaError(f"{where}.{key}: expected integer or null")
    return v


def _number(doc: Mapping[str, Any], key: str, where: str) -> float:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaError(f"{where}.{key}: expected number")
    return float(v)


def _list(doc: Mapping[str, Any], key: str, where: str) -> list[Any]:
    v = doc[key]
    if not isinstance(v, list):
        raise SchemaError(f"{where}.{key}: expected list")
    return v


def _enum(enum_cls, value: Any, where: str):
    try:
        return enum_cls(value)
    except ValueError:
        raise SchemaError(
            f"{where}: {value!r} is not one of "
            f"{[m.value for m in enum_cls]}"
        ) from None


def _enum_frozenset(enum_cls, values: Any, where: str) -> frozenset:
    if not isinstance(values, list):
        raise SchemaError(f"{where}: expected list")
    return frozenset(_enum(enum_cls, v, where) for v in values)


def _str_tuple(values: Any, where: str) -> tuple[str, ...]:
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise SchemaError(f"{where}: expected list of strings")
    return tuple(values)


def _parse_metadata(doc: Any, where: str) -> RunMetadata:
    m = _require_map(doc, where)
    _take(m, {"duration_ms", "step_count", "token_usage", "internal_success"}, where)
    return RunMetadata(
        duration_ms=_int(m, "duration_ms", where),
        step_count=_int(m, "step_count", where),
        token_usage=_opt_int(m, "token_usage", where),
        internal_success=_bool(m, "internal_success", where),
    )


def trace_from_doc(doc: Any) -> WorkflowTrace:
    root = _require_map(doc, "trace")
    _take(
        root,
        {
            "schema_version",
            "broker_id",
            "start_url",
            "pages",
            "forms",
            "channels",
            "steps",
            "metadata",
        },
        "trace",
    )
    if root["schema_version"] != TRACE_SCHEMA_VERSION:
        raise SchemaError(
            f"trace.schema_version: expected {TRACE_SCHEMA_VERSION}, "
            f"got {root['schema_version']!r}"
        )

    pages = []
    for p_doc in _list(root, "pages", "trace"):
        p = _require_map(p_doc, "page")
        _take(p, {"page_id", "url", "title", "is_start", "sections", "elements"}, "page")
        sections = []
        for s_doc in _list(p, "sections", "page"):
            s = _require_map(s_doc, "section")
            _take(
                s,
                {"section_id", "label", "kind", "claims_completeness", "disclosures"},
                "section",
            )
            disclosures = []
            for d_doc in _list(s, "disclosures", "section"):
                d = _require_map(d_doc, "disclosure")
                _take(
                    d,
                    {
                        "disclosure_id",
                        "text",
                        "declared_channels",
                        "declared_exclusive",
                        "declared_rights",
                        "referenced_section_label",
                        "is_hyperlinked",
                        "referenced_channel_actionable",
                    },
                    "disclosure",
                )
                disclosures.append(
                    DisclosureStatement(
                        disclosure_id=_str(d, "disclosure_id", "disclosure"),
                        text=_str(d, "text", "disclosure"),
                        declared_channels=_enum_frozenset(
                            ChannelKind, d["declared_channels"], "disclosure.declared_channels"
                        ),
                        declared_exclusive=_bool(d, "declared_exclusive", "disclosure"),
                        declared_rights=_enum_frozenset(
                            RightKind, d["declared_rights"], "disclosure.declared_rights"
                        ),
                        referenced_section_label=_opt_str(
                            d, "referenced_section_label", "disclosure"
                        ),
                        is_hyperlinked=_bool(d, "is_hyperlinked", "disclosure"),
                        referenced_channel_actionable=_bool(
                            d, "referenced_channel_actionable", "disclosure"
                        ),
                    )
                )
            sections.append(
                Section(
                    section_id=_str(s, "section_id", "section"),
                    label=_str(s, "label", "section"),
                    kind=_enum(SectionKind, s["kind"], "section.kind"),
                    claims_completeness=_bool(s, "claims_completeness", "section"),
                    disclosures=tuple(disclosures),
                )
            )
        elements = []
        for e_doc in _list(p, "elements", "page"):
            e = _require_map(e_doc, "element")
            _take(
                e,
                {
                    "element_id",
                    "page_id",
                    "kind",
                    "label_text",
                    "link_affordance",
                    "prominence",
                    "persistent_overlay",
                    "overlaps_rights_pathway",
                    "gated_behind",
                    "target_page",
                    "advertised_rights",
                    "actual_rights",
                    "scope_restriction",
                    "restriction_disclosed_at_entry",
                },
                "element",
            )
            elements.append(
                InterfaceElement(
                    element_id=_str(e, "element_id", "element"),
                    page_id=_str(e, "page_id", "element"),
                    kind=_enum(ElementKind, e["kind"], "element.kind"),
                    label_text=_str(e, "label_text", "element"),
                    link_affordance=_bool(e, "link_affordance", "element"),
                    prominence=_int(e, "prominence", "element"),
                    persistent_overlay=_bool(e, "persistent_overlay", "element"),
                    overlaps_rights_pathway=_bool(e, "overlaps_rights_pathway", "element"),
                    gated_behind=_opt_str(e, "gated_behind", "element"),
                    target_page=_opt_str(e, "target_page", "element"),
                    advertised_rights=_enum_frozenset(
                        RightKind, e["advertised_rights"], "element.advertised_rights"
                    ),
                    actual_rights=_enum_frozenset(
                        RightKind, e["actual_rights"], "element.actual_rights"
                    ),
                    scope_restriction=_opt_str(e, "scope_restriction", "element"),
                    restriction_disclosed_at_entry=_bool(
                        e, "restriction_disclosed_at_entry", "element"
                    ),
                )
            )
        pages.append(
            PageState(
                page_id=_str(p, "page_id", "page"),
                url=_str(p, "url", "page"),
                title=_str(p, "title", "page"),
                is_start=_bool(p, "is_start", "page"),
                sections=tuple(sections),
                elements=tuple(elements),
            )
        )

    forms = []
    for f_doc in _list(root, "forms", "trace"):
        f = _require_map(f_doc, "form")
        _take(
            f,
            {
                "form_id",
                "page_id",
                "label_text",
                "framing",
                "multi_page",
                "identifier_kinds_supported",
                "identifiers_per_submission",
                "request_type_options",
                "multi_select_allowed",
                "role_options",
                "fields",
                "actual_rights",
                "coupled_actions",
                "coupled_actions_disclosed",
            },
            "form",
        )
        role_doc = f["role_options"]
        role_options = None
        if role_doc is not None:
            r = _require_map(role_doc, "role_options")
            _take(r, {"options", "has_other_option"}, "role_options")
            role_options = RoleOptions(
                options=_str_tuple(r["options"], "role_options.options"),
                has_other_option=_bool(r, "has_other_option", "role_options"),
            )
        fields = []
        for ff_doc in _list(f, "fields", "form"):
            ff = _require_map(ff_doc, "field")
            _take(ff, {"field_id", "name", "required", "sensitivity", "relevance"}, "field")
            fields.append(
                FormField(
                    field_id=_str(ff, "field_id", "field"),
                    name=_str(ff, "name", "field"),
                    required=_bool(ff, "required", "field"),
                    sensitivity=_enum(Sensitivity, ff["sensitivity"], "field.sensitivity"),
                    relevance=_enum(Relevance, ff["relevance"], "field.relevance"),
                )
            )
        forms.append(
            FormSpec(
                form_id=_str(f, "form_id", "form"),
                page_id=_str(f, "page_id", "form"),
                label_text=_str(f, "label_text", "form"),
                framing=_enum(FormFraming, f["framing"], "form.framing"),
                multi_page=_bool(f, "multi_page", "form"),
                identifier_kinds_supported=_enum_frozenset(
                    IdentifierKind,
                    f["identifier_kinds_supported"],
                    "form.identifier_kinds_supported",
                ),
                identifiers_per_submission=_int(f, "identifiers_per_submission", "form"),
                request_type_options=_str_tuple(
                    f["request_type_options"], "form.request_type_options"
                ),
                multi_select_allowed=_bool(f, "multi_select_allowed", "form"),
                role_options=role_options,
                fields=tuple(fields),
                actual_rights=_enum_frozenset(
                    RightKind, f["actual_rights"], "form.actual_rights"
                ),
                coupled_actions=_enum_frozenset(
                    RightKind, f["coupled_actions"], "form.coupled_actions"
                ),
                coupled_actions_disclosed=_bool(f, "coupled_actions_disclosed", "form"),
            )
        )

    channels = []
    for c_doc in _list(root, "channels", "trace"):
        c = _require_map(c_doc, "channel")
        _take(c, {"channel_id", "kind", "declared_in", "reachable", "entry_element"}, "channel")
        declared_in = c["declared_in"]
        if not isinstance(declared_in, list) or not all(
            isinstance(v, str) for v in declared_in
        ):
            raise SchemaError("channel.declared_in: expected list of strings")
        channels.append(
            SubmissionChannel(
                channel_id=_str(c, "channel_id", "channel"),
                kind=_enum(ChannelKind, c["kind"], "channel.kind"),
                declared_in=frozenset(declared_in),
                reachable=_bool(c, "reachable", "channel"),
                entry_element=_opt_str(c, "entry_element", "channel"),
            )
        )

    steps = []
    for st_doc in _list(root, "steps", "trace"):
        st = _require_map(st_doc, "step")
        _take(st, {"index", "source_page", "action", "element_id", "destination_page"}, "step")
        steps.append(
            NavigationStep(
                index=_int(st, "index", "step"),
                source_page=_str(st, "source_page", "step"),
                action=_enum(StepAction, st["action"], "step.action"),
                element_id=_opt_str(st, "element_id", "step"),
                destination_page=_str(st, "destination_page", "step"),
            )
        )

    return WorkflowTrace(
        broker_id=_str(root, "broker_id", "trace"),
        start_url=_str(root, "start_url", "trace"),
        pages=tuple(pages),
        forms=tuple(forms),
        channels=tuple(channels),
        steps=tuple(steps),
        metadata=_parse_metadata(root["metadata"], "trace.metadata"),
    )


# ---------------------------------------------------------------------------
# Audit report documents
# ---------------------------------------------------------------------------

def report_to_doc(report: AuditReport) -> dict[str, Any]:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "broker_id": report.broker_id,
        "detected_channels": sorted(c.value for c in report.detected_channels),
        "form_fields": list(report.form_fields),
        "labels": {
            category.value: ("present" if report.labels.get(category, False) else "absent")
            for category in Category
        },
        "findings": [
            {
                "category": f.category.value,
                "subtype": f.subtype.subtype_id,
                "evidence": [
                    {
                        "page_id": ref.page_id,
                        "element_or_disclosure_id": ref.element_or_disclosure_id,
                        "quote": ref.quote,
                    }
                    for ref in f.evidence
                ],
                "expectation_violation": f.assessment.expectation_violation,
                "confidence": f.confidence,
            }
            for f in report.findings
        ],
        "completion": {
            "internal_success": report.completion.internal_success,
            "verified_success": report.completion.verified_success,
            "reason": report.completion.reason,
        },
        "failure": (
            None
            if report.failure is None
            else {
                "category": report.failure.category.value,
                "evidence": [
                    ref
                    if isinstance(ref, int)
                    else {
                        "page_id": ref.page_id,
                        "element_or_disclosure_id": ref.element_or_disclosure_id,
                        "quote": ref.quote,
                    }
                    for ref in report.failure.evidence
                ],
                "narrative": report.failure.narrative,
            }
        ),
        "metadata": _metadata_doc(report.metadata),
    }


def _parse_evidence_ref(doc: Any, where: str) -> EvidenceRef:
    r = _require_map(doc, where)
    _take(r, {"page_id", "element_or_disclosure_id", "quote"}, where)
    return EvidenceRef(
        page_id=_str(r, "page_id", where),
        element_or_disclosure_id=_str(r, "element_or_disclosure_id", where),
        quote=_str(r, "quote", where),
    )


def report_from_doc(doc: Any) -> AuditReport:
    """Parses and validates an audit report document.

    Raises :class:`SchemaError` on any structural problem, including label
    maps that do not cover exactly the eight categories, subtype ids outside
    the catalog, and findings that violate their own invariants. Evidence
    resolution against a trace is a separate step (see
    :func:`roa_audit.taxonomy.validate_report`).
    """
    root = _require_map(doc, "report")
    _take(
        root,
        {
            "schema_version",
            "broker_id",
            "detected_channels",
            "form_fields",
            "labels",
            "findings",
            "completion",
            "failure",
            "metadata",
        },
        "report",
    )
    if root["schema_version"] != REPORT_SCHEMA_VERSION:
        raise SchemaError(
            f"report.schema_version: expected {REPORT_SCHEMA_VERSION}, "
            f"got {root['schema_version']!r}"
        )

    labels_doc = _require_map(root["labels"], "report.labels")
    labels: dict[Category, bool] = {}
    for key, value in labels_doc.items():
        category = _enum(Category, key, "report.labels")
        if value not in ("present", "absent"):
            raise SchemaError(
                f"report.labels.{key}: expected 'present' or 'absent', got {value!r}"
            )
        labels[category] = value == "present"
    if set(labels.keys()) != set(Category):
        missing = sorted(c.value for c in set(Category) - set(labels.keys()))
        raise SchemaError(f"report.labels: missing categories {missing}")

    findings: list[Finding] = []
    for f_doc in _list(root, "findings", "report"):
        f = _require_map(f_doc, "finding")
        _take(
            f,
            {"category", "subtype", "evidence", "expectation_violation", "confidence"},
            "finding",
        )
        category = _enum(Category, f["category"], "finding.category")
        try:
            subtype = subtype_by_id(_str(f, "subtype", "finding"))
        except CatalogError as exc:
            raise SchemaError(str(exc)) from None
        evidence = tuple(
            _parse_evidence_ref(e, "finding.evidence")
            for e in _list(f, "evidence", "finding")
        )
        try:
            findings.append(
                make_finding(
                    category,
                    subtype,
                    evidence,
                    _str(f, "expectation_violation", "finding"),
                    _number(f, "confidence", "finding"),
                )
            )
        except (FindingError, CatalogError) as exc:
            raise SchemaError(f"finding: {exc}") from None

    completion_doc = _require_map(root["completion"], "report.completion")
    _take(
        completion_doc,
        {"internal_success", "verified_success", "reason"},
        "report.completion",
    )
    completion = CompletionStatus(
        internal_success=_bool(completion_doc, "internal_success", "completion"),
        verified_success=_bool(completion_doc, "verified_success", "completion"),
        reason=_str(completion_doc, "reason", "completion"),
    )

    failure = None
    if root["failure"] is not None:
        fl = _require_map(root["failure"], "report.failure")
        _take(fl, {"category", "evidence", "narrative"}, "report.failure")
        ev: list[Any] = []
        for item in _list(fl, "evidence", "report.failure"):
            if isinstance(item, int) and not isinstance(item, bool):
                ev.append(item)
            else:
                ev.append(_parse_evidence_ref(item, "report.failure.evidence"))
        failure = FailureReport(
            category=_enum(FailureCategory, fl["category"], "failure.category"),
            evidence=tuple(ev),
            narrative=_str(fl, "narrative", "failure"),
        )

    if completion.verified_success and failure is not None:
        raise SchemaError("report: verified success with an attached failure report")
    if not completion.verified_success and failure is None:
        raise SchemaError("report: failed completion without a failure report")

    present_without_findings = [
        c.value
        for c, present in labels.items()
        if present and not any(f.category is c for f in findings)
    ]
    if present_without_findings:
        raise SchemaError(
            "report: categories labeled present without findings: "
            f"{sorted(present_without_findings)}"
        )

    channels = tuple(
        _enum(ChannelKind, v, "report.detected_channels")
        for v in _list(root, "detected_channels", "report")
    )

    return AuditReport(
        broker_id=_str(root, "broker_id", "report"),
        detected_channels=channels,
        form_fields=_str_tuple(root["form_fields"], "report.form_fields"),
        labels=labels,
        findings=tuple(findings),
        completion=completion,
        failure=failure,
        metadata=_parse_metadata(root["metadata"], "report.metadata"),
    )
