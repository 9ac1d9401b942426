"""The eight dark-pattern categories and their 29 harm-mechanism subtypes.

The catalog is closed and fixed at import time: every finding anywhere in
the system draws its subtype from :func:`subtype_catalog`, and a finding
must always carry the two-part rationale (which reasonable expectation was
violated, and through which mechanism the workflow impaired the request).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from .outcomes import CompletionStatus, FailureReport
from .trace import (
    ChannelKind,
    EvidenceRef,
    EvidenceResolutionError,
    RunMetadata,
    Violation,
    WorkflowTrace,
    resolve_evidence,
)

__all__ = [
    "Category",
    "Subtype",
    "Assessment",
    "Finding",
    "AuditReport",
    "subtype_catalog",
    "subtype_by_id",
    "subtypes_for",
    "make_finding",
    "validate_report",
    "CatalogError",
    "FindingError",
]

REPORT_SCHEMA_VERSION = 1


class Category(str, Enum):
    """Closed set of audited dark-pattern categories."""

    ADDING_STEPS = "AddingSteps"
    CONFLICTING_INFO = "ConflictingInfo"
    CREATING_BARRIERS = "CreatingBarriers"
    FEEDFORWARD_AMBIGUITY = "FeedforwardAmbiguity"
    HIDDEN_INFO = "HiddenInfo"
    INFO_WITHOUT_CONTEXT = "InfoWithoutContext"
    PRIVACY_MAZES = "PrivacyMazes"
    VISUAL_PROMINENCE = "VisualProminence"


@dataclass(frozen=True)
class Subtype:
    """One concrete harm mechanism within a category."""

    subtype_id: str
    category: Category
    name: str
    definition_text: str


def _s(subtype_id: str, category: Category, name: str, definition: str) -> Subtype:
    return Subtype(subtype_id, category, name, definition)


# The fixed mechanism catalog. Ordering is part of the contract: grouped by
# category, stable across releases.
_CATALOG: tuple[Subtype, ...] = (
    # Adding Steps (2)
    _s(
        "identifier_fragmentation",
        Category.ADDING_STEPS,
        "Identifier fragmentation",
        "The form recognizes several identifier kinds but accepts only one "
        "per submission, so a person with several identifiers on file must "
        "file the whole request repeatedly.",
    ),
    _s(
        "request_type_fragmentation",
        Category.ADDING_STEPS,
        "Request-type fragmentation",
        "One access right is split across several overlapping request "
        "options that cannot be selected together, forcing repeated "
        "submissions to obtain a complete disclosure.",
    ),
    # Conflicting Information (3)
    _s(
        "submission_path_conflict",
        Category.CONFLICTING_INFO,
        "Submission path conflict",
        "Two statements disagree about which submission channels are valid: "
        "one offers a channel that another statement rules out as the only "
        "accepted method.",
    ),
    _s(
        "submission_scope_contradiction",
        Category.CONFLICTING_INFO,
        "Submission scope contradiction",
        "A statement promises that a pathway handles several rights, but the "
        "interface it leads to supports only a subset of them.",
    ),
    _s(
        "form_labeling_contradiction",
        Category.CONFLICTING_INFO,
        "Form labeling contradiction",
        "A control advertised for access requests lands on a page whose "
        "forms present themselves as something else, such as opt-out "
        "controls.",
    ),
    # Creating Barriers (7)
    _s(
        "role_classification_barriers",
        Category.CREATING_BARRIERS,
        "Role classification barriers",
        "The requester must pick their relationship to the business from a "
        "rigid closed list with no escape option, risking misrouting for "
        "anyone who fits poorly.",
    ),
    _s(
        "submission_channel_restriction",
        Category.CREATING_BARRIERS,
        "Submission channel restriction",
        "Fewer working submission methods are offered than a requester is "
        "entitled to, leaving a single path (for instance webform-only).",
    ),
    _s(
        "excessive_identity_verification",
        Category.CREATING_BARRIERS,
        "Excessive identity verification",
        "The request demands disproportionately sensitive material, such as "
        "a government ID, SSN, or biometric proof, beyond ordinary "
        "verification needs.",
    ),
    _s(
        "technical_identifier_burden",
        Category.CREATING_BARRIERS,
        "Technical identifier burden",
        "The requester must supply device-level identifiers (cookie IDs, "
        "advertising IDs) that ordinary consumers cannot easily locate.",
    ),
    _s(
        "non_essential_required_fields",
        Category.CREATING_BARRIERS,
        "Non-essential required fields",
        "Mandatory inputs are unrelated to verifying the requester or "
        "fulfilling the request, such as account numbers or supporting "
        "documents.",
    ),
    _s(
        "install_external_app",
        Category.CREATING_BARRIERS,
        "Install external app",
        "Proceeding requires installing a third-party application or tool, "
        "shifting the task to a new modality with its own burdens.",
    ),
    _s(
        "self_identification_burden",
        Category.CREATING_BARRIERS,
        "Self-identification burden",
        "The requester must first locate and submit their own records (for "
        "example a profile URL) before the business will act.",
    ),
    # Feedforward Ambiguity (3)
    _s(
        "instruction_outcome_mismatch",
        Category.FEEDFORWARD_AMBIGUITY,
        "Instruction-outcome mismatch",
        "A control promises a rights pathway but what it opens supports "
        "fewer rights than promised, or an unrelated workflow entirely.",
    ),
    _s(
        "ambiguous_rights_terminology",
        Category.FEEDFORWARD_AMBIGUITY,
        "Ambiguous rights terminology",
        "Controls carry vague, non-standard labels that do not map to a "
        "recognizable right, with no nearby explanation of what selecting "
        "them triggers.",
    ),
    _s(
        "coupled_outcomes",
        Category.FEEDFORWARD_AMBIGUITY,
        "Coupled outcomes",
        "Submitting the request automatically triggers additional actions "
        "beyond the one requested, such as an opt-out the requester never "
        "asked for.",
    ),
    # Hidden Information (4)
    _s(
        "visually_disguised_affordances",
        Category.HIDDEN_INFO,
        "Visually disguised affordances",
        "A clickable control is styled like ordinary text, without the "
        "affordances that would let a scanning reader recognize it as "
        "actionable.",
    ),
    _s(
        "non_actionable_references",
        Category.HIDDEN_INFO,
        "Non-actionable references",
        "A statement names a submission channel in plain text without a "
        "link or usable detail, leaving the reader to hunt for it "
        "elsewhere.",
    ),
    _s(
        "interaction_gated_disclosure",
        Category.HIDDEN_INFO,
        "Interaction-gated disclosure",
        "Rights content is hidden behind an expandable control and invisible "
        "until the reader happens to open it.",
    ),
    _s(
        "selective_omission",
        Category.HIDDEN_INFO,
        "Selective omission",
        "A section presented as the complete guide omits a submission "
        "method documented elsewhere on the site, without any "
        "cross-reference to it.",
    ),
    # Information Without Context (5)
    _s(
        "contextual_misplacement",
        Category.INFO_WITHOUT_CONTEXT,
        "Contextual misplacement of execution guidance",
        "How-to-submit guidance lives only in unrelated sections (contact, "
        "opt-out, marketing) while the rights section a reader would check "
        "never points there.",
    ),
    _s(
        "misleading_form_framing",
        Category.INFO_WITHOUT_CONTEXT,
        "Contextual misleading form framing",
        "A form that can process access requests presents itself as an "
        "opt-out or marketing control, signalling irrelevance to the very "
        "people who need it.",
    ),
    _s(
        "vague_request_labels",
        Category.INFO_WITHOUT_CONTEXT,
        "Vague or non-standard request labels",
        "Request options use terminology that does not map to a standard "
        "legal right, so the correct choice cannot be identified.",
    ),
    _s(
        "section_label_mismatch",
        Category.INFO_WITHOUT_CONTEXT,
        "Section label mismatch",
        "The reader is directed to a named section that does not exist; the "
        "content actually sits under a differently labeled heading with no "
        "explanation.",
    ),
    _s(
        "misdirect_pathways",
        Category.INFO_WITHOUT_CONTEXT,
        "Misdirect pathways",
        "A pathway presented in a general context is actually restricted to "
        "a narrow audience (for example B2B clients only), and the "
        "restriction is not disclosed at the point of entry.",
    ),
    # Privacy Mazes (3)
    _s(
        "excessive_navigational_depth",
        Category.PRIVACY_MAZES,
        "Excessive navigational depth",
        "Reaching the submission interface requires traversing a long chain "
        "of intermediate pages.",
    ),
    _s(
        "within_page_fragmentation",
        Category.PRIVACY_MAZES,
        "Within-page fragmentation",
        "A channel's instructions are split across separate sections of one "
        "page, and no single section carries the complete set.",
    ),
    _s(
        "cross_page_fragmentation",
        Category.PRIVACY_MAZES,
        "Cross-page fragmentation",
        "A channel's instructions are scattered across different pages, "
        "each partial, with no page offering an authoritative summary.",
    ),
    # Visual Prominence (2)
    _s(
        "competing_cta_dominance",
        Category.VISUAL_PROMINENCE,
        "Competing call-to-action dominance",
        "On a page hosting the rights pathway, an unrelated element is made "
        "so much more prominent that attention is pulled away from the "
        "pathway.",
    ),
    _s(
        "persistent_overlay_interference",
        Category.VISUAL_PROMINENCE,
        "Persistent overlay interference",
        "A floating or fixed element stays on screen and overlaps the "
        "rights pathway, obstructing interaction with it.",
    ),
)

_BY_ID: dict[str, Subtype] = {s.subtype_id: s for s in _CATALOG}


class CatalogError(ValueError):
    """Raised for subtype lookups outside the closed catalog."""


def subtype_catalog() -> tuple[Subtype, ...]:
    """The full ordered mechanism catalog (29 subtypes across 8 categories)."""
    return _CATALOG


def subtype_by_id(subtype_id: str) -> Subtype:
    try:
        return _BY_ID[subtype_id]
    except KeyError:
        raise CatalogError(f"unknown subtype {subtype_id!r}") from None


def subtypes_for(category: Category) -> tuple[Subtype, ...]:
    return tuple(s for s in _CATALOG if s.category is category)


# ---------------------------------------------------------------------------
# Findings and reports
# ---------------------------------------------------------------------------

class FindingError(ValueError):
    """A finding failed its construction-time invariants."""


@dataclass(frozen=True)
class Assessment:
    """The two-part rationale every finding carries: which reasonable
    expectation the interface violated, and the mechanism of harm."""

    expectation_violation: str
    harm_mechanism: Subtype


@dataclass(frozen=True)
class Finding:
    category: Category
    subtype: Subtype
    evidence: tuple[EvidenceRef, ...]
    assessment: Assessment
    confidence: float


def make_finding(
    category: Category,
    subtype: Subtype,
    evidence: tuple[EvidenceRef, ...] | list[EvidenceRef],
    expectation_text: str,
    confidence: float,
) -> Finding:
    """Builds a validated finding; the subtype must belong to the category,
    evidence must be nonempty, and confidence must lie in [0, 1]."""
    if subtype.subtype_id not in _BY_ID:
        raise CatalogError(f"subtype {subtype.subtype_id!r} is not in the catalog")
    if subtype.category is not category:
        raise FindingError(
            f"subtype {subtype.subtype_id!r} belongs to "
            f"{subtype.category.value}, not {category.value}"
        )
    if not evidence:
        raise FindingError("a finding requires at least one evidence reference")
    if not 0.0 <= confidence <= 1.0:
        raise FindingError(f"confidence {confidence} outside [0, 1]")
    if not expectation_text:
        raise FindingError("expectation_violation text must be present")
    return Finding(
        category=category,
        subtype=subtype,
        evidence=tuple(evidence),
        assessment=Assessment(expectation_text, subtype),
        confidence=confidence,
    )


@dataclass(frozen=True)
class AuditReport:
    """Structured per-broker audit output: what was detected, the binary
    label for each of the eight categories, and evidence-linked findings."""

    broker_id: str
    detected_channels: tuple[ChannelKind, ...]
    form_fields: tuple[str, ...]
    labels: Mapping[Category, bool]
    findings: tuple[Finding, ...]
    completion: CompletionStatus
    failure: Optional[FailureReport] = None
    metadata: RunMetadata = field(default_factory=RunMetadata)


def validate_report(
    report: AuditReport, trace: Optional[WorkflowTrace] = None
) -> list[Violation]:
    """Checks report invariants; pass the companion trace to additionally
    resolve every cited piece of evidence. Violations are data, not errors."""
    found: list[Violation] = []

    def flag(code: str, entity_id: str, message: str) -> None:
        found.append(Violation(code, entity_id, message))

    labeled = set(report.labels.keys())
    for category in Category:
        if category not in labeled:
            flag("missing_category", category.value, f"missing category label {category.value}")
    for category in sorted(labeled - set(Category), key=lambda c: str(c)):
        flag("unknown_category", str(category), f"unknown category label {category!r}")

    findings_by_category: dict[Category, int] = {}
    for finding in report.findings:
        findings_by_category[finding.category] = (
            findings_by_category.get(finding.category, 0) + 1
        )
        if finding.subtype.category is not finding.category:
            flag(
                "subtype_category_mismatch",
                finding.subtype.subtype_id,
                f"finding categorized {finding.category.value} cites subtype of "
                f"{finding.subtype.category.value}",
            )
        if finding.subtype.subtype_id not in _BY_ID:
            flag(
                "unknown_subtype",
                finding.subtype.subtype_id,
                f"subtype {finding.subtype.subtype_id!r} is not in the catalog",
            )
        if not finding.evidence:
            flag(
                "empty_evidence",
                finding.subtype.subtype_id,
                "finding carries no evidence references",
            )
        if not 0.0 <= finding.confidence <= 1.0:
            flag(
                "confidence_range",
                finding.subtype.subtype_id,
                f"confidence {finding.confidence} outside [0, 1]",
            )
        if not finding.assessment.expectation_violation:
            flag(
                "missing_expectation",
                finding.subtype.subtype_id,
                "finding lacks the expectation-violation rationale",
            )

    for category, present in sorted(report.labels.items(), key=lambda kv: kv[0].value):
        if present and findings_by_category.get(category, 0) == 0:
            flag(
                "label_without_finding",
                category.value,
                f"{category.value} labeled present but no finding carries it",
            )

    if report.completion.failed and report.failure is None:
        flag("failed_without_report", "", "failed completion requires a failure report")
    if report.completion.verified_success and report.failure is not None:
        flag(
            "verified_with_failure",
            "",
            "verified success is incompatible with an attached failure report",
        )

    if trace is not None:
        for finding in report.findings:
            for ref in finding.evidence:
                try:
                    resolve_evidence(trace, ref)
                except EvidenceResolutionError as exc:
                    flag(
                        "unresolved_evidence",
                        ref.element_or_disclosure_id,
                        str(exc),
                    )

    return sorted(found, key=lambda v: (v.entity_id, v.code, v.message))
