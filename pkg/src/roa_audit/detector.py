"""Deterministic rule engine mapping a workflow trace to findings.

Each of the 29 harm mechanisms in the catalog is implemented as an
executable predicate over the trace. The engine is pure: the same trace and
configuration always produce the same audit report, byte for byte under
canonical serialization. Where the underlying judgment is inherently
qualitative (how deep is "too deep", how big a salience gap is "dominant"),
the boundary lives in :class:`DetectorConfig` so it is explicit and
testable rather than buried in a rule.

When several mechanisms of one category fire, all are reported; the binary
category label is the disjunction over its findings.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .outcomes import CompletionStatus
from .taxonomy import (
    AuditReport,
    Category,
    Finding,
    make_finding,
    subtype_by_id,
)
from .trace import (
    ChannelKind,
    DisclosureStatement,
    ElementKind,
    EvidenceRef,
    FormFraming,
    FormSpec,
    InterfaceElement,
    RightKind,
    RunMetadata,
    Section,
    SectionKind,
    Sensitivity,
    Relevance,
    TraceIndex,
    UnreachableTargetError,
    WorkflowTrace,
    channel_inventory,
    navigation_depth,
    normalize_label,
    validate_trace,
)

__all__ = [
    "DetectorConfig",
    "InvalidTraceError",
    "detect_all",
    "detect_adding_steps",
    "detect_conflicting_info",
    "detect_creating_barriers",
    "detect_feedforward_ambiguity",
    "detect_hidden_info",
    "detect_info_without_context",
    "detect_privacy_mazes",
    "detect_visual_prominence",
]


def _norm_lexicon(words) -> frozenset[str]:
    return frozenset(normalize_label(w) for w in words)


DEFAULT_AMBIGUOUS_LABELS = ("info request", "data processing")
DEFAULT_VAGUE_SECTIONS = (
    "more information",
    "legal",
    "other topics",
    "resources",
    "miscellaneous",
)
# Option labels that slice the access right into overlapping sub-requests.
DEFAULT_ACCESS_FRAGMENTS = (
    "categories of personal information",
    "specific pieces of personal information",
    "specific pieces",
    "categories of sources",
)


@dataclass(frozen=True)
class DetectorConfig:
    """Rule thresholds and lexicons. Lexicons are normalized (lowercase,
    punctuation-stripped) at construction; matching is exact-phrase."""

    maze_depth_threshold: int = 3
    prominence_gap_threshold: int = 2
    ambiguous_label_lexicon: frozenset[str] = field(
        default_factory=lambda: _norm_lexicon(DEFAULT_AMBIGUOUS_LABELS)
    )
    vague_section_lexicon: frozenset[str] = field(
        default_factory=lambda: _norm_lexicon(DEFAULT_VAGUE_SECTIONS)
    )
    excessive_sensitivities: frozenset[Sensitivity] = frozenset(
        {Sensitivity.GOV_ID, Sensitivity.SSN, Sensitivity.BIOMETRIC}
    )
    min_required_channels: int = 2

    def __post_init__(self):
        if self.maze_depth_threshold < 1:
            raise ValueError("maze_depth_threshold must be >= 1")
        if self.prominence_gap_threshold < 1:
            raise ValueError("prominence_gap_threshold must be >= 1")
        if self.min_required_channels < 1:
            raise ValueError("min_required_channels must be >= 1")
        object.__setattr__(
            self, "ambiguous_label_lexicon", _norm_lexicon(self.ambiguous_label_lexicon)
        )
        object.__setattr__(
            self, "vague_section_lexicon", _norm_lexicon(self.vague_section_lexicon)
        )

    def describe(self) -> str:
        lines = [
            f"maze_depth_threshold = {self.maze_depth_threshold}",
            f"prominence_gap_threshold = {self.prominence_gap_threshold}",
            f"min_required_channels = {self.min_required_channels}",
            "ambiguous_label_lexicon = "
            + ", ".join(sorted(self.ambiguous_label_lexicon)),
            "vague_section_lexicon = " + ", ".join(sorted(self.vague_section_lexicon)),
            "excessive_sensitivities = "
            + ", ".join(sorted(s.value for s in self.excessive_sensitivities)),
            "access_fragment_lexicon = " + ", ".join(sorted(ACCESS_FRAGMENT_LEXICON)),
        ]
        return "\n".join(lines)


# Fixed vocabulary rather than config: which option labels count as slices
# of the access right. Kept module-level so the fragmentation rule and the
# synthesizer agree by construction.
ACCESS_FRAGMENT_LEXICON = _norm_lexicon(DEFAULT_ACCESS_FRAGMENTS)

_RIGHTS_SECTION_KINDS = (SectionKind.PRIVACY_RIGHTS, SectionKind.CCPA_RIGHTS)
_MISPLACED_SECTION_KINDS = (
    SectionKind.CONTACT,
    SectionKind.OPT_OUT,
    SectionKind.MARKETING,
)


class InvalidTraceError(ValueError):
    def __init__(self, violations):
        self.violations = violations
        super().__init__(
            "trace failed validation: "
            + "; ".join(v.message for v in violations[:5])
        )


# ---------------------------------------------------------------------------
# Evidence helpers
# ---------------------------------------------------------------------------

def _disc_ref(idx: TraceIndex, disc: DisclosureStatement) -> EvidenceRef:
    return EvidenceRef(idx.disclosure_page[disc.disclosure_id], disc.disclosure_id, disc.text)


def _elem_ref(element: InterfaceElement) -> EvidenceRef:
    return EvidenceRef(element.page_id, element.element_id, element.label_text)


def _form_ref(form: FormSpec) -> EvidenceRef:
    return EvidenceRef(form.page_id, form.form_id, form.label_text)


def _field_ref(form: FormSpec, f) -> EvidenceRef:
    return EvidenceRef(form.page_id, f.field_id, f.name)


def _finding(subtype_id: str, evidence, expectation: str) -> Finding:
    subtype = subtype_by_id(subtype_id)
    return make_finding(subtype.category, subtype, evidence, expectation, 1.0)


def _rights_bearing(element: InterfaceElement) -> bool:
    return bool(element.advertised_rights or element.actual_rights)


def _sorted_forms(trace: WorkflowTrace) -> list[FormSpec]:
    return sorted(trace.forms, key=lambda f: f.form_id)


def _sorted_elements(idx: TraceIndex) -> list[InterfaceElement]:
    return sorted(idx.elements.values(), key=lambda e: e.element_id)


# ---------------------------------------------------------------------------
# Category detectors
# ---------------------------------------------------------------------------

def detect_adding_steps(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Extra-interaction mechanisms: one-identifier-per-submission forms and
    access rights split across mutually exclusive request options."""
    findings: list[Finding] = []
    for form in _sorted_forms(trace):
        if (
            len(form.identifier_kinds_supported) > 1
            and form.identifiers_per_submission == 1
        ):
            findings.append(
                _finding(
                    "identifier_fragmentation",
                    [_form_ref(form)],
                    "one request should cover every identifier the business "
                    "holds; this form accepts only one identifier per "
                    "submission despite recognizing "
                    f"{len(form.identifier_kinds_supported)} kinds",
                )
            )
        fragment_options = [
            o
            for o in form.request_type_options
            if normalize_label(o) in ACCESS_FRAGMENT_LEXICON
        ]
        if len(fragment_options) >= 2 and not form.multi_select_allowed:
            findings.append(
                _finding(
                    "request_type_fragmentation",
                    [_form_ref(form)],
                    "a single access request should yield a complete "
                    "disclosure; here it is split over options "
                    f"{fragment_options!r} that cannot be combined",
                )
            )
    return findings


def detect_conflicting_info(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Contradictions between statements, or between a statement and the
    interface it points at."""
    idx = TraceIndex(trace)
    findings: list[Finding] = []
    discs = sorted(idx.disclosures.values(), key=lambda d: d.disclosure_id)

    # Submission path conflict: one statement offers channel k, another
    # claims exclusivity over a set that excludes k.
    reported_pairs: set[tuple[str, str]] = set()
    for d1 in discs:
        for d2 in discs:
            if d1.disclosure_id == d2.disclosure_id or not d2.declared_exclusive:
                continue
            excluded = d1.declared_channels - d2.declared_channels
            if excluded and (d1.disclosure_id, d2.disclosure_id) not in reported_pairs:
                reported_pairs.add((d1.disclosure_id, d2.disclosure_id))
                kinds = ", ".join(sorted(k.value for k in excluded))
                findings.append(
                    _finding(
                        "submission_path_conflict",
                        [_disc_ref(idx, d1), _disc_ref(idx, d2)],
                        "instructions about valid submission channels should "
                        f"agree; one statement offers {kinds} while another "
                        "asserts only its own channels are accepted",
                    )
                )

    # Submission scope contradiction: a statement promises more rights for a
    # channel than the channel's entry interface actually supports.
    for channel in sorted(trace.channels, key=lambda c: c.channel_id):
        if channel.entry_element is None:
            continue
        entry = idx.elements.get(channel.entry_element)
        if entry is None:
            continue
        for disc_id in sorted(channel.declared_in):
            disc = idx.disclosures.get(disc_id)
            if disc is None or not disc.declared_rights:
                continue
            if disc.declared_rights > entry.actual_rights:
                missing = ", ".join(
                    sorted(r.value for r in disc.declared_rights - entry.actual_rights)
                )
                findings.append(
                    _finding(
                        "submission_scope_contradiction",
                        [_disc_ref(idx, disc), _elem_ref(entry)],
                        "a pathway should support every right claimed for it; "
                        f"the destination does not support: {missing}",
                    )
                )

    # Form labeling contradiction: a control advertised for access lands on
    # a page whose forms are dominated by opt-out framing.
    for element in _sorted_elements(idx):
        if element.target_page is None:
            continue
        if RightKind.ACCESS not in element.advertised_rights:
            continue
        dominant = _dominant_framing(trace, element.target_page)
        if dominant is FormFraming.OPT_OUT:
            page_forms = [
                f for f in _sorted_forms(trace) if f.page_id == element.target_page
            ]
            evidence = [_elem_ref(element)] + [
                _form_ref(f) for f in page_forms if f.framing is FormFraming.OPT_OUT
            ][:1]
            findings.append(
                _finding(
                    "form_labeling_contradiction",
                    evidence,
                    "a control advertised for access requests should lead to "
                    "an access interface; the destination presents itself as "
                    "an opt-out control",
                )
            )
    return findings


def _dominant_framing(trace: WorkflowTrace, page_id: str):
    """Strict plurality framing among a page's forms; None when tied/empty."""
    counts: dict[FormFraming, int] = {}
    for form in trace.forms:
        if form.page_id == page_id:
            counts[form.framing] = counts.get(form.framing, 0) + 1
    if not counts:
        return None
    best = max(counts.values())
    leaders = [framing for framing, n in counts.items() if n == best]
    return leaders[0] if len(leaders) == 1 else None


def detect_creating_barriers(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Obstruction mechanisms; one finding per triggered subtype."""
    idx = TraceIndex(trace)
    findings: list[Finding] = []

    reachable = [c for c in trace.channels if c.reachable]
    if len(reachable) < config.min_required_channels:
        evidence = _channel_evidence(idx, trace) or _any_evidence(idx)
        if evidence:
            kinds = ", ".join(sorted(c.kind.value for c in reachable)) or "none"
            findings.append(
                _finding(
                    "submission_channel_restriction",
                    evidence,
                    "at least "
                    f"{config.min_required_channels} working submission "
                    f"methods should be offered; reachable here: {kinds}",
                )
            )

    seen_subtypes: set[str] = set()
    for form in _sorted_forms(trace):
        for f in form.fields:
            if not f.required:
                continue
            if (
                f.sensitivity in config.excessive_sensitivities
                and "excessive_identity_verification" not in seen_subtypes
            ):
                seen_subtypes.add("excessive_identity_verification")
                findings.append(
                    _finding(
                        "excessive_identity_verification",
                        [_field_ref(form, f)],
                        "verification should not demand disproportionately "
                        f"sensitive material; {f.name!r} requires "
                        f"{f.sensitivity.value}",
                    )
                )
            if (
                f.sensitivity is Sensitivity.DEVICE_IDENTIFIER
                and "technical_identifier_burden" not in seen_subtypes
            ):
                seen_subtypes.add("technical_identifier_burden")
                findings.append(
                    _finding(
                        "technical_identifier_burden",
                        [_field_ref(form, f)],
                        "requesters should not need device-level identifiers "
                        f"they cannot easily locate; {f.name!r} is mandatory",
                    )
                )
            if (
                f.relevance is Relevance.NON_ESSENTIAL
                and "non_essential_required_fields" not in seen_subtypes
            ):
                seen_subtypes.add("non_essential_required_fields")
                findings.append(
                    _finding(
                        "non_essential_required_fields",
                        [_field_ref(form, f)],
                        "mandatory inputs should serve verification or "
                        f"fulfillment; {f.name!r} serves neither",
                    )
                )
            if (
                f.sensitivity is Sensitivity.PROFILE_URL
                and "self_identification_burden" not in seen_subtypes
            ):
                seen_subtypes.add("self_identification_burden")
                findings.append(
                    _finding(
                        "self_identification_burden",
                        [_field_ref(form, f)],
                        "the business, not the requester, should locate the "
                        f"records at issue; {f.name!r} forces requesters to "
                        "find and submit their own records first",
                    )
                )
        if (
            form.role_options is not None
            and not form.role_options.has_other_option
            and "role_classification_barriers" not in seen_subtypes
        ):
            seen_subtypes.add("role_classification_barriers")
            findings.append(
                _finding(
                    "role_classification_barriers",
                    [_form_ref(form)],
                    "a relationship picker should accommodate requesters who "
                    "fit none of its categories; this closed list of "
                    f"{len(form.role_options.options)} roles has no other "
                    "option",
                )
            )

    app_reachable = [c for c in reachable if c.kind is ChannelKind.EXTERNAL_APP]
    non_app_reachable = [c for c in reachable if c.kind is not ChannelKind.EXTERNAL_APP]
    if app_reachable and not non_app_reachable:
        evidence = _channel_evidence(idx, trace, ChannelKind.EXTERNAL_APP) or _any_evidence(idx)
        if evidence:
            findings.append(
                _finding(
                    "install_external_app",
                    evidence,
                    "submitting a request should not require installing "
                    "third-party software; every working path runs through "
                    "an external application",
                )
            )
    return findings


def _channel_evidence(
    idx: TraceIndex, trace: WorkflowTrace, kind: ChannelKind | None = None
) -> list[EvidenceRef]:
    """Disclosures declaring channels (of one kind, if given), as evidence."""
    refs = []
    for _pid, _sec, disc in idx.disclosures_with_pages():
        if not disc.declared_channels:
            continue
        if kind is not None and kind not in disc.declared_channels:
            continue
        refs.append(_disc_ref(idx, disc))
    refs.sort(key=lambda r: r.element_or_disclosure_id)
    return refs[:1]


def _any_evidence(idx: TraceIndex) -> list[EvidenceRef]:
    """Fallback anchor: the first disclosure or element in id order."""
    discs = sorted(idx.disclosures.values(), key=lambda d: d.disclosure_id)
    if discs:
        return [_disc_ref(idx, discs[0])]
    elements = _sorted_elements(idx)
    if elements:
        return [_elem_ref(elements[0])]
    return []


def detect_feedforward_ambiguity(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Gaps between what a control promises and what it does."""
    idx = TraceIndex(trace)
    findings: list[Finding] = []

    for element in _sorted_elements(idx):
        if element.advertised_rights and not (
            element.advertised_rights <= element.actual_rights
        ):
            promised = ", ".join(sorted(r.value for r in element.advertised_rights))
            actual = (
                ", ".join(sorted(r.value for r in element.actual_rights)) or "nothing"
            )
            findings.append(
                _finding(
                    "instruction_outcome_mismatch",
                    [_elem_ref(element)],
                    "a control should deliver what it promises; this one "
                    f"advertises {promised} but supports {actual}",
                )
            )

    for element in _sorted_elements(idx):
        label = normalize_label(element.label_text)
        if label in config.ambiguous_label_lexicon and not _label_defined_nearby(
            idx, element.page_id, label
        ):
            findings.append(
                _finding(
                    "ambiguous_rights_terminology",
                    [_elem_ref(element)],
                    f"the label {element.label_text!r} does not map to a "
                    "recognizable right and nothing nearby explains it",
                )
            )
    for form in _sorted_forms(trace):
        label = normalize_label(form.label_text)
        if label in config.ambiguous_label_lexicon and not _label_defined_nearby(
            idx, form.page_id, label
        ):
            findings.append(
                _finding(
                    "ambiguous_rights_terminology",
                    [_form_ref(form)],
                    f"the form label {form.label_text!r} does not map to a "
                    "recognizable right and nothing nearby explains it",
                )
            )

    for form in _sorted_forms(trace):
        if form.coupled_actions:
            coupled = ", ".join(sorted(r.value for r in form.coupled_actions))
            findings.append(
                _finding(
                    "coupled_outcomes",
                    [_form_ref(form)],
                    "submitting one request should trigger exactly that "
                    f"request; this form also triggers: {coupled}",
                )
            )
    return findings


def _label_defined_nearby(idx: TraceIndex, page_id: str, norm_label: str) -> bool:
    """A same-page disclosure whose text mentions the phrase defines it."""
    for section in idx.sections_on(page_id):
        for disc in section.disclosures:
            if norm_label in normalize_label(disc.text):
                return True
    return False


def detect_hidden_info(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Relevant information that is disguised, inert, gated, or omitted."""
    idx = TraceIndex(trace)
    findings: list[Finding] = []

    for element in _sorted_elements(idx):
        if element.kind is ElementKind.LINK and not element.link_affordance:
            findings.append(
                _finding(
                    "visually_disguised_affordances",
                    [_elem_ref(element)],
                    "actionable controls should look actionable; "
                    f"{element.label_text!r} is clickable but styled as "
                    "ordinary text",
                )
            )

    for _pid, _sec, disc in sorted(
        idx.disclosures_with_pages(), key=lambda t: t[2].disclosure_id
    ):
        if (
            disc.declared_channels
            and not disc.is_hyperlinked
            and not disc.referenced_channel_actionable
        ):
            kinds = ", ".join(sorted(k.value for k in disc.declared_channels))
            findings.append(
                _finding(
                    "non_actionable_references",
                    [_disc_ref(idx, disc)],
                    f"a reference to a submission channel ({kinds}) should "
                    "be directly usable; this one is plain text with no "
                    "link or usable detail",
                )
            )

    for element in _sorted_elements(idx):
        if element.gated_behind is not None and _rights_bearing(element):
            gate = idx.elements.get(element.gated_behind)
            evidence = [_elem_ref(element)]
            if gate is not None:
                evidence.append(_elem_ref(gate))
            findings.append(
                _finding(
                    "interaction_gated_disclosure",
                    evidence,
                    "rights pathways should be visible without extra "
                    f"interaction; {element.label_text!r} only appears after "
                    "expanding a collapsed control",
                )
            )

    inventory = channel_inventory(trace)
    all_kinds = set(inventory.keys())
    for page in sorted(trace.pages, key=lambda p: p.page_id):
        for section in sorted(page.sections, key=lambda s: s.section_id):
            if not section.claims_completeness:
                continue
            covered: set[ChannelKind] = set()
            for disc in section.disclosures:
                covered.update(disc.declared_channels)
            omitted = sorted(all_kinds - covered, key=lambda k: k.value)
            if not omitted:
                continue
            # Anchor on the claiming section's own statement when it has
            # one, plus the statement elsewhere that documents the channel.
            evidence: list[EvidenceRef] = []
            if section.disclosures:
                evidence.append(_disc_ref(idx, section.disclosures[0]))
            elsewhere = inventory[omitted[0]].declared_in
            if elsewhere:
                evidence.append(_disc_ref(idx, idx.disclosures[elsewhere[0]]))
            if not evidence:
                evidence = _any_evidence(idx)
            if evidence:
                kinds = ", ".join(k.value for k in omitted)
                findings.append(
                    _finding(
                        "selective_omission",
                        evidence,
                        f"a section presented as complete ({section.label!r}) "
                        f"should cover every submission method; it omits: "
                        f"{kinds}",
                    )
                )
    return findings


def detect_info_without_context(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Information placed, framed, or labeled so it will not be found."""
    idx = TraceIndex(trace)
    findings: list[Finding] = []

    # Contextual misplacement: access how-to guidance lives only in
    # contact/opt-out/marketing sections while a rights section exists that
    # never points there.
    access_instructions = [
        (section, disc)
        for _pid, section, disc in idx.disclosures_with_pages()
        if RightKind.ACCESS in disc.declared_rights and disc.declared_channels
    ]
    rights_sections = [
        section
        for page in trace.pages
        for section in page.sections
        if section.kind in _RIGHTS_SECTION_KINDS
    ]
    if access_instructions and rights_sections:
        only_misplaced = all(
            section.kind in _MISPLACED_SECTION_KINDS
            for section, _disc in access_instructions
        )
        if only_misplaced:
            instruction_labels = {s.label for s, _d in access_instructions}
            referenced = {
                disc.referenced_section_label
                for section in rights_sections
                for disc in section.disclosures
                if disc.referenced_section_label is not None
            }
            if not (instruction_labels & referenced):
                first = min(access_instructions, key=lambda t: t[1].disclosure_id)
                findings.append(
                    _finding(
                        "contextual_misplacement",
                        [_disc_ref(idx, first[1])],
                        "submission guidance should live in (or be referenced "
                        "from) the rights section a reader would check; here "
                        f"it appears only under {first[0].label!r}",
                    )
                )

    for form in _sorted_forms(trace):
        if RightKind.ACCESS in form.actual_rights and form.framing in (
            FormFraming.OPT_OUT,
            FormFraming.MARKETING,
        ):
            findings.append(
                _finding(
                    "misleading_form_framing",
                    [_form_ref(form)],
                    "a form that processes access requests should present "
                    f"itself as one; {form.label_text!r} is framed as "
                    f"{form.framing.value}",
                )
            )

    for form in _sorted_forms(trace):
        for option in form.request_type_options:
            if normalize_label(option) in config.ambiguous_label_lexicon:
                findings.append(
                    _finding(
                        "vague_request_labels",
                        [_form_ref(form)],
                        f"request options should name a standard right; "
                        f"{option!r} does not",
                    )
                )

    all_section_labels = {
        section.label for page in trace.pages for section in page.sections
    }
    for _pid, _section, disc in sorted(
        idx.disclosures_with_pages(), key=lambda t: t[2].disclosure_id
    ):
        ref_label = disc.referenced_section_label
        if ref_label is None or ref_label in all_section_labels:
            continue
        equivalent_exists = any(
            section.kind in _RIGHTS_SECTION_KINDS
            and section.label != ref_label
            and any(d.declared_rights for d in section.disclosures)
            for page in trace.pages
            for section in page.sections
        )
        if equivalent_exists:
            findings.append(
                _finding(
                    "section_label_mismatch",
                    [_disc_ref(idx, disc)],
                    f"readers are directed to a section titled {ref_label!r} "
                    "that does not exist; the content sits under a different "
                    "heading with no explanation",
                )
            )

    for element in _sorted_elements(idx):
        if (
            element.scope_restriction is not None
            and not element.restriction_disclosed_at_entry
        ):
            findings.append(
                _finding(
                    "misdirect_pathways",
                    [_elem_ref(element)],
                    "a restricted pathway should say so where it is entered; "
                    f"{element.label_text!r} is limited to "
                    f"{element.scope_restriction!r} without saying so up "
                    "front",
                )
            )
    return findings


def detect_privacy_mazes(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Depth and fragmentation mechanisms over the navigation graph."""
    idx = TraceIndex(trace)
    findings: list[Finding] = []

    entries = []
    for channel in sorted(trace.channels, key=lambda c: c.channel_id):
        if channel.reachable and channel.entry_element is not None:
            element = idx.elements.get(channel.entry_element)
            if element is not None:
                try:
                    entries.append((navigation_depth(trace, element.element_id), element))
                except UnreachableTargetError:
                    continue
    if entries:
        depth, element = min(entries, key=lambda t: (t[0], t[1].element_id))
        if depth > config.maze_depth_threshold:
            findings.append(
                _finding(
                    "excessive_navigational_depth",
                    [_elem_ref(element)],
                    "the submission interface should be a few transitions "
                    f"from the start page; the nearest entry is {depth} "
                    f"transitions deep (threshold "
                    f"{config.maze_depth_threshold})",
                )
            )

    inventory = channel_inventory(trace)
    for kind in sorted(inventory.keys(), key=lambda k: k.value):
        summary = inventory[kind]
        if not summary.declared_in:
            continue
        union_rights = any(
            kind in idx.disclosures[d].declared_channels
            and idx.disclosures[d].declared_rights
            for d in summary.declared_in
        )
        union_actionable = any(
            kind in idx.disclosures[d].declared_channels
            and idx.disclosures[d].referenced_channel_actionable
            for d in summary.declared_in
        )
        union_complete = union_rights and union_actionable
        if not union_complete:
            continue

        if not summary.complete_on_pages:
            refs = [
                _disc_ref(idx, idx.disclosures[d]) for d in summary.declared_in[:2]
            ]
            findings.append(
                _finding(
                    "cross_page_fragmentation",
                    refs,
                    f"instructions for the {kind.value} channel should be "
                    "complete somewhere; here they are scattered across "
                    "pages, each partial",
                )
            )
            continue

        # Within-page fragmentation: some page assembles the channel's full
        # instructions only across two or more of its sections.
        for page_id in sorted(summary.complete_on_pages):
            page = idx.pages[page_id]
            involved = [
                s
                for s in page.sections
                if any(kind in d.declared_channels for d in s.disclosures)
            ]
            section_complete = any(
                _section_instructs(section, kind) for section in involved
            )
            if len(involved) >= 2 and not section_complete:
                refs = []
                for section in involved[:2]:
                    for disc in section.disclosures:
                        if kind in disc.declared_channels:
                            refs.append(_disc_ref(idx, disc))
                            break
                findings.append(
                    _finding(
                        "within_page_fragmentation",
                        refs,
                        f"one section should carry the {kind.value} "
                        "channel's complete instructions; on page "
                        f"{page_id} they are split across "
                        f"{len(involved)} sections",
                    )
                )
                break
    return findings


def _section_instructs(section: Section, kind: ChannelKind) -> bool:
    rights = any(
        kind in d.declared_channels and d.declared_rights for d in section.disclosures
    )
    actionable = any(
        kind in d.declared_channels and d.referenced_channel_actionable
        for d in section.disclosures
    )
    return rights and actionable


def detect_visual_prominence(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> list[Finding]:
    """Salience competition against the rights pathway."""
    idx = TraceIndex(trace)
    findings: list[Finding] = []

    for page in sorted(trace.pages, key=lambda p: p.page_id):
        rights_elements = [e for e in page.elements if _rights_bearing(e)]
        if not rights_elements:
            continue
        pathway_prominence = max(e.prominence for e in rights_elements)
        competitors = [
            e
            for e in page.elements
            if not _rights_bearing(e)
            and e.prominence >= pathway_prominence + config.prominence_gap_threshold
        ]
        for competitor in sorted(competitors, key=lambda e: e.element_id):
            anchor = max(
                rights_elements, key=lambda e: (e.prominence, e.element_id)
            )
            findings.append(
                _finding(
                    "competing_cta_dominance",
                    [_elem_ref(competitor), _elem_ref(anchor)],
                    "the rights pathway should not be visually outweighed; "
                    f"{competitor.label_text!r} (prominence "
                    f"{competitor.prominence}) dominates the pathway "
                    f"(prominence {pathway_prominence})",
                )
            )

    for element in _sorted_elements(idx):
        if element.persistent_overlay and element.overlaps_rights_pathway:
            findings.append(
                _finding(
                    "persistent_overlay_interference",
                    [_elem_ref(element)],
                    "fixed interface elements should not obstruct privacy "
                    f"controls; {element.label_text!r} stays on screen and "
                    "overlaps the rights pathway",
                )
            )
    return findings


_CATEGORY_DETECTORS = (
    (Category.ADDING_STEPS, detect_adding_steps),
    (Category.CONFLICTING_INFO, detect_conflicting_info),
    (Category.CREATING_BARRIERS, detect_creating_barriers),
    (Category.FEEDFORWARD_AMBIGUITY, detect_feedforward_ambiguity),
    (Category.HIDDEN_INFO, detect_hidden_info),
    (Category.INFO_WITHOUT_CONTEXT, detect_info_without_context),
    (Category.PRIVACY_MAZES, detect_privacy_mazes),
    (Category.VISUAL_PROMINENCE, detect_visual_prominence),
)


def detect_all(
    trace: WorkflowTrace, config: DetectorConfig = DetectorConfig()
) -> AuditReport:
    """Runs every category detector over a validated trace.

    Raises :class:`InvalidTraceError` when the trace fails validation.
    The result is deterministic; metadata carries no wall-clock values so
    repeated calls serialize identically.
    """
    violations = validate_trace(trace)
    if violations:
        raise InvalidTraceError(violations)

    findings: list[Finding] = []
    labels: dict[Category, bool] = {}
    for category, detector in _CATEGORY_DETECTORS:
        category_findings = detector(trace, config)
        assert all(f.category is category for f in category_findings)
        findings.extend(category_findings)
        labels[category] = bool(category_findings)

    inventory = channel_inventory(trace)
    detected_channels = tuple(sorted(inventory.keys(), key=lambda k: k.value))
    has_webform = any(c.kind is ChannelKind.WEBFORM for c in trace.channels)
    form_fields: tuple[str, ...] = ()
    if has_webform:
        form_fields = tuple(
            f.name for form in _sorted_forms(trace) for f in form.fields
        )

    return AuditReport(
        broker_id=trace.broker_id,
        detected_channels=detected_channels,
        form_fields=form_fields,
        labels=labels,
        findings=tuple(findings),
        completion=CompletionStatus(
            internal_success=True,
            verified_success=True,
            reason="rule audit over a validated trace",
        ),
        failure=None,
        metadata=RunMetadata(
            duration_ms=0,
            step_count=len(trace.steps),
            token_usage=None,
            internal_success=True,
        ),
    )
