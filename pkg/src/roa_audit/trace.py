"""Evidence-complete workflow traces for rights-request portals.

A :class:`WorkflowTrace` is the normalized, post-parse record of one broker's
rights-request workflow: pages, sections, disclosures, interface elements,
forms, submission channels, and the navigation walk that visited them.
Every downstream component (rule detection, synthesis, the portal harness,
evaluation) consumes this representation instead of raw HTML or screenshots.

All types are immutable after construction; the operations here are pure and
safe to call from any number of concurrent workers.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Union

__all__ = [
    "ChannelKind",
    "RightKind",
    "SectionKind",
    "ElementKind",
    "FormFraming",
    "Sensitivity",
    "Relevance",
    "IdentifierKind",
    "StepAction",
    "DisclosureStatement",
    "Section",
    "InterfaceElement",
    "FormField",
    "RoleOptions",
    "FormSpec",
    "SubmissionChannel",
    "PageState",
    "NavigationStep",
    "RunMetadata",
    "EvidenceRef",
    "WorkflowTrace",
    "Violation",
    "TraceIndex",
    "EvidenceResolutionError",
    "UnknownEvidenceEntityError",
    "EvidenceQuoteMismatchError",
    "UnknownEntityError",
    "UnreachableTargetError",
    "validate_trace",
    "resolve_evidence",
    "navigation_depth",
    "channel_inventory",
    "ChannelSummary",
    "infer_section_kind",
    "normalize_label",
]

TRACE_SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Closed vocabularies
# ---------------------------------------------------------------------------

class ChannelKind(str, Enum):
    """How a rights request can be submitted."""

    WEBFORM = "webform"
    EMAIL = "email"
    PHONE = "phone"
    POSTAL = "postal"
    EXTERNAL_APP = "external_app"


class RightKind(str, Enum):
    """Statutory consumer rights a pathway may advertise or support."""

    ACCESS = "access"
    DELETE = "delete"
    OPT_OUT = "opt_out"
    CORRECT = "correct"


class SectionKind(str, Enum):
    PRIVACY_RIGHTS = "privacy_rights"
    CCPA_RIGHTS = "ccpa_rights"
    OPT_OUT = "opt_out"
    CONTACT = "contact"
    MARKETING = "marketing"
    OTHER = "other"


class ElementKind(str, Enum):
    LINK = "link"
    BUTTON = "button"
    FORM_REF = "form_ref"
    OVERLAY = "overlay"
    EXPANDABLE = "expandable"
    PLAIN_TEXT_REFERENCE = "plain_text_reference"


class FormFraming(str, Enum):
    ACCESS = "access"
    OPT_OUT = "opt_out"
    MARKETING = "marketing"
    GENERIC = "generic"


class Sensitivity(str, Enum):
    NONE = "none"
    GOV_ID = "gov_id"
    SSN = "ssn"
    BIOMETRIC = "biometric"
    ACCOUNT_NUMBER = "account_number"
    DEVICE_IDENTIFIER = "device_identifier"
    DOCUMENT_UPLOAD = "document_upload"
    PROFILE_URL = "profile_url"


class Relevance(str, Enum):
    VERIFICATION_ESSENTIAL = "verification_essential"
    FULFILLMENT_ESSENTIAL = "fulfillment_essential"
    NON_ESSENTIAL = "non_essential"


class IdentifierKind(str, Enum):
    EMAIL = "email"
    IP_ADDRESS = "ip_address"
    COOKIE_ID = "cookie_id"
    MAID = "maid"
    PHONE = "phone"
    POSTAL = "postal"


class StepAction(str, Enum):
    CLICK = "click"
    EXPAND = "expand"
    FILL = "fill"
    NEXT_PAGE = "next_page"
    OPEN_URL = "open_url"


# ---------------------------------------------------------------------------
# Trace entities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisclosureStatement:
    """A verbatim policy statement plus structured annotations of its claims.

    The annotations (``declared_channels``, ``declared_exclusive``,
    ``declared_rights``) record what the text asserts so that detection rules
    stay deterministic; free-text extraction is a classifier's job, not the
    trace's.
    """

    disclosure_id: str
    text: str
    declared_channels: frozenset[ChannelKind] = frozenset()
    declared_exclusive: bool = False
    declared_rights: frozenset[RightKind] = frozenset()
    referenced_section_label: Optional[str] = None
    is_hyperlinked: bool = True
    referenced_channel_actionable: bool = True


@dataclass(frozen=True)
class Section:
    section_id: str
    label: str
    kind: SectionKind = SectionKind.OTHER
    claims_completeness: bool = False
    disclosures: tuple[DisclosureStatement, ...] = ()


@dataclass(frozen=True)
class InterfaceElement:
    """One interactive or textual element observed on a page.

    ``prominence`` is an ordinal 0-3 annotation (0 = barely visible,
    3 = dominant); traces cannot re-render pixels, so salience is recorded
    at capture time rather than computed.
    """

    element_id: str
    page_id: str
    kind: ElementKind
    label_text: str
    link_affordance: bool = True
    prominence: int = 1
    persistent_overlay: bool = False
    overlaps_rights_pathway: bool = False
    gated_behind: Optional[str] = None
    target_page: Optional[str] = None
    advertised_rights: frozenset[RightKind] = frozenset()
    actual_rights: frozenset[RightKind] = frozenset()
    scope_restriction: Optional[str] = None
    restriction_disclosed_at_entry: bool = True


@dataclass(frozen=True)
class FormField:
    field_id: str
    name: str
    required: bool = True
    sensitivity: Sensitivity = Sensitivity.NONE
    relevance: Relevance = Relevance.VERIFICATION_ESSENTIAL


@dataclass(frozen=True)
class RoleOptions:
    """A closed relationship-to-business picker, e.g. customer / employee."""

    options: tuple[str, ...]
    has_other_option: bool = False


@dataclass(frozen=True)
class FormSpec:
    """A request form, including what it actually supports and demands."""

    form_id: str
    page_id: str
    label_text: str
    framing: FormFraming = FormFraming.ACCESS
    multi_page: bool = False
    identifier_kinds_supported: frozenset[IdentifierKind] = frozenset()
    identifiers_per_submission: int = 1
    request_type_options: tuple[str, ...] = ()
    multi_select_allowed: bool = True
    role_options: Optional[RoleOptions] = None
    fields: tuple[FormField, ...] = ()
    actual_rights: frozenset[RightKind] = frozenset()
    coupled_actions: frozenset[RightKind] = frozenset()
    coupled_actions_disclosed: bool = True


@dataclass(frozen=True)
class SubmissionChannel:
    channel_id: str
    kind: ChannelKind
    declared_in: frozenset[str] = frozenset()
    reachable: bool = True
    entry_element: Optional[str] = None


@dataclass(frozen=True)
class PageState:
    page_id: str
    url: str
    title: str
    is_start: bool = False
    sections: tuple[Section, ...] = ()
    elements: tuple[InterfaceElement, ...] = ()


@dataclass(frozen=True)
class NavigationStep:
    index: int
    source_page: str
    action: StepAction
    element_id: Optional[str]
    destination_page: str


@dataclass(frozen=True)
class RunMetadata:
    duration_ms: int = 0
    step_count: int = 0
    token_usage: Optional[int] = None
    internal_success: bool = True


@dataclass(frozen=True)
class EvidenceRef:
    """A verifiable pointer into a trace: entity id plus a verbatim quote."""

    page_id: str
    element_or_disclosure_id: str
    quote: str


@dataclass(frozen=True)
class WorkflowTrace:
    """The complete record of one broker's rights-request portal.

    ``forms`` is a top-level list (parallel to ``channels``); each form
    carries the ``page_id`` of its hosting page.
    """

    broker_id: str
    start_url: str
    pages: tuple[PageState, ...]
    forms: tuple[FormSpec, ...] = ()
    channels: tuple[SubmissionChannel, ...] = ()
    steps: tuple[NavigationStep, ...] = ()
    metadata: RunMetadata = field(default_factory=RunMetadata)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class UnknownEntityError(KeyError):
    """An identifier does not resolve to any declared entity."""


class UnreachableTargetError(ValueError):
    """No link/button path connects the start page to the target's page."""


class EvidenceResolutionError(ValueError):
    """An EvidenceRef could not be verified against the trace."""


class UnknownEvidenceEntityError(EvidenceResolutionError):
    pass


class EvidenceQuoteMismatchError(EvidenceResolutionError):
    """The quote is not a substring of the entity's text; fabricated evidence."""


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    entity_id: str
    message: str


class TraceIndex:
    """Cheap lookup tables over a trace; built on demand, never mutated."""

    def __init__(self, trace: WorkflowTrace):
        self.trace = trace
        self.pages: dict[str, PageState] = {p.page_id: p for p in trace.pages}
        self.sections: dict[str, Section] = {}
        self.section_page: dict[str, str] = {}
        self.disclosures: dict[str, DisclosureStatement] = {}
        self.disclosure_page: dict[str, str] = {}
        self.disclosure_section: dict[str, str] = {}
        self.elements: dict[str, InterfaceElement] = {}
        self.forms: dict[str, FormSpec] = {f.form_id: f for f in trace.forms}
        self.fields: dict[str, FormField] = {}
        self.field_form: dict[str, str] = {}
        self.channels: dict[str, SubmissionChannel] = {
            c.channel_id: c for c in trace.channels
        }
        for page in trace.pages:
            for section in page.sections:
                self.sections[section.section_id] = section
                self.section_page[section.section_id] = page.page_id
                for disc in section.disclosures:
                    self.disclosures[disc.disclosure_id] = disc
                    self.disclosure_page[disc.disclosure_id] = page.page_id
                    self.disclosure_section[disc.disclosure_id] = section.section_id
            for element in page.elements:
                self.elements[element.element_id] = element
        for form in trace.forms:
            for f in form.fields:
                self.fields[f.field_id] = f
                self.field_form[f.field_id] = form.form_id

    @property
    def start_page(self) -> Optional[PageState]:
        for page in self.trace.pages:
            if page.is_start:
                return page
        return None

    def page_of_entity(self, entity_id: str) -> Optional[str]:
        if entity_id in self.elements:
            return self.elements[entity_id].page_id
        if entity_id in self.disclosures:
            return self.disclosure_page[entity_id]
        if entity_id in self.forms:
            return self.forms[entity_id].page_id
        if entity_id in self.fields:
            return self.forms[self.field_form[entity_id]].page_id
        return None

    def entity_text(self, entity_id: str) -> Optional[str]:
        if entity_id in self.elements:
            return self.elements[entity_id].label_text
        if entity_id in self.disclosures:
            return self.disclosures[entity_id].text
        if entity_id in self.forms:
            return self.forms[entity_id].label_text
        if entity_id in self.fields:
            return self.fields[entity_id].name
        return None

    def sections_on(self, page_id: str) -> Iterator[Section]:
        page = self.pages.get(page_id)
        return iter(page.sections) if page else iter(())

    def disclosures_with_pages(
        self,
    ) -> Iterator[tuple[str, Section, DisclosureStatement]]:
        """Yields (page_id, section, disclosure) over the whole trace."""
        for page in self.trace.pages:
            for section in page.sections:
                for disc in section.disclosures:
                    yield page.page_id, section, disc

    def link_edges(self) -> dict[str, set[str]]:
        """Page adjacency over link/button elements with a target page."""
        edges: dict[str, set[str]] = {p.page_id: set() for p in self.trace.pages}
        for element in self.elements.values():
            if element.kind in (ElementKind.LINK, ElementKind.BUTTON):
                if element.target_page is not None:
                    edges.setdefault(element.page_id, set()).add(element.target_page)
        return edges


def validate_trace(trace: WorkflowTrace) -> list[Violation]:
    """Checks every structural invariant; an empty report means valid.

    Violations are data, not errors. The report is deterministic: two runs
    over the same trace produce identical, identically-ordered lists.
    """
    found: list[Violation] = []

    def flag(code: str, entity_id: str, message: str) -> None:
        found.append(Violation(code, entity_id, message))

    if not trace.pages:
        flag("pages_empty", "", "pages empty: a trace must contain at least one page")
        return sorted(found, key=lambda v: (v.entity_id, v.code, v.message))

    # Global id uniqueness: every referenced identifier must resolve to
    # exactly one declared entity, so ids share one namespace.
    seen: dict[str, str] = {}

    def declare(entity_id: str, kind: str) -> None:
        if entity_id in seen:
            flag(
                "duplicate_id",
                entity_id,
                f"id {entity_id!r} declared as both {seen[entity_id]} and {kind}",
            )
        else:
            seen[entity_id] = kind

    for page in trace.pages:
        declare(page.page_id, "page")
        for section in page.sections:
            declare(section.section_id, "section")
            for disc in section.disclosures:
                declare(disc.disclosure_id, "disclosure")
        for element in page.elements:
            declare(element.element_id, "element")
    for form in trace.forms:
        declare(form.form_id, "form")
        for f in form.fields:
            declare(f.field_id, "field")
    for channel in trace.channels:
        declare(channel.channel_id, "channel")

    idx = TraceIndex(trace)

    starts = [p for p in trace.pages if p.is_start]
    if len(starts) != 1:
        flag("start_page", "", f"expected exactly one start page, found {len(starts)}")
    elif starts[0].url != trace.start_url:
        flag(
            "start_url_mismatch",
            starts[0].page_id,
            f"start page url {starts[0].url!r} != start_url {trace.start_url!r}",
        )

    for page in trace.pages:
        labels = [s.label for s in page.sections]
        for label in sorted(set(l for l in labels if labels.count(l) > 1)):
            flag(
                "duplicate_section_label",
                page.page_id,
                f"section label {label!r} appears more than once on page {page.page_id}",
            )
        for element in page.elements:
            if element.page_id != page.page_id:
                flag(
                    "element_page_mismatch",
                    element.element_id,
                    f"element hosted on {page.page_id} but declares page_id "
                    f"{element.page_id!r}",
                )
            if not 0 <= element.prominence <= 3:
                flag(
                    "prominence_range",
                    element.element_id,
                    f"prominence {element.prominence} outside [0, 3]",
                )
            if element.kind is ElementKind.LINK and element.target_page is None:
                flag(
                    "link_without_target",
                    element.element_id,
                    "kind=link requires target_page",
                )
            if element.target_page is not None and element.target_page not in idx.pages:
                flag(
                    "dangling_target_page",
                    element.element_id,
                    f"target page {element.target_page!r} is not declared",
                )
            if element.gated_behind is not None:
                gate = idx.elements.get(element.gated_behind)
                if gate is None:
                    flag(
                        "dangling_gate",
                        element.element_id,
                        f"gated_behind {element.gated_behind!r} is not declared",
                    )
                elif gate.kind is not ElementKind.EXPANDABLE:
                    flag(
                        "gate_not_expandable",
                        element.element_id,
                        f"gate {element.gated_behind!r} has kind {gate.kind.value}, "
                        "expected expandable",
                    )
                elif gate.page_id != element.page_id:
                    flag(
                        "gate_on_other_page",
                        element.element_id,
                        f"gate {element.gated_behind!r} lives on another page",
                    )

    for _page_id, _section, disc in idx.disclosures_with_pages():
        if disc.declared_exclusive and not disc.declared_channels:
            flag(
                "exclusive_without_channels",
                disc.disclosure_id,
                "declared_exclusive requires nonempty declared_channels",
            )

    for form in trace.forms:
        if form.page_id not in idx.pages:
            flag(
                "dangling_form_page",
                form.form_id,
                f"form page {form.page_id!r} is not declared",
            )
        if form.identifiers_per_submission < 1:
            flag(
                "identifiers_per_submission",
                form.form_id,
                "identifiers_per_submission must be >= 1",
            )
        if form.role_options is not None and not form.role_options.options:
            flag(
                "empty_role_options",
                form.form_id,
                "role_options present but empty",
            )

    for channel in trace.channels:
        if channel.kind is ChannelKind.WEBFORM and channel.reachable:
            if channel.entry_element is None:
                flag(
                    "webform_without_entry",
                    channel.channel_id,
                    "reachable webform channel requires entry_element",
                )
        if channel.entry_element is not None and channel.entry_element not in idx.elements:
            flag(
                "dangling_entry_element",
                channel.channel_id,
                f"entry element {channel.entry_element!r} is not declared",
            )
        for disc_id in sorted(channel.declared_in):
            if disc_id not in idx.disclosures:
                flag(
                    "dangling_declared_in",
                    channel.channel_id,
                    f"declared_in references unknown disclosure {disc_id!r}",
                )

    previous: Optional[NavigationStep] = None
    for i, step in enumerate(trace.steps):
        if i == 0 and step.index != 0:
            flag("step_index_start", str(step.index), "step indices must start at 0")
        if previous is not None:
            if step.index <= previous.index:
                flag(
                    "step_index_order",
                    str(step.index),
                    "step indices must be strictly increasing",
                )
            if step.source_page != previous.destination_page:
                flag(
                    "broken_walk",
                    str(step.index),
                    f"step {step.index} starts at {step.source_page!r} but the "
                    f"previous step ended at {previous.destination_page!r}",
                )
        for page_ref in (step.source_page, step.destination_page):
            if page_ref not in idx.pages:
                flag(
                    "dangling_step_page",
                    str(step.index),
                    f"step {step.index} references unknown page {page_ref!r}",
                )
        if step.element_id is not None and step.element_id not in idx.elements:
            flag(
                "dangling_step_element",
                str(step.index),
                f"step {step.index} references unknown element {step.element_id!r}",
            )
        previous = step

    md = trace.metadata
    if md.duration_ms < 0 or md.step_count < 0 or (
        md.token_usage is not None and md.token_usage < 0
    ):
        flag("negative_metadata", "", "metadata counts must be non-negative")

    return sorted(found, key=lambda v: (v.entity_id, v.code, v.message))


# ---------------------------------------------------------------------------
# Evidence resolution
# ---------------------------------------------------------------------------

def resolve_evidence(
    trace: WorkflowTrace, ref: EvidenceRef
) -> tuple[Union[InterfaceElement, DisclosureStatement, FormSpec, FormField], str]:
    """Looks up the referenced entity and verifies quote containment.

    Returns ``(entity, text)``. Raises :class:`UnknownEvidenceEntityError`
    for ids that do not resolve (or resolve onto a different page) and
    :class:`EvidenceQuoteMismatchError` when the quote is not an exact
    substring of the entity's text; the latter signals fabricated evidence.
    """
    idx = TraceIndex(trace)
    entity_id = ref.element_or_disclosure_id
    text = idx.entity_text(entity_id)
    if text is None:
        raise UnknownEvidenceEntityError(
            f"evidence references unknown entity {entity_id!r}"
        )
    hosting = idx.page_of_entity(entity_id)
    if hosting != ref.page_id:
        raise UnknownEvidenceEntityError(
            f"evidence places {entity_id!r} on page {ref.page_id!r} "
            f"but it lives on {hosting!r}"
        )
    if ref.quote not in text:
        raise EvidenceQuoteMismatchError(
            f"quote {ref.quote!r} is not a substring of entity {entity_id!r}"
        )
    entity: Union[InterfaceElement, DisclosureStatement, FormSpec, FormField]
    if entity_id in idx.elements:
        entity = idx.elements[entity_id]
    elif entity_id in idx.disclosures:
        entity = idx.disclosures[entity_id]
    elif entity_id in idx.forms:
        entity = idx.forms[entity_id]
    else:
        entity = idx.fields[entity_id]
    return entity, text


# ---------------------------------------------------------------------------
# Graph queries
# ---------------------------------------------------------------------------

def navigation_depth(trace: WorkflowTrace, target: str) -> int:
    """Minimum page transitions from the start page to the target's page.

    Breadth-first search over link/button edges; an element on the start
    page has depth 0. Raises :class:`UnknownEntityError` when the target id
    does not exist and :class:`UnreachableTargetError` when no path exists.
    """
    idx = TraceIndex(trace)
    target_page = idx.page_of_entity(target)
    if target_page is None:
        raise UnknownEntityError(f"unknown element {target!r}")
    start = idx.start_page
    if start is None:
        raise UnreachableTargetError("trace has no start page")
    edges = idx.link_edges()
    depths = {start.page_id: 0}
    queue = deque([start.page_id])
    while queue:
        page_id = queue.popleft()
        if page_id == target_page:
            return depths[page_id]
        for nxt in sorted(edges.get(page_id, ())):
            if nxt not in depths:
                depths[nxt] = depths[page_id] + 1
                queue.append(nxt)
    if target_page in depths:
        return depths[target_page]
    raise UnreachableTargetError(
        f"no link path from start page to {target_page!r} (element {target!r})"
    )


@dataclass(frozen=True)
class ChannelSummary:
    kind: ChannelKind
    declared_in: tuple[str, ...]
    reachable: bool
    complete_on_pages: frozenset[str]


def _page_instructs(
    disclosures: list[DisclosureStatement], kind: ChannelKind
) -> bool:
    """Full instructions for a channel = a rights-linked mention plus an
    actionable mention, possibly in different statements of the same scope."""
    rights_linked = any(
        kind in d.declared_channels and d.declared_rights for d in disclosures
    )
    actionable = any(
        kind in d.declared_channels and d.referenced_channel_actionable
        for d in disclosures
    )
    return rights_linked and actionable


def channel_inventory(trace: WorkflowTrace) -> dict[ChannelKind, ChannelSummary]:
    """Exhaustive per-kind summary of declared and discovered channels.

    ``complete_on_pages`` holds the pages where full instructions for the
    channel appear; an empty set with a complete trace-wide union is the
    cross-page-fragmentation signature.
    """
    idx = TraceIndex(trace)
    kinds: set[ChannelKind] = {c.kind for c in trace.channels}
    for _pid, _sec, disc in idx.disclosures_with_pages():
        kinds.update(disc.declared_channels)

    inventory: dict[ChannelKind, ChannelSummary] = {}
    for kind in sorted(kinds, key=lambda k: k.value):
        declared_in = tuple(
            sorted(
                disc.disclosure_id
                for _pid, _sec, disc in idx.disclosures_with_pages()
                if kind in disc.declared_channels
            )
        )
        reachable = any(c.kind is kind and c.reachable for c in trace.channels)
        complete_pages = frozenset(
            page.page_id
            for page in trace.pages
            if _page_instructs(
                [d for s in page.sections for d in s.disclosures], kind
            )
        )
        inventory[kind] = ChannelSummary(kind, declared_in, reachable, complete_pages)
    return inventory


# ---------------------------------------------------------------------------
# Heading-lexicon helper
# ---------------------------------------------------------------------------

_PUNCT_TABLE = str.maketrans({c: " " for c in r"""!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~"""})


def normalize_label(label: str) -> str:
    """Lowercase, punctuation-stripped, whitespace-collapsed label form."""
    return " ".join(label.translate(_PUNCT_TABLE).lower().split())


DEFAULT_VAGUE_SECTION_LABELS = frozenset(
    {"more information", "legal", "other topics", "resources", "miscellaneous"}
)

_SECTION_HEADING_LEXICON: tuple[tuple[SectionKind, tuple[str, ...]], ...] = (
    (SectionKind.CCPA_RIGHTS, ("ccpa", "california consumer privacy act")),
    (
        SectionKind.PRIVACY_RIGHTS,
        ("privacy rights", "your rights", "data rights", "california privacy"),
    ),
    (SectionKind.OPT_OUT, ("opt out", "do not sell", "do not share")),
    (SectionKind.CONTACT, ("contact",)),
    (SectionKind.MARKETING, ("marketing", "newsletter", "promotions")),
)


def infer_section_kind(
    label: str,
    vague_labels: frozenset[str] = DEFAULT_VAGUE_SECTION_LABELS,
) -> SectionKind:
    """Best-effort classification of a section heading.

    Helper only: the explicit ``Section.kind`` tag is authoritative wherever
    one is present; this mirrors how an annotator would read a heading.
    """
    norm = normalize_label(label)
    if norm in vague_labels:
        return SectionKind.OTHER
    for kind, needles in _SECTION_HEADING_LEXICON:
        for needle in needles:
            if needle in norm:
                return kind
    return SectionKind.OTHER
