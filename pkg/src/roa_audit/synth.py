"""Seeded synthesis of portal traces with planted dark-pattern mechanisms.

:func:`generate` builds a workflow trace that exhibits exactly the requested
(category, subtype) plants and, by construction, trips no other detection
rule under the default :class:`~roa_audit.detector.DetectorConfig`. That
exactness is what makes the generator usable as a ground-truth oracle: the
category label set of ``detect_all(generate(spec))`` equals the planted
category set, and every output is self-checked against that property before
it is returned.

Randomness only perturbs cosmetic content (labels, URL slugs, padding
sections); rule-relevant structure is a pure function of the plant set.
Plant combinations whose structural requirements contradict each other are
rejected with :class:`UnsatisfiablePlantError` rather than resolved on a
best-effort basis.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Union

from .detector import DetectorConfig, detect_all
from .taxonomy import Category, Subtype, subtype_by_id, CatalogError
from .trace import (
    ChannelKind,
    DisclosureStatement,
    ElementKind,
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
    validate_trace,
)

__all__ = [
    "PortalShape",
    "PlantSpec",
    "FaultKind",
    "Fault",
    "FaultPlan",
    "PortalBlueprint",
    "CorpusMix",
    "CorpusItem",
    "PlantSpecError",
    "UnsatisfiablePlantError",
    "DEFAULT_CORPUS_MIX",
    "SAFE_SUBTYPE_POOLS",
    "required_page_count",
    "generate",
    "inject_faults",
    "generate_corpus",
    "derive_item_seed",
]


class PlantSpecError(ValueError):
    """The plant spec itself is malformed (bad pair, out-of-range shape)."""


class UnsatisfiablePlantError(ValueError):
    """The requested plants cannot coexist with the purity guarantees."""


@dataclass(frozen=True)
class PortalShape:
    page_count: int = 3
    benign_padding_sections: int = 1


@dataclass(frozen=True)
class PlantSpec:
    """What a synthetic portal must exhibit. ``plants`` may be empty, in
    which case the portal is benign and must produce zero findings."""

    broker_id: str
    seed: int
    plants: frozenset[tuple[Category, str]] = frozenset()
    shape: PortalShape = field(default_factory=PortalShape)


def plant(subtype_id: str) -> tuple[Category, str]:
    """Convenience: build a (category, subtype_id) pair from the catalog."""
    subtype = subtype_by_id(subtype_id)
    return (subtype.category, subtype.subtype_id)


# Plants whose artifacts need the request form on its own page rather than
# merged onto the policy page.
_NEEDS_FORM_PAGE = frozenset(
    {
        "form_labeling_contradiction",
        "misleading_form_framing",
        "interaction_gated_disclosure",
        "cross_page_fragmentation",
        "excessive_navigational_depth",
        "misdirect_pathways",
    }
)

def required_page_count(
    plants: Iterable[tuple[Category, str]],
    config: DetectorConfig = DetectorConfig(),
) -> int:
    """Smallest page_count that can host the given plants. Page costs are
    additive: a deep navigation chain, a decoy destination, and a dedicated
    form page each consume budget of their own."""
    ids = {subtype_id for _category, subtype_id in plants}
    needed = 2  # start page + policy page
    if ids & _NEEDS_FORM_PAGE:
        needed += 1
    if "excessive_navigational_depth" in ids:
        needed += config.maze_depth_threshold - 1
    if "instruction_outcome_mismatch" in ids:
        needed += 1
    return needed


def _normalize_plants(
    plants: Iterable[tuple[Category, Union[str, Subtype]]]
) -> frozenset[tuple[Category, str]]:
    normalized = set()
    for category, subtype in plants:
        subtype_id = subtype.subtype_id if isinstance(subtype, Subtype) else subtype
        try:
            entry = subtype_by_id(subtype_id)
        except CatalogError as exc:
            raise PlantSpecError(str(exc)) from None
        if entry.category is not category:
            raise PlantSpecError(
                f"subtype {subtype_id!r} belongs to {entry.category.value}, "
                f"not {category.value}"
            )
        normalized.add((category, subtype_id))
    return frozenset(normalized)


def _validate_spec(spec: PlantSpec, config: DetectorConfig) -> frozenset[tuple[Category, str]]:
    plants = _normalize_plants(spec.plants)
    if not 2 <= spec.shape.page_count <= 8:
        raise PlantSpecError(
            f"page_count {spec.shape.page_count} outside [2, 8]"
        )
    if not 0 <= spec.shape.benign_padding_sections <= 5:
        raise PlantSpecError(
            f"benign_padding_sections {spec.shape.benign_padding_sections} "
            "outside [0, 5]"
        )
    needed = required_page_count(plants, config)
    if spec.shape.page_count < needed:
        raise UnsatisfiablePlantError(
            f"plants require at least {needed} pages, shape allows "
            f"{spec.shape.page_count}"
        )
    return plants


# ---------------------------------------------------------------------------
# Cosmetic vocabulary
# ---------------------------------------------------------------------------

_PADDING_SECTION_LABELS = (
    "How we collect information",
    "Cookies and tracking technologies",
    "Data retention",
    "Security practices",
    "Children's privacy",
    "Changes to this policy",
    "International transfers",
)
_PADDING_SECTION_TEXTS = (
    "We review this policy at least once a year and post updates here.",
    "We keep records only as long as our operations require.",
    "We use industry-standard safeguards to protect stored information.",
    "Our services are not directed to children under sixteen.",
)
_PADDING_PAGE_NAMES = ("About us", "Careers", "Press", "Our partners", "Blog")


def _slugify(broker_id: str) -> str:
    slug = "".join(c if c.isalnum() else "-" for c in broker_id.lower())
    return slug.strip("-") or "broker"


# ---------------------------------------------------------------------------
# Draft structures (mutable while building)
# ---------------------------------------------------------------------------

@dataclass
class _DraftSection:
    section_id: str
    label: str
    kind: SectionKind
    claims_completeness: bool = False
    disclosures: list[DisclosureStatement] = field(default_factory=list)


@dataclass
class _DraftPage:
    page_id: str
    url: str
    title: str
    is_start: bool = False
    sections: list[_DraftSection] = field(default_factory=list)
    elements: list[InterfaceElement] = field(default_factory=list)


class _Builder:
    def __init__(self, spec: PlantSpec, plants: frozenset[tuple[Category, str]],
                 config: DetectorConfig):
        self.spec = spec
        self.config = config
        self.planted = {s for _c, s in plants}
        self.rng = random.Random(spec.seed)
        self.slug = _slugify(spec.broker_id)
        self._counter = 0
        self.pages: dict[str, _DraftPage] = {}
        self.page_order: list[str] = []
        self.forms: list[dict] = []
        self.channels: dict[str, dict] = {}
        self.chain: list[str] = []  # home -> ... -> form-hosting page
        self.form_page_id = ""
        self.main_form: dict = {}
        self.instruction_section: Optional[_DraftSection] = None
        self.rights_section: Optional[_DraftSection] = None
        self.instruction_channels: set[ChannelKind] = set()

    # -- id and page helpers -------------------------------------------------

    def _next_id(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}-{self._counter:03d}"

    def _add_page(self, name: str, title: str, is_start: bool = False) -> _DraftPage:
        page_id = f"p-{name}"
        url = (
            f"https://{self.slug}.example/"
            if is_start
            else f"https://{self.slug}.example/{name}"
        )
        page = _DraftPage(page_id=page_id, url=url, title=title, is_start=is_start)
        self.pages[page_id] = page
        self.page_order.append(page_id)
        return page

    def _add_link(
        self,
        page: _DraftPage,
        label: str,
        target: Optional[str],
        *,
        kind: ElementKind = ElementKind.LINK,
        rights: frozenset[RightKind] = frozenset({RightKind.ACCESS}),
        actual: Optional[frozenset[RightKind]] = None,
        affordance: bool = True,
        prominence: int = 1,
        gated_behind: Optional[str] = None,
        persistent_overlay: bool = False,
        overlaps: bool = False,
        scope_restriction: Optional[str] = None,
        restriction_disclosed: bool = True,
    ) -> InterfaceElement:
        element = InterfaceElement(
            element_id=self._next_id("e"),
            page_id=page.page_id,
            kind=kind,
            label_text=label,
            link_affordance=affordance,
            prominence=prominence,
            persistent_overlay=persistent_overlay,
            overlaps_rights_pathway=overlaps,
            gated_behind=gated_behind,
            target_page=target,
            advertised_rights=rights,
            actual_rights=rights if actual is None else actual,
            scope_restriction=scope_restriction,
            restriction_disclosed_at_entry=restriction_disclosed,
        )
        page.elements.append(element)
        return element

    def _add_section(
        self,
        page: _DraftPage,
        label: str,
        kind: SectionKind,
        claims_completeness: bool = False,
    ) -> _DraftSection:
        section = _DraftSection(
            section_id=self._next_id("s"),
            label=label,
            kind=kind,
            claims_completeness=claims_completeness,
        )
        page.sections.append(section)
        return section

    def _add_disclosure(self, section: _DraftSection, **kwargs) -> DisclosureStatement:
        disc = DisclosureStatement(disclosure_id=self._next_id("d"), **kwargs)
        section.disclosures.append(disc)
        return disc

    def _instructionish_kind(self, natural: SectionKind) -> SectionKind:
        # Under a misplacement plant, every how-to-submit statement must live
        # outside the rights sections, or the misplacement rule stops firing.
        if "contextual_misplacement" in self.planted:
            return SectionKind.CONTACT
        return natural

    # -- build phases ---------------------------------------------------------

    def build(self) -> WorkflowTrace:
        self._layout()
        self._base_content()
        self._apply_channel_topology()
        self._apply_form_plants()
        self._apply_disclosure_plants()
        self._apply_element_plants()
        self._apply_selective_omission()
        self._padding()
        return self._freeze()

    def _layout(self) -> None:
        page_count = self.spec.shape.page_count
        home = self._add_page("home", "Home", is_start=True)
        policy = self._add_page("policy", "Privacy Policy")
        self.chain = [home.page_id, policy.page_id]

        budget = page_count - 2
        if "instruction_outcome_mismatch" in self.planted:
            budget -= 1  # reserve the decoy page
        if "excessive_navigational_depth" in self.planted:
            intermediates = self.config.maze_depth_threshold - 1
            for i in range(intermediates):
                page = self._add_page(f"step-{i + 1}", f"Privacy portal, step {i + 1}")
                self.chain.append(page.page_id)
            budget -= intermediates

        if budget >= 1:
            form_page = self._add_page("request", "Submit a request")
            self.form_page_id = form_page.page_id
            self.chain.append(form_page.page_id)
            budget -= 1
        else:
            # Two-page portal: the form lives on the policy page.
            self.form_page_id = self.chain[-1]

        for i in range(budget):
            name = self.rng.choice(_PADDING_PAGE_NAMES)
            page = self._add_page(f"extra-{i + 1}", name)
            self._add_link(
                self.pages[self.chain[0]],
                name,
                page.page_id,
                rights=frozenset(),
                actual=frozenset(),
            )

    def _base_content(self) -> None:
        home = self.pages[self.chain[0]]
        policy = self.pages[self.chain[1]]

        # Main navigation chain: home -> policy -> ... -> form page.
        self._add_link(home, "Privacy Policy", policy.page_id)
        for source_id, target_id in zip(self.chain[1:], self.chain[2:]):
            label = (
                "Start an access request"
                if target_id == self.form_page_id
                else "Continue to the privacy request portal"
            )
            self._add_link(self.pages[source_id], label, target_id)

        self.rights_section = self._add_section(
            policy, "Your Privacy Rights", SectionKind.PRIVACY_RIGHTS
        )
        if "contextual_misplacement" in self.planted:
            # Rights section keeps only a channel-free statement of the right;
            # the actual how-to guidance moves to a contact section.
            self._add_disclosure(
                self.rights_section,
                text=(
                    "California residents have the right to access the "
                    "personal information we maintain about them."
                ),
                declared_rights=frozenset({RightKind.ACCESS}),
            )
            self.instruction_section = self._add_section(
                policy, "Contact Us", SectionKind.CONTACT
            )
        else:
            self.instruction_section = self.rights_section

        self.instruction_channels = {ChannelKind.WEBFORM, ChannelKind.EMAIL}

        form_page = self.pages[self.form_page_id]
        entry = self._add_link(
            form_page,
            "Personal Information Access Request Form",
            None,
            kind=ElementKind.FORM_REF,
        )
        self.main_form = dict(
            form_id="f-main",
            page_id=self.form_page_id,
            label_text="Personal Information Access Request Form",
            framing=FormFraming.ACCESS,
            multi_page=False,
            identifier_kinds_supported=frozenset({IdentifierKind.EMAIL}),
            identifiers_per_submission=1,
            request_type_options=("Access my personal information",),
            multi_select_allowed=True,
            role_options=None,
            fields=[
                FormField("ff-name", "Full name"),
                FormField("ff-email", "Email address"),
            ],
            actual_rights=frozenset({RightKind.ACCESS}),
            coupled_actions=frozenset(),
            coupled_actions_disclosed=True,
        )
        self.channels["ch-web"] = dict(
            channel_id="ch-web",
            kind=ChannelKind.WEBFORM,
            declared_in=set(),
            reachable=True,
            entry_element=entry.element_id,
        )
        self.channels["ch-mail"] = dict(
            channel_id="ch-mail",
            kind=ChannelKind.EMAIL,
            declared_in=set(),
            reachable=True,
            entry_element=None,
        )

    def _apply_channel_topology(self) -> None:
        if "submission_channel_restriction" in self.planted:
            del self.channels["ch-mail"]
            self.instruction_channels = {ChannelKind.WEBFORM}
        if "install_external_app" in self.planted:
            self.channels.pop("ch-mail", None)
            self.channels["ch-web"]["reachable"] = False
            self.instruction_channels = {ChannelKind.EXTERNAL_APP}
            app_count = (
                1 if "submission_channel_restriction" in self.planted else 2
            )
            for i in range(app_count):
                cid = f"ch-app{i + 1}"
                self.channels[cid] = dict(
                    channel_id=cid,
                    kind=ChannelKind.EXTERNAL_APP,
                    declared_in=set(),
                    reachable=True,
                    entry_element=None,
                )

        # The main instruction statement reflects the final channel offer.
        kinds = self.instruction_channels
        if kinds == {ChannelKind.WEBFORM, ChannelKind.EMAIL}:
            text = (
                "You may submit a verified request to access your personal "
                f"information via email or webform. Email privacy@{self.slug}"
                ".example or use the request form linked below."
            )
        elif kinds == {ChannelKind.WEBFORM}:
            text = (
                "Submit a verified access request using our online request "
                "form linked below."
            )
        else:
            text = (
                "Install our mobile application for iOS or Android to submit "
                "your access request."
            )
        disc = self._add_disclosure(
            self.instruction_section,
            text=text,
            declared_channels=frozenset(kinds),
            declared_rights=frozenset({RightKind.ACCESS}),
        )
        for channel in self.channels.values():
            if channel["kind"] in kinds:
                channel["declared_in"].add(disc.disclosure_id)

        if "excessive_navigational_depth" in self.planted:
            # The depth rule measures reachable entry elements; make sure at
            # least one exists on the deep form page even when the webform
            # itself was made unreachable by another plant.
            if not any(
                c["reachable"] and c["entry_element"] is not None
                for c in self.channels.values()
            ):
                form_page = self.pages[self.form_page_id]
                button = self._add_link(
                    form_page,
                    "Download our privacy request app",
                    None,
                    kind=ElementKind.BUTTON,
                )
                deep_apps = [
                    c
                    for c in self.channels.values()
                    if c["reachable"] and c["kind"] is ChannelKind.EXTERNAL_APP
                ]
                if deep_apps:
                    deep_apps[0]["entry_element"] = button.element_id

    # -- form-level plants ----------------------------------------------------

    def _apply_form_plants(self) -> None:
        form = self.main_form
        if "identifier_fragmentation" in self.planted:
            form["identifier_kinds_supported"] = frozenset(
                {IdentifierKind.EMAIL, IdentifierKind.MAID}
            )
            form["identifiers_per_submission"] = 1
        if "request_type_fragmentation" in self.planted:
            form["request_type_options"] = (
                "Categories of personal information",
                "Specific pieces of personal information",
            )
            form["multi_select_allowed"] = False
        if "vague_request_labels" in self.planted:
            form["request_type_options"] = tuple(form["request_type_options"]) + (
                "Info Request",
            )
        if "role_classification_barriers" in self.planted:
            form["role_options"] = RoleOptions(
                options=("Customer", "Business partner", "Job applicant"),
                has_other_option=False,
            )
        if "excessive_identity_verification" in self.planted:
            form["fields"].append(
                FormField(
                    "ff-ssn",
                    "Social Security number",
                    sensitivity=Sensitivity.SSN,
                )
            )
        if "technical_identifier_burden" in self.planted:
            form["fields"].append(
                FormField(
                    "ff-maid",
                    "Mobile advertising identifier",
                    sensitivity=Sensitivity.DEVICE_IDENTIFIER,
                    relevance=Relevance.FULFILLMENT_ESSENTIAL,
                )
            )
        if "non_essential_required_fields" in self.planted:
            form["fields"].append(
                FormField(
                    "ff-account",
                    "Account number",
                    sensitivity=Sensitivity.ACCOUNT_NUMBER,
                    relevance=Relevance.NON_ESSENTIAL,
                )
            )
        if "self_identification_burden" in self.planted:
            form["fields"].append(
                FormField(
                    "ff-profile",
                    "Link to your profile page on our site",
                    sensitivity=Sensitivity.PROFILE_URL,
                    relevance=Relevance.FULFILLMENT_ESSENTIAL,
                )
            )
        if "coupled_outcomes" in self.planted:
            form["coupled_actions"] = frozenset({RightKind.OPT_OUT})
        if "ambiguous_rights_terminology" in self.planted:
            form["label_text"] = "Data Processing"
        if "misleading_form_framing" in self.planted:
            form["framing"] = FormFraming.OPT_OUT
            if "form_labeling_contradiction" not in self.planted:
                # Neutralize access-advertising links into the form page, or
                # the labeling-contradiction rule would fire as a side effect.
                self._neutralize_links_into(self.form_page_id)
        if "form_labeling_contradiction" in self.planted:
            for i in range(2):
                self.forms.append(
                    dict(
                        form_id=f"f-opt{i + 1}",
                        page_id=self.form_page_id,
                        label_text=(
                            "Do Not Sell My Personal Information"
                            if i == 0
                            else "Limit the Use of My Information"
                        ),
                        framing=FormFraming.OPT_OUT,
                        multi_page=False,
                        identifier_kinds_supported=frozenset({IdentifierKind.EMAIL}),
                        identifiers_per_submission=1,
                        request_type_options=("Opt out of sale",),
                        multi_select_allowed=True,
                        role_options=None,
                        fields=[FormField(f"ff-opt{i + 1}", "Email address")],
                        actual_rights=frozenset({RightKind.OPT_OUT}),
                        coupled_actions=frozenset(),
                        coupled_actions_disclosed=True,
                    )
                )

    def _neutralize_links_into(self, page_id: str) -> None:
        for page in self.pages.values():
            page.elements = [
                replace(
                    e,
                    advertised_rights=frozenset(),
                    actual_rights=frozenset(),
                )
                if e.target_page == page_id and e.advertised_rights
                else e
                for e in page.elements
            ]

    # -- disclosure-level plants ----------------------------------------------

    def _apply_disclosure_plants(self) -> None:
        policy = self.pages[self.chain[1]]
        assert self.instruction_section is not None

        if "submission_path_conflict" in self.planted:
            # The exclusive claim must rule out at least one channel the main
            # statement offers, whatever the channel topology plants left us.
            if self.instruction_channels != {ChannelKind.WEBFORM}:
                exclusive_kind = ChannelKind.WEBFORM
                text = (
                    "Requests are accepted exclusively through our online "
                    "request form; no other channel is monitored."
                )
            else:
                exclusive_kind = ChannelKind.EMAIL
                text = (
                    "Requests are accepted exclusively by email; submissions "
                    "made any other way are not processed."
                )
            section = self._add_section(
                policy,
                "Submitting your request",
                self._instructionish_kind(SectionKind.PRIVACY_RIGHTS),
            )
            disc = self._add_disclosure(
                section,
                text=text,
                declared_channels=frozenset({exclusive_kind}),
                declared_exclusive=True,
                declared_rights=frozenset({RightKind.ACCESS}),
            )
            for channel in self.channels.values():
                if channel["kind"] is exclusive_kind:
                    channel["declared_in"].add(disc.disclosure_id)

        if "submission_scope_contradiction" in self.planted:
            disc = self._add_disclosure(
                self.instruction_section,
                text=(
                    "Use our online request form to access, delete, or "
                    "correct the personal information we hold."
                ),
                declared_channels=frozenset({ChannelKind.WEBFORM}),
                declared_rights=frozenset(
                    {RightKind.ACCESS, RightKind.DELETE, RightKind.CORRECT}
                ),
            )
            if "ch-web" in self.channels:
                self.channels["ch-web"]["declared_in"].add(disc.disclosure_id)

        if "non_actionable_references" in self.planted:
            self._add_disclosure(
                self.instruction_section,
                text=(
                    "You may also direct access requests to our privacy team "
                    "by email."
                ),
                declared_channels=frozenset({ChannelKind.EMAIL}),
                declared_rights=frozenset({RightKind.ACCESS}),
                is_hyperlinked=False,
                referenced_channel_actionable=False,
            )

        if "section_label_mismatch" in self.planted:
            assert self.rights_section is not None
            self._add_disclosure(
                self.rights_section,
                text=(
                    'See the section titled "Data Rights Portal" for '
                    "submission details."
                ),
                referenced_section_label="Data Rights Portal",
            )

        # Fragmentation channels stay unreachable when a topology plant
        # constrains the reachable set; the fragmentation rules only read
        # the disclosures.
        frag_reachable = not (
            {"install_external_app", "submission_channel_restriction"}
            & self.planted
        )

        if "within_page_fragmentation" in self.planted:
            self.channels["ch-phone"] = dict(
                channel_id="ch-phone",
                kind=ChannelKind.PHONE,
                declared_in=set(),
                reachable=frag_reachable,
                entry_element=None,
            )
            part_one = self._add_section(
                policy,
                "Requesting access by phone",
                self._instructionish_kind(SectionKind.PRIVACY_RIGHTS),
            )
            d1 = self._add_disclosure(
                part_one,
                text=(
                    "You can request access to your information by calling "
                    "our privacy line."
                ),
                declared_channels=frozenset({ChannelKind.PHONE}),
                declared_rights=frozenset({RightKind.ACCESS}),
                referenced_channel_actionable=False,
            )
            part_two = self._add_section(policy, "Telephone directory", SectionKind.OTHER)
            d2 = self._add_disclosure(
                part_two,
                text="Privacy line: 1-800-555-0137, weekdays 9am to 5pm.",
                declared_channels=frozenset({ChannelKind.PHONE}),
                referenced_channel_actionable=True,
            )
            self.channels["ch-phone"]["declared_in"].update(
                {d1.disclosure_id, d2.disclosure_id}
            )

        if "cross_page_fragmentation" in self.planted:
            self.channels["ch-post"] = dict(
                channel_id="ch-post",
                kind=ChannelKind.POSTAL,
                declared_in=set(),
                reachable=frag_reachable,
                entry_element=None,
            )
            d1 = self._add_disclosure(
                self.instruction_section,
                text=(
                    "Access requests are also accepted by postal mail "
                    "addressed to our compliance department."
                ),
                declared_channels=frozenset({ChannelKind.POSTAL}),
                declared_rights=frozenset({RightKind.ACCESS}),
                referenced_channel_actionable=False,
            )
            other_page = self.pages[self.form_page_id]
            mail_section = self._add_section(
                other_page, "Mailing address", SectionKind.OTHER
            )
            d2 = self._add_disclosure(
                mail_section,
                text=(
                    "Compliance Department, 500 Market Street, Sacramento, "
                    "CA 95814."
                ),
                declared_channels=frozenset({ChannelKind.POSTAL}),
                referenced_channel_actionable=True,
            )
            self.channels["ch-post"]["declared_in"].update(
                {d1.disclosure_id, d2.disclosure_id}
            )

    # -- element-level plants ---------------------------------------------------

    def _chain_next_from_policy(self) -> str:
        # Extra links out of the policy page must follow the main chain, or
        # they would shorten the navigation depth a maze plant relies on.
        return self.chain[2] if len(self.chain) > 2 else self.chain[1]

    def _apply_element_plants(self) -> None:
        home = self.pages[self.chain[0]]
        policy = self.pages[self.chain[1]]

        if "visually_disguised_affordances" in self.planted:
            self._add_link(
                home,
                "Your California Privacy Rights",
                policy.page_id,
                affordance=False,
            )

        if "interaction_gated_disclosure" in self.planted:
            gate = self._add_link(
                policy,
                "More privacy information",
                None,
                kind=ElementKind.EXPANDABLE,
                rights=frozenset(),
                actual=frozenset(),
            )
            # Rights-bearing through actual_rights only: advertising access
            # here would retrigger the labeling-contradiction rule whenever
            # the destination page's forms are reframed by another plant.
            self._add_link(
                policy,
                "Open the access request instructions",
                self._chain_next_from_policy(),
                rights=frozenset(),
                actual=frozenset({RightKind.ACCESS}),
                gated_behind=gate.element_id,
            )

        if "instruction_outcome_mismatch" in self.planted:
            decoy = self._add_page("signup", "Create your account")
            self._add_link(
                policy,
                "Access your data now",
                decoy.page_id,
                rights=frozenset({RightKind.ACCESS}),
                actual=frozenset(),
            )

        if "misdirect_pathways" in self.planted:
            self._add_link(
                policy,
                "Submit a privacy request",
                self._chain_next_from_policy(),
                rights=frozenset(),
                actual=frozenset(),
                scope_restriction="B2B clients only",
                restriction_disclosed=False,
            )

        if "competing_cta_dominance" in self.planted:
            target = self._first_rights_page()
            self._add_link(
                self.pages[target],
                "Create a free account today!",
                None,
                kind=ElementKind.BUTTON,
                rights=frozenset(),
                actual=frozenset(),
                prominence=3,
            )

        if "persistent_overlay_interference" in self.planted:
            self._add_link(
                policy,
                "Chat with us",
                None,
                kind=ElementKind.OVERLAY,
                rights=frozenset(),
                actual=frozenset(),
                persistent_overlay=True,
                overlaps=True,
            )

    def _first_rights_page(self) -> str:
        for page_id in self.page_order:
            for element in self.pages[page_id].elements:
                if element.advertised_rights or element.actual_rights:
                    return page_id
        return self.chain[1]

    def _apply_selective_omission(self) -> None:
        if "selective_omission" not in self.planted:
            return
        policy = self.pages[self.chain[1]]
        declared_kinds: set[ChannelKind] = set()
        for page in self.pages.values():
            for section in page.sections:
                for disc in section.disclosures:
                    declared_kinds.update(disc.declared_channels)
        # Phone/postal stay out: declaring them fully here would repair the
        # fragmentation plants that rely on their instructions being split.
        eligible = sorted(
            declared_kinds - {ChannelKind.PHONE, ChannelKind.POSTAL},
            key=lambda k: k.value,
        )
        inventory_kinds = declared_kinds | {
            c["kind"] for c in self.channels.values()
        }
        claimed: frozenset[ChannelKind] = frozenset()
        if eligible and inventory_kinds - {eligible[0]}:
            claimed = frozenset(eligible[:1])
        section = self._add_section(
            policy,
            "Your complete privacy rights guide",
            self._instructionish_kind(SectionKind.CCPA_RIGHTS),
            claims_completeness=True,
        )
        if claimed:
            kind = next(iter(claimed))
            text = (
                "This guide fully describes how to exercise your rights: "
                f"submit your request by {kind.value.replace('_', ' ')}."
            )
        else:
            text = (
                "This guide fully describes your rights under California "
                "law."
            )
        self._add_disclosure(
            section,
            text=text,
            declared_channels=claimed,
            declared_rights=frozenset({RightKind.ACCESS}),
        )

    def _padding(self) -> None:
        policy = self.pages[self.chain[1]]
        labels = list(_PADDING_SECTION_LABELS)
        self.rng.shuffle(labels)
        for i in range(self.spec.shape.benign_padding_sections):
            section = self._add_section(policy, labels[i % len(labels)], SectionKind.OTHER)
            if i < len(labels):
                section.label = labels[i]
            self._add_disclosure(
                section, text=self.rng.choice(_PADDING_SECTION_TEXTS)
            )

    # -- assembly ---------------------------------------------------------------

    def _freeze(self) -> WorkflowTrace:
        pages = tuple(
            PageState(
                page_id=page.page_id,
                url=page.url,
                title=page.title,
                is_start=page.is_start,
                sections=tuple(
                    Section(
                        section_id=s.section_id,
                        label=s.label,
                        kind=s.kind,
                        claims_completeness=s.claims_completeness,
                        disclosures=tuple(s.disclosures),
                    )
                    for s in page.sections
                ),
                elements=tuple(page.elements),
            )
            for page_id in self.page_order
            for page in (self.pages[page_id],)
        )
        forms = [dict(self.main_form)] + self.forms
        frozen_forms = tuple(
            FormSpec(
                form_id=f["form_id"],
                page_id=f["page_id"],
                label_text=f["label_text"],
                framing=f["framing"],
                multi_page=f["multi_page"],
                identifier_kinds_supported=f["identifier_kinds_supported"],
                identifiers_per_submission=f["identifiers_per_submission"],
                request_type_options=tuple(f["request_type_options"]),
                multi_select_allowed=f["multi_select_allowed"],
                role_options=f["role_options"],
                fields=tuple(f["fields"]),
                actual_rights=f["actual_rights"],
                coupled_actions=f["coupled_actions"],
                coupled_actions_disclosed=f["coupled_actions_disclosed"],
            )
            for f in forms
        )
        channels = tuple(
            SubmissionChannel(
                channel_id=c["channel_id"],
                kind=c["kind"],
                declared_in=frozenset(c["declared_in"]),
                reachable=c["reachable"],
                entry_element=c["entry_element"],
            )
            for c in sorted(self.channels.values(), key=lambda c: c["channel_id"])
        )

        steps = [
            NavigationStep(0, self.chain[0], StepAction.OPEN_URL, None, self.chain[0])
        ]
        for source_id, target_id in zip(self.chain, self.chain[1:]):
            element_id = next(
                e.element_id
                for e in self.pages[source_id].elements
                if e.target_page == target_id
            )
            steps.append(
                NavigationStep(
                    len(steps), source_id, StepAction.CLICK, element_id, target_id
                )
            )

        start = self.pages[self.chain[0]]
        return WorkflowTrace(
            broker_id=self.spec.broker_id,
            start_url=start.url,
            pages=pages,
            forms=frozen_forms,
            channels=channels,
            steps=tuple(steps),
            metadata=RunMetadata(
                duration_ms=120 * len(steps),
                step_count=len(steps),
                token_usage=None,
                internal_success=True,
            ),
        )


def generate(
    spec: PlantSpec, config: DetectorConfig = DetectorConfig()
) -> WorkflowTrace:
    """Builds a synthetic portal exhibiting exactly the planted mechanisms.

    The output always passes :func:`validate_trace`, and the generator
    re-runs :func:`detect_all` on it before returning: if the detected
    subtype set differs from the plants in any way, the combination is
    rejected with :class:`UnsatisfiablePlantError` instead of silently
    shipping an inexact oracle.
    """
    plants = _validate_spec(spec, config)
    trace = _Builder(spec, plants, config).build()

    violations = validate_trace(trace)
    if violations:
        raise UnsatisfiablePlantError(
            f"generated trace failed validation: {violations[0].message}"
        )
    report = detect_all(trace, config)
    detected = {(f.category, f.subtype.subtype_id) for f in report.findings}
    if detected != plants:
        unexpected = sorted(s for _c, s in detected - plants)
        missing = sorted(s for _c, s in plants - detected)
        raise UnsatisfiablePlantError(
            "plant combination is not exactly realizable: "
            f"missing={missing} unexpected={unexpected}"
        )
    return trace


# ---------------------------------------------------------------------------
# Fault injection
# ---------------------------------------------------------------------------

class FaultKind(str, Enum):
    CAPTCHA_PAGE = "captcha_page"
    CRASH_AT_STEP = "crash_at_step"
    TIMEOUT_AT_STEP = "timeout_at_step"
    MALFORMED_INTERNAL_STATE = "malformed_internal_state"
    PDF_ONLY_INSTRUCTIONS = "pdf_only_instructions"
    BROKEN_POLICY_LINK = "broken_policy_link"
    UNEXPOSED_FORM_PAGE = "unexposed_form_page"


_STEPPED_FAULTS = {FaultKind.CRASH_AT_STEP, FaultKind.TIMEOUT_AT_STEP}


@dataclass(frozen=True)
class Fault:
    kind: FaultKind
    step: Optional[int] = None


@dataclass(frozen=True)
class FaultPlan:
    faults: tuple[Fault, ...] = ()


@dataclass(frozen=True)
class PortalBlueprint:
    """A replayable portal: the trace plus at most one runtime fault."""

    trace: WorkflowTrace
    fault: Optional[Fault] = None


def inject_faults(trace: WorkflowTrace, plan: FaultPlan) -> PortalBlueprint:
    """Wraps a trace as a runnable portal that raises the configured fault.

    At most one fault per run; stepped faults (crash/timeout) must name a
    step within the recorded walk (1-based).
    """
    if len(plan.faults) > 1:
        raise ValueError("at most one fault per run")
    fault = plan.faults[0] if plan.faults else None
    if fault is not None:
        if fault.kind in _STEPPED_FAULTS:
            if fault.step is None:
                raise ValueError(f"{fault.kind.value} requires a step number")
            if not 1 <= fault.step <= len(trace.steps):
                raise ValueError(
                    f"fault step {fault.step} beyond trace length "
                    f"{len(trace.steps)}"
                )
        elif fault.step is not None:
            raise ValueError(f"{fault.kind.value} does not take a step number")
    return PortalBlueprint(trace=trace, fault=fault)


# ---------------------------------------------------------------------------
# Corpus generation
# ---------------------------------------------------------------------------

# Per-category subtype pools whose members compose cleanly across
# categories; random corpora draw from these. The remaining subtypes
# (channel-topology and section-surgery plants) stay available through
# explicit PlantSpecs.
SAFE_SUBTYPE_POOLS: dict[Category, tuple[str, ...]] = {
    Category.ADDING_STEPS: (
        "identifier_fragmentation",
        "request_type_fragmentation",
    ),
    Category.CONFLICTING_INFO: (
        "submission_path_conflict",
        "submission_scope_contradiction",
    ),
    Category.CREATING_BARRIERS: (
        "excessive_identity_verification",
        "technical_identifier_burden",
        "non_essential_required_fields",
        "role_classification_barriers",
        "self_identification_burden",
    ),
    Category.FEEDFORWARD_AMBIGUITY: (
        "coupled_outcomes",
        "ambiguous_rights_terminology",
        "instruction_outcome_mismatch",
    ),
    Category.HIDDEN_INFO: (
        "visually_disguised_affordances",
        "interaction_gated_disclosure",
        "non_actionable_references",
        "selective_omission",
    ),
    Category.INFO_WITHOUT_CONTEXT: (
        "misdirect_pathways",
        "vague_request_labels",
        "section_label_mismatch",
    ),
    Category.PRIVACY_MAZES: (
        "within_page_fragmentation",
        "cross_page_fragmentation",
        "excessive_navigational_depth",
    ),
    Category.VISUAL_PROMINENCE: (
        "competing_cta_dominance",
        "persistent_overlay_interference",
    ),
}


@dataclass(frozen=True)
class CorpusMix:
    """Target per-category prevalence for a synthetic corpus, with the
    subtype pool each planted category draws from."""

    category_rates: Mapping[Category, float]
    subtype_pools: Mapping[Category, tuple[str, ...]] = field(
        default_factory=lambda: dict(SAFE_SUBTYPE_POOLS)
    )

    def __post_init__(self):
        for category, rate in self.category_rates.items():
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"rate for {category.value} outside [0, 1]")


# Field-observed per-category prevalence used as the default corpus mix.
DEFAULT_CORPUS_MIX = CorpusMix(
    category_rates={
        Category.ADDING_STEPS: 0.241,
        Category.CONFLICTING_INFO: 0.261,
        Category.CREATING_BARRIERS: 0.556,
        Category.FEEDFORWARD_AMBIGUITY: 0.378,
        Category.HIDDEN_INFO: 0.211,
        Category.INFO_WITHOUT_CONTEXT: 0.337,
        Category.PRIVACY_MAZES: 0.268,
        Category.VISUAL_PROMINENCE: 0.278,
    }
)


@dataclass(frozen=True)
class CorpusItem:
    spec: PlantSpec
    trace: WorkflowTrace
    labels: dict[Category, bool]
    planted_subtypes: tuple[str, ...]


def derive_item_seed(seed: int, index: int) -> int:
    """Stable per-item seed; independent of interpreter hash randomization."""
    payload = f"{seed}:{index}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def generate_corpus(
    n: int,
    seed: int,
    mix: CorpusMix = DEFAULT_CORPUS_MIX,
    config: DetectorConfig = DetectorConfig(),
) -> list[CorpusItem]:
    """Reproducible corpus of (trace, ground-truth labels) pairs.

    Category presence is assigned by quota (round(rate * n) brokers per
    category, positions shuffled), so planted prevalence tracks the mix to
    within half a broker even for small corpora.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    assigner = random.Random(derive_item_seed(seed, -1))
    categories = sorted(mix.category_rates.keys(), key=lambda c: c.value)

    assigned: dict[Category, set[int]] = {}
    for category in categories:
        count = round(mix.category_rates[category] * n)
        assigned[category] = set(assigner.sample(range(n), count))

    items: list[CorpusItem] = []
    for i in range(n):
        plants: set[tuple[Category, str]] = set()
        for category in categories:
            if i in assigned[category]:
                pool = mix.subtype_pools.get(
                    category, SAFE_SUBTYPE_POOLS[category]
                )
                plants.add((category, assigner.choice(pool)))
        page_floor = required_page_count(plants, config)
        spec = PlantSpec(
            broker_id=f"broker-{i:04d}",
            seed=derive_item_seed(seed, i),
            plants=frozenset(plants),
            shape=PortalShape(
                page_count=max(page_floor, assigner.randint(3, 6)),
                benign_padding_sections=assigner.randint(0, 3),
            ),
        )
        trace = generate(spec, config)
        labels = {
            category: any(c is category for c, _s in plants)
            for category in Category
        }
        items.append(
            CorpusItem(
                spec=spec,
                trace=trace,
                labels=labels,
                planted_subtypes=tuple(sorted(s for _c, s in plants)),
            )
        )
    return items
