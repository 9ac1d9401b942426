"""Rule engine: every mechanism's fire and no-fire cases, plus engine
properties (determinism, coherence, monotonicity, evidence soundness)."""

from __future__ import annotations

import itertools
from dataclasses import replace

import pytest

from roa_audit.detector import (
    DetectorConfig,
    InvalidTraceError,
    detect_adding_steps,
    detect_all,
    detect_conflicting_info,
    detect_creating_barriers,
    detect_feedforward_ambiguity,
    detect_hidden_info,
    detect_info_without_context,
    detect_privacy_mazes,
    detect_visual_prominence,
)
from roa_audit.documents import dumps_canonical, report_to_doc
from roa_audit.synth import PlantSpec, PortalShape, generate, plant
from roa_audit.taxonomy import Category
from roa_audit.trace import (
    ChannelKind,
    DisclosureStatement,
    ElementKind,
    FormField,
    FormFraming,
    InterfaceElement,
    PageState,
    Relevance,
    RightKind,
    Section,
    SectionKind,
    Sensitivity,
    SubmissionChannel,
    WorkflowTrace,
    resolve_evidence,
    validate_trace,
)


ACCESS = frozenset({RightKind.ACCESS})


def subtypes(findings) -> set[str]:
    return {f.subtype.subtype_id for f in findings}


# -- fixture surgery helpers -------------------------------------------------

def with_form(trace: WorkflowTrace, **changes) -> WorkflowTrace:
    return replace(trace, forms=(replace(trace.forms[0], **changes),) + trace.forms[1:])


def add_element(trace: WorkflowTrace, page_id: str, element: InterfaceElement) -> WorkflowTrace:
    pages = tuple(
        replace(p, elements=p.elements + (element,)) if p.page_id == page_id else p
        for p in trace.pages
    )
    return replace(trace, pages=pages)


def add_section(trace: WorkflowTrace, page_id: str, section: Section) -> WorkflowTrace:
    pages = tuple(
        replace(p, sections=p.sections + (section,)) if p.page_id == page_id else p
        for p in trace.pages
    )
    return replace(trace, pages=pages)


def checked(trace: WorkflowTrace) -> WorkflowTrace:
    assert validate_trace(trace) == []
    return trace


# ---------------------------------------------------------------------------
# Adding steps
# ---------------------------------------------------------------------------

def test_identifier_fragmentation_fires(f1):
    from roa_audit.trace import IdentifierKind

    trace = checked(
        with_form(
            f1,
            identifier_kinds_supported=frozenset(
                {IdentifierKind.EMAIL, IdentifierKind.MAID}
            ),
            identifiers_per_submission=1,
        )
    )
    assert subtypes(detect_adding_steps(trace)) == {"identifier_fragmentation"}


def test_single_identifier_cannot_fragment(f1):
    assert detect_adding_steps(checked(f1)) == []


def test_request_type_fragmentation_fires(f1):
    trace = checked(
        with_form(
            f1,
            request_type_options=(
                "Categories of personal information",
                "Specific pieces",
            ),
            multi_select_allowed=False,
        )
    )
    assert subtypes(detect_adding_steps(trace)) == {"request_type_fragmentation"}


def test_multi_select_disarms_fragmentation(f1):
    trace = checked(
        with_form(
            f1,
            request_type_options=(
                "Categories of personal information",
                "Specific pieces",
            ),
            multi_select_allowed=True,
        )
    )
    assert detect_adding_steps(trace) == []


# ---------------------------------------------------------------------------
# Conflicting information
# ---------------------------------------------------------------------------

def _conflict_pairs_oracle(trace: WorkflowTrace) -> set[tuple[str, str]]:
    """Independent pairwise set-logic check over all disclosure pairs."""
    discs = [
        d for p in trace.pages for s in p.sections for d in s.disclosures
    ]
    pairs = set()
    for d1, d2 in itertools.permutations(discs, 2):
        if d2.declared_exclusive and d1.declared_channels - d2.declared_channels:
            pairs.add((d1.disclosure_id, d2.disclosure_id))
    return pairs


def test_submission_path_conflict_cites_both_disclosures(f1):
    exclusive = DisclosureStatement(
        disclosure_id="d-exclusive",
        text="Requests are accepted only through the online form.",
        declared_channels=frozenset({ChannelKind.WEBFORM}),
        declared_exclusive=True,
        declared_rights=ACCESS,
    )
    trace = checked(
        add_section(
            f1,
            "p-policy",
            Section(
                section_id="s-submitting",
                label="Submitting",
                kind=SectionKind.PRIVACY_RIGHTS,
                disclosures=(exclusive,),
            ),
        )
    )
    findings = detect_conflicting_info(trace)
    assert subtypes(findings) == {"submission_path_conflict"}
    cited = {ref.element_or_disclosure_id for f in findings for ref in f.evidence}
    assert cited == {"d-main", "d-exclusive"}
    # pairwise oracle agrees there is exactly one conflicting ordered pair
    assert _conflict_pairs_oracle(trace) == {("d-main", "d-exclusive")}


def test_single_disclosure_cannot_conflict(f1):
    assert detect_conflicting_info(checked(f1)) == []
    assert _conflict_pairs_oracle(f1) == set()


def test_submission_scope_contradiction(f1):
    # The statement claims three rights for the webform pathway whose entry
    # interface supports only opt-out.
    claim = DisclosureStatement(
        disclosure_id="d-claim",
        text="Use our form to access, delete, or opt out.",
        declared_channels=frozenset({ChannelKind.WEBFORM}),
        declared_rights=frozenset(
            {RightKind.ACCESS, RightKind.DELETE, RightKind.OPT_OUT}
        ),
    )
    trace = add_section(
        f1,
        "p-policy",
        Section(
            section_id="s-claim",
            label="Claims",
            kind=SectionKind.PRIVACY_RIGHTS,
            disclosures=(claim,),
        ),
    )
    channels = (
        replace(
            trace.channels[0], declared_in=trace.channels[0].declared_in | {"d-claim"}
        ),
    ) + trace.channels[1:]
    pages = tuple(
        replace(
            p,
            elements=tuple(
                replace(e, actual_rights=frozenset({RightKind.OPT_OUT}))
                if e.element_id == "e-form"
                else e
                for e in p.elements
            ),
        )
        for p in trace.pages
    )
    trace = checked(replace(trace, pages=pages, channels=channels))
    findings = detect_conflicting_info(trace)
    assert "submission_scope_contradiction" in subtypes(findings)


def test_form_labeling_contradiction(f1):
    # Two do-not-sell forms dominate the destination of an access link.
    opt_forms = tuple(
        replace(
            f1.forms[0],
            form_id=f"f-opt{i}",
            label_text="Do Not Sell My Personal Information",
            framing=FormFraming.OPT_OUT,
            actual_rights=frozenset({RightKind.OPT_OUT}),
            fields=(FormField(f"ff-opt{i}", "Email address"),),
        )
        for i in (1, 2)
    )
    trace = checked(replace(f1, forms=f1.forms + opt_forms))
    findings = detect_conflicting_info(trace)
    assert subtypes(findings) == {"form_labeling_contradiction"}


# ---------------------------------------------------------------------------
# Creating barriers
# ---------------------------------------------------------------------------

def test_single_channel_restriction(f1):
    trace = checked(replace(f1, channels=f1.channels[:1]))  # webform only
    findings = detect_creating_barriers(trace)
    assert subtypes(findings) == {"submission_channel_restriction"}


def test_required_ssn_is_excessive_verification(f1):
    trace = checked(
        with_form(
            f1,
            fields=f1.forms[0].fields
            + (FormField("ff-ssn", "SSN", sensitivity=Sensitivity.SSN),),
        )
    )
    assert subtypes(detect_creating_barriers(trace)) == {
        "excessive_identity_verification"
    }


def test_optional_ssn_is_not_flagged(f1):
    trace = checked(
        with_form(
            f1,
            fields=f1.forms[0].fields
            + (
                FormField(
                    "ff-ssn", "SSN", required=False, sensitivity=Sensitivity.SSN
                ),
            ),
        )
    )
    assert detect_creating_barriers(trace) == []


def test_two_channels_all_essential_no_findings(f1):
    assert detect_creating_barriers(checked(f1)) == []


@pytest.mark.parametrize(
    "sensitivity,relevance,expected",
    [
        (Sensitivity.DEVICE_IDENTIFIER, Relevance.FULFILLMENT_ESSENTIAL, "technical_identifier_burden"),
        (Sensitivity.ACCOUNT_NUMBER, Relevance.NON_ESSENTIAL, "non_essential_required_fields"),
        (Sensitivity.PROFILE_URL, Relevance.FULFILLMENT_ESSENTIAL, "self_identification_burden"),
    ],
)
def test_field_level_barriers(f1, sensitivity, relevance, expected):
    trace = checked(
        with_form(
            f1,
            fields=f1.forms[0].fields
            + (
                FormField(
                    "ff-extra", "Extra", sensitivity=sensitivity, relevance=relevance
                ),
            ),
        )
    )
    assert subtypes(detect_creating_barriers(trace)) == {expected}


def test_rigid_role_list_without_other(f1):
    from roa_audit.trace import RoleOptions

    trace = checked(
        with_form(
            f1,
            role_options=RoleOptions(("Customer", "Employee"), has_other_option=False),
        )
    )
    assert subtypes(detect_creating_barriers(trace)) == {
        "role_classification_barriers"
    }


def test_role_list_with_other_is_fine(f1):
    from roa_audit.trace import RoleOptions

    trace = checked(
        with_form(
            f1,
            role_options=RoleOptions(("Customer", "Other"), has_other_option=True),
        )
    )
    assert detect_creating_barriers(trace) == []


def test_app_only_portal_fires_install(f1):
    channels = (
        replace(f1.channels[0], reachable=False),
        SubmissionChannel(channel_id="ch-ios", kind=ChannelKind.EXTERNAL_APP),
        SubmissionChannel(channel_id="ch-android", kind=ChannelKind.EXTERNAL_APP),
    )
    trace = checked(replace(f1, channels=channels))
    assert subtypes(detect_creating_barriers(trace)) == {"install_external_app"}


# ---------------------------------------------------------------------------
# Feedforward ambiguity
# ---------------------------------------------------------------------------

def test_access_link_to_account_creation_is_mismatch(f1):
    signup = PageState(
        page_id="p-signup", url="https://f1.example/signup", title="Sign up"
    )
    trace = replace(f1, pages=f1.pages + (signup,))
    trace = checked(
        add_element(
            trace,
            "p-policy",
            InterfaceElement(
                element_id="e-decoy",
                page_id="p-policy",
                kind=ElementKind.LINK,
                label_text="Access your data now",
                target_page="p-signup",
                advertised_rights=ACCESS,
                actual_rights=frozenset(),
            ),
        )
    )
    assert subtypes(detect_feedforward_ambiguity(trace)) == {
        "instruction_outcome_mismatch"
    }


def test_undefined_data_processing_label_is_ambiguous(f1):
    trace = checked(with_form(f1, label_text="Data Processing"))
    assert subtypes(detect_feedforward_ambiguity(trace)) == {
        "ambiguous_rights_terminology"
    }


def test_defined_term_is_not_ambiguous(f1):
    defining = Section(
        section_id="s-define",
        label="Terms",
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-define",
                text=(
                    "Data Processing means our handling of access requests "
                    "under this policy."
                ),
            ),
        ),
    )
    trace = checked(add_section(with_form(f1, label_text="Data Processing"), "p-form", defining))
    assert detect_feedforward_ambiguity(trace) == []


def test_clean_form_yields_nothing(f1):
    assert detect_feedforward_ambiguity(checked(f1)) == []


def test_coupled_actions_fire(f1):
    trace = checked(
        with_form(f1, coupled_actions=frozenset({RightKind.OPT_OUT}))
    )
    assert subtypes(detect_feedforward_ambiguity(trace)) == {"coupled_outcomes"}


# ---------------------------------------------------------------------------
# Hidden information
# ---------------------------------------------------------------------------

def test_plain_text_styled_link_is_disguised(f1):
    trace = checked(
        add_element(
            f1,
            "p-home",
            InterfaceElement(
                element_id="e-disguised",
                page_id="p-home",
                kind=ElementKind.LINK,
                label_text="Your California Rights",
                target_page="p-policy",
                link_affordance=False,
                advertised_rights=ACCESS,
                actual_rights=ACCESS,
            ),
        )
    )
    assert subtypes(detect_hidden_info(trace)) == {"visually_disguised_affordances"}


def test_non_actionable_reference(worked_example):
    findings = detect_hidden_info(worked_example)
    assert "non_actionable_references" in subtypes(findings)


def test_gated_rights_element(f1):
    gate = InterfaceElement(
        element_id="e-gate",
        page_id="p-policy",
        kind=ElementKind.EXPANDABLE,
        label_text="More information",
    )
    hidden = InterfaceElement(
        element_id="e-hidden",
        page_id="p-policy",
        kind=ElementKind.LINK,
        label_text="Request access here",
        target_page="p-form",
        gated_behind="e-gate",
        actual_rights=ACCESS,
    )
    trace = checked(add_element(add_element(f1, "p-policy", gate), "p-policy", hidden))
    assert subtypes(detect_hidden_info(trace)) == {"interaction_gated_disclosure"}


def test_comprehensive_section_omitting_email(f1):
    claiming = Section(
        section_id="s-complete",
        label="Your complete privacy rights guide",
        kind=SectionKind.CCPA_RIGHTS,
        claims_completeness=True,
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-complete",
                text="This guide fully describes your options: use our form.",
                declared_channels=frozenset({ChannelKind.WEBFORM}),
                declared_rights=ACCESS,
            ),
        ),
    )
    trace = checked(add_section(f1, "p-policy", claiming))
    findings = detect_hidden_info(trace)
    assert subtypes(findings) == {"selective_omission"}


def test_complete_section_listing_all_channels_is_fine(f1):
    claiming = Section(
        section_id="s-complete",
        label="Your complete privacy rights guide",
        kind=SectionKind.CCPA_RIGHTS,
        claims_completeness=True,
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-complete",
                text="Use our form or email privacy@f1.example.",
                declared_channels=frozenset(
                    {ChannelKind.WEBFORM, ChannelKind.EMAIL}
                ),
                declared_rights=ACCESS,
            ),
        ),
    )
    trace = checked(add_section(f1, "p-policy", claiming))
    assert detect_hidden_info(trace) == []


# ---------------------------------------------------------------------------
# Information without context
# ---------------------------------------------------------------------------

def _strip_instruction_channels(trace: WorkflowTrace) -> WorkflowTrace:
    """Turn the rights section's statement into a channel-free rights
    statement, so guidance can live elsewhere."""
    pages = []
    for page in trace.pages:
        sections = tuple(
            replace(
                s,
                disclosures=tuple(
                    replace(d, declared_channels=frozenset())
                    for d in s.disclosures
                ),
            )
            if s.section_id == "s-rights"
            else s
            for s in page.sections
        )
        pages.append(replace(page, sections=sections))
    return replace(trace, pages=tuple(pages))


def test_instructions_only_under_contact_is_misplacement(f1):
    contact = Section(
        section_id="s-contact",
        label="Contact Us",
        kind=SectionKind.CONTACT,
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-contact",
                text="To access your data, email privacy@f1.example or use our form.",
                declared_channels=frozenset({ChannelKind.EMAIL, ChannelKind.WEBFORM}),
                declared_rights=ACCESS,
            ),
        ),
    )
    trace = checked(add_section(_strip_instruction_channels(f1), "p-policy", contact))
    assert subtypes(detect_info_without_context(trace)) == {"contextual_misplacement"}


def test_duplicated_instructions_are_not_misplaced(f1):
    contact = Section(
        section_id="s-contact",
        label="Contact Us",
        kind=SectionKind.CONTACT,
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-contact",
                text="To access your data, email privacy@f1.example or use our form.",
                declared_channels=frozenset({ChannelKind.EMAIL, ChannelKind.WEBFORM}),
                declared_rights=ACCESS,
            ),
        ),
    )
    # rights section keeps its instructions too
    trace = checked(add_section(f1, "p-policy", contact))
    assert detect_info_without_context(trace) == []


def test_access_capable_form_framed_as_opt_out(worked_example):
    findings = detect_info_without_context(worked_example)
    assert "misleading_form_framing" in subtypes(findings)


def test_vague_request_option(f1):
    trace = checked(with_form(f1, request_type_options=("Info Request",)))
    assert subtypes(detect_info_without_context(trace)) == {"vague_request_labels"}


def test_dangling_section_reference(f1):
    referring = Section(
        section_id="s-see",
        label="Where to go",
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-see",
                text='See the section titled "Data Rights Portal" for details.',
                referenced_section_label="Data Rights Portal",
            ),
        ),
    )
    trace = checked(add_section(f1, "p-policy", referring))
    assert subtypes(detect_info_without_context(trace)) == {"section_label_mismatch"}


def test_resolving_section_reference_is_fine(f1):
    referring = Section(
        section_id="s-see",
        label="Where to go",
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-see",
                text='See the section titled "Your Privacy Rights" for details.',
                referenced_section_label="Your Privacy Rights",
            ),
        ),
    )
    trace = checked(add_section(f1, "p-policy", referring))
    assert detect_info_without_context(trace) == []


def test_undisclosed_b2b_restriction_is_misdirect(f1):
    trace = checked(
        add_element(
            f1,
            "p-policy",
            InterfaceElement(
                element_id="e-b2b",
                page_id="p-policy",
                kind=ElementKind.LINK,
                label_text="Submit a privacy request",
                target_page="p-form",
                scope_restriction="B2B clients only",
                restriction_disclosed_at_entry=False,
            ),
        )
    )
    assert subtypes(detect_info_without_context(trace)) == {"misdirect_pathways"}


def test_disclosed_restriction_is_fine(f1):
    trace = checked(
        add_element(
            f1,
            "p-policy",
            InterfaceElement(
                element_id="e-b2b",
                page_id="p-policy",
                kind=ElementKind.LINK,
                label_text="Business client requests",
                target_page="p-form",
                scope_restriction="B2B clients only",
                restriction_disclosed_at_entry=True,
            ),
        )
    )
    assert detect_info_without_context(trace) == []


# ---------------------------------------------------------------------------
# Privacy mazes
# ---------------------------------------------------------------------------

def test_deep_entry_fires_depth_finding():
    trace = generate(
        PlantSpec(
            "maze",
            17,
            plants=frozenset({plant("excessive_navigational_depth")}),
            shape=PortalShape(page_count=5),
        )
    )
    # Independent BFS oracle: the entry element's page must be deeper than
    # the default threshold.
    from roa_audit.trace import navigation_depth

    entry = next(c.entry_element for c in trace.channels if c.entry_element)
    assert navigation_depth(trace, entry) > DetectorConfig().maze_depth_threshold
    assert subtypes(detect_privacy_mazes(trace)) == {"excessive_navigational_depth"}


def test_shallow_complete_portal_has_no_maze(f1):
    assert detect_privacy_mazes(checked(f1)) == []


def test_cross_page_fragmentation_from_split_instructions(f1):
    # postal mentioned with rights on the policy page, address on the form page
    mention = Section(
        section_id="s-postal",
        label="Postal requests",
        kind=SectionKind.PRIVACY_RIGHTS,
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-postal-a",
                text="Access requests are accepted by mail.",
                declared_channels=frozenset({ChannelKind.POSTAL}),
                declared_rights=ACCESS,
                referenced_channel_actionable=False,
            ),
        ),
    )
    address = Section(
        section_id="s-address",
        label="Mailing address",
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-postal-b",
                text="Compliance Dept, 500 Market St, Sacramento CA.",
                declared_channels=frozenset({ChannelKind.POSTAL}),
                referenced_channel_actionable=True,
            ),
        ),
    )
    trace = checked(add_section(add_section(f1, "p-policy", mention), "p-form", address))
    assert subtypes(detect_privacy_mazes(trace)) == {"cross_page_fragmentation"}


def test_within_page_fragmentation(f1):
    part_one = Section(
        section_id="s-phone-a",
        label="Phone requests",
        kind=SectionKind.PRIVACY_RIGHTS,
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-phone-a",
                text="You may request access by phone.",
                declared_channels=frozenset({ChannelKind.PHONE}),
                declared_rights=ACCESS,
                referenced_channel_actionable=False,
            ),
        ),
    )
    part_two = Section(
        section_id="s-phone-b",
        label="Telephone directory",
        disclosures=(
            DisclosureStatement(
                disclosure_id="d-phone-b",
                text="Privacy line: 1-800-555-0137.",
                declared_channels=frozenset({ChannelKind.PHONE}),
                referenced_channel_actionable=True,
            ),
        ),
    )
    trace = checked(
        add_section(add_section(f1, "p-policy", part_one), "p-policy", part_two)
    )
    assert subtypes(detect_privacy_mazes(trace)) == {"within_page_fragmentation"}


# ---------------------------------------------------------------------------
# Visual prominence
# ---------------------------------------------------------------------------

def test_dominant_banner_over_quiet_rights_link(f1):
    # rights link at prominence 0, promotional banner at 3, gap threshold 2
    pages = tuple(
        replace(
            p,
            elements=tuple(
                replace(e, prominence=0) if e.element_id == "e-policy-link" else e
                for e in p.elements
            ),
        )
        for p in f1.pages
    )
    trace = checked(
        add_element(
            replace(f1, pages=pages),
            "p-home",
            InterfaceElement(
                element_id="e-banner",
                page_id="p-home",
                kind=ElementKind.BUTTON,
                label_text="Sign up free today!",
                prominence=3,
            ),
        )
    )
    findings = detect_visual_prominence(trace)
    assert subtypes(findings) == {"competing_cta_dominance"}


def test_floating_widget_over_rights_pathway(f1):
    trace = checked(
        add_element(
            f1,
            "p-policy",
            InterfaceElement(
                element_id="e-chat",
                page_id="p-policy",
                kind=ElementKind.OVERLAY,
                label_text="Chat with us",
                persistent_overlay=True,
                overlaps_rights_pathway=True,
            ),
        )
    )
    assert subtypes(detect_visual_prominence(trace)) == {
        "persistent_overlay_interference"
    }


def test_equal_prominence_no_overlays_is_clean(f1):
    assert detect_visual_prominence(checked(f1)) == []


# ---------------------------------------------------------------------------
# detect_all
# ---------------------------------------------------------------------------

def test_benign_fixture_all_absent(f1):
    report = detect_all(f1)
    assert all(not present for present in report.labels.values())
    assert report.findings == ()
    assert report.form_fields == ("Full name", "Email address")
    assert set(report.detected_channels) == {ChannelKind.EMAIL, ChannelKind.WEBFORM}


def test_worked_example_multi_assignment(worked_example):
    report = detect_all(worked_example)
    assert (
        report.labels[Category.CONFLICTING_INFO]
        or report.labels[Category.HIDDEN_INFO]
    )
    assert (
        report.labels[Category.FEEDFORWARD_AMBIGUITY]
        or report.labels[Category.INFO_WITHOUT_CONTEXT]
    )


def test_planted_subtype_roundtrips_exactly():
    spec = PlantSpec(
        "rt", 3, plants=frozenset({plant("excessive_identity_verification")})
    )
    report = detect_all(generate(spec))
    present = {c for c, v in report.labels.items() if v}
    assert present == {Category.CREATING_BARRIERS}


def test_detect_all_rejects_invalid_trace(f1):
    broken = replace(f1, pages=f1.pages[:2])
    with pytest.raises(InvalidTraceError):
        detect_all(broken)


def test_detect_all_byte_identical_across_calls(worked_example):
    first = dumps_canonical(report_to_doc(detect_all(worked_example)))
    second = dumps_canonical(report_to_doc(detect_all(worked_example)))
    assert first == second


def test_monotone_repair_of_channel_restriction(f1):
    restricted = checked(replace(f1, channels=f1.channels[:1]))
    report = detect_all(restricted)
    assert report.labels[Category.CREATING_BARRIERS] is True
    repaired = checked(replace(f1, channels=f1.channels))  # both channels back
    report2 = detect_all(repaired)
    assert report2.labels[Category.CREATING_BARRIERS] is False


def test_raising_depth_threshold_never_adds_findings():
    trace = generate(
        PlantSpec(
            "anti",
            23,
            plants=frozenset({plant("excessive_navigational_depth")}),
            shape=PortalShape(page_count=5),
        )
    )
    last = None
    for threshold in range(1, 9):
        config = DetectorConfig(maze_depth_threshold=threshold)
        count = sum(
            1
            for f in detect_privacy_mazes(trace, config)
            if f.subtype.subtype_id == "excessive_navigational_depth"
        )
        if last is not None:
            assert count <= last
        last = count
    assert last == 0  # far above the portal depth, nothing fires


def test_label_finding_coherence_and_evidence_soundness():
    pools = [
        frozenset(),
        frozenset({plant("coupled_outcomes")}),
        frozenset({plant("selective_omission"), plant("misdirect_pathways")}),
        frozenset(
            {
                plant("identifier_fragmentation"),
                plant("cross_page_fragmentation"),
                plant("persistent_overlay_interference"),
            }
        ),
    ]
    for i, plants in enumerate(pools):
        trace = generate(PlantSpec(f"sound-{i}", 100 + i, plants=plants))
        report = detect_all(trace)
        by_category = {c: 0 for c in Category}
        for finding in report.findings:
            by_category[finding.category] += 1
            for ref in finding.evidence:
                resolve_evidence(trace, ref)  # must not raise
        for category in Category:
            assert report.labels[category] == (by_category[category] > 0)
