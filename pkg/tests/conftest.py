"""Shared fixtures: hand-built traces, independent of the synthesizer."""

from __future__ import annotations

import pytest

from roa_audit.trace import (
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
    RightKind,
    RunMetadata,
    Section,
    SectionKind,
    StepAction,
    SubmissionChannel,
    WorkflowTrace,
)

ACCESS = frozenset({RightKind.ACCESS})


def build_f1() -> WorkflowTrace:
    """Three-page benign portal: start -> policy -> webform.

    Built by hand (not via the generator) so trace-model tests have an
    independently constructed valid fixture.
    """
    home = PageState(
        page_id="p-home",
        url="https://f1.example/",
        title="Home",
        is_start=True,
        elements=(
            InterfaceElement(
                element_id="e-policy-link",
                page_id="p-home",
                kind=ElementKind.LINK,
                label_text="Privacy Policy",
                target_page="p-policy",
                advertised_rights=ACCESS,
                actual_rights=ACCESS,
            ),
        ),
    )
    policy = PageState(
        page_id="p-policy",
        url="https://f1.example/privacy",
        title="Privacy Policy",
        sections=(
            Section(
                section_id="s-rights",
                label="Your Privacy Rights",
                kind=SectionKind.PRIVACY_RIGHTS,
                disclosures=(
                    DisclosureStatement(
                        disclosure_id="d-main",
                        text=(
                            "Submit a request via email or webform. Email "
                            "privacy@f1.example or use the request form."
                        ),
                        declared_channels=frozenset(
                            {ChannelKind.EMAIL, ChannelKind.WEBFORM}
                        ),
                        declared_rights=ACCESS,
                    ),
                ),
            ),
        ),
        elements=(
            InterfaceElement(
                element_id="e-form-link",
                page_id="p-policy",
                kind=ElementKind.LINK,
                label_text="Start an access request",
                target_page="p-form",
                advertised_rights=ACCESS,
                actual_rights=ACCESS,
            ),
        ),
    )
    form_page = PageState(
        page_id="p-form",
        url="https://f1.example/request",
        title="Access Request",
        elements=(
            InterfaceElement(
                element_id="e-form",
                page_id="p-form",
                kind=ElementKind.FORM_REF,
                label_text="Access Request Form",
                advertised_rights=ACCESS,
                actual_rights=ACCESS,
            ),
        ),
    )
    form = FormSpec(
        form_id="f-access",
        page_id="p-form",
        label_text="Access Request Form",
        framing=FormFraming.ACCESS,
        identifier_kinds_supported=frozenset({IdentifierKind.EMAIL}),
        request_type_options=("Access my personal information",),
        fields=(
            FormField("ff-name", "Full name"),
            FormField("ff-email", "Email address"),
        ),
        actual_rights=ACCESS,
    )
    return WorkflowTrace(
        broker_id="fixture-f1",
        start_url="https://f1.example/",
        pages=(home, policy, form_page),
        forms=(form,),
        channels=(
            SubmissionChannel(
                channel_id="ch-web",
                kind=ChannelKind.WEBFORM,
                declared_in=frozenset({"d-main"}),
                entry_element="e-form",
            ),
            SubmissionChannel(
                channel_id="ch-mail",
                kind=ChannelKind.EMAIL,
                declared_in=frozenset({"d-main"}),
            ),
        ),
        steps=(
            NavigationStep(0, "p-home", StepAction.OPEN_URL, None, "p-home"),
            NavigationStep(1, "p-home", StepAction.CLICK, "e-policy-link", "p-policy"),
            NavigationStep(2, "p-policy", StepAction.CLICK, "e-form-link", "p-form"),
        ),
        metadata=RunMetadata(duration_ms=360, step_count=3),
    )


def build_worked_example() -> WorkflowTrace:
    """The classic multi-assignment workflow: the policy says requests go
    "via email or webform" but no email address exists anywhere, and the
    only working pathway is labeled as a do-not-sell control."""
    home = PageState(
        page_id="p-home",
        url="https://worked.example/",
        title="Home",
        is_start=True,
        elements=(
            InterfaceElement(
                element_id="e-policy-link",
                page_id="p-home",
                kind=ElementKind.LINK,
                label_text="Privacy Policy",
                target_page="p-policy",
                advertised_rights=ACCESS,
                actual_rights=ACCESS,
            ),
        ),
    )
    policy = PageState(
        page_id="p-policy",
        url="https://worked.example/privacy",
        title="Privacy Policy",
        sections=(
            Section(
                section_id="s-rights",
                label="California Privacy Rights",
                kind=SectionKind.CCPA_RIGHTS,
                disclosures=(
                    DisclosureStatement(
                        disclosure_id="d-channels",
                        text=(
                            "You may submit a Right-to-Access request via "
                            "email or webform."
                        ),
                        declared_channels=frozenset(
                            {ChannelKind.EMAIL, ChannelKind.WEBFORM}
                        ),
                        declared_rights=ACCESS,
                        # The email address is nowhere on the site and the
                        # statement links nothing.
                        is_hyperlinked=False,
                        referenced_channel_actionable=False,
                    ),
                ),
            ),
        ),
        elements=(
            InterfaceElement(
                element_id="e-dns-link",
                page_id="p-policy",
                kind=ElementKind.LINK,
                label_text="Do Not Sell My Personal Information",
                target_page="p-form",
                advertised_rights=frozenset({RightKind.OPT_OUT}),
                actual_rights=frozenset({RightKind.OPT_OUT, RightKind.ACCESS}),
            ),
        ),
    )
    form_page = PageState(
        page_id="p-form",
        url="https://worked.example/dns",
        title="Do Not Sell My Personal Information",
        elements=(
            InterfaceElement(
                element_id="e-form",
                page_id="p-form",
                kind=ElementKind.FORM_REF,
                label_text="Do Not Sell My Personal Information",
                advertised_rights=frozenset({RightKind.OPT_OUT}),
                actual_rights=frozenset({RightKind.OPT_OUT, RightKind.ACCESS}),
            ),
        ),
    )
    form = FormSpec(
        form_id="f-dns",
        page_id="p-form",
        label_text="Do Not Sell My Personal Information",
        framing=FormFraming.OPT_OUT,
        identifier_kinds_supported=frozenset({IdentifierKind.EMAIL}),
        request_type_options=("Do not sell my personal information",),
        fields=(FormField("ff-email", "Email address"),),
        # The form quietly handles access requests too.
        actual_rights=frozenset({RightKind.OPT_OUT, RightKind.ACCESS}),
    )
    return WorkflowTrace(
        broker_id="fixture-worked",
        start_url="https://worked.example/",
        pages=(home, policy, form_page),
        forms=(form,),
        channels=(
            SubmissionChannel(
                channel_id="ch-web",
                kind=ChannelKind.WEBFORM,
                declared_in=frozenset({"d-channels"}),
                entry_element="e-form",
            ),
        ),
        steps=(
            NavigationStep(0, "p-home", StepAction.OPEN_URL, None, "p-home"),
            NavigationStep(1, "p-home", StepAction.CLICK, "e-policy-link", "p-policy"),
            NavigationStep(2, "p-policy", StepAction.CLICK, "e-dns-link", "p-form"),
        ),
        metadata=RunMetadata(duration_ms=360, step_count=3),
    )


@pytest.fixture
def f1() -> WorkflowTrace:
    return build_f1()


@pytest.fixture
def worked_example() -> WorkflowTrace:
    return build_worked_example()
