"""A tour of the workflow trace: the evidence substrate everything reads.

Builds a tiny portal trace by hand, validates it, resolves an evidence
quote, and runs the two graph queries (navigation depth and the channel
inventory).
"""

from roa_audit.trace import (
    ChannelKind,
    DisclosureStatement,
    ElementKind,
    EvidenceRef,
    InterfaceElement,
    PageState,
    RightKind,
    Section,
    SectionKind,
    SubmissionChannel,
    WorkflowTrace,
    channel_inventory,
    navigation_depth,
    resolve_evidence,
    validate_trace,
)

ACCESS = frozenset({RightKind.ACCESS})

home = PageState(
    page_id="p-home",
    url="https://demo.example/",
    title="Home",
    is_start=True,
    elements=(
        InterfaceElement(
            element_id="e-link",
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
    url="https://demo.example/privacy",
    title="Privacy Policy",
    sections=(
        Section(
            section_id="s-rights",
            label="Your Privacy Rights",
            kind=SectionKind.PRIVACY_RIGHTS,
            disclosures=(
                DisclosureStatement(
                    disclosure_id="d-how",
                    text=(
                        "Submit a verified access request via email or "
                        "webform; email privacy@demo.example."
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
            element_id="e-form",
            page_id="p-policy",
            kind=ElementKind.FORM_REF,
            label_text="Access Request Form",
            advertised_rights=ACCESS,
            actual_rights=ACCESS,
        ),
    ),
)
trace = WorkflowTrace(
    broker_id="demo-broker",
    start_url="https://demo.example/",
    pages=(home, policy),
    channels=(
        SubmissionChannel(
            channel_id="ch-web",
            kind=ChannelKind.WEBFORM,
            declared_in=frozenset({"d-how"}),
            entry_element="e-form",
        ),
        SubmissionChannel(
            channel_id="ch-mail",
            kind=ChannelKind.EMAIL,
            declared_in=frozenset({"d-how"}),
        ),
    ),
)

print("validation violations:", validate_trace(trace) or "none")

entity, text = resolve_evidence(
    trace, EvidenceRef("p-policy", "d-how", "via email or webform")
)
print("evidence resolved from:", entity.disclosure_id)
print("  quoted text:", text)

print("depth of the form entry:", navigation_depth(trace, "e-form"))

print("channel inventory:")
for kind, summary in channel_inventory(trace).items():
    print(
        f"  {kind.value}: declared in {summary.declared_in}, "
        f"reachable={summary.reachable}, "
        f"complete on pages {sorted(summary.complete_on_pages)}"
    )
