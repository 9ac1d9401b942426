"""The four prompt configurations and the offline replay transport.

Section inclusion grows monotonically from level 1 to level 4; a recorded
response replays deterministically, and anything that fails the output
schema or quotes text the trace never contained is rejected before it can
become an audit report.
"""

from roa_audit.detector import detect_all
from roa_audit.documents import report_to_doc, trace_to_doc
from roa_audit.promptkit import (
    TransportRequest,
    assemble,
    classify_remote,
    replay_transport,
    request_digest,
)
from roa_audit.synth import PlantSpec, generate, plant

print("== section growth across levels")
for level in (1, 2, 3, 4):
    prompt = assemble(level)
    tags = [tag.value for tag, _body in prompt.sections]
    print(f"   L{level}: {', '.join(tags)}")

trace = generate(
    PlantSpec("replay-demo", 404, plants=frozenset({plant("coupled_outcomes")}))
)
prompt = assemble(4)
canned = report_to_doc(detect_all(trace))
request = TransportRequest(prompt_text=prompt.render(), trace_doc=trace_to_doc(trace))
transport = replay_transport({request_digest(request): canned})

print("\n== replayed classification")
report = classify_remote(trace, prompt, transport)
print(f"   verified: {report.completion.verified_success}")
print(f"   mechanisms: {[f.subtype.subtype_id for f in report.findings]}")

print("\n== a tampered response is rejected")
tampered = report_to_doc(detect_all(trace))
tampered["findings"][0]["evidence"][0]["quote"] = "words the portal never said"
bad_transport = replay_transport({request_digest(request): tampered})
rejected = classify_remote(trace, prompt, bad_transport)
print(f"   verified: {rejected.completion.verified_success}")
print(f"   failure: {rejected.failure.category.value}")
print(f"   reason: {rejected.completion.reason[:70]}...")
