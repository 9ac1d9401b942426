"""Command-line surface: corpus persistence, audits, evaluation, reports.

Subcommands:
  synth      generate a seeded synthetic corpus with ground-truth labels
  audit      run the built-in rule detector over a corpus
  agent-run  drive the portal harness, then classify (built-in or remote)
  eval       score predictions against ground truth (metrics + prevalence)
  ablation   compare 2+ prediction sets with bootstrap deltas
  report     format saved eval/ablation results as aligned-text/CSV tables
  probe      HTTP reachability filter over a broker registry CSV

Exit codes: 0 success, 1 operational error, 2 usage error. Every run
writes a manifest recording the command, a config snapshot, and digests of
all inputs and outputs; rerunning with identical arguments, seeds, and
inputs reproduces byte-identical outputs (and therefore equal digests).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

from .config import (
    TransportSettings,
    detector_config_from_doc,
    load_config_file,
    transport_settings_from_doc,
)
from .detector import DetectorConfig, detect_all
from .documents import (
    SchemaError,
    dumps_canonical,
    report_from_doc,
    report_to_doc,
    trace_from_doc,
    trace_to_doc,
)
from .evaluation import (
    BrokerMismatchError,
    EvaluationError,
    MetricValue,
    MetricsReport,
    PrevalenceEstimate,
    bootstrap_delta,
    classification_metrics,
    confusion_from_labels,
    explanation_accuracy,
    explanation_accuracy_detail,
    explanation_metric,
    labels_of,
    micro_metric,
    prevalence,
)
from .harness import failed_audit_report, run_protocol, session_log_doc
from .promptkit import LiveTransport, assemble, classify_remote, replay_transport
from .registry import RegistryError, parse_registry, probe
from .synth import (
    CorpusMix,
    DEFAULT_CORPUS_MIX,
    Fault,
    FaultKind,
    FaultPlan,
    generate_corpus,
    inject_faults,
)
from .taxonomy import AuditReport, Category

__all__ = ["main", "run_command"]

MANIFEST_NAME = "run_manifest.json"
TRUTH_NAME = "truth.labels"


class OperationalError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(
    out_dir: Path,
    argv: Sequence[str],
    config_snapshot: Mapping[str, Any],
    inputs: Sequence[Path],
    outputs: Sequence[Path],
    started_at: str,
) -> Path:
    input_digests = {str(p): _file_digest(p) for p in sorted(inputs)}
    output_digests = {str(p): _file_digest(p) for p in sorted(outputs)}
    # The run id identifies the logical run by content, not by where the
    # files happen to live: identical inputs and outputs give the same id.
    run_id = hashlib.sha256(
        json.dumps(
            {
                "command": argv[0] if argv else "",
                "config": dict(config_snapshot),
                "inputs": sorted(input_digests.values()),
                "outputs": sorted(output_digests.values()),
            },
            sort_keys=True,
        ).encode("utf-8")
    ).hexdigest()[:16]
    doc = {
        "schema_version": 1,
        "run_id": run_id,
        "command": list(argv),
        "config_snapshot": dict(config_snapshot),
        "input_digests": input_digests,
        "output_digests": output_digests,
        "output_paths": [str(p) for p in sorted(outputs)],
        "started_at": started_at,
        "finished_at": datetime.now(timezone.utc).isoformat(),
    }
    path = out_dir / MANIFEST_NAME
    path.write_text(dumps_canonical(doc), encoding="utf-8")
    return path


def load_manifest(path: Path, verify: bool = True) -> dict[str, Any]:
    """Reads a manifest; with ``verify`` the recorded output digests are
    recomputed and any mismatch (tampering, lost files) raises."""
    doc = json.loads(path.read_text(encoding="utf-8"))
    if verify:
        for file_path, recorded in doc.get("output_digests", {}).items():
            actual = _file_digest(Path(file_path))
            if actual != recorded:
                raise OperationalError(
                    f"manifest digest mismatch for {file_path}: file changed "
                    "since the run"
                )
    return doc


# ---------------------------------------------------------------------------
# Corpus and prediction persistence
# ---------------------------------------------------------------------------

def _write_doc(path: Path, doc: Mapping[str, Any]) -> None:
    path.write_text(dumps_canonical(doc), encoding="utf-8")


def read_corpus_traces(corpus_dir: Path) -> dict[str, Any]:
    traces = {}
    for path in sorted(corpus_dir.glob("*.trace")):
        trace = trace_from_doc(json.loads(path.read_text(encoding="utf-8")))
        traces[trace.broker_id] = trace
    if not traces:
        raise OperationalError(f"no .trace documents under {corpus_dir}")
    return traces


def read_truth(
    path: Path,
) -> tuple[dict[str, dict[Category, bool]], dict[str, dict[Category, frozenset[str]]]]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("schema_version") != 1 or "brokers" not in doc:
        raise OperationalError(f"{path} is not a schema_version-1 truth document")
    labels: dict[str, dict[Category, bool]] = {}
    subtypes: dict[str, dict[Category, frozenset[str]]] = {}
    from .taxonomy import subtype_by_id

    for broker, entry in doc["brokers"].items():
        labels[broker] = {
            Category(name): value == "present"
            for name, value in entry["labels"].items()
        }
        per_cat: dict[Category, set[str]] = {}
        for subtype_id in entry.get("planted_subtypes", []):
            subtype = subtype_by_id(subtype_id)
            per_cat.setdefault(subtype.category, set()).add(subtype_id)
        subtypes[broker] = {c: frozenset(s) for c, s in per_cat.items()}
    return labels, subtypes


def read_reports(preds_dir: Path) -> dict[str, AuditReport]:
    reports = {}
    for path in sorted(preds_dir.glob("*.report")):
        report = report_from_doc(json.loads(path.read_text(encoding="utf-8")))
        reports[report.broker_id] = report
    if not reports:
        raise OperationalError(f"no .report documents under {preds_dir}")
    return reports


# ---------------------------------------------------------------------------
# Table rendering
# ---------------------------------------------------------------------------

def _aligned(rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for r, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
        if r == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(row))))
    return "\n".join(lines) + "\n"


def _csv_text(rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerows(rows)
    return buffer.getvalue()


def _metric_cells(doc: Mapping[str, Any]) -> list[str]:
    return [
        _fmt_doc(doc.get("accuracy")),
        _fmt_doc(doc.get("precision")),
        _fmt_doc(doc.get("recall")),
        _fmt_doc(doc.get("f1")),
        _fmt_doc(doc.get("explanation_accuracy")),
    ]


def _fmt_doc(value: Any) -> str:
    if isinstance(value, Mapping):
        value = value.get("value")
    if value is None:
        return "-"
    return f"{float(value) * 100:.1f}"


def render_ablation_table(doc: Mapping[str, Any]) -> list[list[str]]:
    rows = [["Strategy", "Class. Acc. (%)", "Precision (%)", "Recall (%)", "F1 (%)", "Expl. Acc. (%)"]]
    for conf in doc["configurations"]:
        rows.append([conf["name"]] + _metric_cells(conf["metrics"]))
    for delta in doc.get("deltas", []):
        cells = [f"Δ {delta['from']}→{delta['to']}"]
        for metric in ("accuracy", "precision", "recall", "f1", "explanation_accuracy"):
            entry = delta["metrics"].get(metric)
            if entry is None:
                cells.append("-")
                continue
            star = "*" if entry["significant"] else ""
            cells.append(
                f"{entry['delta'] * 100:+.1f}{star} "
                f"[{entry['ci_low'] * 100:.1f}, {entry['ci_high'] * 100:.1f}]"
            )
        rows.append(cells)
    return rows


def render_per_category_table(doc: Mapping[str, Any]) -> list[list[str]]:
    rows = [["Pattern", "Class. Acc. (%)", "Prec. (%)", "Rec. (%)", "F1 (%)", "Expl. Acc. (%)"]]
    for category in Category:
        metrics = doc["per_category"][category.value]
        rows.append([category.value] + _metric_cells(metrics))
    rows.append(["(aggregate)"] + _metric_cells(doc["aggregate"]))
    return rows


def render_prevalence_table(doc: Mapping[str, Any]) -> list[list[str]]:
    rows = [["Pattern", "Prev. (%)", "95% CI"]]
    for category in Category:
        entry = doc["prevalence"]["per_category"][category.value]
        rows.append(
            [
                category.value,
                f"{entry['p'] * 100:.1f}",
                f"[{entry['ci_low'] * 100:.1f}, {entry['ci_high'] * 100:.1f}]",
            ]
        )
    return rows


def _metrics_to_doc(
    report: MetricsReport, prev: Optional[PrevalenceEstimate]
) -> dict[str, Any]:
    def mv(value: MetricValue) -> dict[str, Any]:
        return {"value": value.value, "reason": value.reason}

    def block(metrics) -> dict[str, Any]:
        return {
            "accuracy": mv(metrics.accuracy),
            "precision": mv(metrics.precision),
            "recall": mv(metrics.recall),
            "f1": mv(metrics.f1),
            "explanation_accuracy": mv(metrics.explanation_accuracy),
        }

    doc: dict[str, Any] = {
        "schema_version": 1,
        "kind": "metrics",
        "n_evaluated": report.n_evaluated,
        "excluded_failed_runs": report.excluded_failed_runs,
        "aggregate": block(report.aggregate),
        "per_category": {
            category.value: block(metrics)
            for category, metrics in report.per_category.items()
        },
    }
    if prev is not None:
        doc["prevalence"] = {
            "n": prev.n,
            "per_category": {
                category.value: {
                    "p": p_hat,
                    "ci_low": low,
                    "ci_high": high,
                }
                for category, (p_hat, low, high) in prev.per_category.items()
            },
        }
    return doc


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _load_mix(path: Optional[str]) -> CorpusMix:
    if path is None:
        return DEFAULT_CORPUS_MIX
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return CorpusMix(
        category_rates={Category(name): float(rate) for name, rate in doc.items()}
    )


def _cmd_synth(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = datetime.now(timezone.utc).isoformat()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    mix = _load_mix(args.mix)
    items = generate_corpus(args.n, args.seed, mix)
    outputs = []
    truth: dict[str, Any] = {}
    for item in items:
        path = out_dir / f"{item.trace.broker_id}.trace"
        _write_doc(path, trace_to_doc(item.trace))
        outputs.append(path)
        truth[item.trace.broker_id] = {
            "labels": {
                category.value: "present" if present else "absent"
                for category, present in sorted(
                    item.labels.items(), key=lambda kv: kv[0].value
                )
            },
            "planted_subtypes": list(item.planted_subtypes),
        }
    truth_path = out_dir / TRUTH_NAME
    _write_doc(truth_path, {"schema_version": 1, "brokers": truth})
    outputs.append(truth_path)
    inputs = [Path(args.mix)] if args.mix else []
    _write_manifest(
        out_dir,
        argv,
        {"n": args.n, "seed": args.seed, "mix": args.mix or "default"},
        inputs,
        outputs,
        started,
    )
    print(f"wrote {len(items)} traces + {TRUTH_NAME} to {out_dir}")
    return 0


def _detector_config(args: argparse.Namespace) -> DetectorConfig:
    if getattr(args, "config", None):
        return detector_config_from_doc(load_config_file(args.config))
    return DetectorConfig()


def _cmd_audit(args: argparse.Namespace, argv: Sequence[str]) -> int:
    config = _detector_config(args)
    if args.show_config:
        print(config.describe())
        return 0
    if not args.corpus or not args.out:
        print("usage: roa-audit audit CORPUS --out DIR", file=sys.stderr)
        return 2
    started = datetime.now(timezone.utc).isoformat()
    corpus_dir = Path(args.corpus)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    traces = read_corpus_traces(corpus_dir)
    outputs = []
    for broker_id in sorted(traces):
        report = detect_all(traces[broker_id], config)
        path = out_dir / f"{broker_id}.report"
        _write_doc(path, report_to_doc(report))
        outputs.append(path)
    _write_manifest(
        out_dir,
        argv,
        {"detector": config.describe()},
        sorted(corpus_dir.glob("*.trace")),
        outputs,
        started,
    )
    print(f"audited {len(traces)} traces -> {out_dir}")
    return 0


def _load_fault_plans(path: Optional[str]) -> dict[str, FaultPlan]:
    if path is None:
        return {}
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    plans = {}
    for broker, entry in doc.items():
        fault = Fault(kind=FaultKind(entry["kind"]), step=entry.get("step"))
        plans[broker] = FaultPlan((fault,))
    return plans


def _cmd_agent_run(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = datetime.now(timezone.utc).isoformat()
    corpus_dir = Path(args.corpus)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    traces = read_corpus_traces(corpus_dir)
    fault_plans = _load_fault_plans(args.faults)
    config = _detector_config(args)

    transport = None
    settings = TransportSettings()
    prompt = None
    if args.classifier == "remote":
        if args.config:
            settings = transport_settings_from_doc(load_config_file(args.config))
        level = args.level or settings.prompt_level
        prompt = assemble(level)
        if args.recording:
            recording = json.loads(Path(args.recording).read_text(encoding="utf-8"))
            transport = replay_transport(recording)
        elif settings.endpoint:
            transport = LiveTransport(
                endpoint=settings.endpoint,
                api_key=settings.api_key,
                model=settings.model,
                temperature=settings.temperature,
                max_in_flight=settings.max_in_flight,
            )
        else:
            raise OperationalError(
                "remote classifier needs --recording or a configured endpoint"
            )

    def run_one(broker_id: str):
        trace = traces[broker_id]
        blueprint = inject_faults(trace, fault_plans.get(broker_id, FaultPlan()))
        if args.classifier == "builtin":
            session, outcome = run_protocol(blueprint, budget=args.budget)
            if outcome.completion.verified_success:
                detected = detect_all(trace, config)
                report = AuditReport(
                    broker_id=detected.broker_id,
                    detected_channels=detected.detected_channels,
                    form_fields=detected.form_fields,
                    labels=detected.labels,
                    findings=detected.findings,
                    completion=outcome.completion,
                    failure=None,
                    metadata=outcome.metadata,
                )
            else:
                report = failed_audit_report(broker_id, outcome)
        else:
            session, outcome = run_protocol(blueprint, budget=args.budget)
            if outcome.completion.verified_success:
                assert transport is not None and prompt is not None
                report = classify_remote(
                    trace, prompt, transport, max_requests=settings.max_requests
                )
            else:
                report = failed_audit_report(broker_id, outcome)
        return broker_id, session_log_doc(session, outcome), report

    outputs = []
    completed = 0
    # Sessions share no mutable state, so a bounded pool is safe; results
    # are written in broker order for deterministic manifests.
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = list(pool.map(run_one, sorted(traces)))
    for broker_id, log_doc, report in results:
        if report.completion.verified_success:
            completed += 1
        path = out_dir / f"{broker_id}.report"
        _write_doc(path, report_to_doc(report))
        outputs.append(path)
        log_path = out_dir / f"{broker_id}.session"
        _write_doc(log_path, log_doc)
        outputs.append(log_path)

    inputs = sorted(corpus_dir.glob("*.trace"))
    if args.faults:
        inputs.append(Path(args.faults))
    if args.recording:
        inputs.append(Path(args.recording))
    _write_manifest(
        out_dir,
        argv,
        {
            "classifier": args.classifier,
            "budget": args.budget,
            "level": getattr(args, "level", None),
        },
        inputs,
        outputs,
        started,
    )
    print(
        f"ran {len(traces)} portals ({completed} verified-completed) -> {out_dir}"
    )
    return 0


def _split_completed(
    reports: Mapping[str, AuditReport]
) -> tuple[dict[str, AuditReport], int]:
    completed = {
        broker: report
        for broker, report in reports.items()
        if report.completion.verified_success
    }
    return completed, len(reports) - len(completed)


def _cmd_eval(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = datetime.now(timezone.utc).isoformat()
    preds_dir = Path(args.preds)
    truth_path = Path(args.truth)
    out_dir = Path(args.out) if args.out else preds_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    reports = read_reports(preds_dir)
    truth_labels, truth_subtypes = read_truth(truth_path)
    if set(reports) != set(truth_labels):
        raise BrokerMismatchError(
            "prediction and truth broker sets differ: "
            f"{sorted(set(reports) ^ set(truth_labels))[:5]}"
        )

    completed, excluded = _split_completed(reports)
    if not completed:
        raise OperationalError("no verified-completed runs to evaluate")
    truth_completed = {b: truth_labels[b] for b in completed}

    corpus_dir = truth_path.parent
    traces = {}
    if any(corpus_dir.glob("*.trace")):
        traces = read_corpus_traces(corpus_dir)
    per_category_explanation = None
    if traces:
        explanation, per_category_explanation = explanation_accuracy_detail(
            completed, truth_completed, truth_subtypes, traces
        )
    else:
        explanation = MetricValue.absent("traces unavailable for resolution")

    counts = confusion_from_labels(
        {b: labels_of(r) for b, r in completed.items()}, truth_completed
    )
    metrics = classification_metrics(
        counts,
        explanation=explanation,
        per_category_explanation=per_category_explanation,
        excluded_failed_runs=excluded,
    )
    prev = prevalence(completed)
    doc = _metrics_to_doc(metrics, prev)

    json_path = out_dir / "metrics.json"
    _write_doc(json_path, doc)
    table_rows = render_per_category_table(doc)
    prev_rows = render_prevalence_table(doc)
    txt_path = out_dir / "metrics.txt"
    txt_path.write_text(
        _aligned(table_rows) + "\n" + _aligned(prev_rows), encoding="utf-8"
    )
    csv_path = out_dir / "metrics.csv"
    csv_path.write_text(_csv_text(table_rows + [[]] + prev_rows), encoding="utf-8")

    _write_manifest(
        out_dir,
        argv,
        {"excluded_failed_runs": excluded},
        sorted(preds_dir.glob("*.report")) + [truth_path],
        [json_path, txt_path, csv_path],
        started,
    )
    print(txt_path.read_text(encoding="utf-8"))
    return 0


def _cmd_ablation(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = datetime.now(timezone.utc).isoformat()
    truth_path = Path(args.truth)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    truth_labels, truth_subtypes = read_truth(truth_path)
    corpus_dir = truth_path.parent
    traces = {}
    if any(corpus_dir.glob("*.trace")):
        traces = read_corpus_traces(corpus_dir)

    configurations = []
    label_sets: list[tuple[str, dict[str, Any], dict[str, AuditReport]]] = []
    for preds in args.preds:
        preds_dir = Path(preds)
        name = preds_dir.name
        reports = read_reports(preds_dir)
        completed, excluded = _split_completed(reports)
        if not completed:
            raise OperationalError(f"{preds}: no verified-completed runs")
        truth_completed = {b: truth_labels[b] for b in completed}
        counts = confusion_from_labels(
            {b: labels_of(r) for b, r in completed.items()}, truth_completed
        )
        explanation = (
            explanation_accuracy(completed, truth_completed, truth_subtypes, traces)
            if traces
            else MetricValue.absent("traces unavailable")
        )
        metrics = classification_metrics(counts, explanation=explanation)
        doc = _metrics_to_doc(metrics, None)
        configurations.append(
            {
                "name": name,
                "metrics": {
                    **doc["aggregate"],
                },
            }
        )
        label_sets.append(
            (name, {b: labels_of(r) for b, r in completed.items()}, completed)
        )

    deltas = []
    for (name_a, labels_a, reports_a), (name_b, labels_b, reports_b) in zip(
        label_sets, label_sets[1:]
    ):
        common = sorted(set(labels_a) & set(labels_b))
        if not common:
            raise OperationalError(
                f"{name_a} and {name_b} share no completed brokers"
            )
        truth_common = {b: truth_labels[b] for b in common}
        la = {b: labels_a[b] for b in common}
        lb = {b: labels_b[b] for b in common}
        entry: dict[str, Any] = {"from": name_a, "to": name_b, "metrics": {}}
        for metric in ("accuracy", "precision", "recall", "f1"):
            delta = bootstrap_delta(
                micro_metric(metric),
                la,
                lb,
                truth_common,
                m=args.m,
                B=args.B,
                seed=args.seed,
                metric_name=metric,
            )
            entry["metrics"][metric] = {
                "delta": delta.delta,
                "ci_low": delta.ci_low,
                "ci_high": delta.ci_high,
                "significant": delta.significant,
            }
        if traces:
            fn_a = explanation_metric(
                {b: reports_a[b] for b in common}, truth_common, truth_subtypes, traces
            )
            fn_b = explanation_metric(
                {b: reports_b[b] for b in common}, truth_common, truth_subtypes, traces
            )
            try:
                delta = bootstrap_delta(
                    fn_a,
                    la,
                    lb,
                    truth_common,
                    m=args.m,
                    B=args.B,
                    seed=args.seed,
                    metric_name="explanation_accuracy",
                    metric_fn_b=fn_b,
                )
                entry["metrics"]["explanation_accuracy"] = {
                    "delta": delta.delta,
                    "ci_low": delta.ci_low,
                    "ci_high": delta.ci_high,
                    "significant": delta.significant,
                }
            except EvaluationError:
                entry["metrics"]["explanation_accuracy"] = None
        deltas.append(entry)

    doc = {
        "schema_version": 1,
        "kind": "ablation",
        "m": args.m,
        "B": args.B,
        "seed": args.seed,
        "configurations": configurations,
        "deltas": deltas,
    }
    json_path = out_dir / "ablation.json"
    _write_doc(json_path, doc)
    rows = render_ablation_table(doc)
    txt_path = out_dir / "ablation.txt"
    txt_path.write_text(_aligned(rows), encoding="utf-8")
    csv_path = out_dir / "ablation.csv"
    csv_path.write_text(_csv_text(rows), encoding="utf-8")

    inputs = [truth_path]
    for preds in args.preds:
        inputs.extend(sorted(Path(preds).glob("*.report")))
    _write_manifest(
        out_dir,
        argv,
        {"m": args.m, "B": args.B, "seed": args.seed},
        inputs,
        [json_path, txt_path, csv_path],
        started,
    )
    print(txt_path.read_text(encoding="utf-8"))
    return 0


_REPORT_STYLES = {
    "table2": ("ablation", render_ablation_table),
    "ablation": ("ablation", render_ablation_table),
    "table3": ("metrics", render_per_category_table),
    "per-category": ("metrics", render_per_category_table),
    "table4": ("metrics", render_prevalence_table),
    "prevalence": ("metrics", render_prevalence_table),
}


def _cmd_report(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = datetime.now(timezone.utc).isoformat()
    expected_kind, renderer = _REPORT_STYLES[args.style]
    input_path = Path(args.input)
    doc = json.loads(input_path.read_text(encoding="utf-8"))
    if doc.get("kind") != expected_kind:
        raise OperationalError(
            f"style {args.style} needs a {expected_kind} document, "
            f"got kind={doc.get('kind')!r}"
        )
    if expected_kind == "metrics" and renderer is render_prevalence_table:
        if "prevalence" not in doc:
            raise OperationalError("metrics document carries no prevalence block")
    rows = renderer(doc)
    out_prefix = Path(args.out)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    txt_path = out_prefix.with_suffix(".txt")
    csv_path = out_prefix.with_suffix(".csv")
    txt_path.write_text(_aligned(rows), encoding="utf-8")
    csv_path.write_text(_csv_text(rows), encoding="utf-8")
    _write_manifest(
        out_prefix.parent,
        argv,
        {"style": args.style},
        [input_path],
        [txt_path, csv_path],
        started,
    )
    print(txt_path.read_text(encoding="utf-8"))
    return 0


def _cmd_probe(args: argparse.Namespace, argv: Sequence[str]) -> int:
    started = datetime.now(timezone.utc).isoformat()
    registry_path = Path(args.registry)
    entries = parse_registry(registry_path.read_text(encoding="utf-8"))
    results = probe(
        entries,
        timeout=args.timeout,
        concurrency=args.concurrency,
        retries=args.retries,
    )
    reachable = [e for e in results if e.probe_result.value == "reachable"]
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["broker_name", "url", "probe_result"])
    for entry in results:
        writer.writerow([entry.broker_name, entry.url, entry.probe_result.value])
    out_path.write_text(buffer.getvalue(), encoding="utf-8")
    _write_manifest(
        out_path.parent,
        argv,
        {"timeout": args.timeout, "concurrency": args.concurrency},
        [registry_path],
        [out_path],
        started,
    )
    print(
        f"probed {len(results)} sites: {len(reachable)} reachable, "
        f"{len(results) - len(reachable)} unreachable -> {out_path}"
    )
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roa-audit",
        description="Interaction-level dark-pattern auditing toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mix", help="JSON file of per-category rates")
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("audit", help="rule detector over a corpus")
    p.add_argument("corpus", nargs="?")
    p.add_argument("--out")
    p.add_argument("--config", help="TOML detector configuration")
    p.add_argument("--show-config", action="store_true")
    p.set_defaults(fn=_cmd_audit)

    p = sub.add_parser("agent-run", help="portal harness plus a classifier")
    p.add_argument("corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--classifier", choices=["builtin", "remote"], default="builtin")
    p.add_argument("--budget", type=int, default=40)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--faults", help="JSON map broker_id -> fault")
    p.add_argument("--config", help="TOML configuration")
    p.add_argument("--level", type=int, choices=[1, 2, 3, 4])
    p.add_argument("--recording", help="replay-transport recording file")
    p.set_defaults(fn=_cmd_agent_run)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("preds")
    p.add_argument("truth")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("ablation", help="bootstrap comparison of 2+ prediction sets")
    p.add_argument("--preds", nargs="+", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--m", type=int, default=50)
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_ablation)

    p = sub.add_parser("report", help="format saved results as tables")
    p.add_argument("input")
    p.add_argument("--style", choices=sorted(_REPORT_STYLES), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("probe", help="reachability filter over a registry CSV")
    p.add_argument("registry")
    p.add_argument("--out", required=True)
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--concurrency", type=int, default=8)
    p.add_argument("--retries", type=int, default=0)
    p.set_defaults(fn=_cmd_probe)

    return parser


def run_command(argv: Sequence[str]) -> int:
    """Parses and executes one CLI invocation; returns the exit code
    (0 success, 1 operational error, 2 usage error)."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args, argv)
    except (
        OperationalError,
        EvaluationError,
        SchemaError,
        RegistryError,
        OSError,
        ValueError,
        KeyError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> int:
    return run_command(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
