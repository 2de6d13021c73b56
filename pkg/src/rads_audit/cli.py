"""Command-line interface.

Verbs mirror the audit pipeline: ingest, extract, identify, evaluate,
parse-copy, ingest-capture, verify, aggregate, ledger, report.
Exit codes: 0 success, 1 usage error, 2 data error, 3 external-service
failure.
"""
from __future__ import annotations

import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import capture as capture_mod
from . import completeness as completeness_mod
from . import copy_parser as copies
from . import ledger as ledger_mod
from . import paragraphs, policy_ingest, report as report_mod, rights
from .config import ToolConfig, load_config
from .errors import DataError, ExternalServiceError
from .llm import make_llm
from .metrics import evaluate_classifier, format_metrics_table


def _parse_when(raw: str | None) -> datetime:
    if raw is None:
        return datetime.now(timezone.utc)
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError as exc:
        raise DataError(f"bad timestamp {raw!r}: {exc}") from exc
    return ts if ts.tzinfo else ts.replace(tzinfo=timezone.utc)


def _write_json(path: str | Path, payload) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_json(path: str | Path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot load {path}: {exc}") from exc


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML config file; flags override its values.")
@click.pass_context
def cli(ctx, config_path):
    """Audit how apps honor the right of access by the data subject."""
    ctx.obj = load_config(config_path)


@cli.command()
@click.option("--source", required=True, help="Policy URL or local file path.")
@click.option("--app-id", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def ingest(source, app_id, out_dir):
    """Fetch one policy and write its plain text plus paragraph metadata."""
    raw = policy_ingest.fetch_policy(source, app_id=app_id)
    doc = policy_ingest.html_to_plaintext(raw)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{app_id}.txt").write_text(doc.text, encoding="utf-8")
    _write_json(out / f"{app_id}.meta.json", {
        "app_id": doc.app_id,
        "source": raw.source,
        "fetched_at": raw.fetched_at.isoformat(),
        "language_tag": doc.language_tag,
        "lossy_decode": doc.lossy_decode,
        "paragraph_spans": [list(span) for span in doc.paragraph_spans],
    })
    click.echo(f"{app_id}: {len(doc.paragraph_spans)} paragraphs")


def _load_document(doc_path: Path) -> policy_ingest.PolicyDocument:
    text = doc_path.read_text(encoding="utf-8")
    meta_path = doc_path.with_suffix(".meta.json")
    if meta_path.exists():
        meta = _load_json(meta_path)
        spans = [tuple(span) for span in meta["paragraph_spans"]]
        return policy_ingest.PolicyDocument(
            app_id=meta.get("app_id", doc_path.stem),
            language_tag=meta.get("language_tag", "und"),
            text=text, paragraph_spans=spans,
        )
    # No sidecar: the document layout is one paragraph per line.
    spans, pos = [], 0
    for line in text.split("\n"):
        spans.append((pos, pos + len(line)))
        pos += len(line) + 1
    return policy_ingest.PolicyDocument(
        app_id=doc_path.stem, language_tag="und", text=text, paragraph_spans=spans,
    )


@cli.command()
@click.option("--doc", "doc_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--classifier", "classifier_spec", default=None,
              help="builtin | exec:<cmd> | http:<url>")
@click.option("--lexicon", "lexicon_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def extract(cfg: ToolConfig, doc_path, classifier_spec, lexicon_path, out_path):
    """Classify a document's paragraphs and keep the rights-relevant excerpt."""
    doc = _load_document(Path(doc_path))
    spec = classifier_spec or cfg.classifier
    handle = paragraphs.make_classifier(spec, lexicon_path or cfg.lexicon or None)
    classified = [paragraphs.classify_paragraph(p, handle)
                  for p in policy_ingest.segment_paragraphs(doc)]
    excerpt = paragraphs.extract_rads_paragraphs(classified, app_id=doc.app_id)
    _write_json(out_path, paragraphs.excerpt_to_dict(excerpt))
    click.echo(f"{doc.app_id}: {len(excerpt.members)} excerpt paragraphs")


@cli.command()
@click.option("--excerpt", "excerpt_path", required=True, type=click.Path(exists=True))
@click.option("--llm", "llm_spec", default=None, help="mock:<replay-file> | http[:<url>]")
@click.option("--prompt", "prompt_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def identify(cfg: ToolConfig, excerpt_path, llm_spec, prompt_path, out_path):
    """Decide the declared access right and methods for one excerpt."""
    spec = llm_spec or cfg.llm
    if not spec:
        raise click.UsageError("no LLM configured; pass --llm or set it in the config")
    excerpt = paragraphs.excerpt_from_dict(_load_json(excerpt_path))
    handle = make_llm(spec, max_attempts=cfg.llm_max_attempts, backoff_base=cfg.llm_backoff,
                      min_interval=cfg.llm_min_interval, max_in_flight=cfg.llm_max_in_flight)
    template = rights.load_prompt_template(prompt_path or cfg.prompt_template or None)
    finding = rights.identify(excerpt, handle, template)
    _write_json(out_path, finding.to_dict())
    click.echo(f"{finding.app_id}: {finding.rights_class.value} "
               f"[{', '.join(sorted(m.value for m in finding.methods)) or 'no methods'}]")


@cli.command()
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def evaluate(pred_dir, gold_path, out_path):
    """Score predicted findings against a hand-labeled gold file."""
    predicted = [rights.RadsFinding.from_dict(_load_json(p))
                 for p in sorted(Path(pred_dir).glob("*.json"))]
    gold_raw = _load_json(gold_path)
    labeled = [rights.RadsFinding.from_dict(item) for item in gold_raw]
    report = evaluate_classifier(predicted, labeled)
    click.echo(format_metrics_table(report))
    if out_path:
        _write_json(out_path, report.to_dict())


@cli.command("parse-copy")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", default=None,
              type=click.Choice(["csv", "json", "html", "txt", "pdf", "record"]))
@click.option("--orientation", default=None, type=click.Choice(["a", "b"]))
@click.option("--dict", "dict_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def parse_copy(cfg: ToolConfig, in_path, fmt, orientation, dict_path, out_path):
    """Flatten a data copy and extract its sensitive-category values.

    Formats without automated parsing (html/txt/pdf) get an empty
    manual-assist template at --out; fill it in and re-run with
    --format record.
    """
    path = Path(in_path)
    data = path.read_bytes()
    if fmt == "record":
        record = copies.load_flat_record(path)
    else:
        detected = (copies.CopyFormat(fmt.upper()) if fmt
                    else copies.detect_format(data, path.suffix))
        if detected in copies.MANUAL_ASSIST_FORMATS:
            copies.write_manual_template(out_path, detected, source=str(path))
            click.echo(f"{detected.value} copies are audited by hand; template written to {out_path}")
            return
        if detected is copies.CopyFormat.CSV:
            record = copies.parse_csv_copy(data, orientation=orientation)
        else:
            record = copies.parse_json_copy(data)
    dictionary = copies.DescriptorDictionary.load(dict_path or cfg.descriptors or None)
    extraction = copies.match_categories(record, dictionary)
    _write_json(out_path, copies.extraction_to_dict(extraction))
    click.echo(f"{path.name}: {len(record)} values, "
               f"{sum(len(v) for v in extraction.values())} category hits")


@cli.command("ingest-capture")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--app-id", required=True)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def ingest_capture(cfg: ToolConfig, in_path, app_id, out_path):
    """Turn a hook-agent capture CSV into a per-app profile."""
    records = capture_mod.ingest_capture_csv(in_path)
    profile = capture_mod.build_profile(app_id, records, cfg.location_decimals)
    _write_json(out_path, profile.to_dict())
    click.echo(f"{app_id}: {len(records)} records across "
               f"{len(profile.collected)} categories")


@cli.command()
@click.option("--profile", "profile_path", required=True, type=click.Path(exists=True))
@click.option("--extraction", "extraction_path", required=True, type=click.Path(exists=True))
@click.option("--lenient-ip", is_flag=True, default=False)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def verify(cfg: ToolConfig, profile_path, extraction_path, lenient_ip, out_path):
    """Compare one app's copy extraction against its captured profile."""
    profile = capture_mod.CapturedProfile.from_dict(_load_json(profile_path))
    extraction = copies.extraction_from_dict(_load_json(extraction_path))
    result = completeness_mod.compare(
        profile, extraction,
        lenient_ip=lenient_ip or cfg.lenient_ip,
        location_decimals=cfg.location_decimals,
    )
    _write_json(out_path, result.to_dict())
    rate = "undefined" if result.missing_rate is None else f"{result.missing_rate:.4f}"
    click.echo(f"{result.app_id}: missing rate {rate}")


@cli.command()
@click.option("--results", "results_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--thresholds", default=None, help="comma-separated, e.g. 0.4,0.8")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def aggregate(cfg: ToolConfig, results_dir, thresholds, out_path):
    """Aggregate verify results into consistency and missing-rate tables."""
    results = [completeness_mod.AppCompletenessResult.from_dict(_load_json(p))
               for p in sorted(Path(results_dir).glob("*.json"))]
    if not results:
        raise DataError(f"no result files in {results_dir}")
    cuts = (tuple(float(t) for t in thresholds.split(",")) if thresholds else cfg.thresholds)
    consistency = completeness_mod.aggregate_consistency(results)
    hist = completeness_mod.missing_rate_histogram(results, cuts)
    payload = {
        "consistency": {
            c.value: {"matched": a.matched, "collected": a.collected, "proportion": a.proportion}
            for c, a in consistency.items()
        },
        "missing_rate": report_mod.missing_rate_section(hist),
    }
    _write_json(out_path, payload)
    click.echo(f"{len(results)} results aggregated")


@cli.group()
@click.option("--ledger", "ledger_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def ledger(ctx, ledger_path):
    """Record and summarize access-request audit events."""
    ctx.obj = ledger_mod.Ledger(ledger_path)


@ledger.command("open")
@click.option("--app-id", required=True)
@click.option("--method", required=True,
              type=click.Choice([m.value for m in rights.MethodKind]))
@click.option("--right", required=True,
              type=click.Choice([r.value for r in ledger_mod.AccessRight]))
@click.option("--at", "at_raw", default=None, help="ISO timestamp; defaults to now.")
@click.option("--id", "request_id", default=None)
@click.option("--notes", default="")
@click.pass_obj
def ledger_open(book: ledger_mod.Ledger, app_id, method, right, at_raw, request_id, notes):
    req = book.open_request(
        app_id, rights.MethodKind(method), ledger_mod.AccessRight(right),
        _parse_when(at_raw), request_id=request_id, notes=notes,
    )
    click.echo(req.request_id)


@ledger.command("feedback")
@click.option("--id", "request_id", required=True)
@click.option("--outcome", required=True,
              type=click.Choice([o.value for o in ledger_mod.Outcome]))
@click.option("--at", "at_raw", default=None)
@click.option("--immediate", is_flag=True, default=False,
              help="Information was viewable immediately in the app settings.")
@click.option("--notes", default="")
@click.pass_obj
def ledger_feedback(book: ledger_mod.Ledger, request_id, outcome, at_raw, immediate, notes):
    req = book.record_feedback(
        request_id, _parse_when(at_raw), ledger_mod.Outcome(outcome),
        immediate=immediate, notes=notes,
    )
    click.echo(f"{req.request_id}: {req.outcome.value}")


@ledger.command("ui-depth")
@click.option("--app-id", required=True)
@click.option("--depth", required=True, help="2..5 or notfound")
@click.pass_obj
def ledger_ui_depth(book: ledger_mod.Ledger, app_id, depth):
    value = None if depth.lower() in ("notfound", "none") else int(depth)
    rec = book.record_ui_depth(app_id, value)
    click.echo(f"{rec.app_id}: depth {'NotFound' if rec.depth is None else rec.depth}")


@ledger.command("summary")
@click.option("--horizon", "horizon_raw", default=None)
@click.pass_obj
def ledger_summary(book: ledger_mod.Ledger, horizon_raw):
    horizon = _parse_when(horizon_raw)
    requests = list(book.requests.values())
    summary = ledger_mod.authenticity_summary(requests)
    buckets = ledger_mod.feedback_histogram(requests, horizon)
    payload = {
        "authenticity": {
            m.value: {
                "Failure": a.failure,
                "ViewInformation": a.view_information,
                "ObtainDataCopy": a.obtain_data_copy,
            } for m, a in summary.items()
        },
        "feedback": {m.value: {b.value: n for b, n in table.items()}
                     for m, table in buckets.items()},
        "ui_depth": ledger_mod.ui_depth_histogram(list(book.ui_depths.values())),
    }
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


@cli.command()
@click.option("--market", required=True)
@click.option("--findings", "findings_dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--ledger", "ledger_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--results", "results_dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.option("--horizon", "horizon_raw", default=None)
@click.option("--format", "fmt", default="json", type=click.Choice(["json", "markdown"]))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_obj
def report(cfg: ToolConfig, market, findings_dir, ledger_path, results_dir, horizon_raw, fmt, out_path):
    """Assemble the market-level compliance report."""
    findings = None
    if findings_dir:
        findings = [rights.RadsFinding.from_dict(_load_json(p))
                    for p in sorted(Path(findings_dir).glob("*.json"))]
    requests = ui_depths = None
    if ledger_path:
        book = ledger_mod.Ledger(ledger_path)
        requests = list(book.requests.values())
        ui_depths = list(book.ui_depths.values())
    results = None
    if results_dir:
        results = [completeness_mod.AppCompletenessResult.from_dict(_load_json(p))
                   for p in sorted(Path(results_dir).glob("*.json"))]
    built = report_mod.build_report(
        market, findings=findings, requests=requests, ui_depths=ui_depths,
        results=results, horizon=_parse_when(horizon_raw) if requests else None,
        thresholds=cfg.thresholds,
    )
    rendered = report_mod.emit_report(built, fmt)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(rendered, encoding="utf-8")
    click.echo(f"report written to {out_path}")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except DataError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except ExternalServiceError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
