from __future__ import annotations

import json

from rads_audit.cli import main
from e2e_pipeline import CORPUS, run_pipeline

POLICY = CORPUS / "policies" / "app01.html"


def test_usage_error_exit_code(capsys):
    assert main(["ingest", "--source", "x"]) == 1  # --app-id and --out missing
    assert "app-id" in capsys.readouterr().err.lower()


def test_unknown_command_exit_code():
    assert main(["frobnicate"]) == 1


def test_data_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,the,right,header\n")
    code = main(["ingest-capture", "--in", str(bad), "--app-id", "a",
                 "--out", str(tmp_path / "p.json")])
    assert code == 2
    assert "header mismatch" in capsys.readouterr().err


def test_external_service_error_exit_code(tmp_path):
    replay = tmp_path / "replay.json"
    replay.write_text(json.dumps({"other-app": "{}"}))  # nothing for our app
    excerpt = tmp_path / "excerpt.json"
    excerpt.write_text(json.dumps({"app_id": "lonely", "members": []}))
    code = main(["identify", "--excerpt", str(excerpt), "--llm", f"mock:{replay}",
                 "--out", str(tmp_path / "f.json")])
    assert code == 3


def test_ingest_writes_text_and_sidecar(tmp_path):
    assert main(["ingest", "--source", str(POLICY), "--app-id", "app01",
                 "--out", str(tmp_path)]) == 0
    text = (tmp_path / "app01.txt").read_text()
    meta = json.loads((tmp_path / "app01.meta.json").read_text())
    assert "request a copy of your data" in text
    assert meta["app_id"] == "app01"
    spans = [tuple(s) for s in meta["paragraph_spans"]]
    assert all(0 <= a < b <= len(text) for a, b in spans)


def test_extract_then_identify(tmp_path):
    main(["ingest", "--source", str(POLICY), "--app-id", "app01", "--out", str(tmp_path)])
    excerpt_path = tmp_path / "excerpt.json"
    assert main(["extract", "--doc", str(tmp_path / "app01.txt"),
                 "--classifier", "builtin", "--out", str(excerpt_path)]) == 0
    excerpt = json.loads(excerpt_path.read_text())
    assert excerpt["app_id"] == "app01"
    reasons = {m["selection_reason"] for m in excerpt["members"]}
    assert "UAED" in reasons
    assert "AdjacentPCI" in reasons

    finding_path = tmp_path / "finding.json"
    assert main(["identify", "--excerpt", str(excerpt_path),
                 "--llm", f"mock:{CORPUS / 'replay.json'}",
                 "--out", str(finding_path)]) == 0
    finding = json.loads(finding_path.read_text())
    assert finding == {"app_id": "app01", "rights_class": "DCAR",
                       "methods": ["AccountSettings"]}


def test_parse_copy_csv(tmp_path):
    out = tmp_path / "extraction.json"
    assert main(["parse-copy", "--in", str(CORPUS / "copies" / "app02.csv"),
                 "--out", str(out)]) == 0
    extraction = json.loads(out.read_text())
    assert extraction["MccMnc"] == [{"description": "Sim Operator", "value": "310260"}]


def test_parse_copy_manual_assist_writes_template(tmp_path):
    src = tmp_path / "copy.pdf"
    src.write_bytes(b"%PDF-1.4 pretend")
    out = tmp_path / "template.json"
    assert main(["parse-copy", "--in", str(src), "--out", str(out)]) == 0
    template = json.loads(out.read_text())
    assert template["format"] == "PDF"
    assert template["entries"] == {}
    # Fill it by hand, then feed it back as a record.
    template["entries"] = {"IP Address": ["203.0.113.7"]}
    filled = tmp_path / "filled.json"
    filled.write_text(json.dumps(template))
    extraction_path = tmp_path / "extraction.json"
    assert main(["parse-copy", "--in", str(filled), "--format", "record",
                 "--out", str(extraction_path)]) == 0
    extraction = json.loads(extraction_path.read_text())
    assert extraction["IPAddress"][0]["value"] == "203.0.113.7"


def test_evaluate_command(tmp_path, capsys):
    pred_dir = tmp_path / "pred"
    pred_dir.mkdir()
    findings = [
        {"app_id": "a", "rights_class": "DCAR", "methods": ["EmailContact"]},
        {"app_id": "b", "rights_class": "None", "methods": []},
    ]
    for f in findings:
        (pred_dir / f"{f['app_id']}.json").write_text(json.dumps(f))
    gold = tmp_path / "gold.json"
    gold.write_text(json.dumps(findings))
    out = tmp_path / "metrics.json"
    assert main(["evaluate", "--pred", str(pred_dir), "--gold", str(gold),
                 "--out", str(out)]) == 0
    table = capsys.readouterr().out
    assert "DCAR" in table and "100.00%" in table
    metrics = json.loads(out.read_text())
    assert metrics["DCAR"]["accuracy"] == 1.0


def test_ledger_cli_round_trip(tmp_path, capsys):
    book = tmp_path / "ledger.jsonl"
    assert main(["ledger", "--ledger", str(book), "open", "--app-id", "appX",
                 "--method", "EmailContact", "--right", "ObtainCopy",
                 "--at", "2024-03-01T10:00:00Z", "--id", "reqX"]) == 0
    assert capsys.readouterr().out.strip() == "reqX"
    assert main(["ledger", "--ledger", str(book), "feedback", "--id", "reqX",
                 "--outcome", "ObtainDataCopy", "--at", "2024-03-01T20:00:00Z"]) == 0
    assert main(["ledger", "--ledger", str(book), "ui-depth", "--app-id", "appX",
                 "--depth", "3"]) == 0
    capsys.readouterr()
    assert main(["ledger", "--ledger", str(book), "summary",
                 "--horizon", "2024-04-01T00:00:00Z"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["authenticity"]["EmailContact"]["ObtainDataCopy"] == 1
    assert summary["feedback"]["EmailContact"]["WithinOneDay"] == 1
    assert summary["ui_depth"]["3"] == 1


def test_ledger_duplicate_open_is_data_error(tmp_path):
    book = tmp_path / "ledger.jsonl"
    args = ["ledger", "--ledger", str(book), "open", "--app-id", "a",
            "--method", "EmailContact", "--right", "ObtainCopy"]
    assert main(args) == 0
    assert main(args) == 2


def test_config_file_defaults_are_used(tmp_path):
    config = tmp_path / "audit.toml"
    config.write_text(f'llm = "mock:{CORPUS / "replay.json"}"\nclassifier = "builtin"\n')
    excerpt = tmp_path / "excerpt.json"
    excerpt.write_text(json.dumps({"app_id": "app04", "members": []}))
    out = tmp_path / "finding.json"
    assert main(["--config", str(config), "identify", "--excerpt", str(excerpt),
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["rights_class"] == "None"


def test_full_pipeline_aggregates(tmp_path):
    paths = run_pipeline(tmp_path)
    report = json.loads(paths["report_json"].read_text())

    assert report["apps_total"] == 10
    assert report["rads"]["DCAR"] == {"count": 5, "denominator": 10, "percent": "50.00%"}
    assert report["rads"]["VDAR"]["percent"] == "30.00%"
    assert report["rads"]["None"]["percent"] == "20.00%"

    assert report["methods"]["EmailContact"] == {"count": 4, "denominator": 8, "percent": "50.00%"}
    assert report["methods"]["AccountSettings"]["percent"] == "37.50%"
    assert report["methods"]["WebformSubmission"]["percent"] == "25.00%"

    email_auth = report["authenticity"]["EmailContact"]
    assert email_auth["Failure"]["count"] == 1
    assert email_auth["ViewInformation"]["count"] == 1
    assert email_auth["ObtainDataCopy"]["count"] == 1

    settings_feedback = report["feedback"]["AccountSettings"]
    assert settings_feedback["ImmediateView"]["count"] == 1
    assert settings_feedback["WithinOneDay"]["count"] == 1
    assert settings_feedback["TwoToThreeDays"]["count"] == 1

    assert report["ui_depth"]["3"]["count"] == 1
    assert report["ui_depth"]["NotFound"]["count"] == 1

    missing = report["missing_rate"]
    assert missing["total"] == 5
    assert missing["complete"] == {"count": 1, "denominator": 5, "percent": "20.00%"}
    assert missing["exceeding"]["0.8"]["count"] == 1
    assert missing["exceeding"]["0.4"]["count"] == 3

    consistency = report["consistency"]
    assert consistency["IPAddress"] == {"count": 1, "denominator": 2, "percent": "50.00%"}

    # Rights-declaring apps produced non-empty excerpts with the builtin classifier.
    for app in ("app01", "app02", "app03", "app05", "app06", "app07", "app09", "app10"):
        excerpt = json.loads((paths["excerpts"] / f"{app}.json").read_text())
        assert excerpt["members"], app
    for app in ("app04", "app08"):
        excerpt = json.loads((paths["excerpts"] / f"{app}.json").read_text())
        assert excerpt["members"] == [], app


def test_report_for_markdown_contains_fractions(tmp_path):
    paths = run_pipeline(tmp_path)
    md = paths["report_md"].read_text()
    assert "50.00% (5/10)" in md
    assert "## Missing rate" in md


def test_console_script_help():
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "rads_audit.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    for verb in ("ingest", "extract", "identify", "evaluate", "parse-copy",
                 "ingest-capture", "verify", "aggregate", "ledger", "report"):
        assert verb in proc.stdout
