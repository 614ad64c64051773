from __future__ import annotations

import json
from fractions import Fraction

import pytest

from annobench.cli import main
from annobench.inference import dump_fault_script
from annobench.store import Store, load_annotation_dir, pair_id
from annobench.synth import (
    build_mock_script,
    generate_corpus,
    gold_annotation,
    write_corpus,
)


@pytest.fixture()
def fixture_dir(tmp_path, ref_schema):
    truths = generate_corpus(10, seed=5)
    write_corpus(tmp_path / "corpus.ndjson", truths)
    eligible = [t for t in truths if t.eligible]
    faults = {(eligible[0].report_id, "glomeruli"): "IncoherentOutput"}
    script = build_mock_script(truths, ref_schema, faults=faults)
    (tmp_path / "script_a.json").write_text(dump_fault_script(script), encoding="utf-8")
    overrides = {(eligible[1].report_id, code): "77" for code in ("n_total", "n_global", "n_segmental")}
    script_b = build_mock_script(truths, ref_schema, overrides=overrides)
    (tmp_path / "script_b.json").write_text(dump_fault_script(script_b), encoding="utf-8")
    store = Store(tmp_path)
    for truth in truths:
        if truth.eligible:
            store.save_gold(gold_annotation(truth, ref_schema))
    return tmp_path, truths


def _run(tmp_path, *argv):
    return main([f"--config={tmp_path / 'nonexistent.json'}", *argv])


def test_ingest_writes_stats(fixture_dir, capsys):
    tmp_path, truths = fixture_dir
    code = _run(
        tmp_path,
        "ingest",
        f"--workspace={tmp_path}",
        f"--corpus={tmp_path / 'corpus.ndjson'}",
    )
    assert code == 0
    stats = json.loads((tmp_path / "corpus_stats.json").read_text())
    assert stats["eligible"] == sum(t.eligible for t in truths)
    assert stats["total_loaded"] == len(truths)
    printed = json.loads(capsys.readouterr().out)
    assert printed == stats


def test_annotate_evaluate_disagree_flag_queue(fixture_dir, capsys):
    tmp_path, truths = fixture_dir
    corpus = str(tmp_path / "corpus.ndjson")
    for run_id, script in (("mA", "script_a.json"), ("mB", "script_b.json")):
        code = _run(
            tmp_path,
            "annotate",
            f"--workspace={tmp_path}",
            f"--corpus={corpus}",
            f"--run-id={run_id}",
            "--shots=2",
            "--guidelines",
            "--backend=mock",
            f"--fault-script={tmp_path / script}",
        )
        assert code == 0
    manifest = json.loads((tmp_path / "runs" / "mA" / "manifest.json").read_text())
    assert manifest["counts"]["errored"] == 1

    code = _run(
        tmp_path,
        "evaluate",
        f"--workspace={tmp_path}",
        "--run-id=mA",
        "--policy=exclude",
    )
    assert code == 0
    capsys.readouterr()
    score = json.loads((tmp_path / "scores" / "mA_exclude.json").read_text())

    # independent recomputation straight off the files
    annotations = load_annotation_dir(tmp_path / "runs" / "mA" / "annotations")
    gold = load_annotation_dir(tmp_path / "gold")
    correct = total = 0
    for rid, record in annotations.items():
        if record["parse_error"]:
            continue
        for code_name, value in record["values"].items():
            total += 1
            correct += str(value).strip().lower() == str(gold[rid]["values"][code_name]).strip().lower()
    assert Fraction(score["overall"]["correct"], score["overall"]["total"]) == Fraction(correct, total)

    assert _run(tmp_path, "disagree", f"--workspace={tmp_path}", "--run-a=mA", "--run-b=mB") == 0
    capsys.readouterr()
    pair = pair_id("mA", "mB")
    summary = json.loads((tmp_path / "comparisons" / pair / "summary.json").read_text())
    assert summary["mode"] == "gold"
    assert (tmp_path / "comparisons" / pair / "matrix.csv").is_file()

    assert _run(tmp_path, "flag", f"--workspace={tmp_path}", "--run-a=mA", "--run-b=mB", "--threshold=0.32") == 0
    capsys.readouterr()
    flags = json.loads((tmp_path / "comparisons" / pair / "flags.json").read_text())

    # hand recomputation of the flag decisions from the saved records
    records = json.loads((tmp_path / "comparisons" / pair / "comparison.json").read_text())["records"]
    mismatches: dict[str, int] = {}
    for record in records:
        mismatches.setdefault(record["report_id"], 0)
        mismatches[record["report_id"]] += 0 if record["match"] else 1
    expected = {rid: (count / 9) > 0.32 for rid, count in mismatches.items()}
    assert flags["flags"] == expected

    # flags persisted into both runs' annotation files
    for run_id in ("mA", "mB"):
        annotations = load_annotation_dir(tmp_path / "runs" / run_id / "annotations")
        for rid, record in annotations.items():
            assert record["clinician_check"] == expected[rid]

    assert _run(tmp_path, "queue", f"--workspace={tmp_path}", "--run-a=mA", "--run-b=mB") == 0
    capsys.readouterr()
    queue = json.loads((tmp_path / "comparisons" / pair / "queue.json").read_text())
    burdens = [item["burden"] for item in queue["items"]]
    assert burdens == sorted(burdens, reverse=True)


def test_judge_harness_subcommand(fixture_dir, capsys):
    tmp_path, _ = fixture_dir
    code = _run(tmp_path, "judge-harness", f"--workspace={tmp_path}", "--judge=mock")
    assert code == 0
    capsys.readouterr()
    report = json.loads((tmp_path / "harness.json").read_text())
    assert report["total_cases"] == 147
    assert report["position_bias"] == 1.0


def test_rerunning_annotate_is_idempotent(fixture_dir):
    tmp_path, _ = fixture_dir
    corpus = str(tmp_path / "corpus.ndjson")
    argv = (
        "annotate",
        f"--workspace={tmp_path}",
        f"--corpus={corpus}",
        "--run-id=mA",
        "--shots=2",
        "--guidelines",
        "--backend=mock",
        f"--fault-script={tmp_path / 'script_a.json'}",
    )
    assert _run(tmp_path, *argv) == 0
    files = {
        p.name: p.read_bytes() for p in (tmp_path / "runs" / "mA" / "annotations").glob("*.json")
    }
    assert _run(tmp_path, *argv) == 0
    again = {
        p.name: p.read_bytes() for p in (tmp_path / "runs" / "mA" / "annotations").glob("*.json")
    }
    assert files == again


def test_usage_error_exit_code(capsys):
    assert main(["not-a-command"]) == 1
    assert main([]) == 1


def test_data_error_emits_json(tmp_path, capsys):
    code = _run(tmp_path, "ingest", f"--workspace={tmp_path}", f"--corpus={tmp_path / 'missing.ndjson'}")
    assert code == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "data"


def test_backend_error_exit_code(fixture_dir, capsys):
    # judge path: a dead judge server aborts with the backend exit code
    # (annotation-time backend errors are recorded per group instead)
    tmp_path, _ = fixture_dir
    code = _run(
        tmp_path,
        "judge-harness",
        f"--workspace={tmp_path}",
        "--judge=http",
        "--judge-url=http://127.0.0.1:9",  # nothing listens on the discard port
    )
    assert code == 3
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "backend"


def test_annotate_records_backend_errors_without_aborting(fixture_dir, capsys):
    tmp_path, _ = fixture_dir
    code = _run(
        tmp_path,
        "annotate",
        f"--workspace={tmp_path}",
        f"--corpus={tmp_path / 'corpus.ndjson'}",
        "--run-id=live",
        "--backend=http",
        "--base-url=http://127.0.0.1:9",
        "--timeout=0.2",
    )
    assert code == 0
    capsys.readouterr()
    manifest = json.loads((tmp_path / "runs" / "live" / "manifest.json").read_text())
    assert manifest["backend_errors"] > 0
    assert manifest["counts"]["errored"] == manifest["counts"]["processed"]


def test_config_file_precedence(tmp_path, fixture_dir, capsys):
    fixture_path, truths = fixture_dir
    config = {"workspace": str(fixture_path), "corpus": str(fixture_path / "corpus.ndjson")}
    config_path = tmp_path / "cfg.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    code = main([f"--config={config_path}", "ingest"])
    assert code == 0
    stats = json.loads((fixture_path / "corpus_stats.json").read_text())
    assert stats["total_loaded"] == len(truths)
