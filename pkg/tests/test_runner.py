from __future__ import annotations

import json

import pytest

from annobench.corpus import RawReport, load_corpus
from annobench.errors import OutputConflict
from annobench.inference import MockBackend, ScriptEntry, script_key
from annobench.runner import RunConfig, annotate_corpus, annotate_report
from annobench.schema import BLANK
from annobench.store import Store
from annobench.synth import build_mock_script, generate_corpus


@pytest.fixture(scope="module")
def truths():
    return generate_corpus(12, seed=21)


@pytest.fixture(scope="module")
def reports(truths):
    loaded, _ = load_corpus(RawReport(t.report_id, t.full_text) for t in truths)
    return loaded


def _config(run_id="run1", **kw):
    defaults = dict(
        run_id=run_id,
        model_id="mock-model",
        shots=2,
        include_guidelines=True,
        corpus_path="fixture",
        schema_id="renal_schema",
    )
    defaults.update(kw)
    return RunConfig(**defaults)


def test_clean_run_yields_typed_values(ref_schema, fewshots, templates, truths, reports):
    backend = MockBackend(build_mock_script(truths, ref_schema))
    annotation = annotate_report(reports[0], ref_schema, _config(), backend, fewshots, templates)
    truth = next(t for t in truths if t.report_id == reports[0].report_id)
    assert annotation.parse_error is False
    assert set(annotation.values) == set(ref_schema.codes)
    for code, expected in truth.values.items():
        assert annotation.values[code] == expected
    assert annotation.duration_s >= 0


def test_failed_group_blanks_whole_report(ref_schema, fewshots, templates, truths, reports):
    rid = reports[0].report_id
    script = build_mock_script(truths, ref_schema, faults={(rid, "glomeruli"): "IncoherentOutput"})
    annotation = annotate_report(reports[0], ref_schema, _config(), MockBackend(script), fewshots, templates)
    assert annotation.parse_error is True
    assert all(v == BLANK for v in annotation.values.values())
    assert annotation.group_outcomes["glomeruli"]["status"] == "failed"


def test_salvage_mode_keeps_clean_groups(ref_schema, fewshots, templates, truths, reports):
    rid = reports[0].report_id
    truth = next(t for t in truths if t.report_id == rid)
    script = build_mock_script(truths, ref_schema, faults={(rid, "glomeruli"): "IncoherentOutput"})
    annotation = annotate_report(
        reports[0], ref_schema, _config(salvage_groups=True), MockBackend(script), fewshots, templates
    )
    assert annotation.parse_error is True
    assert annotation.values["n_total"] == BLANK
    assert annotation.values["final_diagnosis"] == truth.values["final_diagnosis"]


def test_missing_key_filled_from_default(ref_schema, fewshots, templates, truths, reports):
    rid = reports[0].report_id
    script = build_mock_script(truths, ref_schema)
    # cortex/medulla answer omits medulla_present entirely
    script[script_key(rid, "cortex_medulla")] = ScriptEntry(response='{"cortex_present": true}')
    annotation = annotate_report(reports[0], ref_schema, _config(), MockBackend(script), fewshots, templates)
    assert annotation.values["cortex_present"] is True
    assert annotation.values["medulla_present"] is False  # default_on_missing


def test_type_mismatch_tagged_not_dropped(ref_schema, fewshots, templates, truths, reports):
    rid = reports[0].report_id
    script = build_mock_script(truths, ref_schema)
    script[script_key(rid, "glomeruli")] = ScriptEntry(
        response='{"n_total": "plenty", "n_segmental": 0, "n_global": 0, "abnormal_glomeruli": false}'
    )
    annotation = annotate_report(reports[0], ref_schema, _config(), MockBackend(script), fewshots, templates)
    assert annotation.values["n_total"] == "plenty"
    assert annotation.type_mismatches == ["n_total"]


def test_backend_error_treated_as_failed_outcome(ref_schema, fewshots, templates, truths, reports):
    class FlakyBackend:
        backend_id = "flaky"

        def generate(self, request):
            from annobench.errors import BackendUnavailable

            raise BackendUnavailable("nope")

    annotation = annotate_report(reports[0], ref_schema, _config(), FlakyBackend(), fewshots, templates)
    assert annotation.parse_error is True
    assert all(o["backend_error"] for o in annotation.group_outcomes.values())


def test_full_run_writes_directory_and_manifest(ref_schema, fewshots, templates, truths, reports, tmp_path):
    store = Store(tmp_path)
    backend = MockBackend(build_mock_script(truths, ref_schema))
    manifest = annotate_corpus(reports, ref_schema, _config(), backend, store, fewshots, templates)
    assert manifest["counts"]["processed"] == len(reports)
    assert manifest["counts"]["errored"] == 0
    files = sorted(p.name for p in (store.run_dir("run1") / "annotations").glob("*.json"))
    assert files == sorted(f"{r.report_id}.json" for r in reports)
    assert store.load_manifest("run1") == manifest


def test_fault_script_is_oracle_for_manifest_tallies(ref_schema, fewshots, templates, truths, reports, tmp_path):
    eligible_ids = [r.report_id for r in reports]
    faults = {
        (eligible_ids[0], "glomeruli"): "IncoherentOutput",
        (eligible_ids[1], "diagnosis"): "IncoherentOutput",
        (eligible_ids[2], "glomeruli"): "UnclosedBrackets",
        (eligible_ids[3], "chronic"): "BadBackslashEscape",
    }
    store = Store(tmp_path)
    backend = MockBackend(build_mock_script(truths, ref_schema, faults=faults))
    manifest = annotate_corpus(reports, ref_schema, _config(), backend, store, fewshots, templates)
    # the script is the oracle: incoherent faults error the report, the
    # repairable ones are logged but keep the report clean
    assert manifest["counts"]["errored"] == 2
    tally = manifest["error_tally"]
    assert tally["IncoherentOutput"] == 2
    assert tally["NoJsonFound"] == 2  # refusal text has no braces
    assert tally["UnclosedBrackets"] == 1
    assert tally["BadBackslashEscape"] == 1
    annotations = store.list_annotations("run1")
    assert sum(a["parse_error"] for a in annotations.values()) == 2


def test_runs_are_deterministic_byte_identical(ref_schema, fewshots, templates, truths, reports, tmp_path):
    script = build_mock_script(truths, ref_schema, faults={(reports[0].report_id, "glomeruli"): "InnerDoubleQuotes"})
    outputs = []
    for name in ("first", "second"):
        store = Store(tmp_path / name)
        annotate_corpus(reports, ref_schema, _config(), MockBackend(script), store, fewshots, templates)
        outputs.append(
            {
                p.name: p.read_bytes()
                for p in sorted((store.run_dir("run1") / "annotations").glob("*.json"))
            }
        )
    assert outputs[0] == outputs[1]
    # manifests agree once timing is set aside
    manifests = [json.loads((Store(tmp_path / n).run_dir("run1") / "manifest.json").read_text()) for n in ("first", "second")]
    for manifest in manifests:
        manifest.pop("timing")
    assert manifests[0] == manifests[1]


def test_resume_skips_existing_files(ref_schema, fewshots, templates, truths, reports, tmp_path):
    store = Store(tmp_path)
    backend = MockBackend(build_mock_script(truths, ref_schema))
    config = _config()
    first_half = reports[:4]
    annotate_corpus(first_half, ref_schema, config, backend, store, fewshots, templates)
    before = {
        p.name: p.read_bytes() for p in (store.run_dir("run1") / "annotations").glob("*.json")
    }
    assert len(before) == 4

    manifest = annotate_corpus(reports, ref_schema, config, backend, store, fewshots, templates)
    after = {
        p.name: p.read_bytes() for p in (store.run_dir("run1") / "annotations").glob("*.json")
    }
    assert len(after) == len(reports)
    for name, data in before.items():
        assert after[name] == data  # untouched bytes
    assert manifest["counts"]["processed"] == len(reports)
    # resumed reports carry no fresh timing rows
    assert len(manifest["timing"]["per_report_s"]) == len(reports) - 4


def test_output_conflict_on_config_change(ref_schema, fewshots, templates, truths, reports, tmp_path):
    store = Store(tmp_path)
    backend = MockBackend(build_mock_script(truths, ref_schema))
    annotate_corpus(reports[:2], ref_schema, _config(), backend, store, fewshots, templates)
    with pytest.raises(OutputConflict):
        annotate_corpus(reports, ref_schema, _config(shots=0), backend, store, fewshots, templates)


def test_parallel_run_matches_sequential(ref_schema, fewshots, templates, truths, reports, tmp_path):
    script = build_mock_script(truths, ref_schema)
    seq_store = Store(tmp_path / "seq")
    par_store = Store(tmp_path / "par")
    annotate_corpus(reports, ref_schema, _config(), MockBackend(script), seq_store, fewshots, templates)
    annotate_corpus(
        reports, ref_schema, _config(parallelism=4), MockBackend(script), par_store, fewshots, templates
    )
    seq = {p.name: p.read_bytes() for p in (seq_store.run_dir("run1") / "annotations").glob("*.json")}
    par = {p.name: p.read_bytes() for p in (par_store.run_dir("run1") / "annotations").glob("*.json")}
    assert seq == par
