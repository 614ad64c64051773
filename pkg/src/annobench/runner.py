"""Annotation-run orchestration.

One run = one model × one prompt configuration over a corpus. Each
eligible report gets one backend call per entity group; group answers are
repaired, typed and merged into a single report annotation. Run output is
a resumable directory of per-report files plus a manifest of counts,
error tallies and timings written last.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .corpus import SectionedReport
from .errors import BackendError, OutputConflict
from .inference import Backend, GenerationRequest, complete
from .prompts import FewShotExample, PromptConfig, build_group_prompt
from .repair import FAILED, JsonErrorCode, ParseOutcome, repair_and_parse
from .schema import BLANK, EntitySchema, Value, validate_value
from .store import Store


@dataclass(frozen=True)
class RunConfig:
    run_id: str
    model_id: str
    shots: int
    include_guidelines: bool
    corpus_path: str
    schema_id: str
    backend: str = "mock"
    parallelism: int = 1
    salvage_groups: bool = False
    max_tokens: int = 512
    timeout_s: float = 120.0

    @property
    def prompt_config(self) -> PromptConfig:
        return PromptConfig(self.shots, self.include_guidelines)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "model_id": self.model_id,
            "shots": self.shots,
            "include_guidelines": self.include_guidelines,
            "corpus_path": self.corpus_path,
            "schema_id": self.schema_id,
            "backend": self.backend,
            "parallelism": self.parallelism,
            "salvage_groups": self.salvage_groups,
            "max_tokens": self.max_tokens,
            "timeout_s": self.timeout_s,
        }


@dataclass
class ReportAnnotation:
    report_id: str
    values: dict[str, Value]
    parse_error: bool = False
    clinician_check: bool = False
    group_outcomes: dict[str, dict] = field(default_factory=dict)
    type_mismatches: list[str] = field(default_factory=list)
    # wall time is bookkeeping, not part of the canonical serialization
    duration_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "values": dict(self.values),
            "parse_error": self.parse_error,
            "clinician_check": self.clinician_check,
            "group_outcomes": self.group_outcomes,
            "type_mismatches": sorted(self.type_mismatches),
        }


def blank_annotation(report_id: str, schema: EntitySchema) -> dict:
    """Annotation dict with every entity blank (the failure shape)."""
    return ReportAnnotation(report_id, {code: BLANK for code in schema.codes}).to_dict()


def _outcome_summary(outcome: ParseOutcome, backend_error: str | None = None) -> dict:
    summary = outcome.to_dict()
    del summary["value"]
    summary["backend_error"] = backend_error
    return summary


def annotate_report(
    report: SectionedReport,
    schema: EntitySchema,
    config: RunConfig,
    backend: Backend,
    fewshots: dict[str, list[FewShotExample]],
    templates: dict[str, str],
) -> ReportAnnotation:
    """Annotate one report: one backend call per group, answers merged.

    A failed group blanks the whole report (parse_error) unless the run
    opts into per-group salvage. Backend errors count as failed outcomes
    and never abort the run.
    """
    start = time.perf_counter()
    values: dict[str, Value] = {}
    mismatches: list[str] = []
    group_outcomes: dict[str, dict] = {}
    failed_groups: set[str] = set()

    for group in schema.groups:
        bundle = build_group_prompt(
            schema, group, report, config.prompt_config, fewshots.get(group.group_id, []), templates
        )
        request = GenerationRequest(
            model_id=config.model_id,
            prompt=bundle.prompt_text,
            temperature=0.0,
            max_tokens=config.max_tokens,
            timeout_s=config.timeout_s,
            tags={"report_id": report.report_id, "group_id": group.group_id},
        )
        backend_error: str | None = None
        try:
            result = complete(backend, request)
            outcome = repair_and_parse(result.text)
        except BackendError as exc:
            backend_error = f"{type(exc).__name__}: {exc}"
            outcome = ParseOutcome(FAILED)
        group_outcomes[group.group_id] = _outcome_summary(outcome, backend_error)

        if outcome.status == FAILED:
            failed_groups.add(group.group_id)
            for code in group.member_codes:
                values[code] = BLANK
            continue
        for code in group.member_codes:
            spec = schema.spec(code)
            if code in outcome.value:
                typed = validate_value(spec, outcome.value[code])
                values[code] = typed.value
                if typed.type_mismatch:
                    mismatches.append(code)
            else:
                values[code] = spec.default_on_missing

    parse_error = bool(failed_groups)
    if parse_error and not config.salvage_groups:
        values = {code: BLANK for code in schema.codes}
        mismatches = []

    return ReportAnnotation(
        report_id=report.report_id,
        values=values,
        parse_error=parse_error,
        group_outcomes=group_outcomes,
        type_mismatches=mismatches,
        duration_s=time.perf_counter() - start,
    )


def annotate_corpus(
    reports: list[SectionedReport],
    schema: EntitySchema,
    config: RunConfig,
    backend: Backend,
    store: Store,
    fewshots: dict[str, list[FewShotExample]],
    templates: dict[str, str],
) -> dict:
    """Run (or resume) a full annotation run; returns the manifest.

    Reports already on disk are skipped untouched, so an interrupted run
    picks up where it stopped. The manifest is recomputed over every
    annotation file and written last.
    """
    existing = store.load_run_config(config.run_id)
    if existing is not None and existing != config.to_dict():
        raise OutputConflict(
            f"run {config.run_id!r} exists with a different configuration"
        )

    wall_start = time.perf_counter()
    durations: dict[str, float] = {}
    with store.writer_lock(config.run_id):
        store.save_run_config(config.run_id, config.to_dict())
        pending = [r for r in reports if not store.annotation_path(config.run_id, r.report_id).is_file()]

        def work(report: SectionedReport) -> ReportAnnotation:
            return annotate_report(report, schema, config, backend, fewshots, templates)

        if config.parallelism > 1:
            with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                annotations = list(pool.map(work, pending))
        else:
            annotations = [work(report) for report in pending]
        for annotation in annotations:
            durations[annotation.report_id] = round(annotation.duration_s, 6)
            store.save_annotation(config.run_id, annotation.to_dict())

        manifest = build_manifest(config, store, durations, time.perf_counter() - wall_start)
        store.save_manifest(config.run_id, manifest)
    return manifest


def build_manifest(config: RunConfig, store: Store, durations: dict[str, float], total_s: float) -> dict:
    annotations = store.list_annotations(config.run_id)
    error_tally = {code.value: 0 for code in JsonErrorCode}
    backend_errors = 0
    errored = 0
    for record in annotations.values():
        if record.get("parse_error"):
            errored += 1
        for outcome in record.get("group_outcomes", {}).values():
            for code in outcome.get("error_codes", []):
                error_tally[code] += 1
            if outcome.get("backend_error"):
                backend_errors += 1
    return {
        "config": config.to_dict(),
        "counts": {"processed": len(annotations), "errored": errored},
        "error_tally": error_tally,
        "backend_errors": backend_errors,
        "timing": {
            "total_s": round(total_s, 6),
            "per_report_s": durations,
        },
    }
