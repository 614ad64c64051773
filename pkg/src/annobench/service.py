"""Local HTTP API for the annotation and comparison UIs.

JSON over HTTP, everything under /api/, bound to localhost by default
(clinical text never leaves the machine unless explicitly reconfigured).
The browser client is served statically from ui_dir when that directory
exists; the API works the same with the UI unbuilt.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .corpus import DEFAULT_HEADER_TABLE, HeaderTable, SectionedReport, load_corpus_file
from .disagree import build_review_queue, compare_runs, EntityComparison, report_burdens
from .errors import StoreError, UnknownComparison
from .evaluate import IdentityJudge
from .schema import BLANK, EntitySchema, load_schema, schema_to_json, validate_value
from .store import CommentRecord, Store, pair_id

DEFAULT_DISPLAY_SECTIONS = ("clinical", "microscopy", "conclusion")


@dataclass
class ServiceConfig:
    workspace: Path
    corpus_path: Path
    schema_path: Path
    run_a: str | None = None
    run_b: str | None = None
    display_sections: tuple[str, ...] = DEFAULT_DISPLAY_SECTIONS
    page_size: int = 50
    ui_dir: Path | None = None
    header_table: HeaderTable = DEFAULT_HEADER_TABLE
    use_gold_for_comparison: bool = True


@dataclass
class ServiceState:
    config: ServiceConfig
    schema: EntitySchema
    reports: dict[str, SectionedReport]
    store: Store
    comparison_pair: str | None = None
    comparison_records: list[EntityComparison] = dataclass_field(default_factory=list)
    comparison_summary: dict = dataclass_field(default_factory=dict)
    queue: list[dict] = dataclass_field(default_factory=list)

    def run_annotation(self, run_id: str, report_id: str) -> dict | None:
        try:
            return self.store.load_annotation(run_id, report_id)
        except StoreError:
            return None


def build_state(config: ServiceConfig) -> ServiceState:
    schema = load_schema(config.schema_path)
    reports, _ = load_corpus_file(config.corpus_path, config.header_table)
    store = Store(config.workspace)
    state = ServiceState(
        config=config,
        schema=schema,
        reports={r.report_id: r for r in reports},
        store=store,
    )
    if config.run_a and config.run_b:
        state.comparison_pair = pair_id(config.run_a, config.run_b)
        try:
            payload = store.load_comparison(state.comparison_pair)
            state.comparison_records = [EntityComparison.from_dict(d) for d in payload["records"]]
            state.comparison_summary = payload["summary"]
        except UnknownComparison:
            run_a = store.list_annotations(config.run_a)
            run_b = store.list_annotations(config.run_b)
            gold = store.load_gold() if config.use_gold_for_comparison else {}
            gold_arg = gold if gold and set(run_a) <= set(gold) else None
            summary, records = compare_runs(run_a, run_b, schema, gold=gold_arg, judge=IdentityJudge())
            state.comparison_records = records
            state.comparison_summary = summary
            store.save_comparison(
                state.comparison_pair,
                {"summary": summary, "records": [r.to_dict() for r in records]},
            )
        state.queue = build_review_queue(state.comparison_records, schema)
    return state


def _report_flag(state: ServiceState, report_id: str) -> bool:
    for run_id in (state.config.run_a, state.config.run_b):
        if not run_id:
            continue
        annotation = state.run_annotation(run_id, report_id)
        if annotation and annotation.get("clinician_check"):
            return True
    return False


def _canonicalize_submission(state: ServiceState, values: dict) -> tuple[dict, list[str], dict[str, str]]:
    """Validate a submitted value map; returns (canonical, mismatches, errors)."""
    errors: dict[str, str] = {}
    unknown = set(values) - set(state.schema.codes)
    for code in sorted(unknown):
        errors[code] = "unknown entity code"
    canonical: dict = {}
    mismatches: list[str] = []
    for code in state.schema.codes:
        spec = state.schema.spec(code)
        typed = validate_value(spec, values.get(code, BLANK))
        canonical[code] = typed.value
        if typed.type_mismatch:
            mismatches.append(code)
    return canonical, mismatches, errors


def create_app(config: ServiceConfig) -> FastAPI:
    state = build_state(config)
    app = FastAPI(title="annobench service", version="0.1.0")
    app.state.workbench = state

    @app.get("/api/schema")
    def get_schema() -> JSONResponse:
        return JSONResponse(schema_to_json(state.schema))

    @app.get("/api/runs")
    def get_runs() -> JSONResponse:
        runs = []
        for run_id in state.store.list_runs():
            manifest = state.store.load_manifest(run_id)
            runs.append(
                {
                    "run_id": run_id,
                    "config": state.store.load_run_config(run_id),
                    "counts": (manifest or {}).get("counts"),
                }
            )
        return JSONResponse({"runs": runs, "active_pair": [state.config.run_a, state.config.run_b]})

    @app.get("/api/reports")
    def list_reports(filter: str = "all", page: int = 1, page_size: int | None = None) -> JSONResponse:
        if filter not in ("all", "flagged-only", "unannotated-only"):
            return JSONResponse({"error": f"unknown filter {filter!r}"}, status_code=422)
        gold = state.store.load_gold()
        burdens = report_burdens(state.comparison_records)
        rows = []
        for report_id in sorted(state.reports):
            flagged = _report_flag(state, report_id)
            annotated = report_id in gold
            if filter == "flagged-only" and not flagged:
                continue
            if filter == "unannotated-only" and annotated:
                continue
            rows.append(
                {
                    "report_id": report_id,
                    "flagged": flagged,
                    "annotated": annotated,
                    "burden": burdens.get(report_id, 0),
                    "status": "flagged" if flagged else ("annotated" if annotated else "unannotated"),
                }
            )
        if filter == "flagged-only":
            rows.sort(key=lambda row: (-row["burden"], row["report_id"]))
        size = page_size or state.config.page_size
        total = len(rows)
        page_count = max(1, -(-total // size))
        start = (page - 1) * size
        return JSONResponse(
            {
                "items": rows[start : start + size],
                "total": total,
                "page": page,
                "page_size": size,
                "page_count": page_count,
            }
        )

    @app.get("/api/reports/{report_id}")
    def get_report(report_id: str) -> JSONResponse:
        report = state.reports.get(report_id)
        if report is None:
            return JSONResponse({"error": f"unknown report {report_id!r}"}, status_code=404)
        gold = state.store.load_gold().get(report_id)
        sections = {
            name: report.sections[name]
            for name in state.config.display_sections
            if name in report.sections
        }
        return JSONResponse(
            {
                "report_id": report_id,
                "sections": sections,
                "schema": schema_to_json(state.schema),
                "annotation": gold,
                "clinician_check": _report_flag(state, report_id),
            }
        )

    @app.put("/api/reports/{report_id}/annotation")
    async def put_annotation(report_id: str, request: Request) -> JSONResponse:
        if report_id not in state.reports:
            return JSONResponse({"error": f"unknown report {report_id!r}"}, status_code=404)
        body = await request.json()
        values = body.get("values")
        if not isinstance(values, dict):
            return JSONResponse({"error": "body must carry a 'values' object"}, status_code=422)
        canonical, mismatches, errors = _canonicalize_submission(state, values)
        if errors:
            return JSONResponse({"error": "validation failed", "errors": errors}, status_code=422)
        record = {
            "report_id": report_id,
            "values": canonical,
            "parse_error": False,
            "clinician_check": _report_flag(state, report_id),
            "group_outcomes": {},
            "type_mismatches": mismatches,
        }
        try:
            state.store.save_gold(record)
        except StoreError as exc:
            return JSONResponse({"error": str(exc)}, status_code=500)
        warnings = [f"{code}: value kept as text (type mismatch)" for code in mismatches]
        return JSONResponse({"report_id": report_id, "values": canonical, "type_mismatches": mismatches, "warnings": warnings})

    @app.get("/api/queue")
    def get_queue() -> JSONResponse:
        return JSONResponse({"pair": state.comparison_pair, "items": state.queue})

    @app.get("/api/compare/{report_id}")
    def get_comparison(report_id: str) -> JSONResponse:
        if state.comparison_pair is None:
            return JSONResponse({"error": "no run pair configured"}, status_code=404)
        if report_id not in state.reports:
            return JSONResponse({"error": f"unknown report {report_id!r}"}, status_code=404)
        records = [r for r in state.comparison_records if r.report_id == report_id]
        if not records:
            return JSONResponse({"error": f"no comparison for report {report_id!r}"}, status_code=404)
        comments = [
            c.to_dict()
            for c in state.store.load_comments(state.comparison_pair)
            if c.report_id == report_id
        ]
        ann_a = state.run_annotation(state.config.run_a, report_id) or {"values": {}}
        ann_b = state.run_annotation(state.config.run_b, report_id) or {"values": {}}
        by_code = {r.entity_code: r for r in records}
        entities = []
        for code in state.schema.codes:
            spec = state.schema.spec(code)
            record = by_code.get(code)
            entities.append(
                {
                    "code": code,
                    "question": spec.question,
                    "value_a": ann_a["values"].get(code, BLANK),
                    "value_b": ann_b["values"].get(code, BLANK),
                    "match": record.match if record else None,
                    "category": record.category if record else None,
                    "weight": spec.priority_weight,
                    "tier": spec.tier,
                    "comments": [c for c in comments if c["entity_code"] == code],
                }
            )
        return JSONResponse(
            {
                "report_id": report_id,
                "pair": state.comparison_pair,
                "run_a": state.config.run_a,
                "run_b": state.config.run_b,
                "clinician_check": _report_flag(state, report_id),
                "entities": entities,
            }
        )

    @app.post("/api/compare/{report_id}/comments")
    async def post_comment(report_id: str, request: Request) -> JSONResponse:
        if state.comparison_pair is None:
            return JSONResponse({"error": "no run pair configured"}, status_code=404)
        body = await request.json()
        entity = body.get("entity", "")
        text = body.get("text", "")
        record = CommentRecord(
            report_id=report_id,
            entity_code=entity,
            author=body.get("author", "reviewer"),
            text=text,
            run_pair=(state.config.run_a or "", state.config.run_b or ""),
        )
        try:
            saved = state.store.append_comment(
                state.comparison_pair, record, valid_codes=set(state.schema.codes)
            )
        except UnknownComparison:
            return JSONResponse({"error": "comparison not found"}, status_code=404)
        except StoreError as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        return JSONResponse(saved.to_dict(), status_code=201)

    ui_dir = config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
