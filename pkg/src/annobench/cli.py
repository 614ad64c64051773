"""Command-line entry point for every workflow stage.

Subcommands: ingest, annotate, evaluate, judge-harness, disagree, flag,
queue, serve. Every subcommand writes its result to a file and mirrors it
on stdout; errors land on stderr as machine-readable JSON. Exit codes:
0 ok, 1 usage, 2 data error, 3 backend error.

Option values resolve as CLI flag > environment variable > config file >
built-in default. The config file is JSON, found via --config,
$ANNOBENCH_CONFIG, or ./annobench.json.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus import DEFAULT_HEADER_TABLE, load_corpus_file, load_header_table
from .disagree import (
    DEFAULT_FLAG_THRESHOLD,
    EntityComparison,
    build_review_queue,
    category_matrix_csv,
    compare_runs,
    flag_reports,
    format_category_fractions,
)
from .errors import AnnobenchError, BackendError, DataError
from .evaluate import (
    POLICY_COUNT_WRONG,
    POLICY_EXCLUDE,
    BackendJudge,
    IdentityJudge,
    Judge,
    ScriptedJudge,
    judge_harness,
    load_judge_pairs,
    score_run,
)
from .inference import HttpBackend, MockBackend, load_fault_script
from .prompts import load_fewshots, load_templates, validate_fewshots
from .runner import RunConfig, annotate_corpus
from .schema import load_schema, reference_schema_path
from .store import Store, load_annotation_dir, pair_id

ENV_PREFIX = "ANNOBENCH"


def _env(name: str) -> str | None:
    return os.environ.get(f"{ENV_PREFIX}_{name.upper().replace('-', '_')}")


def _load_config_file(explicit: str | None) -> dict:
    candidates = [explicit, _env("config"), "annobench.json"]
    for candidate in candidates:
        if candidate and Path(candidate).is_file():
            return json.loads(Path(candidate).read_text(encoding="utf-8"))
    return {}


def _resolve(args: argparse.Namespace, name: str, default=None):
    """flag > env var > config file > default."""
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    env_value = _env(name)
    if env_value is not None:
        return env_value
    config = getattr(args, "_config_data", {})
    if name in config:
        return config[name]
    return default


def _print_artifact(path: Path, payload: dict | list) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _store(args: argparse.Namespace) -> Store:
    return Store(Path(_resolve(args, "workspace", ".")))


def _schema(args: argparse.Namespace):
    path = _resolve(args, "schema", str(reference_schema_path()))
    return load_schema(path)


def _header_table(args: argparse.Namespace):
    path = _resolve(args, "headers")
    return load_header_table(path) if path else DEFAULT_HEADER_TABLE


def _judge(args: argparse.Namespace) -> Judge:
    kind = _resolve(args, "judge", "identity")
    if kind == "identity":
        return IdentityJudge()
    if kind == "mock":
        pairs = load_judge_pairs(_resolve(args, "judge-pairs"))
        return ScriptedJudge.from_cases(pairs)
    if kind == "http":
        base_url = _resolve(args, "judge-url", "http://127.0.0.1:11434")
        model = _resolve(args, "judge-model", "llama3.2:1b")
        return BackendJudge(HttpBackend(base_url), load_templates(_resolve(args, "templates")), model)
    raise DataError(f"unknown judge kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommands


def _corpus_path(args: argparse.Namespace) -> Path:
    value = _resolve(args, "corpus")
    if not value:
        raise DataError("no corpus path given (flag --corpus, env, or config file)")
    return Path(value)


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus_path = _corpus_path(args)
    _, stats = load_corpus_file(corpus_path, _header_table(args))
    out = Path(_resolve(args, "out", Path(_resolve(args, "workspace", ".")) / "corpus_stats.json"))
    _print_artifact(out, stats.to_dict())
    return 0


def cmd_annotate(args: argparse.Namespace) -> int:
    schema = _schema(args)
    store = _store(args)
    corpus_path = _corpus_path(args)
    reports, _ = load_corpus_file(corpus_path, _header_table(args))

    templates = load_templates(_resolve(args, "templates"))
    fewshots = load_fewshots(_resolve(args, "fewshots"))
    validate_fewshots(fewshots, schema)

    backend_kind = _resolve(args, "backend", "mock")
    if backend_kind == "mock":
        script = load_fault_script(args.fault_script) if args.fault_script else {}
        backend = MockBackend(script)
    elif backend_kind == "http":
        backend = HttpBackend(_resolve(args, "base-url", "http://127.0.0.1:11434"))
    else:
        raise DataError(f"unknown backend {backend_kind!r}")

    config = RunConfig(
        run_id=args.run_id,
        model_id=_resolve(args, "model", "mock-model"),
        shots=args.shots,
        include_guidelines=args.guidelines,
        corpus_path=str(corpus_path),
        schema_id=schema.schema_id,
        backend=backend_kind,
        parallelism=int(_resolve(args, "parallelism", 1)),
        salvage_groups=bool(args.salvage_groups),
        max_tokens=int(_resolve(args, "max-tokens", 512)),
        timeout_s=float(_resolve(args, "timeout", 120.0)),
    )
    manifest = annotate_corpus(reports, schema, config, backend, store, fewshots, templates)
    sys.stdout.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    schema = _schema(args)
    store = _store(args)
    annotations = store.list_annotations(args.run_id)
    if not annotations:
        raise DataError(f"run {args.run_id!r} has no annotations in {store.runs_dir}")
    gold_dir = _resolve(args, "gold")
    gold = load_annotation_dir(gold_dir) if gold_dir else store.load_gold()
    if not gold:
        raise DataError("no gold annotations found")
    score = score_run(annotations, gold, schema, policy=args.policy, judge=_judge(args))
    out = Path(_resolve(args, "out", store.root / "scores" / f"{args.run_id}_{args.policy}.json"))
    _print_artifact(out, score.to_dict())
    sys.stderr.write(score.format_table() + "\n")
    return 0


def cmd_judge_harness(args: argparse.Namespace) -> int:
    store = _store(args)
    cases = load_judge_pairs(_resolve(args, "pairs"))
    report = judge_harness(cases, _judge(args))
    out = Path(_resolve(args, "out", store.root / "harness.json"))
    _print_artifact(out, report.to_dict())
    sys.stderr.write(report.format_table() + "\n")
    return 0


def _load_pair(args: argparse.Namespace, store: Store, schema) -> tuple[str, dict, list[EntityComparison]]:
    pair = pair_id(args.run_a, args.run_b)
    run_a = store.list_annotations(args.run_a)
    run_b = store.list_annotations(args.run_b)
    if not run_a or not run_b:
        raise DataError("both runs need annotations before comparison")
    gold = None
    if not args.no_gold:
        gold_candidates = store.load_gold()
        if gold_candidates and set(run_a) <= set(gold_candidates):
            gold = gold_candidates
    summary, records = compare_runs(run_a, run_b, schema, gold=gold, judge=_judge(args))
    store.save_comparison(pair, {"summary": summary, "records": [r.to_dict() for r in records]})
    return pair, summary, records


def cmd_disagree(args: argparse.Namespace) -> int:
    schema = _schema(args)
    store = _store(args)
    pair, summary, _ = _load_pair(args, store, schema)
    matrix = category_matrix_csv(summary, schema)
    (store.comparison_dir(pair) / "matrix.csv").write_text(matrix, encoding="utf-8")
    _print_artifact(store.comparison_dir(pair) / "summary.json", summary)
    fractions = format_category_fractions(summary)
    if fractions:
        sys.stderr.write(fractions + "\n")
    return 0


def _records_for_pair(args: argparse.Namespace, store: Store, schema) -> tuple[str, list[EntityComparison]]:
    pair = pair_id(args.run_a, args.run_b)
    try:
        payload = store.load_comparison(pair)
        records = [EntityComparison.from_dict(d) for d in payload["records"]]
    except AnnobenchError:
        pair, _, records = _load_pair(args, store, schema)
    return pair, records


def cmd_flag(args: argparse.Namespace) -> int:
    schema = _schema(args)
    store = _store(args)
    pair, records = _records_for_pair(args, store, schema)
    flags = flag_reports(records, schema, threshold=args.threshold, strict=not args.non_strict)
    for run_id in (args.run_a, args.run_b):
        store.apply_flags(run_id, flags)
    payload = {
        "pair": pair,
        "threshold": args.threshold,
        "strict": not args.non_strict,
        "flags": {rid: flag for rid, flag in sorted(flags.items())},
        "flagged_count": sum(flags.values()),
    }
    _print_artifact(store.comparison_dir(pair) / "flags.json", payload)
    return 0


def cmd_queue(args: argparse.Namespace) -> int:
    schema = _schema(args)
    store = _store(args)
    pair, records = _records_for_pair(args, store, schema)
    queue = build_review_queue(records, schema)
    _print_artifact(store.comparison_dir(pair) / "queue.json", {"pair": pair, "items": queue})
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    workspace = Path(_resolve(args, "workspace", "."))
    ui_dir = _resolve(args, "ui-dir", "frontend/dist")
    config = ServiceConfig(
        workspace=workspace,
        corpus_path=_corpus_path(args),
        schema_path=Path(_resolve(args, "schema", str(reference_schema_path()))),
        run_a=args.run_a,
        run_b=args.run_b,
        ui_dir=Path(ui_dir) if ui_dir and Path(ui_dir).is_dir() else None,
        header_table=_header_table(args),
    )
    app = create_app(config)
    host = _resolve(args, "host", "127.0.0.1")
    port = int(_resolve(args, "port", 8377))
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="annobench", description=__doc__)
    parser.add_argument("--config", help="JSON config file (flag > env > config > default)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--workspace", help="workspace root holding runs/, gold/, comparisons/")
        p.add_argument("--schema", help="schema TSV path (default: shipped renal reference)")

    p = sub.add_parser("ingest", help="segment a corpus and report eligibility stats")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--headers", help="JSON header alias table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("annotate", help="run a model over the corpus into a run directory")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--headers")
    p.add_argument("--run-id", required=True)
    p.add_argument("--model")
    p.add_argument("--shots", type=int, choices=(0, 2), default=0)
    p.add_argument("--guidelines", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--backend", choices=("http", "mock"))
    p.add_argument("--fault-script", help="mock backend script JSON")
    p.add_argument("--base-url")
    p.add_argument("--templates")
    p.add_argument("--fewshots")
    p.add_argument("--parallelism", type=int)
    p.add_argument("--max-tokens", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--salvage-groups", action="store_true")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("evaluate", help="score a run against gold annotations")
    common(p)
    p.add_argument("--run-id", required=True)
    p.add_argument("--gold", help="gold directory (default: workspace gold/)")
    p.add_argument("--policy", choices=(POLICY_EXCLUDE, POLICY_COUNT_WRONG), default=POLICY_EXCLUDE)
    p.add_argument("--judge", choices=("identity", "mock", "http"))
    p.add_argument("--judge-model")
    p.add_argument("--judge-url")
    p.add_argument("--judge-pairs")
    p.add_argument("--templates")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("judge-harness", help="rate a judge on labelled phrase pairs")
    common(p)
    p.add_argument("--pairs", help="pair fixture JSON (default: shipped set)")
    p.add_argument("--judge", choices=("identity", "mock", "http"))
    p.add_argument("--judge-model")
    p.add_argument("--judge-url")
    p.add_argument("--judge-pairs")
    p.add_argument("--templates")
    p.add_argument("--out")
    p.set_defaults(func=cmd_judge_harness)

    def pair_args(p: argparse.ArgumentParser) -> None:
        common(p)
        p.add_argument("--run-a", required=True)
        p.add_argument("--run-b", required=True)
        p.add_argument("--no-gold", action="store_true", help="force gold-free comparison")
        p.add_argument("--judge", choices=("identity", "mock", "http"))
        p.add_argument("--judge-model")
        p.add_argument("--judge-url")
        p.add_argument("--judge-pairs")
        p.add_argument("--templates")

    p = sub.add_parser("disagree", help="three-way comparison of two runs (optionally with gold)")
    pair_args(p)
    p.set_defaults(func=cmd_disagree)

    p = sub.add_parser("flag", help="set clinician_check flags from mismatch fractions")
    pair_args(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_FLAG_THRESHOLD)
    p.add_argument("--non-strict", action="store_true", help="flag at fraction >= threshold")
    p.set_defaults(func=cmd_flag)

    p = sub.add_parser("queue", help="emit the priority-weighted review queue")
    pair_args(p)
    p.set_defaults(func=cmd_queue)

    p = sub.add_parser("serve", help="serve the local annotation/comparison API")
    common(p)
    p.add_argument("--corpus")
    p.add_argument("--headers")
    p.add_argument("--run-a")
    p.add_argument("--run-b")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--ui-dir")
    p.set_defaults(func=cmd_serve)

    return parser


def _emit_error(kind: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    args._config_data = _load_config_file(args.config)
    try:
        return args.func(args)
    except BackendError as exc:
        _emit_error("backend", exc)
        return 3
    except AnnobenchError as exc:
        _emit_error("data", exc)
        return 2
    except FileNotFoundError as exc:
        _emit_error("data", exc)
        return 2


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
