"""Plain-file persistence for runs, gold labels, comparisons and comments.

Layout under one workspace root:

    runs/<run_id>/config.json
    runs/<run_id>/manifest.json
    runs/<run_id>/annotations/<report_id>.json
    gold/<report_id>.json
    comparisons/<pair_id>/comparison.json
    comparisons/<pair_id>/comments.ndjson

Annotations are canonical sorted-key JSON written atomically (temp file +
rename); each run directory takes a single writer enforced by a lock
file; the comment log is append-only.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import LockHeld, StoreError, UnknownComparison

_LOCK_NAME = ".writer.lock"


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise StoreError(f"write failed for {path}: {exc}") from exc
    finally:
        if tmp.exists():
            tmp.unlink(missing_ok=True)


@dataclass(frozen=True)
class CommentRecord:
    report_id: str
    entity_code: str
    author: str
    text: str
    run_pair: tuple[str, str]
    created_at: str = ""

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "entity_code": self.entity_code,
            "author": self.author,
            "text": self.text,
            "run_pair": list(self.run_pair),
            "created_at": self.created_at,
        }

    @staticmethod
    def from_dict(data: dict) -> "CommentRecord":
        return CommentRecord(
            report_id=data["report_id"],
            entity_code=data["entity_code"],
            author=data.get("author", ""),
            text=data["text"],
            run_pair=tuple(data.get("run_pair", ("", ""))),
            created_at=data.get("created_at", ""),
        )


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def pair_id(run_a: str, run_b: str) -> str:
    return f"{run_a}__{run_b}"


def load_annotation_dir(directory: str | Path) -> dict[str, dict]:
    """Read every per-report JSON file in a directory, keyed by report id."""
    directory = Path(directory)
    if not directory.is_dir():
        return {}
    result = {}
    for path in sorted(directory.glob("*.json")):
        record = json.loads(path.read_text(encoding="utf-8"))
        result[record["report_id"]] = record
    return result


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- run directories ---------------------------------------------------

    @property
    def runs_dir(self) -> Path:
        return self.root / "runs"

    @property
    def gold_dir(self) -> Path:
        return self.root / "gold"

    @property
    def comparisons_dir(self) -> Path:
        return self.root / "comparisons"

    def run_dir(self, run_id: str) -> Path:
        return self.runs_dir / run_id

    def annotation_path(self, run_id: str, report_id: str) -> Path:
        return self.run_dir(run_id) / "annotations" / f"{report_id}.json"

    def list_runs(self) -> list[str]:
        if not self.runs_dir.is_dir():
            return []
        return sorted(p.name for p in self.runs_dir.iterdir() if p.is_dir())

    @contextmanager
    def writer_lock(self, run_id: str):
        """Single-writer contract for one run directory."""
        run_dir = self.run_dir(run_id)
        run_dir.mkdir(parents=True, exist_ok=True)
        lock_path = run_dir / _LOCK_NAME
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise LockHeld(f"run {run_id!r} already has a writer (lock {lock_path})") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            lock_path.unlink(missing_ok=True)

    def save_annotation(self, run_id: str, annotation: dict) -> Path:
        path = self.annotation_path(run_id, annotation["report_id"])
        atomic_write(path, canonical_json(annotation))
        return path

    def load_annotation(self, run_id: str, report_id: str) -> dict:
        path = self.annotation_path(run_id, report_id)
        if not path.is_file():
            raise StoreError(f"no annotation for report {report_id!r} in run {run_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def list_annotations(self, run_id: str) -> dict[str, dict]:
        directory = self.run_dir(run_id) / "annotations"
        if not directory.is_dir():
            return {}
        result = {}
        for path in sorted(directory.glob("*.json")):
            record = json.loads(path.read_text(encoding="utf-8"))
            result[record["report_id"]] = record
        return result

    def save_run_config(self, run_id: str, config: dict) -> None:
        atomic_write(self.run_dir(run_id) / "config.json", canonical_json(config))

    def load_run_config(self, run_id: str) -> dict | None:
        path = self.run_dir(run_id) / "config.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def save_manifest(self, run_id: str, manifest: dict) -> Path:
        path = self.run_dir(run_id) / "manifest.json"
        atomic_write(path, canonical_json(manifest))
        return path

    def load_manifest(self, run_id: str) -> dict | None:
        path = self.run_dir(run_id) / "manifest.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def apply_flags(self, run_id: str, flags: dict[str, bool]) -> int:
        """Persist clinician_check flags into a run's annotation files."""
        updated = 0
        with self.writer_lock(run_id):
            for report_id, flag in flags.items():
                path = self.annotation_path(run_id, report_id)
                if not path.is_file():
                    continue
                record = json.loads(path.read_text(encoding="utf-8"))
                if record.get("clinician_check") != flag:
                    record["clinician_check"] = flag
                    atomic_write(path, canonical_json(record))
                updated += 1
        return updated

    # -- gold annotations ----------------------------------------------------

    def save_gold(self, annotation: dict) -> Path:
        path = self.gold_dir / f"{annotation['report_id']}.json"
        atomic_write(path, canonical_json(annotation))
        return path

    def load_gold(self) -> dict[str, dict]:
        return load_annotation_dir(self.gold_dir)

    # -- comparisons and comments ------------------------------------------

    def comparison_dir(self, pair: str) -> Path:
        return self.comparisons_dir / pair

    def save_comparison(self, pair: str, payload: dict) -> Path:
        path = self.comparison_dir(pair) / "comparison.json"
        atomic_write(path, canonical_json(payload))
        return path

    def load_comparison(self, pair: str) -> dict:
        path = self.comparison_dir(pair) / "comparison.json"
        if not path.is_file():
            raise UnknownComparison(pair)
        return json.loads(path.read_text(encoding="utf-8"))

    def append_comment(self, pair: str, record: CommentRecord, valid_codes: set[str] | None = None) -> CommentRecord:
        """Append one comment to the pair's log; prior bytes never change."""
        if not (self.comparison_dir(pair) / "comparison.json").is_file():
            raise UnknownComparison(pair)
        if not record.text.strip():
            raise StoreError("comment text must be non-empty")
        if valid_codes is not None and record.entity_code not in valid_codes:
            raise StoreError(f"unknown entity code {record.entity_code!r}")
        if not record.created_at:
            record = CommentRecord(
                report_id=record.report_id,
                entity_code=record.entity_code,
                author=record.author,
                text=record.text,
                run_pair=record.run_pair,
                created_at=_utc_now(),
            )
        path = self.comparison_dir(pair) / "comments.ndjson"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
        return record

    def load_comments(self, pair: str) -> list[CommentRecord]:
        path = self.comparison_dir(pair) / "comments.ndjson"
        if not path.is_file():
            return []
        records = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                records.append(CommentRecord.from_dict(json.loads(line)))
        return records
