"""Rule-based section segmentation and corpus loading.

Reports arrive as newline-delimited JSON records (``report_id``, ``text``)
and are split into up to five canonical sections. A report is eligible for
extraction only when both the microscopy and conclusion sections are
present and non-empty; everything else is tallied as dropped with a
reason.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import DataError, DuplicateReportId, NoSectionsFound

SECTION_NAMES = ("clinical", "specimen", "macroscopy", "microscopy", "conclusion")

REQUIRED_SECTIONS = ("microscopy", "conclusion")

# Canonical name -> header aliases. Matching is case-insensitive, the alias
# must be alone on its line, and a trailing colon is optional.
DEFAULT_HEADER_TABLE: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("clinical", ("CLINICAL", "CLINICAL HISTORY", "CLINICAL DETAILS", "HISTORY")),
    ("specimen", ("SPECIMEN", "BIOPSY SPECIMEN", "SPECIMEN TYPE")),
    ("macroscopy", ("MACROSCOPY", "MACROSCOPIC", "MACROSCOPIC DESCRIPTION", "GROSS DESCRIPTION")),
    ("microscopy", ("MICROSCOPY", "MICROSCOPIC", "MICROSCOPIC DESCRIPTION")),
    ("conclusion", ("CONCLUSION", "CONCLUSIONS", "CONCLUSION AND COMMENT")),
)

DROP_REASONS = ("missing-microscopy", "missing-conclusion", "no-sections")

HeaderTable = Sequence[tuple[str, Sequence[str]]]


@dataclass(frozen=True)
class RawReport:
    report_id: str
    full_text: str


@dataclass(frozen=True)
class SectionedReport:
    report_id: str
    sections: dict[str, str]
    word_count: int

    @property
    def eligible(self) -> bool:
        return all(self.sections.get(name, "").strip() for name in REQUIRED_SECTIONS)


@dataclass
class CorpusStats:
    total_loaded: int = 0
    eligible: int = 0
    dropped: int = 0
    dropped_by_reason: dict[str, int] = field(
        default_factory=lambda: {reason: 0 for reason in DROP_REASONS}
    )
    # reports in which at least one section was detected (intermediate count
    # before the microscopy+conclusion requirement)
    segmented: int = 0
    word_count_mean: float | None = None
    word_count_std: float | None = None

    def to_dict(self) -> dict:
        return {
            "total_loaded": self.total_loaded,
            "eligible": self.eligible,
            "dropped": self.dropped,
            "dropped_by_reason": dict(self.dropped_by_reason),
            "segmented": self.segmented,
            "word_count_mean": self.word_count_mean,
            "word_count_std": self.word_count_std,
        }


def load_header_table(path: str | Path) -> HeaderTable:
    """Load a header alias table from a JSON config file.

    Format: object mapping canonical section name -> list of aliases.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict) or not data:
        raise DataError(f"header table {path}: expected a non-empty JSON object")
    table = []
    for name, aliases in data.items():
        if name not in SECTION_NAMES:
            raise DataError(f"header table {path}: unknown section name {name!r}")
        if not isinstance(aliases, list) or not all(isinstance(a, str) for a in aliases):
            raise DataError(f"header table {path}: aliases for {name!r} must be a string list")
        table.append((name, tuple(aliases)))
    return tuple(table)


def _alias_lookup(header_table: HeaderTable) -> dict[str, str]:
    """Map normalized alias -> canonical name; validates uniqueness."""
    seen_names: set[str] = set()
    lookup: dict[str, str] = {}
    for name, aliases in header_table:
        if name in seen_names:
            raise DataError(f"header table repeats canonical name {name!r}")
        seen_names.add(name)
        for alias in aliases:
            lookup[alias.strip().lower()] = name
    return lookup


def _header_for_line(line: str, lookup: dict[str, str]) -> str | None:
    """Canonical section name if the line is a header line, else None."""
    stripped = line.strip()
    if stripped.endswith(":"):
        stripped = stripped[:-1].rstrip()
    return lookup.get(stripped.lower())


def segment_sections(full_text: str, header_table: HeaderTable = DEFAULT_HEADER_TABLE) -> dict[str, str]:
    """Split report text into sections keyed by canonical name.

    A header opens a section that runs to the next header or end of text;
    the header line itself is excluded from the body. Sections whose header
    never appears are simply absent. If the same section header appears
    twice, the later body is appended to the first with a blank line.

    Raises NoSectionsFound when no alias matches anywhere.
    """
    if not full_text.strip():
        raise NoSectionsFound("empty report text")
    lookup = _alias_lookup(header_table)

    lines = full_text.splitlines()
    boundaries: list[tuple[int, str]] = []
    for i, line in enumerate(lines):
        name = _header_for_line(line, lookup)
        if name is not None:
            boundaries.append((i, name))

    if not boundaries:
        raise NoSectionsFound("no section header matched")

    sections: dict[str, str] = {}
    for k, (line_idx, name) in enumerate(boundaries):
        end = boundaries[k + 1][0] if k + 1 < len(boundaries) else len(lines)
        body = "\n".join(lines[line_idx + 1 : end]).strip()
        if name in sections:
            sections[name] = (sections[name] + "\n\n" + body).strip()
        else:
            sections[name] = body

    # present sections in canonical order regardless of appearance order
    return {name: sections[name] for name in SECTION_NAMES if name in sections}


def iter_ndjson(path: str | Path) -> Iterator[RawReport]:
    """Yield RawReport records from a newline-delimited JSON corpus file."""
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON record: {exc}") from exc
            if "report_id" not in record or "text" not in record:
                raise DataError(f"{path}:{lineno}: record needs 'report_id' and 'text'")
            yield RawReport(str(record["report_id"]), str(record["text"]))


def load_corpus(
    source: Iterable[RawReport],
    header_table: HeaderTable = DEFAULT_HEADER_TABLE,
) -> tuple[list[SectionedReport], CorpusStats]:
    """Segment every report, keep the eligible ones, tally the rest.

    Duplicated report ids abort the load; a report that fails segmentation
    entirely is tallied as dropped (reason no-sections) and the load
    continues. The eligible list preserves input order.
    """
    stats = CorpusStats()
    eligible: list[SectionedReport] = []
    seen: set[str] = set()
    word_counts: list[int] = []

    for raw in source:
        if not raw.report_id:
            raise DataError("report with empty report_id")
        if raw.report_id in seen:
            raise DuplicateReportId(raw.report_id)
        seen.add(raw.report_id)
        stats.total_loaded += 1

        try:
            sections = segment_sections(raw.full_text, header_table)
        except NoSectionsFound:
            stats.dropped += 1
            stats.dropped_by_reason["no-sections"] += 1
            continue

        stats.segmented += 1
        report = SectionedReport(
            report_id=raw.report_id,
            sections=sections,
            word_count=len(raw.full_text.split()),
        )
        if report.eligible:
            eligible.append(report)
            word_counts.append(report.word_count)
            stats.eligible += 1
        else:
            stats.dropped += 1
            if not sections.get("microscopy", "").strip():
                stats.dropped_by_reason["missing-microscopy"] += 1
            else:
                stats.dropped_by_reason["missing-conclusion"] += 1

    if word_counts:
        stats.word_count_mean = statistics.fmean(word_counts)
        stats.word_count_std = statistics.pstdev(word_counts)
    return eligible, stats


def load_corpus_file(
    path: str | Path,
    header_table: HeaderTable = DEFAULT_HEADER_TABLE,
) -> tuple[list[SectionedReport], CorpusStats]:
    return load_corpus(iter_ndjson(path), header_table)
