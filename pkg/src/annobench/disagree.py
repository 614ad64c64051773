"""Three-way agreement classification and review triage.

Given gold labels and two runs, every (report, entity) cell lands in
exactly one of five agreement categories; without gold the same machinery
degrades to per-entity match/mismatch between the two runs. Reports whose
inter-model mismatch fraction exceeds a threshold get the clinician_check
flag, and a priority-weighted queue orders everything for human review.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

from .errors import CorpusMismatch
from .evaluate import Judge, compare_value
from .schema import BLANK, EntitySchema, EntitySpec, Value

logger = logging.getLogger(__name__)

MODE_GOLD = "gold"
MODE_GOLD_FREE = "gold-free"

DEFAULT_FLAG_THRESHOLD = 0.32


class AgreementCategory(str, Enum):
    ALL_AGREE_CORRECT = "All_Agree_Correct"
    MODEL1_CORRECT_MODEL2_WRONG = "Model1_Correct_Model2_Wrong"
    MODEL2_CORRECT_MODEL1_WRONG = "Model2_Correct_Model1_Wrong"
    BOTH_MODELS_WRONG_SAME = "Both_Models_Wrong_Same"
    ALL_DISAGREE = "All_Disagree"


CATEGORY_ORDER = tuple(c.value for c in AgreementCategory)


def classify_verdicts(e1: bool, e2: bool, e12: Callable[[], bool]) -> AgreementCategory:
    """Truth table over the pairwise verdicts; e12 evaluated lazily.

    Correctness against gold dominates: when both models match gold the
    cell is All_Agree_Correct even if the judged m1~m2 verdict disagrees
    (judged similarity is not transitive).
    """
    if e1 and e2:
        return AgreementCategory.ALL_AGREE_CORRECT
    if e1:
        return AgreementCategory.MODEL1_CORRECT_MODEL2_WRONG
    if e2:
        return AgreementCategory.MODEL2_CORRECT_MODEL1_WRONG
    if e12():
        return AgreementCategory.BOTH_MODELS_WRONG_SAME
    return AgreementCategory.ALL_DISAGREE


def classify_with_gold(
    gt: Value,
    m1: Value,
    m2: Value,
    spec: EntitySpec,
    judge: Judge | None = None,
) -> AgreementCategory:
    e1 = compare_value(spec, m1, gt, judge).equivalent
    e2 = compare_value(spec, m2, gt, judge).equivalent
    return classify_verdicts(e1, e2, lambda: compare_value(spec, m1, m2, judge).equivalent)


@dataclass(frozen=True)
class EntityComparison:
    report_id: str
    entity_code: str
    priority_weight: int
    match: bool  # m1 ~ m2
    category: str | None = None  # gold mode only
    verdicts: Mapping[str, dict] | None = None

    @property
    def in_consensus(self) -> bool:
        if self.category is not None:
            return self.category == AgreementCategory.ALL_AGREE_CORRECT.value
        return self.match

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "entity_code": self.entity_code,
            "priority_weight": self.priority_weight,
            "match": self.match,
            "category": self.category,
            "verdicts": dict(self.verdicts) if self.verdicts else None,
        }

    @staticmethod
    def from_dict(data: dict) -> "EntityComparison":
        return EntityComparison(
            report_id=data["report_id"],
            entity_code=data["entity_code"],
            priority_weight=data["priority_weight"],
            match=data["match"],
            category=data.get("category"),
            verdicts=data.get("verdicts"),
        )


def compare_runs(
    run_a: Mapping[str, dict],
    run_b: Mapping[str, dict],
    schema: EntitySchema,
    gold: Mapping[str, dict] | None = None,
    judge: Judge | None = None,
) -> tuple[dict, list[EntityComparison]]:
    """Compare two runs cell by cell; returns (summary, comparison records).

    With gold every cell gets a five-way category plus all three pairwise
    verdicts; without gold only the m1~m2 verdict exists. Triples where
    both models match gold yet disagree with each other are tolerated
    (gold wins) and logged for audit.
    """
    if set(run_a) != set(run_b):
        raise CorpusMismatch("runs cover different report ids")
    mode = MODE_GOLD if gold is not None else MODE_GOLD_FREE
    if gold is not None:
        missing = set(run_a) - set(gold)
        if missing:
            raise CorpusMismatch(f"gold missing report ids: {sorted(missing)[:5]}")

    records: list[EntityComparison] = []
    for report_id in sorted(run_a):
        values_a = run_a[report_id].get("values", {})
        values_b = run_b[report_id].get("values", {})
        for code in schema.codes:
            spec = schema.spec(code)
            v12 = compare_value(spec, values_a.get(code, BLANK), values_b.get(code, BLANK), judge)
            category = None
            verdicts: dict[str, dict] = {"m1_m2": v12.to_dict()}
            if gold is not None:
                gold_value = gold[report_id].get("values", {}).get(code, BLANK)
                v1 = compare_value(spec, values_a.get(code, BLANK), gold_value, judge)
                v2 = compare_value(spec, values_b.get(code, BLANK), gold_value, judge)
                verdicts["m1_gt"] = v1.to_dict()
                verdicts["m2_gt"] = v2.to_dict()
                category = classify_verdicts(v1.equivalent, v2.equivalent, lambda: v12.equivalent).value
                if v1.equivalent and v2.equivalent and not v12.equivalent:
                    logger.info(
                        "non-transitive verdict triple at (%s, %s): both match gold, not each other",
                        report_id,
                        code,
                    )
            records.append(
                EntityComparison(
                    report_id=report_id,
                    entity_code=code,
                    priority_weight=spec.priority_weight,
                    match=v12.equivalent,
                    category=category,
                    verdicts=verdicts,
                )
            )
    summary = summarize_comparisons(records, schema, mode)
    return summary, records


def mismatch_fractions(records: list[EntityComparison], schema: EntitySchema) -> dict[str, float]:
    """Per-report fraction of entities where the two runs are not equivalent."""
    n_entities = len(schema.codes)
    per_report: dict[str, int] = {}
    for record in records:
        per_report.setdefault(record.report_id, 0)
        if not record.match:
            per_report[record.report_id] += 1
    return {rid: count / n_entities for rid, count in per_report.items()}


def summarize_comparisons(records: list[EntityComparison], schema: EntitySchema, mode: str) -> dict:
    """Aggregate comparison records into the summary payload.

    Includes per-entity (and overall) category counts and fractions in
    gold mode, match/mismatch counts in gold-free mode, review tallies by
    priority tier, and reports ordered by disagreement burden.
    """
    report_ids = sorted({r.report_id for r in records})
    per_entity: dict[str, dict[str, int]] = {}
    category_counts = {name: 0 for name in CATEGORY_ORDER}
    match_counts = {"match": 0, "mismatch": 0}
    review_tallies = {"high": 0, "medium": 0, "low": 0, "none": 0}
    tier_by_weight = {3: "high", 2: "medium", 1: "low"}
    nontransitive: list[dict] = []

    for record in records:
        entity_bucket = per_entity.setdefault(record.entity_code, {})
        if mode == MODE_GOLD:
            assert record.category is not None
            category_counts[record.category] += 1
            entity_bucket[record.category] = entity_bucket.get(record.category, 0) + 1
        match_counts["match" if record.match else "mismatch"] += 1
        if mode == MODE_GOLD_FREE:
            key = "match" if record.match else "mismatch"
            entity_bucket[key] = entity_bucket.get(key, 0) + 1
        if record.in_consensus:
            review_tallies["none"] += 1
        else:
            review_tallies[tier_by_weight[record.priority_weight]] += 1
        if record.verdicts and "m1_gt" in record.verdicts:
            if (
                record.verdicts["m1_gt"]["equivalent"]
                and record.verdicts["m2_gt"]["equivalent"]
                and not record.verdicts["m1_m2"]["equivalent"]
            ):
                nontransitive.append({"report_id": record.report_id, "entity_code": record.entity_code})

    total = len(records)
    fractions = mismatch_fractions(records, schema)
    burdens = report_burdens(records)
    report_rows = [
        {
            "report_id": rid,
            "burden": burdens.get(rid, 0),
            "mismatch_fraction": round(fractions.get(rid, 0.0), 6),
        }
        for rid in report_ids
    ]
    report_rows.sort(key=lambda row: (-row["burden"], row["report_id"]))

    summary = {
        "mode": mode,
        "n_reports": len(report_ids),
        "n_entities": len(schema.codes),
        "total_cells": total,
        "match_counts": match_counts,
        "review_tallies": review_tallies,
        "reports_by_burden": report_rows,
        "nontransitive_triples": nontransitive,
    }
    if mode == MODE_GOLD:
        summary["category_counts"] = category_counts
        summary["category_fractions"] = {
            name: (count / total if total else 0.0) for name, count in category_counts.items()
        }
        summary["per_entity_counts"] = per_entity
    else:
        summary["per_entity_counts"] = per_entity
    return summary


def format_category_fractions(summary: dict) -> str:
    """One line per category with the percentage at one decimal place."""
    fractions = summary.get("category_fractions", {})
    lines = []
    for name in CATEGORY_ORDER:
        if name in fractions:
            lines.append(f"{name}: {fractions[name] * 100:.1f}%")
    return "\n".join(lines)


def category_matrix_csv(summary: dict, schema: EntitySchema) -> str:
    """Entity x category count matrix (CSV) from a gold-mode summary."""
    columns = CATEGORY_ORDER if summary["mode"] == MODE_GOLD else ("match", "mismatch")
    lines = ["entity," + ",".join(columns)]
    per_entity = summary["per_entity_counts"]
    for code in schema.codes:
        bucket = per_entity.get(code, {})
        lines.append(code + "," + ",".join(str(bucket.get(col, 0)) for col in columns))
    return "\n".join(lines) + "\n"


def flag_reports(
    records: list[EntityComparison],
    schema: EntitySchema,
    threshold: float = DEFAULT_FLAG_THRESHOLD,
    strict: bool = True,
) -> dict[str, bool]:
    """clinician_check decision per report from the mismatch fraction.

    The comparison is strict (fraction > threshold) by default, so 3 of 9
    mismatches flags at the 0.32 default while 1 of 2 does not flag at
    0.5.
    """
    fractions = mismatch_fractions(records, schema)
    if strict:
        return {rid: fraction > threshold for rid, fraction in fractions.items()}
    return {rid: fraction >= threshold for rid, fraction in fractions.items()}


def report_burdens(records: list[EntityComparison]) -> dict[str, int]:
    """Burden = sum of priority weights over out-of-consensus entities."""
    burdens: dict[str, int] = {}
    for record in records:
        burdens.setdefault(record.report_id, 0)
        if not record.in_consensus:
            burdens[record.report_id] += record.priority_weight
    return burdens


def build_review_queue(records: list[EntityComparison], schema: EntitySchema) -> list[dict]:
    """Review queue ordered by burden descending, report id ascending.

    Each item lists its disagreeing entities with their priority tiers;
    fully-consensual reports do not appear at all.
    """
    tier_by_weight = {3: "high", 2: "medium", 1: "low"}
    disagreeing: dict[str, list[dict]] = {}
    for record in records:
        if not record.in_consensus:
            disagreeing.setdefault(record.report_id, []).append(
                {
                    "code": record.entity_code,
                    "weight": record.priority_weight,
                    "tier": tier_by_weight[record.priority_weight],
                    "category": record.category,
                }
            )
    burdens = report_burdens(records)
    queue = [
        {
            "report_id": rid,
            "burden": burdens[rid],
            "entities": sorted(items, key=lambda item: (-item["weight"], item["code"])),
        }
        for rid, items in disagreeing.items()
    ]
    queue.sort(key=lambda item: (-item["burden"], item["report_id"]))
    return queue
