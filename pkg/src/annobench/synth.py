"""Synthetic corpus and answer-script generator.

Everything here is fabricated fixture material: reports are assembled
from known section bodies and known entity values, so the generator's
records double as ground truth for segmentation round-trips, eligibility
labels, gold annotations and mock-backend scripts (with optional fault
injection). No real patient text is involved anywhere.
"""

from __future__ import annotations

import argparse
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .inference import ScriptEntry, dump_fault_script, script_key
from .runner import ReportAnnotation
from .schema import BLANK, EntitySchema, Value, load_reference_schema

DIAGNOSES = (
    "minimal change disease",
    "IgA nephropathy",
    "focal segmental glomerulosclerosis",
    "lupus nephritis class II",
    "acute tubular necrosis",
    "BK virus nephropathy",
    "chronic allograft nephropathy",
    "acute pyelonephritis",
    "membranous nephropathy",
    "thin basement membrane lesion",
)

REJECTION_ASSESSMENTS = (
    "no rejection",
    "borderline acute T-cell mediated rejection",
    "acute T-cell mediated rejection grade 1A",
    "acute T-cell mediated rejection grade 1B",
    "antibody-mediated rejection grade 2",
)

CHRONIC_ADJECTIVES = ("minimal", "mild", "moderate", "marked", "florid")

CLINICAL_NOTES = (
    "Nephrotic syndrome under investigation.",
    "Deteriorating graft function two years post transplant.",
    "Persistent microscopic haematuria.",
    "Proteinuria on routine screening.",
    "Rising creatinine of uncertain cause.",
)

DROP_KINDS = ("missing-conclusion", "missing-microscopy", "no-sections")


@dataclass
class ReportTruth:
    report_id: str
    full_text: str
    sections: dict[str, str]
    eligible: bool
    drop_kind: str | None
    values: dict[str, Value]


def _sample_values(rng: random.Random) -> dict[str, Value]:
    transplant = rng.random() < 0.5
    n_total = rng.randint(5, 30)
    n_global = rng.randint(0, min(5, n_total))
    n_segmental = rng.randint(0, 2)
    chronic_style = rng.random()
    if chronic_style < 0.4:
        chronic: Value = "0%"
    elif chronic_style < 0.7:
        chronic = f"{rng.randrange(5, 80, 5)}%"
    else:
        chronic = rng.choice(CHRONIC_ADJECTIVES)
    if transplant:
        diagnosis = rng.choice(REJECTION_ASSESSMENTS)
    else:
        diagnosis = rng.choice(DIAGNOSES)
    return {
        "cortex_present": True,
        "medulla_present": rng.random() < 0.5,
        "n_total": n_total,
        "n_segmental": n_segmental,
        "n_global": n_global,
        "abnormal_glomeruli": rng.random() < 0.3,
        "chronic_change": chronic,
        "transplant": transplant,
        "final_diagnosis": diagnosis,
    }


def _microscopy_body(values: dict[str, Value]) -> str:
    lines = []
    if values["medulla_present"]:
        lines.append("The cores include both cortex and medulla.")
    else:
        lines.append("The cores consist of cortex; no medullary tissue is identified.")
    lines.append(
        f"There are {values['n_total']} glomeruli in total, of which "
        f"{values['n_global']} show global sclerosis and {values['n_segmental']} show segmental sclerosis."
    )
    if values["abnormal_glomeruli"]:
        lines.append("The remaining glomeruli appear enlarged with irregular capillary loops.")
    else:
        lines.append("The remaining glomeruli are unremarkable.")
    if isinstance(values["chronic_change"], str) and values["chronic_change"].endswith("%"):
        lines.append(f"Tubular atrophy and interstitial fibrosis involve {values['chronic_change']} of the cortex.")
    else:
        lines.append(f"Chronic change is best described as {values['chronic_change']}.")
    if values["transplant"]:
        lines.append("A patchy interstitial lymphocytic infiltrate is present.")
    return " ".join(lines)


def _conclusion_body(values: dict[str, Value]) -> str:
    return f"Appearances are those of {values['final_diagnosis']}."


def generate_report(rng: random.Random, report_id: str, drop_kind: str | None) -> ReportTruth:
    values = _sample_values(rng)
    sections = {
        "clinical": rng.choice(CLINICAL_NOTES),
        "specimen": f"{rng.randint(1, 3)} core(s) of renal tissue.",
        "macroscopy": f"Cores measuring {rng.randint(5, 20)} mm and {rng.randint(2, 12)} mm in length.",
        "microscopy": _microscopy_body(values),
        "conclusion": _conclusion_body(values),
    }
    if drop_kind == "missing-conclusion":
        sections.pop("conclusion")
    elif drop_kind == "missing-microscopy":
        sections.pop("microscopy")

    if drop_kind == "no-sections":
        full_text = "Free-text note with no recognisable structure. " + sections["clinical"]
        sections = {}
    else:
        blocks = [f"{name.upper()}:\n{body}" for name, body in sections.items()]
        full_text = "\n\n".join(blocks)

    return ReportTruth(
        report_id=report_id,
        full_text=full_text,
        sections=sections,
        eligible=drop_kind is None,
        drop_kind=drop_kind,
        values=values,
    )


def generate_corpus(n: int, seed: int = 13, ineligible_rate: float = 0.12) -> list[ReportTruth]:
    """Generate n reports; roughly ineligible_rate of them fail eligibility."""
    rng = random.Random(seed)
    truths = []
    for i in range(n):
        report_id = f"r{i:04d}"
        drop_kind = rng.choice(DROP_KINDS) if rng.random() < ineligible_rate else None
        truths.append(generate_report(rng, report_id, drop_kind))
    return truths


def corpus_ndjson(truths: list[ReportTruth]) -> str:
    lines = [
        json.dumps({"report_id": t.report_id, "text": t.full_text}, ensure_ascii=False)
        for t in truths
    ]
    return "\n".join(lines) + "\n"


def write_corpus(path: str | Path, truths: list[ReportTruth]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(corpus_ndjson(truths), encoding="utf-8")
    return path


def group_answers(truth: ReportTruth, schema: EntitySchema) -> dict[str, dict[str, Value]]:
    """The clean per-group answer objects a perfect model would return."""
    return {
        group.group_id: {code: truth.values[code] for code in group.member_codes}
        for group in schema.groups
    }


def gold_annotation(truth: ReportTruth, schema: EntitySchema) -> dict:
    values = {code: truth.values.get(code, BLANK) for code in schema.codes}
    return ReportAnnotation(report_id=truth.report_id, values=values).to_dict()


def build_mock_script(
    truths: list[ReportTruth],
    schema: EntitySchema,
    faults: dict[tuple[str, str], str] | None = None,
    overrides: dict[tuple[str, str], Value] | None = None,
) -> dict[str, ScriptEntry]:
    """Script every (eligible report, group) pair for the mock backend.

    ``faults`` maps (report_id, group_id) to a JsonErrorCode name;
    ``overrides`` maps (report_id, entity_code) to a replacement value so a
    second scripted model can disagree in controlled places.
    """
    faults = faults or {}
    overrides = overrides or {}
    script: dict[str, ScriptEntry] = {}
    for truth in truths:
        if not truth.eligible:
            continue
        for group_id, answers in group_answers(truth, schema).items():
            answers = {
                code: overrides.get((truth.report_id, code), value)
                for code, value in answers.items()
            }
            key = script_key(truth.report_id, group_id)
            fault = faults.get((truth.report_id, group_id))
            if fault is None:
                script[key] = ScriptEntry(response=json.dumps(answers))
            else:
                script[key] = ScriptEntry(fault=fault, answer=answers)
    return script


def main(argv: list[str] | None = None) -> int:
    """Write a synthetic corpus plus gold answers and a clean mock script."""
    parser = argparse.ArgumentParser(description=main.__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--reports", type=int, default=50)
    parser.add_argument("--seed", type=int, default=13)
    args = parser.parse_args(argv)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    schema = load_reference_schema()
    truths = generate_corpus(args.reports, seed=args.seed)
    write_corpus(out_dir / "corpus.ndjson", truths)
    gold_dir = out_dir / "gold"
    gold_dir.mkdir(exist_ok=True)
    for truth in truths:
        if truth.eligible:
            record = gold_annotation(truth, schema)
            (gold_dir / f"{truth.report_id}.json").write_text(
                json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
    (out_dir / "mock_script.json").write_text(
        dump_fault_script(build_mock_script(truths, schema)), encoding="utf-8"
    )
    print(json.dumps({"reports": len(truths), "eligible": sum(t.eligible for t in truths), "out_dir": str(out_dir)}))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
