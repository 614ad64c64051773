"""Per-group extraction prompts in four configurations.

All scaffold wording (system message, section labels, output-format
instruction, judge query) lives in an editable slot file so it can be
tuned without touching code; assembly order is fixed and deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import SectionedReport
from .errors import DataError, MissingFewShots
from .schema import EntityGroup, EntitySchema

_SLOT_HEADER = re.compile(r"^==\s*([a-z_]+)\s*==\s*$")

REQUIRED_SLOTS = (
    "system",
    "question_header",
    "guidelines_header",
    "examples_header",
    "example_report_label",
    "example_answer_label",
    "report_header",
    "format_instruction",
    "judge",
)


@dataclass(frozen=True)
class PromptConfig:
    shots: int = 0
    include_guidelines: bool = False

    def __post_init__(self) -> None:
        if self.shots not in (0, 2):
            raise ValueError("shots must be 0 or 2")

    @property
    def label(self) -> str:
        shots = f"{self.shots}-shot"
        guide = "with-guidelines" if self.include_guidelines else "without-guidelines"
        return f"{shots}_{guide}"


ALL_CONFIGS = (
    PromptConfig(0, False),
    PromptConfig(2, False),
    PromptConfig(0, True),
    PromptConfig(2, True),
)


@dataclass(frozen=True)
class FewShotExample:
    example_report_text: str
    example_answer: str  # JSON object text keyed by the group's codes

    def answer_keys(self) -> set[str]:
        return set(json.loads(self.example_answer))


@dataclass(frozen=True)
class PromptBundle:
    report_id: str
    group_id: str
    prompt_text: str
    config: PromptConfig


def load_templates(path: str | Path | None = None) -> dict[str, str]:
    """Parse the slot file: ``== name ==`` lines delimit named blocks."""
    if path is None:
        path = Path(str(resources.files("annobench").joinpath("data/prompt_templates.txt")))
    text = Path(path).read_text(encoding="utf-8")
    slots: dict[str, str] = {}
    current: str | None = None
    buffer: list[str] = []
    for line in text.splitlines():
        match = _SLOT_HEADER.match(line)
        if match:
            if current is not None:
                slots[current] = "\n".join(buffer).strip()
            current = match.group(1)
            buffer = []
        elif current is not None:
            buffer.append(line)
    if current is not None:
        slots[current] = "\n".join(buffer).strip()
    missing = [name for name in REQUIRED_SLOTS if name not in slots]
    if missing:
        raise DataError(f"prompt template file {path}: missing slots {missing}")
    return slots


def load_fewshots(path: str | Path | None = None) -> dict[str, list[FewShotExample]]:
    """Load few-shot fixtures: {group_id: [{report, answer}, ...]}."""
    if path is None:
        path = Path(str(resources.files("annobench").joinpath("data/fewshots.json")))
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    result: dict[str, list[FewShotExample]] = {}
    for group_id, examples in data.items():
        result[group_id] = [
            FewShotExample(
                example_report_text=ex["report"],
                example_answer=json.dumps(ex["answer"], sort_keys=True),
            )
            for ex in examples
        ]
    return result


def validate_fewshots(fewshots: dict[str, list[FewShotExample]], schema: EntitySchema) -> None:
    """Every example answer must parse and carry exactly its group's codes."""
    for group in schema.groups:
        for i, example in enumerate(fewshots.get(group.group_id, [])):
            try:
                keys = example.answer_keys()
            except json.JSONDecodeError as exc:
                raise DataError(f"few-shot {group.group_id}[{i}]: answer is not strict JSON") from exc
            if keys != set(group.member_codes):
                raise DataError(
                    f"few-shot {group.group_id}[{i}]: answer keys {sorted(keys)} "
                    f"!= group codes {sorted(group.member_codes)}"
                )


def build_group_prompt(
    schema: EntitySchema,
    group: EntityGroup,
    report: SectionedReport,
    config: PromptConfig,
    fewshots: list[FewShotExample],
    templates: dict[str, str],
) -> PromptBundle:
    """Assemble one group's prompt. Identical inputs give identical bytes.

    Fixed order: system message, combined question, optional guidelines
    block, few-shot pairs, the report's microscopy and conclusion text
    verbatim, output-format instruction naming the group's entity codes.
    """
    if config.shots > len(fewshots):
        raise MissingFewShots(
            f"group {group.group_id}: config wants {config.shots} shots, "
            f"{len(fewshots)} example(s) available"
        )
    unknown = set(group.member_codes) - set(schema.codes)
    if unknown:
        raise DataError(f"group {group.group_id} references unknown codes {sorted(unknown)}")

    parts: list[str] = [templates["system"]]
    parts.append(f"{templates['question_header']}\n{group.combined_question}")
    if config.include_guidelines:
        parts.append(f"{templates['guidelines_header']}\n{group.combined_guidelines}")
    if config.shots:
        shot_blocks = [templates["examples_header"]]
        for example in fewshots[: config.shots]:
            shot_blocks.append(
                f"{templates['example_report_label']}\n{example.example_report_text}\n"
                f"{templates['example_answer_label']}\n{example.example_answer}"
            )
        parts.append("\n\n".join(shot_blocks))
    parts.append(
        f"{templates['report_header']}\n"
        f"MICROSCOPY:\n{report.sections.get('microscopy', '')}\n\n"
        f"CONCLUSION:\n{report.sections.get('conclusion', '')}"
    )
    codes = ", ".join(f'"{code}"' for code in group.member_codes)
    parts.append(templates["format_instruction"].format(codes=codes))

    return PromptBundle(
        report_id=report.report_id,
        group_id=group.group_id,
        prompt_text="\n\n".join(parts),
        config=config,
    )


def render_judge_prompt(templates: dict[str, str], a: str, b: str) -> str:
    return templates["judge"].format(a=a, b=b)
