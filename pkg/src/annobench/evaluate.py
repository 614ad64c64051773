"""Scoring of runs against gold labels, and the judge harness.

Binary, categorical and numerical entities compare by normalized exact
match with no numeric tolerance. Any type with a string member routes
through a judge: a constrained true/false query answered by a model
backend, a scripted lookup, or the shipped identity fallback. The harness
quantifies a judge's symmetry, expert agreement, consistency and position
bias over a fixture of labelled phrase pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .errors import BackendError, DataError, JudgeUnavailable, MissingGold
from .inference import Backend, GenerationRequest, complete
from .prompts import render_judge_prompt
from .schema import BLANK, EntitySchema, EntitySpec, Value, validate_value

EXACT = "exact"
JUDGE = "judge"

POLICY_EXCLUDE = "exclude"
POLICY_COUNT_WRONG = "count-wrong"

PAIR_CATEGORIES = ("exact", "same_concept", "similar_enough", "different")


@dataclass(frozen=True)
class Verdict:
    equivalent: bool
    method: str
    judge_raw: str | None = None

    def to_dict(self) -> dict:
        return {"equivalent": self.equivalent, "method": self.method, "judge_raw": self.judge_raw}


class Judge(Protocol):
    def equivalence(self, a: str, b: str) -> tuple[bool, str]:
        """Return (verdict, raw judge token)."""
        ...


def _normalize_phrase(text: str) -> str:
    return " ".join(text.split()).casefold()


class IdentityJudge:
    """Fallback judge: equivalent iff the phrases match after whitespace
    and case normalization. Deterministic and model-free."""

    def equivalence(self, a: str, b: str) -> tuple[bool, str]:
        verdict = bool(a.strip()) and _normalize_phrase(a) == _normalize_phrase(b)
        return verdict, "True" if verdict else "False"


class ScriptedJudge:
    """Symmetric lookup judge for tests and fixtures.

    ``equivalent_pairs`` and ``different_pairs`` hold unordered phrase
    pairs; anything not listed falls back to identity.
    """

    def __init__(
        self,
        equivalent_pairs: Iterable[tuple[str, str]] = (),
        different_pairs: Iterable[tuple[str, str]] = (),
    ):
        self._equivalent = {self._key(a, b) for a, b in equivalent_pairs}
        self._different = {self._key(a, b) for a, b in different_pairs}
        self._fallback = IdentityJudge()

    @staticmethod
    def _key(a: str, b: str) -> frozenset[str]:
        return frozenset((_normalize_phrase(a), _normalize_phrase(b)))

    def equivalence(self, a: str, b: str) -> tuple[bool, str]:
        key = self._key(a, b)
        if key in self._different:
            return False, "False"
        if key in self._equivalent:
            return True, "True"
        return self._fallback.equivalence(a, b)

    @classmethod
    def from_cases(cls, cases: Iterable["JudgePairCase"]) -> "ScriptedJudge":
        equivalent, different = [], []
        for case in cases:
            (equivalent if case.expected else different).append((case.phrase_a, case.phrase_b))
        return cls(equivalent, different)


class FlippingJudge:
    """Wraps a base judge but negates the verdict for specific ordered
    (a, b) tuples — a controlled position-bias injection for the harness."""

    def __init__(self, base: Judge, flipped_orderings: Iterable[tuple[str, str]]):
        self._base = base
        self._flips = {(_normalize_phrase(a), _normalize_phrase(b)) for a, b in flipped_orderings}

    def equivalence(self, a: str, b: str) -> tuple[bool, str]:
        verdict, _ = self._base.equivalence(a, b)
        if (_normalize_phrase(a), _normalize_phrase(b)) in self._flips:
            verdict = not verdict
        return verdict, "True" if verdict else "False"


def parse_judge_token(text: str) -> bool | None:
    """Case-insensitive parse of the leading token as a true/false verdict."""
    token = text.strip().split()[0].strip(".,:;!\"'") if text.strip() else ""
    lowered = token.lower()
    if lowered == "true":
        return True
    if lowered == "false":
        return False
    return None


class BackendJudge:
    """Model-backed judge issuing constrained true/false generations.

    Requests always go out with temperature 0 and a two-token output cap;
    an unparseable token counts as False (conservative: flags the pair for
    review rather than silently passing) and is tallied.
    """

    def __init__(self, backend: Backend, templates: Mapping[str, str], model_id: str, timeout_s: float = 60.0):
        self._backend = backend
        self._templates = dict(templates)
        self._model_id = model_id
        self._timeout_s = timeout_s
        self.unparseable_tokens = 0

    def equivalence(self, a: str, b: str) -> tuple[bool, str]:
        request = GenerationRequest(
            model_id=self._model_id,
            prompt=render_judge_prompt(self._templates, a, b),
            temperature=0.0,
            max_tokens=2,
            timeout_s=self._timeout_s,
            tags={"judge": "pairwise"},
        )
        try:
            result = complete(self._backend, request)
        except BackendError as exc:
            raise JudgeUnavailable(str(exc)) from exc
        verdict = parse_judge_token(result.text)
        if verdict is None:
            # UnparseableJudgeToken: recorded, resolved conservatively
            self.unparseable_tokens += 1
            return False, result.text.strip()
        return verdict, result.text.strip()


def judge_equivalence(a: str, b: str, judge: Judge | None) -> bool:
    if judge is None:
        raise JudgeUnavailable("string comparison requested but no judge configured")
    verdict, _ = judge.equivalence(a, b)
    return verdict


def _canonical_text(value: Value) -> str:
    if isinstance(value, bool):
        return "True" if value else "False"
    return str(value)


def compare_value(spec: EntitySpec, predicted: Value, gold: Value, judge: Judge | None = None) -> Verdict:
    """Equivalence verdict for one entity value pair.

    Exact path for the simple types (canonical booleans, integer equality,
    no numeric tolerance); judge path whenever the declared type contains
    a string member. Blanks never reach the judge: blank vs non-blank is
    simply not equivalent.
    """
    pred = validate_value(spec, predicted)
    ref = validate_value(spec, gold)
    pred_blank = pred.value == BLANK and isinstance(pred.value, str)
    ref_blank = ref.value == BLANK and isinstance(ref.value, str)
    if pred_blank or ref_blank:
        return Verdict(pred_blank and ref_blank, EXACT)

    if spec.data_type.has_string_member:
        if judge is None:
            raise JudgeUnavailable(f"entity {spec.code!r} needs a judge for comparison")
        verdict, raw = judge.equivalence(_canonical_text(pred.value), _canonical_text(ref.value))
        return Verdict(verdict, JUDGE, raw)

    return Verdict(pred.value == ref.value and type(pred.value) is type(ref.value), EXACT)


@dataclass
class RunScore:
    policy: str
    per_entity: dict[str, list[int]]  # code -> [correct, total]
    excluded_reports: int
    scored_reports: int

    @property
    def overall_correct(self) -> int:
        return sum(correct for correct, _ in self.per_entity.values())

    @property
    def overall_total(self) -> int:
        return sum(total for _, total in self.per_entity.values())

    @property
    def accuracy(self) -> float | None:
        total = self.overall_total
        return self.overall_correct / total if total else None

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "excluded_reports": self.excluded_reports,
            "scored_reports": self.scored_reports,
            "per_entity": {code: {"correct": c, "total": t} for code, (c, t) in self.per_entity.items()},
            "overall": {
                "correct": self.overall_correct,
                "total": self.overall_total,
                "accuracy": self.accuracy,
            },
        }

    def format_table(self) -> str:
        width = max((len(code) for code in self.per_entity), default=10)
        lines = [f"{'entity'.ljust(width)}  correct/total  accuracy"]
        for code, (correct, total) in self.per_entity.items():
            ratio = f"{correct}/{total}"
            acc = f"{correct / total:.1%}" if total else "-"
            lines.append(f"{code.ljust(width)}  {ratio.rjust(13)}  {acc.rjust(8)}")
        overall = f"{self.overall_correct}/{self.overall_total}"
        acc = f"{self.accuracy:.1%}" if self.accuracy is not None else "-"
        lines.append(f"{'ALL'.ljust(width)}  {overall.rjust(13)}  {acc.rjust(8)}")
        return "\n".join(lines)


def score_run(
    run_annotations: Mapping[str, dict],
    gold_annotations: Mapping[str, dict],
    schema: EntitySchema,
    policy: str = POLICY_EXCLUDE,
    judge: Judge | None = None,
) -> RunScore:
    """Accuracy of a run against gold, under one errored-report policy.

    ``exclude`` drops reports with parse errors from the denominator;
    ``count-wrong`` keeps them (their blank values score as wrong against
    non-blank gold). Entities are equally weighted, so each contributes
    1/|entities| of a report's point.
    """
    if policy not in (POLICY_EXCLUDE, POLICY_COUNT_WRONG):
        raise DataError(f"unknown scoring policy {policy!r}")
    per_entity = {code: [0, 0] for code in schema.codes}
    excluded = 0
    scored = 0
    for report_id, annotation in run_annotations.items():
        if annotation.get("parse_error") and policy == POLICY_EXCLUDE:
            excluded += 1
            continue
        if report_id not in gold_annotations:
            raise MissingGold(report_id)
        scored += 1
        gold_values = gold_annotations[report_id].get("values", {})
        for code in schema.codes:
            spec = schema.spec(code)
            verdict = compare_value(spec, annotation["values"].get(code, BLANK), gold_values.get(code, BLANK), judge)
            per_entity[code][1] += 1
            if verdict.equivalent:
                per_entity[code][0] += 1
    return RunScore(policy=policy, per_entity=per_entity, excluded_reports=excluded, scored_reports=scored)


# ---------------------------------------------------------------------------
# judge harness


@dataclass(frozen=True)
class JudgePairCase:
    phrase_a: str
    phrase_b: str
    category: str
    expected: bool

    def __post_init__(self) -> None:
        if self.category not in PAIR_CATEGORIES:
            raise DataError(f"unknown pair category {self.category!r}")
        if self.category == "exact" and self.phrase_a != self.phrase_b:
            raise DataError("exact-category pairs must hold identical phrases")
        if self.category == "different" and self.expected:
            raise DataError("different-category pairs must expect False")


def load_judge_pairs(path: str | Path | None = None) -> list[JudgePairCase]:
    if path is None:
        path = Path(str(resources.files("annobench").joinpath("data/judge_pairs.json")))
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        JudgePairCase(
            phrase_a=item["phrase_a"],
            phrase_b=item["phrase_b"],
            category=item["category"],
            expected=bool(item["expected"]),
        )
        for item in data
    ]


@dataclass
class HarnessReport:
    per_category: dict[str, dict[str, float]]
    position_bias: float
    total_cases: int

    def to_dict(self) -> dict:
        return {
            "per_category": self.per_category,
            "position_bias": self.position_bias,
            "total_cases": self.total_cases,
        }

    def format_table(self) -> str:
        lines = ["category         n  symmetry  agreement  consistency"]
        for category, rates in self.per_category.items():
            lines.append(
                f"{category.ljust(15)}{rates['count']:>4.0f}  "
                f"{rates['symmetry']:>8.3f}  {rates['expert_agreement']:>9.3f}  {rates['consistency']:>11.3f}"
            )
        lines.append(f"position-bias aggregate: {self.position_bias * 100:.1f}% of pairs gave the same verdict both ways")
        return "\n".join(lines)


def judge_harness(cases: list[JudgePairCase], judge: Judge | None) -> HarnessReport:
    """Run each pair forward and backward; rate the judge per category.

    symmetry: forward verdict equals backward verdict. expert agreement:
    forward verdict equals the human label. consistency: both passes equal
    the human label. The position-bias aggregate is the symmetric fraction
    over all pairs.
    """
    if judge is None:
        raise JudgeUnavailable("judge harness needs a judge")
    if not cases:
        raise DataError("judge harness needs at least one pair case")

    tallies: dict[str, dict[str, float]] = {}
    symmetric_total = 0
    for case in cases:
        forward, _ = judge.equivalence(case.phrase_a, case.phrase_b)
        backward, _ = judge.equivalence(case.phrase_b, case.phrase_a)
        bucket = tallies.setdefault(
            case.category,
            {"count": 0, "symmetry": 0, "expert_agreement": 0, "consistency": 0},
        )
        bucket["count"] += 1
        bucket["symmetry"] += forward == backward
        bucket["expert_agreement"] += forward == case.expected
        bucket["consistency"] += forward == case.expected and backward == case.expected
        symmetric_total += forward == backward

    per_category = {}
    for category in PAIR_CATEGORIES:
        if category not in tallies:
            continue
        bucket = tallies[category]
        count = bucket["count"]
        per_category[category] = {
            "count": count,
            "symmetry": bucket["symmetry"] / count,
            "expert_agreement": bucket["expert_agreement"] / count,
            "consistency": bucket["consistency"] / count,
        }
    return HarnessReport(
        per_category=per_category,
        position_bias=symmetric_total / len(cases),
        total_cases=len(cases),
    )
