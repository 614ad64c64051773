"""Entity-guidelines schema: codes, data types, groups, priority weights.

The schema ships as a UTF-8 tab-separated file with one row per entity.
Column order is fixed:

    question, entity_type, guidelines, code, combined_question,
    combined_guidelines, group_id, priority_weight, default_on_missing

entity_type is one of binary, categorical{a;b;c}, numerical,
string_simple, string_complex, or a union written with "/"
(e.g. numerical/string_simple). Rows sharing a group_id form one prompt
group; the first row of a group carries the combined question/guidelines.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import DanglingGroupRef, DuplicateCode, InvalidWeight, SchemaParseError

COLUMNS = (
    "question",
    "entity_type",
    "guidelines",
    "code",
    "combined_question",
    "combined_guidelines",
    "group_id",
    "priority_weight",
    "default_on_missing",
)

SIMPLE_KINDS = ("binary", "categorical", "numerical", "string_simple", "string_complex")

STRING_KINDS = ("string_simple", "string_complex")

BLANK = ""

PRIORITY_TIERS = {3: "high", 2: "medium", 1: "low"}

# Severity-adjective anchors for percentage-style values. Only the two
# published anchor bands are shipped; anything else passes through as-is.
SEVERITY_ANCHORS = {
    "minimal": "5-10%",
    "small": "5-10%",
    "florid": "75-100%",
    "complete": "75-100%",
}

Value = bool | int | str


@dataclass(frozen=True)
class EntityDataType:
    kind: str  # one of SIMPLE_KINDS or "union"
    members: tuple[EntityDataType, ...] = ()
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "union":
            if len(self.members) < 2:
                raise SchemaParseError("union type needs at least 2 members")
            if len({m.kind for m in self.members}) != len(self.members):
                raise SchemaParseError("union members must be distinct kinds")
        elif self.kind == "categorical":
            if not self.labels:
                raise SchemaParseError("categorical type needs a non-empty label set")
        elif self.kind not in SIMPLE_KINDS:
            raise SchemaParseError(f"unknown entity type kind {self.kind!r}")

    @property
    def has_string_member(self) -> bool:
        if self.kind in STRING_KINDS:
            return True
        return any(m.kind in STRING_KINDS for m in self.members)

    def spelled(self) -> str:
        if self.kind == "union":
            return "/".join(m.spelled() for m in self.members)
        if self.kind == "categorical":
            return "categorical{" + ";".join(self.labels) + "}"
        return self.kind


def parse_data_type(text: str) -> EntityDataType:
    text = text.strip()
    if "/" in text:
        members = tuple(parse_data_type(part) for part in text.split("/"))
        return EntityDataType("union", members=members)
    if text.startswith("categorical"):
        rest = text[len("categorical"):].strip()
        if rest.startswith("{") and rest.endswith("}"):
            labels = tuple(lbl.strip() for lbl in rest[1:-1].split(";") if lbl.strip())
            return EntityDataType("categorical", labels=labels)
        raise SchemaParseError(f"categorical type needs labels: {text!r}")
    return EntityDataType(text)


@dataclass(frozen=True)
class EntitySpec:
    code: str
    question: str
    data_type: EntityDataType
    guidelines_text: str
    group_id: str
    priority_weight: int
    default_on_missing: Value = BLANK

    @property
    def tier(self) -> str:
        return PRIORITY_TIERS[self.priority_weight]


@dataclass(frozen=True)
class EntityGroup:
    group_id: str
    combined_question: str
    combined_guidelines: str
    member_codes: tuple[str, ...]


@dataclass(frozen=True)
class EntitySchema:
    schema_id: str
    entities: tuple[EntitySpec, ...]
    groups: tuple[EntityGroup, ...]

    def __post_init__(self) -> None:
        codes = [e.code for e in self.entities]
        grouped = [c for g in self.groups for c in g.member_codes]
        if sorted(codes) != sorted(grouped):
            raise DanglingGroupRef("groups do not partition the entity codes")

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(e.code for e in self.entities)

    def spec(self, code: str) -> EntitySpec:
        for entity in self.entities:
            if entity.code == code:
                return entity
        raise KeyError(code)

    def group(self, group_id: str) -> EntityGroup:
        for grp in self.groups:
            if grp.group_id == group_id:
                return grp
        raise KeyError(group_id)


def _parse_default(raw: str, data_type: EntityDataType) -> Value:
    raw = raw.strip()
    if not raw:
        return BLANK
    typed = validate_value_for_type(data_type, raw)
    return typed.value


def load_schema(path: str | Path, schema_id: str | None = None) -> EntitySchema:
    """Parse and validate a schema TSV file."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise SchemaParseError(f"{path}: empty schema file")
    header = lines[0].split("\t")
    if [h.strip() for h in header] != list(COLUMNS):
        raise SchemaParseError(
            f"{path}: header row must be exactly: {', '.join(COLUMNS)}"
        )

    entities: list[EntitySpec] = []
    group_rows: dict[str, dict] = {}
    seen_codes: set[str] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) == len(COLUMNS) - 1:
            cells.append("")  # editors drop the trailing tab of an empty last cell
        if len(cells) != len(COLUMNS):
            raise SchemaParseError(
                f"{path}:{lineno}: expected {len(COLUMNS)} columns, got {len(cells)}"
            )
        row = dict(zip(COLUMNS, (c.strip() for c in cells)))
        code = row["code"]
        if not code:
            raise SchemaParseError(f"{path}:{lineno}: empty entity code")
        if code in seen_codes:
            raise DuplicateCode(f"{path}:{lineno}: duplicate entity code {code!r}")
        seen_codes.add(code)
        try:
            data_type = parse_data_type(row["entity_type"])
        except SchemaParseError as exc:
            raise SchemaParseError(f"{path}:{lineno} (entity_type): {exc}") from exc
        try:
            weight = int(row["priority_weight"])
        except ValueError as exc:
            raise InvalidWeight(f"{path}:{lineno}: priority_weight must be an integer") from exc
        if weight not in (1, 2, 3):
            raise InvalidWeight(f"{path}:{lineno}: priority_weight must be 1, 2 or 3")
        group_id = row["group_id"]
        if not group_id:
            raise DanglingGroupRef(f"{path}:{lineno}: entity {code!r} has no group_id")
        entities.append(
            EntitySpec(
                code=code,
                question=row["question"],
                data_type=data_type,
                guidelines_text=row["guidelines"],
                group_id=group_id,
                priority_weight=weight,
                default_on_missing=_parse_default(row["default_on_missing"], data_type),
            )
        )
        info = group_rows.setdefault(
            group_id,
            {"question": row["combined_question"], "guidelines": row["combined_guidelines"], "members": []},
        )
        if row["combined_question"] and not info["question"]:
            info["question"] = row["combined_question"]
        if row["combined_guidelines"] and not info["guidelines"]:
            info["guidelines"] = row["combined_guidelines"]
        info["members"].append(code)

    groups = []
    for group_id, info in group_rows.items():
        if not info["question"]:
            raise SchemaParseError(f"{path}: group {group_id!r} has no combined question")
        groups.append(
            EntityGroup(
                group_id=group_id,
                combined_question=info["question"],
                combined_guidelines=info["guidelines"],
                member_codes=tuple(info["members"]),
            )
        )

    return EntitySchema(
        schema_id=schema_id or path.stem,
        entities=tuple(entities),
        groups=tuple(groups),
    )


def dump_schema(schema: EntitySchema) -> str:
    """Serialize a schema back to the TSV layout (lossless round-trip)."""
    rows = ["\t".join(COLUMNS)]
    emitted_groups: set[str] = set()
    group_by_id = {g.group_id: g for g in schema.groups}
    for entity in schema.entities:
        group = group_by_id[entity.group_id]
        first_of_group = entity.group_id not in emitted_groups
        emitted_groups.add(entity.group_id)
        default = entity.default_on_missing
        if default is BLANK or default == BLANK:
            default_text = ""
        elif isinstance(default, bool):
            default_text = "True" if default else "False"
        else:
            default_text = str(default)
        rows.append(
            "\t".join(
                (
                    entity.question,
                    entity.data_type.spelled(),
                    entity.guidelines_text,
                    entity.code,
                    group.combined_question if first_of_group else "",
                    group.combined_guidelines if first_of_group else "",
                    entity.group_id,
                    str(entity.priority_weight),
                    default_text,
                )
            )
        )
    return "\n".join(rows) + "\n"


def reference_schema_path() -> Path:
    """Path of the shipped nine-entity renal reference schema."""
    return Path(str(resources.files("annobench").joinpath("data/renal_schema.tsv")))


def load_reference_schema() -> EntitySchema:
    return load_schema(reference_schema_path())


@dataclass(frozen=True)
class TypedValue:
    value: Value
    type_mismatch: bool = False


_TRUE_WORDS = {"true", "t", "yes"}
_FALSE_WORDS = {"false", "f", "no"}


def _try_binary(raw: Value) -> bool | None:
    if isinstance(raw, bool):
        return raw
    if isinstance(raw, str):
        word = raw.strip().lower()
        if word in _TRUE_WORDS:
            return True
        if word in _FALSE_WORDS:
            return False
    return None


def _try_numerical(raw: Value) -> int | None:
    if isinstance(raw, bool):
        return None
    if isinstance(raw, int):
        return raw if raw >= 0 else None
    if isinstance(raw, float):
        return int(raw) if raw >= 0 and raw.is_integer() else None
    if isinstance(raw, str):
        text = raw.strip()
        try:
            number = float(text) if "." in text else int(text)
        except ValueError:
            return None
        if isinstance(number, float):
            if number < 0 or not number.is_integer():
                return None
            return int(number)
        return number if number >= 0 else None
    return None


def _try_categorical(raw: Value, labels: tuple[str, ...]) -> str | None:
    text = str(raw).strip()
    for label in labels:
        if text.lower() == label.lower():
            return label
    return None


def validate_value_for_type(data_type: EntityDataType, raw: Value) -> TypedValue:
    """Coerce a raw value to the declared type; tag instead of reject.

    Blank stays blank. A value that fits no member of the type comes back
    as its raw string, tagged type_mismatch, so downstream comparison can
    still run.
    """
    if raw is None or (isinstance(raw, str) and raw.strip() == ""):
        return TypedValue(BLANK)

    kinds = data_type.members if data_type.kind == "union" else (data_type,)
    for member in kinds:
        if member.kind == "binary":
            result = _try_binary(raw)
            if result is not None:
                return TypedValue(result)
        elif member.kind == "numerical":
            number = _try_numerical(raw)
            if number is not None:
                return TypedValue(number)
        elif member.kind == "categorical":
            label = _try_categorical(raw, member.labels)
            if label is not None:
                return TypedValue(label)
        else:  # string kinds accept anything
            return TypedValue(str(raw).strip())

    return TypedValue(str(raw), type_mismatch=True)


def validate_value(spec: EntitySpec, raw: Value) -> TypedValue:
    return validate_value_for_type(spec.data_type, raw)


def severity_to_percent(adjective: str) -> str:
    """Map a severity adjective to its anchor percentage band, if known."""
    return SEVERITY_ANCHORS.get(adjective.strip().lower(), adjective)


def schema_to_json(schema: EntitySchema) -> dict:
    """JSON-friendly view of a schema (what the service API serves)."""
    return {
        "schema_id": schema.schema_id,
        "entities": [
            {
                "code": e.code,
                "question": e.question,
                "data_type": e.data_type.spelled(),
                "kind": e.data_type.kind,
                "guidelines": e.guidelines_text,
                "group_id": e.group_id,
                "priority_weight": e.priority_weight,
                "tier": e.tier,
                "default_on_missing": e.default_on_missing,
            }
            for e in schema.entities
        ],
        "groups": [
            {
                "group_id": g.group_id,
                "combined_question": g.combined_question,
                "combined_guidelines": g.combined_guidelines,
                "member_codes": list(g.member_codes),
            }
            for g in schema.groups
        ],
    }


def dump_schema_json(schema: EntitySchema) -> str:
    return json.dumps(schema_to_json(schema), indent=2, sort_keys=True)
