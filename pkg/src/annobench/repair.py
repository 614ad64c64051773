"""Tolerant extraction of a JSON object from raw model text.

Strategy: slice the candidate between the first ``{`` and the last ``}``,
try a strict parse, then apply a fixed sequence of textual repairs,
re-parsing after each. Every input yields a ParseOutcome; inputs that
survive no repair come back failed with a blank (empty) value map, which
is the policy downstream stages rely on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum


class JsonErrorCode(str, Enum):
    NO_JSON_FOUND = "NoJsonFound"
    UNCLOSED_BRACKETS = "UnclosedBrackets"
    BAD_BACKSLASH_ESCAPE = "BadBackslashEscape"
    INNER_DOUBLE_QUOTES = "InnerDoubleQuotes"
    TRAILING_COMMENTARY = "TrailingCommentary"
    MULTIPLE_JSON_OBJECTS = "MultipleJsonObjects"
    INCOHERENT_OUTPUT = "IncoherentOutput"


RECOVERABLE_CODES = tuple(c for c in JsonErrorCode if c is not JsonErrorCode.INCOHERENT_OUTPUT)

CLEAN = "clean"
REPAIRED = "repaired"
FAILED = "failed"

# Characters that may legally follow a backslash inside a JSON string.
_VALID_ESCAPES = set('"\\/bfnrtu')


@dataclass
class ParseOutcome:
    status: str
    error_codes: list[JsonErrorCode] = field(default_factory=list)
    value: dict[str, str] = field(default_factory=dict)
    repair_log: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "error_codes": [c.value for c in self.error_codes],
            "value": dict(self.value),
            "repair_log": list(self.repair_log),
        }


@dataclass(frozen=True)
class Candidate:
    text: str
    had_commentary: bool
    unclosed: bool


def extract_candidate(text: str) -> Candidate | None:
    """Slice from the first ``{`` to the last ``}`` (or end of text).

    Returns None when the text contains no ``{`` at all. ``had_commentary``
    marks discarded surrounding text; ``unclosed`` marks an unbalanced
    candidate (missing closers by depth count).
    """
    start = text.find("{")
    if start == -1:
        return None
    end = text.rfind("}")
    candidate = text[start:] if end < start else text[start : end + 1]
    had_commentary = text.strip() != candidate.strip()
    return Candidate(candidate, had_commentary, _open_depth(candidate) > 0)


def _open_depth(text: str) -> int:
    """Net count of unclosed braces/brackets, ignoring string contents."""
    depth = 0
    in_string = False
    escaped = False
    for ch in text:
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
    return depth


def _strict_parse(text: str) -> dict | None:
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        return None
    return value if isinstance(value, dict) else None


def value_to_raw(value) -> str:
    """Stringify a parsed JSON value the way a model would have typed it."""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "True" if value else "False"
    if value is None:
        return ""
    if isinstance(value, (int, float)):
        return str(value)
    return json.dumps(value)


def _raw_value_map(parsed: dict) -> dict[str, str]:
    return {str(k): value_to_raw(v) for k, v in parsed.items()}


def serialize_value_map(value: dict[str, str]) -> str:
    """Canonical re-serialization of an outcome's value map."""
    return json.dumps(value, sort_keys=True)


# ---------------------------------------------------------------------------
# individual repairs (text -> text; unchanged text means "did not apply")


def close_brackets(text: str) -> str:
    """Append the closers a depth count says are missing.

    An unterminated final string literal is closed first so the appended
    brackets land outside it.
    """
    stack: list[str] = []
    in_string = False
    escaped = False
    for ch in text:
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch in "{[":
            stack.append(ch)
        elif ch in "}]":
            if stack and stack[-1] == {"}": "{", "]": "["}[ch]:
                stack.pop()
    if not stack and not in_string:
        return text
    suffix = '"' if in_string else ""
    for opener in reversed(stack):
        suffix += "}" if opener == "{" else "]"
    return text.rstrip() + suffix


def fix_backslashes(text: str) -> str:
    """Replace invalid escape backslashes inside string literals with '/'."""
    out: list[str] = []
    in_string = False
    i = 0
    while i < len(text):
        ch = text[i]
        if in_string:
            if ch == "\\":
                nxt = text[i + 1] if i + 1 < len(text) else ""
                if nxt in _VALID_ESCAPES:
                    out.append(ch)
                    out.append(nxt)
                    i += 2
                    continue
                out.append("/")
                i += 1
                continue
            if ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        out.append(ch)
        i += 1
    return "".join(out)


def _is_string_end(text: str, idx: int) -> bool:
    """Heuristic: does the quote at idx terminate the current string?

    A terminating quote is followed (after whitespace) by a structural
    character or a line-comment marker; anything else is an interior
    quote.
    """
    j = idx + 1
    while j < len(text) and text[j] in " \t\r\n":
        j += 1
    if j >= len(text) or text[j] in ":,}]":
        return True
    return text[j] == "/" and j + 1 < len(text) and text[j + 1] == "/"


def fix_inner_quotes(text: str) -> str:
    """Turn unescaped interior double quotes inside strings into singles."""
    out: list[str] = []
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
                out.append(ch)
                continue
            if ch == "\\":
                escaped = True
                out.append(ch)
                continue
            if ch == '"':
                if _is_string_end(text, i):
                    in_string = False
                    out.append(ch)
                else:
                    out.append("'")
                continue
            out.append(ch)
            continue
        if ch == '"':
            in_string = True
        out.append(ch)
    return "".join(out)


def strip_line_comments(text: str) -> str:
    """Remove ``//...`` line remnants occurring outside string literals."""
    out: list[str] = []
    in_string = False
    escaped = False
    i = 0
    while i < len(text):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            out.append(ch)
            i += 1
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
            i += 1
            continue
        if ch == "/" and i + 1 < len(text) and text[i + 1] == "/":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def first_object(text: str) -> str:
    """Keep only the first balanced top-level object when several exist."""
    depth = 0
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                rest = text[i + 1 :]
                if rest.strip():
                    return text[: i + 1]
                return text
    return text


# (repair name, function, taxonomy code) in the fixed application order
_REPAIR_SEQUENCE = (
    ("close_brackets", close_brackets, JsonErrorCode.UNCLOSED_BRACKETS),
    ("fix_backslashes", fix_backslashes, JsonErrorCode.BAD_BACKSLASH_ESCAPE),
    ("fix_inner_quotes", fix_inner_quotes, JsonErrorCode.INNER_DOUBLE_QUOTES),
    ("strip_line_comments", strip_line_comments, JsonErrorCode.TRAILING_COMMENTARY),
    ("first_object", first_object, JsonErrorCode.MULTIPLE_JSON_OBJECTS),
)


def repair_and_parse(text: str) -> ParseOutcome:
    """Parse model text into an entity->raw-string map, repairing if needed.

    Never raises: unrepairable input yields status=failed with an empty
    value map (the blank annotation) and IncoherentOutput appended to
    whatever codes were observed along the way.
    """
    candidate = extract_candidate(text)
    if candidate is None:
        # No braces anywhere. Brace-wrapping recovers outputs that are a
        # bare key/value listing; anything else is incoherent.
        wrapped = _strict_parse("{" + text.strip() + "}")
        if wrapped is not None:
            return ParseOutcome(
                REPAIRED,
                error_codes=[JsonErrorCode.NO_JSON_FOUND],
                value=_raw_value_map(wrapped),
                repair_log=["wrap_braces"],
            )
        return ParseOutcome(
            FAILED,
            error_codes=[JsonErrorCode.NO_JSON_FOUND, JsonErrorCode.INCOHERENT_OUTPUT],
        )

    work = candidate.text
    codes: list[JsonErrorCode] = []
    log: list[str] = []

    parsed = _strict_parse(work)
    if parsed is not None and not candidate.had_commentary:
        return ParseOutcome(CLEAN, value=_raw_value_map(parsed))
    if candidate.had_commentary:
        codes.append(JsonErrorCode.TRAILING_COMMENTARY)
        log.append("strip_commentary")
    if parsed is not None:
        return ParseOutcome(REPAIRED, error_codes=codes, value=_raw_value_map(parsed), repair_log=log)

    for name, fn, code in _REPAIR_SEQUENCE:
        new_text = fn(work)
        if new_text != work:
            work = new_text
            log.append(name)
            if code not in codes:
                codes.append(code)
            parsed = _strict_parse(work)
            if parsed is not None:
                return ParseOutcome(REPAIRED, error_codes=codes, value=_raw_value_map(parsed), repair_log=log)

    codes.append(JsonErrorCode.INCOHERENT_OUTPUT)
    return ParseOutcome(FAILED, error_codes=codes)
