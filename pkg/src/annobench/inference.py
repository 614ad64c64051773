"""Synchronous text-generation backends behind one small contract.

Two implementations: an HTTP client for a local model server speaking the
single-POST generate protocol, and a deterministic scripted mock whose
responses (including malformed-JSON faults) come from a fault script, so
the whole pipeline can be exercised without any model.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol

import requests

from .errors import BackendServerError, BackendTimeout, BackendUnavailable, DataError
from .repair import JsonErrorCode


@dataclass(frozen=True)
class GenerationRequest:
    model_id: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 512
    timeout_s: float = 120.0
    # request context (report_id, group_id, ...) used by the scripted mock
    # and echoed into run-manifest logging
    tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class GenerationResult:
    text: str
    duration_s: float
    backend_id: str


class Backend(Protocol):
    backend_id: str

    def generate(self, request: GenerationRequest) -> str: ...


def complete(backend: Backend, request: GenerationRequest) -> GenerationResult:
    """Run one full (non-streamed) completion, measuring wall time.

    Transport failures get a single retry; anything the server actually
    answered is never retried (malformed output is data, not an error).
    """
    start = time.perf_counter()
    try:
        text = backend.generate(request)
    except (BackendUnavailable, BackendTimeout):
        text = backend.generate(request)
    return GenerationResult(text=text, duration_s=time.perf_counter() - start, backend_id=backend.backend_id)


class HttpBackend:
    """Client for a local generate server (single POST endpoint).

    Request body: {"model", "prompt", "stream": false,
    "options": {"temperature", "num_predict"}}; response body carries the
    completion under "response".
    """

    def __init__(self, base_url: str, generate_path: str = "/api/generate", session: requests.Session | None = None):
        self.base_url = base_url.rstrip("/")
        self.generate_path = generate_path
        self.backend_id = f"http:{self.base_url}"
        self._session = session or requests.Session()

    def generate(self, request: GenerationRequest) -> str:
        body = {
            "model": request.model_id,
            "prompt": request.prompt,
            "stream": False,
            "options": {
                "temperature": request.temperature,
                "num_predict": request.max_tokens,
            },
        }
        url = self.base_url + self.generate_path
        try:
            response = self._session.post(url, json=body, timeout=request.timeout_s)
        except requests.Timeout as exc:
            raise BackendTimeout(f"{url}: timed out after {request.timeout_s}s ({request.tags})") from exc
        except requests.ConnectionError as exc:
            raise BackendUnavailable(f"{url}: {exc} ({request.tags})") from exc
        if response.status_code != 200:
            raise BackendServerError(f"{url}: HTTP {response.status_code} ({request.tags})")
        try:
            payload = response.json()
            return str(payload["response"])
        except (ValueError, KeyError) as exc:
            raise BackendServerError(f"{url}: malformed server payload ({request.tags})") from exc


# ---------------------------------------------------------------------------
# scripted mock and its fault templater


def script_key(report_id: str, group_id: str) -> str:
    return f"{report_id}::{group_id}"


def fault_template(code: JsonErrorCode | str, payload: dict, variant: int = 0) -> str:
    """Render a malformed model response exhibiting one taxonomy class.

    ``payload`` is the clean answer object the response is derailed from;
    top-level keys are preserved by every recoverable class so repair
    conservation can be checked against them.
    """
    code = JsonErrorCode(code)
    base = json.dumps(payload)
    pairs = [f"{json.dumps(k)}: {json.dumps(v)}" for k, v in payload.items()]

    if code is JsonErrorCode.NO_JSON_FOUND:
        variants = (
            ", ".join(pairs),
            ",\n".join(pairs),
            ", ".join(pairs) + "\n",
            " " + ", ".join(pairs),
            " , ".join(pairs),
        )
        return variants[variant % len(variants)]

    if code is JsonErrorCode.UNCLOSED_BRACKETS:
        opened = base[:-1]
        variants = (
            opened,
            opened + "\n",
            "Here is the JSON: " + opened,
            "{" + ",\n  ".join(pairs),
            opened + "  ",
        )
        return variants[variant % len(variants)]

    if code is JsonErrorCode.BAD_BACKSLASH_ESCAPE:
        # char after the backslash must not form a valid JSON escape
        bad_strings = ("5\\10%", "grade \\1A", "focal\\segmental", "IgA\\HSP overlap", "approx \\5 percent")
        key = sorted(payload)[variant % len(payload)] if payload else "note"
        injected = bad_strings[variant % len(bad_strings)]
        mangled = dict(payload)
        mangled[key] = "__BS__"
        return json.dumps(mangled).replace('"__BS__"', f'"{injected}"')

    if code is JsonErrorCode.INNER_DOUBLE_QUOTES:
        phrases = (
            'acute "cellular" rejection',
            'so-called "chronic" change',
            'features of "mild" rejection',
            'no "significant" abnormality',
            '"florid" crescentic change',
        )
        key = sorted(payload)[variant % len(payload)] if payload else "note"
        mangled = dict(payload)
        mangled[key] = "__IQ__"
        return json.dumps(mangled).replace('"__IQ__"', '"' + phrases[variant % len(phrases)] + '"')

    if code is JsonErrorCode.TRAILING_COMMENTARY:
        variants = (
            "Sure, here are the annotations: " + base,
            base + "\nLet me know if you need anything else!",
            "Answer:\n" + base + "\nHope this helps.",
            base[:-1] + " // extracted automatically\n}",
            "```json\n" + base + "\n```",
        )
        return variants[variant % len(variants)]

    if code is JsonErrorCode.MULTIPLE_JSON_OBJECTS:
        zeroed = json.dumps({k: 0 for k in payload})
        variants = (
            base + " " + zeroed,
            base + "\n" + zeroed,
            "Two candidate readings: " + base + " or " + zeroed,
            base + " " + zeroed + " " + zeroed,
            base + ' {"note": "duplicate output"}',
        )
        return variants[variant % len(variants)]

    # IncoherentOutput: refusals and garbage with no recoverable object
    variants = (
        "I am sorry, I cannot extract fields from this report.",
        "As a language model I need more context to answer that.",
        "%%%### output buffer corrupted ###%%%",
        "The report does not appear to mention glomeruli at all, so",
        "true",
    )
    return variants[variant % len(variants)]


@dataclass(frozen=True)
class ScriptEntry:
    """Either a literal response or a templated fault."""

    response: str | None = None
    fault: str | None = None
    answer: dict | None = None
    variant: int = 0

    def render(self) -> str:
        if self.response is not None:
            return self.response
        return fault_template(JsonErrorCode(self.fault), self.answer or {}, self.variant)


class MockBackend:
    """Deterministic backend scripted by (report_id, group_id)."""

    def __init__(self, script: Mapping[str, ScriptEntry] | None = None, default_response: str = "{}"):
        self.script = dict(script or {})
        self.default_response = default_response
        self.backend_id = "mock"

    def generate(self, request: GenerationRequest) -> str:
        key = script_key(request.tags.get("report_id", ""), request.tags.get("group_id", ""))
        entry = self.script.get(key)
        if entry is None:
            return self.default_response
        return entry.render()


def load_fault_script(path: str | Path) -> dict[str, ScriptEntry]:
    """Read a fault-script fixture: {"<report>::<group>": entry, ...}.

    Entry objects carry either {"response": "..."} or
    {"fault": "<JsonErrorCode>", "answer": {...}, "variant": 0}.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = data.get("entries", data) if isinstance(data, dict) else None
    if not isinstance(entries, dict):
        raise DataError(f"fault script {path}: expected an object of entries")
    script: dict[str, ScriptEntry] = {}
    for key, raw in entries.items():
        if "response" in raw:
            script[key] = ScriptEntry(response=str(raw["response"]))
        elif "fault" in raw:
            try:
                JsonErrorCode(raw["fault"])
            except ValueError as exc:
                raise DataError(f"fault script {path}: unknown fault code {raw['fault']!r}") from exc
            script[key] = ScriptEntry(
                fault=raw["fault"],
                answer=raw.get("answer") or {},
                variant=int(raw.get("variant", 0)),
            )
        else:
            raise DataError(f"fault script {path}: entry {key!r} needs 'response' or 'fault'")
    return script


def dump_fault_script(script: Mapping[str, ScriptEntry]) -> str:
    entries = {}
    for key, entry in script.items():
        if entry.response is not None:
            entries[key] = {"response": entry.response}
        else:
            entries[key] = {"fault": entry.fault, "answer": entry.answer, "variant": entry.variant}
    return json.dumps({"entries": entries}, indent=2, sort_keys=True)
