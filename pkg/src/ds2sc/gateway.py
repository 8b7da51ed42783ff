"""Provider-agnostic completion gateway with record/replay/scripted modes.

A Gateway either talks to a live chat-completion endpoint (generic JSON
wire shape, provider selected purely by configuration) or serves responses
from a transcript file. Transcript modes:

- record:  call the live backend and append every exchange to the file
- replay:  serve stored responses by request digest; a miss is an error
- scripted: consume transcript entries in order, ignoring digests

Replay keys are a stable content hash over (system prompt, user payload,
temperature), so transcripts are portable across machines and two replay
runs produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass, field

__all__ = [
    "LlmRequest",
    "LlmResponse",
    "ProviderConfig",
    "Transcript",
    "Gateway",
    "ScriptedBackend",
    "HttpBackend",
    "GatewayError",
    "ReplayMissError",
    "AuthenticationError",
    "TransportError",
    "request_digest",
    "sanitize_structured",
    "SanitizeError",
]

log = logging.getLogger(__name__)

AGENT_KINDS = ("spec_parsing", "code_gen", "tb_gen", "debug")


class GatewayError(RuntimeError):
    """Completion could not be obtained."""


class TransportError(GatewayError):
    """Transient transport failure persisting after retries."""


class AuthenticationError(GatewayError):
    """Provider rejected the credentials; retrying cannot help."""


class ReplayMissError(GatewayError):
    """Replay transcript holds no entry for the request digest."""


class SanitizeError(ValueError):
    """No parseable JSON object could be recovered from model output."""


@dataclass(frozen=True)
class LlmRequest:
    system_prompt: str
    user_payload: str
    temperature: float
    agent_kind: str
    max_output_chars: int = 400_000

    def __post_init__(self):
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature out of range: {self.temperature}")
        if not self.user_payload:
            raise ValueError("empty user payload")
        if self.agent_kind not in AGENT_KINDS:
            raise ValueError(f"unknown agent kind {self.agent_kind!r}")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    provider_id: str = "scripted"
    elapsed_ms: int = 0
    truncated: bool = False


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = ""
    model: str = ""
    timeout_s: int = 120
    retries: int = 3
    api_key_env: str = "DS2SC_API_KEY"
    provider_id: str = "generic"


def request_digest(req: LlmRequest) -> str:
    """Stable content hash of the request identity fields."""
    canonical = json.dumps(
        {
            "system_prompt": req.system_prompt,
            "user_payload": req.user_payload,
            "temperature": req.temperature,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ScriptedBackend:
    """Serves queued response texts in order; raises when exhausted."""

    def __init__(self, responses: list[str] | None = None):
        self.queue: list[str] = list(responses or [])
        self.requests: list[LlmRequest] = []

    def push(self, text: str) -> None:
        self.queue.append(text)

    def complete(self, req: LlmRequest) -> LlmResponse:
        self.requests.append(req)
        if not self.queue:
            raise GatewayError("scripted backend exhausted")
        return LlmResponse(text=self.queue.pop(0), provider_id="scripted", elapsed_ms=0)


class RefusingBackend:
    """Backend that must never be reached (asserts replay does no live calls)."""

    def complete(self, req: LlmRequest) -> LlmResponse:
        raise AssertionError("live completion attempted in offline mode")


class HttpBackend:
    """Generic chat-completion HTTP adapter.

    POSTs ``{model, messages, temperature, max_tokens}`` to the configured
    base URL with a bearer token from the environment, and reads
    ``choices[0].message.content`` back. Transient transport failures and
    5xx responses are retried with exponential backoff.
    """

    def __init__(self, provider: ProviderConfig, sleep=time.sleep):
        self.provider = provider
        self._sleep = sleep

    def complete(self, req: LlmRequest) -> LlmResponse:
        import requests

        key = os.environ.get(self.provider.api_key_env, "")
        if not key:
            raise AuthenticationError(
                f"API key environment variable {self.provider.api_key_env} is not set"
            )
        payload = {
            "model": self.provider.model,
            "messages": [
                {"role": "system", "content": req.system_prompt},
                {"role": "user", "content": req.user_payload},
            ],
            "temperature": req.temperature,
            "max_tokens": max(req.max_output_chars // 4, 256),
        }
        headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
        delay = 1.0
        last_err: Exception | None = None
        for attempt in range(self.provider.retries):
            started = time.monotonic()
            try:
                resp = requests.post(
                    self.provider.base_url,
                    json=payload,
                    headers=headers,
                    timeout=self.provider.timeout_s,
                )
            except requests.RequestException as e:
                last_err = e
                log.warning("transport failure (attempt %d): %s", attempt + 1, e)
                self._sleep(delay)
                delay *= 2
                continue
            if resp.status_code in (401, 403):
                raise AuthenticationError(f"provider returned HTTP {resp.status_code}")
            if resp.status_code >= 500:
                last_err = GatewayError(f"HTTP {resp.status_code}")
                self._sleep(delay)
                delay *= 2
                continue
            if resp.status_code != 200:
                raise GatewayError(f"provider returned HTTP {resp.status_code}: {resp.text[:500]}")
            body = resp.json()
            choice = body["choices"][0]
            elapsed = int((time.monotonic() - started) * 1000)
            return LlmResponse(
                text=choice["message"]["content"],
                provider_id=self.provider.provider_id,
                elapsed_ms=elapsed,
                truncated=choice.get("finish_reason") == "length",
            )
        raise TransportError(f"transport failure after {self.provider.retries} attempts: {last_err}")


class Transcript:
    """JSON-lines exchange store backing record/replay/scripted modes."""

    def __init__(self, path: str, mode: str):
        if mode not in ("record", "replay", "scripted"):
            raise ValueError(f"unknown transcript mode {mode!r}")
        self.path = path
        self.mode = mode
        self._by_digest: dict[str, list[dict]] = {}
        self._ordered: list[dict] = []
        if mode in ("replay", "scripted"):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    self._ordered.append(entry)
                    self._by_digest.setdefault(entry.get("digest", ""), []).append(entry)
        elif mode == "record":
            # truncate: a record-mode transcript is exclusively owned by one run
            open(path, "w", encoding="utf-8").close()

    def append(self, digest: str, response: LlmResponse) -> None:
        entry = {
            "digest": digest,
            "response": {
                "text": response.text,
                "provider_id": response.provider_id,
                "elapsed_ms": response.elapsed_ms,
                "truncated": response.truncated,
            },
        }
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def lookup(self, digest: str) -> LlmResponse:
        entries = self._by_digest.get(digest)
        if not entries:
            raise ReplayMissError(f"no transcript entry for digest {digest}")
        entry = entries.pop(0)
        return _response_from(entry)

    def next_scripted(self) -> LlmResponse:
        if not self._ordered:
            raise GatewayError("scripted transcript exhausted")
        return _response_from(self._ordered.pop(0))


def _response_from(entry: dict) -> LlmResponse:
    r = entry["response"]
    return LlmResponse(
        text=r["text"],
        provider_id=r.get("provider_id", "transcript"),
        elapsed_ms=int(r.get("elapsed_ms", 0)),
        truncated=bool(r.get("truncated", False)),
    )


@dataclass
class Gateway:
    """Single entry point agents use to obtain completions."""

    backend: object | None = None
    transcript: Transcript | None = None
    exchanges: list[tuple[str, LlmRequest, LlmResponse]] = field(default_factory=list)

    @classmethod
    def live(cls, provider: ProviderConfig, transcript: Transcript | None = None) -> "Gateway":
        return cls(backend=HttpBackend(provider), transcript=transcript)

    @classmethod
    def scripted(cls, responses: list[str]) -> "Gateway":
        return cls(backend=ScriptedBackend(responses))

    @classmethod
    def from_transcript(cls, path: str, mode: str) -> "Gateway":
        if mode == "record":
            raise ValueError("record mode needs a live backend; use Gateway.live")
        return cls(backend=RefusingBackend(), transcript=Transcript(path, mode))

    def complete(self, req: LlmRequest) -> LlmResponse:
        digest = request_digest(req)
        if self.transcript is not None and self.transcript.mode == "replay":
            response = self.transcript.lookup(digest)
        elif self.transcript is not None and self.transcript.mode == "scripted":
            response = self.transcript.next_scripted()
        else:
            if self.backend is None:
                raise GatewayError("gateway has neither a backend nor a transcript")
            response = self.backend.complete(req)
            if self.transcript is not None and self.transcript.mode == "record":
                self.transcript.append(digest, response)
        self.exchanges.append((digest, req, response))
        return response

    def digests_since(self, mark: int) -> list[str]:
        return [d for d, _, _ in self.exchanges[mark:]]


def sanitize_structured(text: str):
    """Recover the JSON object from model output that may carry fences/prose.

    Finds the first ``{``, scans (string-aware) to its matching ``}``, and
    parses that span; anything before or after is discarded.
    """
    start = text.find("{")
    if start < 0:
        raise SanitizeError("no JSON object found in output")
    depth = 0
    in_string = False
    escaped = False
    end = -1
    for i in range(start, len(text)):
        c = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif c == "\\":
                escaped = True
            elif c == '"':
                in_string = False
            continue
        if c == '"':
            in_string = True
        elif c == "{":
            depth += 1
        elif c == "}":
            depth -= 1
            if depth == 0:
                end = i
                break
    if end < 0:
        raise SanitizeError("no balanced top-level JSON object found")
    span = text[start : end + 1]
    try:
        return json.loads(span)
    except json.JSONDecodeError as e:
        raise SanitizeError(f"parse failure after stripping: {e.msg} at line {e.lineno}") from e
