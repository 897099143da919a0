"""Provider-agnostic chat-completion client with record/replay cassettes.

Speaks the OpenAI-compatible ``/chat/completions`` JSON shape so one client
covers hosted and self-served models. Multimodal messages carry inline
base64 PNG parts. Replay mode is fully hermetic: it never opens a socket,
serving responses from cassette files keyed by a content digest of the
request.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import requests

from .errors import AuthError, CassetteMiss, EmptyCompletion, NetworkError

DEFAULT_CREDENTIAL_ENV = "PLOTGEN_API_KEY"
DEFAULT_MAX_OUTPUT_TOKENS = 4096

_MAX_ATTEMPTS = 3
_RETRY_BASE_DELAY = 0.5  # seconds; doubled per attempt
_REQUEST_TIMEOUT = 120.0

# Byte separator for the canonical request serialization behind replay keys.
_KEY_SEP = "\x1f"


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    data: bytes
    media_type: str = "image/png"


Part = Union[TextPart, ImagePart]

_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    parts: tuple[Part, ...]

    @classmethod
    def text(cls, role: str, text: str) -> "ChatMessage":
        return cls(role=role, parts=(TextPart(text),))


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS


@dataclass(frozen=True)
class ChatResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    latency_s: float = 0.0


@dataclass(frozen=True)
class LiveBackend:
    base_url: str
    credential_env: str = DEFAULT_CREDENTIAL_ENV


@dataclass(frozen=True)
class ReplayBackend:
    cassette_dir: Path


@dataclass(frozen=True)
class RecordBackend:
    base_url: str
    cassette_dir: Path
    credential_env: str = DEFAULT_CREDENTIAL_ENV


Backend = Union[LiveBackend, ReplayBackend, RecordBackend]


def validate_request(request: ChatRequest) -> None:
    if not request.model_id:
        raise ValueError("model_id must be non-empty")
    if not request.messages:
        raise ValueError("messages must be non-empty")
    if request.temperature < 0:
        raise ValueError("temperature must be >= 0")
    if request.max_output_tokens < 1:
        raise ValueError("max_output_tokens must be >= 1")
    for msg in request.messages:
        if msg.role not in _ROLES:
            raise ValueError(f"unsupported role {msg.role!r}")
        if not msg.parts:
            raise ValueError("message parts must be non-empty")


def replay_key(request: ChatRequest) -> str:
    """Stable content digest of a request, used as the cassette filename.

    Canonical serialization: model id, temperature, then per message its
    role followed by each part (text verbatim, images as their own SHA-256
    hex), all joined with 0x1F separators and hashed with SHA-256.
    """
    fields = [request.model_id, repr(float(request.temperature))]
    for msg in request.messages:
        fields.append(msg.role)
        for part in msg.parts:
            if isinstance(part, TextPart):
                fields.append(part.text)
            else:
                fields.append(hashlib.sha256(part.data).hexdigest())
    canonical = _KEY_SEP.join(fields).encode("utf-8")
    return hashlib.sha256(canonical).hexdigest()


def _cassette_path(directory: Path, key: str) -> Path:
    return Path(directory) / f"{key}.json"


def _load_cassette(directory: Path, key: str) -> ChatResponse:
    path = _cassette_path(directory, key)
    if not path.is_file():
        raise CassetteMiss(key)
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("request_digest") != key:
        raise CassetteMiss(key)
    return ChatResponse(
        text=payload["response_text"],
        prompt_tokens=int(payload.get("prompt_tokens", 0)),
        completion_tokens=int(payload.get("completion_tokens", 0)),
        latency_s=0.0,
    )


def _store_cassette(directory: Path, key: str, response: ChatResponse) -> None:
    # Write-temp-then-rename keeps concurrent recorders from exposing
    # partially written cassettes.
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    payload = {
        "request_digest": key,
        "response_text": response.text,
        "prompt_tokens": response.prompt_tokens,
        "completion_tokens": response.completion_tokens,
    }
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
        os.replace(tmp, _cassette_path(directory, key))
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _wire_messages(request: ChatRequest) -> list[dict]:
    messages = []
    for msg in request.messages:
        content = []
        for part in msg.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            else:
                b64 = base64.b64encode(part.data).decode("ascii")
                url = f"data:{part.media_type};base64,{b64}"
                content.append({"type": "image_url", "image_url": {"url": url}})
        messages.append({"role": msg.role, "content": content})
    return messages


def _post(url: str, headers: dict, body: dict, timeout: float) -> tuple[int, dict]:
    """Single HTTP POST; isolated so tests can instrument the transport."""
    resp = requests.post(url, headers=headers, json=body, timeout=timeout)
    try:
        payload = resp.json()
    except ValueError:
        payload = {}
    return resp.status_code, payload


def _extract_text(payload: dict) -> str:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise NetworkError(f"malformed completion payload: {exc}") from exc
    if isinstance(content, list):
        content = "".join(
            p.get("text", "") for p in content if isinstance(p, dict)
        )
    return content or ""


def _live_call(base_url: str, credential_env: str, request: ChatRequest) -> ChatResponse:
    token = os.environ.get(credential_env, "").strip()
    if not token:
        raise AuthError(f"credential env var {credential_env} is not set")
    url = base_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {token}"}
    body = {
        "model": request.model_id,
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
        "messages": _wire_messages(request),
    }

    last_error: Exception | None = None
    for attempt in range(_MAX_ATTEMPTS):
        started = time.monotonic()
        try:
            status, payload = _post(url, headers, body, _REQUEST_TIMEOUT)
        except requests.RequestException as exc:
            last_error = exc
            if attempt + 1 < _MAX_ATTEMPTS:
                time.sleep(_RETRY_BASE_DELAY * 2**attempt)
            continue

        if status in (401, 403):
            raise AuthError(f"server rejected credential (HTTP {status})")
        if 400 <= status < 500:
            raise NetworkError(f"HTTP {status} from {url}")
        if status >= 500:
            last_error = NetworkError(f"HTTP {status} from {url}")
            if attempt + 1 < _MAX_ATTEMPTS:
                time.sleep(_RETRY_BASE_DELAY * 2**attempt)
            continue

        text = _extract_text(payload)
        if not text:
            raise EmptyCompletion("provider returned empty content")
        usage = payload.get("usage") or {}
        return ChatResponse(
            text=text,
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            latency_s=time.monotonic() - started,
        )

    raise NetworkError(f"request failed after {_MAX_ATTEMPTS} attempts: {last_error}")


def chat_complete(backend: Backend, request: ChatRequest) -> ChatResponse:
    """Run one chat completion against the given backend.

    Replay serves only from cassettes (never touching the network); record
    serves from an existing cassette when one matches, otherwise performs a
    live call and persists the result atomically.
    """
    validate_request(request)
    if isinstance(backend, ReplayBackend):
        return _load_cassette(backend.cassette_dir, replay_key(request))

    if isinstance(backend, RecordBackend):
        key = replay_key(request)
        try:
            return _load_cassette(backend.cassette_dir, key)
        except CassetteMiss:
            pass
        response = _live_call(backend.base_url, backend.credential_env, request)
        _store_cassette(backend.cassette_dir, key, response)
        return response

    return _live_call(backend.base_url, backend.credential_env, request)


@dataclass
class Gateway:
    """Callable handle around a backend; the object agents pass around.

    Stateless apart from the backend description, so one gateway may be
    shared by concurrent sessions.
    """

    backend: Backend

    def complete(self, request: ChatRequest) -> ChatResponse:
        return chat_complete(self.backend, request)
