from __future__ import annotations

import hashlib
import http.server
import json
import socket
import threading

import pytest

from plotgen.errors import AuthError, CassetteMiss, EmptyCompletion, NetworkError
from plotgen.gateway import (
    ChatMessage,
    ChatRequest,
    ChatResponse,
    ImagePart,
    LiveBackend,
    RecordBackend,
    ReplayBackend,
    TextPart,
    _store_cassette,
    chat_complete,
    replay_key,
)


def reference_key(request: ChatRequest) -> str:
    """Independent oracle: the documented canonical serialization, redone
    from scratch with hashlib."""
    fields = [request.model_id, repr(float(request.temperature))]
    for message in request.messages:
        fields.append(message.role)
        for part in message.parts:
            if isinstance(part, TextPart):
                fields.append(part.text)
            else:
                fields.append(hashlib.sha256(part.data).hexdigest())
    return hashlib.sha256("\x1f".join(fields).encode("utf-8")).hexdigest()


def simple_request(text="hello", model="m1", image: bytes | None = None) -> ChatRequest:
    parts: tuple = (TextPart(text),)
    if image is not None:
        parts = parts + (ImagePart(image),)
    return ChatRequest(model_id=model, messages=(ChatMessage(role="user", parts=parts),))


class TestReplayKey:
    def test_identical_requests_identical_keys(self):
        assert replay_key(simple_request()) == replay_key(simple_request())

    def test_matches_reference_oracle(self):
        requests = [
            simple_request(),
            simple_request(text="hello "),
            simple_request(model="m2"),
            simple_request(image=b"\x89PNGxyz"),
            ChatRequest(
                model_id="m1",
                messages=(
                    ChatMessage.text("system", "s"),
                    ChatMessage.text("user", "u"),
                ),
                temperature=0.5,
            ),
        ]
        for request in requests:
            assert replay_key(request) == reference_key(request)

    def test_one_character_difference_changes_key(self):
        a, b = simple_request("plot sales"), simple_request("plot salez")
        assert reference_key(a) != reference_key(b)  # oracle agrees they differ
        assert replay_key(a) != replay_key(b)

    def test_image_bytes_difference_changes_key(self):
        a = simple_request(image=b"png-one")
        b = simple_request(image=b"png-two")
        assert reference_key(a) != reference_key(b)
        assert replay_key(a) != replay_key(b)

    def test_injective_on_fixture_corpus(self):
        corpus = [
            simple_request(text=f"req {i}") for i in range(20)
        ] + [
            simple_request(model=f"model-{i}") for i in range(5)
        ] + [
            simple_request(image=bytes([i]) * 8) for i in range(5)
        ] + [
            ChatRequest(
                model_id="m1",
                messages=(ChatMessage.text("user", "x"),),
                temperature=t,
            )
            for t in (0.0, 0.1, 0.7, 1.0)
        ]
        keys = [replay_key(r) for r in corpus]
        assert len(set(keys)) == len(keys)

    def test_role_and_part_boundaries_are_not_ambiguous(self):
        # concatenation across the separator must not collide
        a = ChatRequest(model_id="m", messages=(ChatMessage.text("user", "ab"),))
        b = ChatRequest(
            model_id="m",
            messages=(ChatMessage(role="user", parts=(TextPart("a"), TextPart("b"))),),
        )
        assert replay_key(a) != replay_key(b)


class TestReplayBackend:
    def test_returns_stored_value(self, tmp_path):
        request = simple_request("plan please")
        stored = ChatResponse(text="1. Load data", prompt_tokens=7, completion_tokens=3)
        _store_cassette(tmp_path, replay_key(request), stored)
        response = chat_complete(ReplayBackend(cassette_dir=tmp_path), request)
        assert response.text == "1. Load data"
        assert (response.prompt_tokens, response.completion_tokens) == (7, 3)

    def test_miss_raises(self, tmp_path):
        with pytest.raises(CassetteMiss):
            chat_complete(ReplayBackend(cassette_dir=tmp_path), simple_request("unseen"))

    def test_replay_is_hermetic(self, tmp_path, monkeypatch):
        request = simple_request("offline")
        _store_cassette(tmp_path, replay_key(request), ChatResponse(text="ok"))

        def deny(*args, **kwargs):
            raise AssertionError("socket opened under replay")

        monkeypatch.setattr(socket, "socket", deny)
        monkeypatch.setattr(socket, "create_connection", deny)
        response = chat_complete(ReplayBackend(cassette_dir=tmp_path), request)
        assert response.text == "ok"


class _Handler(http.server.BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802
        server = self.server
        server.post_count += 1
        length = int(self.headers.get("Content-Length", 0))
        server.bodies.append(json.loads(self.rfile.read(length)))
        status = server.status_plan.pop(0) if server.status_plan else 200
        if status != 200:
            self.send_response(status)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        body = json.dumps(
            {
                "choices": [{"message": {"content": server.reply_text}}],
                "usage": {"prompt_tokens": 11, "completion_tokens": 5},
            }
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def fake_server():
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    server.post_count = 0
    server.bodies = []
    server.status_plan = []
    server.reply_text = "pong"
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server
    finally:
        server.shutdown()


def _base_url(server) -> str:
    return f"http://127.0.0.1:{server.server_address[1]}"


@pytest.fixture
def api_key(monkeypatch):
    monkeypatch.setenv("PLOTGEN_API_KEY", "test-token")


class TestLiveAndRecord:
    def test_record_second_identical_request_served_from_cassette(
        self, fake_server, tmp_path, api_key
    ):
        backend = RecordBackend(base_url=_base_url(fake_server), cassette_dir=tmp_path)
        request = simple_request("count me")
        first = chat_complete(backend, request)
        second = chat_complete(backend, request)
        assert fake_server.post_count == 1  # exactly one network call observed
        assert first.text == second.text == "pong"

    def test_record_then_replay_round_trip_byte_identical(self, fake_server, tmp_path, api_key):
        fake_server.reply_text = "répönse\nwith lines\tand unicode ✓"
        backend = RecordBackend(base_url=_base_url(fake_server), cassette_dir=tmp_path)
        request = simple_request("round trip")
        recorded = chat_complete(backend, request)
        replayed = chat_complete(ReplayBackend(cassette_dir=tmp_path), request)
        assert replayed.text.encode() == recorded.text.encode()
        assert replayed.prompt_tokens == recorded.prompt_tokens

    def test_live_sends_openai_wire_shape(self, fake_server, api_key):
        backend = LiveBackend(base_url=_base_url(fake_server))
        request = ChatRequest(
            model_id="vision-model",
            messages=(
                ChatMessage(
                    role="user",
                    parts=(TextPart("look"), ImagePart(b"\x89PNG-bytes")),
                ),
            ),
            temperature=0.0,
            max_output_tokens=77,
        )
        chat_complete(backend, request)
        body = fake_server.bodies[0]
        assert body["model"] == "vision-model"
        assert body["temperature"] == 0.0
        assert body["max_tokens"] == 77
        content = body["messages"][0]["content"]
        assert content[0] == {"type": "text", "text": "look"}
        assert content[1]["type"] == "image_url"
        assert content[1]["image_url"]["url"].startswith("data:image/png;base64,")

    def test_retries_on_5xx_then_succeeds(self, fake_server, api_key, monkeypatch):
        monkeypatch.setattr("plotgen.gateway._RETRY_BASE_DELAY", 0.0)
        fake_server.status_plan = [503, 500]
        response = chat_complete(LiveBackend(base_url=_base_url(fake_server)), simple_request())
        assert response.text == "pong"
        assert fake_server.post_count == 3

    def test_5xx_exhausts_after_three_attempts(self, fake_server, api_key, monkeypatch):
        monkeypatch.setattr("plotgen.gateway._RETRY_BASE_DELAY", 0.0)
        fake_server.status_plan = [500, 500, 500]
        with pytest.raises(NetworkError):
            chat_complete(LiveBackend(base_url=_base_url(fake_server)), simple_request())
        assert fake_server.post_count == 3

    def test_4xx_never_retries(self, fake_server, api_key):
        fake_server.status_plan = [404]
        with pytest.raises(NetworkError):
            chat_complete(LiveBackend(base_url=_base_url(fake_server)), simple_request())
        assert fake_server.post_count == 1

    def test_401_raises_auth_error(self, fake_server, api_key):
        fake_server.status_plan = [401]
        with pytest.raises(AuthError):
            chat_complete(LiveBackend(base_url=_base_url(fake_server)), simple_request())

    def test_missing_credential_raises_auth_error(self, fake_server, monkeypatch):
        monkeypatch.delenv("PLOTGEN_API_KEY", raising=False)
        with pytest.raises(AuthError):
            chat_complete(LiveBackend(base_url=_base_url(fake_server)), simple_request())
        assert fake_server.post_count == 0

    def test_empty_completion_surfaces(self, fake_server, api_key):
        fake_server.reply_text = ""
        with pytest.raises(EmptyCompletion):
            chat_complete(LiveBackend(base_url=_base_url(fake_server)), simple_request())


class TestValidation:
    def test_empty_messages_rejected(self):
        with pytest.raises(ValueError):
            chat_complete(ReplayBackend(cassette_dir="/tmp"), ChatRequest(model_id="m", messages=()))

    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError):
            chat_complete(
                ReplayBackend(cassette_dir="/tmp"),
                ChatRequest(model_id="m", messages=(ChatMessage.text("user", "x"),), temperature=-1),
            )

    def test_bad_role_rejected(self):
        with pytest.raises(ValueError):
            chat_complete(
                ReplayBackend(cassette_dir="/tmp"),
                ChatRequest(model_id="m", messages=(ChatMessage.text("tool", "x"),)),
            )
