"""Shared test doubles and fixture builders."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from plotgen.gateway import ChatRequest, ChatResponse, replay_key, validate_request

STUB_RUNNER = Path(__file__).parent / "stub_runner.py"


@dataclass
class ScriptedGateway:
    """Pops queued response texts in call order and remembers every request."""

    responses: list[str] = field(default_factory=list)
    calls: list[ChatRequest] = field(default_factory=list)

    def complete(self, request: ChatRequest) -> ChatResponse:
        validate_request(request)
        self.calls.append(request)
        if not self.responses:
            raise AssertionError(
                f"ScriptedGateway ran out of responses at call {len(self.calls)}"
            )
        return ChatResponse(text=self.responses.pop(0))


@dataclass
class RecordingScriptedGateway(ScriptedGateway):
    """Scripted double that also writes each exchange as a replay cassette."""

    cassette_dir: Path | None = None

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = super().complete(request)
        assert self.cassette_dir is not None
        self.cassette_dir.mkdir(parents=True, exist_ok=True)
        key = replay_key(request)
        payload = {
            "request_digest": key,
            "response_text": response.text,
            "prompt_tokens": response.prompt_tokens,
            "completion_tokens": response.completion_tokens,
        }
        (self.cassette_dir / f"{key}.json").write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8"
        )
        return response


def derender_marker(series, title="", axis_labels=None, tick_labels=None, legend=None):
    """Build a '# STUB:DERENDER {...}' line for scripted draft sources."""
    payload = {
        "series": series,
        "title": title,
        "axis_labels": axis_labels or {"x": "", "y": ""},
        "tick_labels": tick_labels or {"x": [], "y": []},
        "legend_entries": legend or [],
        "skipped_artists": 0,
    }
    return "# STUB:DERENDER " + json.dumps(payload)


def write_sales_csv(path: Path) -> Path:
    path.write_text("month,sales\nJan,10\nFeb,20\nMar,30\n", encoding="utf-8")
    return path


# Scripted happy-path flows for the bundled mini benchmark (sorted item order).
MINIBENCH_PAYLOADS = {
    "item01": [{"name": "sales", "x": [1, 2, 3], "y": [10.0, 20.0, 30.0], "kind": "bar"}],
    "item02": [{"name": "temp", "x": [1, 2, 3, 4], "y": [12.0, 15.0, 14.0, 18.0], "kind": "line"}],
    "item03": [{"name": "share", "x": [0, 1, 2], "y": [0.5, 0.3, 0.2], "kind": "pie"}],
}


def minibench_responses(scores=(50, 60, 70)) -> list[str]:
    """Gateway responses for one sequential pass over the three toy items:
    plan, code draft, visual verdict, then the judge grade, per item."""
    out: list[str] = []
    for (item_id, payload), score in zip(MINIBENCH_PAYLOADS.items(), scores):
        out += [
            "STEP 1: load the csv\nSTEP 2: draw the chart",
            "```python\n" + derender_marker(payload) + f"\nplot()  # {item_id}\n```",
            "VERDICT: PASS",
            f"close enough. SCORE: {score}",
        ]
    return out
