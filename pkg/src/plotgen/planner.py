"""Query planning: decompose a plotting request into ordered executable steps.

The plan travels in a deliberately trivial line grammar so that it can be
parsed without ambiguity and re-rendered verbatim for the code generator:

    STEP 1: <instruction>
    STEP 2: <instruction>
    DATA: <data file and format note>
    VISUAL: <one aesthetic requirement>

Any other line in the model output is ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import PlanParseError
from .gateway import DEFAULT_MAX_OUTPUT_TOKENS, ChatMessage, ChatRequest
from .table import DataTable, render_rows

PLAN_SAMPLE_ROWS = 5
LANGUAGE_TAG = "python"

_STEP_RE = re.compile(r"^\s*STEP\s+(\d+)\s*:\s*(.*)$")
_DATA_RE = re.compile(r"^\s*DATA\s*:\s*(.*)$")
_VISUAL_RE = re.compile(r"^\s*VISUAL\s*:\s*(.*)$")


@dataclass(frozen=True)
class UserRequest:
    id: str
    text: str
    data_path: Path
    output_dir: Path

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("request text must be non-empty")


@dataclass(frozen=True)
class VisualizationPlan:
    steps: tuple[str, ...]
    data_note: str = ""
    visual_notes: tuple[str, ...] = ()
    language_tag: str = LANGUAGE_TAG

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("plan must contain at least one step")
        if any(not s.strip() for s in self.steps):
            raise ValueError("plan steps must be non-empty")


_PLAN_SYSTEM = (
    "You are a data-visualization planning assistant. Decompose the user's "
    "plotting request into a short, ordered sequence of concrete steps that "
    "a Python matplotlib programmer can execute one by one. Reason through "
    "the request step by step, covering the data to load, the chart type, "
    "the values mapped to each axis, and every labelling or styling "
    "requirement, then answer ONLY in the required output format."
)

_PLAN_FORMAT = (
    "Required output format (one item per line, nothing else):\n"
    "STEP 1: <first instruction>\n"
    "STEP 2: <next instruction>\n"
    "...\n"
    "DATA: <one line restating the data file name and its format>\n"
    "VISUAL: <one aesthetic requirement stated by the user, if any; "
    "repeat the VISUAL line for each requirement>"
)


def build_plan_prompt(
    request: UserRequest,
    table: DataTable,
    *,
    model_id: str = "gpt-4",
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
) -> ChatRequest:
    sample = render_rows(table, min(PLAN_SAMPLE_ROWS, table.n_rows))
    user = (
        f"User request:\n{request.text}\n\n"
        f"Data file: {Path(request.data_path).name} (CSV)\n"
        f"Columns: {', '.join(table.columns)}\n"
        f"First rows:\n{sample}\n\n"
        f"{_PLAN_FORMAT}"
    )
    return ChatRequest(
        model_id=model_id,
        messages=(
            ChatMessage.text("system", _PLAN_SYSTEM),
            ChatMessage.text("user", user),
        ),
        temperature=0.0,
        max_output_tokens=max_output_tokens,
    )


def parse_plan(llm_text: str) -> VisualizationPlan:
    steps: list[str] = []
    numbers: list[int] = []
    data_note = ""
    visual_notes: list[str] = []
    for line in llm_text.splitlines():
        m = _STEP_RE.match(line)
        if m:
            numbers.append(int(m.group(1)))
            steps.append(m.group(2).strip())
            continue
        m = _DATA_RE.match(line)
        if m and not data_note:
            data_note = m.group(1).strip()
            continue
        m = _VISUAL_RE.match(line)
        if m and m.group(1).strip():
            visual_notes.append(m.group(1).strip())

    if not steps:
        raise PlanParseError("no STEP lines found")
    if numbers != list(range(1, len(numbers) + 1)):
        raise PlanParseError(f"step numbering must be 1..{len(numbers)}, got {numbers}")
    if any(not s for s in steps):
        bad = numbers[steps.index("")]
        raise PlanParseError(f"STEP {bad} has an empty instruction")
    return VisualizationPlan(
        steps=tuple(steps),
        data_note=data_note,
        visual_notes=tuple(visual_notes),
    )


def render_plan(plan: VisualizationPlan) -> str:
    """Inverse of parse_plan on (steps, visual-notes)."""
    lines = [f"STEP {i}: {step}" for i, step in enumerate(plan.steps, start=1)]
    if plan.data_note:
        lines.append(f"DATA: {plan.data_note}")
    lines.extend(f"VISUAL: {note}" for note in plan.visual_notes)
    return "\n".join(lines)


def make_plan(gateway, request: UserRequest, table: DataTable, config) -> VisualizationPlan:
    """Plan via one model call, with a single re-prompt on a parse failure."""
    prompt = build_plan_prompt(
        request,
        table,
        model_id=config.models.planner,
        max_output_tokens=config.max_output_tokens,
    )
    response = gateway.complete(prompt)
    try:
        return parse_plan(response.text)
    except PlanParseError as exc:
        retry = ChatRequest(
            model_id=prompt.model_id,
            messages=prompt.messages
            + (
                ChatMessage.text("assistant", response.text),
                ChatMessage.text(
                    "user",
                    f"That answer could not be parsed: {exc}. "
                    "Answer again using EXACTLY the required output format.",
                ),
            ),
            temperature=prompt.temperature,
            max_output_tokens=prompt.max_output_tokens,
        )
        return parse_plan(gateway.complete(retry).text)
