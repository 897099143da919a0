"""Code generation and revision: plan to program, traceback and feedback fixes.

Every prompt embeds the complete current source and asks for a whole
replacement program in a single fenced code block; the pipeline never
applies diffs, it re-executes full drafts.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyCode
from .gateway import DEFAULT_MAX_OUTPUT_TOKENS, ChatMessage, ChatRequest
from .planner import UserRequest, VisualizationPlan, render_plan
from .table import DataTable, render_rows


class AgentKind(str, enum.Enum):
    NUMERIC = "numeric"
    LEXICAL = "lexical"
    VISUAL = "visual"
    DEBUG = "debug"


class Verdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"


@dataclass(frozen=True)
class Provenance:
    kind: str  # "initial" | "debug_fix" | "feedback_fix"
    agent_kind: AgentKind | None = None
    iteration: int | None = None

    @classmethod
    def initial(cls) -> "Provenance":
        return cls(kind="initial")

    @classmethod
    def debug_fix(cls, iteration: int) -> "Provenance":
        return cls(kind="debug_fix", agent_kind=AgentKind.DEBUG, iteration=iteration)

    @classmethod
    def feedback_fix(cls, agent_kind: AgentKind, iteration: int) -> "Provenance":
        return cls(kind="feedback_fix", agent_kind=agent_kind, iteration=iteration)

    def describe(self) -> str:
        if self.kind == "initial":
            return "initial"
        if self.kind == "debug_fix":
            return f"debug_fix#{self.iteration}"
        return f"feedback_fix:{self.agent_kind.value}#{self.iteration}"


@dataclass(frozen=True)
class CodeDraft:
    version: int
    source: str
    provenance: Provenance

    def __post_init__(self) -> None:
        if self.version < 1:
            raise ValueError("draft versions are 1-based")
        if not self.source.strip():
            raise ValueError("draft source must be non-empty")


@dataclass(frozen=True)
class FeedbackReport:
    agent_kind: AgentKind
    verdict: Verdict
    message: str
    iteration: int

    def __post_init__(self) -> None:
        if self.verdict is Verdict.FAIL and not self.message.strip():
            raise ValueError("fail reports must carry a message")


_CODE_SYSTEM = (
    "You are a senior Python data-visualization engineer. Write a complete, "
    "self-contained matplotlib program that follows the given plan exactly. "
    "The program must read the data from the given file path, never invent "
    "data, never call plt.show(), and save the figure with savefig(). "
    "Respond with exactly one fenced code block and nothing else."
)

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


def figure_hint_path(request: UserRequest) -> Path:
    """Save path advertised to the generated program."""
    return Path(request.output_dir) / "figure.png"


def build_codegen_prompt(
    plan: VisualizationPlan,
    request: UserRequest,
    table: DataTable,
    *,
    model_id: str = "gpt-4",
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
) -> ChatRequest:
    sample = render_rows(table, min(5, table.n_rows))
    user = (
        f"Plan to implement, in order:\n{render_plan(plan)}\n\n"
        f"Original user request:\n{request.text}\n\n"
        f"Data file (CSV) at this exact path: {request.data_path}\n"
        f"First rows:\n{sample}\n\n"
        f"Save the figure to this exact path: {figure_hint_path(request)}\n"
        "Emit exactly one fenced code block containing the whole program."
    )
    return ChatRequest(
        model_id=model_id,
        messages=(
            ChatMessage.text("system", _CODE_SYSTEM),
            ChatMessage.text("user", user),
        ),
        temperature=0.0,
        max_output_tokens=max_output_tokens,
    )


def extract_code_block(llm_text: str) -> str:
    """First fenced block if any, else the whole text trimmed."""
    m = _FENCE_RE.search(llm_text)
    if m:
        code = m.group(1).strip("\n").rstrip()
    else:
        code = llm_text.strip()
    if not code.strip():
        raise EmptyCode("model response contained no code")
    return code


def _next_debug_iteration(draft: CodeDraft) -> int:
    # Numbering restarts with every fresh debug loop: a repair directly
    # after another repair continues the count, anything else starts at 1.
    if draft.provenance.kind == "debug_fix":
        return (draft.provenance.iteration or 0) + 1
    return 1


def repair_from_traceback(gateway, draft: CodeDraft, traceback: str, config) -> CodeDraft:
    if not traceback.strip():
        raise ValueError("traceback must be non-empty")
    user = (
        "The following program failed to execute.\n\n"
        f"Program:\n```python\n{draft.source}\n```\n\n"
        f"Error output:\n{traceback}\n\n"
        "Fix the error and return the COMPLETE corrected program (not a "
        "diff) in exactly one fenced code block."
    )
    prompt = ChatRequest(
        model_id=config.models.codegen,
        messages=(
            ChatMessage.text("system", _CODE_SYSTEM),
            ChatMessage.text("user", user),
        ),
        temperature=0.0,
        max_output_tokens=config.max_output_tokens,
    )
    source = extract_code_block(gateway.complete(prompt).text)
    return CodeDraft(
        version=draft.version + 1,
        source=source,
        provenance=Provenance.debug_fix(_next_debug_iteration(draft)),
    )


def revise_from_feedback(gateway, draft: CodeDraft, report: FeedbackReport, config) -> CodeDraft:
    assert report.verdict is Verdict.FAIL, "only fail reports trigger revision"
    user = (
        "The following program runs, but its figure was rejected by the "
        f"{report.agent_kind.value} reviewer.\n\n"
        f"Program:\n```python\n{draft.source}\n```\n\n"
        f"Reviewer feedback:\n{report.message}\n\n"
        "Change ONLY what the feedback requires, keep everything else as "
        "is, and return the COMPLETE revised program in exactly one fenced "
        "code block."
    )
    prompt = ChatRequest(
        model_id=config.models.codegen,
        messages=(
            ChatMessage.text("system", _CODE_SYSTEM),
            ChatMessage.text("user", user),
        ),
        temperature=0.0,
        max_output_tokens=config.max_output_tokens,
    )
    source = extract_code_block(gateway.complete(prompt).text)
    return CodeDraft(
        version=draft.version + 1,
        source=source,
        provenance=Provenance.feedback_fix(report.agent_kind, report.iteration),
    )
