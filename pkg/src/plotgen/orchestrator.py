"""Session state machine: plan, generate, execute with bounded self-debug,
then run the feedback agents sequentially, each with its own trial budget.

A session never raises; every failure mode is a terminal state in the
result, and the full event history is written as a JSON-lines trace next
to the drafts and figures it describes.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .codegen import (
    AgentKind,
    CodeDraft,
    FeedbackReport,
    Provenance,
    Verdict,
    build_codegen_prompt,
    extract_code_block,
    repair_from_traceback,
    revise_from_feedback,
)
from .config import PipelineConfig
from .derender import DerenderedPlot
from .errors import PlotGenError
from .executor import ExecConfig, ExecStatus, ExecutionOutcome, execute_draft
from .feedback import (
    ExpectedChartKind,
    NumericCheckConfig,
    derender_via_llm,
    infer_expected_kind,
    lexical_check,
    numeric_check,
    referenced_numeric_columns,
    visual_review,
)
from .planner import UserRequest, VisualizationPlan, make_plan
from .table import DataTable

TRACE_FILENAME = "trace.jsonl"


@dataclass(frozen=True)
class TraceEvent:
    kind: str  # plan_made | draft_created | executed | feedback_issued | session_ended
    data: dict
    ts: float


@dataclass(frozen=True)
class SessionResult:
    outcome: str  # success | plan-failure | code-failure | feedback-exhausted-with-figure
    figure_path: Path | None = None


@dataclass
class SessionTrace:
    session_id: str
    events: list[TraceEvent] = field(default_factory=list)

    @property
    def final_figure(self) -> Path | None:
        data = self._ended_data()
        return Path(data["figure_path"]) if data.get("figure_path") else None

    @property
    def llm_calls(self) -> int:
        return int(self._ended_data().get("llm_calls", 0))

    @property
    def token_totals(self) -> tuple[int, int]:
        data = self._ended_data()
        return int(data.get("prompt_tokens", 0)), int(data.get("completion_tokens", 0))

    def _ended_data(self) -> dict:
        for event in reversed(self.events):
            if event.kind == "session_ended":
                return event.data
        return {}

    def is_complete(self) -> bool:
        return bool(self.events) and self.events[-1].kind == "session_ended"


def persist_trace(trace: SessionTrace, path: str | Path) -> None:
    """One JSON object per event, one per line, UTF-8."""
    assert trace.is_complete(), "trace must end with session_ended"
    lines = []
    for event in trace.events:
        record = {
            "session_id": trace.session_id,
            "kind": event.kind,
            "ts": event.ts,
            "data": event.data,
        }
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_trace(path: str | Path) -> SessionTrace:
    events: list[TraceEvent] = []
    session_id = ""
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        session_id = record["session_id"]
        events.append(TraceEvent(kind=record["kind"], data=record["data"], ts=record["ts"]))
    return SessionTrace(session_id=session_id, events=events)


class _CountingGateway:
    """Tallies calls and token usage on behalf of the trace."""

    def __init__(self, inner):
        self.inner = inner
        self.calls = 0
        self.prompt_tokens = 0
        self.completion_tokens = 0

    def complete(self, request):
        response = self.inner.complete(request)
        self.calls += 1
        self.prompt_tokens += response.prompt_tokens
        self.completion_tokens += response.completion_tokens
        return response


class _Recorder:
    def __init__(self, session_id: str):
        self.trace = SessionTrace(session_id=session_id)

    def add(self, kind: str, **data) -> None:
        self.trace.events.append(TraceEvent(kind=kind, data=data, ts=time.time()))

    def draft(self, draft: CodeDraft) -> None:
        self.add("draft_created", version=draft.version, provenance=draft.provenance.describe())

    def executed(self, draft: CodeDraft, outcome: ExecutionOutcome) -> None:
        self.add(
            "executed",
            version=draft.version,
            status=outcome.status.value,
            wall_time=round(outcome.wall_time, 6),
        )

    def feedback(self, report: FeedbackReport) -> None:
        self.add(
            "feedback_issued",
            agent_kind=report.agent_kind.value,
            verdict=report.verdict.value,
            iteration=report.iteration,
            message=report.message,
        )


@dataclass
class _Session:
    """Mutable state threaded through one run_session call."""

    gateway: _CountingGateway
    request: UserRequest
    config: PipelineConfig
    recorder: _Recorder
    exec_config: ExecConfig
    table: DataTable | None = None
    plan: VisualizationPlan | None = None
    next_version: int = 1

    def new_draft(self, source: str, provenance: Provenance) -> CodeDraft:
        draft = CodeDraft(version=self.next_version, source=source, provenance=provenance)
        self.next_version += 1
        return draft

    def execute(self, draft: CodeDraft) -> ExecutionOutcome:
        outcome = execute_draft(draft, self.request, self.exec_config)
        self.recorder.executed(draft, outcome)
        return outcome


def run_session(
    gateway, request: UserRequest, config: PipelineConfig
) -> tuple[SessionResult, SessionTrace]:
    session_id = config.session_id or request.id
    session_dir = Path(request.output_dir) / session_id
    session_dir.mkdir(parents=True, exist_ok=True)

    counting = _CountingGateway(gateway)
    recorder = _Recorder(session_id)
    state = _Session(
        gateway=counting,
        request=request,
        config=config,
        recorder=recorder,
        exec_config=ExecConfig(
            workdir=session_dir,
            runner_cmd=config.runner_cmd,
            time_limit=config.time_limit,
            derender=config.derender_mode == "programmatic",
        ),
    )

    result = _run_state_machine(state)
    recorder.add(
        "session_ended",
        outcome=result.outcome,
        figure_path=str(result.figure_path) if result.figure_path else None,
        llm_calls=counting.calls,
        prompt_tokens=counting.prompt_tokens,
        completion_tokens=counting.completion_tokens,
    )
    persist_trace(recorder.trace, session_dir / TRACE_FILENAME)
    return result, recorder.trace


def _run_state_machine(state: _Session) -> SessionResult:
    recorder = state.recorder

    # 1. Plan.
    try:
        state.table = DataTable.from_csv(state.request.data_path)
        state.plan = make_plan(state.gateway, state.request, state.table, state.config)
    except PlotGenError as exc:
        recorder.add("plan_made", ok=False, error=str(exc))
        return SessionResult(outcome="plan-failure")
    recorder.add(
        "plan_made",
        ok=True,
        steps=list(state.plan.steps),
        data_note=state.plan.data_note,
        visual_notes=list(state.plan.visual_notes),
    )

    # 2. Initial draft plus its debug loop.
    try:
        prompt = build_codegen_prompt(
            state.plan,
            state.request,
            state.table,
            model_id=state.config.models.codegen,
            max_output_tokens=state.config.max_output_tokens,
        )
        source = extract_code_block(state.gateway.complete(prompt).text)
    except PlotGenError:
        return SessionResult(outcome="code-failure")
    draft = state.new_draft(source, Provenance.initial())
    recorder.draft(draft)
    draft, outcome = _debug_loop(state, draft)
    if outcome.status is not ExecStatus.SUCCESS:
        return SessionResult(outcome="code-failure")

    # 3. Sequential feedback loops with per-agent budgets.
    all_passed = True
    for agent in state.config.agent_order:
        passed, draft, outcome = _feedback_loop(state, agent, draft, outcome)
        all_passed = all_passed and passed

    outcome_name = "success" if all_passed else "feedback-exhausted-with-figure"
    return SessionResult(outcome=outcome_name, figure_path=outcome.figure_path)


def _debug_loop(state: _Session, draft: CodeDraft) -> tuple[CodeDraft, ExecutionOutcome]:
    """Execute a draft, repairing from the traceback until the budget runs out."""
    outcome = state.execute(draft)
    repairs = 0
    while outcome.status is not ExecStatus.SUCCESS and repairs < state.config.max_debug_iterations:
        try:
            draft = repair_from_traceback(
                state.gateway, draft, outcome.traceback or "(no traceback captured)", state.config
            )
        except PlotGenError:
            break
        draft = state.new_draft(draft.source, draft.provenance)  # renumber into session order
        state.recorder.draft(draft)
        outcome = state.execute(draft)
        repairs += 1
    return draft, outcome


def _feedback_loop(
    state: _Session,
    agent: AgentKind,
    draft: CodeDraft,
    outcome: ExecutionOutcome,
) -> tuple[bool, CodeDraft, ExecutionOutcome]:
    """One agent's verify-revise loop. Returns (last verdict was pass, draft, outcome).

    A revision whose execution cannot be repaired rolls back to the last
    good draft and figure; the failed attempts stay in the trace.
    """
    last_pass = False
    for iteration in range(1, state.config.max_feedback_iterations + 1):
        try:
            report = _verify(state, agent, outcome, iteration)
        except PlotGenError as exc:
            report = FeedbackReport(
                agent_kind=agent,
                verdict=Verdict.FAIL,
                message=f"verifier error: {exc}",
                iteration=iteration,
            )
            state.recorder.feedback(report)
            break  # not actionable code feedback; keep the figure and move on
        state.recorder.feedback(report)
        if report.verdict is Verdict.PASS:
            last_pass = True
            break

        try:
            revised = revise_from_feedback(state.gateway, draft, report, state.config)
        except PlotGenError:
            break
        revised = state.new_draft(revised.source, revised.provenance)
        state.recorder.draft(revised)
        revised, revised_outcome = _debug_loop(state, revised)
        if revised_outcome.status is ExecStatus.SUCCESS:
            draft, outcome = revised, revised_outcome
        else:
            break  # roll back to the previous good draft and figure
    return last_pass, draft, outcome


def _verify(
    state: _Session, agent: AgentKind, outcome: ExecutionOutcome, iteration: int
) -> FeedbackReport:
    assert state.plan is not None and state.table is not None
    if agent is AgentKind.VISUAL:
        return visual_review(
            state.gateway,
            outcome.figure_path,
            state.request,
            iteration,
            state.config,
            visual_notes=state.plan.visual_notes,
        )

    derendered = _derendered_for_checks(state, outcome)
    if agent is AgentKind.NUMERIC:
        expected: ExpectedChartKind = infer_expected_kind(state.request.text)
        check_config = NumericCheckConfig(
            threshold=state.config.numeric_trend_threshold,
            required_columns=tuple(referenced_numeric_columns(state.table, state.plan)),
        )
        return numeric_check(
            derendered, state.table, expected, check_config, iteration=iteration
        )
    return lexical_check(
        derendered, state.request, state.table, state.plan, iteration=iteration
    )


def _derendered_for_checks(state: _Session, outcome: ExecutionOutcome) -> DerenderedPlot:
    if state.config.derender_mode == "multimodal":
        return derender_via_llm(state.gateway, outcome.figure_path, state.config)
    if outcome.derendered is None:
        return DerenderedPlot()
    return outcome.derendered
