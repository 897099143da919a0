"""plotgen: multi-agent pipeline from natural-language request to verified figure."""

from .bench import BenchmarkItem, BenchSummary, JudgeScore, aggregate_scores, judge_figure, load_benchmark, run_benchmark
from .codegen import AgentKind, CodeDraft, FeedbackReport, Provenance, Verdict
from .config import CliConfig, ModelRoles, PipelineConfig, resolve_config
from .derender import DerenderedPlot, Series, SeriesKind
from .executor import ExecConfig, ExecStatus, ExecutionOutcome, execute_draft
from .gateway import (
    Backend,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    Gateway,
    ImagePart,
    LiveBackend,
    RecordBackend,
    ReplayBackend,
    TextPart,
    chat_complete,
    replay_key,
)
from .orchestrator import SessionResult, SessionTrace, load_trace, persist_trace, run_session
from .planner import UserRequest, VisualizationPlan, make_plan, parse_plan, render_plan
from .table import DataTable

__version__ = "0.1.0"

__all__ = [
    "AgentKind",
    "Backend",
    "BenchSummary",
    "BenchmarkItem",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "CliConfig",
    "CodeDraft",
    "DataTable",
    "DerenderedPlot",
    "ExecConfig",
    "ExecStatus",
    "ExecutionOutcome",
    "FeedbackReport",
    "Gateway",
    "ImagePart",
    "JudgeScore",
    "LiveBackend",
    "ModelRoles",
    "PipelineConfig",
    "Provenance",
    "RecordBackend",
    "ReplayBackend",
    "Series",
    "SeriesKind",
    "SessionResult",
    "SessionTrace",
    "TextPart",
    "UserRequest",
    "Verdict",
    "VisualizationPlan",
    "aggregate_scores",
    "chat_complete",
    "execute_draft",
    "judge_figure",
    "load_benchmark",
    "load_trace",
    "make_plan",
    "parse_plan",
    "persist_trace",
    "render_plan",
    "replay_key",
    "resolve_config",
    "run_benchmark",
    "run_session",
]
