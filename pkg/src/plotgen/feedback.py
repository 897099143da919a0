"""Numeric, lexical, and visual verification of a draft figure.

The numeric and lexical agents are deterministic: they compare plot data
read back from the figure against the source table and the request text.
The visual agent has no deterministic proxy for aesthetics and always asks
a multimodal model, which must answer in a structured VERDICT grammar.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .codegen import AgentKind, FeedbackReport, Verdict
from .derender import DerenderedPlot, SeriesKind
from .errors import DerenderParseError, LengthMismatch, TooShort, VerdictParseError
from .gateway import ChatMessage, ChatRequest, ImagePart, TextPart
from .planner import UserRequest, VisualizationPlan
from .table import DataTable

DEFAULT_TREND_THRESHOLD = 0.8

_VERDICT_RE = re.compile(r"^\s*VERDICT:\s*(PASS|FAIL)\s*$", re.IGNORECASE)
_FEEDBACK_RE = re.compile(r"^\s*FEEDBACK:\s*(.*)$", re.IGNORECASE)

# Keyword scan runs in priority order; the first family that matches wins.
_KIND_PATTERNS: tuple[tuple[SeriesKind, re.Pattern], ...] = (
    (SeriesKind.HEATMAP, re.compile(r"\bheat[\s-]?map\b", re.IGNORECASE)),
    (SeriesKind.SCATTER, re.compile(r"\bscatter(?:[\s-]?(?:plot|chart|graph))?\b", re.IGNORECASE)),
    (SeriesKind.PIE, re.compile(r"\bpie(?:[\s-]?(?:chart|plot|graph))?\b", re.IGNORECASE)),
    (SeriesKind.BAR, re.compile(r"\b(?:bar|histogram)(?:[\s-]?(?:chart|plot|graph))?s?\b", re.IGNORECASE)),
    (SeriesKind.LINE, re.compile(r"\bline(?:[\s-]?(?:chart|plot|graph))?s?\b", re.IGNORECASE)),
)


@dataclass(frozen=True)
class ExpectedChartKind:
    kind: SeriesKind | None  # None means unspecified
    evidence: str = ""

    def __post_init__(self) -> None:
        if self.kind is None and self.evidence:
            raise ValueError("unspecified kind must carry no evidence")


@dataclass(frozen=True)
class TrendCheckResult:
    matched_pairs: tuple[tuple[str, str, float], ...]  # (column, series, rho)
    unmatched_columns: tuple[str, ...]

    @property
    def min_correlation(self) -> float:
        if not self.matched_pairs:
            return 0.0
        return min(rho for _, _, rho in self.matched_pairs)


def _average_ranks(values: Sequence[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def _pearson(a: Sequence[float], b: Sequence[float]) -> float:
    n = len(a)
    mean_a = sum(a) / n
    mean_b = sum(b) / n
    cov = sum((x - mean_a) * (y - mean_b) for x, y in zip(a, b))
    var_a = sum((x - mean_a) ** 2 for x in a)
    var_b = sum((y - mean_b) ** 2 for y in b)
    if var_a == 0.0 or var_b == 0.0:
        return 0.0
    return cov / math.sqrt(var_a * var_b)


def spearman_rank_correlation(a: Sequence[float], b: Sequence[float]) -> float:
    """Pearson correlation of average-ranked values; 0 for constant input.

    Ties receive the mean of the ranks they span.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"length {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise TooShort("need at least two points")
    return _pearson(_average_ranks(a), _average_ranks(b))


def infer_expected_kind(request_text: str) -> ExpectedChartKind:
    for kind, pattern in _KIND_PATTERNS:
        m = pattern.search(request_text)
        if m:
            return ExpectedChartKind(kind=kind, evidence=m.group(0))
    return ExpectedChartKind(kind=None)


def referenced_numeric_columns(table: DataTable, plan: VisualizationPlan | None) -> list[str]:
    """Numeric columns the plan talks about; all of them when it names none."""
    numeric = list(table.numeric_columns())
    if plan is None:
        return numeric
    text = "\n".join((*plan.steps, plan.data_note, *plan.visual_notes)).lower()
    named = [c for c in numeric if c.lower() in text]
    return named or numeric


@dataclass(frozen=True)
class NumericCheckConfig:
    threshold: float = DEFAULT_TREND_THRESHOLD
    required_columns: tuple[str, ...] | None = None  # None: every numeric column


def numeric_check(
    derendered: DerenderedPlot,
    table: DataTable,
    expected: ExpectedChartKind,
    config: NumericCheckConfig = NumericCheckConfig(),
    *,
    iteration: int = 1,
) -> FeedbackReport:
    """Match table columns to plotted series by rank correlation.

    Passes only when every required column finds a series with correlation
    at or above the threshold AND the observed chart kind honours the
    user's stated expectation.
    """
    if not derendered.series:
        return FeedbackReport(
            agent_kind=AgentKind.NUMERIC,
            verdict=Verdict.FAIL,
            message="the figure contains no readable data series; plot the table data",
            iteration=iteration,
        )

    numeric = table.numeric_columns()
    if config.required_columns is None:
        required = set(numeric)
    else:
        required = {c for c in config.required_columns if c in numeric}

    # Matching runs over every numeric column; only the required ones gate
    # the verdict. Worst pairs are reported first.
    result = _match_columns(list(numeric), numeric, derendered)
    bad_pairs = sorted(
        (
            (rho, column, series_name)
            for column, series_name, rho in result.matched_pairs
            if column in required and rho < config.threshold
        ),
    )
    problems: list[str] = [
        f"column {column!r} best matches series {series_name!r} with rank "
        f"correlation {rho:.3f}, below the {config.threshold:g} threshold; "
        "the plotted values do not follow the table"
        for rho, column, series_name in bad_pairs
    ]
    for column in result.unmatched_columns:
        if column in required:
            problems.append(
                f"column {column!r} matches no plotted series; plot it from the table"
            )

    observed_kinds = {s.kind for s in derendered.series}
    if expected.kind is not None and expected.kind not in observed_kinds:
        observed = ", ".join(sorted(k.value for k in observed_kinds))
        problems.append(
            f"the request asks for a {expected.kind.value} chart "
            f"(\"{expected.evidence}\") but the figure shows: {observed}"
        )

    if problems:
        return FeedbackReport(
            agent_kind=AgentKind.NUMERIC,
            verdict=Verdict.FAIL,
            message="; ".join(problems),
            iteration=iteration,
        )
    return FeedbackReport(
        agent_kind=AgentKind.NUMERIC,
        verdict=Verdict.PASS,
        message="",
        iteration=iteration,
    )


def _match_columns(
    required: Sequence[str],
    numeric: dict[str, list[float]],
    derendered: DerenderedPlot,
) -> TrendCheckResult:
    """Greedy matching: columns in table order each take the unclaimed
    series they correlate with best."""
    available = list(range(len(derendered.series)))
    matched: list[tuple[str, str, float]] = []
    unmatched: list[str] = []
    for column in required:
        values = numeric[column]
        best_idx: int | None = None
        best_rho = -math.inf
        for idx in available:
            series = derendered.series[idx]
            if len(series.y) != len(values) or len(values) < 2:
                continue
            rho = spearman_rank_correlation(values, list(series.y))
            if rho > best_rho:
                best_rho = rho
                best_idx = idx
        if best_idx is None:
            unmatched.append(column)
            continue
        available.remove(best_idx)
        series = derendered.series[best_idx]
        label = series.name or f"series #{best_idx + 1}"
        matched.append((column, label, best_rho))
    return TrendCheckResult(matched_pairs=tuple(matched), unmatched_columns=tuple(unmatched))


# --- lexical ----------------------------------------------------------------

_QUOTED_RE = re.compile(r"\"([^\"\n]+)\"|'([^'\n]+)'")
_AXIS_WORD_RE = re.compile(r"\baxis\b|\bax[ei]s\b|[xy]-axis", re.IGNORECASE)


def normalize_label(text: str) -> str:
    """Case-fold, trim, and collapse internal whitespace."""
    return " ".join(text.split()).casefold()


def _quoted_literals(text: str) -> list[str]:
    out = []
    for m in _QUOTED_RE.finditer(text):
        literal = m.group(1) or m.group(2)
        if literal and literal.strip():
            out.append(literal.strip())
    return out


def _axis_mapped_columns(table: DataTable, plan: VisualizationPlan | None) -> list[str]:
    """Columns a plan line pairs with an axis mention."""
    if plan is None:
        return []
    mapped = []
    lines = [*plan.steps, plan.data_note, *plan.visual_notes]
    for column in table.columns:
        needle = column.casefold()
        for line in lines:
            if needle in line.casefold() and _AXIS_WORD_RE.search(line):
                mapped.append(column)
                break
    return mapped


def lexical_check(
    derendered: DerenderedPlot,
    request: UserRequest,
    table: DataTable,
    plan: VisualizationPlan | None = None,
    *,
    iteration: int = 1,
) -> FeedbackReport:
    """Every required string must appear (normalized, substring) in some
    figure label: title, axis labels, tick labels, or legend entries."""
    required: list[tuple[str, str]] = [
        (lit, "quoted in the request") for lit in _quoted_literals(request.text)
    ]
    required += [
        (col, "mapped to an axis by the plan")
        for col in _axis_mapped_columns(table, plan)
    ]

    labels = [normalize_label(lbl) for lbl in derendered.all_labels() if lbl.strip()]
    missing = []
    for text, origin in required:
        needle = normalize_label(text)
        if not any(needle in label for label in labels):
            missing.append(f"{text!r} ({origin})")

    if missing:
        return FeedbackReport(
            agent_kind=AgentKind.LEXICAL,
            verdict=Verdict.FAIL,
            message=(
                "these required strings appear in none of the figure labels "
                "(title, axis labels, tick labels, legend): " + ", ".join(missing)
            ),
            iteration=iteration,
        )
    return FeedbackReport(
        agent_kind=AgentKind.LEXICAL,
        verdict=Verdict.PASS,
        message="",
        iteration=iteration,
    )


# --- visual -----------------------------------------------------------------

_VISUAL_SYSTEM = (
    "You are a meticulous chart reviewer. Inspect the attached figure the "
    "way a reader would: colours, layout, placement and overlap of chart "
    "entities, legibility, and overall polish, judged against the user's "
    "stated wishes. Answer in EXACTLY this format:\n"
    "VERDICT: PASS or VERDICT: FAIL\n"
    "FEEDBACK: <one concrete, actionable issue per FEEDBACK line; only on FAIL>"
)


def parse_feedback_verdict(llm_text: str) -> tuple[Verdict, str]:
    verdict: Verdict | None = None
    feedback: list[str] = []
    for line in llm_text.splitlines():
        if verdict is None:
            m = _VERDICT_RE.match(line)
            if m:
                verdict = Verdict.PASS if m.group(1).upper() == "PASS" else Verdict.FAIL
                continue
        m = _FEEDBACK_RE.match(line)
        if m:
            feedback.append(m.group(1).strip())
    if verdict is None:
        raise VerdictParseError("no VERDICT line in response")
    message = "\n".join(feedback)
    if verdict is Verdict.FAIL and not message.strip():
        message = "unspecified visual issue"
    return verdict, message


def visual_review(
    gateway,
    figure_path: str | Path,
    request: UserRequest,
    iteration: int,
    config,
    visual_notes: Sequence[str] = (),
) -> FeedbackReport:
    figure_bytes = Path(figure_path).read_bytes()
    wishes = "\n".join(f"- {note}" for note in visual_notes) or "- (none stated)"
    user_text = (
        f"Original request:\n{request.text}\n\n"
        f"Stated visual requirements:\n{wishes}\n\n"
        "Review the attached draft figure."
    )
    prompt = ChatRequest(
        model_id=config.models.feedback,
        messages=(
            ChatMessage.text("system", _VISUAL_SYSTEM),
            ChatMessage(
                role="user",
                parts=(TextPart(user_text), ImagePart(figure_bytes)),
            ),
        ),
        temperature=0.0,
        max_output_tokens=config.max_output_tokens,
    )
    response = gateway.complete(prompt)
    try:
        verdict, message = parse_feedback_verdict(response.text)
    except VerdictParseError:
        retry = ChatRequest(
            model_id=prompt.model_id,
            messages=prompt.messages
            + (
                ChatMessage.text("assistant", response.text),
                ChatMessage.text(
                    "user",
                    "Your answer had no VERDICT line. Repeat it in EXACTLY "
                    "the required format, starting with VERDICT: PASS or "
                    "VERDICT: FAIL.",
                ),
            ),
            temperature=0.0,
            max_output_tokens=prompt.max_output_tokens,
        )
        verdict, message = parse_feedback_verdict(gateway.complete(retry).text)
    return FeedbackReport(
        agent_kind=AgentKind.VISUAL,
        verdict=verdict,
        message=message,
        iteration=iteration,
    )


# --- multimodal de-rendering (optional replacement for runner introspection) -

_DERENDER_SYSTEM = (
    "You read charts. Extract the plotted data and labels from the attached "
    "figure and answer ONLY with a JSON object of this exact shape:\n"
    '{"series": [{"name": str, "x": [number|string, ...], "y": [number, ...],'
    ' "kind": "line"|"bar"|"scatter"|"pie"|"heatmap"|"other"}],'
    ' "title": str, "axis_labels": {"x": str, "y": str},'
    ' "tick_labels": {"x": [str, ...], "y": [str, ...]},'
    ' "legend_entries": [str, ...]}'
)

_JSON_BLOCK_RE = re.compile(r"\{.*\}", re.DOTALL)


def derender_via_llm(gateway, figure_path: str | Path, config) -> DerenderedPlot:
    """Ask a multimodal model to read the chart back into plot data."""
    figure_bytes = Path(figure_path).read_bytes()
    prompt = ChatRequest(
        model_id=config.models.feedback,
        messages=(
            ChatMessage.text("system", _DERENDER_SYSTEM),
            ChatMessage(role="user", parts=(TextPart("Extract this chart."), ImagePart(figure_bytes))),
        ),
        temperature=0.0,
        max_output_tokens=config.max_output_tokens,
    )
    response = gateway.complete(prompt)
    try:
        return _parse_derender_response(response.text)
    except DerenderParseError as exc:
        retry = ChatRequest(
            model_id=prompt.model_id,
            messages=prompt.messages
            + (
                ChatMessage.text("assistant", response.text),
                ChatMessage.text(
                    "user",
                    f"That answer was not valid plot-data JSON ({exc}). "
                    "Answer again with ONLY the JSON object.",
                ),
            ),
            temperature=0.0,
            max_output_tokens=prompt.max_output_tokens,
        )
        return _parse_derender_response(gateway.complete(retry).text)


def _parse_derender_response(text: str) -> DerenderedPlot:
    m = _JSON_BLOCK_RE.search(text)
    if not m:
        raise DerenderParseError("no JSON object in response")
    try:
        payload = json.loads(m.group(0))
    except json.JSONDecodeError as exc:
        raise DerenderParseError(f"invalid JSON: {exc}") from exc
    try:
        return DerenderedPlot.from_payload(payload)
    except Exception as exc:
        raise DerenderParseError(str(exc)) from exc
