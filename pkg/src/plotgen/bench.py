"""Benchmark harness: load a query/data/ground-truth dataset, run sessions
over it with bounded parallelism, judge each figure against its reference,
and aggregate scores with failures counted as zero.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import PipelineConfig
from .errors import (
    EmptyQuery,
    MissingFile,
    PlotGenError,
    ScoreOutOfRange,
    ScoreParseError,
)
from .executor import is_png
from .gateway import ChatMessage, ChatRequest, ImagePart, TextPart
from .orchestrator import run_session
from .planner import UserRequest

QUERY_FILE = "query.txt"
DATA_FILE = "data.csv"
TRUTH_FILE = "ground_truth.png"

# anchored to line ends only: prose may precede the marker on the same line
_SCORE_RE = re.compile(r"SCORE:\s*(-?\d+)\s*$", re.MULTILINE)


@dataclass(frozen=True)
class BenchmarkItem:
    item_id: str
    query: str
    data_path: Path
    ground_truth_figure: Path


@dataclass(frozen=True)
class JudgeScore:
    value: int
    rationale: str = ""

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 100:
            raise ScoreOutOfRange(self.value)


@dataclass(frozen=True)
class ItemResult:
    item_id: str
    score: JudgeScore | None
    outcome: str  # session outcome, or judge-error


@dataclass(frozen=True)
class BenchSummary:
    mean: float  # already rounded to 2 decimals
    n: int
    n_failures: int
    items: tuple[ItemResult, ...]

    def to_payload(self) -> dict:
        return {
            "mean": self.mean,
            "n": self.n,
            "n_failures": self.n_failures,
            "items": [
                {
                    "id": r.item_id,
                    "score": r.score.value if r.score else 0,
                    "outcome": r.outcome,
                }
                for r in self.items
            ],
        }


def load_benchmark(root: str | Path) -> list[BenchmarkItem]:
    """Scan item subdirectories; malformed items raise rather than vanish."""
    root = Path(root)
    items: list[BenchmarkItem] = []
    if not root.is_dir():
        return items
    for entry in sorted(p for p in root.iterdir() if p.is_dir()):
        item_id = entry.name
        query_path = entry / QUERY_FILE
        data_path = entry / DATA_FILE
        truth_path = entry / TRUTH_FILE
        for path in (query_path, data_path, truth_path):
            if not path.is_file():
                raise MissingFile(item_id, path.name)
        query = query_path.read_text(encoding="utf-8").strip()
        if not query:
            raise EmptyQuery(item_id)
        items.append(
            BenchmarkItem(
                item_id=item_id,
                query=query,
                data_path=data_path,
                ground_truth_figure=truth_path,
            )
        )
    return items


_JUDGE_SYSTEM = (
    "You grade generated charts against a reference chart. Compare the two "
    "attached figures on three dimensions: the plotted data (values and "
    "trends), the textual labels (title, axis labels, ticks, legend), and "
    "the visual style (chart type, colours, layout). Explain briefly, then "
    "end your answer with a final line of the form:\n"
    "SCORE: <integer between 0 and 100>"
)


def judge_figure(
    gateway,
    generated: str | Path,
    ground_truth: str | Path,
    judge_model_id: str,
    *,
    max_output_tokens: int = 1024,
) -> JudgeScore:
    generated = Path(generated)
    ground_truth = Path(ground_truth)
    for path in (generated, ground_truth):
        if not is_png(path):
            raise ValueError(f"judge input is not a decodable PNG: {path}")

    prompt = ChatRequest(
        model_id=judge_model_id,
        messages=(
            ChatMessage.text("system", _JUDGE_SYSTEM),
            ChatMessage(
                role="user",
                parts=(
                    TextPart("First image: the generated chart. Second image: the reference."),
                    ImagePart(generated.read_bytes()),
                    ImagePart(ground_truth.read_bytes()),
                ),
            ),
        ),
        temperature=0.0,
        max_output_tokens=max_output_tokens,
    )
    response = gateway.complete(prompt)
    value = _parse_score(response.text)
    if value is None:
        retry = ChatRequest(
            model_id=prompt.model_id,
            messages=prompt.messages
            + (
                ChatMessage.text("assistant", response.text),
                ChatMessage.text(
                    "user",
                    "Your answer had no SCORE line. Repeat the grade, ending "
                    "with a line of the form SCORE: <integer 0-100>.",
                ),
            ),
            temperature=0.0,
            max_output_tokens=max_output_tokens,
        )
        response = gateway.complete(retry)
        value = _parse_score(response.text)
        if value is None:
            raise ScoreParseError("no SCORE line in judge response after one retry")
    return JudgeScore(value=value, rationale=response.text)


def _parse_score(text: str) -> int | None:
    """Last SCORE line wins; out-of-range values raise immediately."""
    matches = _SCORE_RE.findall(text)
    if not matches:
        return None
    value = int(matches[-1])
    if not 0 <= value <= 100:
        raise ScoreOutOfRange(value)
    return value


def aggregate_scores(results: list[ItemResult]) -> BenchSummary:
    """Failures count as zero; the mean is reported to 2 decimals."""
    values = [r.score.value if r.score else 0 for r in results]
    mean = sum(values) / len(values) if values else 0.0
    return BenchSummary(
        mean=round(mean, 2),
        n=len(results),
        n_failures=sum(1 for r in results if r.score is None),
        items=tuple(results),
    )


def run_benchmark(
    gateway,
    items: list[BenchmarkItem],
    config: PipelineConfig,
    workers: int = 1,
    *,
    out_dir: str | Path,
) -> BenchSummary:
    """Run every item's session plus judging; one bad item never aborts the batch."""
    if not items:
        raise ValueError("benchmark needs at least one item")
    out_dir = Path(out_dir).resolve()
    out_dir.mkdir(parents=True, exist_ok=True)

    def run_item(item: BenchmarkItem) -> ItemResult:
        request = UserRequest(
            id=item.item_id,
            text=item.query,
            data_path=item.data_path.resolve(),
            output_dir=out_dir,
        )
        try:
            result, _ = run_session(gateway, request, config)
        except Exception as exc:  # sessions should not raise; belt and braces
            return ItemResult(item.item_id, None, f"session-error: {exc}")
        if result.figure_path is None:
            return ItemResult(item.item_id, None, result.outcome)
        try:
            score = judge_figure(
                gateway, result.figure_path, item.ground_truth_figure, config.models.judge
            )
        except (PlotGenError, ValueError):
            return ItemResult(item.item_id, None, "judge-error")
        return ItemResult(item.item_id, score, result.outcome)

    if workers <= 1:
        results = [run_item(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_item, items))

    results.sort(key=lambda r: r.item_id)
    return aggregate_scores(results)
