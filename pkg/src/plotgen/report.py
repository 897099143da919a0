"""Benchmark report rendering: summary table, per-item CSV, score figures.

``write_report`` drops four artifacts into the output directory:
``summary.json`` (machine-readable), ``scores.csv`` (delimited per-item
results), ``scores.png`` (per-item score chart), and ``report.md`` holding
the human-readable tables. When baseline means are supplied, the report
also carries a method-by-backbone comparison table and chart.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping

from matplotlib.figure import Figure

from .bench import BenchSummary

# Mean scores per method (rows) and code-model backbone (columns).
ComparisonScores = Mapping[str, Mapping[str, float]]

SUMMARY_JSON = "summary.json"
SCORES_CSV = "scores.csv"
SCORES_PNG = "scores.png"
COMPARISON_PNG = "comparison.png"
REPORT_MD = "report.md"


def render_summary_table(summary: BenchSummary) -> str:
    lines = [
        f"items: {summary.n}    failures: {summary.n_failures}    mean score: {summary.mean:.2f}",
        "",
        f"{'item':<24} {'score':>5}  outcome",
        "-" * 48,
    ]
    for item in summary.items:
        score = item.score.value if item.score else 0
        lines.append(f"{item.item_id:<24} {score:>5}  {item.outcome}")
    return "\n".join(lines)


def render_comparison_table(scores: ComparisonScores) -> str:
    """Markdown table, methods as rows and backbones as columns; the best
    mean in each column is bolded."""
    backbones: list[str] = []
    for per_method in scores.values():
        for backbone in per_method:
            if backbone not in backbones:
                backbones.append(backbone)

    best = {
        b: max(per_method[b] for per_method in scores.values() if b in per_method)
        for b in backbones
    }

    header = "| Method | " + " | ".join(backbones) + " |"
    rule = "|---" * (len(backbones) + 1) + "|"
    rows = []
    for method, per_method in scores.items():
        cells = []
        for backbone in backbones:
            if backbone not in per_method:
                cells.append("--")
                continue
            value = per_method[backbone]
            cell = f"{value:.2f}"
            if value == best[backbone]:
                cell = f"**{cell}**"
            cells.append(cell)
        rows.append("| " + " | ".join([method, *cells]) + " |")
    return "\n".join([header, rule, *rows])


def render_scores_figure(summary: BenchSummary, path: str | Path) -> None:
    fig = Figure(figsize=(max(4.0, 0.6 * summary.n + 2.0), 3.2))
    ax = fig.add_subplot(111)
    ids = [r.item_id for r in summary.items]
    values = [r.score.value if r.score else 0 for r in summary.items]
    colors = ["#d62728" if r.score is None else "#4c72b0" for r in summary.items]
    ax.bar(ids, values, color=colors)
    ax.axhline(summary.mean, color="#555555", linewidth=1, linestyle="--",
               label=f"mean {summary.mean:.2f}")
    ax.set_ylim(0, 100)
    ax.set_ylabel("judge score")
    ax.set_title("Benchmark scores per item")
    ax.legend(loc="upper right", frameon=False)
    ax.tick_params(axis="x", rotation=45)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def render_comparison_figure(scores: ComparisonScores, path: str | Path) -> None:
    backbones: list[str] = []
    for per_method in scores.values():
        for backbone in per_method:
            if backbone not in backbones:
                backbones.append(backbone)

    fig = Figure(figsize=(1.8 * max(len(backbones), 2) + 2.0, 3.4))
    ax = fig.add_subplot(111)
    n_methods = len(scores)
    width = 0.8 / max(n_methods, 1)
    for i, (method, per_method) in enumerate(scores.items()):
        xs = [j + i * width for j in range(len(backbones))]
        ys = [per_method.get(b, 0.0) for b in backbones]
        ax.bar(xs, ys, width=width, label=method)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(backbones))])
    ax.set_xticklabels(backbones)
    ax.set_ylabel("mean judge score")
    ax.set_title("Mean score by method and code model")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def write_report(
    summary: BenchSummary,
    out_dir: str | Path,
    baselines: ComparisonScores | None = None,
) -> Path:
    """Write all report artifacts; returns the report.md path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    (out_dir / SUMMARY_JSON).write_text(
        json.dumps(summary.to_payload(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    with (out_dir / SCORES_CSV).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_id", "score", "outcome"])
        for item in summary.items:
            writer.writerow(
                [item.item_id, item.score.value if item.score else 0, item.outcome]
            )

    render_scores_figure(summary, out_dir / SCORES_PNG)

    sections = [
        "# Benchmark report",
        "",
        "```",
        render_summary_table(summary),
        "```",
        "",
        f"![per-item scores]({SCORES_PNG})",
    ]
    if baselines:
        render_comparison_figure(baselines, out_dir / COMPARISON_PNG)
        sections += [
            "",
            "## Comparison with stored baseline scores",
            "",
            render_comparison_table(baselines),
            "",
            f"![comparison]({COMPARISON_PNG})",
        ]
    report_path = out_dir / REPORT_MD
    report_path.write_text("\n".join(sections) + "\n", encoding="utf-8")
    return report_path
