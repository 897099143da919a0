from __future__ import annotations

import json

from plotgen.bench import ItemResult, JudgeScore, aggregate_scores
from plotgen.report import (
    render_comparison_table,
    render_summary_table,
    write_report,
)

# Stored baseline means, used as fixture data for the comparison-table shape.
BASELINES = {
    "Dir. Decoding": {"WizardCoder-33B": 36.94, "Magicoder-6.7B": 38.49, "GPT-3.5": 38.03, "GPT-4": 48.86},
    "0-shot CoT": {"WizardCoder-33B": 35.81, "Magicoder-6.7B": 37.95, "GPT-3.5": 37.14, "GPT-4": 45.42},
    "MatPlotAgent": {"WizardCoder-33B": 45.96, "Magicoder-6.7B": 51.70, "GPT-3.5": 47.51, "GPT-4": 61.16},
    "PlotGen": {"WizardCoder-33B": 48.82, "Magicoder-6.7B": 57.13, "GPT-3.5": 53.25, "GPT-4": 65.67},
}


def summary_fixture():
    return aggregate_scores(
        [
            ItemResult("item01", JudgeScore(50), "success"),
            ItemResult("item02", JudgeScore(60), "success"),
            ItemResult("item03", None, "code-failure"),
        ]
    )


class TestComparisonTable:
    def test_shape_is_methods_by_backbones(self):
        table = render_comparison_table(BASELINES)
        lines = table.splitlines()
        assert lines[0].startswith("| Method |")
        for backbone in ("WizardCoder-33B", "Magicoder-6.7B", "GPT-3.5", "GPT-4"):
            assert backbone in lines[0]
        assert len(lines) == 2 + len(BASELINES)  # header + rule + one row per method

    def test_reference_cell_present_and_best_in_column(self):
        table = render_comparison_table(BASELINES)
        plotgen_row = next(line for line in table.splitlines() if line.startswith("| PlotGen"))
        assert "**65.67**" in plotgen_row  # best mean in the GPT-4 column

    def test_missing_cells_render_as_dashes(self):
        table = render_comparison_table({"A": {"m1": 10.0}, "B": {"m2": 20.0}})
        rows = table.splitlines()
        assert "--" in rows[2] or "--" in rows[3]


class TestSummaryTable:
    def test_contains_counts_and_items(self):
        text = render_summary_table(summary_fixture())
        assert "items: 3" in text
        assert "failures: 1" in text
        assert "mean score: 36.67" in text
        assert "item03" in text and "code-failure" in text


class TestWriteReport:
    def test_writes_all_artifacts(self, tmp_path):
        report_path = write_report(summary_fixture(), tmp_path, baselines=BASELINES)
        assert report_path.exists()
        assert (tmp_path / "summary.json").exists()
        assert (tmp_path / "scores.csv").exists()
        assert (tmp_path / "scores.png").read_bytes()[:4] == b"\x89PNG"
        assert (tmp_path / "comparison.png").read_bytes()[:4] == b"\x89PNG"

    def test_summary_json_round_trips(self, tmp_path):
        summary = summary_fixture()
        write_report(summary, tmp_path)
        payload = json.loads((tmp_path / "summary.json").read_text())
        assert payload == summary.to_payload()
        assert payload["mean"] == 36.67

    def test_scores_csv_is_delimited_per_item(self, tmp_path):
        write_report(summary_fixture(), tmp_path)
        lines = (tmp_path / "scores.csv").read_text().strip().splitlines()
        assert lines[0] == "item_id,score,outcome"
        assert lines[1] == "item01,50,success"
        assert lines[3] == "item03,0,code-failure"

    def test_report_md_carries_comparison_when_baselines_given(self, tmp_path):
        write_report(summary_fixture(), tmp_path, baselines=BASELINES)
        text = (tmp_path / "report.md").read_text()
        assert "65.67" in text
        assert "scores.png" in text

    def test_report_md_without_baselines(self, tmp_path):
        write_report(summary_fixture(), tmp_path)
        text = (tmp_path / "report.md").read_text()
        assert "comparison" not in text.lower()
