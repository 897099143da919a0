from __future__ import annotations

import pytest

from helpers import ScriptedGateway

from plotgen.codegen import (
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
from plotgen.config import PipelineConfig
from plotgen.errors import EmptyCode
from plotgen.planner import VisualizationPlan
from plotgen.table import DataTable


def prompt_text(request) -> str:
    return "\n".join(
        part.text for msg in request.messages for part in msg.parts if hasattr(part, "text")
    )


@pytest.fixture
def plan() -> VisualizationPlan:
    return VisualizationPlan(
        steps=("read the csv", "draw grouped bars"),
        data_note="data.csv in CSV format",
        visual_notes=("dark background",),
    )


@pytest.fixture
def table(sales_csv) -> DataTable:
    return DataTable.from_csv(sales_csv)


class TestBuildCodegenPrompt:
    def test_steps_in_order(self, plan, sales_request, table):
        text = prompt_text(build_codegen_prompt(plan, sales_request, table))
        assert text.index("read the csv") < text.index("draw grouped bars")

    def test_contains_figure_path_under_output_dir(self, plan, sales_request, table):
        text = prompt_text(build_codegen_prompt(plan, sales_request, table))
        assert f"{sales_request.output_dir}/figure.png" in text

    def test_contains_visual_notes_and_data_path(self, plan, sales_request, table):
        text = prompt_text(build_codegen_prompt(plan, sales_request, table))
        assert "dark background" in text
        assert str(sales_request.data_path) in text


class TestExtractCodeBlock:
    def test_plain_fence(self):
        assert extract_code_block("```\nprint(1)\n```") == "print(1)"

    def test_first_block_wins_with_language_tag(self):
        text = "here is code:\n```python\nX=1\n```\nnotes\n```python\nY=2\n```"
        assert extract_code_block(text) == "X=1"

    def test_no_fence_returns_whole_text_trimmed(self):
        assert extract_code_block("  x = 1\n") == "x = 1"

    def test_blank_raises_empty_code(self):
        with pytest.raises(EmptyCode):
            extract_code_block("   ")

    def test_fenced_but_empty_raises(self):
        with pytest.raises(EmptyCode):
            extract_code_block("```python\n\n```")


@pytest.fixture
def draft() -> CodeDraft:
    return CodeDraft(version=1, source="import os\nraise NameError('x')", provenance=Provenance.initial())


TRACEBACK = "Traceback (most recent call last):\n  ...\nNameError: name 'x' is not defined"


class TestRepairFromTraceback:
    def test_version_and_provenance(self, draft):
        gateway = ScriptedGateway(responses=["```python\nprint('fixed')\n```"])
        fixed = repair_from_traceback(gateway, draft, TRACEBACK, PipelineConfig())
        assert fixed.version == 2
        assert fixed.provenance == Provenance.debug_fix(1)
        assert fixed.source == "print('fixed')"

    def test_consecutive_repairs_count_up(self, draft):
        gateway = ScriptedGateway(responses=["```\na=1\n```", "```\na=2\n```"])
        config = PipelineConfig()
        second = repair_from_traceback(gateway, draft, TRACEBACK, config)
        third = repair_from_traceback(gateway, second, TRACEBACK, config)
        assert third.provenance == Provenance.debug_fix(2)

    def test_unchanged_echo_is_allowed(self, draft):
        gateway = ScriptedGateway(responses=[f"```\n{draft.source}\n```"])
        fixed = repair_from_traceback(gateway, draft, TRACEBACK, PipelineConfig())
        assert fixed.source == draft.source
        assert fixed.version == 2

    def test_prompt_embeds_full_source_and_traceback(self, draft):
        gateway = ScriptedGateway(responses=["```\nok=1\n```"])
        repair_from_traceback(gateway, draft, TRACEBACK, PipelineConfig())
        text = prompt_text(gateway.calls[0])
        assert draft.source in text
        assert TRACEBACK in text

    def test_empty_traceback_rejected(self, draft):
        with pytest.raises(ValueError):
            repair_from_traceback(ScriptedGateway(), draft, "  ", PipelineConfig())


class TestReviseFromFeedback:
    def test_provenance_carries_agent_and_iteration(self, draft):
        gateway = ScriptedGateway(responses=["```\nplot()\n```"])
        report = FeedbackReport(
            agent_kind=AgentKind.NUMERIC,
            verdict=Verdict.FAIL,
            message="y values reversed",
            iteration=2,
        )
        revised = revise_from_feedback(gateway, draft, report, PipelineConfig())
        assert revised.version == 2
        assert revised.provenance == Provenance.feedback_fix(AgentKind.NUMERIC, 2)

    def test_prompt_contains_feedback_message_and_source(self, draft):
        gateway = ScriptedGateway(responses=["```\nplot()\n```"])
        report = FeedbackReport(
            agent_kind=AgentKind.LEXICAL,
            verdict=Verdict.FAIL,
            message="y-axis label missing: 'sales'",
            iteration=1,
        )
        revise_from_feedback(gateway, draft, report, PipelineConfig())
        text = prompt_text(gateway.calls[0])
        assert "y-axis label missing: 'sales'" in text
        assert draft.source in text

    def test_pass_report_is_a_caller_bug(self, draft):
        report = FeedbackReport(
            agent_kind=AgentKind.VISUAL, verdict=Verdict.PASS, message="", iteration=1
        )
        with pytest.raises(AssertionError):
            revise_from_feedback(ScriptedGateway(), draft, report, PipelineConfig())


class TestInvariants:
    def test_fail_report_requires_message(self):
        with pytest.raises(ValueError):
            FeedbackReport(
                agent_kind=AgentKind.NUMERIC, verdict=Verdict.FAIL, message=" ", iteration=1
            )

    def test_draft_source_must_be_non_empty(self):
        with pytest.raises(ValueError):
            CodeDraft(version=1, source="  ", provenance=Provenance.initial())

    def test_draft_versions_are_one_based(self):
        with pytest.raises(ValueError):
            CodeDraft(version=0, source="x=1", provenance=Provenance.initial())
