from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `helpers` importable

from helpers import STUB_RUNNER, write_sales_csv  # noqa: E402

from plotgen.config import PipelineConfig
from plotgen.planner import UserRequest


@pytest.fixture
def stub_runner_cmd() -> tuple[str, ...]:
    return (sys.executable, str(STUB_RUNNER))


@pytest.fixture
def sales_csv(tmp_path: Path) -> Path:
    return write_sales_csv(tmp_path / "data.csv")


@pytest.fixture
def sales_request(tmp_path: Path, sales_csv: Path) -> UserRequest:
    out = tmp_path / "out"
    out.mkdir(exist_ok=True)
    return UserRequest(
        id="sales",
        text="plot monthly sales as a bar chart",
        data_path=sales_csv,
        output_dir=out,
    )


@pytest.fixture
def pipeline_config(stub_runner_cmd) -> PipelineConfig:
    return PipelineConfig(runner_cmd=stub_runner_cmd, time_limit=30.0)
