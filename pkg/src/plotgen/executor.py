"""Sandboxed draft execution: spawn the runner, enforce the wall clock,
parse its sentinel-delimited result.

Each draft runs in a fresh interpreter process so that state can never leak
between iterations of the feedback loops. The runner is any executable that
accepts one argument (a job-spec JSON path) and prints a single result
block between the bit-exact sentinel lines below.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import os
import signal
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from .codegen import CodeDraft
from .derender import DerenderedPlot
from .errors import ProtocolError
from .planner import UserRequest

RESULT_BEGIN = "---PLOTGEN-RESULT-BEGIN---"
RESULT_END = "---PLOTGEN-RESULT-END---"

DEFAULT_TIME_LIMIT = 60.0
PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


class ExecStatus(str, enum.Enum):
    SUCCESS = "success"
    RUNTIME_ERROR = "runtime-error"
    TIMEOUT = "timeout"
    RUNNER_CRASH = "runner-crash"


@dataclass(frozen=True)
class ExecutionOutcome:
    status: ExecStatus
    traceback: str = ""
    figure_path: Path | None = None
    derendered: DerenderedPlot | None = None
    wall_time: float = 0.0
    captured_output: str = ""


@dataclass(frozen=True)
class RunnerJob:
    code_path: Path
    data_path: Path
    figure_out_path: Path
    derender_out: bool = True
    time_limit: float = DEFAULT_TIME_LIMIT

    def __post_init__(self) -> None:
        for p in (self.code_path, self.data_path, self.figure_out_path):
            if not Path(p).is_absolute():
                raise ValueError(f"runner job paths must be absolute, got {p}")
        if self.time_limit <= 0:
            raise ValueError("time limit must be positive")

    def to_spec(self) -> dict:
        return {
            "code_path": str(self.code_path),
            "data_path": str(self.data_path),
            "figure_out_path": str(self.figure_out_path),
            "derender": self.derender_out,
        }


@dataclass(frozen=True)
class ExecConfig:
    workdir: Path
    runner_cmd: tuple[str, ...] | None = None
    time_limit: float = DEFAULT_TIME_LIMIT
    derender: bool = True

    def command(self) -> list[str]:
        if self.runner_cmd:
            return list(self.runner_cmd)
        return [sys.executable, "-m", "plotgen_runner"]


def is_png(path: Path) -> bool:
    try:
        with open(path, "rb") as fh:
            if fh.read(len(PNG_SIGNATURE)) != PNG_SIGNATURE:
                return False
    except OSError:
        return False
    try:
        from PIL import Image

        with Image.open(path) as img:
            img.verify()
    except Exception:
        return False
    return True


def parse_runner_result(stdout: bytes) -> ExecutionOutcome:
    """Pure decode of one sentinel-delimited result block.

    Text outside the sentinels is preserved in ``captured_output``;
    ``wall_time`` is left at zero for the caller to fill.
    """
    text = stdout.decode("utf-8", errors="replace")
    lines = text.splitlines()
    try:
        begin = lines.index(RESULT_BEGIN)
    except ValueError:
        raise ProtocolError("begin sentinel missing from runner output") from None
    try:
        end = lines.index(RESULT_END, begin + 1)
    except ValueError:
        raise ProtocolError("end sentinel missing from runner output") from None

    payload_text = "\n".join(lines[begin + 1 : end])
    try:
        payload = json.loads(payload_text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"result payload is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "status" not in payload:
        raise ProtocolError("result payload lacks a status field")

    try:
        status = ExecStatus(payload["status"])
    except ValueError as exc:
        raise ProtocolError(f"unknown runner status {payload['status']!r}") from exc

    derendered = payload.get("derendered")
    figure = payload.get("figure_path")
    captured = "\n".join(lines[:begin] + lines[end + 1 :]).strip("\n")
    return ExecutionOutcome(
        status=status,
        traceback=str(payload.get("traceback", "") or ""),
        figure_path=Path(figure) if figure else None,
        derendered=DerenderedPlot.from_payload(derendered) if derendered else None,
        captured_output=captured,
    )


def execute_draft(draft: CodeDraft, request: UserRequest, job_config: ExecConfig) -> ExecutionOutcome:
    """Run one draft in a fresh runner process under a hard wall clock.

    Scratch files (draft source, job spec, figure, raw stdout) are written
    under the config workdir and never deleted; they are the audit trail.
    """
    workdir = Path(job_config.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    code_path = workdir / f"draft_v{draft.version}.py"
    code_path.write_text(draft.source + "\n", encoding="utf-8")
    figure_path = workdir / f"figure_v{draft.version}.png"
    job = RunnerJob(
        code_path=code_path.resolve(),
        data_path=Path(request.data_path).resolve(),
        figure_out_path=figure_path.resolve(),
        derender_out=job_config.derender,
        time_limit=job_config.time_limit,
    )
    job_path = workdir / f"job_v{draft.version}.json"
    job_path.write_text(json.dumps(job.to_spec(), indent=2), encoding="utf-8")

    started = time.monotonic()
    proc = subprocess.Popen(
        job_config.command() + [str(job_path)],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        cwd=workdir,
        start_new_session=True,  # own process group, so the whole tree dies on kill
    )
    try:
        stdout, stderr = proc.communicate(timeout=job_config.time_limit)
    except subprocess.TimeoutExpired:
        _kill_tree(proc)
        stdout, stderr = proc.communicate()
        wall = time.monotonic() - started
        return ExecutionOutcome(
            status=ExecStatus.TIMEOUT,
            traceback=(
                f"execution exceeded the {job_config.time_limit:g} s time limit "
                "and was killed"
            ),
            wall_time=wall,
            captured_output=stdout.decode("utf-8", errors="replace"),
        )
    wall = time.monotonic() - started

    try:
        outcome = parse_runner_result(stdout)
    except ProtocolError as exc:
        detail = stderr.decode("utf-8", errors="replace").strip()
        tb = f"runner crashed (exit {proc.returncode}): {exc}"
        if detail:
            tb += f"\nstderr:\n{detail[-2000:]}"
        return ExecutionOutcome(
            status=ExecStatus.RUNNER_CRASH,
            traceback=tb,
            wall_time=wall,
            captured_output=stdout.decode("utf-8", errors="replace"),
        )

    outcome = dataclasses.replace(outcome, wall_time=wall)
    if outcome.status is ExecStatus.SUCCESS:
        outcome = _enforce_success_contract(outcome, job)
    return outcome


def _enforce_success_contract(outcome: ExecutionOutcome, job: RunnerJob) -> ExecutionOutcome:
    """A success claim must come with a decodable PNG (and plot data when
    the job asked for it); anything less feeds the debug loop instead."""
    figure = outcome.figure_path or job.figure_out_path
    if not is_png(figure):
        return dataclasses.replace(
            outcome,
            status=ExecStatus.RUNTIME_ERROR,
            figure_path=None,
            derendered=None,
            traceback=f"program finished but produced no PNG figure at {figure}",
        )
    if job.derender_out and outcome.derendered is None:
        return dataclasses.replace(
            outcome,
            status=ExecStatus.RUNTIME_ERROR,
            figure_path=None,
            derendered=None,
            traceback="program finished but the figure could not be de-rendered",
        )
    return dataclasses.replace(outcome, figure_path=Path(figure))


def _kill_tree(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        try:
            proc.kill()
        except ProcessLookupError:
            pass
