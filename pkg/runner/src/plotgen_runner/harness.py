"""Execute one draft inside this process and emit the result protocol.

The draft runs in a fresh namespace with its stdio redirected, against a
forced non-interactive matplotlib backend, so the live figure object stays
reachable for introspection and the draft can neither block on a display
nor corrupt the sentinel protocol. Whatever the draft does, stdout ends up
holding exactly one sentinel-delimited JSON result block.
"""

from __future__ import annotations

import io
import json
import os
import sys
import traceback
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

RESULT_BEGIN = "---PLOTGEN-RESULT-BEGIN---"
RESULT_END = "---PLOTGEN-RESULT-END---"

_STATUS_SUCCESS = "success"
_STATUS_ERROR = "runtime-error"


def _sanitize(text: str) -> str:
    """Defang sentinel strings a draft may have printed or raised."""
    return text.replace(RESULT_BEGIN, "#--PLOTGEN-RESULT-BEGIN--#").replace(
        RESULT_END, "#--PLOTGEN-RESULT-END--#"
    )


def _force_headless():
    os.environ["MPLBACKEND"] = "Agg"
    import matplotlib

    matplotlib.use("Agg", force=True)
    matplotlib.interactive(False)
    import matplotlib.pyplot as plt

    plt.show = lambda *args, **kwargs: None  # refuse interactive display
    return plt


def _active_figure(plt):
    nums = plt.get_fignums()
    if not nums:
        return None
    return plt.figure(nums[-1])


def run_job(spec_path: str | Path) -> int:
    """Run the job described by the spec file; always emits one result block.

    Draft failures are encoded in the payload, never raised; only an
    unreadable job spec (a caller bug) is allowed to crash the process.
    """
    spec = json.loads(Path(spec_path).read_text(encoding="utf-8"))
    code = Path(spec["code_path"]).read_text(encoding="utf-8")
    figure_out = spec["figure_out_path"]
    want_derender = bool(spec.get("derender", True))

    plt = _force_headless()

    status, tb = _STATUS_SUCCESS, ""
    captured = io.StringIO()
    namespace = {"__name__": "__main__", "__file__": str(spec["code_path"])}
    with redirect_stdout(captured), redirect_stderr(captured):
        try:
            exec(compile(code, str(spec["code_path"]), "exec"), namespace)
        except SystemExit as exc:
            if exc.code not in (None, 0):
                status, tb = _STATUS_ERROR, f"SystemExit: draft exited with code {exc.code}"
        except BaseException:
            status, tb = _STATUS_ERROR, traceback.format_exc()

    derendered = None
    if status == _STATUS_SUCCESS:
        fig = _active_figure(plt)
        if not os.path.exists(figure_out):
            if fig is None:
                status = _STATUS_ERROR
                tb = (
                    "the program completed without error but produced no "
                    f"figure and saved nothing to {figure_out}"
                )
            else:
                # save on the draft's behalf
                try:
                    fig.savefig(figure_out)
                except Exception:
                    status, tb = _STATUS_ERROR, traceback.format_exc()
        if status == _STATUS_SUCCESS and want_derender:
            from .introspect import empty_snapshot, snapshot

            if fig is None:
                derendered = empty_snapshot()
            else:
                try:
                    derendered = snapshot(fig)
                except Exception:
                    status, tb = _STATUS_ERROR, traceback.format_exc()
                    derendered = None

    payload = {
        "status": status,
        "traceback": _sanitize(tb),
        "figure_path": figure_out if status == _STATUS_SUCCESS else None,
        "derendered": derendered,
    }

    program_output = _sanitize(captured.getvalue())
    if program_output:
        sys.stdout.write(program_output)
        if not program_output.endswith("\n"):
            sys.stdout.write("\n")
    sys.stdout.write(RESULT_BEGIN + "\n")
    sys.stdout.write(json.dumps(payload, ensure_ascii=False) + "\n")
    sys.stdout.write(RESULT_END + "\n")
    sys.stdout.flush()
    return 0
