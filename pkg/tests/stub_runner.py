"""Stub runner executable used by the primary test suite.

Speaks the exact job-spec/sentinel protocol of the real runner but replays
canned result blocks chosen by marker comments in the draft source:

    # STUB:HANG              never return (timeout tests)
    # STUB:SPAWN <pidfile>   spawn a sleeping child, note its pid, then hang
    # STUB:CRASH             exit nonzero without a result block
    # STUB:GARBAGE           exit zero without a result block
    # STUB:ERROR <ExcName>   runtime-error block naming the exception
    # STUB:PRINT <text>      echo text before the block (repeatable)
    # STUB:DERENDER <json>   success block with this derendered payload
    # STUB:NOFIG             success block but no figure file written
    # STUB:NODERENDER        success block with derendered null

With no marker the stub reports success with a small fixed payload.
"""

import base64
import json
import subprocess
import sys
import time

BEGIN = "---PLOTGEN-RESULT-BEGIN---"
END = "---PLOTGEN-RESULT-END---"

# A real, fixed 4x3 PNG so figure files are byte-identical across runs.
MINI_PNG = base64.b64decode(
    b"iVBORw0KGgoAAAANSUhEUgAAAAQAAAADCAIAAAA7ljmRAAAAFElEQVR4nGN0K9rA"
    b"AANMDEgAhQMANDoBbsfQs2cAAAAASUVORK5CYII="
)

DEFAULT_DERENDER = {
    "series": [{"name": "sales", "x": [1, 2, 3], "y": [10.0, 20.0, 30.0], "kind": "bar"}],
    "title": "",
    "axis_labels": {"x": "", "y": ""},
    "tick_labels": {"x": [], "y": []},
    "legend_entries": [],
    "skipped_artists": 0,
}


def emit(payload):
    print(BEGIN)
    print(json.dumps(payload, sort_keys=True))
    print(END)


def main():
    with open(sys.argv[1], encoding="utf-8") as fh:
        spec = json.load(fh)
    with open(spec["code_path"], encoding="utf-8") as fh:
        source = fh.read()

    markers = {}
    for line in source.splitlines():
        if line.startswith("# STUB:"):
            head, _, rest = line[len("# STUB:"):].partition(" ")
            markers.setdefault(head, []).append(rest.strip())

    for text in markers.get("PRINT", []):
        print(text)

    if "SPAWN" in markers:
        child = subprocess.Popen([sys.executable, "-c", "import time; time.sleep(120)"])
        with open(markers["SPAWN"][0], "w", encoding="utf-8") as fh:
            fh.write(str(child.pid))
    if "HANG" in markers or "SPAWN" in markers:
        sys.stdout.flush()
        while True:
            time.sleep(0.1)
    if "CRASH" in markers:
        sys.stderr.write("stub runner crashed on purpose\n")
        sys.exit(3)
    if "GARBAGE" in markers:
        print("no sentinels here")
        return
    if "ERROR" in markers:
        name = markers["ERROR"][0] or "RuntimeError"
        emit(
            {
                "status": "runtime-error",
                "traceback": (
                    "Traceback (most recent call last):\n"
                    '  File "draft.py", line 1, in <module>\n'
                    f"{name}: injected failure"
                ),
                "figure_path": None,
                "derendered": None,
            }
        )
        return

    figure_path = spec["figure_out_path"]
    if "NOFIG" not in markers:
        with open(figure_path, "wb") as fh:
            fh.write(MINI_PNG)
    if "NODERENDER" in markers:
        derendered = None
    elif markers.get("DERENDER"):
        derendered = json.loads(markers["DERENDER"][0])
    else:
        derendered = DEFAULT_DERENDER
    emit(
        {
            "status": "success",
            "traceback": "",
            "figure_path": figure_path,
            "derendered": derendered,
        }
    )


if __name__ == "__main__":
    main()
