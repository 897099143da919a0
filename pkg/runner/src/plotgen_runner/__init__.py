"""In-sandbox runner: executes one generated plotting draft per process,
saves its figure, and reads the plotted data back out of the live figure.

Invoked as ``python -m plotgen_runner <job-spec.json>``; the only output
contract is a single sentinel-delimited JSON result block on stdout.
"""

from .harness import run_job
from .introspect import derender_figure, extract_labels, snapshot

__version__ = "0.1.0"

__all__ = ["run_job", "derender_figure", "extract_labels", "snapshot"]
