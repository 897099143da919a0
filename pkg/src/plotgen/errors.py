"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class PlotGenError(Exception):
    """Base class for every error raised by this package."""


# --- gateway ---------------------------------------------------------------

class NetworkError(PlotGenError):
    """Transport failure or non-auth HTTP error from the model server."""


class AuthError(PlotGenError):
    """Credential missing from the environment or rejected by the server."""


class CassetteMiss(PlotGenError):
    """Replay backend has no cassette for the request key (fixture gap)."""

    def __init__(self, key: str):
        super().__init__(f"no cassette for request key {key}")
        self.key = key


class EmptyCompletion(PlotGenError):
    """Provider returned an empty completion."""


# --- planner / codegen -----------------------------------------------------

class PlanParseError(PlotGenError):
    """Planner output did not follow the STEP/DATA/VISUAL grammar."""


class EmptyCode(PlotGenError):
    """Code extraction produced an empty program."""


# --- execution -------------------------------------------------------------

class ProtocolError(PlotGenError):
    """Runner stdout violated the sentinel-delimited result protocol."""


# --- feedback --------------------------------------------------------------

class LengthMismatch(PlotGenError):
    """Correlation inputs have different lengths."""


class TooShort(PlotGenError):
    """Correlation inputs have fewer than two elements."""


class VerdictParseError(PlotGenError):
    """Feedback response carried no VERDICT line."""


class DerenderParseError(PlotGenError):
    """Multimodal de-render response was not valid plot-data JSON."""


# --- benchmark -------------------------------------------------------------

class MissingFile(PlotGenError):
    """A benchmark item directory lacks a required file."""

    def __init__(self, item_id: str, filename: str):
        super().__init__(f"benchmark item {item_id!r} is missing {filename}")
        self.item_id = item_id
        self.filename = filename


class EmptyQuery(PlotGenError):
    """A benchmark item's query file is empty."""

    def __init__(self, item_id: str):
        super().__init__(f"benchmark item {item_id!r} has an empty query")
        self.item_id = item_id


class ScoreParseError(PlotGenError):
    """Judge response carried no SCORE line, even after one re-prompt."""


class ScoreOutOfRange(PlotGenError):
    """Judge score fell outside [0, 100]."""

    def __init__(self, value: int):
        super().__init__(f"judge score {value} outside [0, 100]")
        self.value = value


# --- configuration ---------------------------------------------------------

class ConfigError(PlotGenError):
    """Configuration file or override carried unknown or invalid keys."""


class TableError(PlotGenError):
    """Data file does not parse into a valid table."""
