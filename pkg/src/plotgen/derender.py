"""Wire type for data read back out of a rendered chart.

The runner process (or, when configured, a multimodal model) produces this
payload; the numeric and lexical agents consume it. Only the JSON schema is
shared with the runner package, never code.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Union

from .errors import ProtocolError

XValue = Union[float, str]


class SeriesKind(str, enum.Enum):
    LINE = "line"
    BAR = "bar"
    SCATTER = "scatter"
    PIE = "pie"
    HEATMAP = "heatmap"
    OTHER = "other"


@dataclass(frozen=True)
class Series:
    name: str
    x: tuple[XValue, ...]
    y: tuple[float, ...]
    kind: SeriesKind

    def __post_init__(self) -> None:
        if len(self.x) != len(self.y):
            raise ProtocolError(
                f"series {self.name!r}: {len(self.x)} x values vs {len(self.y)} y values"
            )
        if self.kind is SeriesKind.PIE and any(v < 0 for v in self.y):
            raise ProtocolError(f"series {self.name!r}: pie fractions must be >= 0")


@dataclass(frozen=True)
class AxisLabels:
    x: str = ""
    y: str = ""


@dataclass(frozen=True)
class TickLabels:
    x: tuple[str, ...] = ()
    y: tuple[str, ...] = ()


@dataclass(frozen=True)
class DerenderedPlot:
    series: tuple[Series, ...] = ()
    title: str = ""
    axis_labels: AxisLabels = field(default_factory=AxisLabels)
    tick_labels: TickLabels = field(default_factory=TickLabels)
    legend_entries: tuple[str, ...] = ()
    skipped_artists: int = 0

    def all_labels(self) -> list[str]:
        """Every textual label in the figure, for lexical verification."""
        return [
            self.title,
            self.axis_labels.x,
            self.axis_labels.y,
            *self.tick_labels.x,
            *self.tick_labels.y,
            *self.legend_entries,
        ]

    def to_payload(self) -> dict[str, Any]:
        return {
            "series": [
                {
                    "name": s.name,
                    "x": list(s.x),
                    "y": list(s.y),
                    "kind": s.kind.value,
                }
                for s in self.series
            ],
            "title": self.title,
            "axis_labels": {"x": self.axis_labels.x, "y": self.axis_labels.y},
            "tick_labels": {"x": list(self.tick_labels.x), "y": list(self.tick_labels.y)},
            "legend_entries": list(self.legend_entries),
            "skipped_artists": self.skipped_artists,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "DerenderedPlot":
        if not isinstance(payload, dict):
            raise ProtocolError(f"derendered payload must be an object, got {type(payload).__name__}")
        try:
            series = tuple(_series_from(entry) for entry in payload.get("series", []))
            axis = payload.get("axis_labels", {}) or {}
            ticks = payload.get("tick_labels", {}) or {}
            return cls(
                series=series,
                title=str(payload.get("title", "")),
                axis_labels=AxisLabels(
                    x=str(axis.get("x", "")), y=str(axis.get("y", ""))
                ),
                tick_labels=TickLabels(
                    x=tuple(str(t) for t in ticks.get("x", [])),
                    y=tuple(str(t) for t in ticks.get("y", [])),
                ),
                legend_entries=tuple(
                    str(e) for e in payload.get("legend_entries", [])
                ),
                skipped_artists=int(payload.get("skipped_artists", 0)),
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise ProtocolError(f"malformed derendered payload: {exc}") from exc


def _series_from(entry: dict[str, Any]) -> Series:
    kind_text = str(entry.get("kind", "other"))
    try:
        kind = SeriesKind(kind_text)
    except ValueError:
        kind = SeriesKind.OTHER
    return Series(
        name=str(entry.get("name", "")),
        x=tuple(v if isinstance(v, str) else float(v) for v in entry.get("x", [])),
        y=tuple(float(v) for v in entry.get("y", [])),
        kind=kind,
    )
