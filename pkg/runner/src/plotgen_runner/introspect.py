"""Read plotted data and labels back out of a live matplotlib figure.

Extraction is exact where the artist exposes its data (lines, bars,
scatter offsets, pie wedge angles, color-mapped arrays). Artists we cannot
map to a data series are skipped and counted, never fatal.
"""

from __future__ import annotations

from typing import Any

import numpy as np
from matplotlib.collections import PathCollection, QuadMesh
from matplotlib.container import BarContainer
from matplotlib.patches import Wedge


def _floats(values: Any) -> list[float]:
    arr = np.asarray(values, dtype=float).ravel()
    return [float(v) for v in arr]


def _artist_name(artist) -> str:
    label = artist.get_label() or ""
    return "" if label.startswith("_") else str(label)


def derender_figure(fig) -> tuple[list[dict], int]:
    """Per axes, in draw order: line vertices, bar heights, scatter
    offsets, pie wedge fractions, color-mapped arrays. Returns the series
    list plus the count of skipped (unsupported) artists."""
    assert fig.axes, "figure must have at least one axes"
    fig.canvas.draw()
    series: list[dict] = []
    skipped = 0

    for ax in fig.axes:
        for line in ax.lines:
            try:
                x = _floats(line.get_xdata(orig=False))
                y = _floats(line.get_ydata(orig=False))
            except (TypeError, ValueError):
                skipped += 1
                continue
            series.append({"name": _artist_name(line), "x": x, "y": y, "kind": "line"})

        container_patches: set[int] = set()
        for container in ax.containers:
            if isinstance(container, BarContainer):
                container_patches.update(id(p) for p in container.patches)
                vertical = getattr(container, "orientation", "vertical") != "horizontal"
                if vertical:
                    y = [float(p.get_height()) for p in container.patches]
                    x = [float(p.get_x() + p.get_width() / 2) for p in container.patches]
                else:
                    y = [float(p.get_width()) for p in container.patches]
                    x = [float(p.get_y() + p.get_height() / 2) for p in container.patches]
                series.append(
                    {"name": _artist_name(container), "x": x, "y": y, "kind": "bar"}
                )
            else:
                # errorbar/stem containers re-wrap artists collected above
                container_patches.update(
                    id(p) for p in getattr(container, "patches", [])
                )

        for coll in ax.collections:
            if isinstance(coll, PathCollection):
                offsets = np.asarray(coll.get_offsets(), dtype=float)
                if offsets.ndim != 2 or offsets.shape[1] != 2:
                    skipped += 1
                    continue
                series.append(
                    {
                        "name": _artist_name(coll),
                        "x": [float(v) for v in offsets[:, 0]],
                        "y": [float(v) for v in offsets[:, 1]],
                        "kind": "scatter",
                    }
                )
            elif isinstance(coll, QuadMesh):
                values = _floats(np.ma.getdata(coll.get_array()))
                series.append(
                    {
                        "name": _artist_name(coll),
                        "x": list(range(len(values))),
                        "y": values,
                        "kind": "heatmap",
                    }
                )
            else:
                skipped += 1

        for image in ax.images:
            arr = np.ma.getdata(image.get_array())
            if arr is not None and np.asarray(arr).ndim == 2:
                values = _floats(arr)
                series.append(
                    {
                        "name": _artist_name(image),
                        "x": list(range(len(values))),
                        "y": values,
                        "kind": "heatmap",
                    }
                )
            else:
                # RGB(A) images carry no single color-mapped value per cell
                series.append({"name": _artist_name(image), "x": [], "y": [], "kind": "other"})

        wedges = [p for p in ax.patches if isinstance(p, Wedge)]
        if wedges:
            fractions = [float((w.theta2 - w.theta1) / 360.0) for w in wedges]
            series.append(
                {
                    "name": "",
                    "x": list(range(len(fractions))),
                    "y": fractions,
                    "kind": "pie",
                }
            )
        for patch in ax.patches:
            if isinstance(patch, Wedge) or id(patch) in container_patches:
                continue
            skipped += 1

    return series, skipped


def extract_labels(fig) -> dict:
    """Figure title (suptitle preferred), axis labels, rendered tick-label
    strings, and legend entry texts; missing elements come back empty."""
    assert fig.axes, "figure must have at least one axes"
    fig.canvas.draw()
    first = fig.axes[0]

    title = ""
    if hasattr(fig, "get_suptitle"):
        title = fig.get_suptitle() or ""
    elif getattr(fig, "_suptitle", None) is not None:
        title = fig._suptitle.get_text()
    if not title:
        title = first.get_title()

    legend_entries: list[str] = []
    for ax in fig.axes:
        legend = ax.get_legend()
        if legend is not None:
            legend_entries.extend(t.get_text() for t in legend.get_texts())
    for legend in fig.legends:
        legend_entries.extend(t.get_text() for t in legend.get_texts())

    return {
        "title": title,
        "axis_labels": {"x": first.get_xlabel(), "y": first.get_ylabel()},
        "tick_labels": {
            "x": [t.get_text() for t in first.get_xticklabels()],
            "y": [t.get_text() for t in first.get_yticklabels()],
        },
        "legend_entries": legend_entries,
    }


def snapshot(fig) -> dict:
    """Full derendered payload for the result protocol."""
    series, skipped = derender_figure(fig)
    payload = extract_labels(fig)
    payload["series"] = series
    payload["skipped_artists"] = skipped
    return payload


def empty_snapshot() -> dict:
    """Payload when no live figure is reachable (e.g. the draft closed it)."""
    return {
        "series": [],
        "title": "",
        "axis_labels": {"x": "", "y": ""},
        "tick_labels": {"x": [], "y": []},
        "legend_entries": [],
        "skipped_artists": 0,
    }
