"""Static matplotlib previews of assembled chart documents.

The authoritative output is the Vega-Lite JSON; these PNG previews give a
quick visual check next to the exported tables without a browser runtime.
Only the x/y/color encodings of the common mark shapes are drawn.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _mark_name(mark) -> str:
    if isinstance(mark, dict):
        return mark.get("type", "point")
    return mark


def _series(values, field):
    return [row.get(field) for row in values]


def render_preview(spec: dict, path: str | Path):
    """Draw an approximate preview of the spec to a PNG file."""
    values = spec.get("data", {}).get("values", [])
    encoding = spec.get("encoding", {})
    mark = _mark_name(spec.get("mark", "point"))
    x_field = encoding.get("x", {}).get("field")
    y_field = encoding.get("y", {}).get("field")
    color_field = encoding.get("color", {}).get("field")

    fig, ax = plt.subplots(figsize=(5, 3.5))
    try:
        groups = {None: values}
        if color_field:
            groups = {}
            for row in values:
                groups.setdefault(row.get(color_field), []).append(row)
        for label, rows in groups.items():
            xs = _series(rows, x_field) if x_field else list(range(len(rows)))
            ys = _series(rows, y_field) if y_field else [1] * len(rows)
            if mark in ("circle", "point"):
                ax.scatter(xs, ys, label=label)
            elif mark == "line":
                ax.plot(xs, ys, marker="o", label=label)
            elif mark == "bar":
                ax.bar([str(x) for x in xs], ys, label=label)
            else:
                ax.scatter(xs, ys, label=label)
        if x_field:
            ax.set_xlabel(x_field)
        if y_field:
            ax.set_ylabel(y_field)
        if color_field:
            ax.legend(title=color_field, fontsize="small")
        ax.tick_params(axis="x", labelrotation=45, labelsize="small")
        fig.tight_layout()
        fig.savefig(path, dpi=100)
    finally:
        plt.close(fig)
