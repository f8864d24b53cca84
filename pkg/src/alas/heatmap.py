"""Similarity-matrix exports: CSV tables and SVG heatmaps with path overlays.

SVG is text, so rendered figures are deterministic and diffable without any
imaging dependency. Each heatmap draws one rect per matrix cell plus two
polylines: the timestamp-derived reference path in white and the searched
alignment path in red.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .simkernel import SimilarityMatrix

__all__ = ["similarity_csv", "render_svg", "value_color"]

# Compact sequential colormap, interpolated linearly between anchors.
_ANCHORS = (
    (0.0, (0x44, 0x01, 0x54)),
    (0.25, (0x3B, 0x52, 0x8B)),
    (0.5, (0x21, 0x91, 0x8C)),
    (0.75, (0x5E, 0xC9, 0x62)),
    (1.0, (0xFD, 0xE7, 0x25)),
)

CELL = 10          # px per matrix cell
GUTTER_LEFT = 72   # row label gutter
GUTTER_TOP = 20
GUTTER_BOTTOM = 26


def value_color(value: float, vmin: float = -1.0, vmax: float = 1.0) -> str:
    """Map a similarity value onto the fixed-scale colormap."""
    t = (float(value) - vmin) / (vmax - vmin)
    t = min(1.0, max(0.0, t))
    for (t0, c0), (t1, c1) in zip(_ANCHORS, _ANCHORS[1:]):
        if t <= t1:
            f = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
            rgb = tuple(round(a + f * (b - a)) for a, b in zip(c0, c1))
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*_ANCHORS[-1][1])


def similarity_csv(matrix: SimilarityMatrix, labels: list[str]) -> str:
    """Render a similarity matrix as CSV.

    First row holds the audio frame indices, first column the text labels,
    cells the similarities with 6 decimal digits.
    """
    if len(labels) != matrix.rows:
        raise ValueError(f"{len(labels)} labels for {matrix.rows} rows")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + [str(i) for i in range(matrix.cols)])
    for label, row in zip(labels, matrix.values):
        writer.writerow([label] + [f"{v:.6f}" for v in row])
    return buf.getvalue()


def _path_points(indices, left: float, top: float) -> str:
    pts = []
    for i, j in enumerate(np.asarray(indices)):
        x = left + (i + 0.5) * CELL
        y = top + (int(j) + 0.5) * CELL
        pts.append(f"{x:.1f},{y:.1f}")
    return " ".join(pts)


def render_svg(
    matrix: SimilarityMatrix,
    labels: list[str],
    reference_indices,
    path_indices,
    title: str = "",
) -> str:
    """Render a heatmap with the reference (white) and searched (red) paths.

    The output contains exactly ``rows * cols`` cell rects and exactly two
    polyline elements, which keeps figures testable as plain text.
    """
    if len(labels) != matrix.rows:
        raise ValueError(f"{len(labels)} labels for {matrix.rows} rows")
    n_rows, n_cols = matrix.rows, matrix.cols
    width = GUTTER_LEFT + n_cols * CELL + 8
    height = GUTTER_TOP + n_rows * CELL + GUTTER_BOTTOM
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'  <title>{title}</title>' if title else "  <title>similarity heatmap</title>",
    ]
    for j in range(n_rows):
        y = GUTTER_TOP + j * CELL
        for i in range(n_cols):
            x = GUTTER_LEFT + i * CELL
            color = value_color(matrix.values[j, i])
            out.append(f'  <rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{color}"/>')
    ref_pts = _path_points(reference_indices, GUTTER_LEFT, GUTTER_TOP)
    mas_pts = _path_points(path_indices, GUTTER_LEFT, GUTTER_TOP)
    out.append(f'  <polyline points="{ref_pts}" fill="none" stroke="#ffffff" stroke-width="2"/>')
    out.append(f'  <polyline points="{mas_pts}" fill="none" stroke="#e02020" stroke-width="1.5"/>')
    for j, label in enumerate(labels):
        y = GUTTER_TOP + (j + 0.5) * CELL + 3
        text = _escape(str(label))
        out.append(f'  <text x="{GUTTER_LEFT - 6}" y="{y:.1f}" text-anchor="end" '
                   f'font-family="monospace" font-size="8">{text}</text>')
    tick = max(1, n_cols // 10)
    y = GUTTER_TOP + n_rows * CELL + 12
    for i in range(0, n_cols, tick):
        x = GUTTER_LEFT + (i + 0.5) * CELL
        out.append(f'  <text x="{x:.1f}" y="{y}" text-anchor="middle" '
                   f'font-family="monospace" font-size="8">{i}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
