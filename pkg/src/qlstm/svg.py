"""Minimal deterministic SVG line plots (no plotting dependency, no metadata).

Used by the CLI's optional plot emission; output bytes depend only on the
input data, so plots are reproducible artifacts like everything else.
"""

from __future__ import annotations

import numpy as np

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def write_line_svg(path, curves: dict[str, tuple], width: int = 900,
                   height: int = 300, title: str = "",
                   meta: dict | None = None) -> None:
    """Write named (x, y) polylines as a standalone SVG file.

    ``meta`` entries become leading XML comments, mirroring the config echo
    carried by the CSV artifacts.
    """
    all_x = np.concatenate([np.asarray(x, dtype=float) for x, _ in curves.values()])
    all_y = np.concatenate([np.asarray(y, dtype=float) for _, y in curves.values()])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())
    x_span = x_hi - x_lo or 1.0
    y_span = y_hi - y_lo or 1.0
    pad = 40

    def sx(x):
        return pad + (x - x_lo) / x_span * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y_lo) / y_span * (height - 2 * pad)

    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">']
    for key in sorted(meta) if meta else ():
        lines.append(f"<!-- {key}={meta[key]} -->")
    lines.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        lines.append(f'<text x="{pad}" y="20" font-size="14" '
                     f'font-family="monospace">{title}</text>')
    for ci, (name, (xs, ys)) in enumerate(curves.items()):
        color = _PALETTE[ci % len(_PALETTE)]
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}"
                       for x, y in zip(xs, ys))
        lines.append(f'<polyline fill="none" stroke="{color}" '
                     f'stroke-width="1" points="{pts}"/>')
        lines.append(f'<text x="{pad}" y="{36 + 14 * ci}" font-size="11" '
                     f'font-family="monospace" fill="{color}">{name}</text>')
    lines.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
