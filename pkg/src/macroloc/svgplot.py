"""Minimal dependency-free SVG line charts.

Output is deterministic (fixed formatting, no timestamps) so rerunning a
command with the same inputs produces byte-identical files.
"""

from __future__ import annotations

from typing import Optional, Sequence

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def line_chart(
    xs: Sequence[float],
    series: Sequence[Sequence[float]],
    labels: Optional[Sequence[str]] = None,
    title: str = "",
    width: int = 640,
    height: int = 400,
) -> str:
    """Render one or more y-series over shared x values as an SVG string."""
    xs = [float(x) for x in xs]
    series = [[float(y) for y in ys] for ys in series]
    if not xs or not series:
        raise ValueError("need at least one point and one series")
    for ys in series:
        if len(ys) != len(xs):
            raise ValueError("every series must match the x length")
    margin = 45
    x_lo, x_hi = min(xs), max(xs)
    y_lo = min(min(ys) for ys in series)
    y_hi = max(max(ys) for ys in series)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x: float) -> float:
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def py(y: float) -> float:
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
    ]
    for i, ys in enumerate(series):
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
        color = _COLORS[i % len(_COLORS)]
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>'
        )
        if labels and i < len(labels):
            parts.append(
                f'<text x="{width - margin + 4}" y="{margin + 14 * i + 10}" '
                f'font-size="11" fill="{color}">{labels[i]}</text>'
            )
    for val, x, y, anchor in (
        (x_lo, margin, height - margin + 14, "middle"),
        (x_hi, width - margin, height - margin + 14, "middle"),
        (y_lo, margin - 4, height - margin, "end"),
        (y_hi, margin - 4, margin + 4, "end"),
    ):
        parts.append(
            f'<text x="{x}" y="{y}" font-size="10" text-anchor="{anchor}">{val:.6g}</text>'
        )
    if title:
        parts.append(
            f'<text x="{width // 2}" y="18" font-size="13" text-anchor="middle">{title}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
