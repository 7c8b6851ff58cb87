"""SVG renderings of a capacity report.

Two views: the capacity matrix (2-d inputs only; one cell per degree
pair) and the stacked capacity bar-plot (any q; one bar per total
degree). Output is plain SVG text with fixed number formatting, so
renders are byte-stable for golden tests and need no plotting library.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import PreconditionError
from .estimators import CapacityReport

__all__ = [
    "KIND_CAPACITY_MATRIX",
    "KIND_CAPACITY_BARPLOT",
    "capacity_matrix_svg",
    "capacity_barplot_svg",
    "render_report",
]

KIND_CAPACITY_MATRIX = "capacity-matrix"
KIND_CAPACITY_BARPLOT = "capacity-barplot"

# Linear 0..1 scale shared by all plots so panels at different powers
# stay comparable.
_LOW_RGB = (247, 251, 255)
_HIGH_RGB = (8, 48, 107)
_INVALID_FILL = "#c8c8c8"
_STACK_FILLS = ("#2c7fb8", "#7fcdbb", "#edf8b1")
_STACK_LABELS = ("single variable", "two-variable", "higher-order")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _color(value: float) -> str:
    t = min(max(float(value), 0.0), 1.0)
    r, g, b = (
        round(lo + t * (hi - lo)) for lo, hi in zip(_LOW_RGB, _HIGH_RGB)
    )
    return f"#{r:02x}{g:02x}{b:02x}"


def _badge(cx: float, cy: float, total: float, max_capacity: float) -> str:
    text = f"{total:.2f} / {max_capacity:g}"
    radius = 8 + 4 * len(text)
    return (
        f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{radius}" '
        'fill="#ffffff" stroke="#333333" stroke-width="1.5"/>'
        f'<text x="{_fmt(cx)}" y="{_fmt(cy + 5)}" text-anchor="middle" '
        f'font-size="14" fill="#111111" class="badge">{escape(text)}</text>'
    )


def _svg_open(width: float, height: float) -> str:
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" '
        f'width="{_fmt(width)}" height="{_fmt(height)}" '
        f'viewBox="0 0 {_fmt(width)} {_fmt(height)}" '
        'font-family="Helvetica, Arial, sans-serif">'
    )


def capacity_matrix_svg(report: CapacityReport) -> str:
    """Grid over degree pairs (l1, l2); needs a 2-input report.

    Cell (l1, l2) is shaded by the corrected capacity of that basis
    function on a linear 0..1 scale; pairs beyond the degree cap are
    gray. The constant term sits at the origin (bottom-left).
    """
    if report.basis.q != 2:
        raise PreconditionError(
            f"capacity matrix needs q = 2, report has q = {report.basis.q}"
        )
    d_max = report.basis.d_max
    cell = 30.0
    margin_left, margin_top = 70.0, 60.0
    grid = (d_max + 1) * cell
    width = margin_left + grid + 150.0
    height = margin_top + grid + 70.0
    values = {v.basis_index.degrees: v for v in report.values}
    parts = [_svg_open(width, height)]
    parts.append(
        f'<text x="{_fmt(margin_left)}" y="28" font-size="16" fill="#111111">'
        "Capacity matrix</text>"
    )
    for l1 in range(d_max + 1):
        for l2 in range(d_max + 1):
            x = margin_left + l1 * cell
            y = margin_top + (d_max - l2) * cell
            if l1 + l2 > d_max:
                fill = _INVALID_FILL
                title = f"({l1},{l2}) beyond degree cap"
            else:
                value = values[(l1, l2)]
                corrected = 0.0 if value.corrected is None else value.corrected
                fill = _color(corrected)
                title = f"({l1},{l2}) capacity {corrected:.6f}"
            parts.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(cell)}" '
                f'height="{_fmt(cell)}" fill="{fill}" stroke="#ffffff" '
                f'stroke-width="1"><title>{escape(title)}</title></rect>'
            )
    # Axis ticks and labels.
    for l in range(d_max + 1):
        tx = margin_left + (l + 0.5) * cell
        ty = margin_top + grid + 18.0
        parts.append(
            f'<text x="{_fmt(tx)}" y="{_fmt(ty)}" text-anchor="middle" '
            f'font-size="11" fill="#333333">{l}</text>'
        )
        sy = margin_top + (d_max - l + 0.5) * cell + 4.0
        parts.append(
            f'<text x="{_fmt(margin_left - 10)}" y="{_fmt(sy)}" '
            f'text-anchor="end" font-size="11" fill="#333333">{l}</text>'
        )
    parts.append(
        f'<text x="{_fmt(margin_left + grid / 2)}" y="{_fmt(margin_top + grid + 42)}" '
        'text-anchor="middle" font-size="13" fill="#111111">degree of input 1</text>'
    )
    parts.append(
        f'<text x="{_fmt(margin_left - 48)}" y="{_fmt(margin_top + grid / 2)}" '
        'text-anchor="middle" font-size="13" fill="#111111" '
        f'transform="rotate(-90 {_fmt(margin_left - 48)} {_fmt(margin_top + grid / 2)})">'
        "degree of input 2</text>"
    )
    # Color scale legend.
    legend_x = margin_left + grid + 30.0
    legend_h = grid * 0.6
    legend_y = margin_top + (grid - legend_h) / 2
    parts.append(
        '<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">'
        f'<stop offset="0" stop-color="{_color(0.0)}"/>'
        f'<stop offset="1" stop-color="{_color(1.0)}"/>'
        "</linearGradient></defs>"
    )
    parts.append(
        f'<rect x="{_fmt(legend_x)}" y="{_fmt(legend_y)}" width="16" '
        f'height="{_fmt(legend_h)}" fill="url(#scale)" stroke="#333333" '
        'stroke-width="0.5"/>'
    )
    for frac, label in ((0.0, "0"), (0.5, "0.5"), (1.0, "1")):
        ly = legend_y + legend_h * (1.0 - frac) + 4.0
        parts.append(
            f'<text x="{_fmt(legend_x + 22)}" y="{_fmt(ly)}" font-size="11" '
            f'fill="#333333">{label}</text>'
        )
    parts.append(
        _badge(legend_x + 40.0, margin_top - 20.0, report.total_corrected, report.max_capacity)
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _degree_sums(report: CapacityReport) -> tuple[np.ndarray, np.ndarray]:
    """Stacked per-degree sums: rows = (single, two-variable, higher)."""
    d_max = report.basis.d_max
    stacks = np.zeros((3, d_max + 1))
    for value in report.values:
        corrected = 0.0 if value.corrected is None else value.corrected
        degree = value.basis_index.total_degree
        active = sum(1 for l in value.basis_index.degrees if l > 0)
        # The constant term counts as a single-variable contribution.
        row = 0 if active <= 1 else (1 if active == 2 else 2)
        stacks[row, degree] += corrected
    return stacks, stacks.sum(axis=0)


def capacity_barplot_svg(report: CapacityReport) -> str:
    """One stacked bar per total degree, annotated with the exact sums."""
    stacks, totals = _degree_sums(report)
    d_max = report.basis.d_max
    n_bars = d_max + 1
    bar_w, gap = 34.0, 14.0
    margin_left, margin_top = 70.0, 60.0
    plot_h = 260.0
    width = margin_left + n_bars * (bar_w + gap) + 170.0
    height = margin_top + plot_h + 70.0
    top = float(totals.max()) if totals.size else 0.0
    y_max = max(1.0, float(np.ceil(top * 2.0) / 2.0))  # half-unit steps
    scale = plot_h / y_max
    parts = [_svg_open(width, height)]
    parts.append(
        f'<text x="{_fmt(margin_left)}" y="28" font-size="16" fill="#111111">'
        "Capacity by total degree</text>"
    )
    baseline = margin_top + plot_h
    # Horizontal gridlines every 0.5.
    steps = int(round(y_max / 0.5))
    for s in range(steps + 1):
        gy = baseline - s * 0.5 * scale
        parts.append(
            f'<line x1="{_fmt(margin_left)}" y1="{_fmt(gy)}" '
            f'x2="{_fmt(margin_left + n_bars * (bar_w + gap))}" y2="{_fmt(gy)}" '
            'stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(margin_left - 8)}" y="{_fmt(gy + 4)}" '
            f'text-anchor="end" font-size="11" fill="#333333">{s * 0.5:g}</text>'
        )
    for degree in range(n_bars):
        x = margin_left + degree * (bar_w + gap) + gap / 2
        y = baseline
        for row in range(3):
            h = stacks[row, degree] * scale
            if h <= 0:
                continue
            y -= h
            parts.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_w)}" '
                f'height="{_fmt(h)}" fill="{_STACK_FILLS[row]}" '
                'stroke="#ffffff" stroke-width="0.5">'
                f"<title>degree {degree}, {_STACK_LABELS[row]}: "
                f"{stacks[row, degree]:.6f}</title></rect>"
            )
        parts.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(baseline + 16)}" '
            f'text-anchor="middle" font-size="11" fill="#333333">{degree}</text>'
        )
        parts.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(baseline - totals[degree] * scale - 5)}" '
            f'text-anchor="middle" font-size="10" fill="#111111" class="bar-sum">'
            f"{_fmt(totals[degree])}</text>"
        )
    parts.append(
        f'<text x="{_fmt(margin_left + n_bars * (bar_w + gap) / 2)}" '
        f'y="{_fmt(baseline + 40)}" text-anchor="middle" font-size="13" '
        'fill="#111111">total degree</text>'
    )
    legend_x = margin_left + n_bars * (bar_w + gap) + 24.0
    for row in range(3):
        ly = margin_top + 20.0 + row * 22.0
        parts.append(
            f'<rect x="{_fmt(legend_x)}" y="{_fmt(ly - 10)}" width="14" height="14" '
            f'fill="{_STACK_FILLS[row]}" stroke="#333333" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{_fmt(legend_x + 20)}" y="{_fmt(ly + 1)}" font-size="11" '
            f'fill="#333333">{escape(_STACK_LABELS[row])}</text>'
        )
    parts.append(
        _badge(legend_x + 50.0, margin_top + 110.0, report.total_corrected, report.max_capacity)
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_report(report: CapacityReport, kind: str) -> str:
    if kind == KIND_CAPACITY_MATRIX:
        return capacity_matrix_svg(report)
    if kind == KIND_CAPACITY_BARPLOT:
        return capacity_barplot_svg(report)
    raise PreconditionError(
        f"unknown plot kind {kind!r}; expected "
        f"{KIND_CAPACITY_MATRIX!r} or {KIND_CAPACITY_BARPLOT!r}"
    )
