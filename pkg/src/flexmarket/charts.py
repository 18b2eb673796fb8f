"""Minimal deterministic SVG line charts.

CSV files are the canonical output of every experiment; these charts are a
reading convenience, written without a plotting dependency and with fixed
number formatting so reruns reproduce them byte for byte.
"""

from __future__ import annotations

WIDTH, HEIGHT = 640, 400
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 50
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def line_chart(path, title: str, x_label: str, y_label: str, series: dict) -> None:
    """Write an SVG chart; ``series`` maps a label to (xs, ys) sequences."""
    points = [
        (float(x), float(y)) for xs, ys in series.values() for x, y in zip(xs, ys)
    ]
    if not points:
        points = [(0.0, 0.0)]
    x_lo = min(p[0] for p in points)
    x_hi = max(p[0] for p in points)
    y_lo = min(p[1] for p in points)
    y_hi = max(p[1] for p in points)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def sx(x):
        return MARGIN_LEFT + plot_w * (x - x_lo) / (x_hi - x_lo)

    def sy(y):
        return MARGIN_TOP + plot_h * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="22" text-anchor="middle" font-size="15">{title}</text>',
    ]
    axis = (
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>'
        f'<line x1="{MARGIN_LEFT}" y1="{HEIGHT - MARGIN_BOTTOM}" x2="{WIDTH - MARGIN_RIGHT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>'
    )
    parts.append(axis)
    for k in range(5):
        fx = x_lo + (x_hi - x_lo) * k / 4
        fy = y_lo + (y_hi - y_lo) * k / 4
        parts.append(
            f'<text x="{_fmt(sx(fx))}" y="{HEIGHT - MARGIN_BOTTOM + 18}" '
            f'text-anchor="middle">{_fmt(fx)}</text>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(sy(fy) + 4)}" '
            f'text-anchor="end">{_fmt(fy)}</text>'
        )
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{_fmt(sy(fy))}" x2="{WIDTH - MARGIN_RIGHT}" '
            f'y2="{_fmt(sy(fy))}" stroke="#dddddd" stroke-width="0.5"/>'
        )
    parts.append(
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {HEIGHT // 2})">{y_label}</text>'
    )

    for k, (label, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(float(x)))},{_fmt(sy(float(y)))}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        y_legend = MARGIN_TOP + 14 * k
        parts.append(
            f'<line x1="{WIDTH - 160}" y1="{y_legend}" x2="{WIDTH - 140}" '
            f'y2="{y_legend}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{WIDTH - 134}" y="{y_legend + 4}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(parts) + "\n")
