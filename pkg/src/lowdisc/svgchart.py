"""Hand-emitted SVG success-rate chart.

Writes plain SVG text with fixed-precision coordinates so the same records
always yield byte-identical output.  One polyline per (experiment, sampler)
series, x axis is log2 of the point count, y axis is success rate percent.
"""

from __future__ import annotations

import math

__all__ = ["success_chart"]

WIDTH = 800
HEIGHT = 500
MARGIN_LEFT = 70
MARGIN_RIGHT = 190
MARGIN_TOP = 40
MARGIN_BOTTOM = 60

# (stroke color, dash pattern or None); cycled across series
PALETTE = [
    ("#1b6ca8", None),
    ("#c23b22", None),
    ("#2e8540", None),
    ("#8031a7", None),
    ("#b8860b", "6,3"),
    ("#11698e", "2,3"),
    ("#944e2c", "8,3,2,3"),
    ("#444444", "4,4"),
]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _x_map(ns: list[int]):
    lo = math.log2(min(ns))
    hi = math.log2(max(ns))
    span = hi - lo
    x0 = MARGIN_LEFT
    x1 = WIDTH - MARGIN_RIGHT

    def to_x(n: int) -> float:
        if span == 0.0:
            return (x0 + x1) / 2.0
        return x0 + (math.log2(n) - lo) / span * (x1 - x0)

    return to_x


def _to_y(rate: float) -> float:
    y0 = HEIGHT - MARGIN_BOTTOM
    y1 = MARGIN_TOP
    return y0 + rate / 100.0 * (y1 - y0)


def success_chart(records) -> str:
    """Render success rate vs point count as an SVG document string."""
    from lowdisc.bench import _display_orders, summarize

    if not records:
        raise ValueError("no records to chart")
    summaries = {(s.experiment, s.sampler, s.n): s for s in summarize(records)}
    experiments, samplers, ns = _display_orders(records)
    ns = sorted(ns)
    to_x = _x_map(ns)
    series = []
    for exp in experiments:
        for sampler in samplers:
            pts = [
                (n, summaries[(exp, sampler, n)].success_rate)
                for n in ns
                if (exp, sampler, n) in summaries
            ]
            if pts:
                label = sampler if len(experiments) == 1 else f"{exp}/{sampler}"
                series.append((label, pts))

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    plot_right = WIDTH - MARGIN_RIGHT
    plot_bottom = HEIGHT - MARGIN_BOTTOM

    # gridlines + y labels every 20 percent
    for rate in range(0, 101, 20):
        y = _to_y(float(rate))
        out.append(
            f'<line x1="{MARGIN_LEFT}" y1="{_fmt(y)}" x2="{plot_right}" '
            f'y2="{_fmt(y)}" stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{rate}</text>'
        )

    # x ticks at each point count
    for n in ns:
        x = to_x(n)
        out.append(
            f'<line x1="{_fmt(x)}" y1="{plot_bottom}" x2="{_fmt(x)}" '
            f'y2="{plot_bottom + 5}" stroke="#333333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_fmt(x)}" y="{plot_bottom + 20}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{n}</text>'
        )

    # axes
    out.append(
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{plot_bottom}" stroke="#333333" stroke-width="1.5"/>'
    )
    out.append(
        f'<line x1="{MARGIN_LEFT}" y1="{plot_bottom}" x2="{plot_right}" '
        f'y2="{plot_bottom}" stroke="#333333" stroke-width="1.5"/>'
    )
    out.append(
        f'<text x="{(MARGIN_LEFT + plot_right) // 2}" y="{HEIGHT - 15}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">'
        f"points N (log scale)</text>"
    )
    out.append(
        f'<text x="18" y="{(MARGIN_TOP + plot_bottom) // 2}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 18 {(MARGIN_TOP + plot_bottom) // 2})">'
        f"success rate %</text>"
    )

    # series polylines, markers, legend
    legend_x = plot_right + 15
    for idx, (label, pts) in enumerate(series):
        color, dash = PALETTE[idx % len(PALETTE)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        coords = " ".join(f"{_fmt(to_x(n))},{_fmt(_to_y(r))}" for n, r in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="2"{dash_attr}/>'
        )
        for n, r in pts:
            out.append(
                f'<circle cx="{_fmt(to_x(n))}" cy="{_fmt(_to_y(r))}" r="3" '
                f'fill="{color}"/>'
            )
        ly = MARGIN_TOP + 10 + idx * 20
        out.append(
            f'<line x1="{legend_x}" y1="{ly}" x2="{legend_x + 24}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"{dash_attr}/>'
        )
        out.append(
            f'<text x="{legend_x + 30}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"
