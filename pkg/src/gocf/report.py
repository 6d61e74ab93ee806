"""Static SVG trend charts with confidence bands.

Output is a pure function of the input rows: no timestamps, no random ids,
fixed float formatting. The source data is embedded in a <metadata> block so
a chart can be audited without the CSV next to it.
"""

from __future__ import annotations

from pathlib import Path

WIDTH, HEIGHT = 860, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64, 20, 40, 56


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_trend_svg(rows: list[tuple[str, float, float, float]], title: str,
                     cutoff_period: str | None = None,
                     baseline_period: str | None = None) -> str:
    """Line chart of (period, effect, ci_low, ci_high) rows in period order."""
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">')
    parts = [head]
    parts.append("<metadata>period,effect,ci_low,ci_high\n"
                 + "\n".join(f"{p},{e!r},{lo!r},{hi!r}" for p, e, lo, hi in rows)
                 + "</metadata>")
    parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    parts.append(f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="15">{_xml(title)}</text>')

    if not rows:
        parts.append(f'<text x="{WIDTH // 2}" y="{HEIGHT // 2}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="14" fill="#777">no data</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    periods = [r[0] for r in rows]
    lo = min(r[2] for r in rows)
    hi = max(r[3] for r in rows)
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.08 * (hi - lo)
    lo -= pad
    hi += pad

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def x_at(i: int) -> float:
        if len(rows) == 1:
            return MARGIN_L + plot_w / 2
        return MARGIN_L + plot_w * i / (len(rows) - 1)

    def y_at(v: float) -> float:
        return MARGIN_T + plot_h * (hi - v) / (hi - lo)

    # axes and y ticks
    parts.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
                 f'y2="{MARGIN_T + plot_h}" stroke="#333"/>')
    parts.append(f'<line x1="{MARGIN_L}" y1="{MARGIN_T + plot_h}" '
                 f'x2="{MARGIN_L + plot_w}" y2="{MARGIN_T + plot_h}" stroke="#333"/>')
    for tick in range(5):
        v = lo + (hi - lo) * tick / 4
        y = y_at(v)
        parts.append(f'<line x1="{MARGIN_L - 4}" y1="{_fmt(y)}" x2="{MARGIN_L}" '
                     f'y2="{_fmt(y)}" stroke="#333"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{_fmt(y + 4)}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{v:.3g}</text>')
    step = max(1, len(periods) // 12)
    for i in range(0, len(periods), step):
        parts.append(f'<text x="{_fmt(x_at(i))}" y="{MARGIN_T + plot_h + 18}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="10">{_xml(periods[i])}</text>')

    # confidence band: lows forward, highs back
    band = ["M"]
    for i, r in enumerate(rows):
        band.append(f"{_fmt(x_at(i))},{_fmt(y_at(r[2]))}")
        band.append("L" if i < len(rows) - 1 else "")
    for i in range(len(rows) - 1, -1, -1):
        band.append(f"L{_fmt(x_at(i))},{_fmt(y_at(rows[i][3]))}")
    band.append("Z")
    parts.append(f'<path d="{" ".join(p for p in band if p)}" '
                 f'fill="#7fa8d9" fill-opacity="0.35" stroke="none"/>')

    points = " ".join(f"{_fmt(x_at(i))},{_fmt(y_at(r[1]))}"
                      for i, r in enumerate(rows))
    parts.append(f'<polyline points="{points}" fill="none" stroke="#1f4e8c" '
                 f'stroke-width="1.6"/>')
    for i, r in enumerate(rows):
        parts.append(f'<circle cx="{_fmt(x_at(i))}" cy="{_fmt(y_at(r[1]))}" '
                     f'r="2.4" fill="#1f4e8c" class="datapoint"/>')

    if baseline_period in periods:
        i = periods.index(baseline_period)
        parts.append(f'<circle cx="{_fmt(x_at(i))}" cy="{_fmt(y_at(rows[i][1]))}" '
                     f'r="5" fill="none" stroke="#c0392b" stroke-width="1.4" '
                     f'class="baseline"/>')
    if cutoff_period is not None:
        after = [i for i, p in enumerate(periods) if p >= cutoff_period]
        if after:
            x = x_at(after[0])
            parts.append(f'<line x1="{_fmt(x)}" y1="{MARGIN_T}" x2="{_fmt(x)}" '
                         f'y2="{MARGIN_T + plot_h}" stroke="#c0392b" '
                         f'stroke-dasharray="5,4" stroke-width="1.2" '
                         f'class="cutoff"/>')
            parts.append(f'<text x="{_fmt(x + 4)}" y="{MARGIN_T + 12}" '
                         f'font-family="sans-serif" font-size="10" '
                         f'fill="#c0392b">{_xml(cutoff_period)}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _xml(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def render_trend_file(csv_path: str | Path, svg_path: str | Path, title: str,
                      cutoff_period: str | None = None,
                      baseline_period: str | None = None) -> None:
    import csv as _csv
    rows = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        for row in _csv.DictReader(fh):
            rows.append((row["period"], float(row["effect"]),
                         float(row["ci_low"]), float(row["ci_high"])))
    svg = render_trend_svg(rows, title, cutoff_period, baseline_period)
    Path(svg_path).write_text(svg, encoding="utf-8")
