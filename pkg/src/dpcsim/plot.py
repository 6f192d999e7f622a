"""Minimal deterministic SVG plots of the analysis CSV files."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

W, H = 720, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 30, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")

KNOWN_SCHEMAS = (
    ("code", "ideal_ps", "measured_ps", "inl_ps", "dnl_ps"),
    ("trial", "max_inl_ps", "min_inl_ps", "vth_at_max_mv"),
    ("bin_center_ps", "count"),
    ("x_value", "worst_inl_ps", "power_uw"),
    ("time_ps", "v_ldo_v"),
    ("quantity", "value"),
)

# series drawn by default for each schema; others fall back to all numeric columns
DEFAULT_SERIES = {
    KNOWN_SCHEMAS[0]: ("inl_ps", "dnl_ps"),
    KNOWN_SCHEMAS[1]: ("max_inl_ps", "min_inl_ps"),
    KNOWN_SCHEMAS[3]: ("worst_inl_ps",),
}


class PlotError(ValueError):
    pass


def _read(csv_path) -> tuple[list[str], list[list[str]]]:
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise PlotError(f"{csv_path}: no data rows")
    header, body = rows[0], [r for r in rows[1:] if r]
    if not body:
        raise PlotError(f"{csv_path}: no data rows")
    if tuple(header) not in KNOWN_SCHEMAS:
        raise PlotError(f"{csv_path}: schema mismatch, unknown header {header}")
    if any(len(r) != len(header) for r in body):
        raise PlotError(f"{csv_path}: schema mismatch, ragged rows")
    return header, body


def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise PlotError(f"schema mismatch: non-numeric value {s!r}") from None


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.floor(lo / step) * step
    ticks = []
    t = start
    while t <= hi + step * 1e-9:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _frame(title: str, xlabel: str, ylabel: str, xt, yt, sx, sy) -> list[str]:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{W / 2:.1f}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="16">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="#000"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="#000"/>',
    ]
    for t in xt:
        x = sx(t)
        parts.append(f'<line x1="{x:.2f}" y1="{H - BOTTOM}" x2="{x:.2f}" y2="{H - BOTTOM + 5}" stroke="#000"/>')
        parts.append(f'<text x="{x:.2f}" y="{H - BOTTOM + 18}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    for t in yt:
        y = sy(t)
        parts.append(f'<line x1="{LEFT}" y1="{y:.2f}" x2="{W - RIGHT}" y2="{y:.2f}" stroke="#e0e0e0"/>')
        parts.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{t:g}</text>')
    parts.append(f'<text x="{(LEFT + W - RIGHT) / 2:.1f}" y="{H - 15}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13">{escape(xlabel)}</text>')
    parts.append(f'<text x="18" y="{(TOP + H - BOTTOM) / 2:.1f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="13" '
                 f'transform="rotate(-90 18 {(TOP + H - BOTTOM) / 2:.1f})">{escape(ylabel)}</text>')
    return parts


def _scales(xs, ys):
    xt, yt = _nice_ticks(min(xs), max(xs)), _nice_ticks(min(ys), max(ys))
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return H - BOTTOM - (v - y0) / (y1 - y0) * ph

    return xt, yt, sx, sy


def render_line(header, body, title: str, series=None) -> str:
    xs = [_float(r[0]) for r in body]
    cols = series or DEFAULT_SERIES.get(tuple(header)) or header[1:]
    idx = [header.index(c) for c in cols]
    data = {c: [_float(r[i]) for r in body] for c, i in zip(cols, idx)}
    finite = [v for vals in data.values() for v in vals if math.isfinite(v)]
    if not finite:
        raise PlotError("no finite values to plot")
    xt, yt, sx, sy = _scales(xs, finite)
    parts = _frame(title, header[0], ", ".join(cols), xt, yt, sx, sy)
    for k, (name, vals) in enumerate(data.items()):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, vals) if math.isfinite(y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        for x, y in zip(xs, vals):
            if math.isfinite(y):
                parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="2" fill="{color}"/>')
        parts.append(f'<text x="{W - RIGHT - 4}" y="{TOP + 14 + 14 * k}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11" fill="{color}">{escape(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_histogram(header, body, title: str) -> str:
    labels = [r[0] for r in body]
    numeric_x = all(_is_number(s) for s in labels)
    ys = [_float(r[1]) for r in body]
    n = len(body)
    if numeric_x:
        xs = [float(s) for s in labels]
        width = min((b - a for a, b in zip(xs, xs[1:])), default=1.0)
        lo, hi = min(xs) - width / 2, max(xs) + width / 2
    else:
        xs = [float(i) for i in range(n)]
        width, lo, hi = 1.0, -0.5, n - 0.5
    xt, yt, sx, sy = _scales([lo, hi], [0.0] + ys)
    if not numeric_x:
        xt = []
    parts = _frame(title, header[0], header[1], xt, yt, sx, sy)
    for i, (x, y) in enumerate(zip(xs, ys)):
        x0, x1 = sx(x - 0.45 * width), sx(x + 0.45 * width)
        parts.append(f'<rect x="{x0:.2f}" y="{sy(y):.2f}" width="{max(x1 - x0, 0.5):.2f}" '
                     f'height="{sy(0.0) - sy(y):.2f}" fill="{COLORS[0]}"/>')
        if not numeric_x:
            parts.append(f'<text x="{sx(x):.2f}" y="{H - BOTTOM + 18}" text-anchor="middle" '
                         f'font-family="sans-serif" font-size="11">{escape(labels[i])}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def emit_plot(csv_path, kind: str = "line", svg_path=None, title: str | None = None) -> Path:
    """Render ``csv_path`` as an SVG next to it (or at ``svg_path``).

    Nothing is written when the CSV is empty or does not match a known schema.
    """
    if kind not in ("line", "histogram"):
        raise PlotError(f"unknown plot kind {kind!r}")
    csv_path = Path(csv_path)
    header, body = _read(csv_path)
    title = title or csv_path.stem.replace("_", " ")
    svg = render_line(header, body, title) if kind == "line" else render_histogram(header, body, title)
    out = Path(svg_path) if svg_path else csv_path.with_suffix(".svg")
    out.write_text(svg)
    return out
