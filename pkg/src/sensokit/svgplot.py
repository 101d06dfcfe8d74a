"""Deterministic SVG rendering of result payloads.

Hand-rolled SVG so output bytes are stable across runs and platforms,
which makes golden-file tests possible. Every chart is 640x480 with a
fixed margin box; numbers are written with repr-stable formatting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

W, H = 640, 480
MARGIN = dict(left=60, right=20, top=30, bottom=45)

PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#aec7e8", "#ffbb78",
]


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.6g}"


@dataclass
class _Frame:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if self.xmax == self.xmin:
            self.xmin -= 1.0
            self.xmax += 1.0
        if self.ymax == self.ymin:
            self.ymin -= 1.0
            self.ymax += 1.0

    def px(self, x: float) -> float:
        w = W - MARGIN["left"] - MARGIN["right"]
        return MARGIN["left"] + (x - self.xmin) / (self.xmax - self.xmin) * w

    def py(self, y: float) -> float:
        h = H - MARGIN["top"] - MARGIN["bottom"]
        return H - MARGIN["bottom"] - (y - self.ymin) / (self.ymax - self.ymin) * h


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    else:
        step = 10 * mag
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * max(1.0, abs(hi)):
        ticks.append(round(t, 12))
        t += step
    return ticks


class _Svg:
    def __init__(self, title: str):
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2:.1f}" y="18" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        ]

    def add(self, s: str) -> None:
        self.parts.append(s)

    def axes(self, fr: _Frame, xlabel: str = "", ylabel: str = "",
             xticks: list[tuple[float, str]] | None = None) -> None:
        x0, x1 = MARGIN["left"], W - MARGIN["right"]
        y0, y1 = H - MARGIN["bottom"], MARGIN["top"]
        self.add(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
        self.add(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
        if xticks is None:
            xticks = [(t, _fmt(t)) for t in _ticks(fr.xmin, fr.xmax)]
        for t, lab in xticks:
            px = fr.px(t)
            self.add(f'<line x1="{px:.2f}" y1="{y0}" x2="{px:.2f}" y2="{y0 + 4}" stroke="black"/>')
            self.add(f'<text x="{px:.2f}" y="{y0 + 16}" text-anchor="middle">{_esc(lab)}</text>')
        for t in _ticks(fr.ymin, fr.ymax):
            py = fr.py(t)
            self.add(f'<line x1="{x0 - 4}" y1="{py:.2f}" x2="{x0}" y2="{py:.2f}" stroke="black"/>')
            self.add(f'<text x="{x0 - 7}" y="{py + 3:.2f}" text-anchor="end">{_fmt(t)}</text>')
        if xlabel:
            self.add(f'<text x="{(x0 + x1) / 2:.1f}" y="{H - 8}" text-anchor="middle">{_esc(xlabel)}</text>')
        if ylabel:
            self.add(
                f'<text x="14" y="{(y0 + y1) / 2:.1f}" text-anchor="middle" '
                f'transform="rotate(-90 14 {(y0 + y1) / 2:.1f})">{_esc(ylabel)}</text>'
            )

    def done(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def scatter_svg(
    payload: dict,
    title: str,
    show_labels: bool = True,
    rings: list[float] | None = None,
    sector_boundaries: list[float] | None = None,
) -> str:
    """Scatter of labeled points; optional unit-circle rings and sector rays."""
    if "points" in payload:
        pts = [(p[0], p[1]) for p in payload["points"]]
        labels = payload.get("labels", [""] * len(pts))
        groups = payload.get("group_index")
        series = [(pts, labels, groups)]
    else:
        series = [(list(zip(payload["x"], payload["y"])), payload.get("labels"), None)]
    xs = [p[0] for s in series for p in s[0]]
    ys = [p[1] for s in series for p in s[0]]
    if rings:
        xs += [-max(rings), max(rings)]
        ys += [-max(rings), max(rings)]
    pad_x = 0.08 * ((max(xs) - min(xs)) or 1.0)
    pad_y = 0.08 * ((max(ys) - min(ys)) or 1.0)
    fr = _Frame(min(xs) - pad_x, max(xs) + pad_x, min(ys) - pad_y, max(ys) + pad_y)
    svg = _Svg(title)
    svg.axes(fr)
    if fr.xmin < 0 < fr.xmax:
        svg.add(f'<line x1="{fr.px(0):.2f}" y1="{fr.py(fr.ymin):.2f}" x2="{fr.px(0):.2f}" '
                f'y2="{fr.py(fr.ymax):.2f}" stroke="#cccccc"/>')
    if fr.ymin < 0 < fr.ymax:
        svg.add(f'<line x1="{fr.px(fr.xmin):.2f}" y1="{fr.py(0):.2f}" x2="{fr.px(fr.xmax):.2f}" '
                f'y2="{fr.py(0):.2f}" stroke="#cccccc"/>')
    for r in rings or []:
        rx = abs(fr.px(r) - fr.px(0))
        ry = abs(fr.py(r) - fr.py(0))
        svg.add(f'<ellipse cx="{fr.px(0):.2f}" cy="{fr.py(0):.2f}" rx="{rx:.2f}" ry="{ry:.2f}" '
                f'fill="none" stroke="#888888"/>')
    for ang in sector_boundaries or []:
        r = max(abs(fr.xmax), abs(fr.xmin), abs(fr.ymax), abs(fr.ymin))
        svg.add(f'<line x1="{fr.px(0):.2f}" y1="{fr.py(0):.2f}" '
                f'x2="{fr.px(r * math.cos(ang)):.2f}" y2="{fr.py(r * math.sin(ang)):.2f}" '
                f'stroke="#bbbbbb" stroke-dasharray="4 3"/>')
    for pts, labels, groups in series:
        for i, (x, y) in enumerate(pts):
            color = PALETTE[groups[i] % len(PALETTE)] if groups else PALETTE[0]
            svg.add(f'<circle cx="{fr.px(x):.2f}" cy="{fr.py(y):.2f}" r="3" fill="{color}"/>')
            if show_labels and labels:
                svg.add(f'<text x="{fr.px(x) + 5:.2f}" y="{fr.py(y) - 4:.2f}">{_esc(str(labels[i]))}</text>')
    return svg.done()


def line_svg(series: list[dict], title: str, xlabel: str = "", ylabel: str = "",
             x_values: list[float] | None = None) -> str:
    """Multi-series line chart; series = [{label, values, (x)}]."""
    all_y = [v for s in series for v in s["values"]]
    xs = x_values if x_values is not None else list(range(len(series[0]["values"])))
    fr = _Frame(min(xs), max(xs), min(all_y + [0.0]), max(all_y))
    svg = _Svg(title)
    svg.axes(fr, xlabel, ylabel, xticks=[(x, _fmt(x)) for x in xs])
    for si, s in enumerate(series):
        color = PALETTE[si % len(PALETTE)]
        sx = s.get("x", xs)
        path = " ".join(
            f'{"M" if i == 0 else "L"}{fr.px(x):.2f},{fr.py(y):.2f}'
            for i, (x, y) in enumerate(zip(sx, s["values"]))
        )
        svg.add(f'<path d="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        svg.add(f'<text x="{W - MARGIN["right"] - 150}" y="{MARGIN["top"] + 14 * si + 10}" '
                f'fill="{color}">{_esc(s["label"])}</text>')
    return svg.done()


def box_svg(summaries: list[dict], title: str) -> str:
    """Box-and-whisker chart from five-number summaries."""
    lo = min(s["min"] for s in summaries)
    hi = max(s["max"] for s in summaries)
    fr = _Frame(0.0, float(len(summaries)), lo, hi)
    svg = _Svg(title)
    svg.axes(fr, "", "rating",
             xticks=[(i + 0.5, s["series_label"]) for i, s in enumerate(summaries)])
    bw = 0.3
    for i, s in enumerate(summaries):
        cx = i + 0.5
        for y in (s["min"], s["max"]):
            svg.add(f'<line x1="{fr.px(cx - bw / 2):.2f}" y1="{fr.py(y):.2f}" '
                    f'x2="{fr.px(cx + bw / 2):.2f}" y2="{fr.py(y):.2f}" stroke="black"/>')
        svg.add(f'<line x1="{fr.px(cx):.2f}" y1="{fr.py(s["min"]):.2f}" '
                f'x2="{fr.px(cx):.2f}" y2="{fr.py(s["max"]):.2f}" stroke="black"/>')
        svg.add(f'<rect x="{fr.px(cx - bw):.2f}" y="{fr.py(s["q75"]):.2f}" '
                f'width="{fr.px(cx + bw) - fr.px(cx - bw):.2f}" '
                f'height="{fr.py(s["q25"]) - fr.py(s["q75"]):.2f}" '
                f'fill="#9fd49f" stroke="black"/>')
        svg.add(f'<line x1="{fr.px(cx - bw):.2f}" y1="{fr.py(s["median"]):.2f}" '
                f'x2="{fr.px(cx + bw):.2f}" y2="{fr.py(s["median"]):.2f}" '
                f'stroke="#0a5d0a" stroke-width="2"/>')
    return svg.done()


def stacked_histogram_svg(table: dict, title: str, as_percent: bool = False) -> str:
    """One bar per series, stacked by rating level."""
    data = table["percents"] if as_percent else table["counts"]
    series_labels = table["series_labels"]
    bins = table["bin_values"]
    totals = [sum(row) for row in data]
    fr = _Frame(0.0, float(len(series_labels)), 0.0, max(totals) or 1.0)
    svg = _Svg(title)
    svg.axes(fr, "", "% of consumers" if as_percent else "consumers",
             xticks=[(i + 0.5, lab) for i, lab in enumerate(series_labels)])
    bw = 0.35
    for i, row in enumerate(data):
        y0 = 0.0
        for j, v in enumerate(row):
            if v == 0:
                continue
            color = PALETTE[j % len(PALETTE)]
            svg.add(f'<rect x="{fr.px(i + 0.5 - bw):.2f}" y="{fr.py(y0 + v):.2f}" '
                    f'width="{fr.px(i + 0.5 + bw) - fr.px(i + 0.5 - bw):.2f}" '
                    f'height="{fr.py(y0) - fr.py(y0 + v):.2f}" fill="{color}" stroke="white"/>')
            y0 += v
    for j, b in enumerate(bins):
        color = PALETTE[j % len(PALETTE)]
        svg.add(f'<rect x="{W - MARGIN["right"] - 58}" y="{MARGIN["top"] + 13 * j}" '
                f'width="10" height="10" fill="{color}"/>')
        svg.add(f'<text x="{W - MARGIN["right"] - 44}" y="{MARGIN["top"] + 13 * j + 9}">{b}</text>')
    return svg.done()


def histogram_svg(table: dict, title: str) -> str:
    """Single-series histogram with percentage labels above the bars."""
    counts = table["counts"][0]
    percents = table["percents"][0]
    bins = table["bin_values"]
    fr = _Frame(-0.5, len(bins) - 0.5, 0.0, max(counts) or 1.0)
    svg = _Svg(title)
    svg.axes(fr, "rating", "consumers", xticks=[(i, str(b)) for i, b in enumerate(bins)])
    for i, (c, p) in enumerate(zip(counts, percents)):
        if c == 0:
            continue
        svg.add(f'<rect x="{fr.px(i - 0.35):.2f}" y="{fr.py(c):.2f}" '
                f'width="{fr.px(i + 0.35) - fr.px(i - 0.35):.2f}" '
                f'height="{fr.py(0) - fr.py(c):.2f}" fill="{PALETTE[0]}"/>')
        svg.add(f'<text x="{fr.px(i):.2f}" y="{fr.py(c) - 4:.2f}" '
                f'text-anchor="middle">{p:.1f}%</text>')
    return svg.done()


def main_effect_svg(payload: dict, title: str) -> str:
    """LS means with 95% confidence whiskers."""
    n = len(payload["levels"])
    lo = min(payload["lower"])
    hi = max(payload["upper"])
    fr = _Frame(-0.5, n - 0.5, lo - 0.05 * (hi - lo or 1), hi + 0.05 * (hi - lo or 1))
    svg = _Svg(title)
    svg.axes(fr, payload["factor"], "LS mean",
             xticks=[(i, lab) for i, lab in enumerate(payload["levels"])])
    for i in range(n):
        svg.add(f'<line x1="{fr.px(i):.2f}" y1="{fr.py(payload["lower"][i]):.2f}" '
                f'x2="{fr.px(i):.2f}" y2="{fr.py(payload["upper"][i]):.2f}" stroke="black"/>')
        for y in (payload["lower"][i], payload["upper"][i]):
            svg.add(f'<line x1="{fr.px(i) - 4:.2f}" y1="{fr.py(y):.2f}" '
                    f'x2="{fr.px(i) + 4:.2f}" y2="{fr.py(y):.2f}" stroke="black"/>')
        svg.add(f'<circle cx="{fr.px(i):.2f}" cy="{fr.py(payload["estimates"][i]):.2f}" '
                f'r="4" fill="{PALETTE[0]}"/>')
    path = " ".join(
        f'{"M" if i == 0 else "L"}{fr.px(i):.2f},{fr.py(v):.2f}'
        for i, v in enumerate(payload["estimates"])
    )
    svg.add(f'<path d="{path}" fill="none" stroke="{PALETTE[0]}"/>')
    return svg.done()


def interaction_svg(payload: dict, title: str) -> str:
    """One line per level of the second factor across the first factor."""
    x_levels = payload["x_levels"]
    series = [
        {"label": s["label"], "values": s["values"], "x": list(range(len(x_levels)))}
        for s in payload["series"]
    ]
    return line_svg(series, title, xlabel=payload["x_factor"], ylabel="LS mean",
                    x_values=list(range(len(x_levels))))
