"""Static SVG line charts of per-episode CSV files."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .io import FormatError, read_csv

METRICS = {
    "iterates": ("violation_max", "constraint violation"),
    "strong": ("strong_reg_u", "strong constraint regret"),
    "weak": ("weak_reg_u", "weak constraint regret"),
}
COLORS = ("#7b2cbf", "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=150, top=30, bottom=50)
PAD = 0.05


def padded_range(lo: float, hi: float) -> tuple[float, float]:
    lo, hi = float(lo), float(hi)
    span = hi - lo
    if span == 0:
        span = abs(hi) or 1.0
    return lo - PAD * span, hi + PAD * span


def collect_series(csv_paths, column: str) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """One series per algorithm; files sharing an algorithm are averaged per episode."""
    grouped = defaultdict(list)
    for path in csv_paths:
        rows = read_csv(path)
        by_algo = defaultdict(dict)
        for row in rows:
            try:
                by_algo[row["algo"]][int(row["episode"])] = float(row[column])
            except (KeyError, ValueError) as exc:
                raise FormatError(f"{path}: bad row {row}") from exc
        for algo, pts in by_algo.items():
            grouped[algo].append(pts)
    series = {}
    for algo in sorted(grouped):
        episodes = sorted(set.intersection(*(set(p) for p in grouped[algo])))
        ys = np.mean([[p[e] for e in episodes] for p in grouped[algo]], axis=0)
        series[algo] = (np.asarray(episodes, float), np.asarray(ys, float))
    return series


def emit_plot(csv_paths, kind: str, out_path, column: str | None = None) -> Path:
    if kind not in METRICS:
        raise ValueError(f"kind must be one of {sorted(METRICS)}")
    column, ylabel = (column, column) if column else METRICS[kind]
    series = collect_series(csv_paths, column)
    if not series:
        raise FormatError("no data rows")
    xs = np.concatenate([s[0] for s in series.values()])
    ys = np.concatenate([s[1] for s in series.values()])
    x0, x1 = padded_range(xs.min(), xs.max())
    y0, y1 = padded_range(ys.min(), ys.max())
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (y1 - y) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'data-xmin="{x0!r}" data-xmax="{x1!r}" data-ymin="{y0!r}" data-ymax="{y1!r}">',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="#444"/>',
        f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">episode</text>',
        f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">{escape(ylabel)}</text>',
    ]
    for value, x in ((x0, px(x0)), (x1, px(x1))):
        parts.append(f'<text class="xtick" x="{x:.3f}" y="{MARGIN["top"] + ph + 18}" '
                     f'text-anchor="middle">{value:.4g}</text>')
    for value, y in ((y0, py(y0)), (y1, py(y1))):
        parts.append(f'<text class="ytick" x="{MARGIN["left"] - 6}" y="{y:.3f}" '
                     f'text-anchor="end">{value:.4g}</text>')
    for i, (algo, (sx, sy)) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        points = " ".join(f"{px(a):.3f},{py(b):.3f}" for a, b in zip(sx, sy))
        parts.append(f'<polyline data-series="{escape(algo)}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5" points="{points}"/>')
        ly = MARGIN["top"] + 16 + 18 * i
        lx = WIDTH - MARGIN["right"] + 10
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text class="legend" x="{lx + 26}" y="{ly + 4}">{escape(algo)}</text>')
    parts.append("</svg>")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(parts) + "\n")
    return out_path
