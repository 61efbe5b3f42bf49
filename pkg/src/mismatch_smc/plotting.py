"""Static SVG line plots written without a plotting library.

Long traces are reduced to a min/max envelope per horizontal pixel bucket so
that a chattering control signal still shows its full band.
"""

from __future__ import annotations

import math
import os
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .simulation import TrajectoryRecord

__all__ = ["downsample_envelope", "line_plot_svg", "write_trajectory_plots", "write_comparison_plots"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")
WIDTH, HEIGHT = 820, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 30, 45


def downsample_envelope(t: np.ndarray, y: np.ndarray, buckets: int = 800) -> tuple[np.ndarray, np.ndarray]:
    """Keep the first, min and max sample of every bucket, in time order."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size <= 3 * buckets:
        return t, y
    edges = np.linspace(0, t.size, buckets + 1).astype(int)
    keep = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        seg = y[lo:hi]
        keep.extend(sorted({lo, lo + int(np.argmin(seg)), lo + int(np.argmax(seg))}))
    keep.append(t.size - 1)
    idx = np.asarray(keep)
    return t[idx], y[idx]


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def line_plot_svg(
    series: Sequence[tuple[str, np.ndarray, np.ndarray]],
    *,
    title: str = "",
    xlabel: str = "t [s]",
    ylabel: str = "",
) -> str:
    """Render ``(label, t, y)`` series into one SVG document."""
    pts = [(lab, *downsample_envelope(t, y)) for lab, t, y in series]
    finite = [y[np.isfinite(y)] for _, _, y in pts]
    ys = np.concatenate(finite) if finite else np.zeros(1)
    ts = np.concatenate([t for _, t, _ in pts]) if pts else np.zeros(1)
    if ys.size == 0:
        ys = np.zeros(1)
    x0, x1 = float(ts.min()), float(ts.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 <= x0:
        x1 = x0 + 1.0
    pad = 0.05 * (y1 - y0) if y1 > y0 else max(abs(y0), 1.0) * 0.1
    y0, y1 = y0 - pad, y1 + pad

    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return MARGIN_T + (y1 - v) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for v in _nice_ticks(x0, x1):
        px = sx(v)
        out.append(f'<line x1="{px:.1f}" y1="{MARGIN_T}" x2="{px:.1f}" y2="{MARGIN_T + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{px:.1f}" y="{MARGIN_T + ph + 14}" text-anchor="middle">{v:g}</text>')
    for v in _nice_ticks(y0, y1):
        py = sy(v)
        out.append(f'<line x1="{MARGIN_L}" y1="{py:.1f}" x2="{MARGIN_L + pw}" y2="{py:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN_L - 6}" y="{py + 4:.1f}" text-anchor="end">{v:.4g}</text>')
    for i, (lab, t, y) in enumerate(pts):
        color = PALETTE[i % len(PALETTE)]
        ok = np.isfinite(y)
        coords = " ".join(f"{sx(a):.1f},{sy(b):.1f}" for a, b in zip(t[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{coords}"/>')
        ly = MARGIN_T + 12 + 16 * i
        lx = MARGIN_L + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly}">{escape(lab)}</text>')
    if title:
        out.append(f'<text x="{MARGIN_L + pw / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2}" y="{HEIGHT - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cy = MARGIN_T + ph / 2
        out.append(f'<text x="16" y="{cy}" text-anchor="middle" transform="rotate(-90 16 {cy})">{escape(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write(path: str, svg: str) -> str:
    with open(path, "w") as fh:
        fh.write(svg)
    return path


def write_trajectory_plots(tr: TrajectoryRecord, out_dir: str | os.PathLike, name: str) -> list[str]:
    """State, control, disturbance-estimate and estimation-signal panels for one run."""
    out_dir = os.fspath(out_dir)
    t = tr["t"]
    ctl = str(tr.controller)
    panels = {
        "x1": [("x1", t, tr["x1"])],
        "x2": [("x2", t, tr["x2"])],
        "u": [("u", t, tr["u"])],
        "disturbance": [("d", t, tr["d_true"]), ("d_hat BNDO", t, tr["d_hat_bn"]), ("d_hat SLDO", t, tr["d_hat_sl"])],
        "estimation": [("tau_c", t, tr["tau_c"]), ("tau_n", t, tr["tau_n"])],
    }
    paths = []
    for key, series in panels.items():
        svg = line_plot_svg(series, title=f"{name} / {ctl}: {key}", ylabel=key)
        paths.append(_write(os.path.join(out_dir, f"{name}_{key}.svg"), svg))
    return paths


def write_comparison_plots(
    records: Mapping[str, TrajectoryRecord], out_dir: str | os.PathLike, name: str
) -> list[str]:
    """Overlay x1, x2 and u of several runs (diverged runs plot their accepted prefix)."""
    out_dir = os.fspath(out_dir)
    paths = []
    for key in ("x1", "x2", "u"):
        series = [(label, tr["t"], tr[key]) for label, tr in records.items() if len(tr)]
        svg = line_plot_svg(series, title=f"{name}: {key}", ylabel=key)
        paths.append(_write(os.path.join(out_dir, f"{name}_compare_{key}.svg"), svg))
    return paths
