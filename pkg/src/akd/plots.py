"""Self-contained SVG charts for the per-epoch metrics CSVs.

Three fixed charts: total loss (train and val), validation accuracy, and the
alpha trajectory with a +/- one-std band. No plotting dependencies; the SVG
text is written directly so output is byte-stable.
"""

from __future__ import annotations

import os

from .errors import ParseError
from .metrics import read_metrics

WIDTH = 800
HEIGHT = 500
MARGIN_LEFT = 70
MARGIN_RIGHT = 24
MARGIN_TOP = 48
MARGIN_BOTTOM = 56

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _series_label(path) -> str:
    stem = os.path.splitext(os.path.basename(path))[0]
    if stem.startswith("metrics_"):
        stem = stem[len("metrics_") :]
    return stem


class _Axes:
    def __init__(self, x_min, x_max, y_min, y_max):
        if x_max == x_min:
            x_max = x_min + 1.0
        if y_max == y_min:
            pad = abs(y_min) * 0.1 or 0.5
            y_min, y_max = y_min - pad, y_max + pad
        else:
            pad = 0.06 * (y_max - y_min)
            y_min, y_max = y_min - pad, y_max + pad
        self.x_min, self.x_max = float(x_min), float(x_max)
        self.y_min, self.y_max = float(y_min), float(y_max)

    def x(self, v) -> float:
        span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        return MARGIN_LEFT + (v - self.x_min) / (self.x_max - self.x_min) * span

    def y(self, v) -> float:
        span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        return HEIGHT - MARGIN_BOTTOM - (v - self.y_min) / (self.y_max - self.y_min) * span


def _polyline(points, color, dashed=False) -> str:
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"{dash} />'


def _band(upper, lower, color) -> str:
    pts = list(upper) + list(reversed(lower))
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
    return f'<polygon points="{coords}" fill="{color}" fill-opacity="0.15" stroke="none" />'


def _chart(title, xlabel, ylabel, axes, body, legend) -> str:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white" />',
        f'<text x="{WIDTH / 2:.0f}" y="26" font-family="sans-serif" font-size="17" '
        f'text-anchor="middle" font-weight="bold">{title}</text>',
    ]
    x0, y0 = MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM
    x1, y1 = WIDTH - MARGIN_RIGHT, MARGIN_TOP
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" />')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" />')
    for i in range(5):
        frac = i / 4.0
        xv = axes.x_min + frac * (axes.x_max - axes.x_min)
        yv = axes.y_min + frac * (axes.y_max - axes.y_min)
        xp, yp = axes.x(xv), axes.y(yv)
        parts.append(f'<line x1="{xp:.2f}" y1="{y0}" x2="{xp:.2f}" y2="{y1}" stroke="#dddddd" />')
        parts.append(f'<line x1="{x0}" y1="{yp:.2f}" x2="{x1}" y2="{yp:.2f}" stroke="#dddddd" />')
        parts.append(
            f'<text x="{xp:.2f}" y="{y0 + 18}" font-family="sans-serif" font-size="12" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{yp + 4:.2f}" font-family="sans-serif" font-size="12" '
            f'text-anchor="end">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 14}" font-family="sans-serif" '
        f'font-size="14" text-anchor="middle">{xlabel}</text>'
    )
    parts.append(
        f'<text x="20" y="{(y0 + y1) / 2:.0f}" font-family="sans-serif" font-size="14" '
        f'text-anchor="middle" transform="rotate(-90 20 {(y0 + y1) / 2:.0f})">{ylabel}</text>'
    )
    parts.extend(body)
    for i, (label, color, dashed) in enumerate(legend):
        ly = MARGIN_TOP + 8 + 18 * i
        lx = WIDTH - MARGIN_RIGHT - 170
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        parts.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 26}" y2="{ly}" stroke="{color}" stroke-width="2"{dash} />')
        parts.append(
            f'<text x="{lx + 32}" y="{ly + 4}" font-family="sans-serif" font-size="12" '
            f'class="legend">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _load_all(metrics_paths):
    loaded = []
    for path in metrics_paths:
        rows = read_metrics(path)
        split = {"train": [r for r in rows if r.split == "train"], "val": [r for r in rows if r.split == "val"]}
        if not split["train"] or not split["val"]:
            raise ParseError(f"{path}: needs both train and val rows")
        loaded.append((_series_label(path), split))
    return loaded


def emit_plots(metrics_paths, out_dir) -> dict:
    """Render loss.svg, accuracy.svg and alpha.svg from one or more metrics CSVs."""
    loaded = _load_all(list(metrics_paths))
    os.makedirs(out_dir, exist_ok=True)
    out = {}

    # total loss, train solid and val dashed per series
    epochs = [r.epoch for _, split in loaded for r in split["train"]]
    values = [r.total_loss for _, split in loaded for part in ("train", "val") for r in split[part]]
    axes = _Axes(min(epochs), max(epochs), min(values), max(values))
    body, legend = [], []
    for i, (label, split) in enumerate(loaded):
        color = PALETTE[i % len(PALETTE)]
        body.append(_polyline([(axes.x(r.epoch), axes.y(r.total_loss)) for r in split["train"]], color))
        body.append(_polyline([(axes.x(r.epoch), axes.y(r.total_loss)) for r in split["val"]], color, dashed=True))
        legend.append((f"{label} train", color, False))
        legend.append((f"{label} val", color, True))
    path = os.path.join(out_dir, "loss.svg")
    with open(path, "w") as fh:
        fh.write(_chart("Total loss", "epoch", "loss", axes, body, legend))
    out["loss"] = path

    # validation accuracy
    values = [r.accuracy for _, split in loaded for r in split["val"]]
    axes = _Axes(min(epochs), max(epochs), min(values), max(values))
    body, legend = [], []
    for i, (label, split) in enumerate(loaded):
        color = PALETTE[i % len(PALETTE)]
        body.append(_polyline([(axes.x(r.epoch), axes.y(r.accuracy)) for r in split["val"]], color))
        legend.append((label, color, False))
    path = os.path.join(out_dir, "accuracy.svg")
    with open(path, "w") as fh:
        fh.write(_chart("Validation accuracy", "epoch", "accuracy", axes, body, legend))
    out["accuracy"] = path

    # alpha mean with +/- std band, taken from the train rows
    values = []
    for _, split in loaded:
        for r in split["train"]:
            values.extend([r.alpha_mean - r.alpha_std, r.alpha_mean + r.alpha_std])
    axes = _Axes(min(epochs), max(epochs), min(values), max(values))
    body, legend = [], []
    for i, (label, split) in enumerate(loaded):
        color = PALETTE[i % len(PALETTE)]
        rows = split["train"]
        upper = [(axes.x(r.epoch), axes.y(r.alpha_mean + r.alpha_std)) for r in rows]
        lower = [(axes.x(r.epoch), axes.y(r.alpha_mean - r.alpha_std)) for r in rows]
        body.append(_band(upper, lower, color))
        body.append(_polyline([(axes.x(r.epoch), axes.y(r.alpha_mean)) for r in rows], color))
        legend.append((label, color, False))
    path = os.path.join(out_dir, "alpha.svg")
    with open(path, "w") as fh:
        fh.write(_chart("Alpha trajectory (mean +/- std)", "epoch", "alpha", axes, body, legend))
    out["alpha"] = path

    return out
