"""Deterministic CSV and self-contained SVG emission.

CSV: one header row, 12-significant-digit scientific notation, newline
terminated.  SVG: hand-built line/heat plots with log axes and no external
assets, so plots are testable by string inspection and render anywhere.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .errors import PeriodicEigenError

WIDTH, HEIGHT = 720, 520
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 78, 30, 42, 64


def format_value(x) -> str:
    """12 significant digits; integers and strings pass through."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.11e}"


def emit_csv(path: str, header, rows) -> str:
    """Write header + rows; refuses an empty record set."""
    rows = list(rows)
    if not rows:
        raise PeriodicEigenError(f"refusing to write empty CSV {path}")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _log_axis(lo: float, hi: float):
    """Return (mapping to [0,1], decade tick positions)."""
    la, lb = math.log10(lo), math.log10(hi)
    if lb - la < 1e-12:
        la, lb = la - 0.5, lb + 0.5
    ticks = [10.0 ** k for k in range(math.ceil(la - 1e-9), math.floor(lb + 1e-9) + 1)]

    def to01(v):
        return (math.log10(v) - la) / (lb - la)
    return to01, ticks


def _tick_label(v: float) -> str:
    e = round(math.log10(v))
    return f"1e{e:+d}" if abs(e) > 3 else f"{v:g}"


def _svg_head(title: str):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]


def _axes(xlim, ylim, xlabel, ylabel):
    x01, xticks = _log_axis(*xlim)
    y01, yticks = _log_axis(*ylim)
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = HEIGHT - MARGIN_B, MARGIN_T

    def mapx(v):
        return x0 + x01(v) * (x1 - x0)

    def mapy(v):
        return y0 + y01(v) * (y1 - y0)

    parts = [f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
             'fill="none" stroke="black"/>']
    for t in xticks:
        px = mapx(t)
        parts.append(f'<line x1="{px:.1f}" y1="{y0}" x2="{px:.1f}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(f'<text x="{px:.1f}" y="{y0 + 20}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{_tick_label(t)}</text>')
    for t in yticks:
        py = mapy(t)
        parts.append(f'<line x1="{x0 - 5}" y1="{py:.1f}" x2="{x0}" y2="{py:.1f}" stroke="black"/>')
        parts.append(f'<text x="{x0 - 8}" y="{py + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{_tick_label(t)}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2:.0f}" y="{HEIGHT - 14}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="14">{xlabel}</text>')
    parts.append(f'<text x="20" y="{(y0 + y1) / 2:.0f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="14" '
                 f'transform="rotate(-90 20 {(y0 + y1) / 2:.0f})">{ylabel}</text>')
    return parts, mapx, mapy


_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def emit_svg_curves(path: str, curves, xlabel: str = "ρ (log)",
                    ylabel: str = "ω (log)", title: str = "") -> str:
    """curves: list of (label, xs, ys); both axes logarithmic."""
    curves = [(lab, np.asarray(xs, float), np.asarray(ys, float))
              for lab, xs, ys in curves if len(xs)]
    if not curves:
        raise PeriodicEigenError(f"refusing to write empty SVG {path}")
    allx = np.concatenate([xs for _, xs, _ in curves])
    ally = np.concatenate([ys for _, _, ys in curves])
    parts = _svg_head(title)
    axes, mapx, mapy = _axes((allx.min(), allx.max()),
                             (ally.min(), ally.max()), xlabel, ylabel)
    parts += axes
    for k, (label, xs, ys) in enumerate(curves):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(f"{mapx(x):.2f},{mapy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        parts.append(f'<text x="{WIDTH - MARGIN_R - 6}" y="{MARGIN_T + 16 + 15 * k}" '
                     f'text-anchor="end" font-family="sans-serif" font-size="12" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
    return path


def _heat_color(v: float) -> str:
    """Blue (low) to red (high) through white."""
    v = min(max(v, 0.0), 1.0)
    if v < 0.5:
        r, g, b = 2 * v, 2 * v, 1.0
    else:
        r, g, b = 1.0, 2 * (1 - v), 2 * (1 - v)
    return f"#{int(255 * r):02x}{int(255 * g):02x}{int(255 * b):02x}"


def emit_svg_heatmap(path: str, rhos, omegas, values, xlabel: str = "ρ (log)",
                     ylabel: str = "ω (log)", title: str = "") -> str:
    """values[i, j] at (omegas[i], rhos[j]); log-log cell heat map."""
    rhos = np.asarray(rhos, float)
    omegas = np.asarray(omegas, float)
    V = np.asarray(values, float)
    if V.size == 0:
        raise PeriodicEigenError(f"refusing to write empty SVG {path}")
    parts = _svg_head(title)
    axes, mapx, mapy = _axes((rhos.min(), rhos.max()),
                             (omegas.min(), omegas.max()), xlabel, ylabel)
    lo, hi = float(V.min()), float(V.max())
    span = hi - lo if hi > lo else 1.0
    # cell edges at geometric midpoints
    def edges(vals):
        mids = np.sqrt(vals[1:] * vals[:-1])
        first = vals[0] ** 2 / mids[0] if len(mids) else vals[0] * 0.9
        last = vals[-1] ** 2 / mids[-1] if len(mids) else vals[-1] * 1.1
        return np.concatenate([[first], mids, [last]])
    re_, oe = edges(rhos), edges(omegas)
    x_lo, x_hi = MARGIN_L, WIDTH - MARGIN_R
    y_lo, y_hi = MARGIN_T, HEIGHT - MARGIN_B
    for i in range(len(omegas)):
        for j in range(len(rhos)):
            x_a = min(max(mapx(re_[j]), x_lo), x_hi)
            x_b = min(max(mapx(re_[j + 1]), x_lo), x_hi)
            y_a = min(max(mapy(oe[i]), y_lo), y_hi)
            y_b = min(max(mapy(oe[i + 1]), y_lo), y_hi)
            col = _heat_color((V[i, j] - lo) / span)
            parts.append(
                f'<rect x="{min(x_a, x_b):.2f}" y="{min(y_a, y_b):.2f}" '
                f'width="{abs(x_b - x_a):.2f}" height="{abs(y_b - y_a):.2f}" '
                f'fill="{col}"/>')
    parts += axes   # draw frame/ticks above the cells
    parts.append(f'<text x="{MARGIN_L}" y="{HEIGHT - 40}" font-family="sans-serif" '
                 f'font-size="11">λ range [{lo:.6g}, {hi:.6g}] (blue low, red high)</text>')
    parts.append("</svg>")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
    return path
