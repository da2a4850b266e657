"""Tiny static SVG writer for line plots, stick spectra and heat maps."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

_PALETTE = ["#1f5fbf", "#c0392b", "#27ae60", "#8e44ad", "#d68910", "#17a589"]
W, H, PAD = 640, 400, 56


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (np.asarray(v) - lo) / span * (b - a)


def _axes(xlim, ylim, xlabel, ylabel, title) -> list[str]:
    out = [f'<rect x="{PAD}" y="{PAD // 2}" width="{W - 1.5 * PAD}" height="{H - 1.5 * PAD}" '
           'fill="none" stroke="#333"/>']
    for k in range(5):
        fx = xlim[0] + k * (xlim[1] - xlim[0]) / 4
        fy = ylim[0] + k * (ylim[1] - ylim[0]) / 4
        x = PAD + k * (W - 1.5 * PAD) / 4
        y = H - PAD - k * (H - 1.5 * PAD) / 4
        out.append(f'<text x="{x:.1f}" y="{H - PAD + 16}" font-size="11" text-anchor="middle">{fx:.4g}</text>')
        out.append(f'<text x="{PAD - 6}" y="{y + 4:.1f}" font-size="11" text-anchor="end">{fy:.3g}</text>')
    out.append(f'<text x="{W / 2}" y="{H - 12}" font-size="13" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{H / 2}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 14 {H / 2})">{ylabel}</text>')
    if title:
        out.append(f'<text x="{W / 2}" y="16" font-size="14" text-anchor="middle">{title}</text>')
    return out


def _wrap(body: list[str]) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">\n<rect width="100%" height="100%" fill="white"/>\n'
            + "\n".join(body) + "\n</svg>\n")


def line_plot(path: str | Path, x: np.ndarray, ys: Sequence[np.ndarray], labels: Sequence[str] = (),
              xlabel: str = "", ylabel: str = "", title: str = "") -> None:
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in ys]
    xlim = (x.min(), x.max())
    ylo = min(float(np.nanmin(y)) for y in ys)
    yhi = max(float(np.nanmax(y)) for y in ys)
    sx = _scale(*xlim, PAD, W - PAD / 2)
    sy = _scale(ylo, yhi, H - PAD, PAD / 2)
    body = _axes(xlim, (ylo, yhi), xlabel, ylabel, title)
    for k, y in enumerate(ys):
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(x), sy(y)))
        body.append(f'<polyline fill="none" stroke="{_PALETTE[k % len(_PALETTE)]}" '
                    f'stroke-width="1.5" points="{pts}"/>')
        if k < len(labels):
            body.append(f'<text x="{W - PAD}" y="{PAD + 14 * k}" font-size="11" text-anchor="end" '
                        f'fill="{_PALETTE[k % len(_PALETTE)]}">{labels[k]}</text>')
    Path(path).write_text(_wrap(body), encoding="utf-8")


def stick_plot(path: str | Path, positions, heights, colors, envelope=None,
               xlabel: str = "wavenumber / cm-1", ylabel: str = "intensity", title: str = "") -> None:
    """Sticks coloured by (r, g, b) weights in [0, 1], optional envelope
    (grid, curve) scaled to the tallest stick."""
    pos = np.asarray(positions, dtype=float)
    hts = np.asarray(heights, dtype=float)
    if envelope is not None:
        xlim = (float(envelope[0][0]), float(envelope[0][-1]))
    else:
        xlim = (float(pos.min()) - 5, float(pos.max()) + 5)
    top = float(hts.max()) if len(hts) else 1.0
    sx = _scale(*xlim, PAD, W - PAD / 2)
    sy = _scale(0.0, top * 1.05, H - PAD, PAD / 2)
    body = _axes(xlim, (0.0, top * 1.05), xlabel, ylabel, title)
    for p, h, c in zip(pos, hts, colors):
        r, g, b = (int(round(255 * min(max(v, 0.0), 1.0))) for v in c)
        body.append(f'<line x1="{sx(p):.2f}" y1="{sy(0):.2f}" x2="{sx(p):.2f}" y2="{sy(h):.2f}" '
                    f'stroke="rgb({r},{g},{b})" stroke-width="2"/>')
    if envelope is not None and len(hts):
        grid, curve = (np.asarray(a, dtype=float) for a in envelope)
        curve = curve / curve.max() * top if curve.max() > 0 else curve
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx(grid), sy(curve)))
        body.append(f'<polyline fill="none" stroke="#555" stroke-dasharray="4 2" points="{pts}"/>')
    Path(path).write_text(_wrap(body), encoding="utf-8")


def heat_map(path: str | Path, x: np.ndarray, y: np.ndarray, z: np.ndarray,
             xlabel: str = "theta1", ylabel: str = "theta2", title: str = "", max_cells: int = 101) -> None:
    """Grey-scale map of z[i, j] at (x[i], y[j]), subsampled to ``max_cells``."""
    step = max(1, int(np.ceil(len(x) / max_cells)))
    x, y, z = x[::step], y[::step], z[::step, ::step]
    lo, hi = float(z.min()), float(z.max())
    span = hi - lo if hi > lo else 1.0
    sx = _scale(x[0], x[-1], PAD, W - PAD / 2)
    sy = _scale(y[0], y[-1], H - PAD, PAD / 2)
    cw = (W - 1.5 * PAD) / len(x)
    ch = (H - 1.5 * PAD) / len(y)
    body = []
    for i in range(len(x)):
        for j in range(len(y)):
            v = int(round(255 * (z[i, j] - lo) / span))
            body.append(f'<rect x="{sx(x[i]) - cw / 2:.2f}" y="{sy(y[j]) - ch / 2:.2f}" '
                        f'width="{cw + 0.3:.2f}" height="{ch + 0.3:.2f}" fill="rgb({v},{v},{v})"/>')
    body += _axes((x[0], x[-1]), (y[0], y[-1]), xlabel, ylabel, title)
    Path(path).write_text(_wrap(body), encoding="utf-8")
