"""Standalone SVG line plots for the emitted CSV tables.

No external assets, no plotting dependency: the writer produces a fixed-size
line chart with labeled, optionally logarithmic axes.  Good enough to eyeball
a rate-function comparison or a margin curve.
"""

from __future__ import annotations

import math
from pathlib import Path

from .csvio import read_csv
from .errors import ValidationError

_WIDTH, _HEIGHT = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 36, 52
_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks or [lo]


def _log_ticks(lo: float, hi: float) -> list[float]:
    ticks = []
    d = math.floor(math.log10(lo))
    while 10.0 ** d <= hi * (1 + 1e-12):
        if 10.0 ** d >= lo * (1 - 1e-12):
            ticks.append(10.0 ** d)
        d += 1
    return ticks or [lo, hi]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


class _Axis:
    def __init__(self, lo, hi, log, pix_lo, pix_hi):
        if log and lo <= 0:
            raise ValidationError("log axis needs positive data")
        if hi <= lo:
            pad = abs(lo) * 0.5 + 1.0
            lo, hi = lo - pad, hi + pad
        if log:
            self.lo, self.hi = math.log10(lo), math.log10(hi)
        else:
            span = hi - lo
            self.lo, self.hi = lo - 0.03 * span, hi + 0.03 * span
        self.log = log
        self.pix_lo, self.pix_hi = pix_lo, pix_hi
        self.ticks = _log_ticks(lo, hi) if log else _nice_ticks(self.lo, self.hi)

    def pix(self, v: float) -> float:
        x = math.log10(v) if self.log else v
        frac = (x - self.lo) / (self.hi - self.lo)
        return self.pix_lo + frac * (self.pix_hi - self.pix_lo)


def emit_plot(csv_path, x: str, ys: list[str], out_path,
              logx: bool = False, logy: bool = False,
              title: str = "") -> Path:
    """Render columns of a package CSV as polylines into a standalone SVG.

    Raises (and writes nothing) on missing columns or an empty table; rows
    where a log axis meets a non-positive value are dropped.
    """
    schema, columns, rows = read_csv(csv_path)
    if not rows:
        raise ValidationError(f"{csv_path}: no data rows to plot")
    missing = [c for c in [x] + list(ys) if c not in columns]
    if missing:
        raise ValidationError(f"{csv_path}: missing columns {missing}")

    series = []
    for yc in ys:
        pts = []
        for row in rows:
            try:
                xv, yv = float(row[x]), float(row[yc])
            except (ValueError, KeyError):
                continue
            if (logx and xv <= 0) or (logy and yv <= 0):
                continue
            if math.isnan(xv) or math.isnan(yv):
                continue
            pts.append((xv, yv))
        series.append((yc, pts))
    allpts = [p for _, pts in series for p in pts]
    if not allpts:
        raise ValidationError(f"{csv_path}: nothing numeric to plot")

    ax = _Axis(min(p[0] for p in allpts), max(p[0] for p in allpts), logx,
               _ML, _WIDTH - _MR)
    ay = _Axis(min(p[1] for p in allpts), max(p[1] for p in allpts), logy,
               _HEIGHT - _MB, _MT)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_WIDTH - _ML - _MR}" '
        f'height="{_HEIGHT - _MT - _MB}" fill="none" stroke="#333"/>',
    ]
    font = 'font-family="Helvetica,Arial,sans-serif"'
    for t in ax.ticks:
        px = ax.pix(t)
        parts.append(f'<line x1="{px:.1f}" y1="{_HEIGHT - _MB}" '
                     f'x2="{px:.1f}" y2="{_HEIGHT - _MB + 5}" stroke="#333"/>')
        parts.append(f'<text x="{px:.1f}" y="{_HEIGHT - _MB + 18}" {font} '
                     f'font-size="11" text-anchor="middle">{_fmt(t)}</text>')
    for t in ay.ticks:
        py = ay.pix(t)
        parts.append(f'<line x1="{_ML - 5}" y1="{py:.1f}" x2="{_ML}" '
                     f'y2="{py:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{_ML - 8}" y="{py + 4:.1f}" {font} '
                     f'font-size="11" text-anchor="end">{_fmt(t)}</text>')
    parts.append(f'<text x="{(_ML + _WIDTH - _MR) / 2}" y="{_HEIGHT - 12}" '
                 f'{font} font-size="13" text-anchor="middle">{x}</text>')
    if title:
        parts.append(f'<text x="{(_ML + _WIDTH - _MR) / 2}" y="22" {font} '
                     f'font-size="14" text-anchor="middle">{title}</text>')

    for k, (name, pts) in enumerate(series):
        if not pts:
            continue
        color = _COLORS[k % len(_COLORS)]
        coords = " ".join(f"{ax.pix(px):.2f},{ay.pix(py):.2f}"
                          for px, py in sorted(pts))
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="1.6"/>')
        ly = _MT + 16 + 16 * k
        parts.append(f'<line x1="{_WIDTH - _MR - 120}" y1="{ly - 4}" '
                     f'x2="{_WIDTH - _MR - 96}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_WIDTH - _MR - 90}" y="{ly}" {font} '
                     f'font-size="12">{name}</text>')
    parts.append("</svg>")
    out = Path(out_path)
    out.write_text("\n".join(parts) + "\n")
    return out
