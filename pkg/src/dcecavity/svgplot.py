"""Minimal deterministic SVG line plots with a logarithmic y axis."""

from __future__ import annotations

import math
from typing import NamedTuple
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["Series", "render_svg", "emit_plot", "table_series", "SERIES_LABELS", "DISPLAY_FLOOR"]

DISPLAY_FLOOR = 1e-12
SERIES_LABELS = {
    "n_photon": "Casimir photons",
    "n_phonon_m": "mechanical-type Casimir phonons",
    "n_phonon_d": "Bogoliubov-type Casimir phonons",
}
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")
_DASHES = ("", "6,3", "2,2", "8,3,2,3")

WIDTH, HEIGHT = 720, 480
LEFT, RIGHT, TOP, BOTTOM = 80, 260, 40, 60


class Series(NamedTuple):
    label: str
    x: np.ndarray
    y: np.ndarray


def _num(v):
    return f"{v:.3f}"


def _tick_label(v):
    return f"{v:.6g}"


def table_series(table, columns=None, suffix=""):
    """Series for the occupation columns of a sweep table.

    Unstable rows (blank occupations) are dropped from the polyline.
    """
    columns = tuple(columns or SERIES_LABELS)
    x = np.array([r.control_value for r in table.rows], dtype=float)
    out = []
    for c in columns:
        y = table.column(c)
        keep = np.isfinite(y)
        label = SERIES_LABELS.get(c, c) + (f" ({suffix})" if suffix else "")
        out.append(Series(label, x[keep], y[keep]))
    return out


def render_svg(series, *, title="", xlabel="control", ylabel="occupation"):
    """SVG document text for ``series`` on a log-scale y axis.

    Values below ``DISPLAY_FLOOR`` are drawn at the floor.

    Raises
    ------
    ValueError
        If there are no series or any series has no points.
    """
    series = list(series)
    if not series:
        raise ValueError("no series to plot")
    for s in series:
        if len(s.x) == 0:
            raise ValueError(f"series {s.label!r} is empty")
        if len(s.x) != len(s.y):
            raise ValueError(f"series {s.label!r}: x and y lengths differ")

    xs = np.concatenate([np.asarray(s.x, float) for s in series])
    ys = np.concatenate([np.maximum(np.asarray(s.y, float), DISPLAY_FLOOR) for s in series])
    x0, x1 = float(xs.min()), float(xs.max())
    if x0 == x1:
        x0, x1 = x0 - 0.5, x1 + 0.5
    d0 = math.floor(math.log10(ys.min()))
    d1 = math.ceil(math.log10(ys.max()))
    if d0 == d1:
        d1 = d0 + 1

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (d1 - math.log10(max(y, DISPLAY_FLOOR))) / (d1 - d0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')

    step = max(1, (d1 - d0) // 8)
    for k in range(d0, d1 + 1, step):
        y = py(10.0**k)
        out.append(f'<line x1="{LEFT}" y1="{_num(y)}" x2="{LEFT + pw}" y2="{_num(y)}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_num(y + 4)}" text-anchor="end">1e{k}</text>')
    for i in range(6):
        xv = x0 + (x1 - x0) * i / 5
        x = px(xv)
        out.append(f'<line x1="{_num(x)}" y1="{TOP + ph}" x2="{_num(x)}" y2="{TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{TOP + ph + 18}" text-anchor="middle">{_tick_label(xv)}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 16}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>'
    )

    for i, s in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        dash = _DASHES[(i // len(_COLORS)) % len(_DASHES)]
        pts = " ".join(f"{_num(px(float(a)))},{_num(py(float(b)))}" for a, b in zip(s.x, s.y))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = TOP + 12 + 18 * i
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(s.label)}</text>')

    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(tables, path, *, columns=None, title=None, xlabel=None):
    """Write occupation curves of one or more sweep tables to an SVG file.

    ``tables`` is a single table or a sequence of them.  With several
    tables, each legend label is suffixed with the table's label.
    """
    if hasattr(tables, "rows"):
        tables = [tables]
    tables = list(tables)
    if not tables:
        raise ValueError("no tables to plot")
    multi = len(tables) > 1
    series = []
    for t in tables:
        series.extend(table_series(t, columns, t.label if multi else ""))
    if title is None:
        title = " vs ".join(t.label for t in tables if t.label)
    text = render_svg(series, title=title, xlabel=xlabel or "control")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write SVG to {path!s}: {exc.strerror or exc}") from exc
