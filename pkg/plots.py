# plots.py
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from jinja2 import Environment, FileSystemLoader, select_autoescape

from results import CurveRow

TEMPLATES_DIR = Path(__file__).resolve().parent / "templates"

WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 30, 50
N_TICKS = 5

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")

STYLES = ("pep", "aoi", "aoi_curve", "ura")

_env = Environment(
    loader=FileSystemLoader(str(TEMPLATES_DIR)),
    autoescape=select_autoescape(["svg", "xml"]),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)


# =========================
# Models
# =========================

@dataclass(frozen=True)
class Series:
    label: str
    points: Tuple[Tuple[float, float], ...]


def _usable(x, y, log_y: bool) -> bool:
    if x is None or y is None:
        return False
    if not (math.isfinite(x) and math.isfinite(y)):
        return False
    return y > 0 or not log_y


def _column_series(rows: Sequence[CurveRow], prefix: str, log_y: bool) -> Tuple[str, List[Series]]:
    x_name = rows[0].columns[0]
    series = []
    for name in rows[0].columns:
        if not name.startswith(prefix):
            continue
        pts = tuple(
            (float(r.get(x_name)), float(r.get(name)))
            for r in rows
            if _usable(r.get(x_name), r.get(name), log_y)
        )
        series.append(Series(label=name[len(prefix):], points=pts))
    return x_name, series


def _user_label(n) -> str:
    return "N=∞" if n is None or math.isinf(n) else f"N={int(n)}"


def series_for(rows: Sequence[CurveRow], style: str, log_y: bool = False):
    """(x label, y label, series) for a plot style."""
    if style == "pep":
        x_name, series = _column_series(rows, "pe_", log_y)
        return x_name, "packet error probability", series
    if style == "aoi":
        x_name, series = _column_series(rows, "aoi_", log_y)
        return x_name, "AoI (slots)", series
    if style == "aoi_curve":
        groups = {}
        for r in rows:
            groups.setdefault(_user_label(r.get("n_users")), []).append(r)
        series = [
            Series(label, tuple(
                (float(r.get("rho")), float(r.get("delta")))
                for r in group
                if _usable(r.get("rho"), r.get("delta"), log_y)
            ))
            for label, group in groups.items()
        ]
        return "spectral efficiency (bits/channel use)", "AoI (slots)", series
    if style == "ura":
        pts = tuple(
            (float(r.get("ka")), float(r.get("bound")))
            for r in rows
            if _usable(r.get("ka"), r.get("bound"), log_y)
        )
        return "active users K_a", "log2(1 + M/K_a)", [Series("bound", pts)]
    raise ValueError(f"unknown plot style '{style}' (expected one of {', '.join(STYLES)})")


# =========================
# Axes
# =========================

def _span(values: Sequence[float]) -> Tuple[float, float]:
    lo, hi = min(values), max(values)
    if lo == hi:
        pad = abs(lo) * 0.1 or 0.5
        return lo - pad, hi + pad
    return lo, hi


def _linear_ticks(lo: float, hi: float) -> List[float]:
    step = (hi - lo) / (N_TICKS - 1)
    return [lo + i * step for i in range(N_TICKS)]


def _log_ticks(lo: float, hi: float) -> List[float]:
    first, last = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if first == last:
        last += 1
    return [10.0 ** e for e in range(first, last + 1)]


def _label(v: float) -> str:
    return f"{v:.3g}"


def emit_svg(rows: Sequence[CurveRow], style: str = "pep", log_y: bool = False, title: Optional[str] = None) -> str:
    """
    Self-contained SVG: axes with ticks, one polyline per series, a legend, and a
    single marker for a series with one point. Identical rows give identical bytes.
    """
    if not rows:
        raise ValueError("no rows to plot")
    x_label, y_label, series = series_for(rows, style, log_y)
    series = [s for s in series if s.points]
    if not series:
        raise ValueError("rows hold no plottable points")

    xs = [x for s in series for x, _ in s.points]
    ys = [y for s in series for _, y in s.points]
    x_lo, x_hi = _span(xs)
    if log_y:
        y_ticks = _log_ticks(min(ys), max(ys))
        y_lo, y_hi = y_ticks[0], y_ticks[-1]
    else:
        y_lo, y_hi = _span(ys)
        y_ticks = _linear_ticks(y_lo, y_hi)
    x_ticks = _linear_ticks(x_lo, x_hi)

    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def sx(x: float) -> float:
        return LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        if log_y:
            frac = (math.log10(y) - math.log10(y_lo)) / (math.log10(y_hi) - math.log10(y_lo))
        else:
            frac = (y - y_lo) / (y_hi - y_lo)
        return TOP + (1.0 - frac) * plot_h

    drawn = []
    for i, s in enumerate(series):
        coords = [(f"{sx(x):.2f}", f"{sy(y):.2f}") for x, y in s.points]
        drawn.append({
            "label": s.label,
            "color": PALETTE[i % len(PALETTE)],
            "points": " ".join(f"{a},{b}" for a, b in coords),
            "marker": coords[0] if len(coords) == 1 else None,
        })

    template = _env.get_template("curves.svg")
    return template.render(
        width=WIDTH,
        height=HEIGHT,
        left=LEFT,
        top=TOP,
        right=WIDTH - RIGHT,
        bottom=HEIGHT - BOTTOM,
        title=title or style,
        x_label=x_label,
        y_label=y_label,
        x_ticks=[(f"{sx(t):.2f}", _label(t)) for t in x_ticks],
        y_ticks=[(f"{sy(t):.2f}", _label(t)) for t in y_ticks],
        series=drawn,
    )
