"""Glyph builders: bound data to abstract drawing primitives.

Every builder is a pure function from aligned per-region arrays to
``GlyphRow`` lists in column-local coordinates: x through the column's
shared ``AxisScale``, y in row-local [0, 1] for row glyphs or through a
second scale for panel glyphs (timeseries, scatter).  Primitives carry a
color role ("group:i", "median", "neutral", ...) resolved to a concrete
color only at render time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import stats
from .grouping import PerceptualGrouping

__all__ = [
    "GlyphError",
    "PointMark",
    "SegmentMark",
    "RectMark",
    "PolylineMark",
    "TextMark",
    "GlyphRow",
    "AxisScale",
    "fit_axis",
    "dot_column",
    "arrow_column",
    "bar_column",
    "boxplot_column",
    "timeseries_column",
    "scatter_column",
    "reference_lines",
    "zero_line",
    "identity_line",
    "lowess_overlay",
]

# roles not tied to a perceptual group; render maps them to fixed colors
REFERENCE_ROLE = "reference"
FURNITURE_ROLE = "furniture"


class GlyphError(ValueError):
    """Glyph inputs violate the builder's contract."""


@dataclass(frozen=True)
class PointMark:
    x: float
    y: float
    filled: bool
    role: str
    tag: str


@dataclass(frozen=True)
class SegmentMark:
    x0: float
    y0: float
    x1: float
    y1: float
    role: str
    tag: str
    arrowhead: bool = False
    style: str = "solid"


@dataclass(frozen=True)
class RectMark:
    x0: float
    y0: float
    x1: float
    y1: float
    role: str
    tag: str


@dataclass(frozen=True)
class PolylineMark:
    points: tuple[tuple[float, float], ...]
    role: str
    tag: str


@dataclass(frozen=True)
class TextMark:
    x: float
    y: float
    text: str
    anchor: str
    role: str
    tag: str


Mark = PointMark | SegmentMark | RectMark | PolylineMark | TextMark


@dataclass(frozen=True)
class GlyphRow:
    """Marks for one region; empty marks plus ``missing`` feed the footnote."""

    region_id: str
    marks: tuple[Mark, ...]
    missing: bool = False


# ── axis fitting ────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class AxisScale:
    """Linear map from a data domain onto a panel-local range."""

    domain: tuple[float, float]
    range: tuple[float, float]
    ticks: tuple[float, ...]
    tick_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        d0, d1 = self.domain
        if not (math.isfinite(d0) and math.isfinite(d1)) or not d0 < d1:
            raise GlyphError(f"axis domain must satisfy min < max, got {self.domain}")
        if self.range[0] == self.range[1]:
            raise GlyphError("axis range is empty")
        if len(self.ticks) != len(self.tick_labels):
            raise GlyphError("tick positions and labels differ in length")
        eps = 1e-9 * (d1 - d0)
        for t in self.ticks:
            if t < d0 - eps or t > d1 + eps:
                raise GlyphError(f"tick {t} outside domain {self.domain}")

    def position(self, value: float) -> float:
        d0, d1 = self.domain
        r0, r1 = self.range
        return r0 + (value - d0) / (d1 - d0) * (r1 - r0)

    def with_range(self, lo: float, hi: float) -> AxisScale:
        return AxisScale(self.domain, (lo, hi), self.ticks, self.tick_labels)

    def spans_zero(self) -> bool:
        return self.domain[0] <= 0.0 <= self.domain[1]


def _ladder_ticks(lo: float, hi: float) -> tuple[float, ...]:
    """Smallest 1-2-5 step whose in-domain ticks number at most 7."""
    span = hi - lo
    k = int(math.floor(math.log10(span))) - 2
    while True:
        for mult in (1.0, 2.0, 5.0):
            step = mult * 10.0**k
            first = math.ceil(lo / step)
            last = math.floor(hi / step + 1e-9)
            if last - first + 1 <= 7:
                return tuple(i * step for i in range(first, last + 1))
        k += 1


def _tick_label(value: float, step: float) -> str:
    decimals = max(0, -int(math.floor(math.log10(step) + 1e-9)))
    label = f"{value:.{decimals}f}"
    # avoid the confusing "-0" at a zero tick
    if float(label) == 0.0:
        label = label.lstrip("-")
    return label


def fit_axis(
    values: Sequence[float] | np.ndarray,
    reference_values: Sequence[float] = (),
    width: float = 1.0,
    pad: float = 0.05,
) -> AxisScale:
    """Domain covers data plus references, padded; ticks from a 1-2-5 ladder.

    All-equal inputs widen symmetrically by max(0.5, 10% of the value) so a
    degenerate column still gets a usable axis.
    """
    flat = np.asarray(values, dtype=float).ravel()
    pool = [float(v) for v in flat if math.isfinite(v)]
    pool.extend(float(v) for v in reference_values)
    if not pool:
        raise GlyphError("no finite values to fit an axis")
    for v in pool:
        if not math.isfinite(v):
            raise GlyphError("reference values must be finite")
    vmin, vmax = min(pool), max(pool)
    if vmin == vmax:
        half = max(0.5, 0.1 * abs(vmin))
        d0, d1 = vmin - half, vmax + half
    else:
        margin = pad * (vmax - vmin)
        d0, d1 = vmin - margin, vmax + margin
    ticks = _ladder_ticks(d0, d1)
    step = ticks[1] - ticks[0] if len(ticks) > 1 else max(abs(t) for t in ticks) or 1.0
    labels = tuple(_tick_label(t, step) for t in ticks)
    return AxisScale(domain=(d0, d1), range=(0.0, width), ticks=ticks, tick_labels=labels)


# ── row glyph builders ──────────────────────────────────────────────────────


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def dot_column(
    ids: Sequence[str],
    values: np.ndarray,
    scale: AxisScale,
    roles: Sequence[str],
    ci: tuple[np.ndarray, np.ndarray] | None = None,
) -> list[GlyphRow]:
    """One dot per region, with an optional horizontal CI bar beneath it."""
    rows = []
    for i, rid in enumerate(ids):
        v = float(values[i])
        if not math.isfinite(v):
            rows.append(GlyphRow(rid, (), missing=True))
            continue
        marks: list[Mark] = []
        if ci is not None:
            lo, hi = float(ci[0][i]), float(ci[1][i])
            if _finite(lo, hi):
                if lo > hi:
                    raise GlyphError(f"ci endpoints out of order for region {rid}")
                marks.append(
                    SegmentMark(scale.position(lo), 0.5, scale.position(hi), 0.5, roles[i], "ci-bar")
                )
        marks.append(PointMark(scale.position(v), 0.5, True, roles[i], "dot"))
        rows.append(GlyphRow(rid, tuple(marks)))
    return rows


def arrow_column(
    ids: Sequence[str],
    from_values: np.ndarray,
    to_values: np.ndarray,
    scale: AxisScale,
    roles: Sequence[str],
) -> list[GlyphRow]:
    """Segment with an arrowhead at the to end; equal endpoints become a dot."""
    rows = []
    for i, rid in enumerate(ids):
        a, b = float(from_values[i]), float(to_values[i])
        if not _finite(a, b):
            rows.append(GlyphRow(rid, (), missing=True))
            continue
        if a == b:
            rows.append(GlyphRow(rid, (PointMark(scale.position(a), 0.5, True, roles[i], "arrow-point"),)))
        else:
            mark = SegmentMark(
                scale.position(a), 0.5, scale.position(b), 0.5, roles[i], "arrow", arrowhead=True
            )
            rows.append(GlyphRow(rid, (mark,)))
    return rows


def bar_column(
    ids: Sequence[str],
    values: np.ndarray | None,
    scale: AxisScale,
    roles: Sequence[str],
    shares: np.ndarray | None = None,
) -> list[GlyphRow]:
    """Rect from the zero anchor to the value; shares stack adjacent rects."""
    rows = []
    if shares is not None:
        if np.any(shares[np.isfinite(shares)] < 0.0):
            raise GlyphError("segmented bar shares must be non-negative")
        for i, rid in enumerate(ids):
            row = np.asarray(shares[i], dtype=float)
            if not np.isfinite(row).all() or row.sum() <= 0.0:
                rows.append(GlyphRow(rid, (), missing=True))
                continue
            bounds = np.concatenate([[0.0], np.cumsum(row)])
            marks = tuple(
                RectMark(
                    scale.position(float(bounds[k])),
                    0.2,
                    scale.position(float(bounds[k + 1])),
                    0.8,
                    roles[i],
                    f"segment:{k}",
                )
                for k in range(len(row))
            )
            rows.append(GlyphRow(rid, marks))
        return rows

    assert values is not None
    zero = scale.position(0.0)
    for i, rid in enumerate(ids):
        v = float(values[i])
        if not math.isfinite(v):
            rows.append(GlyphRow(rid, (), missing=True))
            continue
        x = scale.position(v)
        rows.append(GlyphRow(rid, (RectMark(min(zero, x), 0.2, max(zero, x), 0.8, roles[i], "bar"),)))
    return rows


def boxplot_column(
    ids: Sequence[str],
    percentiles: dict[str, np.ndarray],
    scale: AxisScale,
    roles: Sequence[str],
) -> list[GlyphRow]:
    """Box p25..p75 with median line, whiskers to p10 and p90, no outliers."""
    rows = []
    for i, rid in enumerate(ids):
        p = [float(percentiles[k][i]) for k in ("p10", "p25", "p50", "p75", "p90")]
        if not _finite(*p):
            rows.append(GlyphRow(rid, (), missing=True))
            continue
        if not (p[0] <= p[1] <= p[2] <= p[3] <= p[4]):
            raise GlyphError(f"percentile ordering violated for region {rid}")
        x10, x25, x50, x75, x90 = (scale.position(v) for v in p)
        role = roles[i]
        marks = (
            SegmentMark(x10, 0.5, x25, 0.5, role, "whisker"),
            SegmentMark(x75, 0.5, x90, 0.5, role, "whisker"),
            RectMark(x25, 0.2, x75, 0.8, role, "box"),
            SegmentMark(x50, 0.2, x50, 0.8, role, "median-line"),
        )
        rows.append(GlyphRow(rid, marks))
    return rows


# ── panel glyph builders ────────────────────────────────────────────────────


def timeseries_column(
    ids: Sequence[str],
    series: np.ndarray,
    x_scale: AxisScale,
    y_scale: AxisScale,
    roles: Sequence[str],
) -> list[GlyphRow]:
    """Polyline per region through (time index, value); gaps break the line."""
    rows = []
    for i, rid in enumerate(ids):
        row = np.asarray(series[i], dtype=float)
        if np.isfinite(row).sum() < 2:
            rows.append(GlyphRow(rid, (), missing=True))
            continue
        marks: list[Mark] = []
        run: list[tuple[float, float]] = []
        for t, v in enumerate(row):
            if math.isfinite(v):
                run.append((x_scale.position(float(t)), y_scale.position(float(v))))
            else:
                marks.extend(_run_marks(run, roles[i]))
                run = []
        marks.extend(_run_marks(run, roles[i]))
        rows.append(GlyphRow(rid, tuple(marks)))
    return rows


def _run_marks(run: list[tuple[float, float]], role: str) -> list[Mark]:
    if len(run) >= 2:
        return [PolylineMark(tuple(run), role, "series")]
    if len(run) == 1:
        return [PointMark(run[0][0], run[0][1], True, role, "series-point")]
    return []


def scatter_column(
    ids: Sequence[str],
    x_values: np.ndarray,
    y_values: np.ndarray,
    grouping: PerceptualGrouping,
    x_scale: AxisScale,
    y_scale: AxisScale,
    roles: dict[str, str],
) -> list[list[GlyphRow]]:
    """One panel per perceptual group; every panel plots all regions.

    Current-group members are filled in their group color, everyone else an
    open neutral circle, so positions are identical across panels.
    """
    panels = []
    for group in grouping.groups:
        members = set(group)
        panel = []
        for i, rid in enumerate(ids):
            x, y = float(x_values[i]), float(y_values[i])
            if not _finite(x, y):
                panel.append(GlyphRow(rid, (), missing=True))
                continue
            current = rid in members
            role = roles[rid] if current else "neutral"
            mark = PointMark(x_scale.position(x), y_scale.position(y), current, role, "scatter-point")
            panel.append(GlyphRow(rid, (mark,)))
        panels.append(panel)
    return panels


# ── furniture ───────────────────────────────────────────────────────────────


def reference_lines(values: Sequence[float], scale: AxisScale, styles: Sequence[str] | None = None) -> list[SegmentMark]:
    """Full-height vertical line per reference value, drawn beneath data."""
    marks = []
    for i, value in enumerate(values):
        x = scale.position(float(value))
        style = styles[i] if styles is not None else "solid"
        marks.append(SegmentMark(x, 0.0, x, 1.0, REFERENCE_ROLE, "reference-line", style=style))
    return marks


def zero_line(x_scale: AxisScale, y_scale: AxisScale) -> SegmentMark | None:
    """Horizontal zero line across the panel when the y domain spans zero."""
    if not y_scale.spans_zero():
        return None
    y = y_scale.position(0.0)
    return SegmentMark(x_scale.range[0], y, x_scale.range[1], y, FURNITURE_ROLE, "zero-line")


def identity_line(x_scale: AxisScale, y_scale: AxisScale) -> SegmentMark | None:
    """The y = x diagonal clipped to the shared part of both domains."""
    lo = max(x_scale.domain[0], y_scale.domain[0])
    hi = min(x_scale.domain[1], y_scale.domain[1])
    if lo >= hi:
        return None
    return SegmentMark(
        x_scale.position(lo),
        y_scale.position(lo),
        x_scale.position(hi),
        y_scale.position(hi),
        FURNITURE_ROLE,
        "identity-line",
    )


def lowess_overlay(
    x_values: np.ndarray,
    y_values: np.ndarray,
    x_scale: AxisScale,
    y_scale: AxisScale,
    params: stats.LowessParams | None = None,
) -> PolylineMark | None:
    """Smooth of the full point set, sampled at the point abscissas.

    Degenerate inputs (identical x, too few points) yield no curve rather
    than a render failure; the caller decides whether to surface a warning.
    """
    params = params or stats.LowessParams()
    mask = np.isfinite(x_values) & np.isfinite(y_values)
    x, y = x_values[mask], y_values[mask]
    try:
        fitted = stats.lowess_fit(x, y, params)
    except stats.StatsError:
        return None
    order = np.argsort(x, kind="stable")
    points = tuple(
        (x_scale.position(float(x[j])), y_scale.position(float(fitted[j]))) for j in order
    )
    return PolylineMark(points, FURNITURE_ROLE, "lowess")
