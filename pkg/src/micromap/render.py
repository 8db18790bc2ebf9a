"""Figure composition: layout, deterministic SVG emission, layout report.

A figure is one page: map column, label legend, then the spec's data
columns, split vertically into one band per perceptual group.  Text widths
come from a fixed per-character table so output bytes never depend on
installed fonts; coordinates are written with two decimals and element
order is fixed, so equal inputs give byte-identical SVG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import glyphs, stats
from .grouping import (
    DEFAULT_PALETTE,
    PerceptualGrouping,
    assign_colors,
    group_regions,
    sort_rows,
)
from .maprender import PRIOR_SHADE, build_panel_maps, project_atlas
from .model import Atlas, DataTable, PlotSpec, bind_spec

__all__ = [
    "RenderError",
    "LayoutOptions",
    "Band",
    "FigureLayout",
    "RenderedFigure",
    "text_width",
    "truncate_label",
    "compute_layout",
    "render_figure",
]

REFERENCE_COLOR = "#008000"
FURNITURE_COLOR = "#888888"
AXIS_COLOR = "#444444"
BAND_BG = "#F5F5F5"
MAP_STROKE = "#FFFFFF"
OUTLINE_STROKE = "#B0B0B0"
FONT = "Helvetica, Arial, sans-serif"

# per-character advance widths at font size 10 (no font metrics at runtime)
_NARROW = set("iljftI.,:;'|!() ")
_WIDE = set("mwMW@")
_CAPS = set("ABCDEFGHJKLNOPQRSTUVXYZ")


class RenderError(ValueError):
    """Figure cannot be laid out or rendered with the given options."""


def text_width(text: str, size: float) -> float:
    """Width estimate from the fixed character table; deterministic."""
    units = 0.0
    for ch in text:
        if ch in _NARROW:
            units += 0.30
        elif ch in _WIDE:
            units += 0.85
        elif ch in _CAPS:
            units += 0.68
        else:
            units += 0.55
    return units * size


def truncate_label(text: str, max_width: float, size: float) -> str:
    """Trim to fit, appending a single ellipsis character when shortened."""
    if text_width(text, size) <= max_width:
        return text
    out = text
    while out and text_width(out + "…", size) > max_width:
        out = out[:-1]
    return out + "…"


# ── layout ──────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class LayoutOptions:
    width: float = 800.0
    row_height: float = 14.0
    map_width: float = 90.0
    map_panel_height: float = 70.0
    label_cap: float = 110.0
    margin: float = 12.0
    gutter: float = 6.0
    column_gap: float = 10.0
    min_column_width: float = 60.0
    axis_inset: float = 10.0
    label_size: float = 9.0
    prior_shade: str = PRIOR_SHADE


@dataclass(frozen=True)
class Band:
    """Vertical slot for one perceptual group.

    ``rows_top``/``rows_height`` bound the data rows (height proportional
    to the group size); the allocation is taller when the constant-size
    map panel needs the room, with rows centered inside it.
    """

    group_index: int
    alloc_top: float
    alloc_height: float
    rows_top: float
    rows_height: float
    row_ids: tuple[str, ...]

    def row_top(self, index: int, row_height: float) -> float:
        return self.rows_top + index * row_height

    def map_top(self, panel_height: float) -> float:
        return self.alloc_top + (self.alloc_height - panel_height) / 2.0


@dataclass(frozen=True)
class LabelEntry:
    region_id: str
    text: str
    full_name: str
    truncated: bool


@dataclass(frozen=True)
class FigureLayout:
    width: float
    height: float
    title_top: float
    header_top: float
    content_top: float
    content_bottom: float
    footnote_top: float
    map_extent: tuple[float, float]
    label_extent: tuple[float, float]
    column_extents: tuple[tuple[float, float], ...]
    bands: tuple[Band, ...]
    labels: tuple[LabelEntry, ...]
    options: LayoutOptions

    def __post_init__(self) -> None:
        previous = None
        for band in self.bands:
            if previous is not None and band.alloc_top < previous:
                raise RenderError("bands overlap")
            previous = band.alloc_top + band.alloc_height


def compute_layout(
    order: Sequence[str],
    names: Mapping[str, str],
    grouping: PerceptualGrouping,
    n_columns: int,
    weights: Sequence[float] | None = None,
    options: LayoutOptions | None = None,
    has_title: bool = False,
    has_subtitle: bool = False,
    footnote_count: int = 0,
) -> FigureLayout:
    """Fixed-row-height layout: map, labels, then equally shared columns."""
    opt = options or LayoutOptions()
    if n_columns < 1:
        raise RenderError("a figure needs at least one data column")
    if weights is None:
        weights = [1.0] * n_columns
    if len(weights) != n_columns or any(w <= 0 for w in weights):
        raise RenderError("column weights must be positive, one per column")

    # label column width from the longest name under the character table
    label_pad = 14.0  # color key dot and breathing room
    entries = []
    widest = 0.0
    for rid in order:
        full = names.get(rid, rid)
        shown = truncate_label(full, opt.label_cap - label_pad, opt.label_size)
        widest = max(widest, text_width(shown, opt.label_size))
        entries.append(LabelEntry(rid, shown, full, shown != full))
    label_width = min(opt.label_cap, widest + label_pad)

    map_x0 = opt.margin
    map_x1 = map_x0 + opt.map_width
    label_x0 = map_x1 + opt.column_gap
    label_x1 = label_x0 + label_width
    available = opt.width - opt.margin - label_x1 - opt.column_gap * n_columns
    total_weight = sum(weights)
    widths = [available * w / total_weight for w in weights]
    if min(widths) < opt.min_column_width:
        minimum = math.ceil(
            label_x1 + opt.column_gap * n_columns + opt.min_column_width * total_weight / min(weights) + opt.margin
        )
        raise RenderError(f"page width {opt.width:g} too narrow; needs at least {minimum}")
    column_extents = []
    x = label_x1
    for w in widths:
        x += opt.column_gap
        column_extents.append((x, x + w))
        x += w

    y = opt.margin
    title_top = y
    if has_title:
        y += 20.0
    if has_subtitle:
        y += 14.0
    if has_title or has_subtitle:
        y += 4.0
    header_top = y
    y += 26.0  # column titles and top tick labels
    content_top = y

    bands = []
    row_cursor = 0
    for index, group in enumerate(grouping.groups):
        rows_height = len(group) * opt.row_height
        alloc_height = max(rows_height, opt.map_panel_height)
        rows_top = y + (alloc_height - rows_height) / 2.0
        bands.append(
            Band(
                group_index=index,
                alloc_top=y,
                alloc_height=alloc_height,
                rows_top=rows_top,
                rows_height=rows_height,
                row_ids=tuple(order[row_cursor : row_cursor + len(group)]),
            )
        )
        row_cursor += len(group)
        y += alloc_height + opt.gutter
    y -= opt.gutter
    content_bottom = y
    y += 18.0  # bottom tick labels
    footnote_top = y
    if footnote_count:
        y += 4.0 + 11.0 * footnote_count
    height = y + opt.margin

    return FigureLayout(
        width=opt.width,
        height=height,
        title_top=title_top,
        header_top=header_top,
        content_top=content_top,
        content_bottom=content_bottom,
        footnote_top=footnote_top,
        map_extent=(map_x0, map_x1),
        label_extent=(label_x0, label_x1),
        column_extents=tuple(column_extents),
        bands=tuple(bands),
        labels=tuple(entries),
        options=opt,
    )


# ── SVG assembly ────────────────────────────────────────────────────────────


def _fmt(value: float) -> str:
    out = f"{value:.2f}"
    return "0.00" if out == "-0.00" else out


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _path(rings: Sequence[Sequence[tuple[float, float]]]) -> str:
    parts = []
    for ring in rings:
        parts.append("M" + " L".join(f"{_fmt(x)} {_fmt(y)}" for x, y in ring) + " Z")
    return "".join(parts)


_POINT_RADIUS = {
    "dot": 3.0,
    "arrow-point": 2.4,
    "series-point": 1.6,
    "scatter-point": 2.2,
}

_SEGMENT_WIDTH = {
    "ci-bar": 1.2,
    "arrow": 1.4,
    "whisker": 1.0,
    "median-line": 1.4,
    "reference-line": 1.0,
    "zero-line": 0.8,
    "identity-line": 0.8,
}

_LINE_WIDTH = {"series": 1.1, "lowess": 1.3}


class _SvgDoc:
    """Accumulates elements per stage so the emitted order stays fixed."""

    STAGES = ("backgrounds", "reference_lines", "map_paths", "glyph_marks", "text")

    def __init__(self, width: float, height: float):
        self.width = width
        self.height = height
        self.stages: dict[str, list[str]] = {name: [] for name in self.STAGES}

    def add(self, stage: str, element: str) -> None:
        self.stages[stage].append(element)

    def text(self, x, y, content, size, anchor="start", color="#000000", bold=False, extra="") -> None:
        weight = ' font-weight="bold"' if bold else ""
        self.add(
            "text",
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-family="{FONT}" font-size="{_fmt(size)}"'
            f' text-anchor="{anchor}" fill="{color}"{weight}{extra}>{_esc(content)}</text>',
        )

    def render(self) -> str:
        body = []
        for name in self.STAGES:
            body.append(f"<!-- {name} -->")
            body.extend(self.stages[name])
        return (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_fmt(self.width)}"'
            f' height="{_fmt(self.height)}" viewBox="0 0 {_fmt(self.width)} {_fmt(self.height)}">\n'
            + "\n".join(body)
            + "\n</svg>\n"
        )


def _mark_svg(mark: glyphs.Mark, color: str, y_of) -> str:
    """Render one primitive; y_of maps builder y to page y."""
    if isinstance(mark, glyphs.PointMark):
        r = _POINT_RADIUS.get(mark.tag, 2.0)
        if mark.filled:
            style = f'fill="{color}"'
        else:
            style = f'fill="none" stroke="{color}" stroke-width="0.8"'
        return f'<circle cx="{_fmt(mark.x)}" cy="{_fmt(y_of(mark.y))}" r="{_fmt(r)}" {style}/>'
    if isinstance(mark, glyphs.SegmentMark):
        width = _SEGMENT_WIDTH.get(mark.tag, 1.0)
        dash = ' stroke-dasharray="3 2"' if mark.style == "dashed" else ""
        y0, y1 = y_of(mark.y0), y_of(mark.y1)
        line = (
            f'<line x1="{_fmt(mark.x0)}" y1="{_fmt(y0)}" x2="{_fmt(mark.x1)}" y2="{_fmt(y1)}"'
            f' stroke="{color}" stroke-width="{_fmt(width)}"{dash}/>'
        )
        if not mark.arrowhead:
            return line
        return line + _arrowhead(mark.x0, y0, mark.x1, y1, color)
    if isinstance(mark, glyphs.RectMark):
        y0, y1 = sorted((y_of(mark.y0), y_of(mark.y1)))
        x0, x1 = sorted((mark.x0, mark.x1))
        return (
            f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(x1 - x0)}"'
            f' height="{_fmt(y1 - y0)}" fill="{color}"/>'
        )
    if isinstance(mark, glyphs.PolylineMark):
        points = " ".join(f"{_fmt(x)},{_fmt(y_of(y))}" for x, y in mark.points)
        width = _LINE_WIDTH.get(mark.tag, 1.0)
        return f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="{_fmt(width)}"/>'
    if isinstance(mark, glyphs.TextMark):
        return (
            f'<text x="{_fmt(mark.x)}" y="{_fmt(y_of(mark.y))}" font-family="{FONT}"'
            f' font-size="9.00" text-anchor="{mark.anchor}" fill="{color}">{_esc(mark.text)}</text>'
        )
    raise RenderError(f"unknown mark type {type(mark).__name__}")


def _arrowhead(x0: float, y0: float, x1: float, y1: float, color: str) -> str:
    length = math.hypot(x1 - x0, y1 - y0)
    if length == 0.0:
        return ""
    ux, uy = (x1 - x0) / length, (y1 - y0) / length
    size, half = 4.0, 2.0
    bx, by = x1 - ux * size, y1 - uy * size
    px, py = -uy, ux
    points = (
        f"{_fmt(x1)},{_fmt(y1)} {_fmt(bx + px * half)},{_fmt(by + py * half)} "
        f"{_fmt(bx - px * half)},{_fmt(by - py * half)}"
    )
    return f'<polygon points="{points}" fill="{color}"/>'


# ── figure assembly ─────────────────────────────────────────────────────────


@dataclass(frozen=True)
class RenderedFigure:
    svg: str
    report: dict[str, Any] = field(compare=False)


def _role_color(role: str, palette) -> str:
    if role == "reference":
        return REFERENCE_COLOR
    if role == "furniture":
        return FURNITURE_COLOR
    if role == "neutral":
        return palette.neutral
    if role == "median":
        return palette.median_accent
    if role.startswith("group:"):
        return palette.colors[int(role.split(":", 1)[1])]
    return "#000000"


def _column_values(column, kind: str) -> list[np.ndarray]:
    if kind in ("dot", "bar"):
        return [column.data["value"]]
    if kind == "dot_ci":
        return [column.data["value"], column.data["lo"], column.data["hi"]]
    if kind == "arrow":
        return [column.data["from"], column.data["to"]]
    if kind == "segmented_bar":
        shares = column.data["shares"]
        totals = np.nansum(shares, axis=1)
        return [totals, np.zeros(1)]
    if kind == "boxplot":
        return [column.data[k] for k in ("p10", "p25", "p50", "p75", "p90")]
    if kind == "timeseries":
        return [column.data["series"]]
    if kind == "scatter":
        return [column.data["x"]]
    raise RenderError(f"unknown glyph kind {kind}")


def _missing_ids(rows: Sequence[glyphs.GlyphRow]) -> list[str]:
    return [row.region_id for row in rows if row.missing]


def _mark_report(mark: glyphs.Mark) -> dict[str, Any]:
    if isinstance(mark, glyphs.PointMark):
        return {
            "tag": mark.tag,
            "x0": round(mark.x, 2),
            "x1": round(mark.x, 2),
            "filled": mark.filled,
        }
    if isinstance(mark, glyphs.SegmentMark):
        lo, hi = sorted((mark.x0, mark.x1))
        return {"tag": mark.tag, "x0": round(lo, 2), "x1": round(hi, 2)}
    if isinstance(mark, glyphs.RectMark):
        lo, hi = sorted((mark.x0, mark.x1))
        return {"tag": mark.tag, "x0": round(lo, 2), "x1": round(hi, 2)}
    if isinstance(mark, glyphs.PolylineMark):
        xs = [x for x, _ in mark.points]
        return {"tag": mark.tag, "x0": round(min(xs), 2), "x1": round(max(xs), 2)}
    return {"tag": mark.tag, "x0": round(mark.x, 2), "x1": round(mark.x, 2)}


def render_figure(
    spec: PlotSpec,
    table: DataTable,
    atlas: Atlas,
    options: LayoutOptions | None = None,
) -> RenderedFigure:
    """Bind, sort, group, lay out, and emit one figure deterministically."""
    opt = options or LayoutOptions()
    model = bind_spec(spec, table, atlas)
    order = sort_rows(model, spec.direction)
    grouping = group_regions(order)
    palette = spec.palette or DEFAULT_PALETTE
    assignment = assign_colors(grouping, palette)

    index_of = {rid: i for i, rid in enumerate(model.region_ids)}
    names = dict(zip(model.region_ids, model.region_names))
    display = [index_of[rid] for rid in order]

    def ordered(values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[display]

    # per-column scales and glyph rows, in display order
    kinds = [column.spec.glyph for column in model.columns]
    roles_by_id = assignment.roles
    role_list = [roles_by_id[rid] for rid in order]
    scales: list[glyphs.AxisScale] = []
    warnings: list[str] = []
    for column, kind in zip(model.columns, kinds):
        refs = [ref.value for ref in column.spec.reference_values]
        pool = np.concatenate([np.asarray(v, dtype=float).ravel() for v in _column_values(column, kind)])
        if kind == "timeseries" and len(column.time_labels) < 2:
            raise RenderError("timeseries column needs at least two time points")
        # timeseries: this is the shared y domain; its x scale is built later
        scales.append(glyphs.fit_axis(pool, refs))

    footnotes: list[str] = []
    if model.dropped:
        footnotes.append("omitted (no sort value): " + ", ".join(rid for rid, _ in model.dropped))

    # build rows twice is wasteful; first pass only counts footnotes, so lay
    # out with final scales once per column after layout fixes the ranges
    layout = compute_layout(
        order,
        names,
        grouping,
        n_columns=len(model.columns),
        weights=[float(c.spec.options.get("weight", 1.0)) for c in model.columns],
        options=opt,
        has_title=bool(spec.title),
        has_subtitle=bool(spec.subtitle),
        footnote_count=0,  # recomputed below once missing rows are known
    )

    column_rows: list[Any] = []
    column_axes: list[glyphs.AxisScale] = []
    column_furniture: list[list[tuple[int, glyphs.Mark]]] = []  # (band index, mark)
    column_missing: list[list[str]] = []
    for ci, (column, kind) in enumerate(zip(model.columns, kinds)):
        x0, x1 = layout.column_extents[ci]
        inner = (x0 + opt.axis_inset, x1 - opt.axis_inset)
        refs = column.spec.reference_values
        furniture: list[tuple[int, glyphs.Mark]] = []
        if kind == "timeseries":
            t_count = len(column.time_labels)
            mid = (t_count - 1) // 2
            x_scale = glyphs.AxisScale(
                domain=(0.0, float(t_count - 1)),
                range=inner,
                ticks=(0.0, float(mid), float(t_count - 1)),
                tick_labels=(
                    column.time_labels[0],
                    column.time_labels[mid],
                    column.time_labels[-1],
                ),
            )
            y_domain = scales[ci]
            rows_by_band = []
            for band in layout.bands:
                y_scale = y_domain.with_range(
                    band.alloc_top + band.alloc_height - 3.0, band.alloc_top + 3.0
                )
                ids_band = band.row_ids
                series = np.stack([np.asarray(column.data["series"])[index_of[rid]] for rid in ids_band])
                band_roles = [roles_by_id[rid] for rid in ids_band]
                rows_by_band.append(
                    glyphs.timeseries_column(ids_band, series, x_scale, y_scale, band_roles)
                )
                zero = glyphs.zero_line(x_scale, y_scale)
                if zero is not None:
                    furniture.append((band.group_index, zero))
            column_rows.append(rows_by_band)
            column_axes.append(x_scale)
            missing = sorted({r.region_id for band_rows in rows_by_band for r in band_rows if r.missing})
            column_missing.append(missing)
        elif kind == "scatter":
            x_scale = scales[ci].with_range(*inner)
            y_fit = glyphs.fit_axis(column.data["y"], [])
            x_all = ordered(column.data["x"])
            y_all = ordered(column.data["y"])
            panels_by_band = []
            opts = column.spec.options
            want_identity = bool(opts.get("identity_line", opts.get("show_identity_line", False)))
            span = opts.get("lowess_span")
            lowess_failed = False
            for band in layout.bands:
                y_scale = y_fit.with_range(
                    band.alloc_top + band.alloc_height - 3.0, band.alloc_top + 3.0
                )
                panels = glyphs.scatter_column(
                    list(order), x_all, y_all, grouping, x_scale, y_scale, roles_by_id
                )
                panels_by_band.append(panels[band.group_index])
                if want_identity:
                    diag = glyphs.identity_line(x_scale, y_scale)
                    if diag is not None:
                        furniture.append((band.group_index, diag))
                if span is not None:
                    params = stats.LowessParams(span=float(span), robust_iters=int(opts.get("robust_iters", 3)))
                    curve = glyphs.lowess_overlay(x_all, y_all, x_scale, y_scale, params)
                    if curve is None:
                        lowess_failed = True
                    else:
                        furniture.append((band.group_index, curve))
            if lowess_failed:
                warnings.append(f"column {ci + 1}: smoothing line omitted (degenerate inputs)")
            column_rows.append(panels_by_band)
            column_axes.append(x_scale)
            missing = sorted({r.region_id for panel in panels_by_band for r in panel if r.missing})
            column_missing.append(missing)
        else:
            scale = scales[ci].with_range(*inner)
            if kind == "dot":
                rows = glyphs.dot_column(list(order), ordered(column.data["value"]), scale, role_list)
            elif kind == "dot_ci":
                rows = glyphs.dot_column(
                    list(order),
                    ordered(column.data["value"]),
                    scale,
                    role_list,
                    ci=(ordered(column.data["lo"]), ordered(column.data["hi"])),
                )
            elif kind == "arrow":
                rows = glyphs.arrow_column(
                    list(order), ordered(column.data["from"]), ordered(column.data["to"]), scale, role_list
                )
            elif kind == "bar":
                rows = glyphs.bar_column(list(order), ordered(column.data["value"]), scale, role_list)
            elif kind == "segmented_bar":
                rows = glyphs.bar_column(
                    list(order), None, scale, role_list, shares=np.asarray(column.data["shares"])[display]
                )
            elif kind == "boxplot":
                rows = glyphs.boxplot_column(
                    list(order),
                    {k: ordered(column.data[k]) for k in ("p10", "p25", "p50", "p75", "p90")},
                    scale,
                    role_list,
                )
            else:
                raise RenderError(f"unknown glyph kind {kind}")
            column_rows.append(rows)
            column_axes.append(scale)
            column_missing.append(_missing_ids(rows))
        if refs:
            ref_marks = glyphs.reference_lines(
                [r.value for r in refs], column_axes[ci], styles=[r.style for r in refs]
            )
            furniture.extend((-1, mark) for mark in ref_marks)  # -1: spans all bands
        column_furniture.append(furniture)

    for ci, missing in enumerate(column_missing):
        if missing:
            title = model.columns[ci].spec.title or kinds[ci]
            footnotes.append(f"column {ci + 1} ({title}): no value for " + ", ".join(missing))
    footnotes.extend(warnings)

    if footnotes:
        layout = compute_layout(
            order,
            names,
            grouping,
            n_columns=len(model.columns),
            weights=[float(c.spec.options.get("weight", 1.0)) for c in model.columns],
            options=opt,
            has_title=bool(spec.title),
            has_subtitle=bool(spec.subtitle),
            footnote_count=len(footnotes),
        )

    projected = project_atlas(
        atlas, opt.map_width - 4.0, opt.map_panel_height - 4.0, margin=1.0, simplify_tolerance=0.3
    )
    panels = build_panel_maps(atlas.ids(), grouping, assignment, spec.shading, opt.prior_shade)

    svg = _emit(spec, layout, model, order, names, grouping, assignment, projected, panels,
                column_rows, column_axes, column_furniture, kinds, footnotes)
    report = _report(spec, layout, model, order, names, grouping, assignment, panels,
                     column_rows, column_axes, kinds, column_missing, footnotes)
    return RenderedFigure(svg=svg, report=report)


def _emit(spec, layout, model, order, names, grouping, assignment, projected, panels,
          column_rows, column_axes, column_furniture, kinds, footnotes) -> str:
    opt = layout.options
    doc = _SvgDoc(layout.width, layout.height)
    doc.add("backgrounds", f'<rect x="0.00" y="0.00" width="{_fmt(layout.width)}" height="{_fmt(layout.height)}" fill="#FFFFFF"/>')

    # band backgrounds behind each data column
    for band in layout.bands:
        for x0, x1 in layout.column_extents:
            doc.add(
                "backgrounds",
                f'<rect x="{_fmt(x0)}" y="{_fmt(band.alloc_top)}" width="{_fmt(x1 - x0)}"'
                f' height="{_fmt(band.alloc_height)}" fill="{BAND_BG}"/>',
            )

    # axis lines and tick marks (top and bottom, once per column)
    for ci, (x0, x1) in enumerate(layout.column_extents):
        axis = column_axes[ci]
        top = layout.content_top - 3.0
        bottom = layout.content_bottom + 3.0
        for y in (top, bottom):
            doc.add(
                "backgrounds",
                f'<line x1="{_fmt(x0 + opt.axis_inset)}" y1="{_fmt(y)}" x2="{_fmt(x1 - opt.axis_inset)}"'
                f' y2="{_fmt(y)}" stroke="{AXIS_COLOR}" stroke-width="0.8"/>',
            )
        for tick in axis.ticks:
            tx = axis.position(tick)
            doc.add(
                "backgrounds",
                f'<line x1="{_fmt(tx)}" y1="{_fmt(top)}" x2="{_fmt(tx)}" y2="{_fmt(top - 3)}"'
                f' stroke="{AXIS_COLOR}" stroke-width="0.8"/>',
            )
            doc.add(
                "backgrounds",
                f'<line x1="{_fmt(tx)}" y1="{_fmt(bottom)}" x2="{_fmt(tx)}" y2="{_fmt(bottom + 3)}"'
                f' stroke="{AXIS_COLOR}" stroke-width="0.8"/>',
            )

    # full-height reference lines beneath everything else in the column
    for ci, furniture in enumerate(column_furniture):
        for band_index, mark in furniture:
            if band_index == -1:
                color = _role_color(mark.role, assignment.palette)
                y_of = lambda frac: layout.content_top + frac * (layout.content_bottom - layout.content_top)
                doc.add("reference_lines", _mark_svg(mark, color, y_of))

    # map panels
    for band in layout.bands:
        panel = panels[band.group_index]
        ox = layout.map_extent[0] + 2.0
        oy = band.map_top(opt.map_panel_height) + 2.0

        def place(rings):
            return [[(x + ox, y + oy) for x, y in ring] for ring in rings]

        if projected.outline_paths:
            doc.add(
                "map_paths",
                f'<path d="{_path(place(projected.outline_paths))}" fill="none"'
                f' stroke="{OUTLINE_STROKE}" stroke-width="0.6"/>',
            )
        for rid, rings in projected.region_paths.items():
            fill = panel.fills.get(rid, assignment.palette.neutral)
            doc.add(
                "map_paths",
                f'<path d="{_path(place(rings))}" fill="{fill}" stroke="{MAP_STROKE}" stroke-width="0.5"/>',
            )

    # glyph marks: per column, per band, furniture first then rows
    for ci, kind in enumerate(kinds):
        furniture = column_furniture[ci]
        rows = column_rows[ci]
        for band in layout.bands:
            for band_index, mark in furniture:
                if band_index == band.group_index:
                    color = _role_color(mark.role, assignment.palette)
                    doc.add("glyph_marks", _mark_svg(mark, color, lambda y: y))
            if kind in ("timeseries", "scatter"):
                for row in rows[band.group_index]:
                    for mark in row.marks:
                        color = _role_color(mark.role, assignment.palette)
                        doc.add("glyph_marks", _mark_svg(mark, color, lambda y: y))
            else:
                for ri, rid in enumerate(band.row_ids):
                    row = rows[_display_index(layout, band, ri)]
                    row_top = band.row_top(ri, opt.row_height)
                    y_of = lambda frac: row_top + frac * opt.row_height
                    for mark in row.marks:
                        color = _role_color(mark.role, assignment.palette)
                        doc.add("glyph_marks", _mark_svg(mark, color, y_of))

    # text: titles, column titles, tick labels, row labels, footnotes
    y_text = layout.title_top
    if spec.title:
        doc.text(opt.margin, y_text + 14.0, spec.title, 15.0, bold=True)
        y_text += 20.0
    if spec.subtitle:
        doc.text(opt.margin, y_text + 10.0, spec.subtitle, 11.0, color="#333333")

    for ci, (x0, x1) in enumerate(layout.column_extents):
        title = model.columns[ci].spec.title
        center = (x0 + x1) / 2.0
        if title:
            doc.text(center, layout.header_top + 10.0, title, 10.0, anchor="middle", bold=True)
        axis = column_axes[ci]
        for tick, label in zip(axis.ticks, axis.tick_labels):
            tx = axis.position(tick)
            doc.text(tx, layout.header_top + 22.0, label, 8.0, anchor="middle", color=AXIS_COLOR)
            doc.text(tx, layout.content_bottom + 14.0, label, 8.0, anchor="middle", color=AXIS_COLOR)

    label_by_id = {entry.region_id: entry for entry in layout.labels}
    lx0 = layout.label_extent[0]
    for band in layout.bands:
        for ri, rid in enumerate(band.row_ids):
            entry = label_by_id[rid]
            cy = band.row_top(ri, opt.row_height) + opt.row_height / 2.0
            color = assignment.fill[rid]
            doc.add(
                "text",
                f'<circle cx="{_fmt(lx0 + 4.0)}" cy="{_fmt(cy)}" r="3.00" fill="{color}"/>',
            )
            doc.text(
                lx0 + 11.0,
                cy + 3.0,
                entry.text,
                opt.label_size,
                extra=f' id="label-{_esc(rid)}"',
            )

    for i, note in enumerate(footnotes):
        doc.text(opt.margin, layout.footnote_top + 12.0 + 11.0 * i, note, 8.0, color="#555555")

    return doc.render()


def _display_index(layout: FigureLayout, band: Band, row_in_band: int) -> int:
    # rows were built in display order; bands partition that order in sequence
    offset = 0
    for earlier in layout.bands:
        if earlier.group_index == band.group_index:
            break
        offset += len(earlier.row_ids)
    return offset + row_in_band


def _report(spec, layout, model, order, names, grouping, assignment, panels,
            column_rows, column_axes, kinds, column_missing, footnotes) -> dict[str, Any]:
    opt = layout.options
    label_by_id = {entry.region_id: entry for entry in layout.labels}
    index_of = {rid: i for i, rid in enumerate(model.region_ids)}

    rows = []
    for rid in order:
        entry = label_by_id[rid]
        rows.append(
            {
                "id": rid,
                "name": names[rid],
                "label": entry.text,
                "truncated": entry.truncated,
                "group": grouping.group_of(rid),
                "sort_value": float(np.asarray(model.sort_values)[index_of[rid]]),
                "color": assignment.fill[rid],
                "role": assignment.roles[rid],
            }
        )

    report_panels = []
    for band in layout.bands:
        panel = panels[band.group_index]
        report_panels.append(
            {
                "group_index": band.group_index,
                "y": round(band.alloc_top, 2),
                "height": round(band.alloc_height, 2),
                "rows_y": round(band.rows_top, 2),
                "rows_height": round(band.rows_height, 2),
                "row_ids": list(band.row_ids),
                "styles": dict(panel.styles),
            }
        )

    columns = []
    for ci, kind in enumerate(kinds):
        axis = column_axes[ci]
        x0, x1 = layout.column_extents[ci]
        marks = []
        if kind in ("timeseries", "scatter"):
            for band in layout.bands:
                for row in column_rows[ci][band.group_index]:
                    for mark in row.marks:
                        entry = _mark_report(mark)
                        entry["region"] = row.region_id
                        entry["panel"] = band.group_index
                        marks.append(entry)
        else:
            rows_list = column_rows[ci]
            for band in layout.bands:
                for ri, rid in enumerate(band.row_ids):
                    row = rows_list[_display_index(layout, band, ri)]
                    for mark in row.marks:
                        entry = _mark_report(mark)
                        entry["region"] = rid
                        marks.append(entry)
        values: dict[str, Any] = {}
        column = model.columns[ci]
        display = [index_of[rid] for rid in order]
        for key, array in column.data.items():
            arranged = np.asarray(array)[display]
            if arranged.ndim == 1:
                values[key] = {
                    rid: (None if not math.isfinite(float(v)) else float(v))
                    for rid, v in zip(order, arranged)
                }
            else:
                values[key] = {
                    rid: [None if not math.isfinite(float(v)) else float(v) for v in vec]
                    for rid, vec in zip(order, arranged)
                }
        columns.append(
            {
                "index": ci,
                "kind": kind,
                "title": column.spec.title,
                "x0": round(x0, 2),
                "x1": round(x1, 2),
                "axis": {
                    "domain": [float(axis.domain[0]), float(axis.domain[1])],
                    "range": [float(axis.range[0]), float(axis.range[1])],
                    "ticks": [float(t) for t in axis.ticks],
                    "tick_labels": list(axis.tick_labels),
                },
                "references": [
                    {"value": ref.value, "label": ref.label, "style": ref.style,
                     "x": round(axis.position(ref.value), 2)}
                    for ref in column.spec.reference_values
                ],
                "time_labels": list(column.time_labels),
                "values": values,
                "marks": marks,
                "missing": column_missing[ci],
            }
        )

    return {
        "figure": {
            "width": round(layout.width, 2),
            "height": round(layout.height, 2),
            "title": spec.title,
            "subtitle": spec.subtitle,
            "direction": spec.direction,
            "shading": spec.shading,
        },
        "layout": {
            "map": {"x0": round(layout.map_extent[0], 2), "x1": round(layout.map_extent[1], 2)},
            "labels": {"x0": round(layout.label_extent[0], 2), "x1": round(layout.label_extent[1], 2)},
            "row_height": opt.row_height,
            "content_top": round(layout.content_top, 2),
            "content_bottom": round(layout.content_bottom, 2),
        },
        "rows": rows,
        "panels": report_panels,
        "columns": columns,
        "dropped": [{"id": rid, "reason": reason} for rid, reason in model.dropped],
        "footnotes": list(footnotes),
        "palette": {
            "colors": list(assignment.palette.colors),
            "median_accent": assignment.palette.median_accent,
            "neutral": assignment.palette.neutral,
        },
    }
