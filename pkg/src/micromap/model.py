"""Shared domain types plus spec validation and binding.

A ``PlotSpec`` declares what a figure should show; ``validate_spec`` checks
it against a ``DataTable`` and an ``Atlas`` and reports issues as data;
``bind_spec`` resolves every binding into per-region numeric arrays ready for
grouping and glyph construction.  All types here are immutable after
construction and safe to share across concurrent renders.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import stats
from .grouping import Palette

__all__ = [
    "SpecError",
    "BindError",
    "Region",
    "Atlas",
    "DataTable",
    "ColumnSort",
    "PcaSort",
    "ResidualSort",
    "RefValue",
    "ColumnSpec",
    "PlotSpec",
    "ValidationReport",
    "BoundColumn",
    "BoundFigureModel",
    "GLYPH_KINDS",
    "validate_spec",
    "bind_spec",
    "plot_spec_to_json",
    "plot_spec_from_json",
]

GLYPH_KINDS = (
    "dot",
    "dot_ci",
    "arrow",
    "bar",
    "segmented_bar",
    "boxplot",
    "timeseries",
    "scatter",
)

# bindings every glyph kind must name (dot_ci is special-cased: value plus
# either lo/hi or prse)
_REQUIRED_BINDINGS: dict[str, tuple[str, ...]] = {
    "dot": ("value",),
    "arrow": ("from", "to"),
    "bar": ("value",),
    "segmented_bar": ("shares",),
    "boxplot": ("p10", "p25", "p50", "p75", "p90"),
    "timeseries": ("group",),
    "scatter": ("x", "y"),
}


class SpecError(ValueError):
    """Structurally malformed spec document (not a validation issue)."""


class BindError(ValueError):
    """Binding attempted on inputs that do not satisfy the contract."""


@dataclass(frozen=True)
class Region:
    """One areal unit: id key, display name, one or more polygon rings."""

    id: str
    name: str
    rings: tuple[tuple[tuple[float, float], ...], ...]

    def __post_init__(self) -> None:
        if not self.id:
            raise SpecError("region id must be non-empty")
        if not self.rings:
            raise SpecError(f"region {self.id} has no geometry")
        for ring in self.rings:
            if len(ring) < 3:
                raise SpecError(f"region {self.id} has a ring with fewer than 3 vertices")
            for x, y in ring:
                if not (math.isfinite(x) and math.isfinite(y)):
                    raise SpecError(f"region {self.id} has non-finite coordinates")

    def bbox(self) -> tuple[float, float, float, float]:
        xs = [x for ring in self.rings for x, _ in ring]
        ys = [y for ring in self.rings for _, y in ring]
        return (min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class Atlas:
    """Named set of regions in planar layout units, plus an optional outline."""

    id: str
    regions: tuple[Region, ...]
    outline: tuple[tuple[tuple[float, float], ...], ...] = ()
    crs_note: str = ""

    def __post_init__(self) -> None:
        if len(self.regions) < 2:
            raise SpecError(f"atlas {self.id} needs at least 2 regions")
        seen: set[str] = set()
        for region in self.regions:
            if region.id in seen:
                raise SpecError(f"atlas {self.id} has duplicate region id {region.id}")
            seen.add(region.id)

    def ids(self) -> tuple[str, ...]:
        return tuple(region.id for region in self.regions)

    def region(self, region_id: str) -> Region:
        for r in self.regions:
            if r.id == region_id:
                return r
        raise KeyError(region_id)

    def bbox(self) -> tuple[float, float, float, float]:
        boxes = [r.bbox() for r in self.regions]
        for ring in self.outline:
            xs = [x for x, _ in ring]
            ys = [y for _, y in ring]
            boxes.append((min(xs), min(ys), max(xs), max(ys)))
        return (
            min(b[0] for b in boxes),
            min(b[1] for b in boxes),
            max(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )


@dataclass(frozen=True)
class DataTable:
    """Region-keyed rows with named numeric columns; NaN marks missing cells.

    ``time_groups`` maps a group name to ordered (time label, column name)
    pairs; the referenced columns are ordinary members of ``columns``.
    """

    key_column: str
    keys: tuple[str, ...]
    columns: Mapping[str, np.ndarray]
    time_groups: Mapping[str, tuple[tuple[str, str], ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(set(self.keys)) != len(self.keys):
            dupes = sorted({k for k in self.keys if self.keys.count(k) > 1})
            raise SpecError(f"duplicate row keys: {', '.join(dupes)}")
        n = len(self.keys)
        for name, values in self.columns.items():
            if len(values) != n:
                raise SpecError(f"column {name} has {len(values)} values for {n} rows")
        for group, pairs in self.time_groups.items():
            labels = [label for label, _ in pairs]
            if len(set(labels)) != len(labels):
                raise SpecError(f"time group {group} repeats a time label")
            for label, column in pairs:
                if column not in self.columns:
                    raise SpecError(f"time group {group} references missing column {column}")

    def row_index(self) -> dict[str, int]:
        return {key: i for i, key in enumerate(self.keys)}

    def column_names(self) -> tuple[str, ...]:
        return tuple(self.columns.keys())


@dataclass(frozen=True)
class ColumnSort:
    column: str


@dataclass(frozen=True)
class PcaSort:
    component: int
    columns: tuple[str, ...]


@dataclass(frozen=True)
class ResidualSort:
    x: str
    y: str
    span: float = 2.0 / 3.0
    robust_iters: int = 3


SortSpec = ColumnSort | PcaSort | ResidualSort


@dataclass(frozen=True)
class RefValue:
    value: float
    label: str = ""
    style: str = "solid"  # or "dashed"


@dataclass(frozen=True)
class ColumnSpec:
    glyph: str
    bindings: Mapping[str, Any]
    reference_values: tuple[RefValue, ...] = ()
    options: Mapping[str, Any] = field(default_factory=dict)
    title: str = ""


@dataclass(frozen=True)
class PlotSpec:
    sort: SortSpec
    columns: tuple[ColumnSpec, ...]
    direction: str = "descending"
    shading: str = "current_group"
    title: str = ""
    subtitle: str = ""
    drop_missing_sort: bool = False
    palette: Palette | None = None


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[str, ...]

    def ok(self) -> bool:
        return not self.issues


@dataclass(frozen=True)
class BoundColumn:
    """One figure column with every binding resolved to aligned arrays."""

    spec: ColumnSpec
    data: Mapping[str, np.ndarray]
    time_labels: tuple[str, ...] = ()
    share_names: tuple[str, ...] = ()


@dataclass(frozen=True)
class BoundFigureModel:
    spec: PlotSpec
    region_ids: tuple[str, ...]
    region_names: tuple[str, ...]
    sort_values: np.ndarray
    columns: tuple[BoundColumn, ...]
    dropped: tuple[tuple[str, str], ...] = ()


# ── validation ────────────────────────────────────────────────────────────


def _binding_columns(column: ColumnSpec) -> list[str]:
    """Plain table columns a glyph needs (time groups checked separately)."""
    names: list[str] = []
    for key, value in column.bindings.items():
        if column.glyph == "timeseries" and key == "group":
            continue
        if isinstance(value, str):
            names.append(value)
        elif isinstance(value, (list, tuple)):
            names.extend(v for v in value if isinstance(v, str))
    return names


def validate_spec(spec: PlotSpec, table: DataTable, atlas: Atlas) -> ValidationReport:
    """Check bindings, keys, and glyph arity; issues are data, not failures."""
    issues: list[str] = []
    known = set(table.columns.keys())

    if not spec.columns:
        issues.append("spec has no data columns")
    if spec.direction not in ("ascending", "descending"):
        issues.append(f"unknown direction {spec.direction}")
    if spec.shading not in ("current_group", "cumulative"):
        issues.append(f"unknown shading mode {spec.shading}")

    sort = spec.sort
    if isinstance(sort, ColumnSort):
        if sort.column not in known:
            issues.append(f"unresolved binding {sort.column}")
    elif isinstance(sort, PcaSort):
        if not sort.columns:
            issues.append("pca sort needs at least one column")
        for name in sort.columns:
            if name not in known:
                issues.append(f"unresolved binding {name}")
        if sort.columns and not (1 <= sort.component <= len(sort.columns)):
            issues.append(
                f"pca component {sort.component} outside 1..{len(sort.columns)}"
            )
    elif isinstance(sort, ResidualSort):
        for name in (sort.x, sort.y):
            if name not in known:
                issues.append(f"unresolved binding {name}")
        if not (0.0 < sort.span <= 1.0):
            issues.append(f"lowess span {sort.span} outside (0, 1]")
    else:  # pragma: no cover - codec prevents this
        issues.append("missing sort binding")

    atlas_ids = set(atlas.ids())
    for key in table.keys:
        if key not in atlas_ids:
            issues.append(f"unmatched region key {key}")

    for index, column in enumerate(spec.columns):
        where = f"column {index}"
        if column.glyph not in GLYPH_KINDS:
            issues.append(f"{where}: unknown glyph {column.glyph}")
            continue
        if column.glyph == "dot_ci":
            if "value" not in column.bindings:
                issues.append(f"{where}: dot_ci needs a value binding")
            has_interval = "lo" in column.bindings and "hi" in column.bindings
            if not has_interval and "prse" not in column.bindings:
                issues.append(f"{where}: dot_ci needs lo/hi bindings or a prse binding")
        else:
            for name in _REQUIRED_BINDINGS[column.glyph]:
                if name not in column.bindings:
                    issues.append(f"{where}: {column.glyph} needs a {name} binding")
        if column.glyph == "timeseries":
            group = column.bindings.get("group")
            if isinstance(group, str) and group not in table.time_groups:
                issues.append(f"unresolved binding {group}")
        for name in _binding_columns(column):
            if name not in known:
                issues.append(f"unresolved binding {name}")
        for ref in column.reference_values:
            if not math.isfinite(ref.value):
                issues.append(f"{where}: non-finite reference value")

    return ValidationReport(issues=tuple(issues))


# ── binding ───────────────────────────────────────────────────────────────


def _column_array(table: DataTable, name: str, ids: Sequence[str]) -> np.ndarray:
    index = table.row_index()
    source = np.asarray(table.columns[name], dtype=float)
    return np.array([source[index[rid]] for rid in ids], dtype=float)


def _sort_values(
    spec: PlotSpec, table: DataTable, ids: tuple[str, ...]
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Sort values for ids, recomputed on the retained subset for derived sorts.

    Returns the values and the ids actually retained (drop_missing_sort may
    remove rows with incomplete sort inputs).
    """
    sort = spec.sort
    if isinstance(sort, ColumnSort):
        values = _column_array(table, sort.column, ids)
        inputs_ok = np.isfinite(values)
    elif isinstance(sort, PcaSort):
        matrix = np.column_stack([_column_array(table, c, ids) for c in sort.columns])
        inputs_ok = np.isfinite(matrix).all(axis=1)
        values = np.full(len(ids), np.nan)
    else:
        xy = np.column_stack(
            [_column_array(table, sort.x, ids), _column_array(table, sort.y, ids)]
        )
        inputs_ok = np.isfinite(xy).all(axis=1)
        values = np.full(len(ids), np.nan)

    if not inputs_ok.all():
        missing = [rid for rid, ok in zip(ids, inputs_ok) if not ok]
        if not spec.drop_missing_sort:
            raise BindError(
                "missing sort value for region(s) "
                + ", ".join(missing)
                + "; set drop_missing_sort to remove them"
            )
        ids = tuple(rid for rid, ok in zip(ids, inputs_ok) if ok)

    if isinstance(sort, ColumnSort):
        return _column_array(table, sort.column, ids), ids
    if isinstance(sort, PcaSort):
        matrix = np.column_stack([_column_array(table, c, ids) for c in sort.columns])
        try:
            scores = stats.pca_scores(matrix, sort.component, column_names=sort.columns)
        except stats.StatsError as exc:
            raise BindError(f"pca sort failed: {exc}") from exc
        return scores, ids
    x = _column_array(table, sort.x, ids)
    y = _column_array(table, sort.y, ids)
    try:
        residuals = stats.lowess_residuals(
            x, y, stats.LowessParams(span=sort.span, robust_iters=sort.robust_iters)
        )
    except stats.StatsError as exc:
        raise BindError(f"lowess residual sort failed: {exc}") from exc
    return residuals, ids


def _bind_column(column: ColumnSpec, table: DataTable, ids: tuple[str, ...]) -> BoundColumn:
    glyph = column.glyph
    data: dict[str, np.ndarray] = {}
    time_labels: tuple[str, ...] = ()
    share_names: tuple[str, ...] = ()

    if glyph in ("dot", "bar"):
        data["value"] = _column_array(table, column.bindings["value"], ids)
    elif glyph == "dot_ci":
        value = _column_array(table, column.bindings["value"], ids)
        data["value"] = value
        if "lo" in column.bindings and "hi" in column.bindings:
            data["lo"] = _column_array(table, column.bindings["lo"], ids)
            data["hi"] = _column_array(table, column.bindings["hi"], ids)
        else:
            prse = _column_array(table, column.bindings["prse"], ids)
            level = float(column.options.get("level", 0.90))
            lo = np.full(len(ids), np.nan)
            hi = np.full(len(ids), np.nan)
            for i in range(len(ids)):
                if math.isfinite(value[i]) and math.isfinite(prse[i]):
                    lo[i], hi[i] = stats.ci_from_prse(value[i], prse[i], level)
            data["lo"] = lo
            data["hi"] = hi
    elif glyph == "arrow":
        data["from"] = _column_array(table, column.bindings["from"], ids)
        data["to"] = _column_array(table, column.bindings["to"], ids)
    elif glyph == "segmented_bar":
        names = column.bindings["shares"]
        if isinstance(names, str):
            names = [names]
        share_names = tuple(names)
        data["shares"] = np.column_stack([_column_array(table, n, ids) for n in share_names])
    elif glyph == "boxplot":
        for key in ("p10", "p25", "p50", "p75", "p90"):
            data[key] = _column_array(table, column.bindings[key], ids)
    elif glyph == "timeseries":
        group = column.bindings["group"]
        pairs = table.time_groups[group]
        time_labels = tuple(label for label, _ in pairs)
        series = np.column_stack([_column_array(table, col, ids) for _, col in pairs])
        lag = column.options.get("over_year_lag")
        if lag is not None:
            transformed = np.full_like(series, np.nan)
            for i in range(series.shape[0]):
                transformed[i] = stats.over_year_pct_change(series[i], int(lag))
            series = transformed
        data["series"] = series
    elif glyph == "scatter":
        data["x"] = _column_array(table, column.bindings["x"], ids)
        data["y"] = _column_array(table, column.bindings["y"], ids)
    else:  # pragma: no cover - validated earlier
        raise BindError(f"unknown glyph {glyph}")
    return BoundColumn(spec=column, data=data, time_labels=time_labels, share_names=share_names)


def bind_spec(spec: PlotSpec, table: DataTable, atlas: Atlas) -> BoundFigureModel:
    """Resolve a validated spec into per-region arrays; deterministic.

    Rows are the atlas regions present in the table, in atlas order; regions
    missing from the table are omitted (they render neutral on maps).
    """
    report = validate_spec(spec, table, atlas)
    if not report.ok():
        raise BindError("spec has validation issues: " + "; ".join(report.issues))

    present = set(table.keys)
    ids = tuple(r.id for r in atlas.regions if r.id in present)
    sort_values, retained = _sort_values(spec, table, ids)
    dropped = tuple((rid, "missing sort value") for rid in ids if rid not in set(retained))
    names = tuple(atlas.region(rid).name for rid in retained)
    columns = tuple(_bind_column(column, table, retained) for column in spec.columns)
    return BoundFigureModel(
        spec=spec,
        region_ids=retained,
        region_names=names,
        sort_values=sort_values,
        columns=columns,
        dropped=dropped,
    )


# ── canonical JSON codec ──────────────────────────────────────────────────


def _sort_to_json(sort: SortSpec) -> dict[str, Any]:
    if isinstance(sort, ColumnSort):
        return {"column": sort.column}
    if isinstance(sort, PcaSort):
        return {"pca": {"component": sort.component, "columns": list(sort.columns)}}
    return {
        "lowess_residual": {
            "x": sort.x,
            "y": sort.y,
            "span": sort.span,
            "robust_iters": sort.robust_iters,
        }
    }


def _sort_from_json(doc: Any) -> SortSpec:
    if not isinstance(doc, Mapping) or len(doc) != 1:
        raise SpecError("sort must be an object with exactly one of column/pca/lowess_residual")
    if "column" in doc:
        if not isinstance(doc["column"], str):
            raise SpecError("sort.column must be a string")
        return ColumnSort(column=doc["column"])
    if "pca" in doc:
        body = doc["pca"]
        if not isinstance(body, Mapping) or "columns" not in body:
            raise SpecError("sort.pca must be an object with component and columns")
        return PcaSort(
            component=int(body.get("component", 1)),
            columns=tuple(str(c) for c in body["columns"]),
        )
    if "lowess_residual" in doc:
        body = doc["lowess_residual"]
        if not isinstance(body, Mapping) or "x" not in body or "y" not in body:
            raise SpecError("sort.lowess_residual must name x and y columns")
        return ResidualSort(
            x=str(body["x"]),
            y=str(body["y"]),
            span=float(body.get("span", 2.0 / 3.0)),
            robust_iters=int(body.get("robust_iters", 3)),
        )
    raise SpecError(f"unknown sort binding {sorted(doc)}")


def _refs_from_json(doc: Any, where: str) -> tuple[RefValue, ...]:
    if doc is None:
        return ()
    if not isinstance(doc, Sequence) or isinstance(doc, str):
        raise SpecError(f"{where}: reference_values must be a list")
    refs = []
    for item in doc:
        if not (isinstance(item, Sequence) and not isinstance(item, str) and 2 <= len(item) <= 3):
            raise SpecError(
                f"{where}: each reference value is [value, label] or [value, label, style]"
            )
        refs.append(
            RefValue(
                value=float(item[0]),
                label=str(item[1]),
                style=str(item[2]) if len(item) == 3 else "solid",
            )
        )
    return tuple(refs)


def plot_spec_to_json(spec: PlotSpec) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "sort": _sort_to_json(spec.sort),
        "direction": spec.direction,
        "columns": [],
        "shading": spec.shading,
        "title": spec.title,
        "subtitle": spec.subtitle,
        "drop_missing_sort": spec.drop_missing_sort,
    }
    if spec.palette is not None:
        doc["palette"] = {
            "colors": list(spec.palette.colors),
            "median_accent": spec.palette.median_accent,
            "neutral": spec.palette.neutral,
        }
    for column in spec.columns:
        refs = []
        for ref in column.reference_values:
            entry = [ref.value, ref.label]
            if ref.style != "solid":
                entry.append(ref.style)
            refs.append(entry)
        doc["columns"].append(
            {
                "glyph": column.glyph,
                "bindings": dict(column.bindings),
                "reference_values": refs,
                "options": dict(column.options),
                "title": column.title,
            }
        )
    return doc


def plot_spec_from_json(doc: Any) -> PlotSpec:
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from exc
    if not isinstance(doc, Mapping):
        raise SpecError("spec must be a JSON object")
    if "sort" not in doc:
        raise SpecError("spec is missing the sort binding")
    if "columns" not in doc or not isinstance(doc["columns"], Sequence):
        raise SpecError("spec must list columns")

    columns = []
    for index, item in enumerate(doc["columns"]):
        where = f"column {index}"
        if not isinstance(item, Mapping):
            raise SpecError(f"{where}: must be an object")
        if "glyph" not in item:
            raise SpecError(f"{where}: missing glyph kind")
        bindings = item.get("bindings", {})
        if not isinstance(bindings, Mapping):
            raise SpecError(f"{where}: bindings must be an object")
        options = item.get("options", {})
        if not isinstance(options, Mapping):
            raise SpecError(f"{where}: options must be an object")
        columns.append(
            ColumnSpec(
                glyph=str(item["glyph"]),
                bindings={str(k): v for k, v in bindings.items()},
                reference_values=_refs_from_json(item.get("reference_values"), where),
                options={str(k): v for k, v in options.items()},
                title=str(item.get("title", "")),
            )
        )

    palette = None
    if doc.get("palette") is not None:
        body = doc["palette"]
        if not isinstance(body, Mapping) or "colors" not in body:
            raise SpecError("palette must list 5 colors")
        colors = tuple(str(c) for c in body["colors"])
        if len(colors) != 5:
            raise SpecError("palette must list exactly 5 colors")
        palette = Palette(
            colors=colors,  # type: ignore[arg-type]
            median_accent=str(body.get("median_accent", "#000000")),
            neutral=str(body.get("neutral", "#CCCCCC")),
        )

    return PlotSpec(
        sort=_sort_from_json(doc["sort"]),
        columns=tuple(columns),
        direction=str(doc.get("direction", "descending")),
        shading=str(doc.get("shading", "current_group")),
        title=str(doc.get("title", "")),
        subtitle=str(doc.get("subtitle", "")),
        drop_missing_sort=bool(doc.get("drop_missing_sort", False)),
        palette=palette,
    )
