"""Boundary loading, panel projection, and per-group map styling.

Atlases are plain feature collections with a configurable id property.
Planar coordinates (y down) pass through untouched; longitude/latitude
inputs get an equirectangular projection scaled by the cosine of the mid
latitude.  Projection into panel coordinates happens once per figure; the
per-group panels share that geometry and differ only in styling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .grouping import ColorAssignment, PerceptualGrouping
from .model import Atlas, Region

__all__ = [
    "AtlasError",
    "PanelMap",
    "ProjectedAtlas",
    "load_atlas",
    "project_atlas",
    "simplify_ring",
    "build_panel_maps",
    "PRIOR_SHADE",
]

# light shade for already-seen regions in cumulative mode
PRIOR_SHADE = "#BFBFBF"


class AtlasError(ValueError):
    """Boundary document violates the loader's contract."""


Ring = tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class ProjectedAtlas:
    """Atlas geometry mapped into one panel's local coordinates."""

    width: float
    height: float
    region_paths: Mapping[str, tuple[Ring, ...]]
    outline_paths: tuple[Ring, ...]


@dataclass(frozen=True)
class PanelMap:
    """Styling for one perceptual group's map panel.

    ``styles`` classifies every atlas region as highlight, prior, or
    neutral; ``fills`` resolves those classes to concrete colors.
    """

    group_index: int
    styles: Mapping[str, str]
    fills: Mapping[str, str]


# ── loading ─────────────────────────────────────────────────────────────────


def _geometry_polygons(geometry: Mapping[str, Any], where: str) -> list[list[list[list[float]]]]:
    kind = geometry.get("type")
    if kind == "Polygon":
        return [geometry["coordinates"]]
    if kind == "MultiPolygon":
        return list(geometry["coordinates"])
    raise AtlasError(f"{where}: unsupported geometry type {kind}")


def _rings_from_polygons(polygons, where: str) -> tuple[Ring, ...]:
    rings: list[Ring] = []
    for polygon in polygons:
        for ring in polygon:
            if len(ring) < 4:
                raise AtlasError(f"{where}: ring has fewer than 4 coordinates")
            first = tuple(ring[0])
            last = tuple(ring[-1])
            if first != last:
                raise AtlasError(f"{where}: unclosed ring")
            rings.append(tuple((float(x), float(y)) for x, y in ring[:-1]))
    return tuple(rings)


def _looks_like_lonlat(rings: list[Ring]) -> bool:
    xs = [x for ring in rings for x, _ in ring]
    ys = [y for ring in rings for _, y in ring]
    return bool(xs) and max(map(abs, xs)) <= 180.0 and max(map(abs, ys)) <= 90.0


def _equirect(rings: tuple[Ring, ...], cos_lat: float) -> tuple[Ring, ...]:
    # y flips so north is up on a y-down canvas
    return tuple(tuple((x * cos_lat, -y) for x, y in ring) for ring in rings)


def load_atlas(
    source: str | Path | Mapping[str, Any],
    id_property: str = "id",
    name_property: str = "name",
    projection: str = "auto",
) -> Atlas:
    """Read a feature collection into an Atlas.

    ``projection``: "planar" passes coordinates through, "lonlat" applies
    the equirectangular conversion, "auto" picks lonlat only when every
    coordinate fits inside longitude/latitude bounds.
    """
    if isinstance(source, Mapping):
        doc = source
        atlas_id = str(doc.get("name", "atlas"))
    else:
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise AtlasError(f"boundary file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise AtlasError(f"{path} is not valid JSON: {exc}") from None
        atlas_id = str(doc.get("name", path.stem))
    if projection not in ("auto", "planar", "lonlat"):
        raise AtlasError(f"unknown projection mode {projection}")
    if doc.get("type") != "FeatureCollection" or "features" not in doc:
        raise AtlasError("boundary document must be a FeatureCollection")

    raw: list[tuple[str, str, tuple[Ring, ...]]] = []
    for index, feature in enumerate(doc["features"]):
        properties = feature.get("properties") or {}
        rid = properties.get(id_property, feature.get("id") if id_property == "id" else None)
        if rid is None or str(rid) == "":
            raise AtlasError(f"feature {index} missing id property {id_property!r}")
        rid = str(rid)
        name = str(properties.get(name_property, rid))
        polygons = _geometry_polygons(feature.get("geometry") or {}, f"region {rid}")
        raw.append((rid, name, _rings_from_polygons(polygons, f"region {rid}")))

    all_rings = [ring for _, _, rings in raw for ring in rings]
    use_lonlat = projection == "lonlat" or (projection == "auto" and _looks_like_lonlat(all_rings))

    outline: tuple[Ring, ...] = ()
    if doc.get("outline"):
        outline = _rings_from_polygons(_geometry_polygons(doc["outline"], "outline"), "outline")

    if use_lonlat:
        lats = [y for ring in all_rings for _, y in ring]
        cos_lat = math.cos(math.radians((min(lats) + max(lats)) / 2.0))
        raw = [(rid, name, _equirect(rings, cos_lat)) for rid, name, rings in raw]
        outline = _equirect(outline, cos_lat)

    regions = tuple(Region(id=rid, name=name, rings=rings) for rid, name, rings in raw)
    crs_note = str(doc.get("crs_note", "lonlat equirectangular" if use_lonlat else "planar"))
    return Atlas(id=atlas_id, regions=regions, outline=outline, crs_note=crs_note)


# ── projection into panel coordinates ───────────────────────────────────────


def _perpendicular_distance(point, start, end) -> float:
    (px, py), (ax, ay), (bx, by) = point, start, end
    dx, dy = bx - ax, by - ay
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        return math.hypot(px - ax, py - ay)
    return abs(dx * (ay - py) - dy * (ax - px)) / norm


def simplify_ring(ring: Ring, tolerance: float) -> Ring:
    """Douglas-Peucker vertex reduction on an open ring (closure implicit)."""
    if tolerance <= 0.0 or len(ring) <= 4:
        return ring

    def dp(points):
        if len(points) < 3:
            return list(points)
        worst, worst_d = 0, -1.0
        for i in range(1, len(points) - 1):
            d = _perpendicular_distance(points[i], points[0], points[-1])
            if d > worst_d:
                worst, worst_d = i, d
        if worst_d <= tolerance:
            return [points[0], points[-1]]
        left = dp(points[: worst + 1])
        right = dp(points[worst:])
        return left[:-1] + right

    mid = len(ring) // 2
    first = dp(ring[: mid + 1])
    second = dp(ring[mid:] + ring[:1])
    out = first[:-1] + second[:-1]
    if len(out) < 3:
        return ring
    return tuple(out)


def project_atlas(
    atlas: Atlas,
    width: float,
    height: float,
    margin: float = 2.0,
    simplify_tolerance: float = 0.3,
) -> ProjectedAtlas:
    """Fit the atlas bbox into a width x height panel, preserving aspect.

    ``simplify_tolerance`` is in output units, so the vertex budget tracks
    the target panel pixel size.  Geometry is computed once per figure and
    shared by every panel.
    """
    if width <= 2 * margin or height <= 2 * margin:
        raise AtlasError(f"panel {width}x{height} too small for margin {margin}")
    x0, y0, x1, y1 = atlas.bbox()
    span_x = x1 - x0
    span_y = y1 - y0
    if span_x <= 0.0 or span_y <= 0.0:
        raise AtlasError("atlas bbox is degenerate")
    scale = min((width - 2 * margin) / span_x, (height - 2 * margin) / span_y)
    offset_x = (width - span_x * scale) / 2.0
    offset_y = (height - span_y * scale) / 2.0

    def project(ring: Ring) -> Ring:
        return tuple(((x - x0) * scale + offset_x, (y - y0) * scale + offset_y) for x, y in ring)

    def reduce(rings: tuple[Ring, ...]) -> tuple[Ring, ...]:
        return tuple(simplify_ring(project(ring), simplify_tolerance) for ring in rings)

    paths = {region.id: reduce(region.rings) for region in atlas.regions}
    return ProjectedAtlas(
        width=width,
        height=height,
        region_paths=paths,
        outline_paths=reduce(atlas.outline),
    )


# ── per-group styling ───────────────────────────────────────────────────────


def build_panel_maps(
    atlas_ids: tuple[str, ...],
    grouping: PerceptualGrouping,
    assignment: ColorAssignment,
    shading: str = "current_group",
    prior_shade: str = PRIOR_SHADE,
) -> list[PanelMap]:
    """One PanelMap per perceptual group.

    current_group: members colored, everyone else neutral.  cumulative:
    members colored, regions from earlier panels light-shaded, later ones
    neutral.  Regions outside the grouping stay neutral in every panel.
    """
    if shading not in ("current_group", "cumulative"):
        raise AtlasError(f"unknown shading mode {shading}")
    neutral = assignment.palette.neutral
    panels = []
    seen: set[str] = set()
    for index, group in enumerate(grouping.groups):
        members = set(group)
        styles: dict[str, str] = {}
        fills: dict[str, str] = {}
        for rid in atlas_ids:
            if rid in members:
                styles[rid] = "highlight"
                fills[rid] = assignment.fill[rid]
            elif shading == "cumulative" and rid in seen:
                styles[rid] = "prior"
                fills[rid] = prior_shade
            else:
                styles[rid] = "neutral"
                fills[rid] = neutral
        panels.append(PanelMap(group_index=index, styles=styles, fills=fills))
        seen.update(members)
    return panels
