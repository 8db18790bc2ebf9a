"""Build the bundled boundary files from TopoJSON topology documents.

Decodes quantized delta-encoded arcs, stitches them into polygon rings,
lightly simplifies, enforces a minimum visual size for tiny regions, and
writes plain feature collections (planar coordinates, y down) the package
loads at runtime.  Outputs are committed; rerunning must reproduce them
byte for byte.

Usage: python3 tools/build_atlases.py <topojson dir> <output dir>
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

STATE_POSTAL = {
    "01": "AL", "02": "AK", "04": "AZ", "05": "AR", "06": "CA", "08": "CO",
    "09": "CT", "10": "DE", "11": "DC", "12": "FL", "13": "GA", "15": "HI",
    "16": "ID", "17": "IL", "18": "IN", "19": "IA", "20": "KS", "21": "KY",
    "22": "LA", "23": "ME", "24": "MD", "25": "MA", "26": "MI", "27": "MN",
    "28": "MS", "29": "MO", "30": "MT", "31": "NE", "32": "NV", "33": "NH",
    "34": "NJ", "35": "NM", "36": "NY", "37": "NC", "38": "ND", "39": "OH",
    "40": "OK", "41": "OR", "42": "PA", "44": "RI", "45": "SC", "46": "SD",
    "47": "TN", "48": "TX", "49": "UT", "50": "VT", "51": "VA", "53": "WA",
    "54": "WV", "55": "WI", "56": "WY",
}

SIMPLIFY_TOLERANCE = 0.4   # viewport units, ~1015 across
MIN_REGION_EXTENT = 7.0    # tiny regions scale up to stay visible in panels


def decode_arcs(topology):
    sx, sy = topology["transform"]["scale"]
    tx, ty = topology["transform"]["translate"]
    arcs = []
    for arc in topology["arcs"]:
        x = y = 0
        points = []
        for dx, dy in arc:
            x += dx
            y += dy
            points.append((x * sx + tx, y * sy + ty))
        arcs.append(points)
    return arcs


def stitch_ring(arc_indexes, arcs):
    ring = []
    for index in arc_indexes:
        points = arcs[index] if index >= 0 else list(reversed(arcs[~index]))
        if ring:
            points = points[1:]  # junction point already present
        ring.extend(points)
    return ring


def geometry_rings(geometry, arcs):
    """Rings of a Polygon/MultiPolygon as a list of polygons (ring lists)."""
    if geometry["type"] == "Polygon":
        poly_arcs = [geometry["arcs"]]
    elif geometry["type"] == "MultiPolygon":
        poly_arcs = geometry["arcs"]
    else:
        raise ValueError(f"unsupported geometry type {geometry['type']}")
    polygons = []
    for rings in poly_arcs:
        polygons.append([stitch_ring(ring, arcs) for ring in rings])
    return polygons


def perpendicular_distance(point, start, end):
    (px, py), (ax, ay), (bx, by) = point, start, end
    dx, dy = bx - ax, by - ay
    norm = (dx * dx + dy * dy) ** 0.5
    if norm == 0.0:
        return ((px - ax) ** 2 + (py - ay) ** 2) ** 0.5
    return abs(dx * (ay - py) - dy * (ax - px)) / norm


def simplify_ring(ring, tolerance):
    """Douglas-Peucker on a closed ring, endpoints pinned."""
    closed = ring[0] == ring[-1]
    points = ring[:-1] if closed else list(ring)
    if len(points) <= 4:
        return ring

    def dp(pts):
        if len(pts) < 3:
            return pts
        worst, worst_d = 0, -1.0
        for i in range(1, len(pts) - 1):
            d = perpendicular_distance(pts[i], pts[0], pts[-1])
            if d > worst_d:
                worst, worst_d = i, d
        if worst_d <= tolerance:
            return [pts[0], pts[-1]]
        left = dp(pts[: worst + 1])
        right = dp(pts[worst:])
        return left[:-1] + right

    # split at the most distant vertex pair proxy: index 0 and midpoint
    mid = len(points) // 2
    first = dp(points[: mid + 1])
    second = dp(points[mid:] + points[:1])
    out = first[:-1] + second[:-1]
    if len(out) < 3:
        out = points[:3]
    return out + [out[0]]


def ring_area(ring):
    total = 0.0
    for (x0, y0), (x1, y1) in zip(ring, ring[1:] + ring[:1]):
        total += x0 * y1 - x1 * y0
    return abs(total) / 2.0


def polygons_bbox(polygons):
    xs = [x for poly in polygons for ring in poly for x, _ in ring]
    ys = [y for poly in polygons for ring in poly for _, y in ring]
    return min(xs), min(ys), max(xs), max(ys)


def enforce_min_extent(polygons, min_extent):
    x0, y0, x1, y1 = polygons_bbox(polygons)
    extent = max(x1 - x0, y1 - y0)
    if extent >= min_extent or extent == 0.0:
        return polygons
    factor = min_extent / extent
    cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    return [
        [[(cx + (x - cx) * factor, cy + (y - cy) * factor) for x, y in ring] for ring in poly]
        for poly in polygons
    ]


def round_polygons(polygons):
    return [[[(round(x, 2), round(y, 2)) for x, y in ring] for ring in poly] for poly in polygons]


def to_geometry(polygons):
    coords = [[[list(pt) for pt in ring] for ring in poly] for poly in polygons]
    if len(coords) == 1:
        return {"type": "Polygon", "coordinates": coords[0]}
    return {"type": "MultiPolygon", "coordinates": coords}


def drop_degenerate(polygons):
    """Remove rings with fewer than 3 distinct vertices (slivers, dot islands)."""
    kept = []
    for poly in polygons:
        rings = [ring for ring in poly if len({(x, y) for x, y in ring}) >= 3]
        if rings:
            kept.append(rings)
    if not kept:
        raise ValueError("region lost all geometry")
    return kept


def build_feature(region_id, name, polygons, min_extent):
    polygons = drop_degenerate(polygons)
    polygons = [[simplify_ring(ring, SIMPLIFY_TOLERANCE) for ring in poly] for poly in polygons]
    polygons = enforce_min_extent(polygons, min_extent)
    polygons = round_polygons(polygons)
    return {
        "type": "Feature",
        "properties": {"id": region_id, "name": name},
        "geometry": to_geometry(polygons),
    }


def outline_coordinates(polygons):
    polygons = drop_degenerate(polygons)
    polygons = [[simplify_ring(ring, SIMPLIFY_TOLERANCE) for ring in poly] for poly in polygons]
    return to_geometry(round_polygons(polygons))


def feature_area(feature):
    geometry = feature["geometry"]
    polys = [geometry["coordinates"]] if geometry["type"] == "Polygon" else geometry["coordinates"]
    return sum(ring_area([tuple(p) for p in poly[0]]) for poly in polys)


def build_states(source_dir: Path):
    topology = json.loads((source_dir / "states-albers-10m.json").read_text())
    arcs = decode_arcs(topology)
    features = []
    for geometry in topology["objects"]["states"]["geometries"]:
        fips = str(geometry["id"])
        postal = STATE_POSTAL[fips]
        polygons = geometry_rings(geometry, arcs)
        features.append(build_feature(postal, geometry["properties"]["name"], polygons, MIN_REGION_EXTENT))
    features.sort(key=feature_area, reverse=True)  # big states paint first
    nation = topology["objects"]["nation"]["geometries"][0]
    return {
        "type": "FeatureCollection",
        "name": "us-states-dc",
        "crs_note": "planar composite layout, y down; Alaska and Hawaii drawn as insets; "
        "small regions enlarged for visibility (stylized, not geodetic)",
        "outline": outline_coordinates(geometry_rings(nation, arcs)),
        "features": features,
    }


def build_ny_counties(source_dir: Path):
    topology = json.loads((source_dir / "counties-albers-10m.json").read_text())
    arcs = decode_arcs(topology)
    features = []
    for geometry in topology["objects"]["counties"]["geometries"]:
        fips = str(geometry["id"])
        if not fips.startswith("36"):
            continue
        polygons = geometry_rings(geometry, arcs)
        features.append(build_feature(fips, geometry["properties"]["name"], polygons, 0.0))
    features.sort(key=feature_area, reverse=True)
    state = next(
        g for g in topology["objects"]["states"]["geometries"] if str(g["id"]) == "36"
    )
    return {
        "type": "FeatureCollection",
        "name": "ny-counties",
        "crs_note": "planar composite layout, y down, national viewport coordinates",
        "outline": outline_coordinates(geometry_rings(state, arcs)),
        "features": features,
    }


def main():
    source_dir = Path(sys.argv[1])
    out_dir = Path(sys.argv[2])
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, doc in (
        ("us-states-dc.json", build_states(source_dir)),
        ("ny-counties.json", build_ny_counties(source_dir)),
    ):
        path = out_dir / name
        path.write_text(json.dumps(doc, separators=(",", ":")) + "\n")
        print(f"{path}: {len(doc['features'])} regions, {path.stat().st_size} bytes")


if __name__ == "__main__":
    main()
