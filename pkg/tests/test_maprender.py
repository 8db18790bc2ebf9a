"""Boundary loading, projection, and panel styling."""

from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

import micromap
from micromap.grouping import DEFAULT_PALETTE, assign_colors, group_regions
from micromap.maprender import (
    PRIOR_SHADE,
    AtlasError,
    build_panel_maps,
    load_atlas,
    project_atlas,
    simplify_ring,
)
from micromap.model import SpecError

ATLAS_DIR = Path(micromap.__file__).parent / "data" / "atlases"

SQUARE_FC = {
    "type": "FeatureCollection",
    "features": [
        {
            "type": "Feature",
            "properties": {"id": "a", "name": "Alpha"},
            "geometry": {
                "type": "Polygon",
                "coordinates": [[[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0], [0.0, 0.0]]],
            },
        },
        {
            "type": "Feature",
            "properties": {"id": "b", "name": "Beta"},
            "geometry": {
                "type": "Polygon",
                "coordinates": [[[5.0, 0.0], [9.0, 0.0], [9.0, 4.0], [5.0, 4.0], [5.0, 0.0]]],
            },
        },
    ],
}


class TestLoadAtlas:
    def test_bundled_states_atlas_has_51_regions(self):
        atlas = load_atlas(ATLAS_DIR / "us-states-dc.json")
        assert len(atlas.regions) == 51
        ids = set(atlas.ids())
        assert "DC" in ids and "AK" in ids and "HI" in ids

    def test_bundled_ny_atlas_has_62_regions(self):
        atlas = load_atlas(ATLAS_DIR / "ny-counties.json")
        assert len(atlas.regions) == 62
        assert "36041" in atlas.ids()
        assert atlas.region("36041").name == "Hamilton"

    def test_bundled_atlases_carry_outlines(self):
        atlas = load_atlas(ATLAS_DIR / "us-states-dc.json")
        assert atlas.outline

    def test_duplicate_id_names_the_id(self):
        doc = json.loads(json.dumps(SQUARE_FC))
        doc["features"][1]["properties"]["id"] = "a"
        with pytest.raises(SpecError, match="duplicate region id a"):
            load_atlas(doc)

    def test_missing_id_property_is_an_error(self):
        doc = json.loads(json.dumps(SQUARE_FC))
        del doc["features"][0]["properties"]["id"]
        with pytest.raises(AtlasError, match="missing id property"):
            load_atlas(doc)

    def test_custom_id_property(self):
        doc = json.loads(json.dumps(SQUARE_FC))
        for feature in doc["features"]:
            feature["properties"]["fips"] = feature["properties"].pop("id")
        atlas = load_atlas(doc, id_property="fips")
        assert atlas.ids() == ("a", "b")

    def test_unclosed_ring_is_an_error(self):
        doc = json.loads(json.dumps(SQUARE_FC))
        doc["features"][0]["geometry"]["coordinates"][0].pop()
        with pytest.raises(AtlasError, match="unclosed ring"):
            load_atlas(doc)

    def test_fewer_than_two_regions_is_an_error(self):
        doc = json.loads(json.dumps(SQUARE_FC))
        doc["features"] = doc["features"][:1]
        with pytest.raises(SpecError):
            load_atlas(doc)

    def test_planar_coordinates_pass_through(self):
        atlas = load_atlas(SQUARE_FC, projection="planar")
        assert atlas.region("a").rings[0][1] == (4.0, 0.0)

    def test_lonlat_applies_cosine_scaling_and_flips_y(self):
        doc = json.loads(json.dumps(SQUARE_FC))
        # coordinates already fit lon/lat bounds, so auto picks lonlat
        atlas = load_atlas(doc)
        cos_lat = math.cos(math.radians(2.0))  # mid latitude of [0, 4]
        ring = atlas.region("a").rings[0]
        assert ring[1] == pytest.approx((4.0 * cos_lat, 0.0))
        assert ring[2] == pytest.approx((4.0 * cos_lat, -4.0))

    def test_auto_keeps_large_coordinates_planar(self):
        doc = json.loads(json.dumps(SQUARE_FC))
        for feature in doc["features"]:
            ring = feature["geometry"]["coordinates"][0]
            feature["geometry"]["coordinates"][0] = [[x * 100.0, y * 100.0] for x, y in ring]
        atlas = load_atlas(doc)
        assert atlas.region("a").rings[0][1] == (400.0, 0.0)

    def test_rejects_non_feature_collection(self):
        with pytest.raises(AtlasError):
            load_atlas({"type": "Topology"})

    def test_missing_file_is_a_load_error(self):
        with pytest.raises(AtlasError, match="not found"):
            load_atlas("/nonexistent/boundaries.json")


class TestSimplifyRing:
    def test_collinear_vertices_removed(self):
        ring = (
            (0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (4.0, 2.0),
            (4.0, 4.0), (2.0, 4.0), (0.0, 4.0), (0.0, 2.0),
        )
        out = simplify_ring(ring, 0.1)
        assert set(out) == {(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)}

    def test_zero_tolerance_is_identity(self):
        ring = ((0.0, 0.0), (2.0, 0.1), (4.0, 0.0), (2.0, 4.0))
        assert simplify_ring(ring, 0.0) == ring

    def test_never_collapses_below_triangle(self):
        ring = ((0.0, 0.0), (1.0, 0.01), (2.0, 0.0), (1.0, -0.01))
        out = simplify_ring(ring, 10.0)
        assert len(out) >= 3

    def test_deterministic(self):
        atlas = load_atlas(ATLAS_DIR / "us-states-dc.json")
        ring = atlas.region("TX").rings[0]
        assert simplify_ring(ring, 0.5) == simplify_ring(ring, 0.5)


class TestProjectAtlas:
    def test_fits_inside_panel_with_margin(self):
        atlas = load_atlas(ATLAS_DIR / "us-states-dc.json")
        projected = project_atlas(atlas, 120.0, 80.0, margin=2.0)
        xs = [x for rings in projected.region_paths.values() for ring in rings for x, _ in ring]
        ys = [y for rings in projected.region_paths.values() for ring in rings for _, y in ring]
        assert min(xs) >= 2.0 - 1e-9 and max(xs) <= 118.0 + 1e-9
        assert min(ys) >= 2.0 - 1e-9 and max(ys) <= 78.0 + 1e-9

    def test_aspect_ratio_preserved(self):
        atlas = load_atlas(SQUARE_FC, projection="planar")
        projected = project_atlas(atlas, 100.0, 100.0, margin=0.0, simplify_tolerance=0.0)
        ring = projected.region_paths["a"][0]
        width = max(x for x, _ in ring) - min(x for x, _ in ring)
        height = max(y for _, y in ring) - min(y for _, y in ring)
        assert width == pytest.approx(height)  # squares stay square

    def test_simplification_reduces_vertices(self):
        atlas = load_atlas(ATLAS_DIR / "us-states-dc.json")
        rough = project_atlas(atlas, 90.0, 60.0, simplify_tolerance=0.6)
        fine = project_atlas(atlas, 90.0, 60.0, simplify_tolerance=0.0)
        count = lambda p: sum(len(r) for rings in p.region_paths.values() for r in rings)
        assert count(rough) < count(fine)
        assert count(rough) >= 3 * 51

    def test_projection_deterministic(self):
        atlas = load_atlas(ATLAS_DIR / "ny-counties.json")
        assert project_atlas(atlas, 90.0, 60.0) == project_atlas(atlas, 90.0, 60.0)

    def test_too_small_panel_is_an_error(self):
        atlas = load_atlas(SQUARE_FC, projection="planar")
        with pytest.raises(AtlasError):
            project_atlas(atlas, 3.0, 3.0, margin=2.0)


class TestBuildPanelMaps:
    def _setup(self, n=51):
        ids = tuple(f"r{i:03d}" for i in range(n))
        grouping = group_regions(ids)
        assignment = assign_colors(grouping)
        return ids, grouping, assignment

    def test_51_regions_give_11_panels(self):
        ids, grouping, assignment = self._setup(51)
        panels = build_panel_maps(ids, grouping, assignment)
        assert len(panels) == 11

    def test_first_panel_has_exactly_five_colored_regions(self):
        ids, grouping, assignment = self._setup(51)
        for mode in ("current_group", "cumulative"):
            panels = build_panel_maps(ids, grouping, assignment, shading=mode)
            highlighted = [rid for rid, s in panels[0].styles.items() if s == "highlight"]
            assert len(highlighted) == 5
            assert all(s == "neutral" for rid, s in panels[0].styles.items() if rid not in highlighted)

    def test_each_region_highlighted_exactly_once(self):
        ids, grouping, assignment = self._setup(51)
        panels = build_panel_maps(ids, grouping, assignment)
        counts = {rid: 0 for rid in ids}
        for panel in panels:
            for rid, style in panel.styles.items():
                if style == "highlight":
                    counts[rid] += 1
        assert all(count == 1 for count in counts.values())

    def test_last_cumulative_panel_has_no_neutral_grouped_region(self):
        ids, grouping, assignment = self._setup(51)
        panels = build_panel_maps(ids, grouping, assignment, shading="cumulative")
        last = panels[-1]
        assert all(last.styles[rid] != "neutral" for rid in ids)

    def test_modes_agree_on_highlights(self):
        ids, grouping, assignment = self._setup(62)
        current = build_panel_maps(ids, grouping, assignment, shading="current_group")
        cumulative = build_panel_maps(ids, grouping, assignment, shading="cumulative")
        for a, b in zip(current, cumulative):
            ha = {rid for rid, s in a.styles.items() if s == "highlight"}
            hb = {rid for rid, s in b.styles.items() if s == "highlight"}
            assert ha == hb
            # and the non-highlight difference is only prior vs neutral
            for rid in ids:
                if a.styles[rid] != b.styles[rid]:
                    assert a.styles[rid] == "neutral" and b.styles[rid] == "prior"

    def test_prior_regions_use_light_shade(self):
        ids, grouping, assignment = self._setup(51)
        panels = build_panel_maps(ids, grouping, assignment, shading="cumulative")
        second = panels[1]
        prior = [rid for rid, s in second.styles.items() if s == "prior"]
        assert prior and all(second.fills[rid] == PRIOR_SHADE for rid in prior)

    def test_median_panel_uses_accent_color(self):
        ids, grouping, assignment = self._setup(51)
        panels = build_panel_maps(ids, grouping, assignment)
        median_panel = panels[grouping.median_group_index]
        (median_region,) = grouping.groups[grouping.median_group_index]
        assert median_panel.styles[median_region] == "highlight"
        assert median_panel.fills[median_region] == DEFAULT_PALETTE.median_accent

    def test_atlas_regions_outside_grouping_stay_neutral(self):
        ids = tuple(f"r{i:03d}" for i in range(20))
        grouping = group_regions(ids[:15])
        assignment = assign_colors(grouping)
        panels = build_panel_maps(ids, grouping, assignment, shading="cumulative")
        for panel in panels:
            for rid in ids[15:]:
                assert panel.styles[rid] == "neutral"

    def test_unknown_shading_mode_rejected(self):
        ids, grouping, assignment = self._setup(10)
        with pytest.raises(AtlasError):
            build_panel_maps(ids, grouping, assignment, shading="gradient")
