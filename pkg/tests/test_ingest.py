"""Adapter-driven CSV loading, canonical round-trips, and the registry."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from micromap.ingest import (
    AdapterConfig,
    ColumnMapping,
    IngestError,
    LongTimeSpec,
    WideTimeSpec,
    adapter_from_json,
    adapter_to_json,
    bundled_data_root,
    dataset_from_csv,
    dataset_to_csv,
    default_data_root,
    find_atlas,
    list_atlases,
    load_csv_dataset,
    load_dataset,
    load_manifest,
    registry_list,
)
from micromap.model import DataTable


def simple_adapter(**overrides):
    fields = dict(
        key_column="st",
        mappings=(ColumnMapping("H_MEAN", "wage", "$/hr"),),
    )
    fields.update(overrides)
    return AdapterConfig(**fields)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestAdapterConfig:
    def test_key_column_required(self):
        with pytest.raises(IngestError, match="key column"):
            simple_adapter(key_column="")

    def test_mappings_required(self):
        with pytest.raises(IngestError, match="mapping"):
            simple_adapter(mappings=())

    def test_wide_and_long_exclusive(self):
        with pytest.raises(IngestError, match="both wide and long"):
            simple_adapter(
                wide_time=(WideTimeSpec("g", r"g_(\d+)"),),
                long_time=LongTimeSpec("g", "quarter", "value"),
            )

    def test_duplicate_canonical_names_rejected(self):
        with pytest.raises(IngestError, match="duplicate canonical"):
            simple_adapter(
                mappings=(ColumnMapping("A", "wage"), ColumnMapping("B", "wage")),
            )

    def test_duplicate_wide_groups_rejected(self):
        with pytest.raises(IngestError, match="repeat a group"):
            simple_adapter(
                wide_time=(WideTimeSpec("g", r"a_(\d+)"), WideTimeSpec("g", r"b_(\d+)")),
            )

    def test_json_round_trip(self):
        adapter = simple_adapter(
            missing=("", "(D)"),
            wide_time=(WideTimeSpec("emp", r"emp_(\d{4})_(\d)", r"\1 Q\2"),),
        )
        assert adapter_from_json(adapter_to_json(adapter)) == adapter

    def test_json_round_trip_long(self):
        adapter = simple_adapter(long_time=LongTimeSpec("w", "quarter", "wage"))
        assert adapter_from_json(adapter_to_json(adapter)) == adapter

    def test_malformed_json_rejected(self):
        with pytest.raises(IngestError):
            adapter_from_json(["not", "an", "object"])
        with pytest.raises(IngestError):
            adapter_from_json({"mappings": [{"source": "a", "name": "b"}]})


class TestLoadWide:
    def test_renames_and_keys(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN,extra\nAL,53.19,9\nAK,70.01,9\n")
        table = load_csv_dataset(path, simple_adapter())
        assert table.keys == ("AL", "AK")
        assert table.key_column == "st"
        assert table.column_names() == ("wage",)
        assert table.columns["wage"][0] == pytest.approx(53.19)

    def test_unmapped_columns_ignored(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN,NOISE\nAL,1,zzz\n")
        table = load_csv_dataset(path, simple_adapter())
        assert "NOISE" not in table.column_names()

    def test_thousands_separators(self, tmp_path):
        path = write(tmp_path, 'st,H_MEAN\nAL,"1,234,567.5"\n')
        table = load_csv_dataset(path, simple_adapter())
        assert table.columns["wage"][0] == pytest.approx(1234567.5)

    def test_configured_missing_markers(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN\nAL,**\nAK,\nAZ,41\n")
        table = load_csv_dataset(path, simple_adapter(missing=("", "**")))
        wage = table.columns["wage"]
        assert math.isnan(wage[0]) and math.isnan(wage[1])
        assert wage[2] == 41.0

    def test_unconfigured_marker_is_an_error(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN\nAL,**\n")
        with pytest.raises(IngestError, match=r"row 2, column H_MEAN: cannot parse '\*\*'"):
            load_csv_dataset(path, simple_adapter())

    def test_duplicate_keys_rejected_with_row(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN\nAL,1\nAL,2\n")
        with pytest.raises(IngestError, match="row 3: duplicate key 'AL'"):
            load_csv_dataset(path, simple_adapter())

    def test_missing_mapped_column(self, tmp_path):
        path = write(tmp_path, "st,OTHER\nAL,1\n")
        with pytest.raises(IngestError, match="missing mapped column H_MEAN"):
            load_csv_dataset(path, simple_adapter())

    def test_missing_key_column(self, tmp_path):
        path = write(tmp_path, "state,H_MEAN\nAL,1\n")
        with pytest.raises(IngestError, match="missing key column st"):
            load_csv_dataset(path, simple_adapter())

    def test_empty_key_rejected(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN\n,1\n")
        with pytest.raises(IngestError, match="row 2: empty key"):
            load_csv_dataset(path, simple_adapter())

    def test_short_row_counts_as_missing(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN\nAL\n")
        table = load_csv_dataset(path, simple_adapter())
        assert math.isnan(table.columns["wage"][0])

    def test_missing_header_row(self, tmp_path):
        path = write(tmp_path, "")
        with pytest.raises(IngestError, match="missing header"):
            load_csv_dataset(path, simple_adapter())


class TestWideTime:
    def test_pattern_gathers_labeled_group(self, tmp_path):
        path = write(
            tmp_path,
            "st,H_MEAN,emp_2020_1,emp_2020_2,emp_2020_3\nAL,1,10,11,12\n",
        )
        adapter = simple_adapter(
            wide_time=(WideTimeSpec("emp", r"emp_(\d{4})_(\d)", r"\1 Q\2"),)
        )
        table = load_csv_dataset(path, adapter)
        assert table.time_groups["emp"] == (
            ("2020 Q1", "emp@2020 Q1"),
            ("2020 Q2", "emp@2020 Q2"),
            ("2020 Q3", "emp@2020 Q3"),
        )
        assert list(table.columns["emp@2020 Q2"]) == [11.0]

    def test_two_groups_from_two_patterns(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN,a_1,a_2,b_1,b_2\nAL,1,1,2,3,4\n")
        adapter = simple_adapter(
            wide_time=(WideTimeSpec("a", r"a_(\d)"), WideTimeSpec("b", r"b_(\d)"))
        )
        table = load_csv_dataset(path, adapter)
        assert set(table.time_groups) == {"a", "b"}
        assert [label for label, _ in table.time_groups["b"]] == ["1", "2"]

    def test_no_match_is_an_error(self, tmp_path):
        path = write(tmp_path, "st,H_MEAN\nAL,1\n")
        adapter = simple_adapter(wide_time=(WideTimeSpec("emp", r"emp_(\d+)"),))
        with pytest.raises(IngestError, match="no columns match"):
            load_csv_dataset(path, adapter)

    def test_mapped_columns_not_claimed_by_pattern(self, tmp_path):
        # H_MEAN maps statically even though the pattern would match it
        path = write(tmp_path, "st,H_MEAN,H_2020\nAL,5,6\n")
        adapter = simple_adapter(wide_time=(WideTimeSpec("h", r"H_(\w+)"),))
        table = load_csv_dataset(path, adapter)
        assert list(table.columns["wage"]) == [5.0]
        assert [label for label, _ in table.time_groups["h"]] == ["2020"]


class TestLoadLong:
    def long_adapter(self, **overrides):
        fields = dict(
            key_column="st",
            mappings=(ColumnMapping("estabs", "estabs", "count"),),
            long_time=LongTimeSpec("wage", "quarter", "avg_wage"),
        )
        fields.update(overrides)
        return AdapterConfig(**fields)

    def test_pivot_orders_labels_by_appearance(self, tmp_path):
        path = write(
            tmp_path,
            "st,quarter,avg_wage,estabs\n"
            "AL,2020 Q1,900,120\n"
            "AL,2020 Q2,905,120\n"
            "AK,2020 Q1,1100,40\n"
            "AK,2020 Q2,1105,40\n",
        )
        table = load_csv_dataset(path, self.long_adapter())
        assert table.keys == ("AL", "AK")
        assert [label for label, _ in table.time_groups["wage"]] == ["2020 Q1", "2020 Q2"]
        assert list(table.columns["wage@2020 Q2"]) == [905.0, 1105.0]

    def test_static_column_taken_from_first_row(self, tmp_path):
        path = write(
            tmp_path,
            "st,quarter,avg_wage,estabs\nAL,Q1,1,77\nAL,Q2,2,999\n",
        )
        table = load_csv_dataset(path, self.long_adapter())
        assert list(table.columns["estabs"]) == [77.0]

    def test_absent_quarter_becomes_nan(self, tmp_path):
        path = write(
            tmp_path,
            "st,quarter,avg_wage,estabs\nAL,Q1,1,5\nAK,Q1,2,5\nAK,Q2,3,5\n",
        )
        table = load_csv_dataset(path, self.long_adapter())
        assert math.isnan(table.columns["wage@Q2"][0])
        assert table.columns["wage@Q2"][1] == 3.0

    def test_duplicate_period_rejected(self, tmp_path):
        path = write(
            tmp_path,
            "st,quarter,avg_wage,estabs\nAL,Q1,1,5\nAL,Q1,2,5\n",
        )
        with pytest.raises(IngestError, match="row 3: duplicate key 'AL' at Q1"):
            load_csv_dataset(path, self.long_adapter())

    def test_empty_time_label_rejected(self, tmp_path):
        path = write(tmp_path, "st,quarter,avg_wage,estabs\nAL,,1,5\n")
        with pytest.raises(IngestError, match="row 2: empty time label"):
            load_csv_dataset(path, self.long_adapter())


class TestCanonicalCsv:
    def table(self):
        return DataTable(
            key_column="st",
            keys=("AL", "AK"),
            columns={
                "wage": np.array([53.19, math.nan]),
                "emp@Q1": np.array([10.0, 20.0]),
                "emp@Q2": np.array([11.0, 21.0]),
            },
            time_groups={"emp": (("Q1", "emp@Q1"), ("Q2", "emp@Q2"))},
        )

    def test_round_trip_preserves_everything(self):
        table = self.table()
        text = dataset_to_csv(table)
        back = dataset_from_csv(text)
        assert back.key_column == table.key_column
        assert back.keys == table.keys
        assert back.column_names() == table.column_names()
        assert back.time_groups == dict(table.time_groups)
        for name in table.column_names():
            np.testing.assert_allclose(
                back.columns[name], table.columns[name], equal_nan=True
            )

    def test_missing_serializes_as_empty_cell(self):
        text = dataset_to_csv(self.table())
        assert "AK," in text.splitlines()[2] + ","

    def test_floats_round_trip_exactly(self):
        table = DataTable(
            key_column="k",
            keys=("a",),
            columns={"v": np.array([0.1 + 0.2])},
        )
        back = dataset_from_csv(dataset_to_csv(table))
        assert back.columns["v"][0] == table.columns["v"][0]

    def test_duplicate_key_rejected(self):
        with pytest.raises(IngestError, match="duplicate key"):
            dataset_from_csv("st,v\nAL,1\nAL,2\n")


def write_manifest(directory: Path, dataset_id="demo", files=("data.csv",), **extra):
    directory.mkdir(parents=True, exist_ok=True)
    for name in files:
        (directory / name).write_text("st,H_MEAN\nAL,1\nAK,2\n", encoding="utf-8")
    doc = {
        "id": dataset_id,
        "files": list(files),
        "atlas": "us-states-dc",
        "provenance": "synthetic",
        "adapter": {
            "key_column": "st",
            "mappings": [{"source": "H_MEAN", "name": "wage", "unit": "$/hr"}],
        },
    }
    doc.update(extra)
    (directory / "manifest.json").write_text(json.dumps(doc), encoding="utf-8")


class TestRegistry:
    def test_empty_dir_empty_list(self, tmp_path):
        assert registry_list(tmp_path) == []

    def test_missing_dir_empty_list(self, tmp_path):
        assert registry_list(tmp_path / "nope") == []

    def test_entries_sorted_by_id(self, tmp_path):
        write_manifest(tmp_path / "bdir", dataset_id="beta")
        write_manifest(tmp_path / "adir", dataset_id="alpha")
        listing = registry_list(tmp_path)
        assert [m.id for m in listing] == ["alpha", "beta"]
        assert all(not m.error for m in listing)

    def test_malformed_manifest_is_error_entry(self, tmp_path):
        write_manifest(tmp_path / "good", dataset_id="good")
        (tmp_path / "bad").mkdir()
        (tmp_path / "bad" / "manifest.json").write_text("{not json", encoding="utf-8")
        listing = registry_list(tmp_path)
        by_id = {m.id: m for m in listing}
        assert "invalid JSON" in by_id["bad"].error
        assert not by_id["good"].error

    def test_missing_referenced_file_is_error(self, tmp_path):
        write_manifest(tmp_path / "d", dataset_id="d")
        (tmp_path / "d" / "data.csv").unlink()
        (entry,) = registry_list(tmp_path)
        assert "missing file data.csv" in entry.error

    def test_duplicate_id_flags_second(self, tmp_path):
        write_manifest(tmp_path / "a", dataset_id="same")
        write_manifest(tmp_path / "b", dataset_id="same")
        listing = registry_list(tmp_path)
        assert [m.error == "" for m in listing] == [True, False]
        assert "duplicate dataset id" in listing[1].error

    def test_load_dataset_round_trip(self, tmp_path):
        write_manifest(tmp_path / "demo")
        (manifest,) = registry_list(tmp_path)
        table = load_dataset(manifest)
        assert table.keys == ("AL", "AK")

    def test_load_dataset_refuses_error_entry(self, tmp_path):
        (tmp_path / "bad").mkdir()
        (tmp_path / "bad" / "manifest.json").write_text("[]", encoding="utf-8")
        (entry,) = registry_list(tmp_path)
        with pytest.raises(IngestError):
            load_dataset(entry)

    def test_multi_file_dataset_concatenates_rows(self, tmp_path):
        d = tmp_path / "multi"
        d.mkdir()
        (d / "one.csv").write_text("st,H_MEAN\nAL,1\n", encoding="utf-8")
        (d / "two.csv").write_text("st,H_MEAN\nAK,2\n", encoding="utf-8")
        doc = {
            "id": "multi",
            "files": ["one.csv", "two.csv"],
            "atlas": "us-states-dc",
            "adapter": {
                "key_column": "st",
                "mappings": [{"source": "H_MEAN", "name": "wage"}],
            },
        }
        (d / "manifest.json").write_text(json.dumps(doc), encoding="utf-8")
        table = load_dataset(load_manifest(d / "manifest.json"))
        assert table.keys == ("AL", "AK")

    def test_manifest_without_id_rejected(self, tmp_path):
        (tmp_path / "manifest.json").write_text('{"files": ["x.csv"]}', encoding="utf-8")
        with pytest.raises(IngestError, match="missing dataset id"):
            load_manifest(tmp_path / "manifest.json")


class TestDataRoots:
    def test_env_var_overrides_root(self, monkeypatch, tmp_path):
        monkeypatch.setenv("MICROMAP_DATA_ROOT", str(tmp_path))
        assert default_data_root() == tmp_path
        monkeypatch.delenv("MICROMAP_DATA_ROOT")
        assert default_data_root() == bundled_data_root()

    def test_bundled_atlases_listed(self):
        ids = [aid for aid, _ in list_atlases()]
        assert "us-states-dc" in ids and "ny-counties" in ids

    def test_user_atlas_appears(self, tmp_path):
        src = find_atlas("us-states-dc")
        target = tmp_path / "atlases"
        target.mkdir()
        (target / "custom.json").write_text(src.read_text(), encoding="utf-8")
        ids = [aid for aid, _ in list_atlases(tmp_path)]
        assert "custom" in ids
        assert find_atlas("custom", tmp_path) == target / "custom.json"

    def test_unknown_atlas_is_none(self):
        assert find_atlas("atlantis") is None


class TestBundledDatasets:
    def test_at_least_six_datasets(self):
        listing = registry_list(bundled_data_root())
        assert len(listing) >= 6
        assert all(not m.error for m in listing)
        assert [m.id for m in listing] == sorted(m.id for m in listing)

    def test_software_dev_extract_matches_published_rows(self):
        listing = {m.id: m for m in registry_list(bundled_data_root())}
        table = load_dataset(listing["oews-software-dev"])
        i = table.keys.index("AL")
        assert table.columns["lq"][i] == pytest.approx(0.76)
        assert table.columns["wage_mean"][i] == pytest.approx(53.19)
        assert table.columns["p10"][i] == pytest.approx(29.58)
        assert table.columns["p90"][i] == pytest.approx(81.29)
        j = table.keys.index("CA")
        assert table.columns["wage_mean"][j] == pytest.approx(83.55)
        assert table.columns["prse"][j] == pytest.approx(0.8)

    def test_long_quarterly_file_pivots_to_21_labels(self):
        listing = {m.id: m for m in registry_list(bundled_data_root())}
        table = load_dataset(listing["qcew-establishments"])
        labels = [label for label, _ in table.time_groups["wage"]]
        assert len(labels) == 21
        assert labels[0] == "2020 Q1"
        assert labels[-1] == "2025 Q1"

    def test_every_bundled_dataset_loads_and_round_trips(self):
        for manifest in registry_list(bundled_data_root()):
            table = load_dataset(manifest)
            assert len(table.keys) in (51, 62)
            back = dataset_from_csv(dataset_to_csv(table))
            assert back.keys == table.keys
            assert back.time_groups == dict(table.time_groups)

    def test_bundled_recipes_reference_bundled_datasets(self):
        figures = Path(__file__).parent.parent / "src" / "micromap" / "data" / "figures"
        listing = {m.id for m in registry_list(bundled_data_root())}
        recipes = sorted(figures.glob("*.json"))
        assert len(recipes) == 7
        for path in recipes:
            doc = json.loads(path.read_text(encoding="utf-8"))
            assert doc["dataset"] in listing
            assert find_atlas(doc["atlas"]) is not None
