"""CSV extract loading through adapter configs, plus a file-based registry.

Wage and employment extracts differ in header vocabulary and shape (wide
per-quarter columns vs long quarter rows), so each dataset carries an
:class:`AdapterConfig` describing how to key, rename, and pivot its CSV into
a :class:`~micromap.model.DataTable`.  The registry is plain files: a dataset
lives at ``<root>/<id>/manifest.json`` next to the CSVs it references.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .model import DataTable

__all__ = [
    "IngestError",
    "ColumnMapping",
    "WideTimeSpec",
    "LongTimeSpec",
    "AdapterConfig",
    "DatasetManifest",
    "adapter_from_json",
    "adapter_to_json",
    "manifest_to_json",
    "load_manifest",
    "load_csv_dataset",
    "load_dataset",
    "registry_list",
    "dataset_to_csv",
    "dataset_from_csv",
    "bundled_data_root",
    "default_data_root",
    "bundled_atlas_dir",
    "list_atlases",
    "find_atlas",
]


class IngestError(ValueError):
    """CSV extract or manifest violates the adapter contract."""


@dataclass(frozen=True)
class ColumnMapping:
    """Renames one source column to a canonical name; ``unit`` is a display note."""

    source: str
    name: str
    unit: str = ""


@dataclass(frozen=True)
class WideTimeSpec:
    """Gathers wide-format columns matching ``pattern`` into one time group.

    ``pattern`` is a regex matched against whole header names; ``label`` is a
    regex expansion template, so headers like ``emp_2020_1`` can become
    "2020 Q1" labels.  Matched columns keep their header order.
    """

    group: str
    pattern: str
    label: str = r"\1"


@dataclass(frozen=True)
class LongTimeSpec:
    """Pivots long-format rows (one per region and period) into a time group."""

    group: str
    time_column: str
    value_column: str


@dataclass(frozen=True)
class AdapterConfig:
    """How to read one extract: key column, renames, and an optional time spec.

    ``wide_time`` may name several groups (one pattern each); a column is
    claimed by the first pattern that matches it.
    """

    key_column: str
    mappings: tuple[ColumnMapping, ...]
    missing: tuple[str, ...] = ("",)
    wide_time: tuple[WideTimeSpec, ...] = ()
    long_time: LongTimeSpec | None = None

    def __post_init__(self) -> None:
        if not self.key_column:
            raise IngestError("adapter needs a key column name")
        if not self.mappings:
            raise IngestError("adapter needs at least one column mapping")
        if self.wide_time and self.long_time is not None:
            raise IngestError("adapter cannot have both wide and long time specs")
        seen: set[str] = set()
        for mapping in self.mappings:
            if mapping.name in seen:
                raise IngestError(f"duplicate canonical column {mapping.name}")
            seen.add(mapping.name)
        groups = [w.group for w in self.wide_time]
        if len(set(groups)) != len(groups):
            raise IngestError("wide time specs repeat a group name")


@dataclass(frozen=True)
class DatasetManifest:
    """Registry entry: id, source files, adapter, atlas id, provenance note.

    Listing never fails on a bad manifest; the entry comes back with ``error``
    set and the other fields best-effort.
    """

    id: str
    files: tuple[str, ...]
    atlas: str
    adapter: AdapterConfig | None
    provenance: str = ""
    directory: Path | None = None
    error: str = ""

    def file_paths(self) -> tuple[Path, ...]:
        base = self.directory if self.directory is not None else Path(".")
        return tuple(base / name for name in self.files)


def _parse_cell(text: str, missing: tuple[str, ...], row: int, column: str) -> float:
    cell = text.strip()
    if cell in missing:
        return math.nan
    try:
        # thousands separators are common in published extracts
        return float(cell.replace(",", ""))
    except ValueError:
        raise IngestError(f"row {row}, column {column}: cannot parse {cell!r}") from None


def _read_records(file: str | Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    path = Path(file)
    try:
        with path.open(newline="", encoding="utf-8-sig") as fh:
            records = list(csv.reader(fh))
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc.strerror or exc}") from None
    if not records or not records[0]:
        raise IngestError(f"{path.name}: missing header row")
    header = [name.strip() for name in records[0]]
    # row numbers count CSV records, header being row 1
    data = [(i + 2, row) for i, row in enumerate(records[1:]) if row]
    return header, data


def _cell(row: list[str], pos: int) -> str:
    return row[pos] if pos < len(row) else ""


def load_csv_dataset(file: str | Path, adapter: AdapterConfig) -> DataTable:
    """Parse one delimited extract into a region-keyed table.

    Raises :class:`IngestError` for duplicate keys, unparseable cells (with
    row and column), and mapped columns absent from the header.
    """
    header, data = _read_records(file)
    index: dict[str, int] = {}
    for pos, name in enumerate(header):
        index.setdefault(name, pos)

    def position(source: str) -> int:
        if source not in index:
            raise IngestError(f"missing mapped column {source}")
        return index[source]

    if adapter.key_column not in index:
        raise IngestError(f"missing key column {adapter.key_column}")
    key_pos = index[adapter.key_column]
    mapped = [(mapping, position(mapping.source)) for mapping in adapter.mappings]

    if adapter.long_time is not None:
        return _load_long(adapter, data, key_pos, mapped, position)
    return _load_wide(adapter, header, index, data, key_pos, mapped)


def _load_wide(adapter, header, index, data, key_pos, mapped) -> DataTable:
    # (time label, canonical name, header position) per group, header order
    gathered: dict[str, list[tuple[str, str, int]]] = {}
    taken = {m.source for m in adapter.mappings} | {adapter.key_column}
    for spec in adapter.wide_time:
        pattern = re.compile(spec.pattern)
        matched: list[tuple[str, str, int]] = []
        for pos, name in enumerate(header):
            if name in taken or index[name] != pos:
                continue
            hit = pattern.fullmatch(name)
            if hit is None:
                continue
            label = hit.expand(spec.label)
            matched.append((label, f"{spec.group}@{label}", pos))
            taken.add(name)
        if not matched:
            raise IngestError(f"no columns match time pattern {spec.pattern!r}")
        gathered[spec.group] = matched

    keys: list[str] = []
    seen: set[str] = set()
    static: dict[str, list[float]] = {m.name: [] for m, _ in mapped}
    series: dict[str, list[float]] = {
        cname: [] for matched in gathered.values() for _, cname, _ in matched
    }
    for rownum, row in data:
        key = _cell(row, key_pos).strip()
        if not key:
            raise IngestError(f"row {rownum}: empty key")
        if key in seen:
            raise IngestError(f"row {rownum}: duplicate key {key!r}")
        seen.add(key)
        keys.append(key)
        for mapping, pos in mapped:
            static[mapping.name].append(
                _parse_cell(_cell(row, pos), adapter.missing, rownum, mapping.source)
            )
        for matched in gathered.values():
            for _, cname, pos in matched:
                series[cname].append(
                    _parse_cell(_cell(row, pos), adapter.missing, rownum, header[pos])
                )

    columns = {name: np.asarray(vals, dtype=float) for name, vals in (static | series).items()}
    time_groups = {
        group: tuple((label, cname) for label, cname, _ in matched)
        for group, matched in gathered.items()
    }
    return DataTable(
        key_column=adapter.key_column, keys=tuple(keys), columns=columns, time_groups=time_groups
    )


def _load_long(adapter, data, key_pos, mapped, position) -> DataTable:
    spec = adapter.long_time
    time_pos = position(spec.time_column)
    value_pos = position(spec.value_column)

    keys: list[str] = []
    labels: list[str] = []
    cells: dict[tuple[str, str], float] = {}
    static: dict[str, dict[str, float]] = {m.name: {} for m, _ in mapped}
    for rownum, row in data:
        key = _cell(row, key_pos).strip()
        if not key:
            raise IngestError(f"row {rownum}: empty key")
        label = _cell(row, time_pos).strip()
        if not label:
            raise IngestError(f"row {rownum}: empty time label")
        if (key, label) in cells:
            raise IngestError(f"row {rownum}: duplicate key {key!r} at {label}")
        if key not in keys:
            keys.append(key)
        if label not in labels:
            labels.append(label)
        cells[(key, label)] = _parse_cell(
            _cell(row, value_pos), adapter.missing, rownum, spec.value_column
        )
        for mapping, pos in mapped:
            if key not in static[mapping.name]:
                static[mapping.name][key] = _parse_cell(
                    _cell(row, pos), adapter.missing, rownum, mapping.source
                )

    columns: dict[str, np.ndarray] = {}
    for mapping, _ in mapped:
        columns[mapping.name] = np.asarray(
            [static[mapping.name].get(k, math.nan) for k in keys], dtype=float
        )
    pairs = tuple((label, f"{spec.group}@{label}") for label in labels)
    for label, cname in pairs:
        columns[cname] = np.asarray([cells.get((k, label), math.nan) for k in keys], dtype=float)
    return DataTable(
        key_column=adapter.key_column,
        keys=tuple(keys),
        columns=columns,
        time_groups={spec.group: pairs},
    )


# ---------------------------------------------------------------------------
# canonical CSV

def _format_value(value: float) -> str:
    v = float(value)
    if math.isnan(v):
        return ""
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def dataset_to_csv(table: DataTable) -> str:
    """Serialize to the canonical layout: key first, time columns as group@label."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    names = list(table.column_names())
    writer.writerow([table.key_column, *names])
    for i, key in enumerate(table.keys):
        writer.writerow([key, *(_format_value(table.columns[name][i]) for name in names)])
    return out.getvalue()


def dataset_from_csv(text: str) -> DataTable:
    """Inverse of :func:`dataset_to_csv`; time groups rebuilt from @ in names."""
    records = list(csv.reader(io.StringIO(text)))
    if not records or not records[0]:
        raise IngestError("missing header row")
    header = [name.strip() for name in records[0]]
    if len(set(header)) != len(header):
        raise IngestError("duplicate column names")
    keys: list[str] = []
    values: dict[str, list[float]] = {name: [] for name in header[1:]}
    seen: set[str] = set()
    for i, row in enumerate(records[1:], start=2):
        if not row:
            continue
        key = _cell(row, 0).strip()
        if not key:
            raise IngestError(f"row {i}: empty key")
        if key in seen:
            raise IngestError(f"row {i}: duplicate key {key!r}")
        seen.add(key)
        keys.append(key)
        for pos, name in enumerate(header[1:], start=1):
            values[name].append(_parse_cell(_cell(row, pos), ("",), i, name))
    time_groups: dict[str, list[tuple[str, str]]] = {}
    for name in header[1:]:
        if "@" in name:
            group, label = name.split("@", 1)
            time_groups.setdefault(group, []).append((label, name))
    return DataTable(
        key_column=header[0],
        keys=tuple(keys),
        columns={name: np.asarray(vals, dtype=float) for name, vals in values.items()},
        time_groups={group: tuple(pairs) for group, pairs in time_groups.items()},
    )


# ---------------------------------------------------------------------------
# manifests and registry

def adapter_to_json(adapter: AdapterConfig) -> dict:
    obj: dict = {
        "key_column": adapter.key_column,
        "mappings": [
            {"source": m.source, "name": m.name, "unit": m.unit} for m in adapter.mappings
        ],
        "missing": list(adapter.missing),
    }
    if adapter.wide_time:
        obj["wide_time"] = [
            {"group": w.group, "pattern": w.pattern, "label": w.label}
            for w in adapter.wide_time
        ]
    if adapter.long_time is not None:
        l = adapter.long_time
        obj["long_time"] = {
            "group": l.group,
            "time_column": l.time_column,
            "value_column": l.value_column,
        }
    return obj


def adapter_from_json(obj: object) -> AdapterConfig:
    if not isinstance(obj, Mapping):
        raise IngestError("adapter must be a JSON object")
    try:
        mappings = tuple(
            ColumnMapping(str(m["source"]), str(m["name"]), str(m.get("unit", "")))
            for m in obj["mappings"]
        )
        wide = obj.get("wide_time")
        if wide is None:
            wide = []
        elif isinstance(wide, Mapping):
            wide = [wide]
        long_ = obj.get("long_time")
        return AdapterConfig(
            key_column=str(obj["key_column"]),
            mappings=mappings,
            missing=tuple(str(m) for m in obj.get("missing", [""])),
            wide_time=tuple(
                WideTimeSpec(str(w["group"]), str(w["pattern"]), str(w.get("label", r"\1")))
                for w in wide
            ),
            long_time=None
            if long_ is None
            else LongTimeSpec(str(long_["group"]), str(long_["time_column"]), str(long_["value_column"])),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise IngestError(f"malformed adapter: {exc}") from None


def manifest_to_json(manifest: DatasetManifest) -> dict:
    if manifest.adapter is None:
        raise IngestError(f"dataset {manifest.id}: no adapter to serialize")
    return {
        "id": manifest.id,
        "files": list(manifest.files),
        "atlas": manifest.atlas,
        "provenance": manifest.provenance,
        "adapter": adapter_to_json(manifest.adapter),
    }


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and check one manifest.json; referenced files must exist."""
    mpath = Path(path)
    try:
        obj = json.loads(mpath.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestError(f"cannot read {mpath}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise IngestError(f"{mpath.name}: invalid JSON: {exc}") from None
    if not isinstance(obj, Mapping):
        raise IngestError(f"{mpath.name}: manifest must be a JSON object")
    dataset_id = str(obj.get("id", "")).strip()
    if not dataset_id:
        raise IngestError(f"{mpath.name}: missing dataset id")
    files = obj.get("files")
    if not isinstance(files, list) or not files or not all(isinstance(f, str) for f in files):
        raise IngestError(f"dataset {dataset_id}: files must be a non-empty list of names")
    atlas = str(obj.get("atlas", "")).strip()
    if not atlas:
        raise IngestError(f"dataset {dataset_id}: missing atlas id")
    adapter = adapter_from_json(obj.get("adapter"))
    directory = mpath.parent
    for name in files:
        if not (directory / name).is_file():
            raise IngestError(f"dataset {dataset_id}: missing file {name}")
    return DatasetManifest(
        id=dataset_id,
        files=tuple(files),
        atlas=atlas,
        adapter=adapter,
        provenance=str(obj.get("provenance", "")),
        directory=directory,
    )


def registry_list(root: str | Path) -> list[DatasetManifest]:
    """Scan ``<root>/*/manifest.json``; bad manifests become error entries.

    Deterministic id order; a second manifest claiming an already-listed id is
    reported as an error entry rather than shadowing the first.
    """
    rootp = Path(root)
    entries: list[DatasetManifest] = []
    claimed: set[str] = set()
    if rootp.is_dir():
        for mpath in sorted(rootp.glob("*/manifest.json")):
            try:
                manifest = load_manifest(mpath)
            except IngestError as exc:
                entries.append(
                    DatasetManifest(
                        id=mpath.parent.name,
                        files=(),
                        atlas="",
                        adapter=None,
                        directory=mpath.parent,
                        error=str(exc),
                    )
                )
                continue
            if manifest.id in claimed:
                entries.append(
                    DatasetManifest(
                        id=manifest.id,
                        files=manifest.files,
                        atlas=manifest.atlas,
                        adapter=manifest.adapter,
                        directory=manifest.directory,
                        error=f"duplicate dataset id {manifest.id}",
                    )
                )
                continue
            claimed.add(manifest.id)
            entries.append(manifest)
    return sorted(entries, key=lambda m: (m.id, str(m.directory)))


def load_dataset(manifest: DatasetManifest) -> DataTable:
    """Load every file in the manifest through its adapter and merge rows."""
    if manifest.error:
        raise IngestError(f"dataset {manifest.id}: {manifest.error}")
    if manifest.adapter is None:
        raise IngestError(f"dataset {manifest.id}: no adapter")
    tables = [load_csv_dataset(path, manifest.adapter) for path in manifest.file_paths()]
    if len(tables) == 1:
        return tables[0]
    first = tables[0]
    keys: list[str] = []
    for table in tables:
        if table.column_names() != first.column_names() or table.time_groups != first.time_groups:
            raise IngestError(f"dataset {manifest.id}: files disagree on columns")
        keys.extend(table.keys)
    if len(set(keys)) != len(keys):
        raise IngestError(f"dataset {manifest.id}: duplicate keys across files")
    columns = {
        name: np.concatenate([table.columns[name] for table in tables])
        for name in first.column_names()
    }
    return DataTable(
        key_column=first.key_column,
        keys=tuple(keys),
        columns=columns,
        time_groups=first.time_groups,
    )


# ---------------------------------------------------------------------------
# roots

def bundled_data_root() -> Path:
    return Path(__file__).parent / "data" / "datasets"


def default_data_root() -> Path:
    """Dataset root: ``MICROMAP_DATA_ROOT`` when set, else the bundled data."""
    env = os.environ.get("MICROMAP_DATA_ROOT")
    return Path(env) if env else bundled_data_root()


def bundled_atlas_dir() -> Path:
    return Path(__file__).parent / "data" / "atlases"


def list_atlases(root: str | Path | None = None) -> list[tuple[str, Path]]:
    """Bundled atlases plus any ``<root>/atlases/*.json``, id-sorted.

    A user file with a bundled id overrides the bundled atlas.
    """
    found: dict[str, Path] = {}
    for path in sorted(bundled_atlas_dir().glob("*.json")):
        found[path.stem] = path
    if root is not None:
        user_dir = Path(root) / "atlases"
        if user_dir.is_dir():
            for path in sorted(user_dir.glob("*.json")):
                found[path.stem] = path
    return sorted(found.items())


def find_atlas(atlas_id: str, root: str | Path | None = None) -> Path | None:
    for aid, path in list_atlases(root):
        if aid == atlas_id:
            return path
    return None
