"""Sorting regions and partitioning them into perceptual groups.

A figure's rows are sorted by the bound sort variable and cut into groups of
at most five regions each, mirrored around the median.  Colors repeat inside
every group: they link a row to its map region and to its marks, they never
encode a quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

if TYPE_CHECKING:
    from .model import BoundFigureModel

__all__ = [
    "GroupingError",
    "Palette",
    "PerceptualGrouping",
    "ColorAssignment",
    "DEFAULT_PALETTE",
    "sort_rows",
    "build_groups",
    "group_regions",
    "assign_colors",
]

MAX_GROUP = 5


class GroupingError(ValueError):
    pass


@dataclass(frozen=True)
class Palette:
    """Five ordinal hues plus a median accent and a neutral gray."""

    colors: tuple[str, str, str, str, str]
    median_accent: str
    neutral: str

    def __post_init__(self) -> None:
        if len(self.colors) != MAX_GROUP:
            raise GroupingError(f"palette needs exactly {MAX_GROUP} group colors")


# Okabe-Ito hues, safe for common color-vision deficiencies.
DEFAULT_PALETTE = Palette(
    colors=("#D55E00", "#0072B2", "#009E73", "#E69F00", "#CC79A7"),
    median_accent="#000000",
    neutral="#CCCCCC",
)


@dataclass(frozen=True)
class PerceptualGrouping:
    """Ordered partition of the sorted region ids into groups of <= 5."""

    order: tuple[str, ...]
    groups: tuple[tuple[str, ...], ...]
    median_group_index: int | None

    def __post_init__(self) -> None:
        flat = tuple(rid for group in self.groups for rid in group)
        if flat != self.order:
            raise GroupingError("groups must partition the sorted order exactly")
        for group in self.groups:
            if not (1 <= len(group) <= MAX_GROUP):
                raise GroupingError(f"group size {len(group)} outside 1..{MAX_GROUP}")
        if self.median_group_index is not None:
            if len(self.groups[self.median_group_index]) != 1:
                raise GroupingError("median group must be a singleton")

    def group_of(self, region_id: str) -> int:
        for index, group in enumerate(self.groups):
            if region_id in group:
                return index
        raise KeyError(region_id)


@dataclass(frozen=True)
class ColorAssignment:
    """Positional colors: row i of a group gets palette color i."""

    palette: Palette
    fill: Mapping[str, str]
    outline: Mapping[str, str]
    roles: Mapping[str, str]  # "group:<i>" or "median"


def sort_rows(model: "BoundFigureModel", direction: str = "descending") -> tuple[str, ...]:
    """Region ids ordered by the model's sort values, ties by id ascending."""
    if direction not in ("ascending", "descending"):
        raise GroupingError(f"unknown direction {direction!r}")
    pairs = list(zip(model.region_ids, model.sort_values))
    for rid, value in pairs:
        if not math.isfinite(value):
            raise GroupingError(f"non-finite sort value for region {rid}")
    reverse = direction == "descending"
    if reverse:
        pairs.sort(key=lambda p: (-p[1], p[0]))
    else:
        pairs.sort(key=lambda p: (p[1], p[0]))
    return tuple(rid for rid, _ in pairs)


def _half_sizes(half: int) -> list[int]:
    """Split one half into groups of <= 5, as equal as possible, larger first."""
    if half == 0:
        return []
    count = math.ceil(half / MAX_GROUP)
    base, extra = divmod(half, count)
    return [base + 1] * extra + [base] * (count - extra)


def build_groups(n: int) -> list[int]:
    """Group-size sequence for n sorted regions.

    Odd n puts the median region alone in the middle; each half is split
    into near-equal groups with the larger ones toward the extremes, so the
    sequence is always palindromic.  n=51 gives [5,5,5,5,5,1,5,5,5,5,5].
    """
    if n < 1:
        raise GroupingError(f"need at least one region, got {n}")
    if n % 2 == 1:
        top = _half_sizes((n - 1) // 2)
        return top + [1] + top[::-1]
    top = _half_sizes(n // 2)
    return top + top[::-1]


def group_regions(order: Sequence[str]) -> PerceptualGrouping:
    """Partition an already-sorted id sequence into perceptual groups."""
    order = tuple(order)
    sizes = build_groups(len(order))
    groups: list[tuple[str, ...]] = []
    at = 0
    for size in sizes:
        groups.append(order[at : at + size])
        at += size
    median_index = len(sizes) // 2 if len(order) % 2 == 1 else None
    return PerceptualGrouping(order=order, groups=tuple(groups), median_group_index=median_index)


def assign_colors(
    grouping: PerceptualGrouping, palette: Palette = DEFAULT_PALETTE
) -> ColorAssignment:
    """Positional palette cycle per group; the median region gets the accent."""
    fill: dict[str, str] = {}
    outline: dict[str, str] = {}
    roles: dict[str, str] = {}
    for index, group in enumerate(grouping.groups):
        if index == grouping.median_group_index:
            rid = group[0]
            fill[rid] = palette.median_accent
            outline[rid] = palette.median_accent
            roles[rid] = "median"
            continue
        for position, rid in enumerate(group):
            fill[rid] = palette.colors[position]
            outline[rid] = palette.colors[position]
            roles[rid] = f"group:{position}"
    return ColorAssignment(palette=palette, fill=fill, outline=outline, roles=roles)
