"""Core point-cloud data model: voxel coordinates, axis ranges, sides.

Clouds are immutable after construction. Coordinates are non-negative
integers on a 2^B grid; duplicates are merged at construction (first
occurrence wins, merge count kept on the cloud).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, NamedTuple, Optional

import numpy as np

MIN_BIT_DEPTH = 8
MAX_BIT_DEPTH = 16
DEFAULT_BIT_DEPTH = 10


class Axis(IntEnum):
    X = 0
    Y = 1
    Z = 2

    def __str__(self) -> str:
        return self.name


def axis_from_name(name: str) -> Axis:
    try:
        return Axis[name.upper()]
    except KeyError:
        raise ValueError(f"unknown axis {name!r}") from None


class Point(NamedTuple):
    x: int
    y: int
    z: int
    color: Optional[tuple[int, int, int]] = None


@dataclass(frozen=True)
class Side:
    """One of the six faces a slice can be taken from: an axis and a polarity."""

    axis: Axis
    sign: int  # +1 or -1

    def __post_init__(self) -> None:
        if self.sign not in (-1, 1):
            raise ValueError(f"side sign must be +1 or -1, got {self.sign}")

    @property
    def positive(self) -> bool:
        return self.sign > 0

    def __str__(self) -> str:
        return f"{'+' if self.positive else '-'}{self.axis.name}"


# Fixed evaluation / tie-break order.
SIDES: tuple[Side, ...] = (
    Side(Axis.X, +1),
    Side(Axis.X, -1),
    Side(Axis.Y, +1),
    Side(Axis.Y, -1),
    Side(Axis.Z, +1),
    Side(Axis.Z, -1),
)


@dataclass(frozen=True)
class AxisRange:
    """Half-open coordinate interval [lo, hi) along one axis."""

    axis: Axis
    lo: int
    hi: int

    def __post_init__(self) -> None:
        if self.lo < 0:
            raise ValueError(f"range lo must be >= 0, got {self.lo}")
        if self.lo >= self.hi:
            raise ValueError(f"empty range [{self.lo}, {self.hi})")

    @property
    def width(self) -> int:
        return self.hi - self.lo

    def contains(self, coord: int) -> bool:
        return self.lo <= coord < self.hi


def min_bit_depth_for(max_coord: int) -> int:
    """Smallest depth in {8..16} covering max_coord, floored at the 10-bit default."""
    if max_coord < 0:
        raise ValueError("coordinates must be non-negative")
    needed = max(int(max_coord).bit_length(), MIN_BIT_DEPTH)
    if needed > MAX_BIT_DEPTH:
        raise ValueError(f"coordinate {max_coord} exceeds {MAX_BIT_DEPTH}-bit grid")
    return max(needed, DEFAULT_BIT_DEPTH)


class PointCloud:
    """Immutable set of voxel points with optional per-point 8-bit RGB color.

    `coords` is an (N, 3) int32 array, `colors` an (N, 3) uint8 array or None.
    Point order is preserved from construction (after dropping duplicate
    coordinates, keeping the first occurrence and its color).
    """

    __slots__ = ("coords", "colors", "bit_depth", "duplicates_merged", "_bbox")

    def __init__(
        self,
        coords,
        colors=None,
        bit_depth: Optional[int] = None,
    ) -> None:
        arr = np.asarray(coords, dtype=np.int64)
        if arr.size == 0:
            arr = arr.reshape(0, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"coords must be (N, 3), got shape {arr.shape}")
        if arr.size and arr.min() < 0:
            raise ValueError("coordinates must be non-negative")
        if arr.size and arr.max() >= (1 << MAX_BIT_DEPTH):
            # checked before dedup: larger values would alias in the hash keys
            raise ValueError(
                f"coordinate {int(arr.max())} exceeds {MAX_BIT_DEPTH}-bit grid"
            )

        col = None
        if colors is not None:
            col = np.asarray(colors, dtype=np.uint8)
            if col.shape != (arr.shape[0], 3):
                raise ValueError("colors must be (N, 3) matching coords")

        arr, col, merged = _dedup_first(arr, col)

        max_coord = int(arr.max()) if arr.size else 0
        if bit_depth is None:
            bit_depth = min_bit_depth_for(max_coord)
        else:
            if not (MIN_BIT_DEPTH <= bit_depth <= MAX_BIT_DEPTH):
                raise ValueError(f"bit depth must be in [{MIN_BIT_DEPTH}, {MAX_BIT_DEPTH}]")
            if max_coord >= (1 << bit_depth):
                raise ValueError(
                    f"coordinate {max_coord} does not fit {bit_depth}-bit grid"
                )

        coords32 = np.ascontiguousarray(arr, dtype=np.int32)
        coords32.setflags(write=False)
        if col is not None:
            col = np.ascontiguousarray(col)
            col.setflags(write=False)

        self.coords = coords32
        self.colors = col
        self.bit_depth = int(bit_depth)
        self.duplicates_merged = int(merged)
        self._bbox = None

    @classmethod
    def _from_trusted(cls, coords: np.ndarray, colors, bit_depth: int) -> "PointCloud":
        """Internal constructor for arrays already known unique and in range."""
        cloud = cls.__new__(cls)
        coords = np.ascontiguousarray(coords, dtype=np.int32)
        coords.setflags(write=False)
        cloud.coords = coords
        if colors is not None:
            colors = np.ascontiguousarray(colors)
            colors.setflags(write=False)
        cloud.colors = colors
        cloud.bit_depth = int(bit_depth)
        cloud.duplicates_merged = 0
        cloud._bbox = None
        return cloud

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __iter__(self) -> Iterator[Point]:
        for i in range(len(self)):
            x, y, z = (int(v) for v in self.coords[i])
            color = None
            if self.colors is not None:
                color = tuple(int(c) for c in self.colors[i])
            yield Point(x, y, z, color)

    @property
    def bbox(self) -> Optional[tuple[np.ndarray, np.ndarray]]:
        """(mins, maxs) per axis, or None for an empty cloud."""
        if self._bbox is None:
            if len(self) == 0:
                return None
            self._bbox = (self.coords.min(axis=0), self.coords.max(axis=0))
        return self._bbox

    def extent(self, axis: Axis) -> int:
        """Number of occupied coordinate positions spanned along axis."""
        box = self.bbox
        if box is None:
            return 0
        return int(box[1][axis] - box[0][axis]) + 1

    def coordinate_keys(self) -> np.ndarray:
        """int64 key per point, unique per voxel; usable for set operations."""
        c = self.coords.astype(np.int64)
        return (c[:, 0] << 32) | (c[:, 1] << 16) | c[:, 2]

    def point_set(self) -> set[tuple[int, int, int]]:
        return {(int(x), int(y), int(z)) for x, y, z in self.coords}

    def sorted_coords(self) -> np.ndarray:
        """Coordinates in lexicographic (x, y, z) order, for comparisons."""
        order = np.lexsort((self.coords[:, 2], self.coords[:, 1], self.coords[:, 0]))
        return self.coords[order]

    def same_points(self, other: "PointCloud") -> bool:
        if len(self) != len(other):
            return False
        return bool(np.array_equal(self.sorted_coords(), other.sorted_coords()))

    def subset(self, mask: np.ndarray) -> "PointCloud":
        colors = self.colors[mask] if self.colors is not None else None
        return PointCloud._from_trusted(self.coords[mask], colors, self.bit_depth)

    def translate(self, offset) -> "PointCloud":
        """Shift all coordinates by a constant vector (must stay in range)."""
        shifted = self.coords.astype(np.int64) + np.asarray(offset, dtype=np.int64)
        return PointCloud(shifted, self.colors, bit_depth=self.bit_depth)

    def __repr__(self) -> str:
        return f"PointCloud({len(self)} points, B={self.bit_depth})"


def _dedup_first(coords: np.ndarray, colors):
    """Drop duplicate coordinates keeping first occurrence; return merge count."""
    n = coords.shape[0]
    if n == 0:
        return coords, colors, 0
    keys = (coords[:, 0] << 32) | (coords[:, 1] << 16) | coords[:, 2]
    _, first_idx = np.unique(keys, return_index=True)
    if first_idx.shape[0] == n:
        return coords, colors, 0
    first_idx.sort()
    kept_colors = colors[first_idx] if colors is not None else None
    return coords[first_idx], kept_colors, n - first_idx.shape[0]


def extract_range(cloud: PointCloud, axis_range: AxisRange) -> PointCloud:
    """Points whose coordinate on the range's axis lies in [lo, hi)."""
    col = cloud.coords[:, axis_range.axis]
    mask = (col >= axis_range.lo) & (col < axis_range.hi)
    return cloud.subset(mask)


def remove_range(cloud: PointCloud, axis_range: AxisRange) -> PointCloud:
    """Complement of extract_range over the same cloud."""
    col = cloud.coords[:, axis_range.axis]
    mask = (col < axis_range.lo) | (col >= axis_range.hi)
    return cloud.subset(mask)
