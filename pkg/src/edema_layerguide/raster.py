# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Dense raster primitives: grids, binary masks, connected components, lattice
convex hulls, polygon filling and per-column extrema.

Grids are 2-D ``float64`` arrays and masks are 2-D ``bool`` arrays, both
row-major with the origin at the top-left and rows growing downward.
"""

from __future__ import annotations

import dataclasses
import enum
import typing as t

import numpy as np
import numpy.typing as npt
from scipy import ndimage

from edema_layerguide.errors import (
    BoundsError,
    DimensionMismatch,
    EmptyMask,
    ValidationError,
)

Grid = npt.NDArray[np.float64]
BinaryMask = npt.NDArray[np.bool_]


class PixelPoint(t.NamedTuple):
    x: int
    y: int


class Connectivity(enum.IntEnum):
    FOUR = 4
    EIGHT = 8


def as_grid(values: npt.ArrayLike) -> Grid:
    """
    Convert ``values`` to a validated grid.

    Raises ``DimensionMismatch`` for anything that is not a non-empty 2-D
    array, and ``ValidationError`` for non-finite values.
    """
    grid = np.asarray(values, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise DimensionMismatch(f"Expected a non-empty 2-D grid, got shape {grid.shape}")
    if not np.isfinite(grid).all():
        raise ValidationError("Grid contains non-finite values")
    return grid


def as_mask(bits: npt.ArrayLike) -> BinaryMask:
    mask = np.asarray(bits, dtype=np.bool_)
    if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
        raise DimensionMismatch(f"Expected a non-empty 2-D mask, got shape {mask.shape}")
    return mask


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "rasters") -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(
            f"Dimensions of {what} do not match: {a.shape} vs {b.shape}"
        )


def round_half_away(values: npt.ArrayLike) -> npt.NDArray[np.int64]:
    """
    Round to the nearest integer, ties away from zero.
    """
    arr = np.asarray(values, dtype=np.float64)
    return (np.sign(arr) * np.floor(np.abs(arr) + 0.5)).astype(np.int64)


def round_half_away_int(value: float) -> int:
    return int(round_half_away(value))


def mask_points(mask: BinaryMask) -> list[PixelPoint]:
    ys, xs = np.nonzero(mask)
    return [PixelPoint(int(x), int(y)) for y, x in zip(ys, xs)]


@dataclasses.dataclass(frozen=True, eq=False)
class Component:
    mask: BinaryMask
    size: int


def connected_components(
    mask: BinaryMask, connectivity: Connectivity = Connectivity.EIGHT
) -> list[Component]:
    """
    Split the foreground of ``mask`` into connected components.

    Components are ordered by their first pixel in row-major order.
    """
    mask = as_mask(mask)
    rank = 1 if connectivity == Connectivity.FOUR else 2
    structure = ndimage.generate_binary_structure(2, rank)
    labels, count = ndimage.label(mask, structure=structure)
    if count == 0:
        return []
    flat = labels.ravel()
    sizes = np.bincount(flat, minlength=count + 1)
    first = np.full(count + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size, dtype=np.int64))
    order = np.argsort(first[1:], kind="stable") + 1
    return [Component(labels == label, int(sizes[label])) for label in order]


def largest_component(
    mask: BinaryMask, connectivity: Connectivity = Connectivity.EIGHT
) -> BinaryMask:
    """
    Return the component with the most pixels.

    Ties go to the component whose first pixel comes first in row-major
    order. Raises ``EmptyMask`` if ``mask`` has no foreground.
    """
    components = connected_components(mask, connectivity)
    if not components:
        raise EmptyMask("Mask has no foreground pixels")
    best = components[0]
    for component in components[1:]:
        if component.size > best.size:
            best = component
    return best.mask


def _cross(o: tuple[int, int], a: tuple[int, int], b: tuple[int, int]) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: t.Iterable[tuple[int, int]]) -> list[PixelPoint]:
    """
    Convex hull of lattice points by Andrew's monotone chain.

    The result runs counter-clockwise as drawn on screen, which is the y-up
    frame with y = -row. Its signed area in (x, row) coordinates is therefore
    negative. Collinear boundary points are dropped. A single
    point yields a one-vertex polygon, collinear input a two-vertex one.
    """
    # Flip y so the chain runs in a y-up frame; all arithmetic stays integer.
    flipped = sorted({(int(x), -int(y)) for x, y in points})
    if not flipped:
        raise ValueError("Cannot compute the hull of an empty point set")
    if len(flipped) <= 2:
        return [PixelPoint(x, -y) for x, y in flipped]

    lower: list[tuple[int, int]] = []
    for p in flipped:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[int, int]] = []
    for p in reversed(flipped):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return [PixelPoint(x, -y) for x, y in hull]


def fill_polygon(
    polygon: t.Sequence[tuple[int, int]], height: int, width: int
) -> BinaryMask:
    """
    Rasterize a closed polygon given by lattice vertices.

    A pixel is set if its center lies on an edge or inside the polygon by the
    even-odd rule. Degenerate polygons (one or two vertices) rasterize to a
    point or a segment.
    """
    if not polygon:
        raise ValueError("Polygon has no vertices")
    for x, y in polygon:
        if not (0 <= x < width and 0 <= y < height):
            raise BoundsError(f"Polygon vertex {(x, y)} lies outside {height}x{width}")

    ys, xs = np.mgrid[0:height, 0:width]
    inside = np.zeros((height, width), dtype=np.bool_)
    boundary = np.zeros((height, width), dtype=np.bool_)
    count = len(polygon)
    for index in range(count):
        x1, y1 = (int(v) for v in polygon[index])
        x2, y2 = (int(v) for v in polygon[(index + 1) % count])
        side = (xs - x1) * (y2 - y1) - (x2 - x1) * (ys - y1)
        boundary |= (
            (side == 0)
            & (xs >= min(x1, x2))
            & (xs <= max(x1, x2))
            & (ys >= min(y1, y2))
            & (ys <= max(y1, y2))
        )
        if y1 == y2:
            continue
        straddles = (y1 > ys) != (y2 > ys)
        left_of = side < 0 if y2 > y1 else side > 0
        inside ^= straddles & left_of
    return inside | boundary


@dataclasses.dataclass(frozen=True, eq=False)
class ColumnExtrema:
    """
    Per-column minimal and maximal foreground rows; ``-1`` marks empty columns.
    """

    top: npt.NDArray[np.int64]
    bottom: npt.NDArray[np.int64]
    leftmost: int | None
    rightmost: int | None

    @property
    def occupied(self) -> npt.NDArray[np.bool_]:
        return self.top >= 0

    def __getitem__(self, column: int) -> tuple[int, int] | None:
        if self.top[column] < 0:
            return None
        return int(self.top[column]), int(self.bottom[column])


def column_extrema(mask: BinaryMask) -> ColumnExtrema:
    mask = as_mask(mask)
    height = mask.shape[0]
    occupied = mask.any(axis=0)
    top = np.argmax(mask, axis=0).astype(np.int64)
    bottom = (height - 1 - np.argmax(mask[::-1, :], axis=0)).astype(np.int64)
    top[~occupied] = -1
    bottom[~occupied] = -1
    columns = np.flatnonzero(occupied)
    if columns.size == 0:
        return ColumnExtrema(top, bottom, None, None)
    return ColumnExtrema(top, bottom, int(columns[0]), int(columns[-1]))
