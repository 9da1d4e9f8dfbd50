# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Retinal layer curves (ILM and BM), their validation, the convex envelope
correction of BM and band rasterization.
"""

from __future__ import annotations

import dataclasses
import typing as t

import numpy as np
import numpy.typing as npt

from edema_layerguide.errors import (
    BoundsError,
    CurveCrossing,
    RowOutOfRange,
    ValidationError,
    WidthMismatch,
)
from edema_layerguide.raster import BinaryMask, round_half_away


@dataclasses.dataclass(frozen=True, eq=False)
class LayerCurve:
    """
    Row coordinate (fractional, in pixels) of a layer boundary for every column.
    """

    rows: npt.NDArray[np.float64]

    def __post_init__(self) -> None:
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 1 or rows.size < 1:
            raise ValidationError("A layer curve needs a row for at least one column")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_values(cls, values: t.Iterable[float]) -> LayerCurve:
        return cls(np.fromiter(values, dtype=np.float64))

    @property
    def width(self) -> int:
        return int(self.rows.size)

    def rounded(self) -> npt.NDArray[np.int64]:
        return round_half_away(self.rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LayerCurve):
            return NotImplemented
        return np.array_equal(self.rows, other.rows)

    __hash__ = None  # type: ignore[assignment]


@dataclasses.dataclass(frozen=True)
class LayerPair:
    ilm: LayerCurve
    bm: LayerCurve

    @property
    def width(self) -> int:
        return self.ilm.width


def fill_curve_gaps(values: t.Sequence[float | None]) -> LayerCurve:
    """
    Complete a gapped curve.

    Missing entries (``None`` or NaN) are linearly interpolated between the
    nearest defined neighbors; leading and trailing gaps take the value of the
    nearest defined entry.
    """
    rows = np.array(
        [np.nan if value is None else value for value in values], dtype=np.float64
    )
    known = ~np.isnan(rows)
    if not known.any():
        raise ValidationError("Cannot fill a curve without any defined row")
    columns = np.arange(rows.size)
    rows[~known] = np.interp(columns[~known], columns[known], rows[known])
    return LayerCurve(rows)


def _check_rows(curve: LayerCurve, height: int, name: str) -> None:
    rows = curve.rows
    bad = ~np.isfinite(rows) | (rows < 0) | (rows > height - 1)
    if bad.any():
        column = int(np.flatnonzero(bad)[0])
        raise RowOutOfRange(
            column, f"{name} row {rows[column]!r} not in [0, {height - 1}]"
        )


def validate_layers(
    ilm: LayerCurve, bm: LayerCurve, height: int, width: int
) -> LayerPair:
    """
    Check that both curves span the raster, stay inside it and do not cross.
    """
    for name, curve in (("ILM", ilm), ("BM", bm)):
        if curve.width != width:
            raise WidthMismatch(
                f"{name} curve has {curve.width} columns, raster has {width}"
            )
    _check_rows(ilm, height, "ILM")
    _check_rows(bm, height, "BM")
    crossing = ilm.rows > bm.rows
    if crossing.any():
        raise CurveCrossing(int(np.flatnonzero(crossing)[0]))
    return LayerPair(ilm=ilm, bm=bm)


def _chord(x0: int, r0: float, x1: int, r1: float, x: int) -> float:
    # One rounding step, so every chord through the same lattice points agrees.
    return (r0 * (x1 - x) + r1 * (x - x0)) / (x1 - x0)


def convex_envelope_bm(bm: LayerCurve) -> LayerCurve:
    """
    Lower convex envelope of the BM points ``(x, rows[x])`` in image
    coordinates.

    This is the smallest piecewise linear curve through a subset of the input
    points that lies at or below every point (rows grow downward) and whose
    region above is convex. Upward elevations are replaced by chords; downward
    bulges stay.
    """
    rows = bm.rows.tolist()
    width = len(rows)
    if width <= 2:
        return LayerCurve(bm.rows.copy())

    # Upper hull of (x, row) in numeric terms, built left to right.
    hull: list[int] = []
    for x in range(width):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            turn = (b - a) * (rows[x] - rows[a]) - (rows[b] - rows[a]) * (x - a)
            if turn < 0:
                break
            hull.pop()
        hull.append(x)

    envelope = bm.rows.copy()
    for left, right in zip(hull, hull[1:]):
        for x in range(left + 1, right):
            envelope[x] = _chord(left, rows[left], right, rows[right], x)
    return LayerCurve(envelope)


def rasterize_band(
    pair: LayerPair, x_left: int, x_right: int, height: int
) -> BinaryMask:
    """
    Mask of the closed band between ILM and BM over columns
    ``x_left..x_right``.

    Rows are rounded half away from zero; both boundary rows are included.
    """
    width = pair.width
    if not 0 <= x_left <= x_right < width:
        raise BoundsError(
            f"Invalid column range {x_left}..{x_right} for width {width}"
        )
    top = pair.ilm.rounded()
    bottom = pair.bm.rounded()
    ys = np.arange(height)[:, np.newaxis]
    columns = np.arange(width)[np.newaxis, :]
    return (
        (columns >= x_left)
        & (columns <= x_right)
        & (ys >= top[np.newaxis, :])
        & (ys <= bottom[np.newaxis, :])
    )
