# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Layer-structure-guided refinement of a coarse edema prediction.

The coarse mask is reduced to four corner points where its top and bottom
envelopes meet ILM and BM. Missing corners are completed from the other
corner on the same side, a boundary strategy picks one vertical line per
side, and the result is the full ILM-BM band between those lines.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import typing as t

import numpy as np

from edema_layerguide.errors import (
    ConfigError,
    DimensionMismatch,
    EmptyPrediction,
    IncompleteCorners,
    ValidationError,
)
from edema_layerguide.layers import (
    LayerCurve,
    LayerPair,
    convex_envelope_bm,
    rasterize_band,
    validate_layers,
)
from edema_layerguide.raster import (
    BinaryMask,
    PixelPoint,
    as_mask,
    column_extrema,
    round_half_away_int,
)


class BoundaryStrategy(enum.Enum):
    """
    How the left and right boundary columns are chosen from the corners.

    ``S1`` takes the outer corner on each side, ``S2`` the inner one and
    ``S3`` the mean, rounded outward.
    """

    S1 = "S1"
    S2 = "S2"
    S3 = "S3"

    @classmethod
    def parse(cls, value: str | int | BoundaryStrategy) -> BoundaryStrategy:
        if isinstance(value, BoundaryStrategy):
            return value
        text = str(value).strip().upper()
        if not text.startswith("S"):
            text = f"S{text}"
        try:
            return cls(text)
        except ValueError:
            raise ConfigError(f"Unknown boundary strategy {value!r}") from None


class SideFallback(enum.Enum):
    MASK_EXTENT = "mask_extent"


@dataclasses.dataclass(frozen=True)
class CornerPoints:
    top_left: PixelPoint | None = None
    bottom_left: PixelPoint | None = None
    top_right: PixelPoint | None = None
    bottom_right: PixelPoint | None = None

    def __post_init__(self) -> None:
        for left, right in (
            (self.top_left, self.top_right),
            (self.bottom_left, self.bottom_right),
        ):
            if left is not None and right is not None and left.x > right.x:
                raise ValidationError(
                    f"Left corner {tuple(left)} lies right of {tuple(right)}"
                )

    def is_complete(self) -> bool:
        return None not in (
            self.top_left,
            self.bottom_left,
            self.top_right,
            self.bottom_right,
        )

    def to_json(self) -> dict[str, list[int] | None]:
        return {
            field.name: (
                None if (point := getattr(self, field.name)) is None else list(point)
            )
            for field in dataclasses.fields(self)
        }


@dataclasses.dataclass(frozen=True)
class RefineConfig:
    strategy: BoundaryStrategy = BoundaryStrategy.S1
    tolerance_px: float = 2.0
    fallback: SideFallback = SideFallback.MASK_EXTENT

    def __post_init__(self) -> None:
        object.__setattr__(self, "strategy", BoundaryStrategy.parse(self.strategy))
        if not math.isfinite(self.tolerance_px) or self.tolerance_px < 0:
            raise ConfigError(
                f"Tolerance must be a non-negative number, got {self.tolerance_px!r}"
            )


class Bounds(t.NamedTuple):
    w_left: int
    w_right: int
    degenerate: bool


@dataclasses.dataclass(frozen=True, eq=False)
class RefineOutcome:
    """
    Refined mask with the corners, bounds and fallbacks that produced it.

    ``pair`` holds the layers actually used (BM after envelope correction);
    it is ``None`` only when the coarse prediction was empty.
    """

    mask: BinaryMask
    corners: CornerPoints
    w_left: int | None
    w_right: int | None
    degenerate: bool
    notes: tuple[str, ...]
    strategy: BoundaryStrategy
    pair: LayerPair | None = None

    def provenance(self) -> dict[str, t.Any]:
        return {
            "corners": self.corners.to_json(),
            "w_left": self.w_left,
            "w_right": self.w_right,
            "strategy": self.strategy.value,
            "degenerate": self.degenerate,
            "notes": list(self.notes),
        }

    def with_strategy(self, strategy: BoundaryStrategy) -> RefineOutcome:
        """
        Re-select the bounds from the same completed corners.
        """
        if self.pair is None or strategy == self.strategy:
            return self
        notes = [note for note in self.notes if not note.startswith("Bounds ")]
        bounds = select_bounds(self.corners, strategy)
        if bounds.degenerate:
            notes.append(_clamp_note(bounds.w_left))
        return RefineOutcome(
            mask=confined(self.pair, bounds.w_left, bounds.w_right, self.mask.shape[0]),
            corners=self.corners,
            w_left=bounds.w_left,
            w_right=bounds.w_right,
            degenerate=bounds.degenerate,
            notes=tuple(notes),
            strategy=strategy,
            pair=self.pair,
        )


def _corner(x: int, curve: LayerCurve) -> PixelPoint:
    return PixelPoint(x, round_half_away_int(curve.rows[x]))


def find_intersections(
    oriseg: BinaryMask, pair: LayerPair, tolerance_px: float
) -> CornerPoints:
    """
    Locate the corners where the prediction's envelopes meet the layers.

    A column touches ILM if its topmost foreground row is within
    ``tolerance_px`` of the ILM row, and touches BM if its bottommost row is
    within ``tolerance_px`` of the BM row. Corners take the outermost
    touching columns, with rows read from the (rounded) layer curve.
    """
    oriseg = as_mask(oriseg)
    if oriseg.shape[1] != pair.width:
        raise DimensionMismatch(
            f"Prediction has {oriseg.shape[1]} columns, layers have {pair.width}"
        )
    extrema = column_extrema(oriseg)
    if extrema.leftmost is None:
        raise EmptyPrediction("Coarse prediction has no foreground")
    occupied = extrema.occupied
    touches_ilm = np.flatnonzero(
        occupied & (np.abs(extrema.top - pair.ilm.rows) <= tolerance_px)
    )
    touches_bm = np.flatnonzero(
        occupied & (np.abs(extrema.bottom - pair.bm.rows) <= tolerance_px)
    )

    top_left = top_right = bottom_left = bottom_right = None
    if touches_ilm.size:
        top_left = _corner(int(touches_ilm[0]), pair.ilm)
        top_right = _corner(int(touches_ilm[-1]), pair.ilm)
    if touches_bm.size:
        bottom_left = _corner(int(touches_bm[0]), pair.bm)
        bottom_right = _corner(int(touches_bm[-1]), pair.bm)
    return CornerPoints(
        top_left=top_left,
        bottom_left=bottom_left,
        top_right=top_right,
        bottom_right=bottom_right,
    )


def _complete_side(
    top: PixelPoint | None,
    bottom: PixelPoint | None,
    pair: LayerPair,
    extent_column: int | None,
    side: str,
    notes: list[str],
) -> tuple[PixelPoint, PixelPoint]:
    if top is not None and bottom is not None:
        return top, bottom
    if bottom is not None:
        notes.append(f"Completed {side} top corner from column {bottom.x}")
        return _corner(bottom.x, pair.ilm), bottom
    if top is not None:
        notes.append(f"Completed {side} bottom corner from column {top.x}")
        return top, _corner(top.x, pair.bm)
    if extent_column is None:
        raise IncompleteCorners(f"No corner on the {side} side and no mask extent")
    notes.append(f"No {side} corners; fell back to mask extent column {extent_column}")
    return _corner(extent_column, pair.ilm), _corner(extent_column, pair.bm)


def _complete_missing(
    corners: CornerPoints,
    pair: LayerPair,
    oriseg_extent: tuple[int, int] | None,
) -> tuple[CornerPoints, list[str]]:
    notes: list[str] = []
    left, right = oriseg_extent if oriseg_extent is not None else (None, None)
    top_left, bottom_left = _complete_side(
        corners.top_left, corners.bottom_left, pair, left, "left", notes
    )
    top_right, bottom_right = _complete_side(
        corners.top_right, corners.bottom_right, pair, right, "right", notes
    )
    completed = CornerPoints(
        top_left=top_left,
        bottom_left=bottom_left,
        top_right=top_right,
        bottom_right=bottom_right,
    )
    return completed, notes


def complete_missing(
    corners: CornerPoints,
    pair: LayerPair,
    oriseg_extent: tuple[int, int] | None,
) -> CornerPoints:
    """
    Fill in absent corners.

    A missing corner takes the column of the other corner on the same side
    and its row from the matching layer. When a whole side is missing, the
    leftmost (or rightmost) column of the prediction is used instead.
    """
    return _complete_missing(corners, pair, oriseg_extent)[0]


def _clamp_note(column: int) -> str:
    return f"Bounds inverted; clamped to column {column}"


def select_bounds(corners: CornerPoints, strategy: BoundaryStrategy) -> Bounds:
    tl, bl, tr, br = (
        corners.top_left,
        corners.bottom_left,
        corners.top_right,
        corners.bottom_right,
    )
    if tl is None or bl is None or tr is None or br is None:
        raise IncompleteCorners("All four corners are needed to select bounds")
    if strategy == BoundaryStrategy.S1:
        w_left, w_right = min(tl.x, bl.x), max(tr.x, br.x)
    elif strategy == BoundaryStrategy.S2:
        w_left, w_right = max(tl.x, bl.x), min(tr.x, br.x)
    else:
        # Outward rounding keeps S2 <= S3 <= S1 at half-integer means.
        w_left = (tl.x + bl.x) // 2
        w_right = -(-(tr.x + br.x) // 2)
    if w_left > w_right:
        middle = round_half_away_int((w_left + w_right) / 2)
        return Bounds(middle, middle, True)
    return Bounds(w_left, w_right, False)


def confined(pair: LayerPair, w_left: int, w_right: int, height: int) -> BinaryMask:
    """
    Full ILM-BM band between two vertical boundary lines.
    """
    return rasterize_band(pair, w_left, w_right, height)


def refine(
    oriseg: BinaryMask,
    ilm: LayerCurve,
    bm: LayerCurve,
    cfg: RefineConfig,
    height: int,
    width: int,
    *,
    log_debug: t.Callable[..., None] | None = None,
) -> RefineOutcome:
    """
    Refine a coarse prediction into a layer-confined edema mask.

    BM is always replaced by its convex envelope before corners are searched.
    An empty prediction produces an empty mask flagged as degenerate.
    """

    def do_log_debug(msg: str, *args: t.Any) -> None:
        if log_debug:
            log_debug(msg, *args)

    oriseg = as_mask(oriseg)
    if oriseg.shape != (height, width):
        raise DimensionMismatch(
            f"Prediction is {oriseg.shape[0]}x{oriseg.shape[1]}, expected {height}x{width}"
        )
    pair = validate_layers(ilm, bm, height, width)
    pair = validate_layers(pair.ilm, convex_envelope_bm(pair.bm), height, width)

    try:
        corners = find_intersections(oriseg, pair, cfg.tolerance_px)
    except EmptyPrediction:
        do_log_debug("Empty coarse prediction; emitting degenerate empty mask")
        return RefineOutcome(
            mask=np.zeros((height, width), dtype=np.bool_),
            corners=CornerPoints(),
            w_left=None,
            w_right=None,
            degenerate=True,
            notes=("Empty prediction",),
            strategy=cfg.strategy,
        )
    do_log_debug("Intersections found: {!r}", corners)

    extrema = column_extrema(oriseg)
    extent = (t.cast(int, extrema.leftmost), t.cast(int, extrema.rightmost))
    corners, notes = _complete_missing(corners, pair, extent)
    bounds = select_bounds(corners, cfg.strategy)
    if bounds.degenerate:
        notes.append(_clamp_note(bounds.w_left))
    for note in notes:
        do_log_debug(note)
    do_log_debug(
        "Strategy {} selected columns {}..{}",
        cfg.strategy.value,
        bounds.w_left,
        bounds.w_right,
    )
    return RefineOutcome(
        mask=confined(pair, bounds.w_left, bounds.w_right, height),
        corners=corners,
        w_left=bounds.w_left,
        w_right=bounds.w_right,
        degenerate=bounds.degenerate,
        notes=tuple(notes),
        strategy=cfg.strategy,
        pair=pair,
    )
