# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Coarse edema prediction from a lesion-evidence map.

Stands in for the residual post-processing of the adversarial baseline:
threshold, keep the largest connected component, optionally fill its convex
hull. Externally produced masks bypass this module entirely.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from edema_layerguide.errors import ConfigError
from edema_layerguide.raster import (
    BinaryMask,
    Connectivity,
    Grid,
    PixelPoint,
    as_grid,
    column_extrema,
    convex_hull,
    fill_polygon,
    largest_component,
)


@dataclasses.dataclass(frozen=True)
class SurrogateConfig:
    threshold: float = 0.5
    connectivity: Connectivity = Connectivity.EIGHT
    apply_hull: bool = True

    def __post_init__(self) -> None:
        if not math.isfinite(self.threshold):
            raise ConfigError(f"Threshold must be finite, got {self.threshold!r}")
        object.__setattr__(self, "connectivity", Connectivity(self.connectivity))


def candidate_mask(residual: Grid, cfg: SurrogateConfig) -> BinaryMask:
    return as_grid(residual) >= cfg.threshold


def hull_fill(component: BinaryMask) -> BinaryMask:
    """
    Fill the convex hull of a mask's foreground.

    The topmost and bottommost pixel of every column carry all hull vertices,
    so only those are handed to the hull.
    """
    extrema = column_extrema(component)
    points: list[PixelPoint] = []
    for x in np.flatnonzero(extrema.occupied):
        top, bottom = extrema[int(x)]  # type: ignore[misc]
        points.append(PixelPoint(int(x), top))
        if bottom != top:
            points.append(PixelPoint(int(x), bottom))
    height, width = component.shape
    return fill_polygon(convex_hull(points), height, width)


def residual_to_oriseg(
    residual: Grid, cfg: SurrogateConfig | None = None
) -> BinaryMask:
    """
    Turn a lesion-evidence map into the coarse prediction.

    An evidence map without any value at or above the threshold yields an
    empty mask.
    """
    cfg = cfg or SurrogateConfig()
    candidates = candidate_mask(residual, cfg)
    if not candidates.any():
        return candidates
    component = largest_component(candidates, cfg.connectivity)
    if not cfg.apply_hull:
        return component
    return hull_fill(component)
