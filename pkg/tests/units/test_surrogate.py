# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

from __future__ import annotations

import numpy as np
import pytest

from edema_layerguide.errors import ConfigError
from edema_layerguide.raster import Connectivity, largest_component
from edema_layerguide.surrogate import (
    SurrogateConfig,
    candidate_mask,
    hull_fill,
    residual_to_oriseg,
)

from .utils import rectangle


def test_surrogate_config():
    cfg = SurrogateConfig(connectivity=4)
    assert cfg.connectivity is Connectivity.FOUR
    assert SurrogateConfig().threshold == 0.5
    with pytest.raises(ConfigError):
        SurrogateConfig(threshold=float("nan"))
    with pytest.raises(ValueError):
        SurrogateConfig(connectivity=6)


def test_residual_to_oriseg_empty():
    mask = residual_to_oriseg(np.zeros((5, 5)))
    assert mask.shape == (5, 5)
    assert not mask.any()


def test_residual_to_oriseg_block():
    residual = np.zeros((5, 5))
    residual[1:3, 1:3] = 1.0
    assert np.array_equal(residual_to_oriseg(residual), residual >= 0.5)


def test_residual_to_oriseg_largest_blob():
    residual = np.zeros((10, 10))
    residual[0:2, 0:2] = 0.9
    residual[5:8, 5:8] = 0.7
    expected = rectangle(10, 10, (5, 7), (5, 7))
    assert np.array_equal(residual_to_oriseg(residual), expected)


def test_residual_to_oriseg_hull():
    residual = np.zeros((6, 6))
    # An L shape; its hull adds the missing corner triangle.
    residual[1:5, 1] = 1.0
    residual[4, 1:5] = 1.0
    with_hull = residual_to_oriseg(residual)
    without_hull = residual_to_oriseg(residual, SurrogateConfig(apply_hull=False))
    assert np.array_equal(without_hull, residual >= 0.5)
    assert with_hull.sum() == 10
    assert with_hull[3, 2] and with_hull[2, 2] and not with_hull[1, 3]
    assert not (without_hull & ~with_hull).any()


def test_residual_to_oriseg_connectivity():
    residual = np.zeros((5, 5))
    residual[0, 0] = residual[1, 1] = residual[2, 2] = 1.0
    residual[4, 3] = residual[4, 4] = 1.0
    four = residual_to_oriseg(residual, SurrogateConfig(connectivity=4, apply_hull=False))
    eight = residual_to_oriseg(residual, SurrogateConfig(connectivity=8, apply_hull=False))
    assert four.sum() == 2 and four[4, 3] and four[4, 4]
    assert eight.sum() == 3 and eight[0, 0] and eight[2, 2]


def test_surrogate_properties():
    rng = np.random.default_rng(9)
    for _ in range(100):
        residual = rng.random((16, 16))
        low = candidate_mask(residual, SurrogateConfig(threshold=0.4))
        high = candidate_mask(residual, SurrogateConfig(threshold=0.7))
        assert not (high & ~low).any()

        cfg = SurrogateConfig(apply_hull=False)
        component = residual_to_oriseg(residual, cfg)
        if not component.any():
            continue
        assert np.array_equal(component, largest_component(residual >= 0.5))
        filled = residual_to_oriseg(residual)
        assert np.array_equal(filled, hull_fill(component))
        assert not (component & ~filled).any()
        assert np.array_equal(filled, residual_to_oriseg(residual.copy()))
