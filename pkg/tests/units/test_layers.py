# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

from __future__ import annotations

import numpy as np
import pytest

from edema_layerguide.errors import (
    BoundsError,
    CurveCrossing,
    RowOutOfRange,
    ValidationError,
    WidthMismatch,
)
from edema_layerguide.layers import (
    LayerCurve,
    LayerPair,
    convex_envelope_bm,
    fill_curve_gaps,
    rasterize_band,
    validate_layers,
)

from .utils import curve, envelope_oracle, naive_band


def test_validate_layers():
    pair = validate_layers(curve(1, 1, 1), curve(4, 4, 4), 6, 3)
    assert pair.ilm == curve(1, 1, 1)
    assert pair.bm == curve(4, 4, 4)
    assert pair.width == 3


VALIDATE_FAIL_DATA = [
    ((1, 5, 1), (4, 4, 4), 6, 3, CurveCrossing, 1),
    ((1, 1, 1), (4, 4), 6, 3, WidthMismatch, None),
    ((1, 1), (4, 4), 6, 3, WidthMismatch, None),
    ((1, -0.5, 1), (4, 4, 4), 6, 3, RowOutOfRange, 1),
    ((1, 1, 1), (4, 4, 5.5), 6, 3, RowOutOfRange, 2),
    ((1, 1, 1), (4, float("nan"), 4), 6, 3, RowOutOfRange, 1),
]


@pytest.mark.parametrize(
    "ilm, bm, height, width, error, column", VALIDATE_FAIL_DATA
)
def test_validate_layers_fail(ilm, bm, height, width, error, column):
    with pytest.raises(error) as exc:
        validate_layers(curve(*ilm), curve(*bm), height, width)
    if column is not None:
        assert exc.value.column == column


def test_layer_curve():
    layer = curve(1.2, 2.5, 3.5)
    assert layer.width == 3
    assert layer.rounded().tolist() == [1, 3, 4]
    with pytest.raises(ValueError):
        layer.rows[0] = 7
    with pytest.raises(ValidationError):
        LayerCurve.from_values([])
    assert layer == curve(1.2, 2.5, 3.5)
    assert layer != curve(1.2, 2.5, 3.0)


FILL_DATA = [
    ([1.0, None, 3.0], [1.0, 2.0, 3.0]),
    ([None, None, 4.0, None], [4.0, 4.0, 4.0, 4.0]),
    ([2.0, None, None, 5.0, None], [2.0, 3.0, 4.0, 5.0, 5.0]),
    ([1.0, float("nan"), 2.0], [1.0, 1.5, 2.0]),
    ([7.0], [7.0]),
]


@pytest.mark.parametrize("values, expected", FILL_DATA)
def test_fill_curve_gaps(values, expected):
    assert fill_curve_gaps(values).rows.tolist() == expected


def test_fill_curve_gaps_fail():
    with pytest.raises(ValidationError, match="^Cannot fill"):
        fill_curve_gaps([None, None])


ENVELOPE_DATA = [
    ([10, 8, 10, 10, 10], [10, 10, 10, 10, 10]),
    ([10, 12, 10], [10, 12, 10]),
    ([5, 6, 7, 8, 9], [5, 6, 7, 8, 9]),
    ([4], [4]),
    ([4, 1], [4, 1]),
    ([10, 10, 6, 6, 10, 10], [10, 10, 10, 10, 10, 10]),
    ([10, 9, 8, 7, 12], [10, 10.5, 11, 11.5, 12]),
]


@pytest.mark.parametrize("rows, expected", ENVELOPE_DATA)
def test_convex_envelope_bm(rows, expected):
    assert convex_envelope_bm(curve(*rows)).rows.tolist() == expected


def test_convex_envelope_bm_oracle():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        width = int(rng.integers(1, 41))
        rows = rng.integers(0, 64, size=width).astype(np.float64)
        envelope = convex_envelope_bm(LayerCurve(rows)).rows
        assert envelope.tolist() == envelope_oracle(rows).tolist()
        assert (envelope >= rows).all()
        again = convex_envelope_bm(LayerCurve(envelope)).rows
        np.testing.assert_allclose(again, envelope, rtol=0, atol=1e-9)


def test_convex_envelope_bm_fractional():
    rng = np.random.default_rng(7)
    for _ in range(200):
        width = int(rng.integers(3, 65))
        rows = rng.uniform(0, 100, size=width)
        envelope = convex_envelope_bm(LayerCurve(rows)).rows
        np.testing.assert_allclose(envelope, envelope_oracle(rows), rtol=0, atol=1e-9)
        assert (envelope >= rows - 1e-9).all()
        # Breakpoints sit on input points.
        slopes = np.diff(envelope)
        kinks = np.flatnonzero(np.abs(np.diff(slopes)) > 1e-9) + 1
        assert np.allclose(envelope[kinks], rows[kinks])
        assert envelope[0] == rows[0]
        assert envelope[-1] == rows[-1]


def test_convex_envelope_bm_keeps_input():
    layer = curve(10, 8, 10)
    convex_envelope_bm(layer)
    assert layer.rows.tolist() == [10, 8, 10]


def test_rasterize_band():
    pair = LayerPair(curve(1, 1, 1, 1), curve(3, 3, 3, 3))
    mask = rasterize_band(pair, 1, 2, 5)
    assert mask.shape == (5, 4)
    assert mask.sum() == 6
    assert mask[1:4, 1:3].all()

    pair = LayerPair(curve(2, 0), curve(2, 0))
    mask = rasterize_band(pair, 0, 0, 4)
    assert mask.sum() == 1
    assert mask[2, 0]


@pytest.mark.parametrize("x_left, x_right", [(2, 1), (-1, 1), (0, 4)])
def test_rasterize_band_fail(x_left, x_right):
    pair = LayerPair(curve(1, 1, 1, 1), curve(3, 3, 3, 3))
    with pytest.raises(BoundsError):
        rasterize_band(pair, x_left, x_right, 5)


def test_rasterize_band_oracle():
    rng = np.random.default_rng(3)
    for _ in range(500):
        height = int(rng.integers(2, 20))
        width = int(rng.integers(1, 20))
        a = rng.uniform(0, height - 1, size=width)
        b = rng.uniform(0, height - 1, size=width)
        # Half-integers exercise the tie rule.
        ties = rng.random(width) < 0.3
        a[ties] = np.floor(a[ties]) + 0.5
        ilm = np.minimum(a, b)
        bm = np.maximum(a, b)
        x_left, x_right = sorted(int(v) for v in rng.integers(0, width, size=2))
        pair = LayerPair(LayerCurve(ilm), LayerCurve(bm))
        mask = rasterize_band(pair, x_left, x_right, height)
        assert np.array_equal(mask, naive_band(ilm, bm, x_left, x_right, height))
        expected = sum(
            int(pair.bm.rounded()[x]) - int(pair.ilm.rounded()[x]) + 1
            for x in range(x_left, x_right + 1)
        )
        assert mask.sum() == expected
