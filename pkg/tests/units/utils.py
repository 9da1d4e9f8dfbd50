# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Utilities
"""

from __future__ import annotations

import numpy as np

from edema_layerguide.layers import LayerCurve


def collect_log(with_debug: bool = True, with_info: bool = True):
    debug = []
    info = []

    def log_debug(msg: str, *args) -> None:
        debug.append((msg, args))

    def log_info(msg: str, *args) -> None:
        info.append((msg, args))

    kwargs = {}
    if with_debug:
        kwargs["log_debug"] = log_debug
    if with_info:
        kwargs["log_info"] = log_info
    return (
        kwargs,
        debug,
        info,
    )


def curve(*rows: float) -> LayerCurve:
    return LayerCurve.from_values(rows)


def envelope_oracle(rows) -> np.ndarray:
    """
    For each column, the largest row over all chords between two input points
    spanning that column (the point itself counts as a degenerate chord).
    """
    rows = [float(r) for r in rows]
    width = len(rows)
    result = np.array(rows)
    for x0 in range(width):
        for x1 in range(x0 + 1, width):
            for x in range(x0 + 1, x1):
                value = (rows[x0] * (x1 - x) + rows[x1] * (x - x0)) / (x1 - x0)
                result[x] = max(result[x], value)
    return result


def _round_half_away(value: float) -> int:
    return int(np.floor(abs(value) + 0.5) * np.sign(value))


def naive_corners(mask, ilm, bm, tolerance: float) -> tuple:
    """
    Corners as ``(top_left, bottom_left, top_right, bottom_right)``, each an
    ``(x, y)`` tuple or None, found by scanning every pixel.
    """
    height, width = mask.shape
    on_ilm = []
    on_bm = []
    for x in range(width):
        top = bottom = None
        for y in range(height):
            if mask[y, x]:
                if top is None:
                    top = y
                bottom = y
        if top is None:
            continue
        if abs(top - ilm[x]) <= tolerance:
            on_ilm.append(x)
        if abs(bottom - bm[x]) <= tolerance:
            on_bm.append(x)

    def corner(columns, rows, index):
        if not columns:
            return None
        x = columns[index]
        return (x, _round_half_away(rows[x]))

    return (
        corner(on_ilm, ilm, 0),
        corner(on_bm, bm, 0),
        corner(on_ilm, ilm, -1),
        corner(on_bm, bm, -1),
    )


def naive_band(ilm, bm, x_left: int, x_right: int, height: int) -> np.ndarray:
    width = len(ilm)
    mask = np.zeros((height, width), dtype=bool)
    for x in range(x_left, x_right + 1):
        top = _round_half_away(ilm[x])
        bottom = _round_half_away(bm[x])
        for y in range(height):
            if top <= y <= bottom:
                mask[y, x] = True
    return mask


def naive_confusion(pred, gt) -> tuple[int, int, int, int]:
    tp = fp = fn = tn = 0
    height, width = pred.shape
    for y in range(height):
        for x in range(width):
            if pred[y, x] and gt[y, x]:
                tp += 1
            elif pred[y, x]:
                fp += 1
            elif gt[y, x]:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def rectangle(height: int, width: int, rows, columns) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    mask[rows[0] : rows[1] + 1, columns[0] : columns[1] + 1] = True
    return mask
