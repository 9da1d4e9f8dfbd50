# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Reproducible per-frame random stream.

The stream is Philox-4x64 with 10 rounds, counter starting at zero, keyed with
the two 64-bit words ``(seed, frame_index)``. A uniform draw in ``[0, 1)``
takes one raw 64-bit output ``r`` and returns ``(r >> 11) * 2**-53``. An
integer in ``low..high`` is ``low + floor(u * (high - low + 1))`` for one such
uniform ``u``. No other transformation (and no Gaussian sampling) is used, so
the format is fully determined by the key and the order of draws.
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

_UINT64_LIMIT = 1 << 64
_SCALE = 2.0**-53


def to_integer(u: float, low: int, high: int) -> int:
    if high < low:
        raise ValueError(f"Empty range {low}..{high}")
    span = high - low + 1
    return low + min(int(u * span), span - 1)


class FrameStream:
    def __init__(self, seed: int, frame_index: int):
        for name, value in (("seed", seed), ("frame index", frame_index)):
            if not 0 <= value < _UINT64_LIMIT:
                raise ValueError(f"The {name} must be an unsigned 64-bit integer")
        self._bitgen = np.random.Philox(
            key=np.array([seed, frame_index], dtype=np.uint64)
        )

    def uniforms(self, count: int) -> npt.NDArray[np.float64]:
        raw = np.asarray(self._bitgen.random_raw(count), dtype=np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * _SCALE
