# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
On-disk formats.

* Masks: binary PGM (``P5``), maxval 255, one byte per pixel, row-major;
  any non-zero byte is foreground, writers emit 255.
* Grids: raw little-endian float32 values, row-major, plus a JSON sidecar
  ``{"height": H, "width": W}`` with the same basename and extension ``.json``.
* Layer curves: UTF-8 CSV with header ``x,ilm_row,bm_row`` and one line per
  column; an empty field marks a missing row, filled by interpolation on load.
* JSON documents: sorted keys, two-space indent, trailing newline.

The ``encode_*``/``decode_*`` functions are pure; the ``load_*``/``store_*``
wrappers do the file access.
"""

from __future__ import annotations

import json
import math
import os
import typing as t

import numpy as np

from edema_layerguide.errors import FormatError, ValidationError
from edema_layerguide.io import read_bytes, read_file, write_bytes, write_file
from edema_layerguide.layers import LayerCurve, fill_curve_gaps
from edema_layerguide.raster import BinaryMask, Grid, as_grid, as_mask

if t.TYPE_CHECKING:
    from _typeshed import StrPath

# Outputs up to this size are compared before being rewritten.
FILE_CHECK_CONTENT = 1 << 26

LAYER_HEADER = "x,ilm_row,bm_row"


def _json_default(value: t.Any) -> t.Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def canonical_json(content: t.Any) -> str:
    return json.dumps(content, sort_keys=True, indent=2, default=_json_default) + "\n"


def encode_pgm(mask: BinaryMask) -> bytes:
    mask = as_mask(mask)
    height, width = mask.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    return header + np.where(mask, 255, 0).astype(np.uint8).tobytes()


def _pgm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("Truncated PGM header")
        tokens.append(data[start:pos])
    # Exactly one whitespace byte separates the header from the raster.
    return tokens, pos + 1


def decode_pgm(data: bytes) -> BinaryMask:
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise FormatError(f"Unsupported PGM magic {tokens[0]!r}")
    try:
        width, height, maxval = (int(token) for token in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"Malformed PGM header: {exc}") from exc
    if width < 1 or height < 1 or not 1 <= maxval <= 255:
        raise FormatError(f"Invalid PGM header values {width}x{height}, maxval {maxval}")
    raster = data[offset:]
    if len(raster) != width * height:
        raise FormatError(
            f"PGM raster has {len(raster)} bytes, expected {width * height}"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width) != 0


def encode_grid(grid: Grid) -> tuple[bytes, str]:
    grid = as_grid(grid)
    height, width = grid.shape
    sidecar = canonical_json({"height": height, "width": width})
    return grid.astype("<f4").tobytes(), sidecar


def decode_grid(data: bytes, sidecar: str) -> Grid:
    try:
        header = json.loads(sidecar)
        height = int(header["height"])
        width = int(header["width"])
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"Malformed grid sidecar: {exc}") from exc
    if height < 1 or width < 1:
        raise FormatError(f"Invalid grid dimensions {height}x{width}")
    if len(data) != 4 * height * width:
        raise FormatError(
            f"Grid data has {len(data)} bytes, expected {4 * height * width}"
        )
    values = np.frombuffer(data, dtype="<f4").reshape(height, width)
    try:
        return as_grid(values.astype(np.float64))
    except ValidationError as exc:
        raise FormatError(str(exc)) from exc


def _format_row(value: float) -> str:
    return repr(float(value))


def encode_layers(ilm: LayerCurve, bm: LayerCurve) -> str:
    if ilm.width != bm.width:
        raise ValidationError("ILM and BM curves differ in width")
    lines = [LAYER_HEADER]
    for x, (top, bottom) in enumerate(zip(ilm.rows, bm.rows)):
        lines.append(f"{x},{_format_row(top)},{_format_row(bottom)}")
    return "\n".join(lines) + "\n"


def _parse_row(field: str, line_no: int) -> float | None:
    field = field.strip()
    if not field:
        return None
    try:
        value = float(field)
    except ValueError:
        raise FormatError(f"Line {line_no}: {field!r} is not a number") from None
    if not math.isfinite(value):
        raise FormatError(f"Line {line_no}: row must be finite")
    return value


def decode_layers(text: str) -> tuple[LayerCurve, LayerCurve]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != LAYER_HEADER:
        raise FormatError(f"Layer file must start with {LAYER_HEADER!r}")
    ilm: list[float | None] = []
    bm: list[float | None] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != 3:
            raise FormatError(f"Line {line_no}: expected 3 fields, got {len(fields)}")
        try:
            x = int(fields[0])
        except ValueError:
            raise FormatError(f"Line {line_no}: bad column {fields[0]!r}") from None
        if x != len(ilm):
            raise FormatError(f"Line {line_no}: expected column {len(ilm)}, got {x}")
        ilm.append(_parse_row(fields[1], line_no))
        bm.append(_parse_row(fields[2], line_no))
    if not ilm:
        raise FormatError("Layer file has no columns")
    try:
        return fill_curve_gaps(ilm), fill_curve_gaps(bm)
    except ValidationError as exc:
        raise FormatError(str(exc)) from exc


def sidecar_path(path: StrPath) -> str:
    return os.path.splitext(os.fspath(path))[0] + ".json"


def _in_file(path: StrPath, exc: FormatError) -> FormatError:
    return FormatError(f"{os.fspath(path)}: {exc}")


async def _read_text(path: StrPath) -> str:
    try:
        return await read_file(path)
    except UnicodeDecodeError as exc:
        raise FormatError(f"{os.fspath(path)}: not UTF-8 text: {exc.reason}") from exc


async def load_mask(path: StrPath) -> BinaryMask:
    try:
        return decode_pgm(await read_bytes(path))
    except FormatError as exc:
        raise _in_file(path, exc) from exc


async def store_mask(path: StrPath, mask: BinaryMask) -> bool:
    return await write_bytes(
        path, encode_pgm(mask), file_check_content=FILE_CHECK_CONTENT
    )


async def load_grid(path: StrPath) -> Grid:
    data = await read_bytes(path)
    sidecar = await _read_text(sidecar_path(path))
    try:
        return decode_grid(data, sidecar)
    except FormatError as exc:
        raise _in_file(path, exc) from exc


async def store_grid(path: StrPath, grid: Grid) -> bool:
    data, sidecar = encode_grid(grid)
    wrote_data = await write_bytes(path, data, file_check_content=FILE_CHECK_CONTENT)
    wrote_sidecar = await write_file(
        sidecar_path(path), sidecar, file_check_content=FILE_CHECK_CONTENT
    )
    return wrote_data or wrote_sidecar


async def load_layers(path: StrPath) -> tuple[LayerCurve, LayerCurve]:
    text = await _read_text(path)
    try:
        return decode_layers(text)
    except FormatError as exc:
        raise _in_file(path, exc) from exc


async def store_layers(path: StrPath, ilm: LayerCurve, bm: LayerCurve) -> bool:
    return await write_file(
        path, encode_layers(ilm, bm), file_check_content=FILE_CHECK_CONTENT
    )


async def load_json(path: StrPath) -> t.Any:
    text = await _read_text(path)
    try:
        return json.loads(text)
    except ValueError as exc:
        raise FormatError(f"{os.fspath(path)}: invalid JSON: {exc}") from exc


async def store_json(path: StrPath, content: t.Any) -> bool:
    return await write_file(
        path, canonical_json(content), file_check_content=FILE_CHECK_CONTENT
    )
