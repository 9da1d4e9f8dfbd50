# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

from __future__ import annotations

import pytest

from edema_layerguide.io import read_bytes, read_file, write_bytes, write_file


@pytest.mark.asyncio
async def test_write_bytes(tmp_path):
    raster = b"P5\n2 2\n255\n\xff\x00\x00\xff"
    other = b"P5\n2 2\n255\n\x00\xff\xff\x00"
    path = tmp_path / "mask.pgm"

    assert await write_bytes(path, raster) is True
    assert path.read_bytes() == raster
    # Without a check limit the file is always rewritten.
    assert await write_bytes(path, raster) is True

    assert await write_bytes(path, raster, file_check_content=len(raster) - 1) is True
    assert await write_bytes(path, raster, file_check_content=len(raster)) is False
    assert await write_bytes(path, raster, file_check_content=1 << 20) is False
    assert path.read_bytes() == raster

    assert await write_bytes(path, other, file_check_content=len(raster)) is True
    assert path.read_bytes() == other

    # Different size, same prefix.
    assert await write_bytes(path, other[:-1], file_check_content=len(raster)) is True
    assert path.read_bytes() == other[:-1]

    fresh = tmp_path / "fresh.pgm"
    assert await write_bytes(fresh, raster, file_check_content=len(raster)) is True
    assert await read_bytes(fresh) == raster


@pytest.mark.asyncio
async def test_read_file(tmp_path):
    content = "x,ilm_row,bm_row\n0,1.5,4.0\n1,,4.5\n# ± 0.5 px\n"
    path = tmp_path / "layers.csv"
    path.write_text(content, encoding="utf-8")

    assert await read_file(path) == content
    assert await read_file(str(path)) == content
    assert await read_file(str(path).encode("utf-8")) == content

    path.write_text(content, encoding="utf-16")
    assert await read_file(path, encoding="utf-16") == content


@pytest.mark.asyncio
async def test_write_file(tmp_path):
    content = '{\n  "height": 4,\n  "note": "µm ± 2"\n}\n'
    size = len(content.encode("utf-8"))
    path = tmp_path / "frame.json"

    assert await write_file(path, content) is True
    assert path.read_text(encoding="utf-8") == content
    assert await write_file(path, content, file_check_content=size) is False
    assert await write_file(path, content, file_check_content=size - 1) is True

    changed = content.replace("4", "5")
    assert await write_file(path, changed, file_check_content=size) is True
    assert path.read_text(encoding="utf-8") == changed

    assert await write_file(path, changed, encoding="utf-16") is True
    assert path.read_text(encoding="utf-16") == changed
