# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors
"""I/O helper functions."""

from __future__ import annotations

import os
import typing as t

import aiofiles

if t.TYPE_CHECKING:
    from _typeshed import StrOrBytesPath


async def _has_content(
    filename: StrOrBytesPath, content: bytes, file_check_content: int
) -> bool:
    if file_check_content <= 0 or len(content) > file_check_content:
        return False
    try:
        if os.stat(filename).st_size != len(content):
            return False
        async with aiofiles.open(filename, "rb") as f:
            existing_content = await f.read()
    except FileNotFoundError:
        return False
    return existing_content == content


async def write_bytes(
    filename: StrOrBytesPath,
    content: bytes,
    *,
    file_check_content: int = 0,
) -> bool:
    """
    Write raw bytes to a file.

    :arg filename: The filename to write to.
    :arg content: The content to write to the file.
    :kwarg file_check_content: If > 0 and the file exists and its size in bytes does not exceed this
        value, will read the file and compare it to the content before overwriting.
    :return: ``True`` if the file was actually written.
    """
    if await _has_content(filename, content, file_check_content):
        return False
    async with aiofiles.open(filename, "wb") as f:
        await f.write(content)
    return True


async def write_file(
    filename: StrOrBytesPath,
    content: str,
    *,
    file_check_content: int = 0,
    encoding: str = "utf-8",
) -> bool:
    """
    Write encoded content to file.

    :arg filename: The filename to write to.
    :arg content: The content to write to the file.
    :kwarg file_check_content: See ``write_bytes()``.
    :return: ``True`` if the file was actually written.
    """
    return await write_bytes(
        filename, content.encode(encoding), file_check_content=file_check_content
    )


async def read_bytes(filename: StrOrBytesPath) -> bytes:
    async with aiofiles.open(filename, "rb") as f:
        return await f.read()


async def read_file(filename: StrOrBytesPath, *, encoding: str = "utf-8") -> str:
    """
    Read the file and decode its contents with the given encoding.

    :arg filename: The filename to read from.
    :kwarg encoding: The encoding to use.
    """
    async with aiofiles.open(filename, "r", encoding=encoding) as f:
        content = await f.read()

    return content
