# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors
"""Functions to help with hashing."""

from __future__ import annotations

import hashlib
import os
import typing as t
from collections.abc import Mapping

import aiofiles

from edema_layerguide.errors import FormatError

if t.TYPE_CHECKING:
    from _typeshed import StrPath

DEFAULT_CHUNKSIZE = 1 << 16


async def file_digest(
    filename: StrPath,
    *,
    algorithm: str = "sha256",
    chunksize: int = DEFAULT_CHUNKSIZE,
) -> str:
    """
    Compute the hex digest of a file.

    :arg filename: The file to hash.
    :kwarg algorithm: The hash algorithm to use.  This must be present in hashlib on this
        system.  The default is 'sha256'
    """
    hasher = hashlib.new(algorithm)
    async with aiofiles.open(filename, "rb") as f:
        while chunk := await f.read(chunksize):
            hasher.update(chunk)
    return hasher.hexdigest()


async def verify_digest(
    filename: StrPath,
    hash_digest: str,
    *,
    algorithm: str = "sha256",
    chunksize: int = DEFAULT_CHUNKSIZE,
) -> bool:
    """
    Verify whether a file has a given digest.

    :returns: True if the hash matches, otherwise False.
    """
    return (
        await file_digest(filename, algorithm=algorithm, chunksize=chunksize)
        == hash_digest
    )


async def verify_digests(
    directory: StrPath,
    digests: Mapping[str, str],
    *,
    log_debug: t.Callable[..., None] | None = None,
) -> None:
    """
    Check every ``name -> sha256`` entry relative to ``directory``.

    Raises ``FormatError`` naming the first file whose content does not match.
    """
    for name, digest in sorted(digests.items()):
        if not await verify_digest(os.path.join(directory, name), digest):
            raise FormatError(f"Digest mismatch for {name}")
        if log_debug:
            log_debug("Verified digest of {}", name)
