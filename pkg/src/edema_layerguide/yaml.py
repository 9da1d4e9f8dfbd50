# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
YAML handling for option and schedule files.
"""

from __future__ import annotations

import typing as t

import yaml

from edema_layerguide.errors import ConfigError

_SafeLoader: t.Any
try:
    # use C version if possible for speedup
    from yaml import CSafeLoader as _SafeLoader
except ImportError:  # pragma: no cover
    from yaml import SafeLoader as _SafeLoader

if t.TYPE_CHECKING:
    from _typeshed import StrOrBytesPath


def load_yaml_bytes(data: bytes) -> t.Any:
    """
    Load and parse YAML from given bytes.
    """
    try:
        return yaml.load(data, Loader=_SafeLoader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Cannot parse YAML: {exc}") from exc


def load_yaml_file(path: StrOrBytesPath) -> t.Any:
    """
    Load and parse YAML file ``path``.
    """
    with open(path, "rb") as stream:
        return load_yaml_bytes(stream.read())


def load_option_file(path: StrOrBytesPath) -> dict[str, t.Any]:
    """
    Load a mapping of long option names to default values.

    Dashes in keys are normalized to underscores.
    """
    data = load_yaml_file(path)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path!r} must contain a mapping of options")
    return {str(key).replace("-", "_"): value for key, value in data.items()}


def load_schedule_file(path: StrOrBytesPath) -> list[list[str]]:
    """
    Load a per-frame issue schedule: a list whose entries are lists of flag names.
    """
    data = load_yaml_file(path)
    if not isinstance(data, list) or not data:
        raise ConfigError(f"{path!r} must contain a non-empty list of flag lists")
    schedule: list[list[str]] = []
    for index, entry in enumerate(data):
        if entry is None:
            entry = []
        if isinstance(entry, str):
            entry = [entry]
        if not isinstance(entry, list) or not all(isinstance(f, str) for f in entry):
            raise ConfigError(f"Schedule entry {index} must be a list of flag names")
        schedule.append(list(entry))
    return schedule
