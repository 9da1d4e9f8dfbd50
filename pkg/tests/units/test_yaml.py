# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

from __future__ import annotations

import pytest

from edema_layerguide.errors import ConfigError
from edema_layerguide.yaml import (
    load_option_file,
    load_schedule_file,
    load_yaml_bytes,
    load_yaml_file,
)

LOAD_YAML_DATA = [
    (
        """
strategy: S1
tolerance-px: 2
""",
        {
            "strategy": "S1",
            "tolerance-px": 2,
        },
    ),
    (
        """
- [dx_skew]
- []
""",
        [["dx_skew"], []],
    ),
]


@pytest.mark.parametrize(
    "content, expected",
    LOAD_YAML_DATA,
)
def test_load_yaml(content, expected, tmp_path):
    assert load_yaml_bytes(content.encode("utf-8")) == expected

    file = tmp_path / "test.yaml"
    file.write_text(content, encoding="utf-8")
    assert load_yaml_file(file) == expected
    assert load_yaml_file(str(file)) == expected


def test_load_yaml_fail():
    with pytest.raises(ConfigError, match="^Cannot parse YAML"):
        load_yaml_bytes(b"foo: [bar")


OPTION_DATA = [
    ("", {}),
    ("lr: 5.0e-5\n", {"lr": 5e-5}),
    (
        "tolerance-px: 3\nexclude-empty-gt: true\nstrategy: S3\n",
        {"tolerance_px": 3, "exclude_empty_gt": True, "strategy": "S3"},
    ),
]


@pytest.mark.parametrize("content, expected", OPTION_DATA)
def test_load_option_file(content, expected, tmp_path):
    file = tmp_path / "options.yaml"
    file.write_text(content, encoding="utf-8")
    assert load_option_file(file) == expected


def test_load_option_file_fail(tmp_path):
    file = tmp_path / "options.yaml"
    file.write_text("- lr\n- 0.1\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="must contain a mapping of options"):
        load_option_file(file)
    with pytest.raises(FileNotFoundError):
        load_option_file(tmp_path / "missing.yaml")


SCHEDULE_DATA = [
    ("- [dx_skew]\n", [["dx_skew"]]),
    (
        "- []\n- bm_elevation\n- ~\n- [top_undershoot, bottom_deviation]\n",
        [[], ["bm_elevation"], [], ["top_undershoot", "bottom_deviation"]],
    ),
]


@pytest.mark.parametrize("content, expected", SCHEDULE_DATA)
def test_load_schedule_file(content, expected, tmp_path):
    file = tmp_path / "schedule.yaml"
    file.write_text(content, encoding="utf-8")
    assert load_schedule_file(file) == expected


SCHEDULE_FAIL_DATA = [
    ("", "must contain a non-empty list of flag lists"),
    ("[]\n", "must contain a non-empty list of flag lists"),
    ("dx_skew: true\n", "must contain a non-empty list of flag lists"),
    ("- [dx_skew]\n- [1, 2]\n", "^Schedule entry 1 must be a list of flag names$"),
    ("- {a: b}\n", "^Schedule entry 0 must be a list of flag names$"),
]


@pytest.mark.parametrize("content, message", SCHEDULE_FAIL_DATA)
def test_load_schedule_file_fail(content, message, tmp_path):
    file = tmp_path / "schedule.yaml"
    file.write_text(content, encoding="utf-8")
    with pytest.raises(ConfigError, match=message):
        load_schedule_file(file)
