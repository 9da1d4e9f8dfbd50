# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Layer-structure-guided refinement and online test-time adaptation for
edema area segmentation in SD-OCT B-scans.
"""

from __future__ import annotations

__version__ = "0.1.0.post0"

__all__ = ("__version__",)
