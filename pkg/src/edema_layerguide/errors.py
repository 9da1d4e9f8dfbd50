# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Exceptions.
"""

from __future__ import annotations


class LayerGuideError(Exception):
    pass


class ValidationError(LayerGuideError):
    """
    Input or precondition failure. The command line maps these to exit code 2.
    """


class FormatError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class EmptyMask(ValidationError):
    pass


class EmptyPrediction(ValidationError):
    pass


class EmptyCohort(ValidationError):
    pass


class BoundsError(ValidationError):
    pass


class IncompleteCorners(ValidationError):
    pass


class WidthMismatch(ValidationError):
    pass


class _ColumnError(ValidationError):
    def __init__(self, column: int, message: str):
        super().__init__(message)
        self.column = column


class RowOutOfRange(_ColumnError):
    def __init__(self, column: int, detail: str = ""):
        message = f"Row out of range in column {column}"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(column, message)


class CurveCrossing(_ColumnError):
    def __init__(self, column: int):
        super().__init__(column, f"ILM lies below BM in column {column}")


class SpecInfeasible(ValidationError):
    def __init__(self, message: str, frame_index: int | None = None):
        if frame_index is not None:
            message = f"Frame {frame_index}: {message}"
        super().__init__(message)
        self.frame_index = frame_index
