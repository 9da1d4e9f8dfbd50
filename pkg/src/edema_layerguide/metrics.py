# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Pixel-level segmentation metrics and their mean/std aggregation.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import typing as t

import numpy as np

from edema_layerguide.errors import EmptyCohort, ValidationError
from edema_layerguide.raster import BinaryMask, as_mask, check_same_shape

METRIC_NAMES: tuple[str, ...] = ("dsc", "iou", "fnr", "fpr")


class RateMode(enum.Enum):
    """
    Denominator of the false positive rate.

    ``gt_normalized`` divides by the ground truth size, ``pred_normalized``
    by the prediction size. The false negative rate always uses the ground
    truth size.
    """

    GT_NORMALIZED = "gt_normalized"
    PRED_NORMALIZED = "pred_normalized"


@dataclasses.dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValidationError("Confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclasses.dataclass(frozen=True)
class MetricSet:
    dsc: float
    iou: float
    fnr: float
    fpr: float
    mode: RateMode = RateMode.GT_NORMALIZED
    empty_gt: bool = False

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


@dataclasses.dataclass(frozen=True)
class MeanStd:
    mean: float
    std: float

    def as_dict(self) -> dict[str, float]:
        return {"mean": self.mean, "std": self.std}


@dataclasses.dataclass(frozen=True)
class AggregateReport:
    dsc: MeanStd
    iou: MeanStd
    fnr: MeanStd
    fpr: MeanStd
    n: int
    exclude_empty_gt: bool

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {name: getattr(self, name).as_dict() for name in METRIC_NAMES}

    @classmethod
    def from_dict(
        cls,
        data: t.Mapping[str, t.Mapping[str, float]],
        n: int,
        exclude_empty_gt: bool = False,
    ) -> AggregateReport:
        stats = {
            name: MeanStd(float(data[name]["mean"]), float(data[name]["std"]))
            for name in METRIC_NAMES
        }
        return cls(n=n, exclude_empty_gt=exclude_empty_gt, **stats)


def confusion(pred: BinaryMask, gt: BinaryMask) -> ConfusionCounts:
    pred = as_mask(pred)
    gt = as_mask(gt)
    check_same_shape(pred, gt, "prediction and ground truth")
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=pred.size - tp - fp - fn)


def _ratio(numerator: int, denominator: int) -> float:
    if denominator == 0:
        return 0.0 if numerator == 0 else 1.0
    return numerator / denominator


def metric_set(
    counts: ConfusionCounts, mode: RateMode = RateMode.GT_NORMALIZED
) -> MetricSet:
    """
    Derive DSC, IoU, FNR and FPR from pixel counts.

    Two empty masks score perfectly. A ratio whose denominator is zero is 0
    when its numerator is zero and 1 otherwise. The ground-truth normalized
    FPR can exceed 1 when the prediction is larger than twice the overlap;
    it is capped at 1.
    """
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    empty_gt = tp + fn == 0
    if tp + fp + fn == 0:
        return MetricSet(1.0, 1.0, 0.0, 0.0, mode=mode, empty_gt=True)
    if mode == RateMode.GT_NORMALIZED:
        fpr = min(_ratio(fp, tp + fn), 1.0)
    else:
        fpr = _ratio(fp, tp + fp)
    return MetricSet(
        dsc=2 * tp / (2 * tp + fp + fn),
        iou=tp / (tp + fp + fn),
        fnr=_ratio(fn, tp + fn),
        fpr=fpr,
        mode=mode,
        empty_gt=empty_gt,
    )


def evaluate(
    pred: BinaryMask, gt: BinaryMask, mode: RateMode = RateMode.GT_NORMALIZED
) -> MetricSet:
    return metric_set(confusion(pred, gt), mode)


def _mean_std(values: list[float]) -> MeanStd:
    mean = math.fsum(values) / len(values)
    if len(values) == 1:
        return MeanStd(mean, 0.0)
    variance = math.fsum((value - mean) ** 2 for value in values) / (len(values) - 1)
    return MeanStd(mean, math.sqrt(variance))


def aggregate(
    metric_sets: t.Sequence[MetricSet], exclude_empty_gt: bool = False
) -> AggregateReport:
    """
    Mean and sample standard deviation of every metric.

    Raises ``EmptyCohort`` if no frame is left after optional exclusion of
    frames with empty ground truth.
    """
    cohort = [m for m in metric_sets if not (exclude_empty_gt and m.empty_gt)]
    if not cohort:
        raise EmptyCohort("No frames left to aggregate")
    stats = {
        name: _mean_std([getattr(m, name) for m in cohort]) for name in METRIC_NAMES
    }
    return AggregateReport(
        n=len(cohort), exclude_empty_gt=exclude_empty_gt, **stats
    )


def frame_report(frame_id: str, metrics: MetricSet) -> dict[str, t.Any]:
    return {"id": frame_id, **metrics.as_dict()}


def report_json(
    frames: t.Sequence[tuple[str, MetricSet]],
    mode: RateMode = RateMode.GT_NORMALIZED,
    exclude_empty_gt: bool = False,
) -> dict[str, t.Any]:
    """
    Build the metrics report document for a list of ``(frame id, metrics)``.
    """
    report = aggregate([metrics for _, metrics in frames], exclude_empty_gt)
    return {
        "mode": mode.value,
        "exclude_empty_gt": exclude_empty_gt,
        "n": report.n,
        "frames": [frame_report(frame_id, metrics) for frame_id, metrics in frames],
        "aggregate": report.as_dict(),
    }


def format_percent(stats: MeanStd | t.Mapping[str, float]) -> str:
    if isinstance(stats, MeanStd):
        mean, std = stats.mean, stats.std
    else:
        mean, std = stats["mean"], stats["std"]
    return f"{100 * mean:.2f} ± {100 * std:.2f}"


class Trend(enum.Enum):
    NON_INCREASING = "non-increasing"
    NON_DECREASING = "non-decreasing"
    CONSTANT = "constant"
    MIXED = "mixed"


def trend(values: t.Sequence[float]) -> Trend:
    steps = [b - a for a, b in zip(values, values[1:])]
    if all(step == 0 for step in steps):
        return Trend.CONSTANT
    if all(step <= 0 for step in steps):
        return Trend.NON_INCREASING
    if all(step >= 0 for step in steps):
        return Trend.NON_DECREASING
    return Trend.MIXED


def lr_trend(rows: t.Sequence[tuple[float, AggregateReport]]) -> dict[str, t.Any]:
    """
    Direction of mean FNR and FPR across runs ordered by increasing learning rate.

    ``expected`` is true when FNR does not increase and FPR does not decrease.
    """
    ordered = sorted(rows, key=lambda row: row[0])
    fnr = trend([report.fnr.mean for _, report in ordered])
    fpr = trend([report.fpr.mean for _, report in ordered])
    return {
        "fnr": fnr.value,
        "fpr": fpr.value,
        "expected": fnr in (Trend.NON_INCREASING, Trend.CONSTANT)
        and fpr in (Trend.NON_DECREASING, Trend.CONSTANT),
    }


# From the narrowest band to the widest.
STRATEGY_ORDER: tuple[str, ...] = ("S2", "S3", "S1")


def strategy_trend(rows: t.Mapping[str, AggregateReport]) -> dict[str, t.Any]:
    """
    Direction of mean FNR and FPR across boundary strategies ordered from the
    most conservative to the most aggressive, plus a ranking by mean DSC.

    Labels other than ``S1``, ``S2`` and ``S3`` are ranked but take no part
    in the trend. ``expected`` is true when FNR does not increase and FPR does
    not decrease along that order.
    """
    order = [name for name in STRATEGY_ORDER if name in rows]
    fnr = trend([rows[name].fnr.mean for name in order])
    fpr = trend([rows[name].fpr.mean for name in order])
    return {
        "order": order,
        "fnr": fnr.value,
        "fpr": fpr.value,
        "expected": fnr in (Trend.NON_INCREASING, Trend.CONSTANT)
        and fpr in (Trend.NON_DECREASING, Trend.CONSTANT),
        "ranking": sorted(rows, key=lambda name: -rows[name].dsc.mean),
    }
