# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Online, single-pass test-time adaptation.

Every frame is predicted once, refined into a layer-confined mask, and then
used as the pseudo label for exactly one gradient step. Parameters carry over
from frame to frame.
"""

from __future__ import annotations

import dataclasses
import math
import typing as t

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from edema_layerguide.errors import ConfigError, ValidationError
from edema_layerguide.layers import LayerCurve
from edema_layerguide.raster import (
    BinaryMask,
    Grid,
    as_grid,
    as_mask,
    check_same_shape,
)
from edema_layerguide.refine import (
    BoundaryStrategy,
    RefineConfig,
    RefineOutcome,
    refine,
)
from edema_layerguide.surrogate import SurrogateConfig, residual_to_oriseg

EPSILON = 1e-7

DEFAULT_WEIGHTS: tuple[float, float, float] = (-2.0, -0.05, 10.0)


class TrainableSegmenter(t.Protocol):
    """
    A segmenter that can be adapted one gradient step at a time.

    ``predict`` must be deterministic for fixed parameters. ``step`` returns
    the loss before the update and must leave the parameters untouched when
    ``lr`` is zero.
    """

    def predict(self, image: Grid, residual: Grid) -> Grid: ...

    def step(
        self, image: Grid, residual: Grid, pseudo_label: BinaryMask, lr: float
    ) -> float: ...


@dataclasses.dataclass(frozen=True)
class TtaConfig:
    lr: float = 5e-5
    iterations_per_sample: int = 1
    strategy_for_pseudo_labels: BoundaryStrategy = BoundaryStrategy.S1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lr) and 0 < self.lr < 1):
            raise ConfigError(f"Learning rate must lie in (0, 1), got {self.lr!r}")
        if self.iterations_per_sample != 1:
            raise ConfigError("Exactly one iteration per sample is supported")
        object.__setattr__(
            self,
            "strategy_for_pseudo_labels",
            BoundaryStrategy.parse(self.strategy_for_pseudo_labels),
        )


def bce_loss(pred: Grid, label: BinaryMask) -> float:
    """
    Pixel-mean binary cross-entropy, with predictions clamped to
    ``[EPSILON, 1 - EPSILON]``.
    """
    pred = as_grid(pred)
    label = as_mask(label)
    check_same_shape(pred, label, "prediction and label")
    p = np.clip(pred, EPSILON, 1 - EPSILON)
    return float(np.mean(-np.where(label, np.log(p), np.log1p(-p))))


def _check_inputs(image: Grid, residual: Grid) -> tuple[Grid, Grid]:
    image = as_grid(image)
    residual = as_grid(residual)
    check_same_shape(image, residual, "image and residual")
    return image, residual


@dataclasses.dataclass(eq=False)
class LogisticPixelModel:
    """
    Per-pixel logistic model over the features ``(1, image, residual)``.

    Reference implementation of ``TrainableSegmenter``.
    """

    weights: npt.NDArray[np.float64] = dataclasses.field(
        default_factory=lambda: np.array(DEFAULT_WEIGHTS)
    )

    def __post_init__(self) -> None:
        weights = np.array(self.weights, dtype=np.float64)
        if weights.shape != (3,) or not np.isfinite(weights).all():
            raise ValidationError("Model weights must be three finite numbers")
        self.weights = weights

    def copy(self) -> LogisticPixelModel:
        return LogisticPixelModel(self.weights.copy())

    def logits(self, image: Grid, residual: Grid) -> Grid:
        image, residual = _check_inputs(image, residual)
        bias, w_image, w_residual = self.weights
        return bias + w_image * image + w_residual * residual

    def predict(self, image: Grid, residual: Grid) -> Grid:
        return expit(self.logits(image, residual))

    def gradient(
        self, image: Grid, residual: Grid, label: BinaryMask
    ) -> npt.NDArray[np.float64]:
        """
        Gradient of the mean cross-entropy with respect to the weights.
        """
        image, residual = _check_inputs(image, residual)
        label = as_mask(label)
        check_same_shape(image, label, "image and label")
        diff = self.predict(image, residual) - label
        return np.array(
            [np.mean(diff), np.mean(diff * image), np.mean(diff * residual)]
        )

    def step(
        self, image: Grid, residual: Grid, pseudo_label: BinaryMask, lr: float
    ) -> float:
        loss, updated = logistic_step(self, image, residual, pseudo_label, lr)
        self.weights = updated.weights
        return loss


def logistic_step(
    model: LogisticPixelModel,
    image: Grid,
    residual: Grid,
    label: BinaryMask,
    lr: float,
) -> tuple[float, LogisticPixelModel]:
    """
    One gradient descent step. Returns the loss before the update and the
    updated model; ``model`` itself is not modified.
    """
    loss = bce_loss(model.predict(image, residual), label)
    if lr == 0:
        return loss, model.copy()
    gradient = model.gradient(image, residual, label)
    return loss, LogisticPixelModel(model.weights - lr * gradient)


def predicted_oriseg(
    model: TrainableSegmenter,
    image: Grid,
    residual: Grid,
    surrogate_cfg: SurrogateConfig | None = None,
) -> BinaryMask:
    """
    Coarse mask from the model's current probability map.

    This is the prediction the online loop refines for each frame, so running
    it with the initial model reproduces the loop without updates.
    """
    image, residual = _check_inputs(image, residual)
    return residual_to_oriseg(model.predict(image, residual), surrogate_cfg)


@dataclasses.dataclass(frozen=True, eq=False)
class Frame:
    image: Grid
    residual: Grid
    ilm: LayerCurve
    bm: LayerCurve
    frame_id: str = ""


@dataclasses.dataclass(frozen=True)
class FrameRecord:
    index: int
    frame_id: str
    loss: float | None
    skipped: bool
    degenerate: bool


@dataclasses.dataclass(frozen=True, eq=False)
class OnlineRun:
    outcomes: tuple[RefineOutcome, ...]
    records: tuple[FrameRecord, ...]

    @property
    def losses(self) -> list[float | None]:
        return [record.loss for record in self.records]

    @property
    def skipped(self) -> list[int]:
        return [record.index for record in self.records if record.skipped]


def run_online(
    model: TrainableSegmenter,
    frames: t.Iterable[Frame],
    refine_cfg: RefineConfig,
    tta_cfg: TtaConfig | None,
    surrogate_cfg: SurrogateConfig | None = None,
    *,
    log_debug: t.Callable[..., None] | None = None,
    log_info: t.Callable[..., None] | None = None,
) -> OnlineRun:
    """
    Run the online adaptation loop over ``frames`` in order.

    Each returned outcome is the refined prediction made before that frame's
    update. ``tta_cfg=None`` disables updates, which makes the loop
    equivalent to refining every frame with the initial model. A frame whose
    pseudo label is degenerate is not used for an update.
    """

    def do_log_info(msg: str, *args: t.Any) -> None:
        if log_info:
            log_info(msg, *args)

    outcomes: list[RefineOutcome] = []
    records: list[FrameRecord] = []
    for index, frame in enumerate(frames):
        frame_id = frame.frame_id or str(index)
        image, residual = _check_inputs(frame.image, frame.residual)
        height, width = image.shape
        oriseg = predicted_oriseg(model, image, residual, surrogate_cfg)
        outcome = refine(
            oriseg, frame.ilm, frame.bm, refine_cfg, height, width, log_debug=log_debug
        )
        outcomes.append(outcome)

        loss: float | None = None
        skipped = False
        if tta_cfg is not None:
            pseudo = outcome.with_strategy(tta_cfg.strategy_for_pseudo_labels)
            if pseudo.degenerate:
                skipped = True
                do_log_info("Frame {}: degenerate pseudo label, update skipped", frame_id)
            else:
                loss = model.step(image, residual, pseudo.mask, tta_cfg.lr)
                do_log_info("Frame {}: loss {}", frame_id, loss)
        records.append(
            FrameRecord(
                index=index,
                frame_id=frame_id,
                loss=loss,
                skipped=skipped,
                degenerate=outcome.degenerate,
            )
        )

    if not outcomes:
        raise ValidationError("No frames to adapt on")
    return OnlineRun(outcomes=tuple(outcomes), records=tuple(records))
