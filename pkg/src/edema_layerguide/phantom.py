# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Synthetic B-scan phantoms with known edema ground truth.

A frame is a layered intensity image with a smooth ILM above a convex BM, an
edema area spanning a column interval of the full ILM-BM band, and a
lesion-evidence map whose thresholded support is the deliberately flawed
coarse prediction. Issue flags inject the failure modes the refinement is
meant to repair.

Frames are pure functions of ``(spec, frame_index)``; see ``_random`` for the
random stream.
"""

from __future__ import annotations

import asyncio
import dataclasses
import enum
import math
import os
import re
import typing as t

import numpy as np

from edema_layerguide._random import FrameStream, to_integer
from edema_layerguide.errors import (
    ConfigError,
    CurveCrossing,
    FormatError,
    RowOutOfRange,
    SpecInfeasible,
)
from edema_layerguide.formats import (
    load_grid,
    load_json,
    load_layers,
    load_mask,
    store_grid,
    store_json,
    store_layers,
    store_mask,
)
from edema_layerguide.hashing import file_digest, verify_digests
from edema_layerguide.layers import (
    LayerCurve,
    LayerPair,
    convex_envelope_bm,
    rasterize_band,
    validate_layers,
)
from edema_layerguide.raster import BinaryMask, Grid
from edema_layerguide.tta import Frame

if t.TYPE_CHECKING:
    from _typeshed import StrPath

MANIFEST_NAME = "manifest.json"

BACKGROUND_INTENSITY = 30.0
TISSUE_INTENSITY = 110.0
CHOROID_INTENSITY = 80.0
EDEMA_INTENSITY = 60.0

EVIDENCE_AMPLITUDE = (0.6, 1.0)
EVIDENCE_JITTER = 0.05
BACKGROUND_EVIDENCE = 0.25

ELEVATION_HEIGHT = (8.0, 15.0)
ELEVATION_LENGTH = (12, 24)
BOUNDARY_MARGIN = 3
SKEW_RANGE = (5, 15)
OVERSEG_LENGTH = (6, 16)
OVERSEG_DEPTH = (4, 8)
SPUR_WIDTH = 2

_NOISE_HARMONICS = 3


class IssueFlag(enum.Enum):
    BM_ELEVATION = "bm_elevation"
    TOP_UNDERSHOOT = "top_undershoot"
    BOTTOM_DEVIATION = "bottom_deviation"
    DX_SKEW = "dx_skew"

    @classmethod
    def parse_all(cls, values: t.Iterable[str | IssueFlag]) -> frozenset[IssueFlag]:
        flags = set()
        for value in values:
            try:
                flags.add(value if isinstance(value, IssueFlag) else cls(value))
            except ValueError:
                raise ConfigError(f"Unknown issue flag {value!r}") from None
        return frozenset(flags)


def _flag_names(flags: t.Iterable[IssueFlag]) -> list[str]:
    return sorted(flag.value for flag in flags)


class OversegKind(enum.Enum):
    """
    Evidence outside the edema that the coarse prediction picks up.

    ``HULL`` is a narrow spur above the ILM that the hull fill of the coarse
    mask spreads over the vitreous. ``CHOROID`` is a leak below the BM.
    """

    HULL = "hull"
    CHOROID = "choroid"

    @classmethod
    def parse(cls, value: str | OversegKind | None) -> OversegKind | None:
        if value is None or isinstance(value, OversegKind):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(f"Unknown over-segmentation kind {value!r}") from None


@dataclasses.dataclass(frozen=True)
class CurveParams:
    """
    ``row(x) = center - depth * u**2 + noise(x)`` with ``u`` running from -1
    to 1 across the raster, and ``noise`` a sum of three low harmonics scaled
    to at most ``noise_amplitude`` pixels.
    """

    center: float
    depth: float
    noise_amplitude: float = 0.0

    def to_json(self) -> dict[str, float]:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class PhantomSpec:
    height: int = 128
    width: int = 128
    seed: int = 0
    ilm_params: CurveParams | None = None
    bm_params: CurveParams | None = None
    edema_span: tuple[int, int] | None = None
    issue_flags: frozenset[IssueFlag] = frozenset()
    shift_at: int | None = None
    shift_offset: float = 60.0
    noise_level: float = 4.0
    tolerance_px: float = 2.0
    span_jitter: int = 0
    overseg: OversegKind | None = None

    def __post_init__(self) -> None:
        if self.height < 8 or self.width < 8:
            raise ConfigError(
                f"Phantoms need at least 8x8 pixels, got {self.height}x{self.width}"
            )
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("Seed must be an unsigned 64-bit integer")
        if self.ilm_params is None:
            object.__setattr__(
                self,
                "ilm_params",
                CurveParams(0.40 * self.height, 0.08 * self.height, 1.5),
            )
        if self.bm_params is None:
            object.__setattr__(
                self,
                "bm_params",
                CurveParams(0.70 * self.height, 0.08 * self.height, 0.5),
            )
        if self.edema_span is None:
            object.__setattr__(
                self,
                "edema_span",
                (round(0.3 * self.width), round(0.7 * self.width)),
            )
        x0, x1 = self.edema_span  # type: ignore[misc]
        if not 0 <= x0 <= x1 < self.width:
            raise ConfigError(f"Invalid edema span {x0}..{x1}")
        object.__setattr__(self, "edema_span", (int(x0), int(x1)))
        object.__setattr__(self, "issue_flags", IssueFlag.parse_all(self.issue_flags))
        object.__setattr__(self, "overseg", OversegKind.parse(self.overseg))
        if self.shift_at is not None and self.shift_at < 0:
            raise ConfigError("Shift frame index must be non-negative")
        for name in ("shift_offset", "noise_level", "tolerance_px"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.noise_level < 0 or self.tolerance_px < 0 or self.span_jitter < 0:
            raise ConfigError("Noise level, tolerance and span jitter must be >= 0")

    @property
    def span(self) -> tuple[int, int]:
        return t.cast(tuple[int, int], self.edema_span)

    def with_flags(self, flags: t.Iterable[str | IssueFlag]) -> PhantomSpec:
        return dataclasses.replace(self, issue_flags=IssueFlag.parse_all(flags))

    def to_json(self) -> dict[str, t.Any]:
        return {
            "height": self.height,
            "width": self.width,
            "seed": self.seed,
            "ilm_params": t.cast(CurveParams, self.ilm_params).to_json(),
            "bm_params": t.cast(CurveParams, self.bm_params).to_json(),
            "edema_span": list(self.span),
            "issue_flags": _flag_names(self.issue_flags),
            "shift_at": self.shift_at,
            "shift_offset": self.shift_offset,
            "noise_level": self.noise_level,
            "tolerance_px": self.tolerance_px,
            "span_jitter": self.span_jitter,
            "overseg": None if self.overseg is None else self.overseg.value,
        }


@dataclasses.dataclass(frozen=True, eq=False)
class PhantomFrame:
    frame_index: int
    image: Grid
    residual: Grid
    ilm_gt: LayerCurve
    bm_gt: LayerCurve
    ilm_obs: LayerCurve
    bm_obs: LayerCurve
    ea_gt: BinaryMask
    oriseg_seed: BinaryMask
    span: tuple[int, int]
    flags: frozenset[IssueFlag]
    shifted: bool
    injections: dict[str, t.Any]

    def as_frame(self, frame_id: str = "") -> Frame:
        return Frame(
            image=self.image,
            residual=self.residual,
            ilm=self.ilm_obs,
            bm=self.bm_obs,
            frame_id=frame_id,
        )


def _smooth_noise(
    amplitude: float, phases: np.ndarray, width: int
) -> np.ndarray:
    xs = np.arange(width)
    orders = np.arange(1, phases.size + 1)
    weights = 1.0 / orders**2
    waves = np.sin(
        2 * np.pi * orders[:, np.newaxis] * xs[np.newaxis, :] / width
        + phases[:, np.newaxis]
    )
    return amplitude * (weights[:, np.newaxis] * waves).sum(axis=0) / weights.sum()


def _layer_rows(params: CurveParams, phases: np.ndarray, width: int) -> np.ndarray:
    u = 2 * np.arange(width) / (width - 1) - 1
    return (
        params.center
        - params.depth * u**2
        + _smooth_noise(params.noise_amplitude, phases, width)
    )


def _checked_pair(
    ilm: LayerCurve, bm: LayerCurve, spec: PhantomSpec, frame_index: int
) -> LayerPair:
    try:
        return validate_layers(ilm, bm, spec.height, spec.width)
    except (RowOutOfRange, CurveCrossing) as exc:
        raise SpecInfeasible(str(exc), frame_index) from exc


def _skew(
    top: np.ndarray,
    bottom: np.ndarray,
    columns: t.Iterable[int],
    delta: int,
    top_wide: bool,
) -> None:
    # Column k of the ramp keeps k/delta of its depth, anchored at one layer.
    for k, column in enumerate(columns):
        kept = (int(bottom[column] - top[column]) * k) // delta
        if top_wide:
            bottom[column] = top[column] + kept
        else:
            top[column] = bottom[column] - kept


def _inject_overseg(
    spec: PhantomSpec,
    draws: np.ndarray,
    top: np.ndarray,
    bottom: np.ndarray,
    span: tuple[int, int],
    frame_index: int,
) -> dict[str, t.Any]:
    # Edge columns stay untouched so the corners are still found.
    x0, x1 = span
    depth = to_integer(draws[2], *OVERSEG_DEPTH)
    if spec.overseg is OversegKind.CHOROID:
        length = to_integer(draws[0], *OVERSEG_LENGTH)
        if x1 - x0 - 2 < length:
            raise SpecInfeasible(
                "Edema span too narrow for a choroid leak", frame_index
            )
        start = to_integer(draws[1], x0 + 1, x1 - 1 - length)
        leak = slice(start, start + length + 1)
        bottom[leak] = np.minimum(bottom[leak] + depth, spec.height - 1)
        return {"kind": "choroid", "start": start, "length": length, "depth": depth}
    if x1 - x0 < 3 + SPUR_WIDTH:
        raise SpecInfeasible("Edema span too narrow for a hull spur", frame_index)
    start = to_integer(draws[1], x0 + 2, x1 - 1 - SPUR_WIDTH)
    spur = slice(start, start + SPUR_WIDTH)
    top[spur] = np.maximum(top[spur] - depth, 0)
    return {"kind": "hull", "start": start, "depth": depth}


def generate(spec: PhantomSpec, frame_index: int) -> PhantomFrame:
    """
    Build frame ``frame_index`` of ``spec``.

    Raises ``SpecInfeasible`` if the curves leave the raster or cross, or if
    an injection does not fit into the edema span.
    """
    height, width = spec.height, spec.width
    flags = spec.issue_flags
    stream = FrameStream(spec.seed, frame_index)
    # Fixed draw order, independent of the flags.
    ilm_phases = 2 * np.pi * stream.uniforms(_NOISE_HARMONICS)
    bm_phases = 2 * np.pi * stream.uniforms(_NOISE_HARMONICS)
    jitter_draws = stream.uniforms(2)
    elevation_draws = stream.uniforms(3)
    skew_draws = stream.uniforms(3)
    amplitude_draw = stream.uniforms(1)[0]
    inside_draws = stream.uniforms(height * width).reshape(height, width)
    outside_draws = stream.uniforms(height * width).reshape(height, width)
    noise_draws = stream.uniforms(height * width).reshape(height, width)
    overseg_draws = stream.uniforms(3)

    ilm_gt = LayerCurve(
        _layer_rows(t.cast(CurveParams, spec.ilm_params), ilm_phases, width)
    )
    bm_gt = convex_envelope_bm(
        LayerCurve(_layer_rows(t.cast(CurveParams, spec.bm_params), bm_phases, width))
    )
    gt_pair = _checked_pair(ilm_gt, bm_gt, spec, frame_index)

    x0, x1 = spec.span
    if spec.span_jitter:
        jitter = spec.span_jitter
        x0 = min(max(x0 + to_integer(jitter_draws[0], -jitter, jitter), 0), width - 1)
        x1 = min(max(x1 + to_integer(jitter_draws[1], -jitter, jitter), 0), width - 1)
        if x0 > x1:
            raise SpecInfeasible("Jittered edema span is empty", frame_index)
    ea_gt = rasterize_band(gt_pair, x0, x1, height)

    injections: dict[str, t.Any] = {}
    bm_obs = bm_gt
    if IssueFlag.BM_ELEVATION in flags:
        low_h, high_h = ELEVATION_HEIGHT
        lift_height = low_h + (high_h - low_h) * elevation_draws[0]
        length = to_integer(elevation_draws[1], *ELEVATION_LENGTH)
        if x1 - x0 - 2 < length:
            raise SpecInfeasible("Edema span too narrow for a BM elevation", frame_index)
        start = to_integer(elevation_draws[2], x0 + 1, x1 - 1 - length)
        offsets = np.arange(length + 1)
        lift = np.zeros(width)
        lift[start : start + length + 1] = (
            lift_height * 0.5 * (1 - np.cos(2 * np.pi * offsets / length))
        )
        bm_obs = LayerCurve(bm_gt.rows - lift)
        _checked_pair(ilm_gt, bm_obs, spec, frame_index)
        injections[IssueFlag.BM_ELEVATION.value] = {
            "start": start,
            "length": length,
            "height": lift_height,
        }

    top = ilm_gt.rounded()
    bottom = bm_gt.rounded()
    if IssueFlag.BM_ELEVATION in flags:
        bottom = np.minimum(bottom, bm_obs.rounded())
    offset = math.ceil(spec.tolerance_px) + BOUNDARY_MARGIN
    if IssueFlag.TOP_UNDERSHOOT in flags:
        top = top + offset
        injections[IssueFlag.TOP_UNDERSHOOT.value] = {"offset": offset}
    if IssueFlag.BOTTOM_DEVIATION in flags:
        bottom = bottom - offset
        injections[IssueFlag.BOTTOM_DEVIATION.value] = {"offset": offset}
    if IssueFlag.DX_SKEW in flags:
        left = to_integer(skew_draws[0], *SKEW_RANGE)
        right = to_integer(skew_draws[1], *SKEW_RANGE)
        top_wide = skew_draws[2] < 0.5
        if left + right > x1 - x0:
            raise SpecInfeasible("Edema span too narrow for the skew", frame_index)
        _skew(top, bottom, range(x0, x0 + left), left, top_wide)
        _skew(top, bottom, range(x1, x1 - right, -1), right, top_wide)
        injections[IssueFlag.DX_SKEW.value] = {
            "left": left,
            "right": right,
            "mode": "top_wide" if top_wide else "bottom_wide",
        }
    if spec.overseg is not None:
        injections["overseg"] = _inject_overseg(
            spec, overseg_draws, top, bottom, (x0, x1), frame_index
        )
    if (top[x0 : x1 + 1] > bottom[x0 : x1 + 1]).any():
        raise SpecInfeasible("Injections leave no evidence in some column", frame_index)

    rows = np.arange(height)[:, np.newaxis]
    columns = np.arange(width)[np.newaxis, :]
    evidence = (
        (columns >= x0)
        & (columns <= x1)
        & (rows >= top[np.newaxis, :])
        & (rows <= bottom[np.newaxis, :])
    )

    low_a, high_a = EVIDENCE_AMPLITUDE
    amplitude = low_a + (high_a - low_a) * amplitude_draw
    inside = np.clip(
        amplitude + EVIDENCE_JITTER * (2 * inside_draws - 1), low_a, high_a
    )
    residual = np.where(evidence, inside, BACKGROUND_EVIDENCE * outside_draws)

    gt_top = ilm_gt.rounded()[np.newaxis, :]
    gt_bottom = bm_gt.rounded()[np.newaxis, :]
    image = np.full((height, width), BACKGROUND_INTENSITY)
    image[(rows >= gt_top) & (rows <= gt_bottom)] = TISSUE_INTENSITY
    image[rows > gt_bottom] = CHOROID_INTENSITY
    image[ea_gt] = EDEMA_INTENSITY
    image += spec.noise_level * (2 * noise_draws - 1)
    shifted = spec.shift_at is not None and frame_index >= spec.shift_at
    if shifted:
        image += spec.shift_offset

    return PhantomFrame(
        frame_index=frame_index,
        image=image,
        residual=residual,
        ilm_gt=ilm_gt,
        bm_gt=bm_gt,
        ilm_obs=ilm_gt,
        bm_obs=bm_obs,
        ea_gt=ea_gt,
        oriseg_seed=residual >= 0.5,
        span=(x0, x1),
        flags=flags,
        shifted=shifted,
        injections=injections,
    )


def frame_files(frame_id: str) -> dict[str, str]:
    return {
        "image": f"{frame_id}.f32",
        "image_header": f"{frame_id}.json",
        "residual": f"{frame_id}_residual.f32",
        "residual_header": f"{frame_id}_residual.json",
        "layers": f"{frame_id}_layers.csv",
        "gt": f"{frame_id}_gt.pgm",
        "gt_layers": f"{frame_id}_gt_layers.csv",
        "oriseg": f"{frame_id}_oriseg.pgm",
    }


def frame_ids(count: int) -> list[str]:
    digits = max(3, len(str(count - 1)))
    return [f"{index:0{digits}d}" for index in range(count)]


async def _store_frame(directory: str, files: dict[str, str], frame: PhantomFrame) -> None:
    def path(key: str) -> str:
        return os.path.join(directory, files[key])

    await asyncio.gather(
        store_grid(path("image"), frame.image),
        store_grid(path("residual"), frame.residual),
        store_layers(path("layers"), frame.ilm_obs, frame.bm_obs),
        store_mask(path("gt"), frame.ea_gt),
        store_layers(path("gt_layers"), frame.ilm_gt, frame.bm_gt),
        store_mask(path("oriseg"), frame.oriseg_seed),
    )


async def generate_suite(
    spec: PhantomSpec,
    count: int,
    directory: StrPath,
    schedule: t.Sequence[t.Iterable[str | IssueFlag]] | None = None,
    *,
    log_debug: t.Callable[..., None] | None = None,
    log_info: t.Callable[..., None] | None = None,
) -> str:
    """
    Write ``count`` frames and a manifest into ``directory``.

    ``schedule`` lists the issue flags per frame and is cycled; without it
    every frame uses ``spec.issue_flags``. Returns the manifest path.
    """

    def do_log_debug(msg: str, *args: t.Any) -> None:
        if log_debug:
            log_debug(msg, *args)

    if count < 1:
        raise ConfigError(f"Frame count must be positive, got {count}")
    flag_cycle = (
        [IssueFlag.parse_all(entry) for entry in schedule]
        if schedule
        else [spec.issue_flags]
    )
    directory = os.fspath(directory)
    os.makedirs(directory, exist_ok=True)

    entries = []
    for index, frame_id in enumerate(frame_ids(count)):
        frame = generate(spec.with_flags(flag_cycle[index % len(flag_cycle)]), index)
        files = frame_files(frame_id)
        await _store_frame(directory, files, frame)
        digests = {
            name: await file_digest(os.path.join(directory, name))
            for name in sorted(files.values())
        }
        do_log_debug("Wrote frame {} with flags {}", frame_id, _flag_names(frame.flags))
        entries.append(
            {
                "index": index,
                "id": frame_id,
                "flags": _flag_names(frame.flags),
                "shifted": frame.shifted,
                "span": list(frame.span),
                "injections": frame.injections,
                "files": files,
                "digests": digests,
            }
        )

    manifest_path = os.path.join(directory, MANIFEST_NAME)
    await store_json(
        manifest_path,
        {
            "spec": spec.to_json(),
            "count": count,
            "schedule": [_flag_names(flags) for flags in flag_cycle],
            "frames": entries,
        },
    )
    if log_info:
        log_info("Wrote {} frames to {}", count, directory)
    return manifest_path


class SuiteEntry(t.NamedTuple):
    frame: Frame
    ground_truth: BinaryMask | None


_IMAGE_NAME = re.compile(r"(\d+)\.f32")


def list_frame_ids(directory: StrPath) -> list[str]:
    ids = [
        match.group(1)
        for name in os.listdir(directory)
        if (match := _IMAGE_NAME.fullmatch(name))
    ]
    return sorted(ids, key=int)


async def _verify_manifest(
    directory: str, log_debug: t.Callable[..., None] | None
) -> None:
    manifest = await load_json(os.path.join(directory, MANIFEST_NAME))
    try:
        digest_maps = [entry["digests"] for entry in manifest["frames"]]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"Malformed manifest in {directory}") from exc
    for digests in digest_maps:
        await verify_digests(directory, digests, log_debug=log_debug)


async def load_suite(
    directory: StrPath,
    *,
    verify: bool = True,
    log_debug: t.Callable[..., None] | None = None,
) -> list[SuiteEntry]:
    """
    Load a frame directory in ascending numeric order.

    Every frame needs its image, residual and layer file; ground truth masks
    are optional. If a manifest is present and ``verify`` is set, all recorded
    digests are checked first.
    """
    directory = os.fspath(directory)
    ids = list_frame_ids(directory)
    if not ids:
        raise FormatError(f"No frames found in {directory}")
    if verify and os.path.exists(os.path.join(directory, MANIFEST_NAME)):
        await _verify_manifest(directory, log_debug)

    entries = []
    for frame_id in ids:
        files = {
            key: os.path.join(directory, name)
            for key, name in frame_files(frame_id).items()
        }
        for key in ("residual", "layers"):
            if not os.path.exists(files[key]):
                raise FormatError(f"Frame {frame_id} lacks {os.path.basename(files[key])}")
        image, residual, (ilm, bm) = await asyncio.gather(
            load_grid(files["image"]),
            load_grid(files["residual"]),
            load_layers(files["layers"]),
        )
        ground_truth = (
            await load_mask(files["gt"]) if os.path.exists(files["gt"]) else None
        )
        entries.append(
            SuiteEntry(Frame(image, residual, ilm, bm, frame_id), ground_truth)
        )
    return entries
