"""Two-scale model input assembly.

Combines a coarse global view of the whole scene with a high-resolution
gaze-driven ROI view, plus a prompt that tells the model to prioritize the
ROI. View sides are snapped to multiples of the vision-token pitch so token
accounting stays exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cost import TokenGeometry
from .errors import BadTargetError, ModeMismatchError
from .resample import bilinear_resize

Resampler = Callable[[np.ndarray, int, int], np.ndarray]

TEMPLATE_VERSION = "v1"

TWO_SCALE_TEMPLATE = (
    "You are given two images. The first image is a low-resolution view of "
    "the whole scene. The second image is a region of interest (ROI) selected "
    "by the user's eye gaze; prioritize the ROI when reasoning. "
    "Question: {question}"
)

ROI_ONLY_TEMPLATE = (
    "You are given one image showing the region the user is looking at. "
    "Question: {question}"
)

BASELINE_TEMPLATE = "You are given one image. Question: {question}"

DEFAULT_ROI_CAP_PITCHES = 8  # 8 x 28 px = 224 px, the full-image baseline side


class ViewRole(enum.Enum):
    GLOBAL = "global"
    ROI = "roi"


class InputMode(enum.Enum):
    ROI_ONLY = "roi_only"
    TWO_SCALE = "two_scale"
    BASELINE = "baseline"


@dataclass(frozen=True, eq=False)
class ScaledView:
    """An image view resampled to token-aligned dimensions.

    ``pixels`` stays float64 until PNG export so resampling remains exact;
    both sides are positive multiples of the token pitch.
    """

    pixels: np.ndarray
    role: ViewRole
    width: int
    height: int

    def to_uint8(self) -> np.ndarray:
        return np.clip(np.round(self.pixels), 0, 255).astype(np.uint8)


@dataclass(frozen=True, eq=False)
class TwoScaleInput:
    """Assembled model input: optional global view, ROI view, prompt text."""

    global_view: ScaledView | None
    roi_view: ScaledView
    prompt_text: str
    mode: InputMode
    template_version: str = TEMPLATE_VERSION

    def views(self) -> list[ScaledView]:
        """Views in slot order; the ROI is always the last image."""
        out = []
        if self.global_view is not None:
            out.append(self.global_view)
        out.append(self.roi_view)
        return out


def snap_side(
    length: int,
    geometry: TokenGeometry,
    cap_pitches: int = DEFAULT_ROI_CAP_PITCHES,
) -> int:
    """Nearest positive multiple of the token pitch, capped at cap_pitches.

    Halfway lengths round up (30 px at pitch 28 snaps to 28; 42 px to 56).
    """
    pitch = geometry.token_pitch
    n = int(length / pitch + 0.5)
    return max(1, min(cap_pitches, n)) * pitch


def _make_view(
    image: np.ndarray,
    out_h: int,
    out_w: int,
    role: ViewRole,
    resampler: Resampler,
) -> ScaledView:
    if image.shape[0] == out_h and image.shape[1] == out_w:
        pixels = np.asarray(image, dtype=np.float64)
    else:
        pixels = resampler(image, out_h, out_w)
    return ScaledView(pixels=pixels, role=role, width=out_w, height=out_h)


def make_global_view(
    image: np.ndarray,
    target: tuple[int, int] = (28, 28),
    geometry: TokenGeometry = TokenGeometry(),
    resampler: Resampler = bilinear_resize,
) -> ScaledView:
    """Downsample the whole image to the coarse global resolution.

    ``target`` is (height, width) and must be positive multiples of the
    token pitch; the default 28x28 costs exactly one vision token.
    """
    th, tw = target
    pitch = geometry.token_pitch
    if th <= 0 or tw <= 0 or th % pitch or tw % pitch:
        raise BadTargetError(
            f"global target {th}x{tw} must be positive multiples of pitch {pitch}"
        )
    return _make_view(image, th, tw, ViewRole.GLOBAL, resampler)


def make_roi_view(
    crop: np.ndarray,
    geometry: TokenGeometry = TokenGeometry(),
    cap_pitches: int = DEFAULT_ROI_CAP_PITCHES,
    resampler: Resampler = bilinear_resize,
) -> ScaledView:
    """Snap a crop to token-aligned dimensions for the ROI slot.

    Each side snaps independently to its nearest pitch multiple, at least
    one pitch and at most ``cap_pitches`` pitches per side, so the ROI can
    never cost more than the full-image baseline.
    """
    h, w = crop.shape[:2]
    if h < 1 or w < 1:
        raise ValueError("ROI crop is empty")
    out_h = snap_side(h, geometry, cap_pitches)
    out_w = snap_side(w, geometry, cap_pitches)
    return _make_view(crop, out_h, out_w, ViewRole.ROI, resampler)


def make_baseline_view(
    image: np.ndarray,
    geometry: TokenGeometry = TokenGeometry(),
    side_pitches: int = DEFAULT_ROI_CAP_PITCHES,
    resampler: Resampler = bilinear_resize,
) -> ScaledView:
    """Full image resized to the fixed baseline resolution (224x224 default)."""
    side = side_pitches * geometry.token_pitch
    return _make_view(image, side, side, ViewRole.ROI, resampler)


def assemble(
    global_view: ScaledView | None,
    roi_view: ScaledView,
    question: str,
    mode: InputMode,
) -> TwoScaleInput:
    """Instantiate the prompt template and fix the image slot order.

    TWO_SCALE requires a global view and puts it first; ROI_ONLY and
    BASELINE are single-image modes and must not carry one.
    """
    if mode is InputMode.TWO_SCALE:
        if global_view is None:
            raise ModeMismatchError("two_scale mode requires a global view")
        prompt = TWO_SCALE_TEMPLATE.format(question=question)
    elif mode is InputMode.ROI_ONLY:
        if global_view is not None:
            raise ModeMismatchError("roi_only mode must not carry a global view")
        prompt = ROI_ONLY_TEMPLATE.format(question=question)
    elif mode is InputMode.BASELINE:
        if global_view is not None:
            raise ModeMismatchError("baseline mode must not carry a global view")
        prompt = BASELINE_TEMPLATE.format(question=question)
    else:  # pragma: no cover - enum is closed
        raise ModeMismatchError(f"unknown mode {mode!r}")
    return TwoScaleInput(
        global_view=global_view, roi_view=roi_view, prompt_text=prompt, mode=mode
    )
