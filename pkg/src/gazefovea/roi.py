"""Region-of-interest extraction from a gaze heatmap.

The ROI is the tightest axis-aligned box around the smallest set of
highest-valued pixels whose cumulative mass reaches the threshold rho,
optionally grown to a minimum crop size so the crop keeps usable
resolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidRhoError, OutOfBoundsError, PolicyLargerThanImageError
from .heatmap import GazeHeatmap


@dataclass(frozen=True)
class RoiBox:
    """Inclusive pixel box (x0, y0, x1, y1) with its heatmap coverage.

    ``covered_mass`` is the heatmap mass inside the box. It is at least
    ``rho`` because the box encloses the rho-mass support set; after
    min-size expansion (which has no heatmap access) it is a lower bound.
    """

    x0: int
    y0: int
    x1: int
    y1: int
    covered_mass: float
    rho: float

    @property
    def width(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def height(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def pixels(self) -> int:
        return self.width * self.height

    def to_dict(self) -> dict:
        return {
            "x0": self.x0,
            "y0": self.y0,
            "x1": self.x1,
            "y1": self.y1,
            "rho": self.rho,
            "covered_mass": self.covered_mass,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoiBox":
        return cls(
            x0=int(d["x0"]),
            y0=int(d["y0"]),
            x1=int(d["x1"]),
            y1=int(d["y1"]),
            covered_mass=float(d["covered_mass"]),
            rho=float(d["rho"]),
        )


@dataclass(frozen=True)
class MinSizePolicy:
    """Minimum crop dimensions, in pixels."""

    min_width: int = 56
    min_height: int = 56

    def clamped(self, image_w: int, image_h: int) -> "MinSizePolicy":
        """Shrink the policy to fit an image smaller than the minimum."""
        return MinSizePolicy(
            min_width=min(self.min_width, image_w),
            min_height=min(self.min_height, image_h),
        )


def _check_rho(rho: float) -> None:
    if not (0.0 < rho < 1.0):
        raise InvalidRhoError(f"rho must be in (0, 1), got {rho!r}")


def _support_prefix(heatmap: GazeHeatmap, rho: float) -> np.ndarray:
    """Flat indices of the support set, in selection (descending-mass) order.

    Pixels are ordered by value descending with ties broken by row-major
    index ascending; the prefix is the shortest one whose cumulative mass
    reaches rho.
    """
    _check_rho(rho)
    flat = heatmap.values.ravel()
    order = np.argsort(-flat, kind="stable")
    csum = np.cumsum(flat[order])
    cut = int(np.searchsorted(csum, rho, side="left"))
    if cut >= len(order):  # rho above realizable mass; take everything
        cut = len(order) - 1
    return order[: cut + 1]


def support_set(heatmap: GazeHeatmap, rho: float) -> list[tuple[int, int]]:
    """The smallest high-mass pixel set covering a rho fraction of the heatmap.

    Returns (x, y) pairs in selection order (descending value, row-major
    index breaking ties), so ``set()`` of the result is the support set and
    the last element is its smallest member.
    """
    prefix = _support_prefix(heatmap, rho)
    w = heatmap.width
    return [(int(i % w), int(i // w)) for i in prefix]


def support_mass_box(heatmap: GazeHeatmap, rho: float) -> RoiBox:
    """Tightest box containing every support-set pixel, with its box mass."""
    prefix = _support_prefix(heatmap, rho)
    w = heatmap.width
    cols = prefix % w
    rows = prefix // w
    x0, x1 = int(cols.min()), int(cols.max())
    y0, y1 = int(rows.min()), int(rows.max())
    mass = float(heatmap.values[y0 : y1 + 1, x0 : x1 + 1].sum())
    return RoiBox(x0=x0, y0=y0, x1=x1, y1=y1, covered_mass=mass, rho=float(rho))


def box_mass(heatmap: GazeHeatmap, box: RoiBox) -> float:
    """Heatmap mass inside a box (diagnostic; refreshes covered_mass)."""
    return float(heatmap.values[box.y0 : box.y1 + 1, box.x0 : box.x1 + 1].sum())


def _expand_axis(lo: int, hi: int, min_len: int, limit: int) -> tuple[int, int]:
    """Grow [lo, hi] to at least min_len, centered, then shift inside [0, limit)."""
    length = hi - lo + 1
    if length >= min_len:
        return lo, hi
    extra = min_len - length
    lo -= extra // 2
    hi = lo + min_len - 1
    if lo < 0:
        hi -= lo
        lo = 0
    if hi > limit - 1:
        lo -= hi - (limit - 1)
        hi = limit - 1
        lo = max(lo, 0)
    return lo, hi


def enforce_min_size(
    box: RoiBox, policy: MinSizePolicy, image_w: int, image_h: int
) -> RoiBox:
    """Expand a box to the policy minimum, shifting (never shrinking) to fit.

    Expansion is symmetric about the box center; when it hits a border the
    box slides inward instead of scaling. Idempotent, and the result still
    contains the input box whenever expansion alone suffices.
    """
    if policy.min_width > image_w or policy.min_height > image_h:
        raise PolicyLargerThanImageError(
            f"min crop {policy.min_width}x{policy.min_height} exceeds "
            f"image {image_w}x{image_h}"
        )
    if not (0 <= box.x0 <= box.x1 < image_w and 0 <= box.y0 <= box.y1 < image_h):
        raise OutOfBoundsError(f"box {box} does not fit in image {image_w}x{image_h}")
    x0, x1 = _expand_axis(box.x0, box.x1, policy.min_width, image_w)
    y0, y1 = _expand_axis(box.y0, box.y1, policy.min_height, image_h)
    if (x0, y0, x1, y1) == (box.x0, box.y0, box.x1, box.y1):
        return box
    return RoiBox(x0=x0, y0=y0, x1=x1, y1=y1, covered_mass=box.covered_mass, rho=box.rho)


def extract_roi(image: np.ndarray, box: RoiBox) -> np.ndarray:
    """Pixel-exact crop image[B]; output dims are (height, width[, C])."""
    h, w = image.shape[:2]
    if not (0 <= box.x0 <= box.x1 < w and 0 <= box.y0 <= box.y1 < h):
        raise OutOfBoundsError(f"box {box} exceeds image dims {w}x{h}")
    return image[box.y0 : box.y1 + 1, box.x0 : box.x1 + 1].copy()
