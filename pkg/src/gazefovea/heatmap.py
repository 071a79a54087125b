"""Gaze traces and normalized attention heatmaps.

A raw eye-gaze trace is rasterized onto the image grid, spread with an
isotropic Gaussian, and normalized into a probability distribution over
pixels. The three steps are exposed separately (each is useful on its own
for diagnostics) plus a one-shot :func:`build_heatmap` composition.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import EmptyTraceError, InvalidSigmaError, ZeroMassError

FLOAT_GRID_MAGIC = b"GZHM"
_FLOAT_GRID_HEADER = struct.Struct("<4sIII")  # magic, height, width, reserved


def default_sigma_px(image_width: int, image_height: int) -> float:
    """Default Gaussian width: 2% of the image diagonal, in pixels."""
    return 0.02 * math.hypot(image_width, image_height)


@dataclass(frozen=True, eq=False)
class GazeTrace:
    """An ordered eye-gaze point sequence on one image.

    ``points`` is an (N, 2) float64 array of (x, y) pixel coordinates,
    already clamped so 0 <= x < image_width and 0 <= y < image_height.
    ``clamped_count`` records how many raw points landed out of bounds
    (eye trackers overshoot; dropping those points would bias the mass).
    """

    points: np.ndarray
    image_width: int
    image_height: int
    timestamps: np.ndarray | None = None
    clamped_count: int = field(default=0, compare=False)

    @classmethod
    def from_points(
        cls,
        raw_points,
        image_width: int,
        image_height: int,
        *,
        normalized: bool = False,
    ) -> "GazeTrace":
        """Ingest raw (x, y) or (x, y, t) tuples, clamping to the grid.

        With ``normalized=True`` coordinates are fractions of the image
        size and are scaled to pixels before clamping. Timestamps, when
        present on every point, must be non-decreasing.
        """
        if image_width < 1 or image_height < 1:
            raise ValueError("image dims must be positive")
        pts = [tuple(p) for p in raw_points]
        xy = np.array([(p[0], p[1]) for p in pts], dtype=np.float64).reshape(-1, 2)
        ts = None
        if pts and all(len(p) >= 3 for p in pts):
            ts = np.array([p[2] for p in pts], dtype=np.float64)
            if np.any(np.diff(ts) < 0):
                raise ValueError("timestamps must be non-decreasing")
        if normalized and len(xy):
            xy = xy * np.array([image_width, image_height], dtype=np.float64)
        hi = np.array(
            [np.nextafter(float(image_width), 0.0), np.nextafter(float(image_height), 0.0)]
        )
        clamped = np.clip(xy, 0.0, hi)
        n_clamped = int(np.sum(np.any(clamped != xy, axis=1))) if len(xy) else 0
        return cls(
            points=clamped,
            image_width=int(image_width),
            image_height=int(image_height),
            timestamps=ts,
            clamped_count=n_clamped,
        )

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True, eq=False)
class GazeHeatmap:
    """Normalized attention distribution over the pixel grid.

    Entries are non-negative and sum to 1 within 1e-6; the grid shape
    matches the source image (height, width).
    """

    values: np.ndarray
    sigma_px: float

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ValueError(f"heatmap must be 2-D, got shape {v.shape}")
        if np.any(v < 0):
            raise ValueError("heatmap entries must be non-negative")
        total = float(v.sum())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"heatmap mass {total} not within 1e-6 of 1")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def rasterize_trace(trace: GazeTrace) -> np.ndarray:
    """Bin trace points into a raw count grid of shape (height, width).

    Each point adds weight 1 to the pixel cell containing it (floor of its
    coordinates); the grid total equals the number of points.
    """
    if len(trace) == 0:
        raise EmptyTraceError("cannot rasterize an empty gaze trace")
    grid = np.zeros((trace.image_height, trace.image_width), dtype=np.float64)
    cols = np.floor(trace.points[:, 0]).astype(np.intp)
    rows = np.floor(trace.points[:, 1]).astype(np.intp)
    np.add.at(grid, (rows, cols), 1.0)
    return grid


def gaussian_smooth(raw: np.ndarray, sigma_px: float) -> np.ndarray:
    """Convolve a count grid with an isotropic 2-D Gaussian.

    The kernel is truncated at radius ceil(3 * sigma_px) and renormalized
    to unit sum after truncation. Borders are zero-padded, so a little
    mass can leak off-grid; :func:`normalize` makes the final distribution
    exact again.
    """
    if not (isinstance(sigma_px, (int, float)) and math.isfinite(sigma_px) and sigma_px > 0):
        raise InvalidSigmaError(f"sigma_px must be finite and > 0, got {sigma_px!r}")
    radius = math.ceil(3.0 * sigma_px)
    return ndimage.gaussian_filter(
        np.asarray(raw, dtype=np.float64),
        sigma=float(sigma_px),
        mode="constant",
        cval=0.0,
        radius=radius,
    )


def normalize(smoothed: np.ndarray, sigma_px: float) -> GazeHeatmap:
    """Scale a non-negative grid to unit total mass."""
    grid = np.asarray(smoothed, dtype=np.float64)
    total = float(grid.sum())
    if total <= 0.0:
        raise ZeroMassError("grid has zero total mass (empty or fully out-of-bounds trace)")
    return GazeHeatmap(values=grid / total, sigma_px=float(sigma_px))


def build_heatmap(trace: GazeTrace, sigma_px: float | None = None) -> GazeHeatmap:
    """Rasterize, smooth, and normalize a gaze trace in one call."""
    if sigma_px is None:
        sigma_px = default_sigma_px(trace.image_width, trace.image_height)
    return normalize(gaussian_smooth(rasterize_trace(trace), sigma_px), sigma_px)


# --- exports ---------------------------------------------------------------

def write_float_grid(values: np.ndarray, path: str | Path) -> None:
    """Write a portable float grid: 16-byte header then little-endian
    float32 values in row-major order."""
    grid = np.asarray(values, dtype="<f4")
    if grid.ndim != 2:
        raise ValueError("float grid export expects a 2-D array")
    h, w = grid.shape
    with open(path, "wb") as fh:
        fh.write(_FLOAT_GRID_HEADER.pack(FLOAT_GRID_MAGIC, h, w, 0))
        fh.write(np.ascontiguousarray(grid).tobytes())


def read_float_grid(path: str | Path) -> np.ndarray:
    """Read a grid written by :func:`write_float_grid` (returns float64)."""
    data = Path(path).read_bytes()
    if len(data) < _FLOAT_GRID_HEADER.size:
        raise ValueError(f"{path}: truncated float grid file")
    magic, h, w, _ = _FLOAT_GRID_HEADER.unpack_from(data)
    if magic != FLOAT_GRID_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = np.frombuffer(data, dtype="<f4", offset=_FLOAT_GRID_HEADER.size)
    if body.size != h * w:
        raise ValueError(f"{path}: expected {h * w} values, found {body.size}")
    return body.reshape(h, w).astype(np.float64)


def write_grayscale_png(values: np.ndarray, path: str | Path) -> None:
    """Export a grid as an 8-bit grayscale image, rescaled by its max."""
    grid = np.asarray(values, dtype=np.float64)
    peak = grid.max()
    scaled = grid / peak if peak > 0 else np.zeros_like(grid)
    img = np.round(scaled * 255.0).astype(np.uint8)
    Image.fromarray(img, mode="L").save(path, format="PNG")
