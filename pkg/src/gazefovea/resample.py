"""Bilinear image resampling.

Kept separate so the resampler stays pluggable: anything with the
``resize(image, out_h, out_w) -> float64 array`` signature can be swapped in
(for example a bicubic kernel) without touching view-assembly contracts.
All arithmetic is float64 so resampling is deterministic and, for the
constant and integral-downscale cases, exact.
"""

from __future__ import annotations

import numpy as np


def bilinear_resize(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize ``image`` to (out_h, out_w) with bilinear interpolation.

    Uses the half-pixel-center convention: output pixel (i, j) samples the
    source at ((i + 0.5) * H/out_h - 0.5, (j + 0.5) * W/out_w - 0.5), with
    sample coordinates clamped to the source grid. Works on (H, W) and
    (H, W, C) arrays; always returns float64.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target dims must be positive, got {out_h}x{out_w}")
    src = np.asarray(image, dtype=np.float64)
    in_h, in_w = src.shape[:2]
    if in_h < 1 or in_w < 1:
        raise ValueError("source image is empty")

    sy = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    sx = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)

    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (sy - y0)[:, np.newaxis]
    wx = (sx - x0)[np.newaxis, :]
    if src.ndim == 3:
        wy = wy[..., np.newaxis]
        wx = wx[..., np.newaxis]

    top = src[y0[:, None], x0[None, :]] * (1.0 - wx) + src[y0[:, None], x1[None, :]] * wx
    bot = src[y1[:, None], x0[None, :]] * (1.0 - wx) + src[y1[:, None], x1[None, :]] * wx
    return top * (1.0 - wy) + bot * wy
