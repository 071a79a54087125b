"""Vision-token counting and affine FLOP estimation.

Token counts follow directly from view geometry (one token per
pitch x pitch tile). End-to-end FLOPs are modeled as
``intercept + slope * total_tokens``; the shipped profiles carry
coefficients fit by an exact two-point calibration against published
per-model measurements (see the profile files for the rows used).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateRowsError,
    UnsnappedViewError,
    ZeroBaselineError,
)

BUILTIN_PROFILES = ("qwen25vl-3b-paper", "qwen25vl-7b-paper")


@dataclass(frozen=True)
class TokenGeometry:
    """Pixel side length covered by one vision token."""

    token_pitch: int = 28

    def __post_init__(self):
        if self.token_pitch < 1:
            raise ValueError(f"token_pitch must be >= 1, got {self.token_pitch}")


@dataclass(frozen=True)
class ModelProfile:
    """Per-model affine FLOP coefficients and token defaults."""

    name: str
    flops_intercept_g: float
    flops_per_token_g: float
    default_text_tokens: int = 36
    token_pitch: int = 28

    def __post_init__(self):
        if self.flops_per_token_g <= 0:
            raise ValueError("flops_per_token_g must be > 0")
        if self.flops_intercept_g < 0:
            raise ValueError("flops_intercept_g must be >= 0")
        if self.default_text_tokens < 0:
            raise ValueError("default_text_tokens must be >= 0")

    @property
    def geometry(self) -> TokenGeometry:
        return TokenGeometry(token_pitch=self.token_pitch)


@dataclass(frozen=True)
class CostReport:
    """Token and FLOP accounting for one input (or a batch mean)."""

    visual_tokens: float
    text_tokens: float
    total_tokens: float
    flops_g: float
    reductions: dict | None = None


def count_visual_tokens(views, geometry: TokenGeometry) -> int:
    """Sum of (width/pitch) * (height/pitch) over the given views."""
    pitch = geometry.token_pitch
    total = 0
    for view in views:
        if view.width % pitch or view.height % pitch:
            raise UnsnappedViewError(
                f"view {view.width}x{view.height} not aligned to pitch {pitch}"
            )
        total += (view.width // pitch) * (view.height // pitch)
    return total


def count_total_tokens(visual: float, text_tokens: float) -> float:
    """Visual plus text tokens; fractional values allowed for batch means."""
    return visual + text_tokens


def estimate_flops(total_tokens: float, profile: ModelProfile) -> float:
    """Affine cost: intercept + slope * total_tokens, in gigaFLOPs."""
    if total_tokens < 0:
        raise ValueError("total_tokens must be >= 0")
    return profile.flops_intercept_g + profile.flops_per_token_g * total_tokens


def calibrate(rows) -> tuple[float, float]:
    """Fit (intercept, slope) to (total_tokens, flops_g) rows.

    Two rows give the exact interpolant; more give the least-squares line.
    """
    rows = [(float(t), float(f)) for t, f in rows]
    if len(rows) < 2:
        raise DegenerateRowsError("need at least 2 calibration rows")
    xs = [t for t, _ in rows]
    if len(set(xs)) < 2:
        raise DegenerateRowsError("calibration rows share one token count")
    if len(rows) == 2:
        (x1, y1), (x2, y2) = rows
        slope = (y1 - y2) / (x1 - x2)
        return y1 - slope * x1, slope
    slope, intercept = np.polyfit(xs, [f for _, f in rows], deg=1)
    return float(intercept), float(slope)


def reduction_report(candidate: CostReport, baseline: CostReport) -> CostReport:
    """Fill candidate.reductions with percent savings vs the baseline.

    Each percentage is 100 * (1 - candidate/baseline); positive means the
    candidate is cheaper.
    """
    if baseline.visual_tokens <= 0 or baseline.total_tokens <= 0 or baseline.flops_g <= 0:
        raise ZeroBaselineError("baseline counts must be positive")
    reductions = {
        "visual_pct": 100.0 * (1.0 - candidate.visual_tokens / baseline.visual_tokens),
        "total_pct": 100.0 * (1.0 - candidate.total_tokens / baseline.total_tokens),
        "flops_pct": 100.0 * (1.0 - candidate.flops_g / baseline.flops_g),
    }
    return replace(candidate, reductions=reductions)


def format_reduction(pct: float) -> str:
    """Render a reduction percentage the way sweep tables print it (-93.1%)."""
    text = f"{-pct:.1f}%"
    return "0.0%" if text == "-0.0%" else text


# --- profile config files ---------------------------------------------------

def parse_profile_text(text: str) -> ModelProfile:
    """Parse a key=value profile config ('#' starts a comment line)."""
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad profile line (expected key=value): {raw!r}")
        key, _, value = line.partition("=")
        fields[key.strip()] = value.strip()
    try:
        return ModelProfile(
            name=fields["name"],
            flops_intercept_g=float(fields["flops_intercept_g"]),
            flops_per_token_g=float(fields["flops_per_token_g"]),
            default_text_tokens=int(fields.get("default_text_tokens", "36")),
            token_pitch=int(fields.get("token_pitch", "28")),
        )
    except KeyError as exc:
        raise ValueError(f"profile config missing key: {exc}") from exc


def load_profile(name_or_path: str | Path) -> ModelProfile:
    """Load a model profile by built-in name or config file path."""
    name = str(name_or_path)
    if name in BUILTIN_PROFILES:
        text = (
            resources.files("gazefovea")
            .joinpath(f"assets/profiles/{name}.profile")
            .read_text(encoding="utf-8")
        )
        return parse_profile_text(text)
    return parse_profile_text(Path(name_or_path).read_text(encoding="utf-8"))
