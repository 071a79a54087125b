"""Gaze-VQA manifest format, image loading, and prepared-input bundles.

A manifest is JSONL: an optional first header line
``{"manifest": {"source_name": ..., "version": ..., "coordinates": "pixel"|"normalized"}}``
followed by one sample object per line with fields sample_id, image_path
(relative to the manifest file), gaze_points ([x, y] or [x, y, t] lists),
question, reference_answer, caption, and optional text_token_count. Gaze
coordinates are absolute pixels unless the header says "normalized".

All serialization here is deterministic: sorted keys, floats at 6
significant digits, so byte-level comparisons of reruns are meaningful.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .assembly import TwoScaleInput
from .cost import CostReport
from .errors import (
    BundleIoError,
    ManifestParseError,
    MissingImageError,
    ValidationError,
)
from .heatmap import GazeTrace
from .roi import RoiBox


@dataclass
class Sample:
    """One gaze-VQA item: image, gaze points, question, reference answer."""

    sample_id: str
    image_path: str
    gaze_points: list[tuple]
    question: str
    reference_answer: str
    caption: str = ""
    text_token_count: int | None = None
    clamp_count: int = field(default=0, compare=False)

    def resolve_image(self, root: Path) -> Path:
        p = Path(self.image_path)
        return p if p.is_absolute() else root / p

    def trace(self, image_width: int, image_height: int) -> GazeTrace:
        return GazeTrace.from_points(self.gaze_points, image_width, image_height)


@dataclass
class Manifest:
    samples: list[Sample]
    source_name: str = "unknown"
    version: str = "0"
    root: Path = field(default_factory=Path, compare=False)

    def __len__(self) -> int:
        return len(self.samples)

    def by_id(self) -> dict[str, Sample]:
        return {s.sample_id: s for s in self.samples}


# --- canonical JSON ----------------------------------------------------------

def _canonize(obj):
    """Round floats to 6 significant digits, recursively."""
    if isinstance(obj, float):
        return float(f"{obj:.6g}")
    if isinstance(obj, dict):
        return {k: _canonize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonize(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, 6-significant-digit floats."""
    return json.dumps(_canonize(obj), sort_keys=True, ensure_ascii=False)


def write_jsonl(rows, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(canonical_json(row) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


# --- images -------------------------------------------------------------------

def image_size(path: str | Path) -> tuple[int, int]:
    """(width, height) from the image header, without decoding pixels."""
    with Image.open(path) as img:
        return img.size


def load_image(path: str | Path) -> np.ndarray:
    """Decode PNG/JPEG to an 8-bit RGB array of shape (H, W, 3)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


# --- manifest I/O ---------------------------------------------------------------

def _parse_sample(obj: dict, line_no: int) -> Sample:
    sid = obj.get("sample_id")
    if not isinstance(sid, str) or not sid:
        raise ValidationError(str(sid), f"line {line_no}: sample_id must be a non-empty string")

    def need(key: str) -> str:
        value = obj.get(key)
        if not isinstance(value, str) or not value:
            raise ValidationError(sid, f"{key} must be a non-empty string")
        return value

    image_path = need("image_path")
    question = need("question")
    reference = need("reference_answer")
    caption = obj.get("caption", "")
    if not isinstance(caption, str):
        raise ValidationError(sid, "caption must be a string")

    points = obj.get("gaze_points")
    if not isinstance(points, list) or not points:
        raise ValidationError(sid, "gaze_points must be a non-empty list")
    parsed_points: list[tuple] = []
    for p in points:
        if not isinstance(p, (list, tuple)) or len(p) not in (2, 3):
            raise ValidationError(sid, f"gaze point {p!r} must be [x, y] or [x, y, t]")
        try:
            parsed_points.append(tuple(float(v) for v in p))
        except (TypeError, ValueError):
            raise ValidationError(sid, f"gaze point {p!r} has non-numeric entries")
        if not all(math.isfinite(v) for v in parsed_points[-1]):
            raise ValidationError(sid, f"gaze point {p!r} has non-finite entries")

    ttc = obj.get("text_token_count")
    if ttc is not None and (not isinstance(ttc, int) or ttc < 0):
        raise ValidationError(sid, "text_token_count must be a non-negative integer")

    return Sample(
        sample_id=sid,
        image_path=image_path,
        gaze_points=parsed_points,
        question=question,
        reference_answer=reference,
        caption=caption,
        text_token_count=ttc,
    )


def load_manifest(path: str | Path) -> Manifest:
    """Parse and validate a manifest, clamping gaze points to image bounds.

    Out-of-bounds points are moved to the nearest in-bounds pixel and the
    per-sample count of moved points lands on ``Sample.clamp_count``.
    """
    path = Path(path)
    root = path.parent
    source_name, version, coords = "unknown", "0", "pixel"

    samples: list[Sample] = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(line_no, str(exc)) from exc
            if not isinstance(obj, dict):
                raise ManifestParseError(line_no, "expected a JSON object")
            if "manifest" in obj:
                if samples or line_no != 1:
                    raise ManifestParseError(line_no, "manifest header must be the first line")
                header = obj["manifest"]
                source_name = header.get("source_name", source_name)
                version = str(header.get("version", version))
                coords = header.get("coordinates", coords)
                if coords not in ("pixel", "normalized"):
                    raise ManifestParseError(line_no, f"unknown coordinates flag {coords!r}")
                continue
            sample = _parse_sample(obj, line_no)
            if sample.sample_id in seen:
                raise ValidationError(
                    sample.sample_id,
                    f"duplicate sample_id (lines {seen[sample.sample_id]} and {line_no})",
                )
            seen[sample.sample_id] = line_no
            samples.append(sample)

    for sample in samples:
        img_path = sample.resolve_image(root)
        try:
            w, h = image_size(img_path)
        except (FileNotFoundError, UnidentifiedImageError, OSError):
            raise MissingImageError(sample.sample_id, str(img_path))
        trace = GazeTrace.from_points(
            sample.gaze_points, w, h, normalized=(coords == "normalized")
        )
        clamped = []
        for i, (x, y) in enumerate(trace.points):
            point = sample.gaze_points[i]
            if len(point) == 3:
                clamped.append((float(x), float(y), point[2]))
            else:
                clamped.append((float(x), float(y)))
        sample.gaze_points = clamped
        sample.clamp_count = trace.clamped_count

    return Manifest(samples=samples, source_name=source_name, version=version, root=root)


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write a manifest back out (always in pixel coordinates)."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "manifest": {
                "source_name": manifest.source_name,
                "version": manifest.version,
                "coordinates": "pixel",
            }
        }
        fh.write(canonical_json(header) + "\n")
        for s in manifest.samples:
            row = {
                "sample_id": s.sample_id,
                "image_path": s.image_path,
                "gaze_points": [list(p) for p in s.gaze_points],
                "question": s.question,
                "reference_answer": s.reference_answer,
                "caption": s.caption,
            }
            if s.text_token_count is not None:
                row["text_token_count"] = s.text_token_count
            fh.write(canonical_json(row) + "\n")


# --- prepared-input bundles -----------------------------------------------------

def export_bundle(
    sample: Sample,
    two_scale_input: TwoScaleInput,
    cost_report: CostReport,
    out_dir: str | Path,
    *,
    roi_box: RoiBox | None = None,
) -> Path:
    """Write one sample's prepared bundle directory.

    Layout: <out_dir>/<sample_id>/{global.png (two-scale only), roi.png,
    prompt.txt, meta.json}. Rerunning with identical inputs is
    byte-identical.
    """
    bundle_dir = Path(out_dir) / sample.sample_id
    try:
        bundle_dir.mkdir(parents=True, exist_ok=True)
        if two_scale_input.global_view is not None:
            Image.fromarray(two_scale_input.global_view.to_uint8(), mode="RGB").save(
                bundle_dir / "global.png", format="PNG"
            )
        Image.fromarray(two_scale_input.roi_view.to_uint8(), mode="RGB").save(
            bundle_dir / "roi.png", format="PNG"
        )
        (bundle_dir / "prompt.txt").write_text(two_scale_input.prompt_text, encoding="utf-8")

        meta = {
            "sample_id": sample.sample_id,
            "mode": two_scale_input.mode.value,
            "template_version": two_scale_input.template_version,
            "box": roi_box.to_dict() if roi_box is not None else None,
            "rho": roi_box.rho if roi_box is not None else None,
            "views": {
                "global": (
                    [two_scale_input.global_view.height, two_scale_input.global_view.width]
                    if two_scale_input.global_view is not None
                    else None
                ),
                "roi": [two_scale_input.roi_view.height, two_scale_input.roi_view.width],
            },
            "image_order": [v.role.value for v in two_scale_input.views()],
            "visual_tokens": cost_report.visual_tokens,
            "text_tokens": cost_report.text_tokens,
            "total_tokens": cost_report.total_tokens,
            "flops_g": cost_report.flops_g,
        }
        (bundle_dir / "meta.json").write_text(canonical_json(meta) + "\n", encoding="utf-8")
    except OSError as exc:
        raise BundleIoError(str(bundle_dir), str(exc)) from exc
    return bundle_dir
