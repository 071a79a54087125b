"""Generate the committed synthetic fixture set: 10 images + manifest.

Images are seeded gradient-plus-shapes PNGs in assorted sizes; gaze traces
are clustered around one or two per-sample fixation targets so the ROI
pipeline has real structure to find. Regenerating with the same seed is
byte-identical, but the outputs are committed so tests never depend on
this script.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np
from PIL import Image

IMAGE_SIZES = [  # (width, height), varied to exercise snapping paths
    (128, 96), (224, 224), (320, 240), (100, 100), (160, 120),
    (96, 128), (256, 192), (144, 144), (200, 150), (112, 84),
]

QUESTIONS = [
    "What color is the object the user is looking at?",
    "How many shapes appear in the gazed region?",
    "What is in the highlighted region?",
    "Is the gazed object darker than its background?",
    "What shape is at the fixation point?",
]


def make_image(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    img = np.zeros((height, width, 3), dtype=np.float64)
    img[..., 0] = 255.0 * xx / max(width - 1, 1)
    img[..., 1] = 255.0 * yy / max(height - 1, 1)
    img[..., 2] = rng.integers(0, 256)
    for _ in range(3):  # a few solid rectangles for the crops to latch onto
        x0 = int(rng.integers(0, width - 8))
        y0 = int(rng.integers(0, height - 8))
        x1 = min(width, x0 + int(rng.integers(8, width // 2)))
        y1 = min(height, y0 + int(rng.integers(8, height // 2)))
        img[y0:y1, x0:x1] = rng.integers(0, 256, size=3)
    return img.astype(np.uint8)


def make_trace(rng: np.random.Generator, width: int, height: int) -> list[list[float]]:
    n_clusters = int(rng.integers(1, 3))
    points: list[list[float]] = []
    t = 0.0
    for _ in range(n_clusters):
        cx = float(rng.uniform(0.2, 0.8) * width)
        cy = float(rng.uniform(0.2, 0.8) * height)
        spread = float(rng.uniform(0.02, 0.06)) * (width + height) / 2.0
        for _ in range(int(rng.integers(15, 30))):
            x = float(np.clip(rng.normal(cx, spread), 0, width - 1))
            y = float(np.clip(rng.normal(cy, spread), 0, height - 1))
            t += float(rng.uniform(0.01, 0.05))
            points.append([round(x, 2), round(y, 2), round(t, 3)])
    return points


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fixtures", help="fixture directory")
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--samples", type=int, default=10)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    (out / "images").mkdir(parents=True, exist_ok=True)

    lines = [json.dumps({"manifest": {
        "source_name": "synthetic-fixture", "version": "1", "coordinates": "pixel",
    }})]
    for i in range(args.samples):
        width, height = IMAGE_SIZES[i % len(IMAGE_SIZES)]
        sid = f"syn{i:03d}"
        image = make_image(rng, width, height)
        Image.fromarray(image, mode="RGB").save(out / "images" / f"{sid}.png")
        lines.append(json.dumps({
            "sample_id": sid,
            "image_path": f"images/{sid}.png",
            "gaze_points": make_trace(rng, width, height),
            "question": QUESTIONS[i % len(QUESTIONS)],
            "reference_answer": f"A synthetic reference answer for {sid}.",
            "caption": f"Synthetic scene {i} with a color gradient and rectangles.",
        }))
    (out / "manifest.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {args.samples} samples under {out}/")


if __name__ == "__main__":
    main()
