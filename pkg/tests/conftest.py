import json
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per release criterion, outside output capture."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "ACCEPTANCE_RESULTS", [])
    if results:
        terminalreporter.section("acceptance criteria")
        for name, ok in results:
            terminalreporter.write_line(
                f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}"
            )


@pytest.fixture
def fixture_manifest_path() -> Path:
    return FIXTURES / "manifest.jsonl"


@pytest.fixture
def manifest_factory(tmp_path):
    """Build a small manifest with real PNGs under tmp_path.

    Each sample spec is a dict of overrides; image_size makes the PNG,
    everything else lands in the manifest line verbatim.
    """

    def build(samples, header=None, name="manifest.jsonl"):
        rng = np.random.default_rng(0)
        (tmp_path / "images").mkdir(exist_ok=True)
        lines = []
        if header is not None:
            lines.append(json.dumps({"manifest": header}))
        for i, spec in enumerate(samples):
            spec = dict(spec)
            sid = spec.setdefault("sample_id", f"s{i:02d}")
            w, h = spec.pop("image_size", (96, 80))
            image_path = spec.setdefault("image_path", f"images/{sid}.png")
            if not spec.pop("skip_image", False):
                pixels = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
                Image.fromarray(pixels, mode="RGB").save(tmp_path / image_path)
            spec.setdefault("gaze_points", [[w * 0.5, h * 0.5], [w * 0.4, h * 0.6]])
            spec.setdefault("question", f"What is in region {i}?")
            spec.setdefault("reference_answer", f"Reference answer {i}.")
            spec.setdefault("caption", f"Caption {i}.")
            lines.append(json.dumps(spec))
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return build
