"""Reading prepared-input bundle directories.

A bundle is one directory per sample: roi.png, prompt.txt, meta.json, and
global.png when the input mode includes a global view. meta.json's
image_order field says which images a request must carry and in what order.
The adapter never modifies these files; request payloads embed their exact
bytes.
"""

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import BundleFormatError

# role name in meta.json image_order -> file inside the bundle directory
ROLE_FILES = {"global": "global.png", "roi": "roi.png"}


@dataclass(frozen=True)
class PreparedBundle:
    """One sample's model input, loaded verbatim from disk."""

    bundle_dir: Path
    sample_id: str
    mode: str
    prompt_text: str
    image_names: tuple[str, ...]
    image_bytes: tuple[bytes, ...]
    meta: dict


def read_bundle(bundle_dir: str | Path) -> PreparedBundle:
    """Load a bundle directory, validating layout against its metadata."""
    bundle_dir = Path(bundle_dir)
    meta_path = bundle_dir / "meta.json"
    if not meta_path.is_file():
        raise BundleFormatError(str(bundle_dir), "meta.json missing")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise BundleFormatError(str(bundle_dir), f"meta.json unreadable: {exc}") from exc

    sample_id = meta.get("sample_id")
    order = meta.get("image_order")
    if not isinstance(sample_id, str) or not isinstance(order, list) or not order:
        raise BundleFormatError(str(bundle_dir), "meta.json needs sample_id and image_order")

    names: list[str] = []
    payloads: list[bytes] = []
    for role in order:
        name = ROLE_FILES.get(role)
        if name is None:
            raise BundleFormatError(str(bundle_dir), f"unknown image role {role!r}")
        path = bundle_dir / name
        if not path.is_file():
            raise BundleFormatError(str(bundle_dir), f"{name} missing")
        names.append(name)
        payloads.append(path.read_bytes())

    prompt_path = bundle_dir / "prompt.txt"
    if not prompt_path.is_file():
        raise BundleFormatError(str(bundle_dir), "prompt.txt missing")

    return PreparedBundle(
        bundle_dir=bundle_dir,
        sample_id=sample_id,
        mode=str(meta.get("mode", "")),
        prompt_text=prompt_path.read_text(encoding="utf-8"),
        image_names=tuple(names),
        image_bytes=tuple(payloads),
        meta=meta,
    )


def bundle_hash(bundle: PreparedBundle) -> str:
    """Content hash of everything a request depends on.

    Covers the prompt, metadata, and image bytes in request order, each
    framed by name and length so file boundaries cannot alias.
    """
    digest = hashlib.sha256()
    parts = [("prompt.txt", bundle.prompt_text.encode("utf-8"))]
    parts += list(zip(bundle.image_names, bundle.image_bytes))
    parts.append(("meta.json", (bundle.bundle_dir / "meta.json").read_bytes()))
    for name, payload in parts:
        digest.update(f"{name}:{len(payload)}\n".encode("utf-8"))
        digest.update(payload)
    return digest.hexdigest()
