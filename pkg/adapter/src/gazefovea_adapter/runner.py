"""Batch inference over prepared bundles.

run_batch walks a prepare output directory (results.jsonl plus one bundle
directory per sample), asks the model for an answer per bundle, and writes
answers.jsonl in the row format the scoring command consumes:
{"sample_id": ..., "answer_text": ...} plus provenance fields. Failures
become rows in failures.jsonl and never touch the cache, so a rerun
retries exactly the failed bundles.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .bundle import bundle_hash, read_bundle
from .client import GenerationSettings, VlmClient
from .errors import AdapterError, BundleFormatError, GenerationFailureError

RUN_META_NAME = "run_meta.json"


def _canonize(obj):
    if isinstance(obj, dict):
        return {k: _canonize(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_canonize(v) for v in obj]
    if isinstance(obj, float):
        return float(f"{obj:.6g}")
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, floats at six significant digits; reruns stay byte-stable."""
    return json.dumps(_canonize(obj), sort_keys=True, ensure_ascii=False)


@dataclass(frozen=True)
class InferenceRecord:
    """One answered bundle, as written to answers.jsonl."""

    sample_id: str
    model_name: str
    answer_text: str
    measured_prompt_tokens: int | None = None
    latency_ms: float | None = None

    def to_dict(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "model_name": self.model_name,
            "answer_text": self.answer_text,
            "measured_prompt_tokens": self.measured_prompt_tokens,
            "latency_ms": self.latency_ms,
        }


@dataclass(frozen=True)
class ModelConfig:
    """How a batch run talks to the runtime."""

    model_name: str
    concurrency: int = 2
    settings: GenerationSettings = GenerationSettings()


def run_inference(
    bundle_dir: str | Path,
    client: VlmClient,
    settings: GenerationSettings = GenerationSettings(),
) -> InferenceRecord:
    """Answer one bundle: images in bundle order, prompt text verbatim."""
    bundle = read_bundle(bundle_dir)
    started = time.perf_counter()
    reply = client.generate(bundle.prompt_text, bundle.image_bytes, settings)
    latency_ms = (time.perf_counter() - started) * 1000.0
    if not reply.answer_text:
        raise GenerationFailureError(f"empty answer for sample {bundle.sample_id}")
    return InferenceRecord(
        sample_id=bundle.sample_id,
        model_name=client.model_name,
        answer_text=reply.answer_text,
        measured_prompt_tokens=reply.prompt_tokens,
        latency_ms=latency_ms,
    )


class AnswerCache:
    """Answer store keyed by (bundle content hash, model name).

    Hits replay the stored record byte-for-byte, so cached reruns produce
    identical output files. Only successful generations are stored.
    """

    def __init__(self, cache_dir: str | Path):
        self.cache_dir = Path(cache_dir)

    def _path(self, content_hash: str, model_name: str) -> Path:
        import hashlib

        key = hashlib.sha256(f"{content_hash}|{model_name}".encode("utf-8")).hexdigest()
        return self.cache_dir / f"{key}.json"

    def load(self, content_hash: str, model_name: str) -> InferenceRecord | None:
        path = self._path(content_hash, model_name)
        if not path.is_file():
            return None
        row = json.loads(path.read_text(encoding="utf-8"))
        return InferenceRecord(**row)

    def store(self, content_hash: str, model_name: str, record: InferenceRecord) -> None:
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._path(content_hash, model_name).write_text(
            canonical_json(record.to_dict()) + "\n", encoding="utf-8"
        )


def _sample_ids(run_dir: Path) -> list[str]:
    results = run_dir / "results.jsonl"
    if not results.is_file():
        raise BundleFormatError(str(run_dir), "results.jsonl missing")
    ids = []
    with open(results, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                ids.append(json.loads(line)["sample_id"])
    return ids


def run_batch(
    run_dir: str | Path,
    config: ModelConfig,
    client: VlmClient,
    out_dir: str | Path,
    *,
    cache_dir: str | Path | None = None,
) -> tuple[list[InferenceRecord], list[dict]]:
    """Answer every bundle listed in run_dir's results.jsonl.

    Requests run on up to config.concurrency threads; results are folded
    back in results.jsonl order by this single writer, so output files do
    not depend on scheduling. Returns (records, failure rows) and writes
    answers.jsonl, failures.jsonl, and run_meta.json under out_dir.
    """
    run_dir = Path(run_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache = AnswerCache(cache_dir if cache_dir is not None else out_dir / "cache")
    ids = _sample_ids(run_dir)

    def one(sample_id: str) -> tuple[InferenceRecord | None, dict | None, bool]:
        try:
            bundle = read_bundle(run_dir / sample_id)
            content_hash = bundle_hash(bundle)
            cached = cache.load(content_hash, config.model_name)
            if cached is not None:
                return cached, None, True
            record = run_inference(run_dir / sample_id, client, config.settings)
            cache.store(content_hash, config.model_name, record)
            return record, None, False
        except AdapterError as exc:
            return None, {"sample_id": sample_id, "reason": str(exc)}, False

    if config.concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            outcomes = list(pool.map(one, ids))
    else:
        outcomes = [one(sid) for sid in ids]

    records = [record for record, _, _ in outcomes if record is not None]
    failures = [failure for _, failure, _ in outcomes if failure is not None]
    cache_hits = sum(1 for _, _, hit in outcomes if hit)

    with open(out_dir / "answers.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(canonical_json(record.to_dict()) + "\n")
    with open(out_dir / "failures.jsonl", "w", encoding="utf-8") as fh:
        for failure in failures:
            fh.write(canonical_json(failure) + "\n")

    echo_path = run_dir / "effective_config.json"
    prepare_config = (
        json.loads(echo_path.read_text(encoding="utf-8")) if echo_path.is_file() else None
    )
    run_meta = {
        "model_name": config.model_name,
        "generation": config.settings.as_dict(),
        "concurrency": config.concurrency,
        "n_bundles": len(ids),
        "n_answered": len(records),
        "n_failed": len(failures),
        "cache_hits": cache_hits,
        "prepare_config": prepare_config,
    }
    (out_dir / RUN_META_NAME).write_text(canonical_json(run_meta) + "\n", encoding="utf-8")
    return records, failures
