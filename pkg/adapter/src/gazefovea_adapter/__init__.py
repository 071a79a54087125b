"""Feed prepared foveated-input bundles to a hosted VLM and collect answers."""

from .bundle import PreparedBundle, bundle_hash, read_bundle
from .client import (
    VLM_API_KEY_ENV,
    VLM_ENDPOINT_ENV,
    VLM_MODEL_ENV,
    GenerationSettings,
    HttpVlmClient,
    VlmClient,
    VlmReply,
)
from .errors import (
    AdapterError,
    BundleFormatError,
    GenerationFailureError,
    ModelUnavailableError,
)
from .runner import (
    AnswerCache,
    InferenceRecord,
    ModelConfig,
    canonical_json,
    run_batch,
    run_inference,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "AnswerCache",
    "BundleFormatError",
    "GenerationFailureError",
    "GenerationSettings",
    "HttpVlmClient",
    "InferenceRecord",
    "ModelConfig",
    "ModelUnavailableError",
    "PreparedBundle",
    "VlmClient",
    "VlmReply",
    "VLM_API_KEY_ENV",
    "VLM_ENDPOINT_ENV",
    "VLM_MODEL_ENV",
    "bundle_hash",
    "canonical_json",
    "read_bundle",
    "run_batch",
    "run_inference",
]
