"""Model runtime clients.

The adapter talks to any runtime through the VlmClient protocol: prompt
text plus image payloads in, answer text (and the runtime's own prompt
token count, when it reports one) out. HttpVlmClient covers OpenAI-style
multimodal chat-completions endpoints; a local runtime only needs to
implement the same one-method protocol.
"""

import base64
import os
from dataclasses import dataclass
from typing import Protocol, Sequence

import httpx

from .errors import GenerationFailureError, ModelUnavailableError

VLM_ENDPOINT_ENV = "GAZEFOVEA_VLM_ENDPOINT"
VLM_MODEL_ENV = "GAZEFOVEA_VLM_MODEL"
VLM_API_KEY_ENV = "GAZEFOVEA_VLM_API_KEY"


@dataclass(frozen=True)
class GenerationSettings:
    """Decoding parameters sent with every request and recorded per run."""

    temperature: float = 0.0  # greedy
    max_tokens: int = 256

    def as_dict(self) -> dict:
        return {"temperature": self.temperature, "max_tokens": self.max_tokens}


@dataclass(frozen=True)
class VlmReply:
    """One generation: the answer plus optional runtime-reported usage."""

    answer_text: str
    prompt_tokens: int | None = None


class VlmClient(Protocol):
    """A runtime that can answer one multimodal prompt.

    Implementations must be safe for concurrent use or serialize
    internally. ``model_name`` feeds the answer cache key.
    """

    model_name: str

    def generate(
        self, prompt_text: str, images: Sequence[bytes], settings: GenerationSettings
    ) -> VlmReply: ...


def _data_url(payload: bytes) -> str:
    return "data:image/png;base64," + base64.b64encode(payload).decode("ascii")


class HttpVlmClient:
    """OpenAI-style multimodal chat endpoint, configured via environment.

    Endpoint, model, and API key default to the GAZEFOVEA_VLM_* variables.
    Transport problems raise ModelUnavailableError (retryable); responses
    with an unusable shape raise GenerationFailureError.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(VLM_ENDPOINT_ENV, "")
        self.model_name = model or os.environ.get(VLM_MODEL_ENV, "")
        self.api_key = api_key or os.environ.get(VLM_API_KEY_ENV, "")
        if not self.endpoint:
            raise ModelUnavailableError(
                f"no model endpoint configured (set {VLM_ENDPOINT_ENV})"
            )
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def generate(
        self, prompt_text: str, images: Sequence[bytes], settings: GenerationSettings
    ) -> VlmReply:
        content = [{"type": "text", "text": prompt_text}]
        content += [
            {"type": "image_url", "image_url": {"url": _data_url(payload)}}
            for payload in images
        ]
        body = {
            "model": self.model_name,
            "temperature": settings.temperature,
            "max_tokens": settings.max_tokens,
            "messages": [{"role": "user", "content": content}],
        }
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        try:
            resp = self._client.post(self.endpoint, json=body, headers=headers)
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise ModelUnavailableError(f"model request failed: {exc}") from exc

        try:
            payload = resp.json()
            answer = payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise GenerationFailureError(f"malformed model response: {exc}") from exc
        if not isinstance(answer, str) or not answer:
            raise GenerationFailureError("model returned an empty answer")

        usage = payload.get("usage") or {}
        tokens = usage.get("prompt_tokens")
        return VlmReply(
            answer_text=answer,
            prompt_tokens=int(tokens) if isinstance(tokens, int) else None,
        )
