"""Adapter error hierarchy.

Every failure leaves the source bundle untouched so it can be retried.
"""


class AdapterError(Exception):
    """Base class for everything the adapter raises on purpose."""


class BundleFormatError(AdapterError):
    """A bundle directory is missing files or has unreadable metadata."""

    def __init__(self, bundle_dir: str, reason: str):
        self.bundle_dir = bundle_dir
        self.reason = reason
        super().__init__(f"bad bundle {bundle_dir}: {reason}")


class ModelUnavailableError(AdapterError):
    """The runtime could not be reached or refused the request; retryable."""


class GenerationFailureError(AdapterError):
    """The runtime answered, but the reply is unusable (empty or malformed)."""
