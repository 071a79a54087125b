"""Exception types shared across the package.

Every error raised by library code derives from :class:`GazeFoveaError` so
callers (notably the CLI) can separate expected pipeline failures from bugs.
"""

from __future__ import annotations


class GazeFoveaError(Exception):
    """Base class for all library errors."""


# --- gaze heatmap ---------------------------------------------------------

class EmptyTraceError(GazeFoveaError):
    """A gaze trace with no points was passed to heatmap construction."""


class InvalidSigmaError(GazeFoveaError):
    """Gaussian sigma is not a finite positive number."""


class ZeroMassError(GazeFoveaError):
    """Grid has zero total mass and cannot be normalized."""


# --- ROI extraction -------------------------------------------------------

class InvalidRhoError(GazeFoveaError):
    """Gaze-mass threshold rho is outside the open interval (0, 1)."""


class PolicyLargerThanImageError(GazeFoveaError):
    """Minimum crop size exceeds the image dimensions."""


class OutOfBoundsError(GazeFoveaError):
    """A box does not fit inside the image it is applied to."""


# --- input assembly -------------------------------------------------------

class BadTargetError(GazeFoveaError):
    """Requested view dimensions are not positive multiples of the token pitch."""


class ModeMismatchError(GazeFoveaError):
    """The set of provided views does not match the requested input mode."""


# --- cost model -----------------------------------------------------------

class UnsnappedViewError(GazeFoveaError):
    """A view side is not a whole multiple of the token pitch."""


class DegenerateRowsError(GazeFoveaError):
    """Calibration rows all share one token count; no line can be fit."""


class ZeroBaselineError(GazeFoveaError):
    """Baseline counts are zero; reduction percentages are undefined."""


# --- evaluation -----------------------------------------------------------

class OutOfRangeError(GazeFoveaError):
    """A judge score dimension is outside [0, 10]."""


class AllTiesError(GazeFoveaError):
    """wins + losses is zero; the ties-excluded win rate is undefined."""


class JudgeUnavailableError(GazeFoveaError):
    """The judge endpoint could not be reached after retries."""


class MalformedJudgeResponseError(GazeFoveaError):
    """The judge reply did not match the structured response grammar.

    The offending reply is retained on ``payload`` for auditing.
    """

    def __init__(self, message: str, payload: str = ""):
        super().__init__(message)
        self.payload = payload


# --- dataset I/O ----------------------------------------------------------

class ManifestParseError(GazeFoveaError):
    """A manifest line is not valid JSON."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ValidationError(GazeFoveaError):
    """A sample violates the manifest schema."""

    def __init__(self, sample_id: str, reason: str):
        super().__init__(f"sample {sample_id!r}: {reason}")
        self.sample_id = sample_id
        self.reason = reason


class MissingImageError(GazeFoveaError):
    """A sample references an image that does not exist or cannot be read."""

    def __init__(self, sample_id: str, path: str):
        super().__init__(f"sample {sample_id!r}: image not readable: {path}")
        self.sample_id = sample_id
        self.path = path


class BundleIoError(GazeFoveaError):
    """Writing a prepared-input bundle failed."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class SampleNotFoundError(GazeFoveaError):
    """The requested sample_id is not present in the manifest."""

    def __init__(self, sample_id: str):
        super().__init__(f"sample {sample_id!r} not found in manifest")
        self.sample_id = sample_id
