"""Exception hierarchy for the whole pipeline.

Every error carries a machine-readable ``code`` (the class name) so the
service layer can surface it in JSON bodies and the CLI can map it to an
exit code without string matching.
"""

from __future__ import annotations


class PromptVoxError(Exception):
    """Base class for all library errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- cloud ingestion / persistence ---------------------------------------

class UnreadableFile(PromptVoxError):
    pass


class MalformedRecord(PromptVoxError):
    """A record in an input file could not be parsed.

    ``location`` is a 1-based line number for text formats or a byte
    offset for binary formats.
    """

    def __init__(self, message: str, location: int | None = None):
        super().__init__(message)
        self.location = location


class UnsupportedPlyFeature(PromptVoxError):
    pass


class EmptyCloud(PromptVoxError):
    pass


class DegenerateCloud(PromptVoxError):
    pass


class LengthMismatch(PromptVoxError):
    pass


class IoFailure(PromptVoxError):
    pass


# --- voxel grid ------------------------------------------------------------

class ResolutionOutOfRange(PromptVoxError):
    pass


class IndexOutOfRange(PromptVoxError):
    pass


class PointIndexOutOfRange(PromptVoxError):
    pass


# --- prompts ---------------------------------------------------------------

class MalformedPrompt(PromptVoxError):
    """Structurally invalid prompt (bad dims, wrong mask length, ...)."""


class EmptyMaskPrompt(PromptVoxError):
    pass


class PromptOutsideGrid(PromptVoxError):
    pass


# --- segmentation backends --------------------------------------------------

class BackendUnavailable(PromptVoxError):
    """Remote backend could not be reached before the deadline."""

    def __init__(self, message: str, elapsed: float | None = None):
        super().__init__(message)
        self.elapsed = elapsed


class InvalidPrompt(PromptVoxError):
    """The 2D prompt yields no usable seed on the first frame."""


class ProtocolError(PromptVoxError):
    """Remote response violates the wire contract."""


class RemoteFailure(PromptVoxError):
    """Error reported by the remote backend itself, passed through."""


# --- pipeline ---------------------------------------------------------------

class DimensionMismatch(PromptVoxError):
    pass


class PartialBackendFailure(PromptVoxError):
    """Some directional views failed; no partial results are returned."""

    def __init__(self, message: str, failures: dict | None = None):
        super().__init__(message)
        self.failures = failures or {}
