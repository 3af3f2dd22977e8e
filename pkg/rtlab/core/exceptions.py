"""Exceptions for rtlab."""
from __future__ import annotations

from typing import Any


class RtlabError(Exception):
    """Base exception for rtlab errors."""

    def __init__(self, message: str, detail: dict[str, Any] | None = None) -> None:
        """Initialize the exception."""
        super().__init__(message)
        self.message = message
        self.detail = detail or {}


class GraphFormatError(RtlabError):
    """Exception for malformed graph input."""


class InvalidParameterError(RtlabError):
    """Exception for a parameter outside its domain."""


class PreconditionError(RtlabError):
    """Exception for a failed operation precondition."""


class EnumerationLimitError(RtlabError):
    """Exception for an exact enumeration that is too large to run."""

    def __init__(self, required: int, limit: int) -> None:
        """Initialize the exception."""
        super().__init__(
            f"Exact enumeration needs {required} subset pairs (limit {limit}); "
            "use the sampled refuter instead",
            detail={"required": required, "limit": limit},
        )
        self.required = required
        self.limit = limit


class K4PresentError(RtlabError):
    """Exception for a K4-free hypothesis receiving a graph with a K4."""

    def __init__(self, clique: tuple[int, int, int, int]) -> None:
        """Initialize the exception."""
        super().__init__(
            f"Graph contains a K4 on {clique}", detail={"clique": list(clique)}
        )
        self.clique = clique


class NoCoreError(RtlabError):
    """Exception for a graph without a minimum-degree core."""

    def __init__(self, reason: str, removed_order: list[int] | None = None) -> None:
        """Initialize the exception."""
        removed = removed_order or []
        super().__init__(
            f"No core: {reason}", detail={"reason": reason, "removed_order": removed}
        )
        self.reason = reason
        self.removed_order = removed


class ExtractionError(RtlabError):
    """Exception for a postcondition failing re-verification."""


class WitnessSearchError(ExtractionError):
    """Exception for a failed search for a sparse subset pair."""


class ClaimFailedError(RtlabError):
    """Exception for a claim failing in assert mode."""

    def __init__(self, claim: str, detail: dict[str, Any] | None = None) -> None:
        """Initialize the exception."""
        super().__init__(f"Claim failed: {claim}", detail=detail)
        self.claim = claim


class ReportSchemaError(RtlabError):
    """Exception for a report that does not match its schema."""
