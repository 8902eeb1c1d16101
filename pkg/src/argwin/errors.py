"""Error types raised across argwin.

Every error carries a stable ``kind`` string so the CLI can report failures
as machine-readable JSON.
"""

from __future__ import annotations

from typing import Any


class ArgwinError(Exception):
    """Base class for all argwin errors."""

    kind = "ArgwinError"

    def to_dict(self) -> dict[str, Any]:
        """Convert to the JSON error object emitted on stderr."""
        return {"error": self.kind, "message": str(self)}


# --- Tree construction ---


class TreeValidationError(ArgwinError, ValueError):
    """Input records do not describe a valid reply tree."""

    kind = "TreeValidation"


class DuplicateIdError(TreeValidationError):
    kind = "DuplicateId"


class MultipleRootsError(TreeValidationError):
    kind = "MultipleRoots"


class MissingRootError(TreeValidationError):
    kind = "MissingRoot"


class OrphanParentError(TreeValidationError):
    kind = "OrphanParent"


class CycleDetectedError(TreeValidationError):
    kind = "CycleDetected"


class PolarityOnRootError(TreeValidationError):
    kind = "PolarityOnRoot"


class MissingPolarityError(TreeValidationError):
    kind = "MissingPolarity"


class NoEdgesError(ArgwinError, ValueError):
    """Operation needs at least one reply edge but the tree is root-only."""

    kind = "NoEdges"


# --- Semantics ---


class NotAcyclicError(ArgwinError, ValueError):
    kind = "NotAcyclic"


class TooLargeError(ArgwinError, ValueError):
    kind = "TooLarge"


# --- Models and generation ---


class InvalidModelError(ArgwinError, ValueError):
    """Degree model or ensemble parameters are out of range."""

    kind = "InvalidModel"


class InvalidProbabilityError(ArgwinError, ValueError):
    kind = "InvalidProbability"


class DegenerateTreeError(ArgwinError):
    """Depth-conditioned generation never reached the requested depth."""

    kind = "DegenerateTree"


# --- Analytics and estimation ---


class MissingLeafProfileError(ArgwinError, ValueError):
    kind = "MissingLeafProfile"


class InsufficientLevelsError(ArgwinError, ValueError):
    kind = "InsufficientLevels"


class EmptyEnsembleError(ArgwinError, ValueError):
    kind = "EmptyEnsemble"


# --- Ingest ---


class InsufficientTailError(ArgwinError, ValueError):
    kind = "InsufficientTail"


class UnreadablePathError(ArgwinError, OSError):
    kind = "UnreadablePath"
