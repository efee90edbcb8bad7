"""Exception types shared across the package."""
from __future__ import annotations


class Rps5Error(Exception):
    """Base class for all package-specific errors."""


class NoInteriorEquilibrium(Rps5Error):
    """The requested equilibrium has no representative in the positive orthant."""


class BoundarySubspaceError(Rps5Error):
    """A state with a zero component cannot be mapped to log coordinates."""


class NoExitError(Rps5Error):
    """A section state with both expanding coordinates zero never leaves."""


class AmbiguousBranchError(Rps5Error):
    """The exit angle coincides with the branch-selection threshold."""
