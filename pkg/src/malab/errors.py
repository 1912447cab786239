"""Error signals shared across the package.

Every guard clause raises one of these so callers can distinguish
misconfiguration (usage) from geometric degeneracies encountered mid-run.
"""


class MALabError(Exception):
    """Base class for all package errors."""


class DomainError(MALabError):
    """Point lies outside the domain, or an evaluation left its validity set."""


class ResolutionError(MALabError):
    """Grid too coarse for the requested construction."""


class NearBoundaryError(MALabError):
    """A finite-difference stencil exits the domain."""


class InputError(MALabError):
    """Malformed data handed to a solver or monitor (e.g. negative rhs)."""


class TooSmallSectionError(MALabError):
    """Requested section height is below what the grid resolves."""


class DegenerateSectionError(MALabError):
    """Section collapsed (non-positive center-of-mass height)."""


class EmptySliceError(MALabError):
    """Requested slice of a section contains no points."""


class MonotonicityError(MALabError):
    """Field is not strictly monotone along the probed direction."""


class MultivaluedError(MALabError):
    """Convex conjugate is multivalued (flat piece in the input)."""


class InsufficientDataError(MALabError):
    """Not enough records / decade span for a fit."""


class ConfigError(MALabError):
    """Configuration file could not be parsed or fails validation."""
