"""Exception types shared across the package.

Every error carries a stable machine-readable ``code`` used by the CLI
(`ERROR code=... msg=...` lines) so scripted callers never have to parse
human text.
"""

from __future__ import annotations


class ConesysError(Exception):
    """Base class for all domain errors."""

    code = "ConesysError"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class UnmatchedEdgeError(ConesysError):
    """An edge is unglued, glued twice, or glued to an edge of different length."""

    code = "UnmatchedEdge"


class DisconnectedError(ConesysError):
    """The glued polygon complex is not connected."""

    code = "Disconnected"


class DegeneratePolygonError(ConesysError):
    """A polygon is non-convex, not counterclockwise, or has zero area."""

    code = "DegeneratePolygon"


class DegenerateLatticeError(ConesysError):
    """Lattice vectors are linearly dependent."""

    code = "DegenerateLattice"


class InvalidGenusError(ConesysError):
    """Genus outside the supported range."""

    code = "InvalidGenus"


class BasepointOnConePointError(ConesysError):
    """A cone point cannot serve as the basepoint of a development."""

    code = "BasepointOnConePoint"


class BudgetExceededError(ConesysError):
    """A search exceeded its node or crossing budget."""

    code = "BudgetExceeded"


class NotNonpositivelyCurvedError(ConesysError):
    """Operation requires every cone angle to be at least 2*pi."""

    code = "NotNonpositivelyCurved"


class PositiveCurvatureUnsupportedError(ConesysError):
    """Constant-curvature comparison models accept K <= 0 only."""

    code = "PositiveCurvatureUnsupported"


class SamplingCapExceededError(ConesysError):
    """Escalated sampling failed to locate a below-average point (indicates a bug)."""

    code = "SamplingCapExceeded"


class NonpositiveInputError(ConesysError):
    """Area and systole must be positive."""

    code = "NonpositiveInput"


class PositiveEulerError(ConesysError):
    """Bound formulas require Euler characteristic <= 0."""

    code = "PositiveEuler"


class RadiusTooLargeError(ConesysError):
    """Radius at or beyond half the systole; pass the explicit override to proceed."""

    code = "RadiusTooLarge"


class SurfaceFormatError(ConesysError):
    """Malformed surface file (unknown keys, bad indices, bad numbers)."""

    code = "SurfaceFormat"
