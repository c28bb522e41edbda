"""Exception types shared across the package.

Every numerical failure raised by the library derives from WillmisoError so
the CLI can map it to exit code 2 with a machine-readable line on stderr.
"""


class WillmisoError(Exception):
    """Base class for all library-specific failures."""

    code = "WillmisoError"


class MeshValidationError(WillmisoError):
    code = "MeshValidationError"


class DegenerateNormal(WillmisoError):
    code = "DegenerateNormal"


class NonPositiveVolume(WillmisoError):
    code = "NonPositiveVolume"


class PoleInput(WillmisoError):
    code = "PoleInput"


class QuadratureNotConverged(WillmisoError):
    code = "QuadratureNotConverged"


class BisectionFailed(WillmisoError):
    code = "BisectionFailed"


class ProjectionStalled(WillmisoError):
    code = "ProjectionStalled"


class LineSearchFailed(WillmisoError):
    code = "LineSearchFailed"


class MeshDegenerated(WillmisoError):
    code = "MeshDegenerated"


class FitDiverged(WillmisoError):
    code = "FitDiverged"


class RecursionHypothesisViolated(WillmisoError):
    code = "RecursionHypothesisViolated"
