"""Exception hierarchy shared by every module of the package."""


class EntCboError(Exception):
    """Base class for all package errors."""


class InvalidInputError(EntCboError, ValueError):
    """Non-finite entries, out-of-range parameters or malformed input."""


class DimensionError(EntCboError, ValueError):
    """Incompatible matrix shapes or dimension arguments."""


class StructureError(EntCboError, ValueError):
    """A matrix violates the (skew-)Hermitian structure it must carry."""


class NotPSDError(EntCboError, ValueError):
    """Eigenvalue below the allowed negative slack."""


class RankDeficientError(EntCboError, ValueError):
    """Gram-Schmidt met a numerically dependent column."""


class DensityValidationError(EntCboError, ValueError):
    """Base class for density-matrix invariant violations."""


class NotHermitianError(DensityValidationError):
    pass


class TraceError(DensityValidationError):
    pass


class NegativeEigenvalueError(DensityValidationError, NotPSDError):
    pass
