"""Exception hierarchy shared by all modules."""


class UnfoldHomogError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(UnfoldHomogError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DataError(UnfoldHomogError, ValueError):
    """Field or sample data is malformed (non-finite values, bad shapes)."""


class CertificateError(UnfoldHomogError, RuntimeError):
    """A scan-based certificate could not be established on the given range."""


class DegenerateYoungFunctionError(CertificateError):
    """B vanishes at a scanned t > 0, so doubling ratios are undefined."""


class AlignmentError(UnfoldHomogError, ValueError):
    """Grids do not satisfy the lattice-alignment contract of an exact identity."""


class GrowthRejectionError(UnfoldHomogError, ValueError):
    """An integrand failed the lower growth bound and is refused for solver use."""


class SolverError(UnfoldHomogError, RuntimeError):
    """All restarts of a minimization produced non-finite energies."""


class ExtrapolationError(UnfoldHomogError, ValueError):
    """A table lookup would require extrapolation outside the tabulated range."""


class ConfigError(UnfoldHomogError, ValueError):
    """A run configuration does not parse or fails schema validation."""
