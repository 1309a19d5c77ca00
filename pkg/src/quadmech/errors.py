"""Exception hierarchy shared by all quadmech modules."""


class QuadmechError(Exception):
    """Base class for all quadmech errors."""


class InvalidDimensionError(QuadmechError):
    """A Fock-space dimension is zero, negative or inconsistent."""


class DimensionMismatchError(QuadmechError):
    """Operands live on incompatible Hilbert spaces."""


class TruncationError(QuadmechError):
    """The requested state does not fit the truncated Fock space."""


class StepSizeError(QuadmechError):
    """The fixed integrator step is too large for the assembled generator."""


class DegenerateProjectionError(QuadmechError):
    """A conditional measurement was requested on a ~zero-probability outcome."""


class ConfigError(QuadmechError):
    """A run configuration file is malformed or contains unknown keys."""
