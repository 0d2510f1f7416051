"""Exception and warning classes shared across the package."""


class OQSieveError(Exception):
    """Base class for all package errors."""


class InvariantError(OQSieveError, ValueError):
    """A value object was constructed in violation of its invariants."""


class BoundaryLeakError(OQSieveError, ValueError):
    """A state does not fit inside the position (or momentum) window of a grid."""


class TruncationError(OQSieveError, ValueError):
    """A Fock-basis truncation is too small for the requested state."""


class StepSizeError(OQSieveError, ValueError):
    """Integrator step size exceeds the stability/accuracy bound."""


class LinearityError(OQSieveError, ValueError):
    """An operator-to-operator map failed the linearity spot check."""


class SpectrumError(OQSieveError, ValueError):
    """Hamiltonian spectrum is not equally spaced (averaging requires periodicity)."""


class PreconditionError(OQSieveError, ValueError):
    """Generic violated precondition."""


class NormalizationError(OQSieveError, ValueError):
    """Probability density does not integrate to one."""


class TruncationWarning(UserWarning):
    """Population reached the top retained Fock level."""


class BoundaryLeakWarning(UserWarning):
    """Population reached the edge of the position grid during propagation."""


class RegimeWarning(UserWarning):
    """Weak-coupling assumptions behind an analytic formula are violated."""


class ConfigError(OQSieveError, ValueError):
    """A run configuration failed to parse or validate."""


class MissingArtifactError(OQSieveError, FileNotFoundError):
    """A results directory lacks a file needed to emit plot data."""
