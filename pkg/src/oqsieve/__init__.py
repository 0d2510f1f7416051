"""Decoherence of a harmonic oscillator and the predictability sieve for its pointer states."""
from .environments import (CaldeiraLeggettParams, CorrelatedNoiseParams, EnvironmentModel, QOMEParams,
                           thermal_occupation)
from .errors import (BoundaryLeakError, ConfigError, InvariantError, OQSieveError, PreconditionError,
                     RegimeWarning, SpectrumError, StepSizeError, TruncationError, TruncationWarning)
from .sieve import SieveResult, entropy_rate_numeric, linear_entropy, run_sieve
from .states import (FockDensityMatrix, GaussianPureState, GridDensityMatrix, OscillatorParams, PositionGrid,
                     gaussian_density, make_coherent_fock, make_gaussian_wavefunction, moments)

__version__ = "0.1.0"
