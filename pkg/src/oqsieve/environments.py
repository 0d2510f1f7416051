"""Environment models, noise-correlation kernels and the decoherence rates derived from them.

Noise is white in time; the delta(t - s) factor of the potential correlator
is absorbed into the kernels, which therefore carry units of hbar**2 * rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import InvariantError, PreconditionError
from .states import OscillatorParams


@dataclass(frozen=True)
class CaldeiraLeggettParams:
    """High-temperature ohmic bath linearly coupled to the oscillator.

    ``weak_dissipation`` drops the two friction terms and keeps only the
    double-commutator noise term with coefficient :attr:`D`.
    """

    gamma: float
    kT: float
    osc: OscillatorParams = OscillatorParams()
    weak_dissipation: bool = True

    def __post_init__(self):
        if not self.gamma >= 0:
            raise InvariantError(f"gamma must be >= 0, got {self.gamma!r}")
        if not self.kT > 0:
            raise InvariantError(f"kT must be > 0, got {self.kT!r}")

    @property
    def D(self) -> float:
        """Position-diffusion coefficient 2 m gamma kT / hbar^2."""
        return 2 * self.osc.m * self.gamma * self.kT / self.osc.hbar ** 2

    @classmethod
    def from_D(cls, D: float, kT: float = 1.0, osc: OscillatorParams = OscillatorParams(),
               **kw) -> "CaldeiraLeggettParams":
        return cls(gamma=D * osc.hbar ** 2 / (2 * osc.m * kT), kT=kT, osc=osc, **kw)

    @property
    def kind(self) -> str:
        return "cl"


@dataclass(frozen=True)
class CorrelatedNoiseParams:
    """Homogeneous Gaussian-correlated noise: saturation rate ``lam``, correlation length ``sigma``."""

    lam: float
    sigma: float

    def __post_init__(self):
        if not self.lam > 0:
            raise InvariantError(f"lambda must be > 0, got {self.lam!r}")
        if not self.sigma > 0:
            raise InvariantError(f"sigma must be > 0, got {self.sigma!r}")

    @property
    def kind(self) -> str:
        return "correlated"


@dataclass(frozen=True)
class QOMEParams:
    """Quantum optical master equation: damping rate ``Gamma`` and thermal occupation ``N``."""

    Gamma: float
    N: float
    osc: OscillatorParams = OscillatorParams()

    def __post_init__(self):
        if not self.Gamma >= 0:
            raise InvariantError(f"Gamma must be >= 0, got {self.Gamma!r}")
        if not self.N >= 0:
            raise InvariantError(f"N must be >= 0, got {self.N!r}")

    @classmethod
    def from_temperature(cls, Gamma: float, beta: float,
                         osc: OscillatorParams = OscillatorParams()) -> "QOMEParams":
        return cls(Gamma, thermal_occupation(beta * osc.hbar * osc.omega), osc)

    @classmethod
    def from_spectral_density(cls, J: Callable[[float], float], M: float, N: float,
                              osc: OscillatorParams = OscillatorParams()) -> "QOMEParams":
        return cls(gamma_from_spectral_density(J, M, osc.omega), N, osc)

    @property
    def kind(self) -> str:
        return "qome"


EnvironmentModel = Union[CaldeiraLeggettParams, CorrelatedNoiseParams, QOMEParams]


def describe(model: EnvironmentModel) -> dict:
    """Flat descriptor used in result metadata."""
    out = {"kind": model.kind}
    if isinstance(model, CaldeiraLeggettParams):
        out.update(gamma=model.gamma, kT=model.kT, D=model.D, weak_dissipation=model.weak_dissipation)
    elif isinstance(model, CorrelatedNoiseParams):
        out.update(lam=model.lam, sigma=model.sigma)
    elif isinstance(model, QOMEParams):
        out.update(Gamma=model.Gamma, N=model.N)
    else:
        raise TypeError(f"unknown environment model {type(model).__name__}")
    osc = getattr(model, "osc", None)
    if osc is not None:
        out.update(m=osc.m, omega=osc.omega, hbar=osc.hbar)
    return out


@dataclass(frozen=True)
class CorrelationKernel:
    """Potential-noise correlator c(x, y) in units of hbar**2 * rate.

    The callable must be pure and accept broadcastable arrays.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    homogeneous: bool = False
    isotropic: bool = False
    hbar: float = 1.0
    name: str = field(default="custom")

    def __call__(self, x, y):
        return self.func(x, y)


def gaussian_kernel(p: CorrelatedNoiseParams, hbar: float = 1.0) -> CorrelationKernel:
    """c(x, y) = hbar^2 (lam / 2) exp(-((x - y) / sigma)^2)."""
    def c(x, y):
        return hbar ** 2 * p.lam / 2 * np.exp(-((np.asarray(x) - np.asarray(y)) / p.sigma) ** 2)
    return CorrelationKernel(c, homogeneous=True, isotropic=True, hbar=hbar, name="gaussian")


def linear_kernel(kappa: float, hbar: float = 1.0) -> CorrelationKernel:
    """Perfectly correlated forces: c(x, y) = hbar^2 kappa x y."""
    def c(x, y):
        return hbar ** 2 * kappa * np.asarray(x) * np.asarray(y)
    return CorrelationKernel(c, homogeneous=False, isotropic=False, hbar=hbar, name="linear")


def decoherence_kernel(c: CorrelationKernel, x, y):
    """g(x, y) = (c(x, x) + c(y, y) - 2 Re c(x, y)) / hbar^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = (np.real(c(x, x)) + np.real(c(y, y)) - 2 * np.real(c(x, y))) / c.hbar ** 2
    # the diagonal vanishes identically; enforce it against rounding
    return np.where(x == y, 0.0, g)


def g_correlated(p: CorrelatedNoiseParams, r):
    """Saturating decoherence rate lam (1 - exp(-(r / sigma)^2))."""
    return -p.lam * np.expm1(-(np.asarray(r, dtype=float) / p.sigma) ** 2)


def g_quadratic_approx(p: CorrelatedNoiseParams, r):
    """Leading small-separation term lam r^2 / sigma^2 of :func:`g_correlated`."""
    return p.lam * (np.asarray(r, dtype=float) / p.sigma) ** 2


def g_caldeira_leggett(p: CaldeiraLeggettParams, r):
    return p.D * np.asarray(r, dtype=float) ** 2


def thermal_occupation(beta_hbar_omega: float) -> float:
    """Bose-Einstein occupation 1 / (exp(x) - 1)."""
    if not beta_hbar_omega > 0:
        raise PreconditionError(f"beta*hbar*omega must be > 0, got {beta_hbar_omega!r}")
    return 1.0 / math.expm1(beta_hbar_omega)


def gamma_from_spectral_density(J: Callable[[float], float], M: float, omega: float) -> float:
    """Damping rate pi J(omega) / (2 omega^2 M).

    ``J`` stands for the bath combination n_osc C^2 / m_osc as a function of frequency.
    """
    j = float(J(omega))
    if j < 0:
        raise PreconditionError(f"spectral density must be non-negative, J({omega})={j}")
    return math.pi * j / (2 * omega ** 2 * M)
