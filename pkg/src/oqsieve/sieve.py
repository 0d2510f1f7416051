"""Linear-entropy production and the predictability sieve over squeezed Gaussian packets.

Two routes are offered for every environment model. The analytic route uses
closed-form pure-state rates (and direct quadrature of the pair-separation
integral for correlated noise). The numeric route builds the density matrix
of each candidate, evaluates ``-2 Tr[rho L(rho)]`` with the model's
generator, and follows the free oscillator orbit with an actual propagator.

Period-averaged measures report the mean instantaneous rate over one free
period, ``(1/tau) int_0^tau rate dt``; multiply by the period for the entropy
accumulated per period. Only the argmin is convention independent.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.signal import convolve

from .dynamics.generators import GridGenerator, fock_generator, model_oscillator
from .dynamics.superop import Superoperator
from .environments import (CaldeiraLeggettParams, CorrelatedNoiseParams, EnvironmentModel, QOMEParams,
                           describe)
from .errors import NormalizationError, PreconditionError, RegimeWarning
from .states import (DensityMatrix, FockDensityMatrix, GaussianPureState, GridDensityMatrix, Moments,
                     OscillatorParams, PositionGrid, gaussian_density, gaussian_to_fock, hamiltonian_fock,
                     make_gaussian_wavefunction)

FLAT_RATIO = 1.05
REGIME_LIMIT = 0.1


def linear_entropy(rho: DensityMatrix) -> float:
    """1 - Tr[rho^2] in the representation's own trace."""
    return 1.0 - rho.purity()


def entropy_rate_numeric(rho: DensityMatrix, L: Callable[[np.ndarray], np.ndarray] | Superoperator) -> float:
    """-2 Tr[rho L(rho)] for a generator given as a callable (or superoperator) on raw arrays."""
    r = rho.elements
    Lr = L(r)
    tr = np.sum(r * Lr.T)
    if isinstance(rho, GridDensityMatrix):
        tr = tr * rho.grid.dx ** 2
    return float(-2 * np.real(tr))


def _var_x(moments_or_var) -> float:
    return moments_or_var.var_x if isinstance(moments_or_var, Moments) else float(moments_or_var)


def entropy_rate_cl(var_x, p: CaldeiraLeggettParams) -> float:
    """4 D var_x: pure-state rate under the weak-dissipation Caldeira-Leggett equation."""
    return 4 * p.D * _var_x(var_x)


def entropy_rate_correlated(P: np.ndarray, grid: PositionGrid, p: CorrelatedNoiseParams) -> float:
    """2 lam int int P(x) P(y) (1 - exp(-((x - y) / sigma)^2)) dx dy by grid quadrature.

    Uses the saturating form of the kernel directly, which equals
    2 lam (1 - int int P P exp(...)) for normalized P without the cancellation.
    """
    P = np.asarray(P, dtype=float)
    dx = grid.dx
    norm = P.sum() * dx
    if abs(norm - 1) > 1e-8:
        raise NormalizationError(f"probability density integrates to {norm!r}")
    if np.any(P < 0):
        raise NormalizationError("probability density has negative entries")
    offsets = np.arange(-(grid.n - 1), grid.n) * dx
    w = -np.expm1(-(offsets / p.sigma) ** 2)
    conv = convolve(P, w, mode="full")[grid.n - 1: 2 * grid.n - 1]
    return float(2 * p.lam * dx * dx * (P @ conv))


def correlated_rate_closed_form(delta_x: float, p: CorrelatedNoiseParams) -> float:
    """2 lam (1 - sigma / sqrt(sigma^2 + 4 delta_x^2)) for a Gaussian density."""
    return 2 * p.lam * (1 - p.sigma / math.sqrt(p.sigma ** 2 + 4 * delta_x ** 2))


def qome_rate_constant(p: QOMEParams) -> float:
    """Proportionality constant Gamma (2N+1) m omega / hbar of the QOME rate."""
    return p.Gamma * (2 * p.N + 1) * p.osc.m * p.osc.omega / p.osc.hbar


def entropy_rate_qome(var_x: float, var_p: float, p: QOMEParams) -> float:
    """C (var_x + var_p / (m omega)^2) with C from :func:`qome_rate_constant`.

    For a pure Gaussian the exact rate under the QOME is this value minus
    Gamma; the offset is state independent and does not move the sieve argmin.
    """
    mw = p.osc.m * p.osc.omega
    return qome_rate_constant(p) * (var_x + var_p / mw ** 2)


def orbit_var_x(state: GaussianPureState, osc: OscillatorParams, t) -> np.ndarray:
    """Position variance of an uncorrelated Gaussian along the free orbit."""
    wt = osc.omega * np.asarray(t)
    return state.var_x(osc) * np.cos(wt) ** 2 + state.var_p(osc) / (osc.m * osc.omega) ** 2 * np.sin(wt) ** 2


def _density_grid(delta_x: float, sigma: float) -> PositionGrid:
    """Grid resolving both the packet and the noise correlation length."""
    dx = min(delta_x, sigma) / 4
    half = 12 * delta_x
    n = 1 << max(6, math.ceil(math.log2(2 * half / dx)))
    return PositionGrid.symmetric(half, n)


def gaussian_density_on_grid(delta_x: float, grid: PositionGrid) -> np.ndarray:
    return np.exp(-grid.x ** 2 / (2 * delta_x ** 2)) / math.sqrt(2 * math.pi * delta_x ** 2)


def correlated_rate_for_width(delta_x: float, p: CorrelatedNoiseParams) -> float:
    grid = _density_grid(delta_x, p.sigma)
    return entropy_rate_correlated(gaussian_density_on_grid(delta_x, grid), grid, p)


def _regime_check(rate: float, osc: OscillatorParams) -> None:
    per_period = rate * osc.period
    if per_period > REGIME_LIMIT:
        warnings.warn(f"entropy per period {per_period:.3g} exceeds {REGIME_LIMIT}; weak-coupling "
                      f"pure-state formulas are outside their regime", RegimeWarning, stacklevel=3)


def period_averaged_entropy(state: GaussianPureState, model: EnvironmentModel,
                            osc: OscillatorParams | None = None, m_samples: int = 64) -> float:
    """Instantaneous pure-state rate averaged over one free oscillator period.

    Caldeira-Leggett: 2 D (var_x + var_p / (m omega)^2). QOME: the
    proportional form, which is constant along the orbit. Correlated noise:
    ``m_samples`` uniform samples of the quadrature rate along the orbit.
    """
    osc = model_oscillator(model, osc)
    mw2 = (osc.m * osc.omega) ** 2
    spread = state.var_x(osc) + state.var_p(osc) / mw2
    if isinstance(model, CaldeiraLeggettParams):
        value = 2 * model.D * spread
    elif isinstance(model, QOMEParams):
        value = qome_rate_constant(model) * spread
    elif isinstance(model, CorrelatedNoiseParams):
        ts = np.arange(m_samples) * osc.period / m_samples
        value = float(np.mean([correlated_rate_for_width(math.sqrt(v), model)
                               for v in orbit_var_x(state, osc, ts)]))
    else:
        raise TypeError(f"unknown environment model {type(model).__name__}")
    _regime_check(value, osc)
    return value


def instantaneous_rate(state: GaussianPureState, model: EnvironmentModel,
                       osc: OscillatorParams | None = None) -> float:
    """Closed-form (or quadrature) pure-state rate at t = 0."""
    osc = model_oscillator(model, osc)
    if isinstance(model, CaldeiraLeggettParams):
        return entropy_rate_cl(state.var_x(osc), model)
    if isinstance(model, QOMEParams):
        return entropy_rate_qome(state.var_x(osc), state.var_p(osc), model)
    if isinstance(model, CorrelatedNoiseParams):
        return correlated_rate_for_width(state.delta_x(osc), model)
    raise TypeError(f"unknown environment model {type(model).__name__}")


# numeric route -------------------------------------------------------------

def _numeric_grid(state: GaussianPureState, osc: OscillatorParams, model: EnvironmentModel,
                  orbit: bool) -> PositionGrid:
    dxm, dpm = state.delta_x(osc), state.delta_p(osc)
    if orbit:
        # position and momentum widths exchange roles every quarter period
        mw = osc.m * osc.omega
        dxm, dpm = max(dxm, dpm / mw), max(dpm, mw * dxm)
    max_dx = model.sigma / 4 if isinstance(model, CorrelatedNoiseParams) else None
    grid = PositionGrid.for_widths(dxm, dpm, osc.hbar, margin=9.0, x_offset=state.x0, p_offset=state.p0,
                                   max_dx=max_dx)
    if grid.n > 4096:
        raise PreconditionError(f"numeric route needs a {grid.n}-point grid; use the analytic route")
    return grid


def _fock_cutoff(state: GaussianPureState, osc: OscillatorParams) -> int:
    s = max(state.s, 1 / state.s)
    r = abs(state.alpha(osc))
    # squeezed-vacuum amplitudes fall as tanh(|ln s|)^(n/2)
    t = math.tanh(abs(math.log(s)))
    n_sq = 10 if t == 0 else int(2 * math.log(1e-14) / math.log(t))
    return int(max(20, n_sq + r * r + 6 * r + 10))


def numeric_rate(state: GaussianPureState, model: EnvironmentModel, osc: OscillatorParams | None = None) -> float:
    """-2 Tr[rho L(rho)] for the candidate's density matrix under the full generator."""
    osc = model_oscillator(model, osc)
    if isinstance(model, QOMEParams):
        n_max = _fock_cutoff(state, osc)
        rho = gaussian_to_fock(state, n_max, osc)
        L = _fock_action(model, n_max)
        return entropy_rate_numeric(rho, L)
    grid = _numeric_grid(state, osc, model, orbit=False)
    rho = gaussian_density(state, grid, osc)
    return entropy_rate_numeric(rho, GridGenerator(grid, model, osc=osc))


def _fock_action(model: QOMEParams, n_max: int):
    from .dynamics.generators import free_rhs_fock, qome_rhs
    if n_max + 1 <= 24:
        return fock_generator(model, n_max)
    return lambda r: free_rhs_fock(r, model.osc) + qome_rhs(r, model)


def numeric_period_average(state: GaussianPureState, model: EnvironmentModel,
                           osc: OscillatorParams | None = None, m_samples: int = 16,
                           steps_per_sample: int = 64) -> float:
    """Average of :func:`numeric_rate` along the free orbit, with the orbit computed by a propagator.

    Grid models propagate the wavefunction with a split-step Fourier scheme;
    the QOME case rotates the Fock-basis density matrix with exp(-i H t).
    """
    osc = model_oscillator(model, osc)
    tau = osc.period
    if isinstance(model, QOMEParams):
        n_max = _fock_cutoff(state, osc)
        rho0 = gaussian_to_fock(state, n_max, osc).elements
        E = np.real(np.diag(hamiltonian_fock(n_max, osc))) / osc.hbar
        L = _fock_action(model, n_max)
        rates = []
        for k in range(m_samples):
            phase = np.exp(-1j * E * k * tau / m_samples)
            rho = FockDensityMatrix(phase[:, None] * rho0 * phase.conj()[None, :], validate=False)
            rates.append(entropy_rate_numeric(rho, L))
        value = float(np.mean(rates))
    else:
        grid = _numeric_grid(state, osc, model, orbit=True)
        psi = make_gaussian_wavefunction(state, grid, osc)
        gen = GridGenerator(grid, model, osc=osc)
        dt = tau / (m_samples * steps_per_sample)
        p = grid.momenta(osc.hbar)
        kin = np.exp(-1j * p ** 2 * dt / (2 * osc.m * osc.hbar))
        pot_half = np.exp(-0.5j * 0.5 * osc.m * osc.omega ** 2 * grid.x ** 2 * dt / osc.hbar)
        rates = []
        for k in range(m_samples):
            rho = GridDensityMatrix(grid, np.outer(psi, psi.conj()), validate=False)
            rates.append(entropy_rate_numeric(rho, gen))
            for _ in range(steps_per_sample):
                psi = pot_half * np.fft.ifft(kin * np.fft.fft(pot_half * psi))
        value = float(np.mean(rates))
    _regime_check(value, osc)
    return value


# sieve ----------------------------------------------------------------------

def default_family(n: int = 33) -> np.ndarray:
    """Log-spaced squeeze values on [1/4, 4] containing s = 1 exactly (for odd n)."""
    return 2.0 ** np.linspace(-2.0, 2.0, n)


@dataclass
class SieveResult:
    s: np.ndarray
    values: np.ndarray
    argmin: int
    measure: str
    path: str
    model: dict
    tie: bool = False
    flat: bool = False
    warnings: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.s) <= 0):
            raise PreconditionError("sieve family must be strictly increasing in s")

    @property
    def best_s(self) -> float | None:
        """Squeeze of the maximally predictive member, or None when the landscape is flat."""
        return None if self.flat else float(self.s[self.argmin])

    @property
    def flatness_ratio(self) -> float:
        lo = float(np.min(self.values))
        hi = float(np.max(self.values))
        if lo <= 0:
            return 1.0 if hi <= 0 else math.inf
        return hi / lo


def _select(s: np.ndarray, values: np.ndarray, rtol: float = 1e-9) -> tuple[int, bool]:
    vmin = float(np.min(values))
    tied = np.flatnonzero(values <= vmin + rtol * max(abs(vmin), np.finfo(float).tiny))
    if tied.size == 1:
        return int(tied[0]), False
    best = tied[np.argmin(np.abs(np.log(s[tied])))]
    return int(best), True


def log_family(s_min: float, s_max: float, n: int) -> np.ndarray:
    """Log-spaced squeeze factors; exact at the end points and, for symmetric ranges, at s = 1."""
    return 2.0 ** np.linspace(math.log2(s_min), math.log2(s_max), n)


def check_family(s: np.ndarray, strict: bool = True) -> None:
    if s.ndim != 1 or s.size < 2 or np.any(s <= 0):
        raise PreconditionError("sieve family must be a 1-d array of at least two positive squeeze factors")
    if np.any(np.diff(s) <= 0):
        raise PreconditionError("sieve family must be strictly increasing in s")
    if strict and (s.size < 33 or s[0] > 0.25 + 1e-12 or s[-1] < 4 - 1e-12):
        raise PreconditionError("sieve family must span [1/4, 4] with at least 33 points")


def run_sieve(family: Sequence[float] | None, model: EnvironmentModel, measure: str = "period",
              path: str = "analytic", osc: OscillatorParams | None = None, *, m_samples: int | None = None,
              flat_ratio: float = FLAT_RATIO, strict_family: bool = True) -> SieveResult:
    """Evaluate an entropy measure over the squeezed Gaussian family and locate its minimum.

    ``measure`` is ``"rate"`` (instantaneous) or ``"period"`` (period-averaged);
    ``path`` is ``"analytic"`` or ``"numeric"``. Ties break toward s = 1 and set
    ``tie``; a landscape with max/min <= ``flat_ratio`` sets ``flat``.
    """
    if measure not in ("rate", "period"):
        raise ValueError(f"measure must be 'rate' or 'period', got {measure!r}")
    if path not in ("analytic", "numeric"):
        raise ValueError(f"path must be 'analytic' or 'numeric', got {path!r}")
    s = default_family() if family is None else np.asarray(family, dtype=float)
    check_family(s, strict_family)
    osc = model_oscillator(model, osc)

    if path == "analytic":
        if measure == "rate":
            f = lambda st: instantaneous_rate(st, model, osc)
        else:
            f = lambda st: period_averaged_entropy(st, model, osc, m_samples or 64)
    else:
        if measure == "rate":
            f = lambda st: numeric_rate(st, model, osc)
        else:
            f = lambda st: numeric_period_average(st, model, osc, m_samples or 16)

    messages: list[str] = []
    values = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RegimeWarning)
        for sv in s:
            values.append(f(GaussianPureState(0.0, 0.0, float(sv))))
    for w in caught:
        if issubclass(w.category, RegimeWarning):
            messages.append(str(w.message))
        else:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    values = np.asarray(values, dtype=float)
    if messages:
        warnings.warn(f"{len(messages)} of {s.size} family members outside the weak-coupling regime",
                      RegimeWarning, stacklevel=2)
    idx, tie = _select(s, values)
    meta = {}
    if isinstance(model, QOMEParams):
        meta["qome_rate_constant"] = qome_rate_constant(model)
    res = SieveResult(s, values, idx, measure, path, describe(model), tie=tie, warnings=messages, metadata=meta)
    res.flat = res.flatness_ratio <= flat_ratio
    return res
