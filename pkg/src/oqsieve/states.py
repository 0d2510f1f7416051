"""Oscillator state representations: Gaussian packets, position-grid and Fock density matrices.

All arrays are complex128. A grid density matrix stores kernel samples
``rho[i, j] = rho(x_i, x_j)``; traces over the grid carry a factor ``dx`` per
contracted index. Fock density matrices are ordinary ``(n_max+1)`` square
matrices in the number basis.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Union

import numpy as np

from .errors import BoundaryLeakError, InvariantError, TruncationError, TruncationWarning

# Relative amplitude allowed at the edge of a position or momentum window.
EDGE_AMPLITUDE = 1e-8


@dataclass(frozen=True)
class OscillatorParams:
    """Mass, angular frequency and hbar. Natural units by default."""

    m: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("m", "omega", "hbar"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvariantError(f"OscillatorParams.{name} must be positive, got {v!r}")

    @property
    def length_scale(self) -> float:
        """sqrt(hbar / (m omega)); twice the coherent-state position variance."""
        return math.sqrt(self.hbar / (self.m * self.omega))

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega


@dataclass(frozen=True)
class GaussianPureState:
    """Uncorrelated Gaussian wave packet with position width ``s * sqrt(hbar / 2 m omega)``.

    ``s = 1`` is the coherent state; the momentum width follows from
    ``delta_x * delta_p = hbar / 2``.
    """

    x0: float = 0.0
    p0: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.s) and self.s > 0):
            raise InvariantError(f"squeeze s must be positive, got {self.s!r}")

    def delta_x(self, osc: OscillatorParams) -> float:
        return self.s * math.sqrt(osc.hbar / (2 * osc.m * osc.omega))

    def delta_p(self, osc: OscillatorParams) -> float:
        return osc.hbar / (2 * self.delta_x(osc))

    def var_x(self, osc: OscillatorParams) -> float:
        return self.delta_x(osc) ** 2

    def var_p(self, osc: OscillatorParams) -> float:
        return self.delta_p(osc) ** 2

    def alpha(self, osc: OscillatorParams) -> complex:
        """Complex amplitude of the packet center, a = (x sqrt(m w / hbar) + i p / sqrt(m w hbar)) / sqrt(2)."""
        return (self.x0 * math.sqrt(osc.m * osc.omega / osc.hbar)
                + 1j * self.p0 / math.sqrt(osc.m * osc.omega * osc.hbar)) / math.sqrt(2)


def _next_pow2(k: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(k, 1.0))))


@dataclass(frozen=True)
class PositionGrid:
    """Uniform periodic grid of ``n`` cell centers on ``[x_min, x_max)``."""

    x_min: float = -10.0
    x_max: float = 10.0
    n: int = 256

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or int(n) != n or n < 2 or (int(n) & (int(n) - 1)):
            raise InvariantError(f"PositionGrid invariant violated: n={n!r} is not a power of two")
        if not self.x_max > self.x_min:
            raise InvariantError(f"PositionGrid invariant violated: x_max={self.x_max} <= x_min={self.x_min}")

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "PositionGrid":
        return cls(-half_width, half_width, n)

    @classmethod
    def for_widths(cls, delta_x: float, delta_p: float, hbar: float = 1.0, *,
                   margin: float = 12.0, x_offset: float = 0.0, p_offset: float = 0.0,
                   max_dx: float | None = None, min_n: int = 64) -> "PositionGrid":
        """Smallest power-of-two grid holding ``margin`` widths in both x and p."""
        half = margin * delta_x + abs(x_offset)
        dx = math.pi * hbar / (margin * delta_p + abs(p_offset))
        if max_dx is not None:
            dx = min(dx, max_dx)
        n = max(min_n, _next_pow2(2 * half / dx))
        return cls(-half, half, n)

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n) + 0.5) * self.dx

    def momenta(self, hbar: float = 1.0) -> np.ndarray:
        """Momentum grid in FFT ordering."""
        return 2 * np.pi * hbar * np.fft.fftfreq(self.n, d=self.dx)

    def p_nyquist(self, hbar: float = 1.0) -> float:
        return math.pi * hbar / self.dx


def to_momentum(rho: np.ndarray) -> np.ndarray:
    """Unitary DFT on both indices: U rho U^dagger."""
    return np.fft.fft(np.fft.ifft(rho, axis=1, norm="ortho"), axis=0, norm="ortho")


def to_position(rho_p: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_momentum`."""
    return np.fft.ifft(np.fft.fft(rho_p, axis=1, norm="ortho"), axis=0, norm="ortho")


@dataclass(frozen=True, eq=False)
class GridDensityMatrix:
    grid: PositionGrid
    elements: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        if rho.shape != (self.grid.n, self.grid.n):
            raise InvariantError(f"density matrix shape {rho.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "elements", rho)
        if self.validate:
            if self.hermiticity_defect() > 1e-10:
                raise InvariantError(f"GridDensityMatrix not Hermitian (defect {self.hermiticity_defect():.3e})")
            if abs(self.trace() - 1) > 1e-6:
                raise InvariantError(f"GridDensityMatrix trace {self.trace():.12g} differs from 1")
            if self.min_eigenvalue() < -1e-8:
                raise InvariantError(f"GridDensityMatrix has negative eigenvalue {self.min_eigenvalue():.3e}")

    @classmethod
    def from_wavefunction(cls, psi: np.ndarray, grid: PositionGrid, **kw) -> "GridDensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        return cls(grid, np.outer(psi, psi.conj()), **kw)

    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)) * self.grid.dx)

    def purity(self) -> float:
        return float(np.sum(np.abs(self.elements) ** 2) * self.grid.dx ** 2)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.elements + self.elements.conj().T)
        return float(np.linalg.eigvalsh(herm * self.grid.dx)[0])

    def position_density(self) -> np.ndarray:
        return np.real(np.diag(self.elements)).copy()


@dataclass(frozen=True, eq=False)
class FockDensityMatrix:
    elements: np.ndarray
    leakage_bound: float = 1e-6
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise InvariantError(f"Fock density matrix must be square, got shape {rho.shape}")
        object.__setattr__(self, "elements", rho)
        if self.validate:
            if self.hermiticity_defect() > 1e-10:
                raise InvariantError(f"FockDensityMatrix not Hermitian (defect {self.hermiticity_defect():.3e})")
            if abs(self.trace() - 1) > 1e-6:
                raise InvariantError(f"FockDensityMatrix trace {self.trace():.12g} differs from 1")
            check_leakage(rho, self.leakage_bound)

    @property
    def n_max(self) -> int:
        return self.elements.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.elements)))

    def purity(self) -> float:
        return float(np.sum(np.abs(self.elements) ** 2))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.elements - self.elements.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.elements + self.elements.conj().T))[0])

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.elements)).copy()


def check_leakage(rho: np.ndarray, bound: float) -> bool:
    """Warn if the top Fock level holds more than ``bound``; return True when it does."""
    top = float(np.real(rho[-1, -1]))
    if top > bound:
        warnings.warn(f"population {top:.3e} at top Fock level n_max={rho.shape[0] - 1} "
                      f"exceeds leakage bound {bound:.1e}", TruncationWarning, stacklevel=3)
        return True
    return False


DensityMatrix = Union[GridDensityMatrix, FockDensityMatrix]


def make_gaussian_wavefunction(state: GaussianPureState, grid: PositionGrid,
                               osc: OscillatorParams = OscillatorParams()) -> np.ndarray:
    """Sample the Gaussian packet on ``grid``.

    Raises
    ------
    BoundaryLeakError
        If the packet is not contained in the position window, or its momentum
        distribution is not contained below the grid's Nyquist momentum.
    """
    dx2 = state.var_x(osc)
    x = grid.x
    near_edge = min(abs(grid.x_min - state.x0), abs(grid.x_max - state.x0))
    if not grid.x_min < state.x0 < grid.x_max or math.exp(-near_edge ** 2 / (4 * dx2)) >= EDGE_AMPLITUDE:
        raise BoundaryLeakError(
            f"packet (x0={state.x0}, dx={math.sqrt(dx2):.4g}) leaks past grid edge "
            f"[{grid.x_min}, {grid.x_max}]")
    p_room = grid.p_nyquist(osc.hbar) - abs(state.p0)
    if p_room <= 0 or math.exp(-p_room ** 2 / (4 * state.var_p(osc))) >= EDGE_AMPLITUDE:
        raise BoundaryLeakError(
            f"packet momentum spread (p0={state.p0}, dp={state.delta_p(osc):.4g}) exceeds "
            f"grid Nyquist momentum {grid.p_nyquist(osc.hbar):.4g}; refine dx")
    psi = (2 * np.pi * dx2) ** -0.25 * np.exp(-(x - state.x0) ** 2 / (4 * dx2) + 1j * state.p0 * x / osc.hbar)
    norm = np.sum(np.abs(psi) ** 2) * grid.dx
    if abs(norm - 1) > 1e-10:
        raise InvariantError(f"discretized packet norm {norm!r} differs from 1 by more than 1e-10")
    return psi


def gaussian_density(state: GaussianPureState, grid: PositionGrid,
                     osc: OscillatorParams = OscillatorParams()) -> GridDensityMatrix:
    return GridDensityMatrix.from_wavefunction(make_gaussian_wavefunction(state, grid, osc), grid)


def make_coherent_fock(alpha: complex, n_max: int = 30, leakage_bound: float = 1e-6) -> FockDensityMatrix:
    """Coherent state |alpha><alpha| truncated to levels 0..n_max and renormalized."""
    r = abs(alpha)
    if r * r + 5 * r + 10 > n_max:
        raise TruncationError(f"n_max={n_max} too small for |alpha|={r:.4g}; "
                              f"need at least {math.ceil(r * r + 5 * r + 10)}")
    c = np.empty(n_max + 1, dtype=complex)
    c[0] = math.exp(-r * r / 2)
    for n in range(1, n_max + 1):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    c /= np.linalg.norm(c)
    return FockDensityMatrix(np.outer(c, c.conj()), leakage_bound=leakage_bound)


def ladder(n_max: int) -> np.ndarray:
    """Truncated annihilation operator on levels 0..n_max."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), 1).astype(complex)


def quadratures(n_max: int, osc: OscillatorParams = OscillatorParams()) -> tuple[np.ndarray, np.ndarray]:
    """Truncated position and momentum matrices built from the ladder operator."""
    a = ladder(n_max)
    ad = a.conj().T
    x = math.sqrt(osc.hbar / (2 * osc.m * osc.omega)) * (a + ad)
    p = 1j * math.sqrt(osc.m * osc.omega * osc.hbar / 2) * (ad - a)
    return x, p


def hamiltonian_fock(n_max: int, osc: OscillatorParams = OscillatorParams()) -> np.ndarray:
    return np.diag(osc.hbar * osc.omega * (np.arange(n_max + 1) + 0.5)).astype(complex)


def hermite_functions(n_max: int, x: np.ndarray, osc: OscillatorParams = OscillatorParams()) -> np.ndarray:
    """Oscillator eigenfunctions phi_0..phi_{n_max} sampled at ``x``; shape (n_max+1, len(x))."""
    xi = np.asarray(x) / osc.length_scale
    out = np.empty((n_max + 1, xi.size))
    out[0] = (osc.m * osc.omega / (math.pi * osc.hbar)) ** 0.25 * np.exp(-xi ** 2 / 2)
    if n_max >= 1:
        out[1] = math.sqrt(2) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = math.sqrt(2 / (n + 1)) * xi * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def gaussian_to_fock(state: GaussianPureState, n_max: int, osc: OscillatorParams = OscillatorParams(),
                     leakage_bound: float = 1e-6) -> FockDensityMatrix:
    """Number-basis representation of a Gaussian packet by projection onto Hermite functions."""
    dxs, dps = state.delta_x(osc), state.delta_p(osc)
    reach = math.sqrt(2 * n_max + 1) * osc.length_scale
    half = max(14 * dxs + abs(state.x0), reach + 8 * osc.length_scale)
    # resolve both the packet and the fastest Hermite oscillation
    p_reach = max(14 * dps + abs(state.p0), math.sqrt(2 * n_max + 1) * osc.hbar / osc.length_scale
                  + 8 * osc.hbar / osc.length_scale)
    grid = PositionGrid.symmetric(half, max(256, _next_pow2(2 * half * p_reach / (math.pi * osc.hbar))))
    psi = make_gaussian_wavefunction(state, grid, osc)
    c = hermite_functions(n_max, grid.x, osc) @ psi * grid.dx
    c /= np.linalg.norm(c)
    return FockDensityMatrix(np.outer(c, c.conj()), leakage_bound=leakage_bound)


class Moments(NamedTuple):
    mean_x: float
    mean_p: float
    var_x: float
    var_p: float


def _grid_moments(rho: GridDensityMatrix, osc: OscillatorParams) -> Moments:
    x = rho.grid.x
    px = rho.position_density()
    px = px / px.sum()
    mx = float(px @ x)
    vx = float(px @ (x - mx) ** 2)
    pp = np.real(np.diag(to_momentum(rho.elements)))
    pp = pp / pp.sum()
    p = rho.grid.momenta(osc.hbar)
    mp = float(pp @ p)
    vp = float(pp @ (p - mp) ** 2)
    return Moments(mx, mp, vx, vp)


def _fock_moments(rho: FockDensityMatrix, osc: OscillatorParams) -> Moments:
    r = rho.elements
    x, p = quadratures(rho.n_max, osc)
    a = ladder(rho.n_max)
    a2 = a @ a
    num = np.diag(2 * np.arange(rho.dim) + 1.0)
    # exact squares from a^2 + a+^2 + 2n + 1, free of truncation artefacts
    x2 = osc.hbar / (2 * osc.m * osc.omega) * (a2 + a2.conj().T + num)
    p2 = osc.m * osc.omega * osc.hbar / 2 * (num - a2 - a2.conj().T)
    tr = np.real(np.trace(r))
    mx = float(np.real(np.trace(r @ x)) / tr)
    mp = float(np.real(np.trace(r @ p)) / tr)
    vx = float(np.real(np.trace(r @ x2)) / tr - mx ** 2)
    vp = float(np.real(np.trace(r @ p2)) / tr - mp ** 2)
    return Moments(mx, mp, vx, vp)


def moments(rho: DensityMatrix, osc: OscillatorParams = OscillatorParams()) -> Moments:
    """Means and variances of position and momentum."""
    if isinstance(rho, GridDensityMatrix):
        return _grid_moments(rho, osc)
    if isinstance(rho, FockDensityMatrix):
        return _fock_moments(rho, osc)
    raise TypeError(f"unsupported density matrix type {type(rho).__name__}")
