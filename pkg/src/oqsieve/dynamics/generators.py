"""Right-hand sides of the master equations in the Fock and position-grid representations."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..environments import (CaldeiraLeggettParams, CorrelatedNoiseParams, EnvironmentModel, QOMEParams,
                            g_caldeira_leggett, g_correlated)
from ..errors import PreconditionError
from ..states import (FockDensityMatrix, OscillatorParams, PositionGrid, check_leakage, hamiltonian_fock,
                      ladder, quadratures, to_momentum, to_position)
from .superop import Superoperator, build_superoperator


def commutator(a, b):
    return a @ b - b @ a


def anticommutator(a, b):
    return a @ b + b @ a


def dissipator(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """c rho c^dagger - {c^dagger c, rho} / 2"""
    cd = c.conj().T
    cdc = cd @ c
    return c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)


@lru_cache(maxsize=32)
def _fock_ops(n_max: int, osc: OscillatorParams):
    x, p = quadratures(n_max, osc)
    a = ladder(n_max)
    for arr in (x, p, a):
        arr.setflags(write=False)
    return x, p, a


def _elements(rho):
    if isinstance(rho, FockDensityMatrix):
        check_leakage(rho.elements, rho.leakage_bound)
        return rho.elements
    return np.asarray(rho)


def qome_rhs(rho, p: QOMEParams) -> np.ndarray:
    """Dissipative part of the quantum optical master equation, in x and p form.

    -(G / 4 hbar w) {(2N+1) m w^2 ([x,[x,r]] + [p,[p,r]] / m^2 w^2) + 2 i w [x,{p,r}] - i w [{p,x}, r]}

    Identical, term by term, to G (N+1) D[a] r + G N D[a^dagger] r.
    """
    r = _elements(rho)
    osc = p.osc
    x, pp, _ = _fock_ops(r.shape[0] - 1, osc)
    m, w, hb = osc.m, osc.omega, osc.hbar
    diffusion = commutator(x, commutator(x, r)) + commutator(pp, commutator(pp, r)) / (m * w) ** 2
    friction = commutator(x, anticommutator(pp, r))
    squeeze = commutator(anticommutator(pp, x), r)
    return -(p.Gamma / (4 * hb * w)) * ((2 * p.N + 1) * m * w ** 2 * diffusion
                                       + 2j * w * friction - 1j * w * squeeze)


def qome_rhs_opposite_squeeze(rho, p: QOMEParams) -> np.ndarray:
    """Variant with ``+ i w [{p,x}, r]``, kept for comparison.

    Differs from :func:`qome_rhs` by a squeezing commutator; it has neither the
    thermal fixed point nor the Lindblad form.
    """
    r = _elements(rho)
    x, pp, _ = _fock_ops(r.shape[0] - 1, p.osc)
    hb, w = p.osc.hbar, p.osc.omega
    return qome_rhs(r, p) - (p.Gamma / (4 * hb * w)) * 2j * w * commutator(anticommutator(pp, x), r)


def qome_lindblad(rho, p: QOMEParams) -> np.ndarray:
    """G (N+1) D[a] r + G N D[a^dagger] r"""
    r = _elements(rho)
    _, _, a = _fock_ops(r.shape[0] - 1, p.osc)
    return p.Gamma * (p.N + 1) * dissipator(a, r) + p.Gamma * p.N * dissipator(a.conj().T, r)


def cl_friction(rho: np.ndarray, x: np.ndarray, p: np.ndarray, gamma: float, hbar: float) -> np.ndarray:
    """The two friction terms of the high-temperature Caldeira-Leggett equation.

    -(i g / 2 hbar) [{p,x}, r] - (i g / hbar) ([x, r p] - [p, r x])

    The second bracket equals (x r p - p r x) + r [x, p]; with finite matrices
    [x, p] is not exactly i hbar, so r [x, p] is replaced by {[x, p], r} / 2,
    which keeps the map trace-annihilating and Hermiticity-preserving.
    """
    xp = x @ p - p @ x
    second = commutator(x @ p + p @ x, rho)
    fourth = x @ rho @ p - p @ rho @ x + 0.5 * (xp @ rho + rho @ xp)
    return -1j * gamma / (2 * hbar) * second - 1j * gamma / hbar * fourth


def cl_dissipator_fock(rho, params: CaldeiraLeggettParams) -> np.ndarray:
    """Environment part of the Caldeira-Leggett equation (no free Hamiltonian)."""
    r = _elements(rho)
    x, p, _ = _fock_ops(r.shape[0] - 1, params.osc)
    out = -params.D * commutator(x, commutator(x, r))
    if not params.weak_dissipation:
        out = out + cl_friction(r, x, p, params.gamma, params.osc.hbar)
    return out


def free_rhs_fock(rho, osc: OscillatorParams) -> np.ndarray:
    r = _elements(rho)
    H = hamiltonian_fock(r.shape[0] - 1, osc)
    return -1j / osc.hbar * commutator(H, r)


def fock_generator(model: EnvironmentModel, n_max: int, *, include_hamiltonian: bool = True) -> Superoperator:
    """Superoperator of the full Fock-basis generator for a CL or QOME model."""
    if isinstance(model, QOMEParams):
        env = lambda r: qome_rhs(r, model)
    elif isinstance(model, CaldeiraLeggettParams):
        env = lambda r: cl_dissipator_fock(r, model)
    else:
        raise PreconditionError(f"no Fock-basis generator for model kind {model.kind!r}")
    osc = model.osc
    if include_hamiltonian:
        return build_superoperator(lambda r: free_rhs_fock(r, osc) + env(r), n_max + 1)
    return build_superoperator(env, n_max + 1)


def harmonic_potential(osc: OscillatorParams):
    return lambda x: 0.5 * osc.m * osc.omega ** 2 * np.asarray(x) ** 2


def model_oscillator(model: EnvironmentModel, osc: OscillatorParams | None) -> OscillatorParams:
    if osc is not None:
        return osc
    return getattr(model, "osc", OscillatorParams())


def decoherence_matrix(grid: PositionGrid, model: EnvironmentModel) -> np.ndarray:
    """g(x_i - x_j) for the grid-capable environment models."""
    r = np.subtract.outer(grid.x, grid.x)
    if isinstance(model, CaldeiraLeggettParams):
        return g_caldeira_leggett(model, r)
    if isinstance(model, CorrelatedNoiseParams):
        return g_correlated(model, r)
    raise PreconditionError(f"model kind {model.kind!r} has no position-space kernel; use the Fock propagator")


class GridGenerator:
    """d rho / dt on a position grid: free evolution, kernel decoherence, optional CL friction."""

    def __init__(self, grid: PositionGrid, model: EnvironmentModel, potential=None,
                 osc: OscillatorParams | None = None):
        self.grid = grid
        self.model = model
        self.osc = osc = model_oscillator(model, osc)
        self.potential = potential or harmonic_potential(osc)
        V = np.asarray(self.potential(grid.x), dtype=float)
        self.V_diff = np.subtract.outer(V, V)
        p = grid.momenta(osc.hbar)
        self.T_diff = np.subtract.outer(p ** 2, p ** 2) / (2 * osc.m)
        self.g = decoherence_matrix(grid, model)
        self.friction = isinstance(model, CaldeiraLeggettParams) and not model.weak_dissipation
        if self.friction:
            self.x_op, self.p_op = grid_operators(grid, osc.hbar)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        hb = self.osc.hbar
        kinetic = to_position(to_momentum(rho) * self.T_diff)
        out = -1j / hb * (kinetic + self.V_diff * rho) - self.g * rho
        if self.friction:
            out = out + cl_friction(rho, self.x_op, self.p_op, self.model.gamma, hb)
        return out


def grid_operators(grid: PositionGrid, hbar: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Dense position and spectral momentum matrices acting on sampled wavefunctions."""
    U = np.fft.fft(np.eye(grid.n), axis=0, norm="ortho")
    p = grid.momenta(hbar)
    P = U.conj().T @ (p[:, None] * U)
    return np.diag(grid.x).astype(complex), 0.5 * (P + P.conj().T)
