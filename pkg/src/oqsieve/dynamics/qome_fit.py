"""Least-squares identification of a generator with the quantum-optical form."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..environments import QOMEParams
from ..states import OscillatorParams
from .generators import _fock_ops, anticommutator, commutator, fock_generator
from .superop import Superoperator, build_superoperator


def qome_structures(n_max: int, osc: OscillatorParams = OscillatorParams()) -> list[Superoperator]:
    """The three operator structures of the quantum optical master equation.

    diffusion ``[x,[x,.]] + [p,[p,.]] / (m w)^2``, friction ``[x,{p,.}]`` and
    squeezing ``[{p,x},.]``.
    """
    x, p, _ = _fock_ops(n_max, osc)
    mw2 = (osc.m * osc.omega) ** 2
    d = n_max + 1
    return [
        build_superoperator(lambda r: commutator(x, commutator(x, r)) + commutator(p, commutator(p, r)) / mw2, d),
        build_superoperator(lambda r: commutator(x, anticommutator(p, r)), d),
        build_superoperator(lambda r: commutator(anticommutator(p, x), r), d),
    ]


@dataclass(frozen=True)
class QOMEFit:
    coefficients: np.ndarray  # complex, one per structure
    residual: float  # relative Frobenius residual of the least-squares fit
    params: QOMEParams | None  # None when the friction coefficient vanishes (pure diffusion)
    mismatch: float  # relative Frobenius distance to the QOME generator built from ``params``


def fit_qome_form(L: Superoperator, osc: OscillatorParams = OscillatorParams()) -> QOMEFit:
    """Fit ``L`` (environment part only) as a combination of :func:`qome_structures`.

    The diffusion and friction coefficients fix Gamma and N; the fitted
    generator is then rebuilt with :func:`qome_rhs` and compared with ``L``.
    """
    n_max = L.dim - 1
    S = qome_structures(n_max, osc)
    A = np.column_stack([s.matrix.ravel() for s in S])
    b = L.matrix.ravel()
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    norm = max(np.linalg.norm(b), np.finfo(float).tiny)
    residual = float(np.linalg.norm(A @ coef - b) / norm)
    hb, m, w = osc.hbar, osc.m, osc.omega
    # friction coefficient is -i Gamma / (2 hbar); diffusion is -Gamma (2N+1) m w / (4 hbar)
    Gamma = float(np.real(2j * hb * coef[1]))
    # diffusion without friction is the N -> infinity limit; no finite (Gamma, N) reproduces it
    if Gamma <= 1e-12 * max(abs(coef[0]) * hb / (m * w), np.finfo(float).tiny):
        return QOMEFit(coef, residual, None, math.inf)
    N = float((-4 * hb * np.real(coef[0]) / (Gamma * m * w) - 1) / 2)
    params = QOMEParams(Gamma, max(N, 0.0), osc)
    Lq = fock_generator(params, n_max, include_hamiltonian=False)
    mismatch = float(np.linalg.norm(Lq.matrix - L.matrix) / norm)
    return QOMEFit(coef, residual, params, mismatch)
