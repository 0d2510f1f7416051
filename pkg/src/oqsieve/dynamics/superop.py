"""Superoperator matrices, generator averaging and complete-positivity certification.

Column-stacking vectorization throughout: ``vec(A rho B) = (B.T kron A) vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from ..errors import LinearityError, PreconditionError, SpectrumError


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape((d, d), order="F")


def matrix_unit(k: int, l: int, d: int) -> np.ndarray:
    e = np.zeros((d, d), dtype=complex)
    e[k, l] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class Superoperator:
    """A linear map on d x d operators as a d^2 x d^2 matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        d = int(round(np.sqrt(m.shape[0])))
        if m.ndim != 2 or m.shape[0] != m.shape[1] or d * d != m.shape[0]:
            raise ValueError(f"superoperator matrix must be d^2 x d^2, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.dim)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix + other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix - other.matrix)

    def __mul__(self, c) -> "Superoperator":
        return Superoperator(c * self.matrix)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def trace_defect(self) -> float:
        """max |vec(I)^dagger L|; zero for trace-annihilating generators."""
        return float(np.max(np.abs(vec(np.eye(self.dim)).conj() @ self.matrix)))

    def choi(self) -> np.ndarray:
        """sum_{kl} E_kl kron L(E_kl)."""
        d = self.dim
        # matrix[i + j d, k + l d] = L(E_kl)[i, j]  ->  C[k d + i, l d + j]
        t = self.matrix.reshape(d, d, d, d)  # [j, i, l, k]
        return t.transpose(3, 1, 2, 0).reshape(d * d, d * d)

    def hermiticity_defect(self) -> float:
        """max_kl |L(E_kl)^dagger - L(E_lk)|, read off the Choi matrix."""
        c = self.choi()
        return float(np.max(np.abs(c - c.conj().T)))

    def commutator_norm(self, other: "Superoperator") -> float:
        return float(np.linalg.norm(self.matrix @ other.matrix - other.matrix @ self.matrix))


def build_superoperator(action: Callable[[np.ndarray], np.ndarray], d: int, *,
                        check_linearity: bool = True, seed: int = 0) -> Superoperator:
    """Tabulate ``action`` on the d^2 matrix units.

    Linearity is spot-checked on two random pairs of complex matrices.
    """
    cols = np.empty((d * d, d * d), dtype=complex)
    for col in range(d * d):
        k, l = col % d, col // d
        cols[:, col] = vec(action(matrix_unit(k, l, d)))
    if check_linearity:
        rng = np.random.default_rng(seed)
        for _ in range(2):
            a, b = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for _ in range(2))
            s, t = rng.normal(size=2) + 1j * rng.normal(size=2)
            lhs = action(s * a + t * b)
            rhs = s * action(a) + t * action(b)
            scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
            if np.max(np.abs(lhs - rhs)) > 1e-10 * scale:
                raise LinearityError("action failed the linearity spot check")
    return Superoperator(cols)


def hamiltonian_superoperator(H: np.ndarray, hbar: float = 1.0) -> Superoperator:
    """-(i / hbar) [H, .]"""
    d = H.shape[0]
    eye = np.eye(d)
    return Superoperator(-1j / hbar * (np.kron(eye, H) - np.kron(H.T, eye)))


def _check_equally_spaced(E: np.ndarray, hbar_omega: float, rtol: float = 1e-8) -> None:
    gaps = np.diff(np.sort(E))
    if gaps.size and np.max(np.abs(gaps - hbar_omega)) > rtol * max(1.0, hbar_omega) * max(1, E.size):
        raise SpectrumError(
            f"Hamiltonian spectrum is not equally spaced at hbar*omega={hbar_omega}: "
            f"gaps range [{gaps.min():.6g}, {gaps.max():.6g}]")


def average_generator(deltaL: Superoperator, H: np.ndarray, omega: float, m_samples: int = 64,
                      hbar: float = 1.0) -> Superoperator:
    """Average U(-tau) . deltaL . U(tau) over one free period on ``m_samples`` uniform nodes.

    ``U(tau) rho = exp(-i H tau / hbar) rho exp(i H tau / hbar)``. For an equally
    spaced spectrum the free evolution is periodic, so the one-period average is
    the infinite-time average.
    """
    if m_samples < 1:
        raise PreconditionError("m_samples must be positive")
    d = H.shape[0]
    if deltaL.dim != d:
        raise PreconditionError(f"generator dimension {deltaL.dim} does not match H ({d})")
    E, V = np.linalg.eigh(H)
    _check_equally_spaced(E, hbar * omega)
    # U(tau) is diagonal in the eigen-operator basis |i><j|, with phase exp(-i nu_ij tau)
    W = np.kron(V.conj(), V)
    Lp = W.conj().T @ deltaL.matrix @ W
    nu = (np.subtract.outer(E, E) / hbar).reshape(-1, order="F")  # (E_i - E_j)/hbar at i + j d
    taus = np.arange(m_samples) * (2 * np.pi / omega) / m_samples
    dnu = np.subtract.outer(nu, nu)
    weight = np.zeros_like(Lp)
    for tau in taus:
        weight += np.exp(1j * dnu * tau)
    weight /= m_samples
    return Superoperator(W @ (Lp * weight) @ W.conj().T)


class CPCheck(NamedTuple):
    min_eigenvalue: float
    is_gksl: bool
    tolerance: float
    spectrum: np.ndarray


def cp_check(L: Superoperator, rtol: float = 1e-8, precondition_tol: float = 1e-8) -> CPCheck:
    """Conditional complete positivity of a generator.

    ``L`` generates a completely positive semigroup iff the Choi matrix,
    projected onto the complement of the maximally entangled vector, is
    positive semidefinite. ``is_gksl`` tests the smallest eigenvalue of that
    projection against ``-rtol * ||C||``.
    """
    scale = max(1.0, float(np.max(np.abs(L.matrix))))
    if L.trace_defect() > precondition_tol * scale:
        raise PreconditionError(f"generator is not trace-annihilating (defect {L.trace_defect():.3e})")
    if L.hermiticity_defect() > precondition_tol * scale:
        raise PreconditionError(f"generator is not Hermiticity-preserving (defect {L.hermiticity_defect():.3e})")
    d = L.dim
    C = L.choi()
    omega = vec(np.eye(d))  # sum_k |k>|k>, identical in both orderings
    P = np.eye(d * d) - np.outer(omega, omega) / d
    PCP = P @ C @ P
    spectrum = np.linalg.eigvalsh(0.5 * (PCP + PCP.conj().T))
    tol = rtol * float(np.linalg.norm(C, 2))
    lam = float(spectrum[0])
    return CPCheck(lam, lam >= -tol, tol, spectrum)
