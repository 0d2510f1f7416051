import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from oqsieve.dynamics import (Superoperator, average_generator, build_superoperator, cp_check, dissipator,
                              fit_qome_form, fock_generator, hamiltonian_superoperator, qome_rhs, unvec, vec)
from oqsieve.dynamics.generators import commutator
from oqsieve.environments import CaldeiraLeggettParams, QOMEParams
from oqsieve.errors import LinearityError, PreconditionError, SpectrumError
from oqsieve.states import OscillatorParams, hamiltonian_fock, ladder, quadratures


def random_matrix(rng, d):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_density(rng, d):
    a = random_matrix(rng, d)
    r = a @ a.conj().T
    return r / np.trace(r)


@given(d=st.integers(1, 6), seed=st.integers(0, 2 ** 16))
def test_vec_round_trip(d, seed):
    a = random_matrix(np.random.default_rng(seed), d)
    assert np.array_equal(unvec(vec(a), d), a)


def test_vec_identity():
    rng = np.random.default_rng(0)
    A, B, R = (random_matrix(rng, 3) for _ in range(3))
    assert np.allclose(vec(A @ R @ B), np.kron(B.T, A) @ vec(R))


def test_identity_action():
    S = build_superoperator(lambda r: r, 4)
    assert np.array_equal(S.matrix, np.eye(16))


def test_diagonal_hamiltonian_action():
    H = np.diag([0.3, 1.1, 2.0]).astype(complex)
    S = build_superoperator(lambda r: -1j * commutator(H, r), 3)
    h = np.diag(H).real
    expected = np.array([-1j * (h[m] - h[n]) for n in range(3) for m in range(3)])
    assert np.allclose(S.matrix, np.diag(expected))
    assert np.allclose(S.matrix, hamiltonian_superoperator(H).matrix)


def test_superoperator_reproduces_qome_rhs():
    p = QOMEParams(0.3, 0.7)
    S = build_superoperator(lambda r: qome_rhs(r, p), 4)
    rng = np.random.default_rng(3)
    a = random_matrix(rng, 4)
    rho = a + a.conj().T
    assert np.max(np.abs(S(rho) - qome_rhs(rho, p))) < 1e-12


def test_linearity_check_rejects_nonlinear_maps():
    with pytest.raises(LinearityError):
        build_superoperator(lambda r: r @ r, 3)


def test_superoperator_algebra():
    rng = np.random.default_rng(5)
    A = Superoperator(random_matrix(rng, 4))
    B = Superoperator(random_matrix(rng, 4))
    r = random_matrix(rng, 2)
    assert np.allclose((A @ B)(r), A(B(r)))
    assert np.allclose((A + B)(r), A(r) + B(r))
    assert np.allclose((2 * A - B)(r), 2 * A(r) - B(r))
    with pytest.raises(ValueError):
        Superoperator(np.eye(3))


def test_choi_of_identity_is_maximally_entangled():
    d = 3
    C = build_superoperator(lambda r: r, d).choi()
    omega = vec(np.eye(d))
    assert np.allclose(C, np.outer(omega, omega))


def test_qome_is_fixed_by_averaging():
    p = QOMEParams(0.2, 0.8)
    n_max = 7
    env = fock_generator(p, n_max, include_hamiltonian=False)
    avg = average_generator(env, hamiltonian_fock(n_max), 1.0)
    assert np.linalg.norm(avg.matrix - env.matrix) / env.norm() < 1e-10


def test_double_commutator_average():
    D, n_max = 0.3, 8
    osc = OscillatorParams(m=1.3, omega=0.7, hbar=1.0)
    x, p = quadratures(n_max, osc)
    env = build_superoperator(lambda r: -D * commutator(x, commutator(x, r)), n_max + 1)
    avg = average_generator(env, hamiltonian_fock(n_max, osc), osc.omega, hbar=osc.hbar)
    mw2 = (osc.m * osc.omega) ** 2
    expected = build_superoperator(
        lambda r: -D / 2 * (commutator(x, commutator(x, r)) + commutator(p, commutator(p, r)) / mw2), n_max + 1)
    assert np.max(np.abs(avg.matrix - expected.matrix)) < 1e-9


def test_average_matches_brute_force_rotation():
    # independent oracle: conjugate with matrix exponentials on a fine uniform grid
    n_max = 4
    d = n_max + 1
    gen = fock_generator(CaldeiraLeggettParams(0.1, 1.0, weak_dissipation=False), n_max, include_hamiltonian=False)
    H = hamiltonian_fock(n_max)
    LH = hamiltonian_superoperator(H).matrix
    taus = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    brute = sum(expm(-LH * t) @ gen.matrix @ expm(LH * t) for t in taus) / taus.size
    avg = average_generator(gen, H, 1.0, m_samples=64)
    assert np.max(np.abs(brute - avg.matrix)) < 1e-12 * max(1, d)


def test_average_sample_count_invariance():
    gen = fock_generator(CaldeiraLeggettParams(0.1, 1.0, weak_dissipation=False), 11, include_hamiltonian=False)
    H = hamiltonian_fock(11)
    a8 = average_generator(gen, H, 1.0, m_samples=8)
    a64 = average_generator(gen, H, 1.0, m_samples=64)
    assert np.max(np.abs(a8.matrix - a64.matrix)) < 1e-12


def test_average_rejects_anharmonic_spectrum():
    H = np.diag([0.0, 1.0, 2.5]).astype(complex)
    env = build_superoperator(lambda r: r, 3)
    with pytest.raises(SpectrumError):
        average_generator(env, H, 1.0)


def test_cp_check_hamiltonian_only():
    chk = cp_check(hamiltonian_superoperator(hamiltonian_fock(5)))
    assert chk.is_gksl
    assert abs(chk.min_eigenvalue) <= chk.tolerance


@pytest.mark.parametrize("Gamma, N", [(0.05, 0.0), (0.3, 0.5), (1.0, 2.0)])
def test_cp_check_qome(Gamma, N):
    chk = cp_check(fock_generator(QOMEParams(Gamma, N), 5))
    assert chk.is_gksl


def test_cp_check_full_caldeira_leggett():
    chk = cp_check(fock_generator(CaldeiraLeggettParams(0.1, 1.0, weak_dissipation=False), 5))
    assert not chk.is_gksl
    assert chk.min_eigenvalue < -1e-3


def test_cp_check_negative_rate_dissipator():
    a = ladder(3)
    chk = cp_check(build_superoperator(lambda r: -0.2 * dissipator(a, r), 4))
    assert not chk.is_gksl
    # the projected Choi matrix of -g D[a] has smallest eigenvalue -g * Tr(a^dagger a)
    assert chk.min_eigenvalue == pytest.approx(-0.2 * 6, rel=1e-10)


def test_cp_check_precondition():
    with pytest.raises(PreconditionError, match="trace"):
        cp_check(build_superoperator(lambda r: r, 3))


@settings(max_examples=20, deadline=None)
@given(Gamma=st.floats(1e-3, 2.0), N=st.floats(0.0, 5.0))
def test_qome_generator_properties(Gamma, N):
    L = fock_generator(QOMEParams(Gamma, N), 4)
    scale = L.norm()
    assert L.trace_defect() < 1e-12 * scale
    assert L.hermiticity_defect() < 1e-12 * scale
    assert cp_check(L).is_gksl


def test_fit_recovers_qome_parameters():
    p = QOMEParams(0.07, 1.3)
    fit = fit_qome_form(fock_generator(p, 9, include_hamiltonian=False))
    assert fit.params.Gamma == pytest.approx(0.07, rel=1e-10)
    assert fit.params.N == pytest.approx(1.3, rel=1e-10)
    assert fit.residual < 1e-12 and fit.mismatch < 1e-12


def test_averaged_caldeira_leggett_is_qome():
    cl = CaldeiraLeggettParams(gamma=0.1, kT=1.0, weak_dissipation=False)
    n_max = 11
    avg = average_generator(fock_generator(cl, n_max, include_hamiltonian=False), hamiltonian_fock(n_max), 1.0)
    fit = fit_qome_form(avg)
    assert fit.params.Gamma == pytest.approx(2 * cl.gamma, rel=1e-10)
    assert fit.params.N == pytest.approx(cl.kT - 0.5, rel=1e-10)
    assert fit.residual < 1e-8 and fit.mismatch < 1e-8


def test_fit_of_pure_diffusion_has_no_qome_parameters():
    cl = CaldeiraLeggettParams(gamma=0.1, kT=1.0)
    avg = average_generator(fock_generator(cl, 6, include_hamiltonian=False), hamiltonian_fock(6), 1.0)
    fit = fit_qome_form(avg)
    assert fit.params is None
    assert fit.residual < 1e-10
    assert fit.mismatch == np.inf


def test_average_is_idempotent():
    n_max = 7
    H = hamiltonian_fock(n_max)
    gen = fock_generator(CaldeiraLeggettParams(0.1, 2.0, weak_dissipation=False), n_max, include_hamiltonian=False)
    once = average_generator(gen, H, 1.0)
    twice = average_generator(once, H, 1.0)
    assert np.linalg.norm(twice.matrix - once.matrix) / once.norm() < 1e-10


@pytest.mark.parametrize("model", [CaldeiraLeggettParams(0.1, 2.0, weak_dissipation=False), QOMEParams(0.3, 1.0)])
def test_average_preserves_action_on_identity(model):
    n_max = 7
    gen = fock_generator(model, n_max, include_hamiltonian=False)
    avg = average_generator(gen, hamiltonian_fock(n_max), 1.0)
    ident = np.eye(n_max + 1) / (n_max + 1)
    assert np.max(np.abs(gen(ident))) > 1e-3
    assert np.max(np.abs(avg(ident) - gen(ident))) < 1e-12
    assert abs(np.trace(avg(ident))) < 1e-12
