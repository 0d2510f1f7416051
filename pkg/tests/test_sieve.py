import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from oqsieve.dynamics import GridGenerator, fock_generator, hamiltonian_superoperator
from oqsieve.environments import CaldeiraLeggettParams, CorrelatedNoiseParams, QOMEParams
from oqsieve.errors import NormalizationError, PreconditionError, RegimeWarning
from oqsieve.sieve import (_select, correlated_rate_closed_form, default_family, entropy_rate_cl,
                           entropy_rate_correlated, entropy_rate_numeric, entropy_rate_qome, instantaneous_rate,
                           linear_entropy, log_family, numeric_period_average, numeric_rate, orbit_var_x,
                           period_averaged_entropy, qome_rate_constant, run_sieve)
from oqsieve.states import (FockDensityMatrix, GaussianPureState, Moments, OscillatorParams, PositionGrid,
                            gaussian_density, hamiltonian_fock, make_coherent_fock)

NATURAL = OscillatorParams()


def quiet(f, *args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        return f(*args, **kw)


def gaussian_on_grid(delta_x, grid):
    return np.exp(-grid.x ** 2 / (2 * delta_x ** 2)) / math.sqrt(2 * math.pi * delta_x ** 2)


def test_linear_entropy_examples():
    assert linear_entropy(make_coherent_fock(1.0, 20)) == pytest.approx(0.0, abs=1e-8)
    assert linear_entropy(gaussian_density(GaussianPureState(x0=1.0), PositionGrid())) == pytest.approx(0, abs=1e-8)
    mixed = FockDensityMatrix(np.diag([0.75, 0.25]).astype(complex), leakage_bound=1.0)
    assert linear_entropy(mixed) == pytest.approx(0.375)
    assert linear_entropy(FockDensityMatrix(np.eye(4) / 4, leakage_bound=1.0)) == pytest.approx(0.75)


def test_closed_system_produces_no_entropy():
    rho = make_coherent_fock(0.7 + 0.2j, 30)
    assert abs(entropy_rate_numeric(rho, hamiltonian_superoperator(hamiltonian_fock(30)))) < 1e-9
    grid = PositionGrid()
    rho = gaussian_density(GaussianPureState(x0=1.0, p0=-0.5), grid)
    assert abs(entropy_rate_numeric(rho, GridGenerator(grid, CaldeiraLeggettParams(0.0, 1.0)))) < 1e-9


def test_caldeira_leggett_ground_state_rate():
    p = CaldeiraLeggettParams.from_D(0.05)
    grid = PositionGrid()
    rate = entropy_rate_numeric(gaussian_density(GaussianPureState(), grid), GridGenerator(grid, p))
    assert rate == pytest.approx(0.1, abs=1e-4)
    fock = entropy_rate_numeric(make_coherent_fock(0.0, 20), fock_generator(p, 20))
    assert fock == pytest.approx(0.1, abs=1e-10)


def test_entropy_rate_cl_examples():
    assert entropy_rate_cl(0.0, CaldeiraLeggettParams.from_D(1.0)) == 0.0
    assert entropy_rate_cl(0.5, CaldeiraLeggettParams.from_D(1.0)) == pytest.approx(2.0)
    assert entropy_rate_cl(Moments(0, 0, 0.5, 0.5), CaldeiraLeggettParams(0.01, 5.0)) == pytest.approx(0.2)


def test_correlated_rate_closed_form_example():
    grid = PositionGrid(-16, 16, 512)
    p = CorrelatedNoiseParams(1.0, 2.0)
    rate = entropy_rate_correlated(gaussian_on_grid(1.0, grid), grid, p)
    assert rate == pytest.approx(2 * (1 - 2 / math.sqrt(8)), rel=1e-9)
    assert rate == pytest.approx(0.5857864, abs=1e-7)


def test_correlated_closed_form_against_quadrature_oracle():
    lam, sigma, dx = 1.3, 0.8, 0.6
    P = lambda x: math.exp(-x * x / (2 * dx * dx)) / math.sqrt(2 * math.pi * dx * dx)
    L = 10 * dx
    val, _ = integrate.dblquad(lambda y, x: P(x) * P(y) * -math.expm1(-((x - y) / sigma) ** 2),
                               -L, L, -L, L, epsabs=1e-12, epsrel=1e-10)
    p = CorrelatedNoiseParams(lam, sigma)
    assert correlated_rate_closed_form(dx, p) == pytest.approx(2 * lam * val, rel=1e-8)


def test_correlated_rate_limits():
    p_long = CorrelatedNoiseParams(1.0, 100.0)
    grid = PositionGrid(-16, 16, 512)
    P = gaussian_on_grid(1.0, grid)
    assert entropy_rate_correlated(P, grid, p_long) == pytest.approx(4e-4, rel=0.05)
    p_short = CorrelatedNoiseParams(1.0, 0.05)
    fine = PositionGrid(-16, 16, 4096)
    assert entropy_rate_correlated(gaussian_on_grid(1.0, fine), fine, p_short) == pytest.approx(1.95, abs=1e-3)


def test_correlated_rate_requires_normalized_density():
    grid = PositionGrid(-8, 8, 128)
    with pytest.raises(NormalizationError):
        entropy_rate_correlated(2 * gaussian_on_grid(1.0, grid), grid, CorrelatedNoiseParams(1.0, 1.0))


def test_qome_rate_formula():
    p = QOMEParams(1.0, 0.0)
    assert entropy_rate_qome(0.5, 0.5, p) == pytest.approx(1.0)
    coherent = entropy_rate_qome(0.5, 0.5, p)
    assert entropy_rate_qome(2.0, 0.125, p) / coherent == pytest.approx(2.125)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_qome_numeric_rate_is_formula_minus_gamma(s):
    # for pure Gaussians -2 Tr[rho L rho] = C (var_x + var_p) - Gamma exactly
    p = QOMEParams(1.0, 0.0)
    state = GaussianPureState(s=s)
    formula = entropy_rate_qome(state.var_x(NATURAL), state.var_p(NATURAL), p)
    assert numeric_rate(state, p) == pytest.approx(formula - p.Gamma, abs=1e-10)


@given(s=st.floats(0.1, 10.0))
def test_qome_rate_minimized_by_coherent_state(s):
    p = QOMEParams(0.3, 1.5)
    st_ = GaussianPureState(s=s)
    assert instantaneous_rate(st_, p) >= instantaneous_rate(GaussianPureState(), p) * (1 - 1e-12)
    assert instantaneous_rate(st_, p) == pytest.approx(instantaneous_rate(GaussianPureState(s=1 / s), p))


def test_period_average_caldeira_leggett():
    p = CaldeiraLeggettParams.from_D(0.01)
    assert period_averaged_entropy(GaussianPureState(), p) == pytest.approx(2 * p.D)
    r = period_averaged_entropy(GaussianPureState(s=2.0), p) / period_averaged_entropy(GaussianPureState(), p)
    assert r == pytest.approx(2.125)


def test_period_average_dimensional_form():
    osc = OscillatorParams(m=2.0, omega=3.0, hbar=0.5)
    p = CaldeiraLeggettParams(gamma=1e-4, kT=0.2, osc=osc)
    value = period_averaged_entropy(GaussianPureState(), p)
    assert value == pytest.approx(2 * p.D * osc.hbar / (osc.m * osc.omega))


@given(s=st.floats(0.05, 20.0))
def test_period_average_amgm(s):
    p = CaldeiraLeggettParams.from_D(1e-3)
    assert period_averaged_entropy(GaussianPureState(s=s), p) >= 2 * p.D * (1 - 1e-12)


def test_correlated_period_average_against_orbit_quadrature():
    p = CorrelatedNoiseParams(0.01, 0.7)
    state = GaussianPureState(s=2.0)
    f = lambda t: correlated_rate_closed_form(math.sqrt(orbit_var_x(state, NATURAL, t)), p)
    oracle = integrate.quad(f, 0, 2 * math.pi, epsabs=1e-14)[0] / (2 * math.pi)
    assert period_averaged_entropy(state, p) == pytest.approx(oracle, rel=1e-9)


def test_regime_warning():
    with pytest.warns(RegimeWarning):
        period_averaged_entropy(GaussianPureState(), CaldeiraLeggettParams(0.01, 5.0))


@pytest.mark.parametrize("s", [0.25, 0.5, 2.0, 4.0])
def test_numeric_rate_matches_caldeira_leggett_formula(s):
    p = CaldeiraLeggettParams.from_D(0.01)
    state = GaussianPureState(s=s)
    assert numeric_rate(state, p) == pytest.approx(4 * p.D * state.var_x(NATURAL), rel=1e-6)


@pytest.mark.parametrize("s", [0.25, 1.0, 4.0])
def test_numeric_period_average_matches_analytic(s):
    p = CaldeiraLeggettParams.from_D(0.01)
    state = GaussianPureState(s=s)
    assert quiet(numeric_period_average, state, p) == pytest.approx(period_averaged_entropy(state, p), rel=1e-4)


def test_numeric_period_average_qome():
    p = QOMEParams(0.05, 1.0)
    state = GaussianPureState(s=2.0)
    analytic = quiet(period_averaged_entropy, state, p)
    assert quiet(numeric_period_average, state, p) == pytest.approx(analytic - p.Gamma, abs=1e-9)


def test_numeric_rate_correlated_matches_closed_form():
    p = CorrelatedNoiseParams(0.01, 0.5)
    state = GaussianPureState(s=1.5)
    expected = correlated_rate_closed_form(state.delta_x(NATURAL), p)
    assert numeric_rate(state, p) == pytest.approx(expected, rel=1e-8)


def test_default_family():
    s = default_family()
    assert s.size == 33 and s[0] == 0.25 and s[-1] == 4.0 and s[16] == 1.0
    assert np.array_equal(log_family(0.25, 4.0, 33), s)


def test_sieve_caldeira_leggett():
    res = quiet(run_sieve, None, CaldeiraLeggettParams(0.01, 5.0))
    assert res.best_s == 1.0
    assert res.values[res.argmin] == pytest.approx(0.2)
    assert not res.flat and not res.tie


def test_sieve_qome():
    p = QOMEParams(0.05, 1.0)
    res = quiet(run_sieve, None, p)
    assert res.best_s == 1.0
    assert np.allclose(res.values / res.values[res.argmin], (res.s ** 2 + res.s ** -2) / 2, rtol=1e-12)
    assert res.metadata["qome_rate_constant"] == pytest.approx(qome_rate_constant(p))


def test_sieve_short_correlation_is_flat():
    s = default_family()
    sigma = 0.05 * s[0] * math.sqrt(0.5)
    res = run_sieve(s, CorrelatedNoiseParams(1e-3, sigma), measure="rate")
    assert res.flatness_ratio <= 1.05
    assert res.flat and res.best_s is None


def test_sieve_aggregates_regime_warnings():
    with pytest.warns(RegimeWarning, match="33 of 33"):
        res = run_sieve(None, CaldeiraLeggettParams(0.01, 5.0))
    assert len(res.warnings) == 33


def test_sieve_family_validation():
    p = CaldeiraLeggettParams.from_D(1e-3)
    with pytest.raises(PreconditionError):
        run_sieve([1.0, 0.5, 2.0], p, strict_family=False)
    with pytest.raises(PreconditionError):
        run_sieve(np.linspace(0.5, 2, 33), p)
    with pytest.raises(ValueError):
        run_sieve(None, p, measure="total")
    with pytest.raises(ValueError):
        run_sieve(None, p, path="symbolic")


def test_tie_breaks_toward_coherent_state():
    s = np.array([0.5, 0.8, 1.0, 1.25, 2.0])
    idx, tie = _select(s, np.array([3.0, 1.0, 1.0, 1.0, 3.0]))
    assert s[idx] == 1.0 and tie
    idx, tie = _select(s, np.array([3.0, 1.0, 2.0, 2.0, 3.0]))
    assert idx == 1 and not tie


@settings(max_examples=10, deadline=None)
@given(lo=st.floats(0.05, 0.25), hi=st.floats(4.0, 20.0))
def test_caldeira_leggett_sieve_selects_coherent_state(lo, hi):
    s = np.sort(np.append(np.geomspace(lo, hi, 40), 1.0))
    s = s[np.concatenate([[True], np.diff(s) > 0])]
    res = quiet(run_sieve, s, CaldeiraLeggettParams.from_D(1e-4), measure="period")
    assert res.best_s == 1.0


def test_caldeira_leggett_landscape_symmetric_in_log_s():
    res = quiet(run_sieve, None, CaldeiraLeggettParams(0.01, 5.0))
    assert np.max(np.abs(res.values - res.values[::-1])) <= 1e-9


def test_long_correlation_landscape_approaches_caldeira_leggett():
    lam, sigma = 1e-3, 100.0
    corr = run_sieve(None, CorrelatedNoiseParams(lam, sigma))
    cl = run_sieve(None, CaldeiraLeggettParams.from_D(lam / sigma ** 2))
    assert np.max(np.abs(corr.values / cl.values - 1)) <= 1e-2


def test_numeric_correlated_rate_across_family():
    p = CorrelatedNoiseParams(1e-3, 0.8)
    for s in (0.25, 0.5, 1.0, 2.0, 4.0):
        state = GaussianPureState(s=s)
        expected = correlated_rate_closed_form(state.delta_x(NATURAL), p)
        assert numeric_rate(state, p) == pytest.approx(expected, rel=5e-3)


@pytest.mark.parametrize("model", [CaldeiraLeggettParams(0.0, 1.0), QOMEParams(0.0, 0.0)])
@pytest.mark.parametrize("measure", ["rate", "period"])
@pytest.mark.parametrize("path", ["analytic", "numeric"])
def test_unitary_evolution_has_zero_measure(model, measure, path):
    res = run_sieve(log_family(0.25, 4.0, 9), model, measure=measure, path=path, strict_family=False)
    assert np.max(np.abs(res.values)) <= 1e-9
