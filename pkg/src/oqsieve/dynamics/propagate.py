"""Time propagation: Strang splitting on the position grid and RK4 in the Fock basis."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from ..environments import CaldeiraLeggettParams, CorrelatedNoiseParams, EnvironmentModel, QOMEParams
from ..errors import BoundaryLeakWarning, PreconditionError, StepSizeError
from ..states import (FockDensityMatrix, GridDensityMatrix, OscillatorParams, check_leakage, hamiltonian_fock,
                      ladder, quadratures)
from .generators import (cl_friction, commutator, decoherence_matrix, grid_operators, harmonic_potential,
                         model_oscillator, qome_rhs)
from .superop import build_superoperator

TRACE_DRIFT_LIMIT = 1e-6
POSITIVITY_LIMIT = -1e-7
EDGE_POPULATION = 1e-8
DIRECT_FOCK_DIM = 64


@dataclass
class PropagationResult:
    times: np.ndarray
    linear_entropy: np.ndarray
    purity: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    var_x: np.ndarray
    var_p: np.ndarray
    trace_drift: np.ndarray
    hermiticity_defect: np.ndarray
    positivity_times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_eigenvalue: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flags: list = field(default_factory=list)
    final_state: object = None

    @property
    def degraded(self) -> bool:
        return bool(self.flags)

    COLUMNS = (("time", "time"), ("linear_entropy", "1"), ("purity", "1"), ("mean_x", "length"),
               ("mean_p", "momentum"), ("var_x", "length^2"), ("var_p", "momentum^2"),
               ("trace_drift", "1"), ("hermiticity_defect", "1"))

    def table(self) -> np.ndarray:
        names = ["times"] + [c for c, _ in self.COLUMNS[1:]]
        return np.column_stack([getattr(self, n) for n in names])


class _Recorder:
    def __init__(self):
        self.rows = []

    def add(self, t, purity, mx, mp, vx, vp, trace, herm):
        self.rows.append((t, 1.0 - purity, purity, mx, mp, vx, vp, trace - 1.0, herm))

    def result(self, **kw) -> PropagationResult:
        a = np.array(self.rows, dtype=float)
        return PropagationResult(a[:, 0], a[:, 1], a[:, 2], a[:, 3], a[:, 4], a[:, 5], a[:, 6],
                                 a[:, 7], a[:, 8], **kw)


def _moments_from_densities(x, px, p, pp):
    px = px / px.sum()
    pp = pp / pp.sum()
    mx = px @ x
    mp = pp @ p
    return mx, mp, px @ (x - mx) ** 2, pp @ (p - mp) ** 2


def default_grid_dt(osc: OscillatorParams) -> float:
    return 2 * math.pi / (osc.omega * 1000)


def default_fock_dt(osc: OscillatorParams) -> float:
    return 2 * math.pi / (osc.omega * 2000)


def check_grid_step(dt: float, osc: OscillatorParams) -> None:
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt!r}")
    if dt * osc.omega > 0.01 + 1e-15:
        raise StepSizeError(f"dt*omega = {dt * osc.omega:.4g} exceeds 0.01")


def check_fock_step(dt: float, p: QOMEParams, n_max: int) -> None:
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt!r}")
    stiff = max(p.osc.omega, p.Gamma * (2 * p.N + 1) * n_max)
    if dt * stiff > 0.05 + 1e-15:
        raise StepSizeError(f"dt*max(omega, Gamma(2N+1)n_max) = {dt * stiff:.4g} exceeds 0.05")


def propagate_grid(rho0: GridDensityMatrix, model: EnvironmentModel, potential=None, dt: float | None = None,
                   n_steps: int = 1000, *, osc: OscillatorParams | None = None,
                   record_every: int = 1) -> PropagationResult:
    """Strang-split propagation of a position-space density matrix.

    Each step is a half kinetic phase in the momentum representation, the
    potential phase times the exact decoherence factor exp(-g(x, x') dt) in
    the position representation, and another half kinetic phase. With
    Caldeira-Leggett friction switched on, the two friction terms are added
    by a forward Euler update inside the position stage.
    """
    if not isinstance(model, (CaldeiraLeggettParams, CorrelatedNoiseParams)):
        raise PreconditionError("propagate_grid supports Caldeira-Leggett and correlated-noise models only")
    osc = model_oscillator(model, osc)
    dt = default_grid_dt(osc) if dt is None else dt
    check_grid_step(dt, osc)
    if record_every < 1:
        raise PreconditionError("record_every must be >= 1")
    grid = rho0.grid
    hb = osc.hbar
    x = grid.x
    p = grid.momenta(hb)
    V = np.asarray((potential or harmonic_potential(osc))(x), dtype=float)
    kin_half = np.exp(-1j * np.subtract.outer(p ** 2, p ** 2) * dt / (4 * osc.m * hb))
    kin_full = kin_half * kin_half
    pot = np.exp(-1j * np.subtract.outer(V, V) * dt / hb) * np.exp(-decoherence_matrix(grid, model) * dt)
    friction = isinstance(model, CaldeiraLeggettParams) and not model.weak_dissipation
    if friction:
        x_op, p_op = grid_operators(grid, hb)

    n = grid.n
    iu = np.triu_indices(n)
    upper, lower = iu[0] * n + iu[1], iu[1] * n + iu[0]
    # fft2(rho) is U rho U^dagger with the column index reflected, l -> -l mod n
    p_diag_index = (np.arange(n), (-np.arange(n)) % n)

    rec = _Recorder()
    flags: list[str] = []
    leak_warned = False

    def record(t, rho, rp):
        nonlocal leak_warned
        diag = np.real(np.diag(rho))
        trace = diag.sum() * grid.dx
        purity = np.sum(np.abs(rho) ** 2) * grid.dx ** 2
        mx, mp, vx, vp = _moments_from_densities(x, diag, p, np.real(rp[p_diag_index]))
        flat = rho.ravel()
        herm = np.max(np.abs(flat[upper] - flat[lower].conj()))
        rec.add(t, purity, mx, mp, vx, vp, trace, herm)
        if abs(trace - 1) > TRACE_DRIFT_LIMIT and "trace-drift" not in flags:
            flags.append("trace-drift")
        if not leak_warned and (diag[0] + diag[-1]) * grid.dx > EDGE_POPULATION:
            leak_warned = True
            warnings.warn(f"edge population {(diag[0] + diag[-1]) * grid.dx:.3e} exceeds "
                          f"{EDGE_POPULATION:.0e} at t={t:.4g}", BoundaryLeakWarning, stacklevel=3)

    rho = rho0.elements.copy()
    rp = sfft.fft2(rho)
    record(0.0, rho, rp)
    # kinetic half steps of consecutive unrecorded steps merge into one full phase
    pending_half = True
    for step in range(1, n_steps + 1):
        rp *= kin_half if pending_half else kin_full
        rho = sfft.ifft2(rp, overwrite_x=True)
        rho *= pot
        if friction:
            rho += dt * cl_friction(rho, x_op, p_op, model.gamma, hb)
        rp = sfft.fft2(rho, overwrite_x=True)
        if step % record_every == 0 or step == n_steps:
            rp *= kin_half
            pending_half = True
            rho = sfft.ifft2(rp)
            record(step * dt, rho, rp)
        else:
            pending_half = False
    final = GridDensityMatrix(grid, rho, validate=False)
    return rec.result(flags=flags, final_state=final)


def rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _matrix_power(a: np.ndarray, k: int) -> np.ndarray:
    """Binary powering that flushes subnormal entries, which otherwise slow matmul by an order of magnitude."""
    tiny = np.finfo(float).tiny

    def flush(m):
        m[np.abs(m) < tiny] = 0
        return m

    result = None
    base = a.copy()
    while k:
        if k & 1:
            result = base.copy() if result is None else flush(result @ base)
        k >>= 1
        if k:
            base = flush(base @ base)
    return result


def fock_rhs(p: QOMEParams):
    """Full right-hand side: free oscillator plus the QOME dissipator."""
    H = hamiltonian_fock
    osc = p.osc
    cache = {}

    def f(rho):
        d = rho.shape[0]
        if d not in cache:
            cache[d] = H(d - 1, osc)
        return -1j / osc.hbar * commutator(cache[d], rho) + qome_rhs(rho, p)
    return f


def propagate_fock(rho0: FockDensityMatrix, p: QOMEParams, dt: float | None = None, n_steps: int = 2000, *,
                   record_every: int = 1, positivity_every: int = 100) -> PropagationResult:
    """Classic RK4 integration of the QOME in the number basis.

    For small truncations the RK4 step is tabulated once as a superoperator
    (it is an exact linear map for this time-independent equation) and
    applied ``record_every`` steps at a time.
    """
    osc = p.osc
    dt = default_fock_dt(osc) if dt is None else dt
    d = rho0.dim
    check_fock_step(dt, p, rho0.n_max)
    if record_every < 1:
        raise PreconditionError("record_every must be >= 1")
    f = fock_rhs(p)
    x, pq = quadratures(rho0.n_max, osc)
    a = ladder(rho0.n_max)
    a2 = a @ a
    num = np.diag(2 * np.arange(d) + 1.0)
    x2 = osc.hbar / (2 * osc.m * osc.omega) * (a2 + a2.conj().T + num)
    p2 = osc.m * osc.omega * osc.hbar / 2 * (num - a2 - a2.conj().T)
    obs_t = [o.T.copy() for o in (x, pq, x2, p2)]

    rec = _Recorder()
    flags: list[str] = []
    pos_t, pos_v = [], []
    leak_flagged = False

    def record(t, rho, step):
        nonlocal leak_flagged
        tr = np.real(np.trace(rho))
        ex, ep, ex2, ep2 = (np.real(np.sum(rho * o)) / tr for o in obs_t)
        purity = np.sum(np.abs(rho) ** 2)
        rec.add(t, purity, ex, ep, ex2 - ex ** 2, ep2 - ep ** 2, tr, np.max(np.abs(rho - rho.conj().T)))
        if abs(tr - 1) > TRACE_DRIFT_LIMIT and "trace-drift" not in flags:
            flags.append("trace-drift")
        if not leak_flagged and np.real(rho[-1, -1]) > rho0.leakage_bound:
            leak_flagged = True
            check_leakage(rho, rho0.leakage_bound)
            flags.append("truncation")

    def check_positivity(t, rho):
        lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        pos_t.append(t)
        pos_v.append(lam)
        if lam < POSITIVITY_LIMIT and "positivity" not in flags:
            flags.append("positivity")

    rho = rho0.elements.copy()
    record(0.0, rho, 0)
    check_positivity(0.0, rho)
    tabulate = d <= DIRECT_FOCK_DIM
    if tabulate:
        step_map = build_superoperator(lambda r: rk4_step(f, r, dt), d).matrix
        # powering costs about 2 log2(k) d^2 matrix-vector products
        use_power = record_every > 1 and n_steps > 2 * math.log2(record_every) * d * d
        stride = _matrix_power(step_map, record_every) if use_power else None
        v = rho.reshape(-1, order="F")
    step = 0
    last_pos = 0
    while step < n_steps:
        k = min(record_every, n_steps - step)
        if tabulate:
            if use_power and k == record_every:
                v = stride @ v
            else:
                for _ in range(k):
                    v = step_map @ v
            rho = v.reshape((d, d), order="F")
        else:
            for _ in range(k):
                rho = rk4_step(f, rho, dt)
        step += k
        record(step * dt, rho, step)
        if step // positivity_every > last_pos // positivity_every or step == n_steps:
            check_positivity(step * dt, rho)
            last_pos = step
    final = FockDensityMatrix(rho, leakage_bound=rho0.leakage_bound, validate=False)
    return rec.result(positivity_times=np.array(pos_t), min_eigenvalue=np.array(pos_v), flags=flags,
                      final_state=final)
