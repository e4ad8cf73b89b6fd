"""Time-dependent anneal simulation.

The statevector backend integrates (hbar = 1)

    i dpsi/dt = H(t) psi,
    H(t) = -A(s(t))/2 * sum_i sx_i
           + B(s(t))/2 * (g(t) * sum_i h_i sz_i + sum_{i<j} J_ij sz_i sz_j)

exactly for small n, matrix-free: sx terms are bit flips of the amplitude
index and sz terms a precomputed diagonal.  Basis convention: bit i of the
amplitude index is 1 iff x_i = -1, so index 0 is the all-up state.

The classical backend is a Metropolis single-spin-flip surrogate whose
inverse temperature tracks B(s(t))/A(s(t)), for instance sizes where 2^n
amplitudes are out of reach.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .ising import IsingModel, SpinConfig, energy
from .samples import SampleRecord, SampleSet
from .schedules import SchedulePlan, eval_path

logger = logging.getLogger(__name__)

NORM_ABORT = 1e-4
BETA_CLAMP = (1e-3, 1e3)


class SimulationError(RuntimeError):
    """Numerical failure of an evolution (step-size instability etc.)."""


@dataclass
class StateVector:
    """2^n complex amplitudes over the computational basis."""

    n: int
    amplitudes: np.ndarray
    norm_drift: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.n,):
            raise ValueError(f"expected {1 << self.n} amplitudes for n={self.n}")
        self.amplitudes = amps

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class SimConfig:
    """Integrator, sampling, and backend knobs.

    ``dt=None`` means T/10000.  ``sweeps`` applies to the classical
    backend only (default 1000 Metropolis sweeps over the schedule).
    """

    dt: float | None = None
    integrator: str = "rk4"  # "rk4" | "split"
    shots: int = 1000
    seed: int = 0
    backend: str = "statevector"  # "statevector" | "classical"
    statevector_limit: int = 16
    sweeps: int | None = None

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.integrator not in ("rk4", "split"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.backend not in ("statevector", "classical"):
            raise ValueError(f"unknown backend {self.backend!r}")

    def step_size(self, T: float) -> float:
        return self.dt if self.dt is not None else T / 10000.0


def basis_index(values) -> int:
    """Amplitude index of a classical +/-1 configuration."""
    k = 0
    for i, v in enumerate(values):
        if v == -1:
            k |= 1 << i
    return k


def config_of_index(k: int, n: int) -> tuple[int, ...]:
    return tuple(1 - 2 * ((k >> i) & 1) for i in range(n))


class HamiltonianApplier:
    """Matrix-free H(s, g) application with cached flip table and diagonals."""

    def __init__(self, model: IsingModel, functions):
        self.model = model
        self.functions = functions
        n = model.n
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        self.flip = np.empty((n, dim), dtype=np.int64)
        for i in range(n):
            self.flip[i] = idx ^ (1 << i)
        signs = 1.0 - 2.0 * ((idx[None, :] >> np.arange(n)[:, None]) & 1)
        self.diag_lin = np.zeros(dim)
        for i, h in model.linear.items():
            self.diag_lin += h * signs[i]
        self.diag_quad = np.zeros(dim)
        for (i, j), v in model.quadratic.items():
            self.diag_quad += v * signs[i] * signs[j]

    def transverse_sum(self, psi: np.ndarray) -> np.ndarray:
        """sum_i sx_i |psi> via index flips."""
        if self.model.n == 0:
            return np.zeros_like(psi)
        return psi[self.flip].sum(axis=0)

    def diagonal(self, b: float, g: float) -> np.ndarray:
        return (b / 2.0) * (g * self.diag_lin + self.diag_quad)

    def apply(self, psi: np.ndarray, a: float, b: float, g: float) -> np.ndarray:
        out = self.transverse_sum(psi)
        out *= -a / 2.0
        out += self.diagonal(b, g) * psi
        return out

    def apply_at(self, psi: np.ndarray, s: float, g: float) -> np.ndarray:
        return self.apply(psi, float(self.functions.a(s)), float(self.functions.b(s)), g)


def apply_hamiltonian(model: IsingModel, s: float, g: float, psi: StateVector,
                      functions=None) -> StateVector:
    """Return H(s, g) |psi| computed matrix-free; g scales linear terms only."""
    from .schedules import default_anneal_functions

    if model.n != psi.n:
        raise ValueError(f"model n={model.n} does not match state n={psi.n}")
    applier = HamiltonianApplier(model, functions or default_anneal_functions())
    return StateVector(psi.n, applier.apply_at(psi.amplitudes, s, g))


def dense_hamiltonian(model: IsingModel, s: float, g: float, functions=None) -> np.ndarray:
    """Explicit 2^n x 2^n matrix of H(s, g); used for diagnostics and n <= ~12."""
    from .schedules import default_anneal_functions

    functions = functions or default_anneal_functions()
    applier = HamiltonianApplier(model, functions)
    dim = 1 << model.n
    a = float(functions.a(s))
    h = np.diag(applier.diagonal(float(functions.b(s)), g)).astype(np.float64)
    idx = np.arange(dim)
    for i in range(model.n):
        h[idx, idx ^ (1 << i)] += -a / 2.0
    return h


def init_state(plan: SchedulePlan, model: IsingModel, x0=None) -> StateVector:
    """Initial state for a plan: uniform superposition for forward/HG anneals,
    the computational basis state of ``x0`` for reverse anneals.

    For reverse plans on a slack-extended model, ``x0`` may be one spin
    short; the slack (last variable) is then initialized to +1.
    """
    dim = 1 << model.n
    if plan.is_reverse:
        if x0 is None:
            raise ValueError("reverse plans require an initial state x0")
        vals = tuple(int(v) for v in (x0.values if isinstance(x0, SpinConfig) else x0))
        if len(vals) == model.n - 1:
            vals = vals + (1,)  # slack spin reinforced to +1
        if len(vals) != model.n:
            raise ValueError(f"x0 length {len(vals)} incompatible with n={model.n}")
        if any(v not in (-1, 1) for v in vals):
            raise ValueError("x0 must be a +/-1 configuration")
        amps = np.zeros(dim, dtype=np.complex128)
        amps[basis_index(vals)] = 1.0
        return StateVector(model.n, amps)
    amps = np.full(dim, 1.0 / math.sqrt(dim), dtype=np.complex128)
    return StateVector(model.n, amps)


def _schedule_tables(plan: SchedulePlan, times: np.ndarray):
    """Vectorized s, g, A, B lookups on an array of times."""
    a_pts = plan.anneal_path.points
    s = np.interp(times, [p[0] for p in a_pts], [p[1] for p in a_pts])
    if plan.hgain_path is not None:
        h_pts = plan.hgain_path.points
        g = np.interp(times, [p[0] for p in h_pts], [p[1] for p in h_pts])
    else:
        g = np.ones_like(times)
    a = plan.functions.a(s)
    b = plan.functions.b(s)
    return np.asarray(a, float), np.asarray(b, float), np.asarray(g, float)


def evolve(psi: StateVector, plan: SchedulePlan, model: IsingModel, cfg: SimConfig) -> StateVector:
    """Integrate the Schrödinger equation along the plan from t=0 to t=T.

    The state is renormalized after every step and the accumulated
    |1 - norm| drift is reported on the returned StateVector; a per-step
    deviation above 1e-4 aborts with a diagnostic.
    """
    if model.n != psi.n:
        raise ValueError("model/state size mismatch")
    if model.n > cfg.statevector_limit:
        raise ValueError(f"n={model.n} exceeds statevector_limit={cfg.statevector_limit}")
    T = plan.T
    dt = cfg.step_size(T)
    steps = max(1, int(math.ceil(T / dt - 1e-12)))
    dt = T / steps
    applier = HamiltonianApplier(model, plan.functions)

    # Half-grid tables: entry 2k is t_k, entry 2k+1 the step midpoint.
    half_times = np.linspace(0.0, T, 2 * steps + 1)
    a_tab, b_tab, g_tab = _schedule_tables(plan, half_times)

    amps = psi.amplitudes.copy()
    drift = 0.0
    if cfg.integrator == "rk4":
        for k in range(steps):
            a0, b0, g0 = a_tab[2 * k], b_tab[2 * k], g_tab[2 * k]
            am, bm, gm = a_tab[2 * k + 1], b_tab[2 * k + 1], g_tab[2 * k + 1]
            a1, b1, g1 = a_tab[2 * k + 2], b_tab[2 * k + 2], g_tab[2 * k + 2]
            k1 = -1j * applier.apply(amps, a0, b0, g0)
            k2 = -1j * applier.apply(amps + (dt / 2) * k1, am, bm, gm)
            k3 = -1j * applier.apply(amps + (dt / 2) * k2, am, bm, gm)
            k4 = -1j * applier.apply(amps + dt * k3, a1, b1, g1)
            amps = amps + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            nrm = np.linalg.norm(amps)
            dev = abs(1.0 - nrm)
            if dev > NORM_ABORT:
                raise SimulationError(
                    f"norm drift {dev:.3e} at step {k + 1}/{steps} (dt={dt:.3e}) exceeds "
                    f"{NORM_ABORT:.0e}; reduce dt")
            drift += dev
            amps /= nrm
    else:  # "split": Strang splitting, diagonal half-steps around a transverse kick
        for k in range(steps):
            am, bm, gm = a_tab[2 * k + 1], b_tab[2 * k + 1], g_tab[2 * k + 1]
            phase = np.exp(-0.5j * dt * applier.diagonal(bm, gm))
            amps = phase * amps
            theta = dt * am / 2.0
            c, s_ = math.cos(theta), math.sin(theta)
            for i in range(model.n):
                flipped = amps[applier.flip[i]]
                amps = c * amps + 1j * s_ * flipped
            amps = phase * amps
            nrm = np.linalg.norm(amps)
            dev = abs(1.0 - nrm)
            if dev > NORM_ABORT:
                raise SimulationError(f"norm drift {dev:.3e} at step {k + 1}/{steps}")
            drift += dev
            amps /= nrm
    if drift > 0:
        logger.debug("evolution drift %.3e over T=%g (dt=%g)", drift, T, dt)
    return StateVector(model.n, amps, norm_drift=drift)


def sample(psi: StateVector, shots: int, seed: int, model: IsingModel | None = None) -> SampleSet:
    """Multinomial measurement of |amplitude|^2, deterministic per seed.

    Record energies are evaluated on ``model`` when given (the usual
    case); without a model they are reported as 0.0.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = psi.probabilities()
    total = probs.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"state norm^2 = {total:.6f}; normalize before sampling")
    probs = probs / total
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, probs)
    records = []
    for k in np.nonzero(counts)[0]:
        cfg = config_of_index(int(k), psi.n)
        e = energy(model, cfg) if model is not None else 0.0
        records.append(SampleRecord(config=cfg, count=int(counts[k]), energy=e))
    return SampleSet(shots=shots, records=tuple(records), meta={"seed": seed})


def anneal(model: IsingModel, plan: SchedulePlan, x0=None, cfg: SimConfig = SimConfig()) -> SampleSet:
    """Full anneal: init, evolve, measure ``cfg.shots`` times.

    With ``reinitialize`` (the only supported mode) the dynamics are
    unitary from a fixed initial state, so one evolution plus a
    multinomial draw is statistically identical to per-shot re-runs.
    """
    if not plan.reinitialize:
        raise ValueError("reinitialize=False is not supported: unitary simulation cannot "
                         "carry state between anneals")
    if cfg.backend == "classical":
        return classical_anneal(model, plan, x0, cfg)
    psi = init_state(plan, model, x0)
    psi = evolve(psi, plan, model, cfg)
    out = sample(psi, cfg.shots, cfg.seed, model)
    meta = dict(out.meta)
    meta.update(backend="statevector", plan=plan.digest(), n=model.n,
                norm_drift=psi.norm_drift)
    return SampleSet(shots=out.shots, records=out.records, meta=meta)


def classical_anneal(model: IsingModel, plan: SchedulePlan, x0=None,
                     cfg: SimConfig = SimConfig()) -> SampleSet:
    """Metropolis single-spin-flip surrogate backend for any n.

    beta(t) is proportional to B(s(t))/A(s(t)), clamped to [1e-3, 1e3];
    the h-gain g(t) scales the linear field during the sweep schedule.
    Chains are independent (one per shot) and the run is deterministic
    per seed.  Final energies are evaluated on the plain model.
    """
    n = model.n
    shots = cfg.shots
    sweeps = cfg.sweeps if cfg.sweeps is not None else 1000
    rng = np.random.default_rng(cfg.seed)
    if x0 is not None:
        vals = tuple(int(v) for v in (x0.values if isinstance(x0, SpinConfig) else x0))
        if len(vals) == n - 1:
            vals = vals + (1,)
        if len(vals) != n:
            raise ValueError(f"x0 length {len(vals)} incompatible with n={n}")
        chains = np.tile(np.array(vals, dtype=np.float64), (shots, 1))
    else:
        chains = rng.choice([-1.0, 1.0], size=(shots, n))

    jmat = np.zeros((n, n))
    for (i, j), v in model.quadratic.items():
        jmat[i, j] = v
        jmat[j, i] = v
    hvec = np.zeros(n)
    for i, h in model.linear.items():
        hvec[i] = h

    t_mid = (np.arange(sweeps) + 0.5) / sweeps * plan.T
    a_tab, b_tab, g_tab = _schedule_tables(plan, t_mid)
    with np.errstate(divide="ignore", over="ignore"):
        beta = np.clip(np.where(a_tab > 0, b_tab / np.where(a_tab > 0, a_tab, 1.0), np.inf),
                       BETA_CLAMP[0], BETA_CLAMP[1])

    for k in range(sweeps):
        bk, gk = beta[k], g_tab[k]
        for i in range(n):
            field = chains @ jmat[:, i] + gk * hvec[i]
            d_e = -2.0 * chains[:, i] * field
            with np.errstate(over="ignore", under="ignore"):
                accept = (d_e <= 0) | (rng.random(shots) < np.exp(-bk * np.maximum(d_e, 0.0)) * (d_e > 0))
            chains[accept, i] *= -1.0

    merged: dict[tuple[int, ...], int] = {}
    for row in chains.astype(np.int64):
        key = tuple(int(v) for v in row)
        merged[key] = merged.get(key, 0) + 1
    records = tuple(
        SampleRecord(config=cfg_, count=cnt, energy=energy(model, cfg_))
        for cfg_, cnt in sorted(merged.items())
    )
    return SampleSet(shots=shots, records=records,
                     meta={"seed": cfg.seed, "backend": "classical", "plan": plan.digest(),
                           "n": n, "sweeps": sweeps})


def ground_state_overlap(model: IsingModel, plan: SchedulePlan, t: float, psi: StateVector) -> float:
    """Squared overlap of psi with the instantaneous ground space of H(s(t), g(t)).

    Degenerate ground spaces are handled by projecting onto the full
    eigenspace (eigenvalues within a small relative tolerance of the
    minimum).
    """
    if model.n != psi.n:
        raise ValueError("model/state size mismatch")
    s = plan.s(t)
    g = plan.g(t)
    h = dense_hamiltonian(model, s, g, plan.functions)
    evals, evecs = np.linalg.eigh(h)
    spread = max(1.0, float(evals[-1] - evals[0]))
    mask = (evals - evals[0]) <= 1e-9 * spread
    proj = evecs[:, mask]
    comps = proj.conj().T @ psi.amplitudes
    return float(np.sum(np.abs(comps) ** 2))
