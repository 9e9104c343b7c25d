"""NV-center physics: hyperfine free evolution, nuclear gates, the noisy
electron CNOT, single-shot readout and nuclear-spin depolarization.

Register slots are ``N_A`` (Alice's nitrogen), ``e_A`` (Alice's electron)
and ``e_B`` (Bob's electron). For both spins ``|0>`` is the m = 0 level and
``|1>`` the m = -1 level.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .quantum import (
    I2,
    SIGMA_Z,
    DensityState,
    MeasurementResult,
    UnitaryOp,
    _branch,
    apply_diagonal_phases,
    apply_kraus,
    apply_unitary,
    gate,
    projector,
    replace_slot,
)

N_A, E_A, E_B = "N_A", "e_A", "e_B"
SLOTS = (N_A, E_A, E_B)

HYPERFINE_HZ = 2.19e6
#: One free-precession period 2*pi/A of the |00> phase.
HYPERFINE_PERIOD = 1.0 / HYPERFINE_HZ


@dataclass(frozen=True)
class NuclearPopulations:
    p_plus1: float
    p_0: float
    p_minus1: float

    def __post_init__(self):
        vals = self.as_array()
        if np.any(vals < -1e-15) or np.any(vals > 1 + 1e-15):
            raise ValueError(f"populations out of [0, 1]: {vals.tolist()}")
        if abs(vals.sum() - 1.0) > 1e-12:
            raise ValueError(f"populations sum to {vals.sum()!r}, not 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_plus1, self.p_0, self.p_minus1], dtype=float)

    @classmethod
    def from_array(cls, a) -> "NuclearPopulations":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), float(a[1]), float(a[2]))

    def by_branch(self) -> dict[int, float]:
        return {-1: self.p_minus1, 0: self.p_0, 1: self.p_plus1}


PERFECT_INIT = NuclearPopulations(0.0, 0.0, 1.0)


def _unit(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} = {value!r} outside [0, 1]")


@dataclass(frozen=True)
class ModelParams:
    """Every knob of the error model. Defaults reproduce the experiment.

    Times are in seconds and angular frequencies in rad/s. The gate timings
    default to whole hyperfine periods so the |00> phase wraps.
    """

    hyperfine: float = 2 * np.pi * HYPERFINE_HZ
    t2_star: float = 2e-6  # documentation only; enters through the CNOT errors
    cnot_error_minus1: float = 0.01
    cnot_error_0: float = 0.01
    phase_lambda: float = 0.0
    phase_kappa: float = 0.0
    f_ro_e0_alice: float = 0.928
    f_ro_e1_alice: float = 0.998
    f_ro_e0_bob: float = 0.963
    f_ro_e1_bob: float = 0.963
    f_ro_uncertainty: float = 0.0
    f_dd: float = 0.96
    decoupling_channel: str = "depolarizing"
    visibility: float = 0.74
    p_flip_cycle: float = 0.0017
    init_populations: NuclearPopulations = field(
        default_factory=lambda: NuclearPopulations(0.01, 0.02, 0.97)
    )
    max_attempts: int = 250
    p_succ: float = 1e-7
    attempt_duration: float = 10e-6
    reinit_overhead: float = 3.75e-3
    rf_phase: float = 0.0
    prep_echo_time: float = 40 * HYPERFINE_PERIOD
    prep_gate_time: float = 80 * HYPERFINE_PERIOD
    bsm_delay: float = 10 * HYPERFINE_PERIOD
    bsm_echo_time: float = 40 * HYPERFINE_PERIOD
    bsm_gate_time: float = 80 * HYPERFINE_PERIOD

    def __post_init__(self):
        for name in (
            "cnot_error_minus1", "cnot_error_0",
            "f_ro_e0_alice", "f_ro_e1_alice", "f_ro_e0_bob", "f_ro_e1_bob",
            "f_dd", "visibility", "p_flip_cycle", "p_succ",
        ):
            _unit(name, getattr(self, name))
        if self.hyperfine <= 0:
            raise ValueError("hyperfine must be positive")
        if self.f_dd < 0.5:
            raise ValueError(f"f_dd = {self.f_dd!r} below 0.5 is not a preservation fidelity")
        if int(self.max_attempts) != self.max_attempts or self.max_attempts < 1:
            raise ValueError("max_attempts must be an integer >= 1")
        if self.decoupling_channel not in ("depolarizing", "dephasing"):
            raise ValueError(f"unknown decoupling_channel {self.decoupling_channel!r}")
        for name in ("attempt_duration", "reinit_overhead", "f_ro_uncertainty", "t2_star"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if isinstance(self.init_populations, dict):
            object.__setattr__(self, "init_populations", NuclearPopulations(**self.init_populations))

    @property
    def p_flip_attempt(self) -> float:
        """Flip probability per entanglement attempt (one pumping cycle per two attempts)."""
        return self.p_flip_cycle / 2

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["init_populations"] = asdict(self.init_populations)
        return d

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def ideal_params(**overrides) -> ModelParams:
    """Error-free components, V = 1, perfect initialization."""
    base = dict(
        cnot_error_minus1=0.0,
        cnot_error_0=0.0,
        f_ro_e0_alice=1.0,
        f_ro_e1_alice=1.0,
        f_ro_e0_bob=1.0,
        f_ro_e1_bob=1.0,
        f_dd=1.0,
        visibility=1.0,
        p_flip_cycle=0.0,
        init_populations=PERFECT_INIT,
    )
    base.update(overrides)
    return ModelParams(**base)


# --- coherent evolution -----------------------------------------------------

def _alice_phase_vector(rho: DensityState, phase_00: float = 0.0, phase_01: float = 0.0) -> np.ndarray:
    """Per-basis-index phases for given phases on Alice's |N e> = |00>, |01>."""
    n_idx, e_idx = rho.index(N_A), rho.index(E_A)
    nq = rho.num_qubits
    out = np.zeros(rho.dim)
    for k in range(rho.dim):
        n = (k >> (nq - 1 - n_idx)) & 1
        e = (k >> (nq - 1 - e_idx)) & 1
        if n == 0:
            out[k] = phase_00 if e == 0 else phase_01
    return out


def free_evolution(rho: DensityState, t: float, params: ModelParams) -> DensityState:
    """Rotating-frame evolution under Alice's hyperfine term: |00> picks up exp(iAt)."""
    if t == 0:
        return rho
    return apply_diagonal_phases(rho, _alice_phase_vector(rho, phase_00=params.hyperfine * t))


def conditional_nuclear_rotation(rho: DensityState, rotation: UnitaryOp) -> DensityState:
    """RF rotation of the nitrogen, resonant only in the m_s = -1 electron manifold."""
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    u = np.kron(rotation.matrix, p1) + np.kron(I2, p0)
    return apply_unitary(rho, UnitaryOp(u, (N_A, E_A)))


def electron_pi(rho: DensityState, slot: str = E_A) -> DensityState:
    """Unconditional electron pi pulse about +Y (composite pulse, taken as ideal)."""
    return apply_unitary(rho, gate("Y").on(slot))


def protected_nuclear_gate(
    rho: DensityState, rotation: UnitaryOp, params: ModelParams, t0: float, t: float
) -> DensityState:
    """Nitrogen rotation made unconditional by an electron echo.

    The conditional rotation fires at time 0 and again at ``t``; the electron
    pi pulse sits at ``t0``. Free evolution runs in between.
    """
    rho = conditional_nuclear_rotation(rho, rotation)
    rho = free_evolution(rho, t0, params)
    rho = electron_pi(rho)
    rho = free_evolution(rho, t - t0, params)
    return conditional_nuclear_rotation(rho, rotation)


def noisy_cnot(rho: DensityState, params: ModelParams) -> DensityState:
    """Nitrogen-selective electron pi pulse about +Y.

    m_I = -1 (|1>) flips the electron; m_I = 0 gets a 2*pi rotation, taken as
    the identity. Each manifold fails with its error probability, and a failed
    manifold also loses electron coherence. The residual phases are keyed by
    the BSM outcome they end up in: ``phase_lambda`` sits on the |N e> = |01>
    amplitude at pulse time (read out as outcome 00), ``phase_kappa`` on |00>
    (read out as outcome 01), where it adds to the free-evolution phase.
    """
    e1, e0 = params.cnot_error_minus1, params.cnot_error_0
    p0 = np.diag([1, 0]).astype(complex)
    p1 = np.diag([0, 1]).astype(complex)
    flip = gate("Y").matrix
    kraus = [np.sqrt(1 - e1) * np.kron(p1, flip) + np.sqrt(1 - e0) * np.kron(p0, I2)]
    if e1 > 0:
        kraus += [np.sqrt(e1 / 2) * np.kron(p1, I2), np.sqrt(e1 / 2) * np.kron(p1, SIGMA_Z)]
    if e0 > 0:
        kraus += [np.sqrt(e0 / 2) * np.kron(p0, flip), np.sqrt(e0 / 2) * np.kron(p0, SIGMA_Z @ flip)]
    rho = apply_kraus(rho, kraus, (N_A, E_A))
    if params.phase_lambda or params.phase_kappa:
        rho = apply_diagonal_phases(
            rho, _alice_phase_vector(rho, phase_00=params.phase_kappa, phase_01=params.phase_lambda)
        )
    return rho


# --- readout ------------------------------------------------------------------

def declared_probability(p_true0: float, f0: float, f1: float) -> float:
    """P(declare 0) for a spin with true |0> population ``p_true0``."""
    return f0 * p_true0 + (1 - f1) * (1 - p_true0)


def electron_ssro(rho: DensityState, slot: str, f0: float, f1: float, rng=None):
    """Single-shot readout with confusion probabilities (f0, f1).

    Outcome 0 (photons seen) is declared with probability f0 for a true |0>
    and 1 - f1 for a true |1>. Without ``rng`` both declared branches are
    returned; with a generator one declared branch is sampled.
    """
    _unit("f0", f0)
    _unit("f1", f1)
    p0 = projector(rho, slot, 0)
    p1 = projector(rho, slot, 1)
    s0 = p0 @ rho.matrix @ p0
    s1 = p1 @ rho.matrix @ p1
    results = []
    for declared, (w0, w1) in ((0, (f0, 1 - f1)), (1, (1 - f0, f1))):
        sub = w0 * s0 + w1 * s1
        results.append(_branch(declared, sub, float(np.trace(sub).real), rho.labels))
    if rng is None:
        return results
    return results[0] if rng.random() < results[0].probability else results[1]


def reset_electron(rho: DensityState, slot: str = E_A) -> DensityState:
    """Optical spin pumping to m_s = 0, taken as perfect."""
    return replace_slot(rho, slot, DensityState(np.diag([1.0, 0.0]), (slot,)))


def nuclear_readout_round(rho: DensityState, params: ModelParams) -> list[MeasurementResult]:
    """Reset e_A, map the nitrogen onto it with the CNOT and read it out."""
    rho = noisy_cnot(reset_electron(rho), params)
    return electron_ssro(rho, E_A, params.f_ro_e0_alice, params.f_ro_e1_alice)


def nuclear_ssro(rho: DensityState, params: ModelParams, rng=None, rounds: int = 2):
    """Nitrogen readout through repeated electron mapping.

    A click (declared electron 0) in any round declares m_I = 0, i.e. outcome
    0; no click in every round declares outcome 1.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    clicked = np.zeros_like(rho.matrix)
    silent = [(1.0, rho)]
    for _ in range(rounds):
        nxt = []
        for w, state in silent:
            click, dark = nuclear_readout_round(state, params)
            if click.valid:
                clicked += w * click.probability * click.conditional_state.matrix
            if dark.valid:
                nxt.append((w * dark.probability, dark.conditional_state))
        silent = nxt
    dark = sum((w * s.matrix for w, s in silent), np.zeros_like(rho.matrix))
    results = [
        _branch(0, clicked, float(np.trace(clicked).real), rho.labels),
        _branch(1, dark, float(np.trace(dark).real), rho.labels),
    ]
    if rng is None:
        return results
    return results[0] if rng.random() < results[0].probability else results[1]


# --- nuclear depolarization by electron spin pumping --------------------------

def depolarization_step(p: NuclearPopulations, p_flip: float) -> NuclearPopulations:
    """One electron spin flip of the Delta m_I = +-1 rate equations."""
    pp, p0, pm = p.p_plus1, p.p_0, p.p_minus1
    return NuclearPopulations(
        pp + p_flip * (p0 - pp),
        p0 + p_flip * (-2 * p0 + pm + pp),
        pm + p_flip * (p0 - pm),
    )


def population_trajectory(p: NuclearPopulations, p_flip: float, n_steps: int) -> np.ndarray:
    """Populations after 0..n_steps flips as rows (p_plus1, p_0, p_minus1)."""
    out = np.empty((n_steps + 1, 3))
    out[0] = p.as_array()
    for n in range(1, n_steps + 1):
        pp, p0, pm = out[n - 1]
        out[n] = (
            pp + p_flip * (p0 - pp),
            p0 + p_flip * (-2 * p0 + pm + pp),
            pm + p_flip * (p0 - pm),
        )
    return out


def closed_form_p_minus1(n, p_flip: float):
    """Survival of m_I = -1 after n flips, starting from a pure m_I = -1 state."""
    n = np.asarray(n, dtype=float)
    out = (2 + (1 - 3 * p_flip) ** n + 3 * (1 - p_flip) ** n) / 6
    return float(out) if out.ndim == 0 else out


def averaged_populations(params: ModelParams) -> NuclearPopulations:
    """Nuclear populations averaged over a re-initialization block.

    M attempts drive M/2 electron flips; the average is uniform over
    n = 0..M/2, since success is equally likely at every attempt.
    """
    traj = population_trajectory(params.init_populations, params.p_flip_cycle, params.max_attempts // 2)
    return NuclearPopulations.from_array(traj.mean(axis=0))
