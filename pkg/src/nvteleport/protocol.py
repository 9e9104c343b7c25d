"""Teleportation protocol: source encoding on Alice's nitrogen, deterministic
Bell-state measurement, Bob's decoupling and the outcome-dependent
feed-forward.

Outcome strings ``ij`` give the nitrogen bit ``i`` then the electron bit ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .link import HeraldEvent, make_entangled_state, sample_herald
from .nv import (
    E_A,
    E_B,
    N_A,
    SLOTS,
    ModelParams,
    NuclearPopulations,
    averaged_populations,
    declared_probability,
    electron_ssro,
    free_evolution,
    ideal_params,
    noisy_cnot,
    nuclear_ssro,
    protected_nuclear_gate,
)
from .quantum import (
    DensityState,
    PureState,
    UnitaryOp,
    apply_unitary,
    bell_states,
    dephase,
    depolarize,
    driven_rotation,
    gate,
    ket,
    maximally_mixed,
    partial_trace,
    tensor_product,
)

SIX_LABELS = ("+z", "-z", "+x", "-x", "+y", "-y")
OUTCOME_STRINGS = ("00", "01", "10", "11")
NUCLEAR_BRANCHES = (-1, 0, 1)

_S = 1 / np.sqrt(2)
_CANONICAL = {
    "+z": (1.0, 0.0),
    "-z": (0.0, 1.0),
    "+x": (_S, _S),
    "-x": (_S, -_S),
    "+y": (_S, 1j * _S),
    "-y": (_S, -1j * _S),
}

# Pulse on |1> quoted in the feed-forward table for each input. For the y
# inputs it yields the complex conjugate of the labelled state; the table's
# readout column is only consistent with the labelled states themselves.
TABLE_PREPARATION = {"+z": "Y", "-z": "1", "+x": "ybar", "-x": "y", "+y": "xbar", "-y": "x"}

# input -> (operations for outcomes 00, 01, 10, 11; ideal readout bit)
FEED_FORWARD_TABLE = {
    "+z": (("1", "Y", "1", "Y"), 0),
    "-z": (("Y", "1", "Y", "1"), 0),
    "+x": (("ybar", "y", "y", "ybar"), 0),
    "-x": (("y", "ybar", "ybar", "y"), 0),
    "+y": (("xbar", "xbar", "x", "x"), 1),
    "-y": (("x", "x", "xbar", "xbar"), 1),
}

#: Operations that undo each branch of the ideal pre-readout state.
CORRECTION = {"00": "1", "01": "Ybar", "10": "Z", "11": "X"}

#: Feed-forward pulses whose result gets inverted when emulating a fixed pulse.
NEGATIVE_SENSE = frozenset({"ybar", "xbar", "Y"})


@dataclass(frozen=True)
class SourceState:
    alpha: complex
    beta: complex
    label: str | None = None

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {abs(a) ** 2 + abs(b) ** 2!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if self.label is not None:
            if self.label not in _CANONICAL:
                raise ValueError(f"unknown source label {self.label!r}")
            ref = np.array(_CANONICAL[self.label])
            if abs(abs(np.vdot(ref, [a, b])) - 1) > 1e-12:
                raise ValueError(f"amplitudes do not match label {self.label!r}")

    @classmethod
    def canonical(cls, label: str) -> "SourceState":
        if label not in _CANONICAL:
            raise ValueError(f"unknown source label {label!r}")
        a, b = _CANONICAL[label]
        return cls(a, b, label)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])

    def pure(self, slot: str = E_B) -> PureState:
        return PureState(self.vector, (slot,))

    def rotation(self) -> UnitaryOp:
        """SU(2) rotation taking |1> to alpha|0> + beta|1>."""
        a, b = self.alpha, self.beta
        return UnitaryOp(np.array([[np.conj(b), a], [-np.conj(a), b]]))


@dataclass(frozen=True, order=True)
class BsmOutcome:
    n_bit: int
    e_bit: int

    def __str__(self):
        return f"{self.n_bit}{self.e_bit}"

    @classmethod
    def parse(cls, s: str) -> "BsmOutcome":
        if len(s) != 2 or any(c not in "01" for c in s):
            raise ValueError(f"bad BSM outcome {s!r}")
        return cls(int(s[0]), int(s[1]))

    @property
    def column(self) -> int:
        return 2 * self.n_bit + self.e_bit


OUTCOMES = tuple(BsmOutcome.parse(s) for s in OUTCOME_STRINGS)


@dataclass(frozen=True)
class FeedForwardOp:
    outcome: BsmOutcome
    input_label: str
    operation: str
    ideal_result: int

    @property
    def unitary(self) -> UnitaryOp:
        return gate(self.operation).on(E_B)


def feed_forward(outcome: BsmOutcome, input_label: str) -> FeedForwardOp:
    try:
        ops, ideal = FEED_FORWARD_TABLE[input_label]
    except KeyError:
        raise ValueError(f"unknown input label {input_label!r}") from None
    return FeedForwardOp(outcome, input_label, ops[outcome.column], ideal)


@dataclass(frozen=True)
class TeleportRecord:
    input_label: str
    bsm_outcome: BsmOutcome
    bob_declared_bit: int
    herald: HeraldEvent
    nuclear_branch: int
    seed: int | None = None
    stream: int = 0
    shot: int = 0

    @property
    def success_bit(self) -> bool:
        return self.bob_declared_bit == feed_forward(self.bsm_outcome, self.input_label).ideal_result

    FIELDS = (
        "input_label", "bsm_outcome", "n_bit", "e_bit", "bob_declared_bit", "success_bit",
        "nuclear_branch", "attempts_used", "reinit_blocks", "elapsed_time", "seed", "stream", "shot",
    )

    def to_row(self) -> dict:
        return {
            "input_label": self.input_label,
            "bsm_outcome": str(self.bsm_outcome),
            "n_bit": self.bsm_outcome.n_bit,
            "e_bit": self.bsm_outcome.e_bit,
            "bob_declared_bit": self.bob_declared_bit,
            "success_bit": int(self.success_bit),
            "nuclear_branch": self.nuclear_branch,
            "attempts_used": self.herald.attempts_used,
            "reinit_blocks": self.herald.reinit_blocks,
            "elapsed_time": self.herald.elapsed_time,
            "seed": self.seed,
            "stream": self.stream,
            "shot": self.shot,
        }


# --- protocol steps -----------------------------------------------------------

def initial_state(params: ModelParams, nuclear_branch: int = -1) -> DensityState:
    """Register right after a herald: nitrogen eigenstate times the link state."""
    if nuclear_branch not in (-1, 0):
        raise ValueError("only the m_I = -1 and m_I = 0 branches live in the qubit space")
    nitrogen = ket("1" if nuclear_branch == -1 else "0", (N_A,)).to_density()
    return tensor_product(nitrogen, make_entangled_state(params.visibility).rho23)


def prepare_source(rho: DensityState, source: SourceState, params: ModelParams) -> DensityState:
    return protected_nuclear_gate(
        rho, source.rotation(), params, params.prep_echo_time, params.prep_gate_time
    )


def bell_state_map(rho: DensityState, params: ModelParams) -> DensityState:
    """CNOT on Alice's electron, then an echo-protected pi/2 on the nitrogen."""
    rho = free_evolution(rho, params.bsm_delay, params)
    rho = noisy_cnot(rho, params)
    half_pi = driven_rotation(np.pi / 2, params.rf_phase)
    return protected_nuclear_gate(rho, half_pi, params, params.bsm_echo_time, params.bsm_gate_time)


def decoupling_unitary() -> UnitaryOp:
    """Net X-Y-X of Bob's XY4 sequence left after the entangling pulse."""
    return gate("X") @ gate("Y") @ gate("X")


def apply_decoupling(rho: DensityState, params: ModelParams) -> DensityState:
    """Bob's pulses plus the memory channel during the BSM and feed-forward.

    ``keep = 2 f_dd - 1`` makes the preserved-state fidelity equal f_dd
    (for every state when depolarizing, for equatorial states when dephasing).
    """
    rho = apply_unitary(rho, decoupling_unitary().on(E_B))
    keep = 2 * params.f_dd - 1
    if params.decoupling_channel == "depolarizing":
        return depolarize(rho, E_B, keep)
    return DensityState(keep * rho.matrix + (1 - keep) * dephase(rho, E_B).matrix, rho.labels)


def inert_branch_state(electron: DensityState | None = None) -> DensityState:
    """m_I = +1 register: outside the simulated space, every pulse of Alice's is
    off-resonant. The nitrogen slot holds |0>, which reads out like m_I = +1
    (no CNOT flip); Bob's qubit is fully mixed."""
    e = electron if electron is not None else maximally_mixed((E_A,))
    nitrogen = ket("0", (N_A,)).to_density()
    return tensor_product(tensor_product(nitrogen, e), maximally_mixed((E_B,)))


def inert_params(params: ModelParams) -> ModelParams:
    return params.replace(cnot_error_minus1=0.0, cnot_error_0=0.0, phase_lambda=0.0, phase_kappa=0.0)


@dataclass(frozen=True)
class BsmBranch:
    outcome: BsmOutcome
    probability: float
    state: DensityState | None  # full register conditioned on the declared outcome


def _bsm_tree(rho: DensityState, params: ModelParams):
    """Nested analytic readout: electron first, then the nitrogen chain."""
    tree = []
    for er in electron_ssro(rho, E_A, params.f_ro_e0_alice, params.f_ro_e1_alice):
        sub = nuclear_ssro(er.conditional_state, params) if er.valid else []
        tree.append((er, sub))
    return tree


def bsm(rho: DensityState, params: ModelParams, rng=None):
    """Declared two-bit outcome with Bob's conditional state.

    Without ``rng`` returns all four ``BsmBranch`` objects (probabilities sum
    to one); with a generator samples one and returns ``(outcome, bob_state)``.
    """
    if rng is not None:
        er = electron_ssro(rho, E_A, params.f_ro_e0_alice, params.f_ro_e1_alice, rng=rng)
        nr = nuclear_ssro(er.conditional_state, params, rng=rng)
        return BsmOutcome(nr.outcome, er.outcome), partial_trace(nr.conditional_state, (E_B,))
    branches = []
    for er, sub in _bsm_tree(rho, params):
        if not sub:
            branches += [BsmBranch(BsmOutcome(n, er.outcome), 0.0, None) for n in (0, 1)]
            continue
        for nr in sub:
            branches.append(BsmBranch(BsmOutcome(nr.outcome, er.outcome), er.probability * nr.probability,
                                      nr.conditional_state))
    return sorted(branches, key=lambda b: b.outcome)


def pre_readout_state(params: ModelParams, source: SourceState, nuclear_branch: int = -1) -> DensityState:
    if nuclear_branch == 1:
        return inert_branch_state()
    rho = initial_state(params, nuclear_branch)
    rho = prepare_source(rho, source, params)
    rho = bell_state_map(rho, params)
    return apply_decoupling(rho, params)


def _branch_params(params: ModelParams, nuclear_branch: int) -> ModelParams:
    return inert_params(params) if nuclear_branch == 1 else params


# --- analytic evaluation ---------------------------------------------------------

@dataclass(frozen=True)
class TeleportBranch:
    nuclear_branch: int
    outcome: BsmOutcome
    probability: float  # joint, including the nuclear-branch weight
    bob_state: DensityState | None


@dataclass(frozen=True)
class TeleportAnalysis:
    source: SourceState
    populations: NuclearPopulations
    branches: tuple[TeleportBranch, ...]
    params: ModelParams = field(repr=False)

    def total_probability(self) -> float:
        return float(sum(b.probability for b in self.branches))

    def outcome_probabilities(self) -> dict[str, float]:
        out = {s: 0.0 for s in OUTCOME_STRINGS}
        for b in self.branches:
            out[str(b.outcome)] += b.probability
        return out

    def bob_state(self, outcome: BsmOutcome | None = None, corrected: bool = False) -> DensityState:
        """Bob's state averaged over branches (optionally one outcome), before any readout pulse."""
        acc = np.zeros((2, 2), dtype=complex)
        for b in self._select(outcome):
            m = b.bob_state.matrix
            if corrected:
                u = gate(CORRECTION[str(b.outcome)]).matrix
                m = u @ m @ u.conj().T
            acc += b.probability * m
        return DensityState(acc / np.trace(acc).real, (E_B,))

    def _select(self, outcome):
        return [b for b in self.branches
                if b.bob_state is not None and (outcome is None or b.outcome == outcome)]

    def scores(self, outcome: BsmOutcome | None = None) -> tuple[float, float, float]:
        """(probability, true ideal-state population, declared-ideal probability) after feed-forward."""
        label = self.source.label
        if label is None:
            raise ValueError("feed-forward scoring needs a labelled source")
        p = true = declared = 0.0
        for b in self._select(outcome):
            ff = feed_forward(b.outcome, label)
            u = gate(ff.operation).matrix
            pop0 = float((u @ b.bob_state.matrix @ u.conj().T)[0, 0].real)
            pop_ideal = pop0 if ff.ideal_result == 0 else 1 - pop0
            d0 = declared_probability(pop0, self.params.f_ro_e0_bob, self.params.f_ro_e1_bob)
            p += b.probability
            true += b.probability * pop_ideal
            declared += b.probability * (d0 if ff.ideal_result == 0 else 1 - d0)
        if p == 0:
            return 0.0, float("nan"), float("nan")
        return p, true / p, declared / p


@lru_cache(maxsize=512)
def _branch_tree(params: ModelParams, source: SourceState, nuclear_branch: int):
    rho = pre_readout_state(params, source, nuclear_branch)
    tree = []
    for er, sub in _bsm_tree(rho, _branch_params(params, nuclear_branch)):
        leaves = tuple(
            (nr.outcome, nr.probability,
             partial_trace(nr.conditional_state, (E_B,)) if nr.valid else None)
            for nr in sub
        )
        tree.append((er.outcome, er.probability, leaves))
    return tuple(tree)


def teleport_analytic(
    params: ModelParams, source: SourceState, populations: NuclearPopulations | None = None
) -> TeleportAnalysis:
    pops = populations if populations is not None else averaged_populations(params)
    branches = []
    for nb, w in pops.by_branch().items():
        if w == 0:
            continue
        for e_bit, p_e, leaves in _branch_tree(params, source, nb):
            for n_bit, p_n, bob in leaves or ((0, 0.0, None), (1, 0.0, None)):
                branches.append(TeleportBranch(nb, BsmOutcome(n_bit, e_bit), w * p_e * p_n, bob))
    return TeleportAnalysis(source, pops, tuple(branches), params)


# --- Monte Carlo ------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _declared_zero(params: ModelParams, bob: DensityState, operation: str) -> float:
    u = gate(operation).matrix
    pop0 = float((u @ bob.matrix @ u.conj().T)[0, 0].real)
    return declared_probability(pop0, params.f_ro_e0_bob, params.f_ro_e1_bob)


def _pick(rng, p_first: float) -> int:
    return 0 if rng.random() < p_first else 1


def teleport_once(
    params: ModelParams,
    source: SourceState,
    rng: np.random.Generator,
    populations: NuclearPopulations | None = None,
    seed: int | None = None,
    stream: int = 0,
    shot: int = 0,
) -> TeleportRecord:
    """One sampled protocol run: herald, nuclear branch, BSM, feed-forward, Bob's readout."""
    if source.label is None:
        raise ValueError("teleport_once scores against the feed-forward table; use a labelled source")
    pops = populations if populations is not None else averaged_populations(params)
    weights = pops.by_branch()
    herald = sample_herald(params, rng)
    u = rng.random()
    nb = -1 if u < weights[-1] else (0 if u < weights[-1] + weights[0] else 1)
    tree = _branch_tree(params, source, nb)
    e_bit, _, leaves = tree[_pick(rng, tree[0][1])]
    n_bit, _, bob = leaves[_pick(rng, leaves[0][1])]
    outcome = BsmOutcome(n_bit, e_bit)
    ff = feed_forward(outcome, source.label)
    bob_bit = _pick(rng, _declared_zero(params, bob, ff.operation))
    return TeleportRecord(source.label, outcome, bob_bit, herald, nb, seed, stream, shot)


def iter_teleport(params, source, rng, shots, populations=None, seed=None, stream=0) -> Iterator[TeleportRecord]:
    for k in range(shots):
        yield teleport_once(params, source, rng, populations, seed, stream, k)


# --- BSM correspondence ----------------------------------------------------------

def bell_input_state(bell: str, nuclear_branch: int = -1, params: ModelParams | None = None,
                     noisy_preparation: bool = False) -> DensityState:
    """Bell state on (N_A, e_A) with Bob's slot idle in |0>.

    Made from |1>_N |0>_e by a nitrogen pi/2, the CNOT (noisy if requested)
    and single-qubit pulses that select the Bell state.
    """
    p = params if params is not None else ModelParams()
    if nuclear_branch == 1:
        return inert_branch_state(ket("0", (E_A,)).to_density())
    n0 = "1" if nuclear_branch == -1 else "0"
    rho = ket(n0 + "00", SLOTS).to_density()
    rho = apply_unitary(rho, gate("ybar").on(N_A))
    cnot_params = p if noisy_preparation else ideal_params()
    rho = noisy_cnot(rho, cnot_params.replace(phase_lambda=0.0, phase_kappa=0.0))
    select = {"Phi+": [], "Phi-": [("Z", N_A)], "Psi+": [("Z", N_A), ("Y", E_A)], "Psi-": [("Y", E_A)]}
    for name, slot in select[bell]:
        rho = apply_unitary(rho, gate(name).on(slot))
    return rho


def derive_bell_correspondence(params: ModelParams | None = None) -> dict[str, str]:
    """Bell state -> deterministic outcome string of the error-free BSM circuit."""
    p = params if params is not None else ModelParams()
    ideal = ideal_params(
        rf_phase=p.rf_phase, hyperfine=p.hyperfine, bsm_delay=p.bsm_delay,
        bsm_echo_time=p.bsm_echo_time, bsm_gate_time=p.bsm_gate_time,
    )
    out = {}
    for name in bell_states():
        branches = bsm(bell_state_map(bell_input_state(name, params=ideal), ideal), ideal)
        best = max(branches, key=lambda b: b.probability)
        if abs(best.probability - 1) > 1e-9:
            raise RuntimeError(f"BSM is not deterministic for {name}: {best.probability!r}")
        out[name] = str(best.outcome)
    if len(set(out.values())) != 4:
        raise RuntimeError(f"BSM outcomes are not distinct: {out}")
    return out
