"""Heralded remote entanglement between the two electrons.

The optical two-round scheme is not simulated photon by photon. It shows up
only through the visibility V, which fixes the delivered state, and the
per-attempt success probability, which fixes the attempt statistics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nv import E_A, E_B, ModelParams
from .quantum import DensityState, bell_states, fidelity_to_pure


@dataclass(frozen=True)
class LinkState:
    rho23: DensityState
    visibility_used: float

    def fidelity(self) -> float:
        return fidelity_to_pure(self.rho23, bell_states((E_A, E_B))["Psi-"])


@dataclass(frozen=True)
class HeraldEvent:
    attempts_used: int
    reinit_blocks: int
    elapsed_time: float
    success: bool = True


def make_entangled_state(v: float) -> LinkState:
    """``V |Psi-><Psi-| + (1 - V)/2 (|01><01| + |10><10|)`` on (e_A, e_B)."""
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility {v!r} outside [0, 1]")
    psi = bell_states((E_A, E_B))["Psi-"].to_density().matrix
    classical = np.diag([0.0, 1.0, 1.0, 0.0]).astype(complex)
    return LinkState(DensityState(v * psi + (1 - v) / 2 * classical, (E_A, E_B)), float(v))


def _check_psucc(params: ModelParams):
    if not 0.0 < params.p_succ <= 1.0:
        raise ValueError(f"p_succ {params.p_succ!r} must lie in (0, 1]")


def _event(attempts: int, params: ModelParams) -> HeraldEvent:
    blocks = (attempts - 1) // params.max_attempts
    elapsed = attempts * params.attempt_duration + blocks * params.reinit_overhead
    return HeraldEvent(int(attempts), int(blocks), float(elapsed), True)


def sample_herald(params: ModelParams, rng: np.random.Generator) -> HeraldEvent:
    """Draw the attempts needed for one heralded success.

    Every full block of ``max_attempts`` failures costs one nuclear
    re-initialization of ``reinit_overhead`` seconds.
    """
    _check_psucc(params)
    return _event(int(rng.geometric(params.p_succ)), params)


def sample_heralds(params: ModelParams, rng: np.random.Generator, size: int) -> list[HeraldEvent]:
    _check_psucc(params)
    return [_event(int(a), params) for a in rng.geometric(params.p_succ, size=size)]


def expected_reinit_blocks(params: ModelParams) -> float:
    """E[floor((N - 1) / M)] for N ~ Geometric(p_succ): sum_k q^(kM) = q^M / (1 - q^M)."""
    _check_psucc(params)
    q_m = np.exp(params.max_attempts * np.log1p(-params.p_succ)) if params.p_succ < 1 else 0.0
    return float(q_m / -np.expm1(params.max_attempts * np.log1p(-params.p_succ))) if q_m else 0.0


def expected_rate(params: ModelParams, overhead_per_block: float | None = None) -> float:
    """Mean heralded successes per second."""
    _check_psucc(params)
    overhead = params.reinit_overhead if overhead_per_block is None else overhead_per_block
    if np.isinf(overhead):
        return 0.0
    mean_time = params.attempt_duration / params.p_succ + overhead * expected_reinit_blocks(params)
    return 1.0 / mean_time
