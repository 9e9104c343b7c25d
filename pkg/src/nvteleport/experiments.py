"""Experiment harness: ensemble teleportation runs, the Bell-state measurement
benchmark, phase calibration, readout correction, tomography, the
fixed-pulse reanalysis and the nuclear spin-flip curve."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .link import expected_rate, sample_heralds
from .nv import (
    E_A,
    E_B,
    N_A,
    HYPERFINE_PERIOD,
    ModelParams,
    NuclearPopulations,
    PERFECT_INIT,
    averaged_populations,
    closed_form_p_minus1,
)
from .protocol import (
    FEED_FORWARD_TABLE,
    NEGATIVE_SENSE,
    OUTCOME_STRINGS,
    OUTCOMES,
    SIX_LABELS,
    BsmOutcome,
    HeraldEvent,
    SourceState,
    TeleportAnalysis,
    TeleportRecord,
    _branch_tree,
    _declared_zero,
    _branch_params,
    bell_input_state,
    bell_state_map,
    bsm,
    derive_bell_correspondence,
    feed_forward,
    prepare_source,
    teleport_analytic,
)
from .quantum import SIGMA_X, SIGMA_Y, SIGMA_Z, DensityState, ket, tensor_product

MODES = ("analytic", "monte_carlo")

#: Shots per input state behind the measured six-state fidelities.
MEASURED_SHOTS = dict(zip(SIX_LABELS, (54, 89, 73, 49, 52, 47)))


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    std_error: float
    n_shots: int
    method: str  # analytic, monte_carlo or readout_corrected

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "n_shots": self.n_shots, "method": self.method}


def _mean_estimate(estimates, method=None) -> FidelityEstimate:
    est = list(estimates)
    value = float(np.mean([e.value for e in est]))
    err = float(np.sqrt(sum(e.std_error ** 2 for e in est)) / len(est))
    return FidelityEstimate(value, err, sum(e.n_shots for e in est), method or est[0].method)


# --- readout correction ---------------------------------------------------------

@dataclass(frozen=True)
class CorrectedPopulations:
    c0: float
    c1: float
    std_error: float
    clamped: bool


def readout_correction(n0: int, n1: int, f0: float, f1: float, sigma_f: float = 0.0) -> CorrectedPopulations:
    """Invert the readout confusion model on observed counts.

    The error combines the binomial spread of the observed fraction with an
    uncertainty ``sigma_f`` on each readout fidelity.
    """
    n = n0 + n1
    if n < 1 or n0 < 0 or n1 < 0:
        raise ValueError(f"need non-negative counts with n0 + n1 >= 1, got ({n0}, {n1})")
    d = f0 + f1 - 1
    if d <= 0:
        raise ValueError(f"confusion model with f0 + f1 = {f0 + f1!r} is not invertible")
    r = n0 / n
    c0 = (r - (1 - f1)) / d
    var = r * (1 - r) / n / d ** 2 + sigma_f ** 2 * (c0 ** 2 + (1 - c0) ** 2) / d ** 2
    clamped = not 0.0 <= c0 <= 1.0
    c0 = min(max(c0, 0.0), 1.0)
    return CorrectedPopulations(float(c0), float(1 - c0), float(np.sqrt(var)), clamped)


def _corrected_estimate(n_ideal: int, n: int, ideal_bit: int, params: ModelParams) -> FidelityEstimate:
    n0 = n_ideal if ideal_bit == 0 else n - n_ideal
    c = readout_correction(n0, n - n0, params.f_ro_e0_bob, params.f_ro_e1_bob, params.f_ro_uncertainty)
    return FidelityEstimate(c.c0 if ideal_bit == 0 else c.c1, c.std_error, n, "readout_corrected")


# --- teleportation -------------------------------------------------------------

@dataclass
class RecordBatch:
    """Column-wise Monte Carlo records of one input label."""

    label: str
    n_bit: np.ndarray
    e_bit: np.ndarray
    declared: np.ndarray
    nuclear_branch: np.ndarray
    attempts: np.ndarray
    params: ModelParams = field(repr=False)
    seed: int | None = None
    stream: int = 0

    def __len__(self):
        return len(self.declared)

    def ideal_bits(self) -> np.ndarray:
        return np.full(len(self), FEED_FORWARD_TABLE[self.label][1])

    def outcome_index(self) -> np.ndarray:
        return 2 * self.n_bit + self.e_bit

    def records(self):
        p = self.params
        for k in range(len(self)):
            a = int(self.attempts[k])
            blocks = (a - 1) // p.max_attempts
            herald = HeraldEvent(a, blocks, a * p.attempt_duration + blocks * p.reinit_overhead)
            yield TeleportRecord(
                self.label, BsmOutcome(int(self.n_bit[k]), int(self.e_bit[k])), int(self.declared[k]),
                herald, int(self.nuclear_branch[k]), self.seed, self.stream, k,
            )


def _leaf_tables(params: ModelParams, source: SourceState):
    """Probabilities of the readout tree as arrays indexed by nuclear branch (-1, 0, +1)."""
    p_e0 = np.zeros(3)
    p_n0 = np.zeros((3, 2))
    p_d0 = np.zeros((3, 2, 2))
    for i, nb in enumerate((-1, 0, 1)):
        for e_bit, p_e, leaves in _branch_tree(params, source, nb):
            if e_bit == 0:
                p_e0[i] = p_e
            for n_bit, p_n, bob in leaves:
                if n_bit == 0:
                    p_n0[i, e_bit] = p_n
                if bob is not None:
                    op = feed_forward(BsmOutcome(n_bit, e_bit), source.label).operation
                    p_d0[i, e_bit, n_bit] = _declared_zero(params, bob, op)
    return p_e0, p_n0, p_d0


def sample_batch(params: ModelParams, source: SourceState, shots: int, rng: np.random.Generator,
                 populations: NuclearPopulations | None = None, seed=None, stream=0) -> RecordBatch:
    """Vectorized equivalent of repeated ``teleport_once`` calls."""
    pops = populations if populations is not None else averaged_populations(params)
    w = pops.by_branch()
    p_e0, p_n0, p_d0 = _leaf_tables(params, source)
    attempts = rng.geometric(params.p_succ, size=shots)
    u = rng.random((4, shots))
    branch_idx = np.where(u[0] < w[-1], 0, np.where(u[0] < w[-1] + w[0], 1, 2))
    e_bit = (u[1] >= p_e0[branch_idx]).astype(int)
    n_bit = (u[2] >= p_n0[branch_idx, e_bit]).astype(int)
    declared = (u[3] >= p_d0[branch_idx, e_bit, n_bit]).astype(int)
    return RecordBatch(source.label, n_bit, e_bit, declared, branch_idx - 1, attempts, params, seed, stream)


@dataclass
class TeleportResult:
    mode: str
    per_label: dict[str, FidelityEstimate]
    mean: FidelityEstimate
    per_outcome: dict[str, FidelityEstimate]
    outcome_distribution: dict[str, float]
    no_feedforward: FidelityEstimate
    # raw declared-success probability per label, before readout correction
    declared_success: dict[str, float]
    populations: NuclearPopulations
    batches: list[RecordBatch] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "mean_fidelity": self.mean.to_dict(),
            "per_label": {k: v.to_dict() for k, v in self.per_label.items()},
            "per_outcome": {k: v.to_dict() for k, v in self.per_outcome.items()},
            "outcome_distribution": self.outcome_distribution,
            "declared_success": self.declared_success,
            "no_feedforward_fidelity": self.no_feedforward.to_dict(),
            "nuclear_populations": {
                "p_plus1": self.populations.p_plus1,
                "p_0": self.populations.p_0,
                "p_minus1": self.populations.p_minus1,
            },
        }


def label_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(index,))


def _batch_job(args):
    params, label, shots, pops, seed, index = args
    rng = np.random.default_rng(label_seed(seed, index))
    return sample_batch(params, SourceState.canonical(label), shots, rng, pops, seed, index)


def run_teleportation(
    params: ModelParams,
    labels=SIX_LABELS,
    shots: int | dict = 1000,
    mode: str = "analytic",
    seed: int = 0,
    populations: NuclearPopulations | None = None,
    workers: int = 1,
) -> TeleportResult:
    """Six-state teleportation fidelity with per-outcome breakdown.

    ``shots`` is per input label; a dict gives per-label counts (see
    ``MEASURED_SHOTS``). Monte Carlo labels use independent seed streams, so
    results do not depend on ``workers``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    labels = tuple(labels)
    pops = populations if populations is not None else averaged_populations(params)
    if mode == "analytic":
        return _teleport_analytic_result(params, labels, pops)
    counts = shots if isinstance(shots, dict) else {l: shots for l in labels}
    if any(counts[l] < 1 for l in labels):
        raise ValueError("Monte Carlo mode needs shots >= 1 per label")
    jobs = [(params, l, int(counts[l]), pops, seed, SIX_LABELS.index(l)) for l in labels]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            batches = list(ex.map(_batch_job, jobs))
    else:
        batches = [_batch_job(j) for j in jobs]
    return _teleport_mc_result(params, batches, pops)


def _teleport_analytic_result(params, labels, pops) -> TeleportResult:
    analyses = [teleport_analytic(params, SourceState.canonical(l), pops) for l in labels]
    per_label, declared = {}, {}
    for l, a in zip(labels, analyses):
        _, true, dec = a.scores()
        per_label[l] = FidelityEstimate(true, 0.0, 0, "analytic")
        declared[l] = dec
    per_outcome, dist = {}, {}
    for o in OUTCOMES:
        s = [a.scores(o) for a in analyses]
        dist[str(o)] = float(np.mean([x[0] for x in s]))
        per_outcome[str(o)] = FidelityEstimate(float(np.mean([x[1] for x in s])), 0.0, 0, "analytic")
    return TeleportResult(
        "analytic", per_label, _mean_estimate(per_label.values()), per_outcome, dist,
        no_feedforward_analytic(analyses), declared, pops,
    )


def _teleport_mc_result(params, batches, pops) -> TeleportResult:
    per_label, declared, per_outcome_lists = {}, {}, {s: [] for s in OUTCOME_STRINGS}
    counts = np.zeros(4)
    for b in batches:
        ideal = FEED_FORWARD_TABLE[b.label][1]
        hits = b.declared == ideal
        per_label[b.label] = _corrected_estimate(int(hits.sum()), len(b), ideal, params)
        declared[b.label] = float(hits.mean())
        idx = b.outcome_index()
        counts += np.bincount(idx, minlength=4)
        for k, s in enumerate(OUTCOME_STRINGS):
            sel = idx == k
            if sel.any():
                per_outcome_lists[s].append(_corrected_estimate(int(hits[sel].sum()), int(sel.sum()), ideal, params))
    per_outcome = {s: _mean_estimate(v) for s, v in per_outcome_lists.items() if v}
    dist = {s: float(c / counts.sum()) for s, c in zip(OUTCOME_STRINGS, counts)}
    return TeleportResult(
        "monte_carlo", per_label, _mean_estimate(per_label.values()), per_outcome, dist,
        reanalyze_no_feedforward(batches), declared, pops, batches,
    )


# --- fixed-pulse reanalysis -------------------------------------------------------

def _fixed_pulse(label: str, outcome: str, fidelity: float) -> float:
    op = FEED_FORWARD_TABLE[label][0][OUTCOME_STRINGS.index(outcome)]
    return 1 - fidelity if op in NEGATIVE_SENSE else fidelity


def no_feedforward_analytic(analyses: list[TeleportAnalysis]) -> FidelityEstimate:
    vals = []
    for a in analyses:
        acc = 0.0
        for o in OUTCOMES:
            p, true, _ = a.scores(o)
            if p > 0:
                acc += p * _fixed_pulse(a.source.label, str(o), true)
        vals.append(acc / a.total_probability())
    return FidelityEstimate(float(np.mean(vals)), 0.0, 0, "analytic")


def reanalyze_no_feedforward(records, params: ModelParams | None = None) -> FidelityEstimate:
    """Mean fidelity as if one fixed pulse had been applied whatever the outcome.

    Results for negative-sense pulses are inverted, which turns each entry of
    the feed-forward table into the positive-sense pulse of the same axis.
    Accepts ``TeleportAnalysis`` objects, ``RecordBatch`` objects or
    ``TeleportRecord`` lists.
    """
    records = list(records)
    if records and isinstance(records[0], TeleportAnalysis):
        return no_feedforward_analytic(records)
    if records and isinstance(records[0], TeleportRecord):
        if params is None:
            raise ValueError("TeleportRecord input needs params for readout correction")
        records = _records_to_batches(records, params)
    per_label = []
    for b in records:
        ideal = FEED_FORWARD_TABLE[b.label][1]
        idx = b.outcome_index()
        value, var, n = 0.0, 0.0, len(b)
        for k, s in enumerate(OUTCOME_STRINGS):
            sel = idx == k
            m = int(sel.sum())
            if not m:
                continue
            est = _corrected_estimate(int((b.declared[sel] == ideal).sum()), m, ideal, b.params)
            value += m / n * _fixed_pulse(b.label, s, est.value)
            var += (m / n * est.std_error) ** 2
        per_label.append(FidelityEstimate(value, float(np.sqrt(var)), n, "readout_corrected"))
    return _mean_estimate(per_label)


def _records_to_batches(records: list[TeleportRecord], params: ModelParams) -> list[RecordBatch]:
    out = []
    for label in sorted({r.input_label for r in records}, key=lambda l: (l not in SIX_LABELS, l)):
        rs = [r for r in records if r.input_label == label]
        col = lambda f: np.array([f(r) for r in rs], dtype=int)
        out.append(RecordBatch(
            label, col(lambda r: r.bsm_outcome.n_bit), col(lambda r: r.bsm_outcome.e_bit),
            col(lambda r: r.bob_declared_bit), col(lambda r: r.nuclear_branch),
            col(lambda r: r.herald.attempts_used), params,
        ))
    return out


# --- BSM benchmark ----------------------------------------------------------------

@dataclass
class BenchmarkResult:
    mode: str
    per_bell: dict[str, FidelityEstimate]
    mean: FidelityEstimate
    correspondence: dict[str, str]
    outcome_probabilities: dict[str, dict[str, float]]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "mean": self.mean.to_dict(),
            "per_bell": {k: v.to_dict() for k, v in self.per_bell.items()},
            "correspondence": self.correspondence,
            "outcome_probabilities": self.outcome_probabilities,
        }


def bsm_outcome_probabilities(params: ModelParams, bell: str, noisy_preparation: bool = True,
                              populations: NuclearPopulations | None = None) -> dict[str, float]:
    """Declared-outcome distribution for a Bell state prepared on Alice's pair.

    Nuclear branches are weighted with the initialization populations, since
    the benchmark prepares its state right after initialization.
    """
    pops = populations if populations is not None else params.init_populations
    out = {s: 0.0 for s in OUTCOME_STRINGS}
    for nb, w in pops.by_branch().items():
        if w == 0:
            continue
        rho = bell_input_state(bell, nb, params, noisy_preparation)
        if nb != 1:
            rho = bell_state_map(rho, params)
        for br in bsm(rho, _branch_params(params, nb)):
            out[str(br.outcome)] += w * br.probability
    return out


def bsm_benchmark(params: ModelParams, mode: str = "analytic", noisy_preparation: bool = True,
                  shots: int = 1000, seed: int = 0, populations=None) -> BenchmarkResult:
    """Probability of the ideal outcome for each Bell state on Alice's register."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    corr = derive_bell_correspondence(params)
    per_bell, probs = {}, {}
    for i, (bell, ideal) in enumerate(corr.items()):
        probs[bell] = bsm_outcome_probabilities(params, bell, noisy_preparation, populations)
        p = probs[bell][ideal]
        if mode == "analytic":
            per_bell[bell] = FidelityEstimate(p, 0.0, 0, "analytic")
        else:
            rng = np.random.default_rng(label_seed(seed, i))
            k = int(rng.binomial(shots, min(max(p, 0.0), 1.0)))
            per_bell[bell] = FidelityEstimate(k / shots, float(np.sqrt(k / shots * (1 - k / shots) / shots)),
                                              shots, "monte_carlo")
    return BenchmarkResult(mode, per_bell, _mean_estimate(per_bell.values()), corr, probs)


# --- phase calibration ------------------------------------------------------------

SWEEPS = {
    # swept field, outcome maximized, period of the outcome curve
    "rotation_axis_phase": ("rf_phase", "00", lambda p: 2 * np.pi),
    "evolution_time": ("bsm_echo_time", "11", lambda p: 2 * np.pi / p.hyperfine),
}


@dataclass
class SweepResult:
    parameter: str
    values: np.ndarray
    probabilities: np.ndarray  # shape (len(values), 4), columns 00, 01, 10, 11
    target: str
    amplitude: float
    phase: float
    offset: float
    period: float
    residual_rms: float
    optimum: float
    degenerate: bool

    def fitted(self, x=None) -> np.ndarray:
        x = self.values if x is None else np.asarray(x)
        return self.amplitude * np.cos(2 * np.pi * x / self.period + self.phase) + self.offset

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "target_outcome": self.target,
            "amplitude": self.amplitude,
            "phase": self.phase,
            "offset": self.offset,
            "period": self.period,
            "residual_rms": self.residual_rms,
            "optimum": self.optimum,
            "degenerate": self.degenerate,
        }

    def rows(self):
        fit = self.fitted()
        for x, p, f in zip(self.values, self.probabilities, fit):
            yield (float(x), *map(float, p), float(f))


def calibration_state(params: ModelParams) -> DensityState:
    """Nitrogen in |xbar> next to Alice's electron in |xbar>, Bob idle."""
    e = DensityState(np.array([[1, -1], [-1, 1]]) / 2, (E_A,))
    rho = tensor_product(tensor_product(ket("1", (N_A,)).to_density(), e), ket("0", (E_B,)).to_density())
    return prepare_source(rho, SourceState.canonical("-x"), params)


def calibration_probabilities(params: ModelParams) -> np.ndarray:
    branches = bsm(bell_state_map(calibration_state(params), params), params)
    return np.array([b.probability for b in branches])


def fit_sinusoid(x, y, period: float):
    """Least-squares ``A cos(2 pi x / period + phase) + offset`` with the period held fixed."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    w = 2 * np.pi * x / period
    design = np.column_stack([np.cos(w), np.sin(w), np.ones_like(w)])
    (a, b, c), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([a, b, c])
    return float(np.hypot(a, b)), float(np.arctan2(-b, a)), float(c), float(np.sqrt(np.mean(resid ** 2)))


def calibration_sweep(params: ModelParams, which: str, grid, mode: str = "analytic",
                      shots: int = 1000, seed: int = 0) -> SweepResult:
    """Sweep the nitrogen pulse phase or the BSM echo time and locate the optimum.

    The drive phase moves only the ``00`` curve and the echo time only the
    ``11`` curve, so each sweep maximizes its own outcome.
    """
    if which not in SWEEPS:
        raise ValueError(f"unknown sweep {which!r}; choose from {sorted(SWEEPS)}")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty sweep grid")
    name, target, period_of = SWEEPS[which]
    probs = np.array([calibration_probabilities(params.replace(**{name: float(v)})) for v in grid])
    if mode == "monte_carlo":
        rng = np.random.default_rng(seed)
        probs = np.array([rng.multinomial(shots, np.clip(p, 0, None) / np.clip(p, 0, None).sum()) / shots
                          for p in probs])
    elif mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    y = probs[:, OUTCOME_STRINGS.index(target)]
    period = period_of(params)
    amp, phase, offset, rms = fit_sinusoid(grid, y, period)
    degenerate = grid.size < 3 or amp < 1e-9
    optimum = _fit_optimum(grid, period, phase) if not degenerate else None
    if optimum is None:
        optimum = float(grid[np.argmax(y)])
    return SweepResult(name, grid, probs, target, amp, phase, offset, period, rms, optimum, degenerate)


def _fit_optimum(grid, period, phase):
    """Maximum of the fitted curve inside the swept range, if there is one."""
    lo, hi = grid.min(), grid.max()
    x0 = -phase * period / (2 * np.pi)
    k = np.arange(np.ceil((lo - x0) / period), np.floor((hi - x0) / period) + 1)
    cands = x0 + k * period
    if cands.size == 0:
        return None
    return float(cands[np.argmin(np.abs(cands - 0.5 * (lo + hi)))])


def default_grid(which: str, params: ModelParams, points: int = 73) -> np.ndarray:
    if which == "rotation_axis_phase":
        return np.linspace(-np.pi, np.pi, points)
    t = params.bsm_echo_time
    return np.linspace(t - HYPERFINE_PERIOD, t + HYPERFINE_PERIOD, points)


# --- tomography -----------------------------------------------------------------

@dataclass(frozen=True)
class TomographyResult:
    state: DensityState
    expectations: tuple[float, float, float]
    physical: bool


def tomography_1q(ex: float, ey: float, ez: float) -> TomographyResult:
    """Linear inversion, no projection onto physical states."""
    for e in (ex, ey, ez):
        if not -1.0 <= e <= 1.0:
            raise ValueError(f"expectation {e!r} outside [-1, 1]")
    m = (np.eye(2) + ex * SIGMA_X + ey * SIGMA_Y + ez * SIGMA_Z) / 2
    rho = DensityState(m, (E_B,))
    return TomographyResult(rho, (float(ex), float(ey), float(ez)), rho.is_physical())


def pauli_expectations(rho: DensityState) -> tuple[float, float, float]:
    m = rho.matrix
    return tuple(float(np.trace(m @ s).real) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))


def teleported_state_tomography(params: ModelParams, source: SourceState, populations=None) -> TomographyResult:
    """Bob's outcome-corrected state averaged over outcomes, reconstructed from its Pauli expectations."""
    a = teleport_analytic(params, source, populations)
    return tomography_1q(*np.clip(pauli_expectations(a.bob_state(corrected=True)), -1, 1))


# --- nuclear spin flips -----------------------------------------------------------

@dataclass
class FlipCurve:
    attempts: np.ndarray
    p_minus1: np.ndarray
    p_flip_attempt: float
    p_flip_cycle: float
    amplitude: float
    offset: float
    fit_ok: bool

    def rows(self):
        for n, p in zip(self.attempts, self.p_minus1):
            yield (int(n), float(p))


def nuclear_flip_curve(params: ModelParams, n_grid, amplitude: float = 1.0, offset: float = 0.0,
                       fit_dressing: bool | None = None) -> FlipCurve:
    """Survival of m_I = -1 against entanglement attempts, with the rate model refit.

    ``amplitude`` and ``offset`` dress the curve as an uncorrected readout
    would; they are fitted too unless the curve is undressed.
    """
    n = np.asarray(n_grid, dtype=float)
    if n.size == 0:
        raise ValueError("empty attempt grid")
    curve = amplitude * closed_form_p_minus1(n, params.p_flip_attempt) + offset
    dress = fit_dressing if fit_dressing is not None else (amplitude != 1.0 or offset != 0.0)
    try:
        if dress:
            f = lambda x, p, a, o: a * closed_form_p_minus1(x, p) + o
            popt, _ = curve_fit(f, n, curve, p0=(1e-3, 1.0, 0.0), bounds=([0, 0, -1], [1 / 3, 2, 1]))
            p, a, o = popt
        else:
            popt, _ = curve_fit(lambda x, p: closed_form_p_minus1(x, p), n, curve, p0=(1e-3,), bounds=(0, 1 / 3))
            p, a, o = popt[0], 1.0, 0.0
        ok = bool(np.isfinite(p))
    except (RuntimeError, ValueError):
        p, a, o, ok = float("nan"), float("nan"), float("nan"), False
    return FlipCurve(n, np.asarray(curve), float(p), float(2 * p), float(a), float(o), ok)


# --- link rate --------------------------------------------------------------------

@dataclass
class LinkRateResult:
    expected_rate: float
    sampled_rate: float | None
    mean_attempts: float | None
    mean_reinit_blocks: float | None
    n_events: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def link_rate(params: ModelParams, mode: str = "analytic", shots: int = 1000, seed: int = 0) -> LinkRateResult:
    rate = expected_rate(params)
    if mode == "analytic":
        return LinkRateResult(rate, None, None, None, 0)
    events = sample_heralds(params, np.random.default_rng(seed), shots)
    total = sum(e.elapsed_time for e in events)
    return LinkRateResult(
        rate, shots / total, float(np.mean([e.attempts_used for e in events])),
        float(np.mean([e.reinit_blocks for e in events])), shots,
    )


def corrected_initialization() -> NuclearPopulations:
    return PERFECT_INIT
