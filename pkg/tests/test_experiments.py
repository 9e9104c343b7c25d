import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvteleport.experiments import (
    MEASURED_SHOTS,
    bsm_benchmark,
    calibration_sweep,
    default_grid,
    fit_sinusoid,
    link_rate,
    nuclear_flip_curve,
    pauli_expectations,
    readout_correction,
    reanalyze_no_feedforward,
    run_teleportation,
    sample_batch,
    teleported_state_tomography,
    tomography_1q,
)
from nvteleport.nv import E_A, HYPERFINE_PERIOD, PERFECT_INIT, ModelParams, electron_ssro, ideal_params
from nvteleport.protocol import FEED_FORWARD_TABLE, NEGATIVE_SENSE, SIX_LABELS, SourceState
from nvteleport.quantum import DensityState


# --- readout correction ---

def test_perfect_readout_correction():
    c = readout_correction(30, 70, 1.0, 1.0)
    assert c.c0 == pytest.approx(0.3) and not c.clamped


def test_readout_correction_formula():
    c = readout_correction(75, 25, 0.963, 0.963)
    assert c.c0 == pytest.approx((0.75 - 0.037) / 0.926, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0.51, 1), st.floats(0.51, 1))
def test_readout_roundtrip(c0, f0, f1):
    rho = DensityState(np.diag([c0, 1 - c0]), (E_A,))
    observed = electron_ssro(rho, E_A, f0, f1)[0].probability
    n = 10**9
    n0 = observed * n  # fractional counts keep the inversion exact
    c = readout_correction(n0, n - n0, f0, f1)
    assert c.c0 == pytest.approx(c0, abs=1e-9)


def test_readout_correction_errors_and_clamp():
    with pytest.raises(ValueError):
        readout_correction(0, 0, 0.9, 0.9)
    with pytest.raises(ValueError):
        readout_correction(5, 5, 0.4, 0.5)
    c = readout_correction(100, 0, 0.9, 0.9)
    assert c.clamped and c.c0 == 1.0


def test_readout_uncertainty_propagation():
    base = readout_correction(60, 40, 0.963, 0.963)
    wide = readout_correction(60, 40, 0.963, 0.963, sigma_f=0.005)
    assert wide.std_error > base.std_error
    assert base.std_error == pytest.approx(np.sqrt(0.24 / 100) / 0.926)


# --- teleportation runs ---

def test_ideal_mean_exact():
    assert run_teleportation(ideal_params(), populations=PERFECT_INIT).mean.value == 1.0


def test_default_and_corrected_means():
    p = ModelParams()
    assert run_teleportation(p).mean.value == pytest.approx(0.77, abs=0.02)
    assert run_teleportation(p, populations=PERFECT_INIT).mean.value == pytest.approx(0.86, abs=0.02)


def test_analytic_breakdown_consistent():
    r = run_teleportation(ModelParams())
    dist = r.outcome_distribution
    assert sum(dist.values()) == pytest.approx(1, abs=1e-12)
    weighted = sum(dist[o] * r.per_outcome[o].value for o in dist)
    # equal outcome weights per label would make this exact; here it is close
    assert weighted == pytest.approx(r.mean.value, abs=0.01)


def test_monte_carlo_close_to_analytic():
    p = ModelParams()
    mc = run_teleportation(p, mode="monte_carlo", shots=20_000, seed=3)
    an = run_teleportation(p)
    for l in SIX_LABELS:
        assert abs(mc.per_label[l].value - an.per_label[l].value) < 4 * mc.per_label[l].std_error
    for o, pr in an.outcome_distribution.items():
        n = 6 * 20_000
        assert abs(mc.outcome_distribution[o] - pr) < 4 * np.sqrt(pr * (1 - pr) / n)


def test_monte_carlo_deterministic_and_worker_independent():
    p = ModelParams()
    a = run_teleportation(p, mode="monte_carlo", shots=500, seed=9)
    b = run_teleportation(p, mode="monte_carlo", shots=500, seed=9, workers=2)
    assert a.to_dict() == b.to_dict()


def test_std_error_scaling():
    p = ModelParams()
    small = run_teleportation(p, mode="monte_carlo", shots=2_000, seed=1).mean.std_error
    big = run_teleportation(p, mode="monte_carlo", shots=20_000, seed=1).mean.std_error
    assert small / big == pytest.approx(np.sqrt(10), rel=0.1)


def test_measured_shot_counts():
    r = run_teleportation(ModelParams(), shots=MEASURED_SHOTS, mode="monte_carlo", seed=4)
    assert {l: e.n_shots for l, e in r.per_label.items()} == MEASURED_SHOTS
    assert 0.01 < r.mean.std_error < 0.05


def test_monte_carlo_needs_shots():
    with pytest.raises(ValueError):
        run_teleportation(ModelParams(), mode="monte_carlo", shots=0)


def test_batch_records_roundtrip():
    p = ModelParams()
    b = sample_batch(p, SourceState.canonical("+x"), 50, np.random.default_rng(0))
    recs = list(b.records())
    assert len(recs) == 50
    assert reanalyze_no_feedforward(recs, p).value == pytest.approx(reanalyze_no_feedforward([b]).value)


# --- fixed-pulse reanalysis ---

def test_no_feedforward_ideal_exact():
    r = run_teleportation(ideal_params(), populations=PERFECT_INIT)
    assert r.no_feedforward.value == pytest.approx(0.5, abs=1e-12)


def test_no_feedforward_default():
    assert run_teleportation(ModelParams()).no_feedforward.value == pytest.approx(0.5, abs=0.01)


def test_no_feedforward_positive_sense_unchanged():
    # records restricted to one outcome: labels whose pulse there has positive sense keep their value
    p = ModelParams()
    r = run_teleportation(p, mode="monte_carlo", shots=3000, seed=2)
    for b in r.batches:
        for k, o in enumerate(("00", "01", "10", "11")):
            op = FEED_FORWARD_TABLE[b.label][0][k]
            sel = b.outcome_index() == k
            sub = type(b)(b.label, b.n_bit[sel], b.e_bit[sel], b.declared[sel], b.nuclear_branch[sel],
                          b.attempts[sel], p)
            with_ff = run_fidelity(sub)
            without = reanalyze_no_feedforward([sub]).value
            if op in NEGATIVE_SENSE:
                assert without == pytest.approx(1 - with_ff)
            else:
                assert without == pytest.approx(with_ff)


def run_fidelity(batch):
    ideal = FEED_FORWARD_TABLE[batch.label][1]
    n0 = int((batch.declared == 0).sum())
    c = readout_correction(n0, len(batch) - n0, batch.params.f_ro_e0_bob, batch.params.f_ro_e1_bob)
    return c.c0 if ideal == 0 else c.c1


def test_no_feedforward_monte_carlo():
    r = run_teleportation(ModelParams(), mode="monte_carlo", shots=20_000, seed=5)
    assert r.no_feedforward.value == pytest.approx(0.5, abs=4 * r.no_feedforward.std_error + 0.005)


# --- BSM benchmark ---

def test_benchmark_ideal():
    r = bsm_benchmark(ideal_params())
    assert all(e.value == pytest.approx(1, abs=1e-12) for e in r.per_bell.values())


def test_benchmark_default_and_partial():
    full = bsm_benchmark(ModelParams()).mean.value
    ro_free = bsm_benchmark(ModelParams(f_ro_e0_alice=1, f_ro_e1_alice=1)).mean.value
    assert full == pytest.approx(0.90, abs=0.02)
    assert full < ro_free < 1.0


def test_benchmark_monte_carlo():
    r = bsm_benchmark(ModelParams(), mode="monte_carlo", shots=5000, seed=1)
    an = bsm_benchmark(ModelParams())
    for k, e in r.per_bell.items():
        p = an.per_bell[k].value
        assert abs(e.value - p) < 4 * np.sqrt(p * (1 - p) / 5000)


# --- calibration ---

def test_calibrated_sweep_optimum_at_zero():
    p = ideal_params()
    grid = default_grid("rotation_axis_phase", p)
    s = calibration_sweep(p, "rotation_axis_phase", grid)
    assert abs(s.optimum) <= grid[1] - grid[0]
    assert s.residual_rms < 1e-6 and not s.degenerate


@pytest.mark.parametrize("lam", [0.7, -1.9, 2.5])
def test_phase_sweep_compensates_lambda(lam):
    p = ideal_params(phase_lambda=lam, phase_kappa=0.3)
    grid = default_grid("rotation_axis_phase", p)
    s = calibration_sweep(p, "rotation_axis_phase", grid)
    assert abs(np.angle(np.exp(1j * (s.optimum - lam)))) <= grid[1] - grid[0]
    probs = calibration_sweep(p.replace(rf_phase=s.optimum), "rotation_axis_phase", [s.optimum]).probabilities[0]
    assert probs[0] == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("kap", [0.0, 1.1, -2.0])
def test_time_sweep_compensates_kappa(kap):
    p = ideal_params(phase_kappa=kap)
    grid = default_grid("evolution_time", p)
    s = calibration_sweep(p, "evolution_time", grid)
    assert s.residual_rms < 1e-6
    assert grid.min() <= s.optimum <= grid.max()
    tuned = calibration_sweep(p, "evolution_time", [s.optimum]).probabilities[0]
    assert tuned[0] + tuned[3] == pytest.approx(1, abs=1e-6)


def test_sweep_invariant_under_period_shift():
    p = ideal_params(phase_kappa=0.8)
    grid = default_grid("evolution_time", p)
    a = calibration_sweep(p, "evolution_time", grid)
    b = calibration_sweep(p, "evolution_time", grid + 3 * HYPERFINE_PERIOD)
    assert b.optimum - a.optimum == pytest.approx(3 * HYPERFINE_PERIOD, rel=1e-9)


def test_sweep_errors_and_degenerate():
    with pytest.raises(ValueError):
        calibration_sweep(ModelParams(), "rotation_axis_phase", [])
    with pytest.raises(ValueError):
        calibration_sweep(ModelParams(), "bogus", [0.0])
    flat = calibration_sweep(ModelParams(), "rotation_axis_phase", [0.1])
    assert flat.degenerate


def test_fit_sinusoid_recovers():
    x = np.linspace(0, 10, 50)
    amp, phase, off, rms = fit_sinusoid(x, 0.3 * np.cos(2 * np.pi * x / 4 + 0.5) + 0.2, 4)
    assert (amp, phase, off) == pytest.approx((0.3, 0.5, 0.2)) and rms < 1e-12


# --- tomography ---

def test_tomography_pole():
    t = tomography_1q(0, 0, 1)
    assert np.allclose(t.state.matrix, np.diag([1, 0])) and t.physical


def test_tomography_minus_y():
    t = tomography_1q(0, -1, 0)
    assert t.state.matrix[0, 1] == pytest.approx(0.5j)
    minus_y = np.array([1, -1j]) / np.sqrt(2)
    assert np.vdot(minus_y, t.state.matrix @ minus_y).real == pytest.approx(1)


def test_tomography_figure_entries():
    # expectations back-derived from the measured matrix: rho00 = 0.52, rho01 = 0.05 - 0.28i
    t = tomography_1q(0.10, 0.56, 0.04)
    assert t.state.matrix[0, 0].real == pytest.approx(0.52)
    assert t.state.matrix[0, 1] == pytest.approx(0.05 - 0.28j)


def test_tomography_flags_unphysical():
    assert not tomography_1q(1, 1, 1).physical
    with pytest.raises(ValueError):
        tomography_1q(1.2, 0, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_tomography_inverts_expectations(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    m = g @ g.conj().T
    rho = DensityState(m / np.trace(m), ("b",))
    out = tomography_1q(*pauli_expectations(rho))
    assert np.allclose(out.state.matrix, rho.matrix, atol=1e-12)


def test_teleported_state_tomography_sign():
    t = teleported_state_tomography(ideal_params(), SourceState.canonical("+y"), PERFECT_INIT)
    assert t.expectations == pytest.approx((0, 1, 0), abs=1e-9)


# --- nuclear flips ---

def test_flip_fit_recovery():
    c = nuclear_flip_curve(ModelParams(), np.arange(0, 3001, 50))
    assert c.fit_ok and c.p_flip_cycle == pytest.approx(0.0017, rel=0.05)


def test_flip_frozen():
    c = nuclear_flip_curve(ModelParams(p_flip_cycle=0.0), np.arange(0, 1000, 100))
    assert np.all(c.p_minus1 == 1.0)


def test_flip_dressing():
    c = nuclear_flip_curve(ModelParams(), np.arange(0, 3001, 50), amplitude=0.83, offset=0.13)
    assert c.p_minus1[0] == pytest.approx(0.96)
    assert (c.amplitude, c.offset) == pytest.approx((0.83, 0.13), rel=1e-3)
    assert c.p_flip_cycle == pytest.approx(0.0017, rel=0.05)


def test_flip_empty_grid():
    with pytest.raises(ValueError):
        nuclear_flip_curve(ModelParams(), [])


# --- link rate ---

def test_link_rate_modes():
    p = ModelParams(p_succ=1e-3, max_attempts=250)
    r = link_rate(p, "monte_carlo", shots=5000, seed=0)
    assert r.sampled_rate == pytest.approx(r.expected_rate, rel=0.1)
    assert link_rate(ModelParams()).sampled_rate is None
