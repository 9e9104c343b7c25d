import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from nvteleport.nv import (
    E_A,
    E_B,
    HYPERFINE_PERIOD,
    N_A,
    SLOTS,
    ModelParams,
    NuclearPopulations,
    averaged_populations,
    closed_form_p_minus1,
    declared_probability,
    depolarization_step,
    electron_ssro,
    free_evolution,
    ideal_params,
    noisy_cnot,
    nuclear_ssro,
    population_trajectory,
    protected_nuclear_gate,
)
from nvteleport.link import make_entangled_state
from nvteleport.quantum import (
    DensityState,
    PureState,
    apply_unitary,
    bell_states,
    fidelity_to_pure,
    gate,
    ket,
    maximally_mixed,
    partial_trace,
    projective_measure,
    rotation,
    tensor_product,
)

ALICE = (N_A, E_A)
A = 2 * np.pi * 2.19e6


def alice(bits):
    return ket(bits, ALICE).to_density()


def random_alice(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = g @ g.conj().T
    return DensityState(m / np.trace(m), ALICE)


def singlet_register(nitrogen="1"):
    link = bell_states((E_A, E_B))["Psi-"].to_density()
    return tensor_product(ket(nitrogen, (N_A,)).to_density(), link)


# --- parameters ---

def test_defaults_valid():
    p = ModelParams()
    assert p.hyperfine == pytest.approx(A)
    assert p.cnot_error_minus1 == p.cnot_error_0 == 0.01
    assert (p.f_ro_e0_alice + p.f_ro_e1_alice) / 2 == pytest.approx(0.963)
    assert p.init_populations.p_minus1 == 0.97


@pytest.mark.parametrize("field,value", [("visibility", 1.4), ("cnot_error_0", -0.1), ("hyperfine", 0.0),
                                         ("max_attempts", 0), ("decoupling_channel", "bogus")])
def test_invalid_params(field, value):
    with pytest.raises(ValueError):
        ModelParams(**{field: value})


def test_populations_must_sum_to_one():
    with pytest.raises(ValueError):
        NuclearPopulations(0.5, 0.5, 0.5)


# --- free evolution ---

def test_free_evolution_zero_and_period():
    rho = random_alice(1)
    p = ModelParams()
    assert np.allclose(free_evolution(rho, 0.0, p).matrix, rho.matrix)
    assert np.allclose(free_evolution(rho, 2 * np.pi / A, p).matrix, rho.matrix, atol=1e-12)


def test_free_evolution_half_period_matches_expm():
    rho = random_alice(2)
    h = np.zeros((4, 4))
    h[0, 0] = -A  # exp(-iHt) puts exp(iAt) on |00>
    t = np.pi / A
    u = expm(-1j * h * t)
    out = free_evolution(rho, t, ModelParams())
    assert np.allclose(out.matrix, u @ rho.matrix @ u.conj().T, atol=1e-12)
    assert u[0, 0] == pytest.approx(-1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1e-5), st.integers(1, 5))
def test_free_evolution_periodic(seed, t, k):
    rho, p = random_alice(seed), ModelParams()
    a = free_evolution(rho, t, p).matrix
    b = free_evolution(rho, t + k * 2 * np.pi / A, p).matrix
    assert np.allclose(a, b, atol=1e-9)


# --- protected gate ---

def test_protected_null_rotation():
    rho = singlet_register()
    out = protected_nuclear_gate(rho, rotation("Y", 0.0), ModelParams(), 3 * HYPERFINE_PERIOD, 8 * HYPERFINE_PERIOD)
    expect = apply_unitary(rho, gate("Y").on(E_A))
    assert np.allclose(out.matrix, expect.matrix, atol=1e-12)


def test_protected_gate_factorizes_with_wrapped_phase():
    out = protected_nuclear_gate(singlet_register(), gate("ybar"), ModelParams(),
                                 3 * HYPERFINE_PERIOD, 8 * HYPERFINE_PERIOD)
    plus_x = PureState(np.array([1, 1]) / np.sqrt(2), (N_A,))
    assert fidelity_to_pure(partial_trace(out, [N_A]), plus_x) == pytest.approx(1, abs=1e-12)


def _sequential_oracle(rho, u, t0, t):
    """8x8 step-by-step evolution written out independently."""
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    cond = np.kron(np.kron(u, p1) + np.kron(np.eye(2), p0), np.eye(2))

    def ev(dt):
        d = np.ones(8, dtype=complex)
        d[0:2] = np.exp(1j * A * dt)
        return np.diag(d)

    pi_e = np.kron(np.kron(np.eye(2), gate("Y").matrix), np.eye(2))
    total = cond @ ev(t - t0) @ pi_e @ ev(t0) @ cond
    return total @ rho.matrix @ total.conj().T


def test_protected_gate_unwrapped_phase_matches_oracle():
    rho = singlet_register()
    u = gate("ybar")
    t0, t = 3 * HYPERFINE_PERIOD, 3 * HYPERFINE_PERIOD + np.pi / A
    out = protected_nuclear_gate(rho, u, ModelParams(), t0, t)
    assert np.allclose(out.matrix, _sequential_oracle(rho, u.matrix, t0, t), atol=1e-12)
    wrapped = protected_nuclear_gate(rho, u, ModelParams(), t0, 8 * HYPERFINE_PERIOD)
    assert not np.allclose(partial_trace(out, [N_A]).matrix, partial_trace(wrapped, [N_A]).matrix, atol=1e-3)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, np.pi), st.floats(-np.pi, np.pi))
def test_protected_gate_leaves_echoed_pair(theta, phi):
    a, b = np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)
    u = np.array([[np.conj(b), a], [-np.conj(a), b]])
    from nvteleport.quantum import UnitaryOp
    out = protected_nuclear_gate(singlet_register(), UnitaryOp(u), ModelParams(),
                                 3 * HYPERFINE_PERIOD, 8 * HYPERFINE_PERIOD)
    echoed = apply_unitary(bell_states((E_A, E_B))["Psi-"].to_density(), gate("Y").on(E_A))
    pair = partial_trace(out, [E_A, E_B])
    assert np.allclose(pair.matrix, echoed.matrix, atol=1e-12)
    src = PureState(np.array([a, b]), (N_A,))
    assert fidelity_to_pure(partial_trace(out, [N_A]), src) == pytest.approx(1, abs=1e-12)


# --- CNOT ---

def test_ideal_cnot_truth_table():
    p = ideal_params()
    assert np.allclose(noisy_cnot(alice("10"), p).matrix, alice("11").matrix)
    assert np.allclose(noisy_cnot(alice("00"), p).matrix, alice("00").matrix)
    assert np.allclose(noisy_cnot(alice("01"), p).matrix, alice("01").matrix)
    assert np.allclose(noisy_cnot(alice("11"), p).matrix, alice("10").matrix)


def test_ideal_cnot_involutive_on_basis():
    p = ideal_params()
    for bits in ("00", "01", "10", "11"):
        twice = noisy_cnot(noisy_cnot(alice(bits), p), p)
        assert np.allclose(twice.matrix, alice(bits).matrix, atol=1e-12)


def test_cnot_error_probabilities():
    p = ideal_params(cnot_error_minus1=0.03, cnot_error_0=0.05)
    out = noisy_cnot(alice("10"), p)
    assert out.populations()[3] == pytest.approx(0.97)
    out = noisy_cnot(alice("00"), p)
    assert out.populations()[1] == pytest.approx(0.05)


def test_cnot_error_dephases_electron():
    p = ideal_params(cnot_error_0=0.2)
    plus = DensityState(np.kron(np.diag([1, 0]), np.full((2, 2), 0.5)), ALICE)
    out = noisy_cnot(plus, p)
    assert out.matrix[0, 1].real == pytest.approx(0.5 * 0.8)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1), st.floats(-4, 4), st.floats(-4, 4))
def test_cnot_channel_is_physical(seed, e1, e0, lam, kap):
    p = ideal_params(cnot_error_minus1=e1, cnot_error_0=e0, phase_lambda=lam, phase_kappa=kap)
    out = noisy_cnot(random_alice(seed), p)
    assert out.is_physical()


def test_cnot_phases_land_on_documented_amplitudes():
    plus = DensityState(np.full((4, 4), 0.25, dtype=complex), ALICE)
    base = noisy_cnot(plus, ideal_params()).matrix
    lam = noisy_cnot(plus, ideal_params(phase_lambda=0.3)).matrix
    kap = noisy_cnot(plus, ideal_params(phase_kappa=0.4)).matrix
    # lambda rides on |N e> = |01>, kappa on |00>; row k carries exp(i phase_k)
    assert np.angle(lam[1, 3] / base[1, 3]) == pytest.approx(0.3)
    assert np.angle(kap[0, 3] / base[0, 3]) == pytest.approx(0.4)
    assert np.allclose(lam[2:, 2:], base[2:, 2:]) and np.allclose(kap[2:, 2:], base[2:, 2:])


# --- readout ---

def test_perfect_ssro_equals_projective():
    rho = random_alice(3)
    for got, ref in zip(electron_ssro(rho, E_A, 1.0, 1.0), projective_measure(rho, E_A)):
        assert got.probability == pytest.approx(ref.probability, abs=1e-12)
        assert np.allclose(got.conditional_state.matrix, ref.conditional_state.matrix, atol=1e-12)


def test_ssro_on_mixed_and_eigenstate():
    f0, f1 = 0.9, 0.97
    r0, _ = electron_ssro(maximally_mixed((E_A,)), E_A, f0, f1)
    assert r0.probability == pytest.approx((f0 + 1 - f1) / 2)
    r0, _ = electron_ssro(ket("0", (E_A,)).to_density(), E_A, 0.963, 0.963)
    assert r0.probability == pytest.approx(0.963)


@settings(max_examples=25, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_ssro_affine(p0, f0, f1):
    rho = DensityState(np.diag([p0, 1 - p0]), (E_A,))
    r0, r1 = electron_ssro(rho, E_A, f0, f1)
    assert r0.probability == pytest.approx(f0 * p0 + (1 - f1) * (1 - p0), abs=1e-12)
    assert r1.probability == pytest.approx((1 - f0) * p0 + f1 * (1 - p0), abs=1e-12)
    assert declared_probability(p0, f0, f1) == pytest.approx(r0.probability, abs=1e-12)


def _nuclear_correct(params, rounds=2):
    out = []
    for bit in (0, 1):
        rho = ket(f"{bit}00", SLOTS).to_density()
        out.append(nuclear_ssro(rho, params, rounds=rounds)[bit].probability)
    return out


def test_perfect_nuclear_readout():
    assert _nuclear_correct(ideal_params()) == pytest.approx([1, 1], abs=1e-12)


def test_default_nuclear_readout_fidelity():
    assert np.mean(_nuclear_correct(ModelParams())) == pytest.approx(0.985, abs=0.002)


def test_second_round_raises_mean_readout_fidelity():
    p = ModelParams()
    one, two = _nuclear_correct(p, 1), _nuclear_correct(p, 2)
    # a second round rescues missed clicks on m_I = 0 and costs a little on m_I = -1
    assert two[0] > one[0] and two[1] < one[1]
    assert np.mean(two) > np.mean(one)


def test_nuclear_branches_sum_to_one():
    rho = tensor_product(ket("1", (N_A,)).to_density(), make_entangled_state(0.74).rho23)
    rho = apply_unitary(rho, gate("y").on(N_A))
    res = nuclear_ssro(rho, ModelParams())
    assert sum(r.probability for r in res) == pytest.approx(1, abs=1e-12)


def test_nuclear_ssro_sampling_matches_branches():
    rho = apply_unitary(ket("100", SLOTS).to_density(), gate("y").on(N_A))
    p = ModelParams()
    analytic = nuclear_ssro(rho, p)[0].probability
    rng = np.random.default_rng(4)
    hits = sum(nuclear_ssro(rho, p, rng=rng).outcome == 0 for _ in range(4000))
    assert abs(hits / 4000 - analytic) < 4 * np.sqrt(analytic * (1 - analytic) / 4000)


# --- rate equations ---

def test_depolarization_step_examples():
    p = NuclearPopulations(0.1, 0.3, 0.6)
    assert depolarization_step(p, 0.0) == p
    q = depolarization_step(NuclearPopulations(0, 1, 0), 0.01)
    assert q.as_array() == pytest.approx([0.01, 0.98, 0.01])


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1 / 3))
def test_depolarization_step_conserves(a, b, pf):
    a, b = sorted((a, b))
    p = NuclearPopulations(a, b - a, 1 - b)
    q = depolarization_step(p, pf)
    assert q.as_array().sum() == pytest.approx(1, abs=1e-12)
    assert (q.as_array() >= -1e-15).all()


def test_closed_form_matches_iteration():
    traj = population_trajectory(NuclearPopulations(0, 0, 1), 0.0017, 10_000)
    n = np.arange(10_001)
    assert np.max(np.abs(traj[:, 2] - closed_form_p_minus1(n, 0.0017))) < 1e-12
    assert closed_form_p_minus1(0, 0.3) == 1.0
    assert np.all(closed_form_p_minus1(n[:50], 0.0) == 1.0)


def test_averaged_populations():
    p = ModelParams()
    avg = averaged_populations(p)
    assert avg.as_array() == pytest.approx([0.02, 0.10, 0.88], abs=0.01)
    assert avg.as_array().sum() == pytest.approx(1, abs=1e-12)
    frozen = averaged_populations(p.replace(p_flip_cycle=0.0))
    assert frozen.as_array() == pytest.approx(p.init_populations.as_array(), abs=1e-15)
