"""Tests for Hamiltonians, propagators and timing."""
import math

import numpy as np
import pytest

from src.core.errors import InvalidParameters, StepTooLarge, UnsupportedAtomCount
from src.core.linalg import PureState, expm_unitary, fidelity_up_to_phase, is_unitary
from src.core.operators import basis_state, fock_state, ket
from src.simulation.model import (
    MICROWAVE_CAVITY_REGIME,
    InteractionHamiltonian,
    SystemParams,
    _time_ordered_product,
    build_effective_hamiltonian,
    build_full_interaction_hamiltonian,
    build_h0,
    commensurate_params,
    coupling_lambda,
    derived_params,
    effective_propagator,
    full_propagator,
    full_vs_effective_fidelity,
    interaction_time,
    timing_budget,
)
from src.simulation.protocol import channel_target

FLIP = {"e": "g", "g": "e"}


def drive_rotation(level, omega_t):
    """exp(-i Omega t sigma_x) applied to |level>."""
    return math.cos(omega_t) * ket(level) - 1j * math.sin(omega_t) * ket(FLIP[level])


def closed_form_gg(lambda_t, omega_t):
    """Two atoms starting in |gg>: e^{-i lt}[cos(lt) R|g>R|g> - i sin(lt) R|e>R|e>]."""
    rg, re = drive_rotation("g", omega_t), drive_rotation("e", omega_t)
    return np.exp(-1j * lambda_t) * (math.cos(lambda_t) * np.kron(rg, rg) - 1j * math.sin(lambda_t) * np.kron(re, re))


def params_for(lambda_t, omega_t, g=1.0, delta=10.0, n_max=10):
    """Parameters and time realizing the requested (lambda*t, Omega*t)."""
    t = lambda_t / (g ** 2 / (2 * delta))
    return SystemParams(g=g, delta=delta, omega_drive=omega_t / t, n_max=n_max), t


def test_coupling_lambda_examples():
    assert coupling_lambda(SystemParams(g=1, delta=10)) == pytest.approx(0.05)
    assert coupling_lambda(SystemParams(g=2, delta=2)) == pytest.approx(1.0)
    assert interaction_time(SystemParams(g=1, delta=10)) == pytest.approx(5 * math.pi)


def test_interaction_time_formula():
    p = SystemParams(g=1.7, delta=13.0)
    assert interaction_time(p) == pytest.approx(math.pi * p.delta / (2 * p.g ** 2), rel=1e-14)


def test_derived_params_default():
    derived = derived_params(SystemParams())
    assert derived.lambda_ == pytest.approx(0.05)
    assert derived.t_channel == pytest.approx(5 * math.pi)
    assert derived.drive_multiple == 250


def test_regime_ratios():
    p = SystemParams()
    assert p.detuning_ratio == pytest.approx(20.0)
    assert p.drive_ratio == pytest.approx(10.0)


def test_params_validation():
    for bad in ({"delta": 0}, {"omega_drive": -1}, {"n_max": 0}, {"g": float("nan")}, {"g": -1}):
        with pytest.raises(InvalidParameters):
            SystemParams(**bad)
    with pytest.raises(InvalidParameters):
        interaction_time(SystemParams(g=0))


def test_effective_hamiltonian_matches_hand_expansion():
    lam = 0.05
    # basis |ee>, |eg>, |ge>, |gg>
    expected = lam * np.array([
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [0, 1, 1, 0],
        [1, 0, 0, 1],
    ], dtype=complex)
    h = build_effective_hamiltonian(SystemParams(g=1, delta=10))
    np.testing.assert_allclose(h, expected, atol=1e-12)
    assert h[3, 0] == pytest.approx(lam)


def test_effective_hamiltonian_is_symmetric_under_atom_swap():
    swap = np.eye(4)[[0, 2, 1, 3]]
    h = build_effective_hamiltonian(SystemParams())
    np.testing.assert_allclose(swap @ h @ swap, h, atol=1e-14)


def test_effective_model_ignores_cavity_truncation():
    small, large = SystemParams(n_max=1), SystemParams(n_max=50)
    np.testing.assert_array_equal(build_effective_hamiltonian(small), build_effective_hamiltonian(large))
    np.testing.assert_array_equal(effective_propagator(small, 3.0), effective_propagator(large, 3.0))


def test_only_two_atoms_supported():
    with pytest.raises(UnsupportedAtomCount):
        build_effective_hamiltonian(SystemParams(), n_atoms=3)
    with pytest.raises(UnsupportedAtomCount):
        build_h0(SystemParams(), n_atoms=1)


def test_drive_hamiltonian():
    np.testing.assert_array_equal(build_h0(SystemParams(omega_drive=0)), np.zeros((4, 4)))
    p = SystemParams(omega_drive=2.0)
    np.testing.assert_allclose(expm_unitary(build_h0(p), math.pi / 2.0), np.eye(4), atol=1e-12)
    quarter = expm_unitary(build_h0(p), math.pi / 4.0)
    # each atom: |g> -> -i|e>
    np.testing.assert_allclose(quarter @ basis_state("gg").amplitudes, -basis_state("ee").amplitudes, atol=1e-12)


def test_effective_propagator_identity_and_unitarity():
    p = SystemParams()
    np.testing.assert_allclose(effective_propagator(p, 0.0), np.eye(4), atol=1e-14)
    for t in (0.3, 5 * math.pi, 41.0):
        assert is_unitary(effective_propagator(p, t))


def test_effective_propagator_generates_channel():
    p = SystemParams()
    out = PureState(effective_propagator(p, interaction_time(p)) @ basis_state("gg").amplitudes, (2, 2))
    assert fidelity_up_to_phase(out, channel_target()) >= 1 - 1e-10


def test_effective_propagator_matches_closed_form_at_generic_point():
    p, t = params_for(0.3, 1.1)
    assert t == pytest.approx(6.0)
    out = effective_propagator(p, t) @ basis_state("gg").amplitudes
    # closed form includes the e^{-i lambda t} prefactor
    np.testing.assert_allclose(out, closed_form_gg(0.3, 1.1), atol=1e-12)


def test_effective_propagator_matches_closed_form_at_random_points():
    rng = np.random.default_rng(20)
    for lambda_t, omega_t in zip(rng.uniform(0.05, math.pi, 20), rng.uniform(0.0, 2 * math.pi, 20)):
        p, t = params_for(lambda_t, omega_t)
        out = PureState(effective_propagator(p, t) @ basis_state("gg").amplitudes, (2, 2))
        oracle = PureState(closed_form_gg(lambda_t, omega_t), (2, 2))
        assert fidelity_up_to_phase(out, oracle) >= 1 - 1e-9


def test_full_hamiltonian_trivial_and_hermitian():
    np.testing.assert_array_equal(
        build_full_interaction_hamiltonian(SystemParams(g=0, omega_drive=0, n_max=3), 0.4), np.zeros((16, 16)))
    h = build_full_interaction_hamiltonian(SystemParams(n_max=4), 0.37)
    assert h.shape == (20, 20)
    assert np.max(np.abs(h - h.conj().T)) <= 1e-14


def test_full_hamiltonian_exchange_elements():
    n_max = 5
    p = SystemParams(g=0.8, omega_drive=0, n_max=n_max)
    h = build_full_interaction_hamiltonian(p, 0.0)
    size = n_max + 1

    def index(a1, a2, n):
        return ("eg".index(a1) * 2 + "eg".index(a2)) * size + n

    for n in range(n_max):
        assert h[index("g", "g", n + 1), index("e", "g", n)] == pytest.approx(0.8 * math.sqrt(n + 1))


def test_spectator_atom_is_not_driven():
    p = SystemParams(n_max=2)
    ham = InteractionHamiltonian(p, ("atom1", "atom2", "atom3", "cavity"), coupled=("atom1", "atom2"))
    psi = basis_state("gge", ("atom1", "atom2", "atom3")).tensor(fock_state(0, 2))
    out = ham(0.0) @ psi.amplitudes
    # atom 3 stays |e>: every populated component has atom 3 excited
    populated = np.nonzero(np.abs(out) > 1e-12)[0]
    assert all((i // 3) % 2 == 0 for i in populated)


def test_full_propagator_trivial_cases():
    p = SystemParams(g=0, omega_drive=0, n_max=3)
    np.testing.assert_allclose(full_propagator(p, 1.0), np.eye(16), atol=1e-12)
    np.testing.assert_allclose(full_propagator(SystemParams(n_max=2), 0.0), np.eye(12), atol=0)


def test_full_propagator_step_check():
    with pytest.raises(StepTooLarge):
        full_propagator(SystemParams(), 1.0, dt=0.01)
    with pytest.raises(InvalidParameters):
        full_propagator(SystemParams(), 0.001, dt=0.0015)
    assert full_propagator(SystemParams(n_max=2), 0.001).shape == (12, 12)


def test_full_propagator_is_unitary():
    assert is_unitary(full_propagator(SystemParams(n_max=3), 1.0), tol=1e-6)


def test_full_propagator_second_order_convergence():
    p = SystemParams(g=1, delta=10, omega_drive=5, n_max=3)
    u1, u2, u3 = (full_propagator(p, 0.5, dt=dt) for dt in (0.01, 0.005, 0.0025))
    ratio = np.linalg.norm(u1 - u2) / np.linalg.norm(u2 - u3)
    assert 3.0 < ratio < 5.0


def test_full_propagator_period_reuse_matches_plain_product():
    p = SystemParams(g=1, delta=10, omega_drive=5, n_max=3)
    ham = InteractionHamiltonian(p)
    n_steps = math.ceil(ham.period / 0.002 - 1e-9)
    plain = _time_ordered_product(ham, ham.period / n_steps, 3 * n_steps)
    np.testing.assert_allclose(full_propagator(p, 3 * ham.period, dt=0.002), plain, atol=1e-10)


def test_fast_exchange_averages_out_without_drive():
    p = SystemParams(g=1, delta=20, omega_drive=0, n_max=3)
    initial = basis_state("eg").tensor(fock_state(0, 3))
    u = full_propagator(p, 2 * math.pi / p.delta)
    final = PureState(u @ initial.amplitudes, initial.dims)
    assert fidelity_up_to_phase(final, PureState(initial.amplitudes, initial.dims)) >= 0.99


def test_full_model_agrees_with_effective_model_in_default_regime():
    assert full_vs_effective_fidelity(SystemParams(), atoms="gg") >= 0.95


def test_commensurate_params():
    default = commensurate_params(SystemParams())
    assert default.delta == pytest.approx(10.0)
    assert default.omega_drive == pytest.approx(50.0)
    snapped = commensurate_params(SystemParams(delta=11.0, omega_drive=47.0))
    t = interaction_time(snapped)
    assert snapped.delta * t / (2 * math.pi) == pytest.approx(round(snapped.delta * t / (2 * math.pi)), abs=1e-9)
    assert snapped.omega_drive * t / math.pi == pytest.approx(round(snapped.omega_drive * t / math.pi), abs=1e-9)


def test_timing_budget_for_microwave_cavity():
    budget = timing_budget(MICROWAVE_CAVITY_REGIME)
    assert budget.interaction_time == pytest.approx(2.0e-4, rel=1e-9)
    assert budget.radiative_time == 3e-2
    assert budget.ratio < 0.1
    assert budget.feasible
    assert budget.drive_multiple == 1000
