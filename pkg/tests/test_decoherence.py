"""Tests for cavity decay, thermal photons and the master-equation integrator."""
import math

import numpy as np
import pytest

from src.core.errors import DimensionMismatch, InvalidParameters, StepTooLarge, TruncationTooSevere
from src.core.linalg import PureState, trace_distance
from src.core.operators import basis_state, fock_state, number
from src.simulation.decoherence import (
    Dissipation,
    MasterEquationSolver,
    average_protocol_fidelity,
    closed_system_report,
    default_thermal_cutoff,
    fock_density,
    integrate_master_equation,
    lindblad_rhs,
    open_system_report,
    protocol_reports,
    thermal_state,
)
from src.simulation.model import FULL_MODEL_LABELS, SystemParams, full_propagator
from src.simulation.protocol import UnknownQubit, cardinal_qubits
from src.simulation.sweeps import run_decoherence_sweep


def two_atom_state(levels, n, n_max):
    return basis_state(levels, ("atom1", "atom2")).tensor(fock_state(n, n_max)).to_density_matrix()


def test_thermal_state_populations():
    rho = thermal_state(1.0, 30)
    populations = np.diag(rho.entries).real
    assert populations[0] == pytest.approx(0.5, rel=1e-6)
    assert populations[1] == pytest.approx(0.25, rel=1e-6)
    assert rho.trace == pytest.approx(1.0)
    assert rho.expectation(number(30)).real == pytest.approx(1.0, abs=1e-6)


def test_thermal_state_vacuum_and_truncation():
    vacuum = thermal_state(0.0, 3)
    np.testing.assert_allclose(vacuum.entries, fock_density(0, 3).entries)
    with pytest.raises(TruncationTooSevere):
        thermal_state(1.0, 5)
    assert default_thermal_cutoff(1.0) == 14
    thermal_state(1.0, default_thermal_cutoff(1.0))


def test_lindblad_spec_validation():
    with pytest.raises(InvalidParameters):
        Dissipation(kappa=-0.1)
    with pytest.raises(InvalidParameters):
        Dissipation(n_bar=float("inf"))
    assert Dissipation().is_closed
    assert not Dissipation(kappa=0.1).is_closed


def test_thermal_state_is_stationary_under_cavity_decay():
    rho = thermal_state(1.0, 30)
    drift = lindblad_rhs(rho, np.zeros((31, 31)), Dissipation(kappa=1.0, n_bar=1.0))
    assert np.max(np.abs(drift)) < 1e-10


def test_rhs_preserves_trace_and_hermiticity():
    p = SystemParams(g=1, delta=2, omega_drive=0.4, n_max=2)
    rng = np.random.default_rng(0)
    v = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    rho = PureState(v / np.linalg.norm(v), (2, 2, 3), FULL_MODEL_LABELS).to_density_matrix()
    solver = MasterEquationSolver(p, Dissipation(kappa=0.5, n_bar=0.2, gamma_atom=0.1))
    drift = solver.rhs(rho.entries, 0.3)
    assert abs(np.trace(drift)) < 1e-12
    np.testing.assert_allclose(drift, drift.conj().T, atol=1e-12)


def test_solver_rhs_matches_reference_rhs():
    p = SystemParams(g=1, delta=2, omega_drive=0.4, n_max=2)
    dissipation = Dissipation(kappa=0.5, n_bar=0.2, gamma_atom=0.1)
    rho = two_atom_state("eg", 1, 2)
    solver = MasterEquationSolver(p, dissipation)
    reference = lindblad_rhs(rho, solver.ham, dissipation, t=0.7)
    np.testing.assert_allclose(solver.rhs(rho.entries, 0.7), reference, atol=1e-12)


def test_cavity_decay_law():
    p = SystemParams(g=0, omega_drive=0, n_max=3)
    rho0 = two_atom_state("gg", 1, 3)
    final = integrate_master_equation(rho0, p, Dissipation(kappa=1.0), t_final=1.0, dt=0.01)
    n_op = np.kron(np.eye(4), number(3))
    assert final.expectation(n_op).real == pytest.approx(math.exp(-1.0), abs=1e-4)


def test_rk4_fourth_order_convergence():
    p = SystemParams(g=1, delta=2, omega_drive=0.4, n_max=2)
    dissipation = Dissipation(kappa=0.5, n_bar=0.2)
    rho0 = two_atom_state("eg", 0, 2)
    r1, r2, r3 = (integrate_master_equation(rho0, p, dissipation, 1.0, dt=dt).entries for dt in (0.02, 0.01, 0.005))
    ratio = np.linalg.norm(r1 - r2) / np.linalg.norm(r2 - r3)
    assert 12.0 < ratio < 20.0


def test_master_equation_without_decay_matches_unitary_model():
    p = SystemParams(g=1, delta=2, omega_drive=2, n_max=2)
    initial = basis_state("eg", ("atom1", "atom2")).tensor(fock_state(0, 2))
    t = math.pi
    open_final = integrate_master_equation(initial.to_density_matrix(), p, Dissipation(), t, dt=0.002)
    u = full_propagator(p, t, dt=5e-4)
    closed_final = PureState(u @ initial.amplitudes, initial.dims, initial.labels).to_density_matrix()
    assert trace_distance(open_final, closed_final) < 1e-4


def test_trace_is_preserved_with_decay():
    p = SystemParams(g=1, delta=2, omega_drive=0.4, n_max=2)
    solver = MasterEquationSolver(p, Dissipation(kappa=0.5, n_bar=0.2, gamma_atom=0.05))
    final, diagnostics = solver.run(two_atom_state("ee", 0, 2), 1.0, dt=0.01)
    assert diagnostics.steps == 100
    assert diagnostics.max_trace_error < 1e-10
    assert final.trace == pytest.approx(1.0, abs=1e-10)
    assert diagnostics.min_eigenvalue > -1e-6


def test_default_step_resolves_the_drive():
    solver = MasterEquationSolver(SystemParams(), Dissipation(kappa=0.1))
    assert solver.default_step() == pytest.approx(2e-4)
    assert SystemParams().omega_drive * solver.default_step() < 0.05


def test_master_equation_checks_inputs():
    p = SystemParams(n_max=2)
    with pytest.raises(StepTooLarge):
        integrate_master_equation(two_atom_state("gg", 0, 2), p, Dissipation(), 1.0, dt=0.01)
    with pytest.raises(DimensionMismatch):
        integrate_master_equation(two_atom_state("gg", 0, 3), p, Dissipation(), 1.0)


def test_spectator_atom_decays_outside_the_cavity():
    p = SystemParams(g=0, omega_drive=0, n_max=1)
    rho0 = basis_state("gge", ("atom1", "atom2", "atom3")).tensor(fock_state(0, 1)).to_density_matrix()
    final = integrate_master_equation(rho0, p, Dissipation(gamma_atom=1.0), 1.0, dt=0.01)
    excited = basis_state("gge", ("atom1", "atom2", "atom3")).tensor(fock_state(0, 1))
    assert final.expectation(excited.to_density_matrix().entries).real == pytest.approx(math.exp(-1.0), abs=1e-6)


def test_closed_thermal_report_is_the_fock_mixture():
    p = SystemParams(n_max=3)
    q = UnknownQubit(0.6, 0.8)
    cavity = thermal_state(0.1, 3)
    u = full_propagator(p, 5 * math.pi)
    mixed = closed_system_report(q, p, cavity, propagator=u)
    weights = np.diag(cavity.entries).real
    mixture = sum(w * closed_system_report(q, p, n, propagator=u).mean_fidelity for n, w in enumerate(weights))
    assert mixed.mean_fidelity == pytest.approx(mixture, abs=1e-9)
    assert mixed.success_probability == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
def test_default_regime_average_fidelity():
    assert average_protocol_fidelity(SystemParams()) >= 0.95


@pytest.mark.slow
def test_fidelity_is_insensitive_to_photon_number_in_strong_regime():
    p = SystemParams(g=1, delta=20, omega_drive=200, n_max=10)
    fidelities = [average_protocol_fidelity(p, cavity_init=n) for n in range(4)]
    assert min(fidelities) >= 0.95
    assert max(fidelities[:3]) - min(fidelities[:3]) <= 0.02


@pytest.mark.slow
def test_weak_cavity_decay_costs_little_fidelity():
    p = SystemParams(n_max=4)
    q = UnknownQubit(1 / math.sqrt(2), 1 / math.sqrt(2))
    dissipation = Dissipation(kappa=0.1)
    baseline = closed_system_report(q, p, 0).mean_fidelity
    report = open_system_report(q, p, dissipation, cavity_init=fock_density(0, 4))
    assert baseline - report.mean_fidelity < 0.05
    assert report.trace_error < 1e-7


@pytest.mark.slow
@pytest.mark.parametrize("p", [SystemParams(), SystemParams(g=1, delta=20, omega_drive=200)],
                         ids=["default", "doubled"])
def test_average_fidelity_for_low_fock_levels(p):
    fidelities = [average_protocol_fidelity(p, cavity_init=n) for n in range(4)]
    assert all(0.0 <= f <= 1.0 + 1e-9 for f in fidelities)
    assert fidelities[0] >= 0.95


@pytest.mark.slow
def test_open_reports_stay_positive_for_every_cardinal_input():
    reports = protocol_reports(SystemParams(), Dissipation(kappa=0.1), 0, n_jobs=-1)
    assert len(reports) == len(cardinal_qubits())
    for report in reports:
        assert report.min_eigenvalue > -1e-6
        assert report.trace_error < 1e-7
        assert report.success_probability == pytest.approx(1.0, abs=1e-6)


@pytest.mark.slow
def test_decoherence_sweep_with_thermal_field():
    result = run_decoherence_sweep(SystemParams(), Dissipation(kappa=0.1, n_bar=1.0), jobs=-1)
    assert result.passed, result.failures
    assert [r["n_bar"] for r in result.records] == [0.0, 0.5, 1.0]
    for record in result.records:
        assert record["drop"] < 0.05
        assert record["max_trace_error"] < 1e-7
        assert record["min_eigenvalue"] > -1e-6
