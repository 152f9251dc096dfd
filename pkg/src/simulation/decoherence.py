"""Full atoms + cavity verification of the protocol with cavity decay and thermal photons."""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from scipy import linalg as sla
from scipy import sparse

from ..core.errors import DimensionMismatch, InvalidParameters, PositivityLost, StepTooLarge, TruncationTooSevere
from ..core.linalg import SUBSYSTEM_ORDER, ComplexMatrix, DensityMatrix, PureState, apply_on_subsystems, partial_trace
from ..core.operators import S_MINUS, annihilation, fock_state
from .model import (
    FULL_MODEL_LABELS,
    InteractionHamiltonian,
    SystemParams,
    full_propagator,
    interaction_time,
    sparse_embed,
    subsystem_dims,
)
from .protocol import JOINT_LABELS, BranchScore, UnknownQubit, cardinal_qubits, generate_channel, score_density_branches

logger = logging.getLogger(__name__)

THERMAL_TAIL_TOL = 1e-4
# the commutator spectrum reaches ~4*Omega; coarser steps let rho drift non-positive
RK4_STEP_FACTOR = 0.01
MAX_DRIVE_PHASE_PER_STEP = 0.05
POSITIVITY_WARN = -1e-6
POSITIVITY_FATAL = -1e-4
CHECKPOINT_EVERY = 1000

OPEN_LABELS = JOINT_LABELS + ("cavity",)
CAVITY_ATOMS = ("atom1", "atom2")


@dataclass(frozen=True)
class Dissipation:
    """Decay rates in the units of g; n_bar is the thermal photon number of the bath."""

    kappa: float = 0.0
    n_bar: float = 0.0
    gamma_atom: float = 0.0

    def __post_init__(self):
        problems = [f"{name} must be finite and >= 0, got {getattr(self, name)}"
                    for name in ("kappa", "n_bar", "gamma_atom")
                    if not (math.isfinite(getattr(self, name)) and getattr(self, name) >= 0)]
        if problems:
            raise InvalidParameters("; ".join(problems))

    @property
    def is_closed(self) -> bool:
        return self.kappa == 0 and self.gamma_atom == 0


@dataclass(frozen=True)
class IntegrationDiagnostics:
    steps: int
    dt: float
    max_trace_error: float
    min_eigenvalue: float


@dataclass(frozen=True)
class ProtocolReport:
    """Outcome of one teleport leg on the full model for a single input."""

    mean_fidelity: float
    success_probability: float
    branches: Tuple[BranchScore, ...]
    trace_error: float = 0.0
    min_eigenvalue: float = 0.0


def default_thermal_cutoff(n_bar: float) -> int:
    return int(math.ceil(4 * n_bar + 10))


def thermal_state(n_bar: float, n_max: int) -> DensityMatrix:
    """Geometric photon distribution of mean n_bar, renormalized on |0>..|n_max>.

    Raises:
        TruncationTooSevere: if more than 1e-4 of the population lies above n_max.
    """
    if n_max < 1:
        raise InvalidParameters(f"n_max must be >= 1, got {n_max}")
    if not (math.isfinite(n_bar) and n_bar >= 0):
        raise InvalidParameters(f"n_bar must be finite and >= 0, got {n_bar}")
    ratio = n_bar / (1.0 + n_bar)
    tail = ratio ** (n_max + 1)
    if tail > THERMAL_TAIL_TOL:
        raise TruncationTooSevere(f"n_max={n_max} discards {tail:.2e} of the thermal population "
                                  f"(n_bar={n_bar}); try n_max={default_thermal_cutoff(n_bar)}")
    populations = (1.0 - ratio) * ratio ** np.arange(n_max + 1)
    populations /= populations.sum()
    return DensityMatrix(np.diag(populations), (n_max + 1,), ("cavity",))


def fock_density(n: int, n_max: int) -> DensityMatrix:
    return fock_state(n, n_max).to_density_matrix()


def _resolve_labels(dims: Sequence[int], labels: Optional[Sequence[str]]) -> Tuple[str, ...]:
    if labels is not None:
        if "cavity" not in labels:
            raise DimensionMismatch(f"State has no cavity subsystem: {labels}")
        return tuple(labels)
    # Unlabeled states: atoms in order, cavity last
    n_atoms = len(dims) - 1
    if n_atoms > 3:
        raise DimensionMismatch(f"Cannot infer subsystems for dims {tuple(dims)}")
    return SUBSYSTEM_ORDER[:n_atoms] + ("cavity",)


def _default_coupled(labels: Sequence[str]) -> Tuple[str, ...]:
    atoms = [label for label in labels if label != "cavity"]
    if len(atoms) <= 2:
        return tuple(atoms)
    return tuple(label for label in atoms if label in CAVITY_ATOMS)


def collapse_operators(labels: Sequence[str], dims: Sequence[int],
                       dissipation: Dissipation) -> List[Tuple[float, sparse.csr_matrix]]:
    """(rate, operator) pairs: kappa(n_bar+1) a, kappa n_bar a^dagger, gamma S_j^- per atom."""
    operators = []
    cavity = list(labels).index("cavity")
    a = annihilation(dims[cavity] - 1)
    if dissipation.kappa > 0:
        operators.append((dissipation.kappa * (dissipation.n_bar + 1.0), sparse_embed(a, cavity, dims)))
        if dissipation.n_bar > 0:
            operators.append((dissipation.kappa * dissipation.n_bar, sparse_embed(a.conj().T, cavity, dims)))
    if dissipation.gamma_atom > 0:
        for idx, label in enumerate(labels):
            if label != "cavity":
                operators.append((dissipation.gamma_atom, sparse_embed(S_MINUS, idx, dims)))
    return operators


def _dissipator_sum(rho: np.ndarray, collapse) -> np.ndarray:
    out = np.zeros_like(rho)
    for rate, c in collapse:
        c_dag_c = (c.conj().T @ c).tocsr()
        anti = c_dag_c @ rho
        out += rate * (c @ (c @ rho).conj().T - 0.5 * (anti + anti.conj().T))
    return out


def lindblad_rhs(rho: DensityMatrix, h: Union[ComplexMatrix, Callable[[float], ComplexMatrix]],
                 dissipation: Dissipation, t: float = 0.0) -> np.ndarray:
    """d(rho)/dt = -i[H(t), rho] + kappa(n_bar+1) D[a] + kappa n_bar D[a^dagger] + gamma sum_j D[S_j^-].

    ``h`` is a matrix or a callable of time. D[c]rho = c rho c^dagger - {c^dagger c, rho}/2.
    """
    labels = _resolve_labels(rho.dims, rho.labels)
    h_t = h(t) if callable(h) else h
    if sparse.issparse(h_t):
        h_t = h_t.toarray()
    h_t = np.asarray(h_t, dtype=complex)
    if h_t.shape != rho.entries.shape:
        raise DimensionMismatch(f"Hamiltonian shape {h_t.shape} vs density matrix {rho.entries.shape}")
    commutator = h_t @ rho.entries - rho.entries @ h_t
    return -1j * commutator + _dissipator_sum(rho.entries, collapse_operators(labels, rho.dims, dissipation))


class MasterEquationSolver:
    """Fixed-step classic RK4 for the full model in the atomic rotating frame.

    The Hamiltonian and the anticommutator terms are folded into
    H_nh = H - (i/2) sum_c r c^dagger c, so each derivative costs three
    sparse-dense products plus one per jump operator.
    """

    def __init__(self, p: SystemParams, dissipation: Dissipation, labels: Sequence[str] = FULL_MODEL_LABELS,
                 coupled: Optional[Sequence[str]] = None):
        labels = tuple(labels)
        coupled = _default_coupled(labels) if coupled is None else tuple(coupled)
        self.params = p
        self.dissipation = dissipation
        self.ham = InteractionHamiltonian(p, labels, coupled)
        self.labels = labels
        self.dims = self.ham.dims
        self.collapse = collapse_operators(labels, self.dims, dissipation)
        decay = sparse.csr_matrix((self.ham.dim, self.ham.dim), dtype=complex)
        for rate, c in self.collapse:
            decay = decay + rate * (c.conj().T @ c)
        self.drive_nh = (self.ham.drive - 0.5j * decay).tocsr()

    def rhs(self, rho: np.ndarray, t: float) -> np.ndarray:
        down, up = self.ham.phases(t)
        x = self.drive_nh @ rho + down * (self.ham.coupling @ rho) + up * (self.ham.coupling_dag @ rho)
        out = -1j * (x - x.conj().T)
        for rate, c in self.collapse:
            out += rate * (c @ (c @ rho).conj().T)
        return out

    def default_step(self) -> float:
        return RK4_STEP_FACTOR / max(self.params.omega_drive, self.params.delta)

    def _min_eigenvalue(self, rho: np.ndarray, t: float) -> float:
        lowest = float(sla.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if lowest < POSITIVITY_FATAL:
            raise PositivityLost(f"Minimum eigenvalue {lowest:.3e} at t={t:.6g}")
        if lowest < POSITIVITY_WARN:
            logger.warning(f"Density matrix eigenvalue {lowest:.3e} at t={t:.6g}")
        return lowest

    def run(self, rho0: DensityMatrix, t_final: float,
            dt: Optional[float] = None) -> Tuple[DensityMatrix, IntegrationDiagnostics]:
        if rho0.dims != self.dims:
            raise DimensionMismatch(f"Initial state dims {rho0.dims} vs model dims {self.dims}")
        if t_final < 0:
            raise InvalidParameters(f"t_final must be >= 0, got {t_final}")
        dt = self.default_step() if dt is None else dt
        if not dt > 0:
            raise InvalidParameters(f"dt must be > 0, got {dt}")
        if self.params.omega_drive * dt >= MAX_DRIVE_PHASE_PER_STEP:
            raise StepTooLarge(f"Omega*dt = {self.params.omega_drive * dt:.3g} >= {MAX_DRIVE_PHASE_PER_STEP}")

        n_steps = max(1, math.ceil(t_final / dt - 1e-9)) if t_final > 0 else 0
        step = t_final / n_steps if n_steps else 0.0
        rho = np.array(rho0.entries, dtype=complex)
        trace0 = np.trace(rho)
        max_trace_error = 0.0
        min_eigenvalue = self._min_eigenvalue(rho, 0.0)
        logger.debug(f"RK4: {n_steps} steps of {step:.3e}, dim {self.ham.dim}, {len(self.collapse)} jump ops")

        for k in range(n_steps):
            t = k * step
            k1 = self.rhs(rho, t)
            k2 = self.rhs(rho + 0.5 * step * k1, t + 0.5 * step)
            k3 = self.rhs(rho + 0.5 * step * k2, t + 0.5 * step)
            k4 = self.rhs(rho + step * k3, t + step)
            rho = rho + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            max_trace_error = max(max_trace_error, abs(np.trace(rho) - trace0))
            if (k + 1) % CHECKPOINT_EVERY == 0 or k == n_steps - 1:
                min_eigenvalue = min(min_eigenvalue, self._min_eigenvalue(rho, t + step))

        rho = 0.5 * (rho + rho.conj().T)
        diagnostics = IntegrationDiagnostics(n_steps, step, float(max_trace_error), min_eigenvalue)
        return DensityMatrix(rho, rho0.dims, rho0.labels, check=False), diagnostics


def integrate_master_equation(rho0: DensityMatrix, p: SystemParams, dissipation: Dissipation, t_final: float,
                              dt: Optional[float] = None,
                              coupled: Optional[Sequence[str]] = None) -> DensityMatrix:
    """Evolve rho0 under the full model; atoms outside ``coupled`` are spectators."""
    labels = _resolve_labels(rho0.dims, rho0.labels)
    expected = subsystem_dims(labels, p.n_max)
    if tuple(rho0.dims) != expected:
        raise DimensionMismatch(f"State dims {rho0.dims} do not match {labels} with n_max={p.n_max}")
    solver = MasterEquationSolver(p, dissipation, labels, coupled)
    final, diagnostics = solver.run(rho0, t_final, dt)
    logger.debug(f"Master equation finished: trace error {diagnostics.max_trace_error:.2e}, "
                 f"min eigenvalue {diagnostics.min_eigenvalue:.2e}")
    return final


def initial_joint_state(q: UnknownQubit, p: SystemParams) -> PureState:
    """Unknown qubit on atom 1 next to the ideal channel on atoms 2, 3."""
    channel = generate_channel(p)
    return PureState(np.kron(q.vector, channel.amplitudes), (2, 2, 2), JOINT_LABELS)


def _report(rho_atoms: DensityMatrix, q: UnknownQubit,
            diagnostics: Optional[IntegrationDiagnostics] = None) -> ProtocolReport:
    branches = tuple(score_density_branches(rho_atoms, q))
    success = sum(b.probability for b in branches)
    mean_fidelity = sum(b.probability * b.fidelity for b in branches) / success
    return ProtocolReport(
        mean_fidelity=float(mean_fidelity),
        success_probability=float(success),
        branches=branches,
        trace_error=diagnostics.max_trace_error if diagnostics else 0.0,
        min_eigenvalue=diagnostics.min_eigenvalue if diagnostics else 0.0,
    )


def _cavity_components(cavity_init: Union[int, DensityMatrix], n_max: int) -> List[Tuple[float, np.ndarray]]:
    if isinstance(cavity_init, DensityMatrix):
        if cavity_init.dims != (n_max + 1,):
            raise DimensionMismatch(f"Cavity state dims {cavity_init.dims} vs n_max={n_max}")
        weights, vectors = sla.eigh(cavity_init.entries)
        return [(float(w), vectors[:, i]) for i, w in enumerate(weights) if w > 1e-14]
    return [(1.0, fock_state(int(cavity_init), n_max).amplitudes)]


def closed_system_report(q: UnknownQubit, p: SystemParams, cavity_init: Union[int, DensityMatrix] = 0,
                         propagator: Optional[ComplexMatrix] = None, dt: Optional[float] = None) -> ProtocolReport:
    """Teleport leg with the unitary full model; atom 3 is a spectator.

    ``cavity_init`` is a Fock level or a cavity density matrix (handled as a
    mixture of its eigenvectors). Pass a precomputed ``propagator`` on
    atom1, atom2, cavity to reuse it across inputs.
    """
    u = full_propagator(p, interaction_time(p), dt, FULL_MODEL_LABELS) if propagator is None else propagator
    atoms = initial_joint_state(q, p)
    rho_atoms = np.zeros((8, 8), dtype=complex)
    for weight, cavity_vector in _cavity_components(cavity_init, p.n_max):
        joint = atoms.tensor(PureState(cavity_vector, (p.n_max + 1,), ("cavity",)))
        final = apply_on_subsystems(u, joint, (0, 1, 3)).normalized()
        rho_atoms += weight * partial_trace(final, [0, 1, 2]).entries
    return _report(DensityMatrix(rho_atoms, (2, 2, 2), JOINT_LABELS, check=False), q)


def open_system_report(q: UnknownQubit, p: SystemParams, dissipation: Dissipation,
                       cavity_init: Optional[DensityMatrix] = None, dt: Optional[float] = None) -> ProtocolReport:
    """Teleport leg under the master equation, scored branch by branch."""
    cavity_init = thermal_state(dissipation.n_bar, p.n_max) if cavity_init is None else cavity_init
    if cavity_init.dims != (p.n_max + 1,):
        raise DimensionMismatch(f"Cavity state dims {cavity_init.dims} vs n_max={p.n_max}")
    cavity_init = DensityMatrix(cavity_init.entries, cavity_init.dims, ("cavity",), check=False)
    rho0 = initial_joint_state(q, p).to_density_matrix().tensor(cavity_init)
    solver = MasterEquationSolver(p, dissipation, OPEN_LABELS, CAVITY_ATOMS)
    final, diagnostics = solver.run(rho0, interaction_time(p), dt)
    return _report(partial_trace(final, [0, 1, 2]), q, diagnostics)


def protocol_fidelity_open_system(q: UnknownQubit, p: SystemParams, dissipation: Dissipation,
                                  cavity_init: Optional[DensityMatrix] = None) -> float:
    return open_system_report(q, p, dissipation, cavity_init).mean_fidelity


def protocol_reports(p: SystemParams, dissipation: Optional[Dissipation] = None,
                     cavity_init: Union[int, DensityMatrix, None] = None,
                     inputs: Optional[Sequence[UnknownQubit]] = None, dt: Optional[float] = None,
                     n_jobs: int = 1) -> List[ProtocolReport]:
    """Reports for every input; closed system when ``dissipation`` is None."""
    inputs = cardinal_qubits() if inputs is None else list(inputs)
    if dissipation is None:
        cavity_init = 0 if cavity_init is None else cavity_init
        u = full_propagator(p, interaction_time(p), dt, FULL_MODEL_LABELS)
        return [closed_system_report(q, p, cavity_init, propagator=u) for q in inputs]
    if isinstance(cavity_init, int):
        cavity_init = fock_density(cavity_init, p.n_max)
    return Parallel(n_jobs=n_jobs)(
        delayed(open_system_report)(q, p, dissipation, cavity_init, dt) for q in inputs
    )


def average_protocol_fidelity(p: SystemParams, dissipation: Optional[Dissipation] = None,
                              cavity_init: Union[int, DensityMatrix, None] = None,
                              inputs: Optional[Sequence[UnknownQubit]] = None, dt: Optional[float] = None,
                              n_jobs: int = 1) -> float:
    """Mean post-correction fidelity; the default cardinal inputs give the Haar average."""
    reports = protocol_reports(p, dissipation, cavity_init, inputs, dt, n_jobs)
    return float(np.mean([r.mean_fidelity for r in reports]))
