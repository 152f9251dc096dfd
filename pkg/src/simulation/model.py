"""Hamiltonians, propagators and parameter bookkeeping for atoms crossing a driven cavity."""
import dataclasses
import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from ..core.errors import (
    BadSubsystemIndex,
    DimensionMismatch,
    InvalidParameters,
    StepTooLarge,
    TimingNotSatisfied,
    UnsupportedAtomCount,
)
from ..core.linalg import (
    SUBSYSTEM_ORDER,
    ComplexMatrix,
    PureState,
    expm_unitary,
    hermitian_exp,
    kron_all,
    partial_trace,
    state_fidelity,
)
from ..core.operators import IDENTITY2, S_MINUS, S_PLUS, SIGMA_X, annihilation, basis_state, fock_state

logger = logging.getLogger(__name__)

TIMING_REL_TOL = 1e-9
FULL_STEP_FACTOR = 0.01
MAX_DRIVE_PHASE_PER_STEP = 0.1
# Radiative lifetime of the circular Rydberg levels used in microwave cavity QED (seconds)
RYDBERG_RADIATIVE_TIME = 3e-2
MAX_TIME_RATIO = 0.1

TWO_ATOM_LABELS = ("atom1", "atom2")
FULL_MODEL_LABELS = ("atom1", "atom2", "cavity")


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters in angular-frequency units (g = 1 sets the scale).

    delta is the atom-cavity detuning omega_0 - omega_a (taken positive),
    omega_drive the Rabi frequency of the classical field and n_max the
    cavity Fock truncation.
    """

    g: float = 1.0
    delta: float = 10.0
    omega_drive: float = 50.0
    n_max: int = 10

    def __post_init__(self):
        problems = []
        for name in ("g", "delta", "omega_drive"):
            value = getattr(self, name)
            if not math.isfinite(value):
                problems.append(f"{name} must be finite, got {value}")
        if self.g < 0:
            problems.append(f"g must be >= 0, got {self.g}")
        if not self.delta > 0:
            problems.append(f"delta must be > 0, got {self.delta}")
        if self.omega_drive < 0:
            problems.append(f"omega_drive must be >= 0, got {self.omega_drive}")
        if int(self.n_max) != self.n_max or self.n_max < 1:
            problems.append(f"n_max must be an integer >= 1, got {self.n_max}")
        if problems:
            raise InvalidParameters("; ".join(problems))
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def detuning_ratio(self) -> float:
        """delta / (g/2); the large-detuning regime needs this >> 1."""
        return math.inf if self.g == 0 else self.delta / (0.5 * self.g)

    @property
    def drive_ratio(self) -> float:
        """2*Omega / delta; the strong-driving regime needs this >> 1."""
        return 2.0 * self.omega_drive / self.delta

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class DerivedParams:
    lambda_: float
    t_channel: float
    drive_multiple: int


def coupling_lambda(p: SystemParams) -> float:
    """Effective atom-atom coupling g^2 / (2 delta)."""
    return p.g ** 2 / (2.0 * p.delta)


def interaction_time(p: SystemParams) -> float:
    """Time with lambda*t = pi/4, i.e. pi*delta / (2 g^2)."""
    if p.g <= 0:
        raise InvalidParameters("g must be > 0 for a finite interaction time")
    return math.pi / (4.0 * coupling_lambda(p))


def derived_params(p: SystemParams) -> DerivedParams:
    t = interaction_time(p)
    return DerivedParams(
        lambda_=coupling_lambda(p),
        t_channel=t,
        drive_multiple=int(round(p.omega_drive * t / math.pi)),
    )


def check_protocol_timing(p: SystemParams, t: float, rel_tol: float = TIMING_REL_TOL) -> None:
    """Raise TimingNotSatisfied unless lambda*t = pi/4 and Omega*t = N*pi."""
    lam_t = coupling_lambda(p) * t
    if abs(lam_t - math.pi / 4) > rel_tol * math.pi / 4:
        raise TimingNotSatisfied(f"lambda*t = {lam_t:.12g}, expected pi/4")
    turns = p.omega_drive * t / math.pi
    if abs(turns - round(turns)) > rel_tol * max(1.0, turns):
        raise TimingNotSatisfied(f"Omega*t/pi = {turns:.12g} is not an integer")


def snap_drive(p: SystemParams, t: float) -> SystemParams:
    """Move Omega to the nearest N*pi/t (N >= 1 when the drive is on)."""
    if p.omega_drive == 0:
        return p
    n = max(1, int(round(p.omega_drive * t / math.pi)))
    return p.replace(omega_drive=n * math.pi / t)


def commensurate_params(p: SystemParams) -> SystemParams:
    """Snap delta to 2g*sqrt(k) and Omega to N*pi/t.

    With delta*t a multiple of 2*pi the virtually excited cavity field
    returns to its initial state at the end of the interaction.
    """
    if p.g <= 0:
        raise InvalidParameters("g must be > 0 to snap timing")
    k = max(1, int(round((p.delta / (2.0 * p.g)) ** 2)))
    snapped = p.replace(delta=2.0 * p.g * math.sqrt(k))
    snapped = snap_drive(snapped, interaction_time(snapped))
    if snapped != p:
        logger.debug(f"Snapped timing: delta {p.delta:.6g} -> {snapped.delta:.6g}, "
                     f"omega {p.omega_drive:.6g} -> {snapped.omega_drive:.6g}")
    return snapped


def _on_atom(op: ComplexMatrix, index: int, n_atoms: int) -> ComplexMatrix:
    return kron_all(*(op if k == index else IDENTITY2 for k in range(n_atoms)))


def build_effective_hamiltonian(p: SystemParams, n_atoms: int = 2) -> ComplexMatrix:
    """lambda * [1/2 sum_j (|e><e| + |g><g|)_j + sum_{j<k} (S_j+ S_k+ + S_j+ S_k- + h.c.)].

    Built from atomic operators only; the cavity never enters.
    """
    if n_atoms != 2:
        raise UnsupportedAtomCount(f"Only two atoms share the cavity, got {n_atoms}")
    lam = coupling_lambda(p)
    projector_sum = S_PLUS @ S_MINUS + S_MINUS @ S_PLUS
    diagonal = 0.5 * sum(_on_atom(projector_sum, j, n_atoms) for j in range(n_atoms))
    flips = np.zeros((2 ** n_atoms, 2 ** n_atoms), dtype=complex)
    for j in range(n_atoms):
        for k in range(j + 1, n_atoms):
            raising_j = _on_atom(S_PLUS, j, n_atoms)
            term = raising_j @ _on_atom(S_PLUS, k, n_atoms) + raising_j @ _on_atom(S_MINUS, k, n_atoms)
            flips += term + term.conj().T
    return lam * (diagonal + flips)


def build_h0(p: SystemParams, n_atoms: int = 2) -> ComplexMatrix:
    """Omega * sum_j (S_j+ + S_j-) = Omega * sum_j sigma_x^j."""
    if n_atoms != 2:
        raise UnsupportedAtomCount(f"Only two atoms share the cavity, got {n_atoms}")
    return p.omega_drive * sum(_on_atom(S_PLUS + S_MINUS, j, n_atoms) for j in range(n_atoms))


def effective_propagator(p: SystemParams, t: float) -> ComplexMatrix:
    """U(t) = exp(-i H0 t) exp(-i H_eff t); the drive factor acts last."""
    if t < 0:
        raise InvalidParameters(f"t must be >= 0, got {t}")
    return expm_unitary(build_h0(p), t) @ expm_unitary(build_effective_hamiltonian(p), t)


def subsystem_dims(labels: Sequence[str], n_max: int) -> Tuple[int, ...]:
    return tuple(n_max + 1 if label == "cavity" else 2 for label in labels)


def sparse_embed(op, index: int, dims: Sequence[int]) -> sparse.csr_matrix:
    factors = [sparse.identity(d, dtype=complex, format="csr") for d in dims]
    factors[index] = sparse.csr_matrix(op)
    return reduce(lambda a, b: sparse.kron(a, b, format="csr"), factors)


class InteractionHamiltonian:
    """H_I(t) = D + exp(-i delta t) A + exp(+i delta t) A^dagger.

    Written in the frame rotating at the atomic frequency with the drive on
    resonance: D = Omega * sum_j sigma_x^j and A = g * sum_j a^dagger S_j^-,
    summed over the atoms inside the cavity. Atoms present in ``labels`` but
    not in ``coupled`` are spectators. H_I has period 2*pi/delta.
    """

    def __init__(self, p: SystemParams, labels: Sequence[str] = FULL_MODEL_LABELS,
                 coupled: Optional[Sequence[str]] = None):
        labels = tuple(labels)
        unknown = [label for label in labels if label not in SUBSYSTEM_ORDER]
        if unknown:
            raise ValueError(f"Unknown subsystem labels: {unknown}")
        if "cavity" not in labels:
            raise DimensionMismatch(f"Full model needs a cavity subsystem, got {labels}")
        atoms = [label for label in labels if label != "cavity"]
        coupled = tuple(atoms) if coupled is None else tuple(coupled)
        missing = [label for label in coupled if label not in atoms]
        if missing:
            raise BadSubsystemIndex(f"Coupled atoms {missing} not present in {labels}")
        if len(coupled) > 2:
            raise UnsupportedAtomCount(f"At most two atoms share the cavity, got {coupled}")

        self.params = p
        self.labels = labels
        self.coupled = coupled
        self.dims = subsystem_dims(labels, p.n_max)
        self.dim = int(np.prod(self.dims))
        cavity = labels.index("cavity")

        self.drive = sparse.csr_matrix((self.dim, self.dim), dtype=complex)
        self.coupling = sparse.csr_matrix((self.dim, self.dim), dtype=complex)
        a_dag = sparse_embed(annihilation(p.n_max).conj().T, cavity, self.dims)
        for label in coupled:
            idx = labels.index(label)
            self.drive = self.drive + p.omega_drive * sparse_embed(SIGMA_X, idx, self.dims)
            self.coupling = self.coupling + p.g * (a_dag @ sparse_embed(S_MINUS, idx, self.dims))
        self.coupling = self.coupling.tocsr()
        self.coupling_dag = self.coupling.conj().T.tocsr()
        self.period = 2.0 * math.pi / p.delta

    def phases(self, t: float) -> Tuple[complex, complex]:
        phase = np.exp(-1j * self.params.delta * t)
        return phase, np.conj(phase)

    def sparse_at(self, t: float) -> sparse.csr_matrix:
        down, up = self.phases(t)
        return (self.drive + down * self.coupling + up * self.coupling_dag).tocsr()

    def __call__(self, t: float) -> ComplexMatrix:
        return self.sparse_at(t).toarray()


def build_full_interaction_hamiltonian(p: SystemParams, t: float,
                                       labels: Sequence[str] = FULL_MODEL_LABELS) -> ComplexMatrix:
    """Dense H_I(t) of dimension 2^n_atoms * (n_max + 1)."""
    if t < 0:
        raise InvalidParameters(f"t must be >= 0, got {t}")
    return InteractionHamiltonian(p, labels)(t)


def default_full_step(p: SystemParams) -> float:
    rates = [r for r in (p.omega_drive, p.delta) if r > 0]
    return min(FULL_STEP_FACTOR / r for r in rates)


def _time_ordered_product(ham: InteractionHamiltonian, step: float, n_steps: int) -> ComplexMatrix:
    u = np.eye(ham.dim, dtype=complex)
    for k in range(n_steps):
        u = hermitian_exp(ham((k + 0.5) * step), step) @ u
    return u


def full_propagator(p: SystemParams, t_final: float, dt: Optional[float] = None,
                    labels: Sequence[str] = FULL_MODEL_LABELS,
                    coupled: Optional[Sequence[str]] = None) -> ComplexMatrix:
    """Midpoint-rule time-ordered product of exp(-i H_I(t_k + dt/2) dt).

    When t_final spans a whole number of drive-independent periods 2*pi/delta
    the grid is aligned to one period and that period's product is raised to
    the matching power. The step actually used never exceeds ``dt``.

    Raises:
        StepTooLarge: if Omega * dt >= 0.1.
        InvalidParameters: if an explicit dt exceeds t_final.
    """
    if t_final < 0:
        raise InvalidParameters(f"t_final must be >= 0, got {t_final}")
    explicit_step = dt is not None
    dt = default_full_step(p) if dt is None else dt
    if not dt > 0:
        raise InvalidParameters(f"dt must be > 0, got {dt}")
    if p.omega_drive * dt >= MAX_DRIVE_PHASE_PER_STEP:
        raise StepTooLarge(f"Omega*dt = {p.omega_drive * dt:.3g} >= {MAX_DRIVE_PHASE_PER_STEP}")
    if explicit_step and dt > t_final:
        raise InvalidParameters(f"dt = {dt:.3g} exceeds t_final = {t_final:.3g}")

    ham = InteractionHamiltonian(p, labels, coupled)
    if t_final == 0:
        return np.eye(ham.dim, dtype=complex)

    periods = t_final / ham.period
    n_periods = int(round(periods))
    if n_periods >= 1 and abs(periods - n_periods) <= 1e-9 * periods:
        n_steps = max(1, math.ceil(ham.period / dt - 1e-9))
        one_period = _time_ordered_product(ham, ham.period / n_steps, n_steps)
        logger.debug(f"full_propagator: {n_periods} periods x {n_steps} steps, dim {ham.dim}")
        return np.linalg.matrix_power(one_period, n_periods)

    n_steps = max(1, math.ceil(t_final / dt - 1e-9))
    logger.debug(f"full_propagator: {n_steps} steps, dim {ham.dim}")
    return _time_ordered_product(ham, t_final / n_steps, n_steps)


def full_vs_effective_fidelity(p: SystemParams, atoms: str = "gg", cavity_fock: int = 0,
                               t: Optional[float] = None, dt: Optional[float] = None) -> float:
    """Overlap of the full-model reduced atom state with the effective-model prediction."""
    t = interaction_time(p) if t is None else t
    initial = basis_state(atoms, TWO_ATOM_LABELS).tensor(fock_state(cavity_fock, p.n_max))
    u = full_propagator(p, t, dt, FULL_MODEL_LABELS)
    final = PureState(u @ initial.amplitudes, initial.dims, initial.labels).normalized()
    target = PureState(effective_propagator(p, t) @ basis_state(atoms).amplitudes, (2, 2), TWO_ATOM_LABELS)
    fidelity = state_fidelity(partial_trace(final, [0, 1]), target)
    logger.debug(f"full vs effective |{atoms},{cavity_fock}>: {fidelity:.6f}")
    return fidelity


@dataclass(frozen=True)
class TimingBudget:
    interaction_time: float
    radiative_time: float
    ratio: float
    feasible: bool
    drive_multiple: int


def timing_budget(p: SystemParams, radiative_time: float = RYDBERG_RADIATIVE_TIME,
                  max_ratio: float = MAX_TIME_RATIO) -> TimingBudget:
    """Compare the interaction time with the atomic radiative time (both in seconds)."""
    if radiative_time <= 0:
        raise InvalidParameters(f"radiative_time must be > 0, got {radiative_time}")
    derived = derived_params(p)
    ratio = derived.t_channel / radiative_time
    return TimingBudget(
        interaction_time=derived.t_channel,
        radiative_time=radiative_time,
        ratio=ratio,
        feasible=ratio < max_ratio,
        drive_multiple=derived.drive_multiple,
    )


# g = 2pi x 25 kHz, delta = 2pi x 500 kHz, Omega = 2pi x 2.5 MHz (SI angular frequencies)
MICROWAVE_CAVITY_REGIME = SystemParams(
    g=2 * math.pi * 25e3,
    delta=2 * math.pi * 5e5,
    omega_drive=2 * math.pi * 2.5e6,
    n_max=10,
)
