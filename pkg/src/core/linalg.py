"""Dense complex linear algebra over small composite Hilbert spaces.

Basis convention: |e> = (1, 0), |g> = (0, 1); cavity Fock states |0>..|n_max>
in ascending order. Tensor order is atom1 (x) atom2 (x) atom3 (x) cavity with
absent subsystems skipped.
"""
import logging
from dataclasses import InitVar, dataclass
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg as sla

from .errors import BadSubsystemIndex, DimensionMismatch, NonHermitianInput, NotNormalized

logger = logging.getLogger(__name__)

# Dense complex128 array; rows x cols in row-major order.
ComplexMatrix = np.ndarray

SUBSYSTEM_ORDER = ("atom1", "atom2", "atom3", "cavity")

HERMITIAN_TOL = 1e-8
UNITARY_TOL = 1e-10
DENSITY_HERMITIAN_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8
NORM_TOL = 1e-8
# Full-model propagators are unitary to 1e-6, so their outputs may overshoot slightly.
NORM_GUARD_TOL = 1e-6


def _check_dims(dims: Sequence[int]) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"Subsystem dimensions must be positive integers, got {dims}")
    return dims


def _check_labels(labels: Optional[Sequence[str]], dims: Tuple[int, ...]) -> Optional[Tuple[str, ...]]:
    if labels is None:
        return None
    labels = tuple(labels)
    if len(labels) != len(dims):
        raise DimensionMismatch(f"{len(labels)} labels for {len(dims)} subsystems")
    positions = []
    for label, dim in zip(labels, dims):
        if label not in SUBSYSTEM_ORDER:
            raise ValueError(f"Unknown subsystem label: {label!r}")
        if label.startswith("atom") and dim != 2:
            raise DimensionMismatch(f"{label} must be a qubit, got dimension {dim}")
        positions.append(SUBSYSTEM_ORDER.index(label))
    if any(b <= a for a, b in zip(positions, positions[1:])):
        raise ValueError(f"Subsystem labels out of order: {labels} (expected order {SUBSYSTEM_ORDER})")
    return labels


def _check_indices(indices: Iterable[int], n_subsystems: int) -> List[int]:
    indices = list(indices)
    if not indices:
        raise BadSubsystemIndex("At least one subsystem index is required")
    for idx in indices:
        if not isinstance(idx, (int, np.integer)) or not 0 <= idx < n_subsystems:
            raise BadSubsystemIndex(f"Subsystem index {idx!r} out of range for {n_subsystems} subsystems")
    if len(set(indices)) != len(indices):
        raise BadSubsystemIndex(f"Repeated subsystem index in {indices}")
    return [int(i) for i in indices]


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector over a composite space.

    Subnormalized vectors are allowed: they represent unnormalized collapse
    branches whose squared norm is the branch probability.
    """

    amplitudes: np.ndarray
    dims: Tuple[int, ...]
    labels: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise DimensionMismatch(f"{amps.size} amplitudes for dims {dims}")
        norm_sq = float(np.vdot(amps, amps).real)
        if norm_sq > 1.0 + NORM_GUARD_TOL:
            raise NotNormalized(f"Squared norm {norm_sq:.3e} exceeds 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", _check_labels(self.labels, dims))

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "PureState":
        norm = np.sqrt(self.norm_squared)
        if norm == 0.0:
            raise NotNormalized("Cannot normalize the zero vector")
        return PureState(self.amplitudes / norm, self.dims, self.labels)

    def tensor(self, other: "PureState") -> "PureState":
        labels = None
        if self.labels is not None and other.labels is not None:
            labels = self.labels + other.labels
        return PureState(np.kron(self.amplitudes, other.amplitudes), self.dims + other.dims, labels)

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims, self.labels)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive, trace <= 1 operator over a composite space.

    Pass ``check=False`` to skip the eigenvalue validation for matrices that
    were already checked by the caller (e.g. integrator output).
    """

    entries: np.ndarray
    dims: Tuple[int, ...]
    labels: Optional[Tuple[str, ...]] = None
    check: InitVar[bool] = True

    def __post_init__(self, check: bool):
        dims = _check_dims(self.dims)
        d = int(np.prod(dims))
        entries = np.array(self.entries, dtype=complex)
        if entries.shape != (d, d):
            raise DimensionMismatch(f"Matrix of shape {entries.shape} for dims {dims}")
        if check:
            hermitian_dev = float(np.max(np.abs(entries - entries.conj().T)))
            if hermitian_dev > DENSITY_HERMITIAN_TOL:
                raise ValueError(f"Density matrix not Hermitian (deviation {hermitian_dev:.2e})")
            trace = np.trace(entries)
            if abs(trace.imag) > DENSITY_HERMITIAN_TOL or not 0.0 < trace.real <= 1.0 + 1e-10:
                raise ValueError(f"Density matrix trace {trace} outside (0, 1]")
            min_eig = float(sla.eigvalsh(0.5 * (entries + entries.conj().T))[0])
            if min_eig < EIGENVALUE_FLOOR:
                raise ValueError(f"Density matrix has negative eigenvalue {min_eig:.2e}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", _check_labels(self.labels, dims))

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.entries @ self.entries)))

    def expectation(self, op: ComplexMatrix) -> complex:
        return complex(np.trace(np.asarray(op) @ self.entries))

    def tensor(self, other: "DensityMatrix") -> "DensityMatrix":
        labels = None
        if self.labels is not None and other.labels is not None:
            labels = self.labels + other.labels
        return DensityMatrix(np.kron(self.entries, other.entries), self.dims + other.dims, labels, check=False)


def is_hermitian(m: ComplexMatrix, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and float(np.max(np.abs(m - m.conj().T))) <= tol


def is_unitary(u: ComplexMatrix, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


def kron(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    """Kronecker product; result[i*p + k, j*q + l] = a[i, j] * b[k, l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(*factors: ComplexMatrix) -> ComplexMatrix:
    """Left-to-right Kronecker product of every factor."""
    if not factors:
        raise ValueError("kron_all needs at least one factor")
    return reduce(kron, factors)


def hermitian_exp(h: ComplexMatrix, t: float) -> ComplexMatrix:
    """e^{-iht} for an already-validated Hermitian h."""
    h = 0.5 * (h + h.conj().T)
    w, v = sla.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def expm_unitary(h: ComplexMatrix, t: float) -> ComplexMatrix:
    """Compute e^{-iht} through the eigendecomposition of Hermitian h.

    Args:
        h: Hermitian generator.
        t: Evolution time (same units as 1/h).

    Returns:
        Unitary matrix of the same shape as h.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"Generator must be square, got shape {h.shape}")
    deviation = float(np.max(np.abs(h - h.conj().T)))
    if deviation > HERMITIAN_TOL:
        raise NonHermitianInput(f"||h - h^dagger||_max = {deviation:.3e} exceeds {HERMITIAN_TOL:g}")
    return hermitian_exp(h, t)


def partial_trace(rho: Union[DensityMatrix, PureState], keep: Iterable[int]) -> DensityMatrix:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems stay in their original order regardless of the order of
    ``keep``.
    """
    dims = rho.dims
    keep = sorted(_check_indices(keep, len(dims)))
    traced = [i for i in range(len(dims)) if i not in keep]
    kept_dims = tuple(dims[i] for i in keep)
    kept_labels = tuple(rho.labels[i] for i in keep) if rho.labels is not None else None
    d_keep = int(np.prod(kept_dims))

    if isinstance(rho, PureState):
        tensor = np.moveaxis(rho.amplitudes.reshape(dims), keep, list(range(len(keep))))
        flat = tensor.reshape(d_keep, -1)
        return DensityMatrix(flat @ flat.conj().T, kept_dims, kept_labels, check=False)

    tensor = rho.entries.reshape(dims + dims)
    n = len(dims)
    for idx in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=idx, axis2=idx + n)
        n -= 1
    return DensityMatrix(tensor.reshape(d_keep, d_keep), kept_dims, kept_labels, check=False)


def apply_on_subsystems(op: ComplexMatrix, state: PureState, targets: Sequence[int]) -> PureState:
    """Apply ``op`` to the subsystems ``targets`` (in that order), identity elsewhere."""
    targets = _check_indices(targets, len(state.dims))
    sub_dims = tuple(state.dims[i] for i in targets)
    d_sub = int(np.prod(sub_dims))
    op = np.asarray(op, dtype=complex)
    if op.shape != (d_sub, d_sub):
        raise DimensionMismatch(f"Operator of shape {op.shape} cannot act on subsystems with dims {sub_dims}")
    front = list(range(len(targets)))
    tensor = np.moveaxis(state.amplitudes.reshape(state.dims), targets, front)
    rest_shape = tensor.shape[len(targets):]
    flat = op @ tensor.reshape(d_sub, -1)
    tensor = np.moveaxis(flat.reshape(sub_dims + rest_shape), front, targets)
    return PureState(tensor.reshape(-1), state.dims, state.labels)


def fidelity_up_to_phase(a: PureState, b: PureState) -> float:
    """|<a|b>|^2 for normalized pure states; insensitive to global phase."""
    if a.dims != b.dims:
        raise DimensionMismatch(f"Cannot compare states with dims {a.dims} and {b.dims}")
    for name, state in (("a", a), ("b", b)):
        if abs(state.norm_squared - 1.0) > NORM_TOL:
            raise NotNormalized(f"State {name} has squared norm {state.norm_squared:.12g}")
    overlap = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(overlap, 1.0))


def state_fidelity(rho: DensityMatrix, psi: PureState) -> float:
    """<psi|rho|psi> for a mixed state against a pure target."""
    if rho.dims != psi.dims:
        raise DimensionMismatch(f"Cannot compare dims {rho.dims} and {psi.dims}")
    vec = psi.amplitudes
    return float(np.real(np.vdot(vec, rho.entries @ vec)))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.dims != sigma.dims:
        raise DimensionMismatch(f"Cannot compare dims {rho.dims} and {sigma.dims}")
    diff = rho.entries - sigma.entries
    return float(0.5 * np.sum(np.abs(sla.eigvalsh(0.5 * (diff + diff.conj().T)))))
