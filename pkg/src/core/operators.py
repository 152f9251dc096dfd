"""Atomic and cavity operators in the fixed |e>, |g> / Fock basis."""
from typing import Optional, Sequence

import numpy as np

from .errors import BadSubsystemIndex, DimensionMismatch
from .linalg import ComplexMatrix, PureState, kron_all

LEVELS = ("e", "g")

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)

# S+ = |e><g|, S- = |g><e|
S_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
S_MINUS = S_PLUS.T.copy()
S_Z = 0.5 * SIGMA_Z

for _m in (SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY2, S_PLUS, S_MINUS, S_Z):
    _m.setflags(write=False)


def ket(level: str) -> np.ndarray:
    """Single-atom basis vector for ``"e"`` or ``"g"``."""
    if level not in LEVELS:
        raise ValueError(f"Atomic level must be 'e' or 'g', got {level!r}")
    vec = np.zeros(2, dtype=complex)
    vec[LEVELS.index(level)] = 1.0
    return vec


def basis_state(levels: str, labels: Optional[Sequence[str]] = None) -> PureState:
    """Product state of atoms, e.g. ``basis_state("eg")`` = |e>|g>."""
    if not levels:
        raise ValueError("At least one atomic level is required")
    return PureState(kron_all(*(ket(level) for level in levels)), (2,) * len(levels), labels)


def annihilation(n_max: int) -> ComplexMatrix:
    """Truncated cavity lowering operator on |0>..|n_max>."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def creation(n_max: int) -> ComplexMatrix:
    return annihilation(n_max).conj().T


def number(n_max: int) -> ComplexMatrix:
    return np.diag(np.arange(n_max + 1)).astype(complex)


def fock_state(n: int, n_max: int) -> PureState:
    if not 0 <= n <= n_max:
        raise ValueError(f"Fock level {n} outside 0..{n_max}")
    vec = np.zeros(n_max + 1, dtype=complex)
    vec[n] = 1.0
    return PureState(vec, (n_max + 1,), ("cavity",))


def embed(op: ComplexMatrix, position: int, dims: Sequence[int]) -> ComplexMatrix:
    """Lift a single-subsystem operator to the full space (identity elsewhere)."""
    dims = list(dims)
    if not 0 <= position < len(dims):
        raise BadSubsystemIndex(f"Position {position} outside {len(dims)} subsystems")
    if np.shape(op) != (dims[position], dims[position]):
        raise DimensionMismatch(f"Operator shape {np.shape(op)} does not match dimension {dims[position]}")
    factors = [np.eye(d, dtype=complex) for d in dims]
    factors[position] = np.asarray(op, dtype=complex)
    return kron_all(*factors)
