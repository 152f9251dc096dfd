"""Core components: state types, linear algebra, operators and errors."""

from .linalg import DensityMatrix, PureState, expm_unitary, fidelity_up_to_phase, kron, partial_trace

__all__ = ["DensityMatrix", "PureState", "expm_unitary", "fidelity_up_to_phase", "kron", "partial_trace"]
