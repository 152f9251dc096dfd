"""Typed errors raised across the simulator."""
from typing import List, Optional


class NonHermitianInput(ValueError):
    """Generator passed to a unitary exponential is not Hermitian."""


class BadSubsystemIndex(ValueError):
    """Subsystem index outside the state's dimension list."""


class DimensionMismatch(ValueError):
    """Operands live on incompatible Hilbert spaces."""


class NotNormalized(ValueError):
    """A state expected to be normalized is not."""


class InvalidParameters(ValueError):
    """Physical parameters violate their invariants."""


class UnsupportedAtomCount(ValueError):
    """Only pairwise cavity crossings are modeled."""


class StepTooLarge(ValueError):
    """Time step does not resolve the fastest frequency."""


class TimingNotSatisfied(ValueError):
    """Interaction time is off the lambda*t = pi/4, Omega*t = N*pi condition."""


class TruncationTooSevere(ValueError):
    """Fock truncation discards too much thermal population."""


class ZeroProbabilityBranch(ValueError):
    """A measurement branch with no weight cannot be normalized."""


class PositivityLost(RuntimeError):
    """Integrated density matrix acquired a large negative eigenvalue."""


class ConfigParseError(ValueError):
    """Config document could not be read."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{message} (key: {key})" if key else message)


class ConfigValidationError(ValueError):
    """Config values failed validation; carries every violation."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("Invalid configuration:\n  " + "\n  ".join(self.violations))
