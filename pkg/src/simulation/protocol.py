"""Teleportation of an unknown atomic state without a Bell-state measurement.

Atoms 2 and 3 first cross the driven cavity together and leave in the
channel state (|ee> + i|gg>)/sqrt(2). Atom 1 (carrying the unknown state)
then crosses with atom 2, both are measured in the |e>/|g> product basis and
the receiver applies one of I, sigma_z, sigma_y, sigma_x to atom 3.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from ..core.errors import DimensionMismatch, InvalidParameters, NotNormalized, ZeroProbabilityBranch
from ..core.linalg import DensityMatrix, PureState, apply_on_subsystems, fidelity_up_to_phase
from ..core.operators import IDENTITY2, LEVELS, SIGMA_X, SIGMA_Y, SIGMA_Z, basis_state
from .model import SystemParams, check_protocol_timing, effective_propagator, interaction_time

logger = logging.getLogger(__name__)

# Measurement results of atoms 1, 2 in the order they are tabulated
OUTCOME_ORDER = ("ee", "gg", "eg", "ge")
CHANNEL_LABELS = ("atom2", "atom3")
JOINT_LABELS = ("atom1", "atom2", "atom3")
RECEIVER_LABELS = ("atom3",)
QUBIT_NORM_TOL = 1e-10
MIN_BRANCH_PROBABILITY = 1e-15


@dataclass(frozen=True)
class UnknownQubit:
    """alpha|e> + beta|g>, the state carried by atom 1."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        alpha, beta = complex(self.alpha), complex(self.beta)
        norm_sq = abs(alpha) ** 2 + abs(beta) ** 2
        if abs(norm_sq - 1.0) > QUBIT_NORM_TOL:
            raise NotNormalized(f"|alpha|^2 + |beta|^2 = {norm_sq:.12g}")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def as_state(self, label: str = "atom1") -> PureState:
        return PureState(self.vector, (2,), (label,))


class Correction(str, Enum):
    I = "I"
    SIGMA_Z = "sigma_z"
    SIGMA_Y = "sigma_y"
    SIGMA_X = "sigma_x"

    @property
    def matrix(self) -> np.ndarray:
        return _CORRECTION_MATRICES[self]


_CORRECTION_MATRICES = {
    Correction.I: IDENTITY2,
    Correction.SIGMA_Z: SIGMA_Z,
    Correction.SIGMA_Y: SIGMA_Y,
    Correction.SIGMA_X: SIGMA_X,
}

_CORRECTION_TABLE = {
    ("e", "e"): Correction.I,
    ("g", "g"): Correction.SIGMA_Z,
    ("e", "g"): Correction.SIGMA_Y,
    ("g", "e"): Correction.SIGMA_X,
}


@dataclass(frozen=True, eq=False)
class MeasurementOutcome:
    """One product-basis result for atoms 1, 2 with the unnormalized atom-3 branch."""

    atom1: str
    atom2: str
    probability: float
    collapsed_state: PureState

    @property
    def label(self) -> str:
        return self.atom1 + self.atom2


@dataclass(frozen=True, eq=False)
class TeleportResult:
    outcome: MeasurementOutcome
    correction_applied: Correction
    final_state: PureState
    fidelity: float


@dataclass(frozen=True)
class BranchScore:
    outcome: str
    correction: Correction
    probability: float
    fidelity: float


def channel_target() -> PureState:
    """(|ee> + i|gg>)/sqrt(2) on atoms 2, 3."""
    amplitudes = (basis_state("ee").amplitudes + 1j * basis_state("gg").amplitudes) / math.sqrt(2)
    return PureState(amplitudes, (2, 2), CHANNEL_LABELS)


def _resolve_time(p: SystemParams, t: Optional[float], strict: bool) -> float:
    t = interaction_time(p) if t is None else t
    if t < 0:
        raise InvalidParameters(f"t must be >= 0, got {t}")
    if strict:
        check_protocol_timing(p, t)
    return t


def generate_channel(p: SystemParams, t: Optional[float] = None, strict: bool = True) -> PureState:
    """Evolve |gg> of atoms 2, 3 through the effective dynamics.

    At lambda*t = pi/4 and Omega*t = N*pi the result is the channel state up
    to a global phase. ``strict=False`` allows any t (e.g. for timing sweeps).
    """
    t = _resolve_time(p, t, strict)
    if not strict:
        logger.warning(f"Generating channel at unchecked time t={t:.6g}")
    u = effective_propagator(p, t)
    return PureState(u @ basis_state("gg").amplitudes, (2, 2), CHANNEL_LABELS)


def teleport_evolution(q: UnknownQubit, channel: PureState, p: SystemParams,
                       t: Optional[float] = None, strict: bool = True) -> PureState:
    """Send atoms 1 and 2 through the cavity; atom 3 stays with the receiver."""
    if channel.dims != (2, 2):
        raise DimensionMismatch(f"Channel must be a two-atom state, got dims {channel.dims}")
    t = _resolve_time(p, t, strict)
    joint = PureState(np.kron(q.vector, channel.amplitudes), (2, 2, 2), JOINT_LABELS)
    return apply_on_subsystems(effective_propagator(p, t), joint, (0, 1))


def measure_and_collapse(joint: PureState) -> List[MeasurementOutcome]:
    """Project atoms 1, 2 onto |ee>, |gg>, |eg>, |ge>; branches stay unnormalized."""
    if joint.dims != (2, 2, 2):
        raise DimensionMismatch(f"Expected a three-atom state, got dims {joint.dims}")
    amplitudes = joint.amplitudes.reshape(2, 2, 2)
    outcomes = []
    for label in OUTCOME_ORDER:
        branch = amplitudes[LEVELS.index(label[0]), LEVELS.index(label[1]), :]
        probability = float(np.vdot(branch, branch).real)
        outcomes.append(MeasurementOutcome(label[0], label[1], probability,
                                           PureState(branch, (2,), RECEIVER_LABELS)))
    return outcomes


def correction_for_outcome(atom1: str, atom2: str) -> Correction:
    try:
        return _CORRECTION_TABLE[(atom1, atom2)]
    except KeyError:
        raise ValueError(f"Atomic levels must be 'e' or 'g', got ({atom1!r}, {atom2!r})") from None


def apply_correction(outcome: MeasurementOutcome) -> PureState:
    """Normalize the collapsed branch and apply the receiver's Pauli correction."""
    if outcome.probability < MIN_BRANCH_PROBABILITY:
        raise ZeroProbabilityBranch(f"Outcome {outcome.label} has probability {outcome.probability:.3e}")
    correction = correction_for_outcome(outcome.atom1, outcome.atom2)
    corrected = correction.matrix @ outcome.collapsed_state.amplitudes / math.sqrt(outcome.probability)
    return PureState(corrected, (2,), RECEIVER_LABELS)


def _score(q: UnknownQubit, outcome: MeasurementOutcome) -> TeleportResult:
    final_state = apply_correction(outcome)
    return TeleportResult(
        outcome=outcome,
        correction_applied=correction_for_outcome(outcome.atom1, outcome.atom2),
        final_state=final_state,
        fidelity=fidelity_up_to_phase(final_state, q.as_state("atom3")),
    )


def run_protocol(q: UnknownQubit, p: SystemParams, rng_seed: int,
                 forced_outcome: Optional[str] = None) -> TeleportResult:
    """Full protocol at exact timing with one sampled (or forced) measurement result."""
    joint = teleport_evolution(q, generate_channel(p), p)
    outcomes = measure_and_collapse(joint)
    if forced_outcome is not None:
        if forced_outcome not in OUTCOME_ORDER:
            raise ValueError(f"forced_outcome must be one of {OUTCOME_ORDER}, got {forced_outcome!r}")
        chosen = outcomes[OUTCOME_ORDER.index(forced_outcome)]
    else:
        rng = np.random.default_rng(rng_seed)
        probabilities = np.array([o.probability for o in outcomes])
        chosen = outcomes[rng.choice(len(outcomes), p=probabilities / probabilities.sum())]
    result = _score(q, chosen)
    logger.debug(f"Outcome {chosen.label} (p={chosen.probability:.6f}), "
                 f"{result.correction_applied.value}, fidelity {result.fidelity:.12f}")
    return result


def teleport_all_branches(q: UnknownQubit, p: SystemParams, t: Optional[float] = None,
                          strict: bool = True, channel: Optional[PureState] = None) -> List[TeleportResult]:
    """Score every measurement branch with nonzero weight.

    ``t`` is the teleport-leg time; the channel defaults to the one
    generated at exact timing.
    """
    channel = generate_channel(p) if channel is None else channel
    joint = teleport_evolution(q, channel, p, t=t, strict=strict)
    return [_score(q, o) for o in measure_and_collapse(joint) if o.probability >= MIN_BRANCH_PROBABILITY]


def weighted_fidelity(results: Sequence[TeleportResult]) -> float:
    return float(sum(r.outcome.probability * r.fidelity for r in results))


def sample_outcomes(q: UnknownQubit, p: SystemParams, n: int, seed: int) -> np.ndarray:
    """Counts of n sampled measurement results, in OUTCOME_ORDER."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    outcomes = measure_and_collapse(teleport_evolution(q, generate_channel(p), p))
    probabilities = np.array([o.probability for o in outcomes])
    draws = np.random.default_rng(seed).choice(len(outcomes), size=n, p=probabilities / probabilities.sum())
    return np.bincount(draws, minlength=len(outcomes))


def sample_unknown_qubits(n: int, seed: int) -> List[UnknownQubit]:
    """Haar-uniform qubits from normalized complex Gaussian pairs."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    raw = np.random.default_rng(seed).standard_normal((n, 4))
    pairs = raw[:, 0::2] + 1j * raw[:, 1::2]
    pairs /= np.linalg.norm(pairs, axis=1, keepdims=True)
    return [UnknownQubit(alpha, beta) for alpha, beta in pairs]


def sample_unknown_qubit(rng_seed: int) -> UnknownQubit:
    return sample_unknown_qubits(1, rng_seed)[0]


def cardinal_qubits() -> List[UnknownQubit]:
    """The six +-x, +-y, +-z eigenstates.

    They form a spherical 3-design, so averages of fidelities over them equal
    the Haar average.
    """
    r = 1 / math.sqrt(2)
    return [
        UnknownQubit(1, 0), UnknownQubit(0, 1),
        UnknownQubit(r, r), UnknownQubit(r, -r),
        UnknownQubit(r, 1j * r), UnknownQubit(r, -1j * r),
    ]


def score_density_branches(rho_atoms: DensityMatrix, q: UnknownQubit) -> List[BranchScore]:
    """Measure atoms 1, 2 of a mixed three-atom state and score each corrected branch."""
    if rho_atoms.dims != (2, 2, 2):
        raise DimensionMismatch(f"Expected a three-atom density matrix, got dims {rho_atoms.dims}")
    blocks = rho_atoms.entries.reshape((2,) * 6)
    target = q.vector
    scores = []
    for label in OUTCOME_ORDER:
        i, j = LEVELS.index(label[0]), LEVELS.index(label[1])
        block = blocks[i, j, :, i, j, :]
        probability = float(np.real(np.trace(block)))
        correction = correction_for_outcome(label[0], label[1])
        fidelity = 0.0
        if probability >= MIN_BRANCH_PROBABILITY:
            corrected = correction.matrix @ block @ correction.matrix.conj().T / probability
            fidelity = float(np.real(np.vdot(target, corrected @ target)))
        scores.append(BranchScore(label, correction, probability, fidelity))
    return scores
