"""Central configuration for the teleportation simulator."""
import logging
import sys
from dataclasses import dataclass
from typing import Optional


@dataclass
class Config:
    # Physics defaults (g = 1 sets the frequency unit)
    g: float = 1.0
    delta: float = 10.0
    omega_drive: float = 50.0
    n_max: int = 10
    kappa: float = 0.1
    n_bar: float = 1.0
    gamma_atom: float = 0.0

    # Runs
    seed: int = 1
    n_samples: int = 100
    sweep_points: int = 41
    jobs: int = 1
    output_format: str = "csv"
    float_digits: int = 12

    # Acceptance gates
    # Exact effective dynamics: limited by double-precision rounding only
    channel_fidelity_tol: float = 1e-10
    table1_tol: float = 1e-9
    # Full model at g=1, delta=10, Omega=50: the neglected 2*Omega +- delta terms
    # rotate each atom by ~0.04 rad, predicted Haar fidelity ~0.998
    full_model_min_fidelity: float = 0.95
    # Fock |0>, |1>, |2> spread; predicted ~0.012 at delta=20, Omega=200
    photon_number_spread: float = 0.02
    # kappa = 0.1 g: predicted drops 0.011 / 0.021 / 0.032 for n_bar = 0 / 0.5 / 1
    decay_max_drop: float = 0.05
    trace_tol: float = 1e-7
    # Scale applied to delta (and to Omega twice) for the doubled regime
    regime_scale: float = 2.0

    # Logging
    verbose: bool = False
    log_level: str = "INFO"
    log_file: Optional[str] = None


def setup_logging(config: Config, verbose: Optional[bool] = None):
    """Setup centralized logging on stderr (stdout carries result tables)."""
    verbose = config.verbose if verbose is None else verbose
    if verbose:
        level = logging.DEBUG
    else:
        level = getattr(logging, config.log_level.upper(), logging.INFO)

    handlers = [logging.StreamHandler(sys.stderr)]
    if config.log_file:
        handlers.append(logging.FileHandler(config.log_file, encoding='utf-8'))
    logging.basicConfig(level=level, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                        handlers=handlers, force=True)
    logging.getLogger().setLevel(level)

    logger = logging.getLogger(__name__)
    logger.debug(f"Logging configured at {logging.getLevelName(level)}")
    return logger


# Global config instance
config = Config()


if __name__ == "__main__":
    print("=== Configuration Debug ===")
    print(f"Defaults: g={config.g}, delta={config.delta}, omega={config.omega_drive}, n_max={config.n_max}")
    print(f"Decay: kappa={config.kappa}, n_bar={config.n_bar}, gamma_atom={config.gamma_atom}")
    print(f"Gates: full>={config.full_model_min_fidelity}, spread<={config.photon_number_spread}, "
          f"drop<{config.decay_max_drop}")
