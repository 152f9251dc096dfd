"""
Command-line front end.

    teleportsim <mode> [--g F] [--delta F] [--omega F] [--nmax N] [--kappa F] [--nbar F]
                [--samples N] [--seed N] [--config PATH] [--out PATH] [--format csv|json]

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from config import config, setup_logging
from ..core.errors import ConfigParseError, ConfigValidationError, InvalidParameters, TruncationTooSevere
from ..simulation.decoherence import Dissipation
from ..simulation.model import SystemParams
from ..simulation.sweeps import MODES, run_mode
from ..storage.result_writer import write_results

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

Mode = Literal["channel", "teleport", "table1", "full-vs-eff", "decoherence-sweep", "timing-sweep"]

# Short names accepted in config files and used by the flags
ALIASES = {
    "omega": "omega_drive",
    "nmax": "n_max",
    "nbar": "n_bar",
    "gamma": "gamma_atom",
    "samples": "n_samples",
    "points": "sweep_points",
    "out": "output_path",
    "format": "output_format",
}

COLUMNS_HELP = """result columns by mode:
  channel            g, delta, omega_drive, lambda_t, drive_multiple, fidelity, infidelity
  teleport           sample, alpha_re, alpha_im, beta_re, beta_im, outcome, correction, probability, fidelity
  table1             atom1, atom2, correction, probability_mean, probability_max_dev, fidelity_mean, fidelity_min
  full-vs-eff        kind, scale, delta, omega_drive, interaction_time, detuning_ratio, drive_ratio,
                     cavity_fock, fidelity
  decoherence-sweep  n_bar, kappa, gamma_atom, n_max, baseline_fidelity, fidelity, drop,
                     max_trace_error, min_eigenvalue
  timing-sweep       point, lambda_t, t, omega_drive, fidelity
"""


class RunConfig(BaseModel):
    """Validated run settings; flags override the config file, which overrides defaults."""

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False, frozen=True)

    mode: Mode = "channel"
    g: float = Field(config.g, ge=0)
    delta: float = Field(config.delta, gt=0)
    omega_drive: float = Field(config.omega_drive, ge=0)
    n_max: int = Field(config.n_max, ge=1)
    kappa: float = Field(config.kappa, ge=0)
    n_bar: float = Field(config.n_bar, ge=0)
    gamma_atom: float = Field(config.gamma_atom, ge=0)
    n_samples: int = Field(config.n_samples, ge=1)
    seed: int = Field(config.seed, ge=0)
    sweep_points: int = Field(config.sweep_points, ge=3)
    jobs: int = Field(config.jobs, ge=-1)
    output_path: Optional[str] = None
    output_format: Literal["csv", "json"] = config.output_format
    verbose: bool = False

    @field_validator("jobs")
    @classmethod
    def _nonzero_jobs(cls, value: int) -> int:
        if value == 0:
            raise ValueError("jobs must be a positive count or -1")
        return value

    def system_params(self) -> SystemParams:
        return SystemParams(g=self.g, delta=self.delta, omega_drive=self.omega_drive, n_max=self.n_max)

    def dissipation(self) -> Dissipation:
        return Dissipation(kappa=self.kappa, n_bar=self.n_bar, gamma_atom=self.gamma_atom)

    def resolved_output_path(self) -> Path:
        if self.output_path:
            return Path(self.output_path)
        return Path("results") / f"{self.mode}.{self.output_format}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="teleportsim",
        description="Verify atomic teleportation without a Bell-state measurement.",
        epilog=COLUMNS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("mode", nargs="?", choices=MODES, default=None, help="Verification to run (default: channel)")
    p.add_argument("--g", type=float, help="Atom-cavity coupling (unit scale)")
    p.add_argument("--delta", type=float, help="Atom-cavity detuning")
    p.add_argument("--omega", type=float, help="Classical drive Rabi frequency")
    p.add_argument("--nmax", type=int, help="Cavity Fock truncation")
    p.add_argument("--kappa", type=float, help="Cavity decay rate")
    p.add_argument("--nbar", type=float, help="Thermal photon number")
    p.add_argument("--gamma", type=float, help="Atomic spontaneous emission rate")
    p.add_argument("--samples", type=int, help="Number of random inputs")
    p.add_argument("--seed", type=int, help="Random seed")
    p.add_argument("--points", type=int, help="Timing-sweep grid size")
    p.add_argument("--jobs", type=int, help="Parallel workers for sweeps (-1 = all cores)")
    p.add_argument("--config", help="Flat JSON config file")
    p.add_argument("--out", help="Result file path (default results/<mode>.<format>)")
    p.add_argument("--format", choices=("csv", "json"), help="Result file format")
    p.add_argument("-v", "--verbose", action="store_true", default=None, help="Debug logging")
    return p


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a flat JSON object; short aliases are mapped to field names."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"Cannot read config file {path}: {e}")
    if not text.strip():
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"Invalid JSON in {path} at line {e.lineno} column {e.colno}: {e.msg}")
    if not isinstance(data, dict):
        raise ConfigParseError(f"Config file {path} must hold a flat JSON object")

    values = {}
    for key, value in data.items():
        field_name = ALIASES.get(key, key)
        if field_name not in RunConfig.model_fields:
            raise ConfigParseError("Unknown config key", key=key)
        if isinstance(value, (dict, list)):
            raise ConfigParseError("Nested values are not allowed", key=key)
        values[field_name] = value
    return values


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Merge defaults, config file and flags into a validated RunConfig.

    Raises:
        ConfigParseError: unreadable file or unknown key.
        ConfigValidationError: one entry per invalid field.
    """
    args = build_parser().parse_args(argv)
    values: Dict[str, Any] = {}
    if args.config:
        values.update(load_config_file(args.config))

    flags = vars(args)
    flags.pop("config")
    for name, value in flags.items():
        if value is not None:
            values[ALIASES.get(name, name)] = value

    try:
        return RunConfig(**values)
    except ValidationError as exc:
        violations: List[str] = []
        for err in exc.errors():
            location = ".".join(str(part) for part in err["loc"]) or "config"
            violations.append(f"{location}: {err['msg']}")
        raise ConfigValidationError(violations) from exc


def run(run_config: RunConfig) -> int:
    """Execute one mode, write its result file and return the exit code."""
    try:
        result = run_mode(
            run_config.mode,
            run_config.system_params(),
            run_config.dissipation(),
            n_samples=run_config.n_samples,
            seed=run_config.seed,
            sweep_points=run_config.sweep_points,
            jobs=run_config.jobs,
        )
    except (InvalidParameters, TruncationTooSevere) as e:
        logger.error(f"Invalid parameters for {run_config.mode}: {e}")
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.exception(f"Mode {run_config.mode} failed: {e}")
        print(f"FAIL {run_config.mode}: {e}", file=sys.stderr)
        return EXIT_FAILED

    path = write_results(result.records, run_config.resolved_output_path(), run_config.output_format)

    if result.table is not None:
        print(result.table.to_string(index=False, float_format=lambda v: f"{v:.12g}"))
    for key, value in result.summary.items():
        print(f"{key}: {value:.12g}")
    if result.passed:
        print(f"PASS {result.mode} ({len(result.records)} records -> {path})")
        return EXIT_OK
    for failure in result.failures:
        logger.error(failure)
        print(f"  - {failure}")
    print(f"FAIL {result.mode} ({len(result.records)} records -> {path})")
    return EXIT_FAILED


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        run_config = parse_config(argv)
    except (ConfigParseError, ConfigValidationError) as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    setup_logging(config, verbose=run_config.verbose)
    return run(run_config)


if __name__ == "__main__":
    sys.exit(main())
