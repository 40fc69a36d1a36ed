"""
Configuration settings for the ringsplit simulator.

Holds project paths, the default physical and numerical constants, logging
setup, and the run configuration model together with its text grammar:

    # comment
    [physical]
    a12 = 0.3          # units of a11
    [trap]
    r0 = 12            # units of a_perp

Every key name is unique across sections, so a key may also appear before
the first section header.
"""

import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ringsplit.exceptions import ConfigError

# Project paths
OUTPUT_DIR = Path("ringsplit_output")

# Physical settings (85Rb / 87Rb mixture)
DEFAULT_M1 = 85.0  # a.u.
DEFAULT_M2 = 87.0  # a.u.
DEFAULT_N = 1000.0
DEFAULT_A11 = 2.698e-9  # m
DEFAULT_A22 = 2.698e-9  # m
DEFAULT_A12 = 0.0  # units of a11
DEFAULT_OMEGA_PERP = 2.0 * math.pi * 130.0  # rad/s
DEFAULT_ASPECT_RATIO = 1.0

# Trap settings, lengths in a_perp
DEFAULT_R0 = 12.0
DEFAULT_D0 = 0.75
DEFAULT_OMEGA = 0.1  # omega_r / omega_perp

# Numerical settings
DEFAULT_GRID_POINTS = 512
DEFAULT_GRID_STEP = 0.1841
DEFAULT_DT = 0.0915  # 1/omega_perp
DEFAULT_N_STEPS = 16384
DEFAULT_SAMPLE_EVERY = 1

# Sweep settings
DEFAULT_SWEEP_R0 = [10.0, 11.0, 12.0, 13.0, 14.0]
DEFAULT_SWEEP_A12 = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6]
DEFAULT_CONTOUR_LEVELS = [0.90, 0.95, 0.98]
SEPARABILITY_LABELS = ("S_1/2", "S_1", "S_3/2", "S_2")

# Logging configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
THREADS_ENV_VAR = "RINGSPLIT_THREADS"


def setup_logging():
    """Configure logging for the package."""
    logging.basicConfig(
        level=getattr(logging, LOG_LEVEL, logging.INFO),
        format=LOG_FORMAT,
        datefmt="%Y-%m-%d %H:%M:%S"
    )

    logger = logging.getLogger("ringsplit")
    return logger


# Create default logger
logger = setup_logging()


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class PhysicalSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    m1: float = Field(DEFAULT_M1, gt=0, description="Atomic mass of species 1 [a.u.]")
    m2: float = Field(DEFAULT_M2, gt=0, description="Atomic mass of species 2 [a.u.]")
    N1: float = Field(DEFAULT_N, gt=0, description="Atom count of species 1")
    N2: float = Field(DEFAULT_N, gt=0, description="Atom count of species 2")
    a11: float = Field(DEFAULT_A11, allow_inf_nan=False, description="Intraspecies scattering length [m]")
    a22: float = Field(DEFAULT_A22, allow_inf_nan=False, description="Intraspecies scattering length [m]")
    a12: float = Field(DEFAULT_A12, ge=0, allow_inf_nan=False, description="Interspecies scattering length [units of a11]")
    omega_perp: float = Field(DEFAULT_OMEGA_PERP, gt=0, description="Transverse trap angular frequency [rad/s]")
    aspect_ratio: float = Field(DEFAULT_ASPECT_RATIO, gt=0, alias="lambda",
                                description="Trap aspect ratio entering g_ij [dimensionless]")


class TrapSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    r0: float = Field(DEFAULT_R0, gt=0, description="Ring radius [a_perp]")
    d0: float = Field(DEFAULT_D0, gt=0, description="Initial peak waist [a_perp]")
    omega: float = Field(DEFAULT_OMEGA, gt=0, description="Radial frequency omega_r/omega_perp")
    sigma: Optional[float] = Field(None, gt=0, description="Gaussian spike waist [a_perp]; defaults to r0")
    V0: Optional[float] = Field(None, gt=0, description="Spike amplitude [hbar omega_perp]; calibrated when unset")


class NumericsSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    n: int = Field(DEFAULT_GRID_POINTS, ge=8, description="Grid points per axis (power of two)")
    step: float = Field(DEFAULT_GRID_STEP, gt=0, description="Grid spacing [a_perp]")
    dt: float = Field(DEFAULT_DT, gt=0, description="Time step [1/omega_perp]")
    n_steps: int = Field(DEFAULT_N_STEPS, ge=0, description="Number of time steps")
    sample_every: int = Field(DEFAULT_SAMPLE_EVERY, ge=1, description="Steps between observable samples")
    threads: Optional[int] = Field(None, ge=1, description="Worker threads/processes")
    seed: int = Field(0, description="Reserved; the dynamics are deterministic")


class SweepSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    r0_values: List[float] = Field(default_factory=lambda: list(DEFAULT_SWEEP_R0),
                                   description="Ring radii to sweep [a_perp]")
    a12_values: List[float] = Field(default_factory=lambda: list(DEFAULT_SWEEP_A12),
                                    description="Interspecies scattering lengths to sweep [units of a11]")
    target: Literal["S_1/2", "S_1", "S_3/2", "S_2"] = Field("S_1", description="Separability peak to map")
    levels: List[float] = Field(default_factory=lambda: list(DEFAULT_CONTOUR_LEVELS),
                                description="Contour levels [fraction]")

    @field_validator("r0_values", "a12_values", "levels", mode="before")
    @classmethod
    def split_lists(cls, value: Any) -> Any:
        return _split_list(value)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    out_dir: str = Field(str(OUTPUT_DIR), description="Output directory")
    snapshot_times: List[float] = Field(default_factory=list, description="Snapshot times [1/omega_perp]")
    snapshot_seconds: List[float] = Field(default_factory=list, description="Snapshot times [s]")

    @field_validator("snapshot_times", "snapshot_seconds", mode="before")
    @classmethod
    def split_lists(cls, value: Any) -> Any:
        return _split_list(value)


SECTIONS = {
    "physical": PhysicalSection,
    "trap": TrapSection,
    "numerics": NumericsSection,
    "sweep": SweepSection,
    "output": OutputSection,
}


def _section_keys(model: type) -> List[str]:
    return [field.alias or name for name, field in model.model_fields.items()]


KEY_TO_SECTION = {key: section for section, model in SECTIONS.items() for key in _section_keys(model)}


class RunConfig(BaseModel):
    """Fully resolved run configuration."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    physical: PhysicalSection = Field(default_factory=PhysicalSection)
    trap: TrapSection = Field(default_factory=TrapSection)
    numerics: NumericsSection = Field(default_factory=NumericsSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @property
    def sigma(self) -> float:
        return self.trap.sigma if self.trap.sigma is not None else self.trap.r0

    def override(self, **updates: Any) -> "RunConfig":
        """Return a validated copy with flat ``key=value`` updates applied."""
        data = self.model_dump(by_alias=True)
        problems = []
        for key, value in updates.items():
            section = KEY_TO_SECTION.get(key)
            if section is None:
                problems.append((0, f"unknown key '{key}'"))
                continue
            data[section][key] = value
        if problems:
            raise ConfigError(problems)
        try:
            config = RunConfig.model_validate(data)
        except ValidationError as e:
            raise ConfigError([(0, _describe(err)) for err in e.errors()])
        _check_consistency(config, {}, problems)
        if problems:
            raise ConfigError(problems)
        return config


def _describe(err: Dict[str, Any], section: Optional[str] = None) -> str:
    loc = [str(part) for part in err.get("loc", ()) if not isinstance(part, int)]
    key = loc[-1] if loc else "value"
    ctx = err.get("ctx", {})
    kind = err.get("type")
    if kind == "greater_than" and ctx.get("gt") == 0:
        return f"{key} must be positive"
    if kind == "greater_than_equal" and ctx.get("ge") == 0:
        return f"{key} must be non-negative"
    if kind == "greater_than_equal":
        return f"{key} must be >= {ctx.get('ge')}"
    if kind == "extra_forbidden":
        where = f" in [{section}]" if section else ""
        return f"unknown key '{key}'{where}"
    if kind == "missing":
        return f"missing required key '{key}'"
    return f"{key}: {err.get('msg')}"


def _check_consistency(config: RunConfig, key_lines: Dict[str, int], problems: List[Tuple[int, str]]):
    n, step = config.numerics.n, config.numerics.step
    line = key_lines.get("r0") or key_lines.get("n") or key_lines.get("step") or 0
    if n & (n - 1):
        problems.append((key_lines.get("n", 0), f"n must be a power of two, got {n}"))
    if n * step < 4.0 * config.trap.r0:
        problems.append((line, f"grid extent {n * step:.4g} is smaller than 4*r0 = {4.0 * config.trap.r0:.4g}"))
    if config.trap.d0 < 3.0 * step:
        problems.append((key_lines.get("d0") or key_lines.get("step", 0),
                         f"d0 = {config.trap.d0} is under-resolved; need d0 >= 3*step = {3.0 * step:.4g}"))
    for level in config.sweep.levels:
        if not 0.0 < level < 1.0:
            problems.append((key_lines.get("levels", 0), f"contour level {level} must lie in (0, 1)"))


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text; defaults fill missing keys."""
    values: Dict[str, Dict[str, str]] = {name: {} for name in SECTIONS}
    key_lines: Dict[str, int] = {}
    problems: List[Tuple[int, str]] = []
    current: Optional[str] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            name = line.strip("[]").strip()
            if not line.endswith("]") or name not in SECTIONS:
                problems.append((lineno, f"unknown section '{line}'"))
                current = None
                continue
            current = name
            continue
        if "=" not in line:
            problems.append((lineno, f"expected 'key = value', got '{line}'"))
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        owner = KEY_TO_SECTION.get(key)
        if owner is None:
            where = f" in [{current}]" if current else ""
            problems.append((lineno, f"unknown key '{key}'{where}"))
            continue
        if current is not None and owner != current:
            problems.append((lineno, f"key '{key}' belongs in [{owner}], not [{current}]"))
            continue
        if key in key_lines:
            problems.append((lineno, f"duplicate key '{key}' (first set on line {key_lines[key]})"))
            continue
        values[owner][key] = value
        key_lines[key] = lineno

    sections: Dict[str, BaseModel] = {}
    for name, model in SECTIONS.items():
        try:
            sections[name] = model.model_validate(values[name])
        except ValidationError as e:
            for err in e.errors():
                key = next((str(p) for p in reversed(err.get("loc", ())) if not isinstance(p, int)), "")
                problems.append((key_lines.get(key, 0), _describe(err, name)))

    if problems:
        raise ConfigError(problems)

    config = RunConfig(**sections)
    _check_consistency(config, key_lines, problems)
    if problems:
        raise ConfigError(problems)

    logger.debug(f"Parsed configuration with {len(key_lines)} explicit keys")
    return config


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(item) for item in value)
    return str(value)


def render_config(config: RunConfig) -> str:
    """Render a config in the grammar accepted by :func:`parse_config`."""
    lines = []
    dumped = config.model_dump(by_alias=True)
    for name in SECTIONS:
        lines.append(f"[{name}]")
        for key, value in dumped[name].items():
            if value is None:
                continue
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    return "\n".join(lines)


def load_config(path: Optional[Path]) -> RunConfig:
    """Load a config file, or the all-defaults config when ``path`` is None."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        logger.error(f"Failed to read config file {path}: {str(e)}")
        raise ConfigError([(0, f"cannot read {path}: {e}")])
    return parse_config(text)


def resolve_threads(cli_value: Optional[int] = None, config: Optional[RunConfig] = None) -> int:
    """Thread count from ``--threads``, then RINGSPLIT_THREADS, then the config."""
    if cli_value is not None:
        return max(1, int(cli_value))
    env_value = os.getenv(THREADS_ENV_VAR)
    if env_value:
        try:
            return max(1, int(env_value))
        except ValueError:
            logger.warning(f"⚠️ Ignoring non-integer {THREADS_ENV_VAR}={env_value!r}")
    if config is not None and config.numerics.threads is not None:
        return config.numerics.threads
    return 1
