"""
Run configuration and numeric tolerances.
Config files are plain `key = value` text mirroring RunConfig.
"""

import os
import re
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError


THREADS_ENV = "RULEDMIN_THREADS"


@dataclass(frozen=True)
class Tolerances:
    """Every tolerance used by the geometry modules; override with replace()"""
    jet: float = 1e-9
    lin: float = 1e-8
    frame: float = 1e-8
    minimal: float = 1e-7
    rank: float = 1e-6
    iso: float = 1e-6
    fd_step: float = 1e-4          # frame differentiation
    fd_outer_step: float = 1e-3    # derivatives of connection coefficients
    oracle_step: float = 1e-3      # Hessian of the cone map
    integration: float = 1e-7

    def override(self, **overrides) -> "Tolerances":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"Unknown tolerance(s): {', '.join(sorted(unknown))}")
        return replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class RunConfig:
    """Parameters of one CLI run"""
    surface: str = "equilateral-torus"
    seed: int = 7
    samples: int = 100
    oracle_samples: int = 200
    thetas: List[float] = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5])
    grid: Tuple[int, int] = (64, 64)
    grid_extent: float = 1.0
    report_path: Optional[str] = None
    csv_path: Optional[str] = None
    equivariance: bool = False
    equivariance_grid: Tuple[int, int] = (24, 24)
    tolerances: Tolerances = field(default_factory=Tolerances)

    @property
    def threads(self) -> int:
        try:
            return max(1, int(os.environ.get(THREADS_ENV, "1")))
        except ValueError:
            return 1


class ConfigParser:
    """Parser for `key = value` run configuration files"""

    LINE = re.compile(r'^([A-Za-z_][\w.]*)\s*=\s*(.+?)\s*$')

    def __init__(self, text: str, base: Optional[RunConfig] = None):
        self.text = text
        self.lines = text.split('\n')
        self.config = base if base is not None else RunConfig()
        self.tolerance_overrides: Dict[str, float] = {}

    def parse(self) -> RunConfig:
        for number, raw in enumerate(self.lines, start=1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue

            match = self.LINE.match(line)
            if not match:
                raise ConfigError(f"Invalid syntax at line {number}: {line}")

            key, value = match.group(1), match.group(2).strip().strip('"')
            self._apply(key, value, number)

        if self.tolerance_overrides:
            self.config.tolerances = self.config.tolerances.override(**self.tolerance_overrides)
        return self.config

    def _apply(self, key: str, value: str, number: int):
        try:
            if key.startswith('tol.'):
                self.tolerance_overrides[key[4:]] = float(value)
            elif key == 'surface':
                self.config.surface = value
            elif key == 'seed':
                self.config.seed = int(value)
            elif key == 'samples':
                self.config.samples = int(value)
            elif key == 'oracle_samples':
                self.config.oracle_samples = int(value)
            elif key == 'theta':
                self.config.thetas = parse_theta_list(value)
            elif key == 'grid':
                self.config.grid = parse_grid(value)
            elif key == 'grid_extent':
                self.config.grid_extent = float(value)
            elif key == 'report':
                self.config.report_path = value
            elif key == 'csv':
                self.config.csv_path = value
            elif key == 'equivariance':
                self.config.equivariance = parse_flag(value)
            elif key == 'equivariance_grid':
                self.config.equivariance_grid = parse_grid(value)
            else:
                raise ConfigError(f"Unknown key '{key}' at line {number}")
        except ValueError as exc:
            raise ConfigError(f"Invalid value for '{key}' at line {number}: {value} ({exc})")


def parse_theta_list(text: str) -> List[float]:
    return [float(part) for part in text.split(',') if part.strip()]


def parse_grid(text: str) -> Tuple[int, int]:
    match = re.match(r'^\s*(\d+)\s*[xX]\s*(\d+)\s*$', text)
    if not match:
        raise ValueError(f"grid must look like 64x64, got '{text}'")
    return int(match.group(1)), int(match.group(2))


def parse_flag(text: str) -> bool:
    lowered = text.lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"expected a boolean, got '{text}'")


def load_config(filepath: str, base: Optional[RunConfig] = None) -> RunConfig:
    """Parse a config file and return the RunConfig"""
    with open(filepath, 'r') as f:
        content = f.read()

    return ConfigParser(content, base).parse()
