"""
Semantic checks on run configurations and catalog declarations
"""

import math
from typing import Dict, List

from .config import RunConfig


class RunConfigValidator:
    """Validates a RunConfig before any geometry is computed"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.errors = []
        self.warnings = []

    def validate(self) -> Dict[str, List[str]]:
        """
        Run all validation checks
        Returns: {'errors': [...], 'warnings': [...]}
        """
        self._validate_surface()
        self._validate_counts()
        self._validate_tolerances()
        self._validate_thetas()
        self._validate_grid()
        self._validate_equivariance()

        return {
            'errors': self.errors,
            'warnings': self.warnings
        }

    def _validate_surface(self):
        from .catalog import CATALOG, catalog_names

        if self.config.surface not in CATALOG:
            self.errors.append(f"Unknown surface '{self.config.surface}' "
                               f"(available: {', '.join(catalog_names())})")

    def _validate_counts(self):
        if self.config.samples < 1:
            self.errors.append(f"samples must be at least 1, got {self.config.samples}")
        if self.config.oracle_samples < 0:
            self.errors.append(f"oracle_samples cannot be negative, got {self.config.oracle_samples}")
        elif 0 < self.config.oracle_samples < 10:
            self.warnings.append("fewer than 10 oracle samples give a weak cross-check")

    def _validate_tolerances(self):
        tol = self.config.tolerances
        for name, value in vars(tol).items():
            if not value > 0.0:
                self.errors.append(f"tolerance '{name}' must be positive, got {value}")

        if tol.fd_step >= tol.fd_outer_step:
            self.warnings.append("fd_step should be smaller than fd_outer_step")

    def _validate_thetas(self):
        if not self.config.thetas:
            self.warnings.append("no theta values given; family-sweep has nothing to do")
        for theta in self.config.thetas:
            if not math.isfinite(theta):
                self.errors.append(f"theta must be finite, got {theta}")
            elif theta < 0.0 or theta >= 2.0 * math.pi:
                self.warnings.append(f"theta {theta} outside [0, 2pi)")

    def _validate_grid(self):
        for label, grid in (('grid', self.config.grid), ('equivariance_grid', self.config.equivariance_grid)):
            if min(grid) < 5:
                self.errors.append(f"{label} needs at least 5 nodes per side, got {grid[0]}x{grid[1]}")
        if not self.config.grid_extent > 0.0:
            self.errors.append(f"grid_extent must be positive, got {self.config.grid_extent}")

    def _validate_equivariance(self):
        from .catalog import CATALOG

        if not self.config.equivariance or self.config.surface not in CATALOG:
            return
        entry = CATALOG[self.config.surface]()
        if not entry.declared.get('pseudoholomorphic', False):
            self.warnings.append(f"equivariance requested on {entry.name}, which is not pseudoholomorphic; "
                                 f"the check will be skipped")


class CatalogVerifier:
    """Compares the flags a catalog entry declares with the ones measured on it"""

    def __init__(self, entry):
        self.entry = entry
        self.errors = []
        self.warnings = []

    def verify(self) -> Dict[str, List[str]]:
        self._verify_measured()
        self._verify_flags()
        self._verify_residuals()

        return {
            'errors': self.errors,
            'warnings': self.warnings
        }

    def _verify_measured(self):
        if not self.entry.measured:
            self.errors.append("entry has not been measured; call certify() first")

    def _verify_flags(self):
        for flag, declared in self.entry.declared.items():
            if flag not in self.entry.measured:
                self.warnings.append(f"flag '{flag}' is declared but not measured")
                continue
            measured = self.entry.measured[flag]
            if measured != declared:
                self.errors.append(f"flag '{flag}' declared {declared} but measured {measured}")

        for flag in self.entry.measured:
            if flag not in self.entry.declared:
                self.warnings.append(f"flag '{flag}' measured but not declared")

    def _verify_residuals(self):
        residuals = self.entry.residuals
        if residuals.get('minimality', 0.0) > 1e-7:
            self.errors.append(f"minimality residual {residuals['minimality']:.3e} above 1e-7")
        if self.entry.declared.get('one_isotropic') and residuals.get('ellipse_gap', 0.0) > 1e-8:
            self.warnings.append(f"ellipse gap {residuals['ellipse_gap']:.3e} is close to the isotropy tolerance")
