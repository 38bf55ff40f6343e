#!/usr/bin/env python3
"""
Ruled minimal submanifolds CLI
Runs the verification suites on catalog surfaces and exports sample grids.

Usage:
    ruledmin surface-verify --surface equilateral-torus --seed 7
    ruledmin ruled-verify --surface boruvka-sphere --samples 200
    ruledmin family-sweep --theta 0,0.5,1.0,1.5 --grid 64x64
    ruledmin export --grid 64x64 --csv torus.csv --report torus.json
    ruledmin watch run.cfg --command surface-verify

Exit codes: 0 all checks pass, 1 at least one check fails, 2 usage or config error.
"""

import argparse
import logging
import math
import os
import sys
from typing import Dict, List

import numpy as np

from ruledmin.catalog import load_entry
from ruledmin.config import RunConfig, load_config, parse_grid, parse_theta_list
from ruledmin.errors import CatalogError, ConfigError, GeometryError
from ruledmin.report import Report, at_most, holds, parallel_map, write_csv
from ruledmin.validator import RunConfigValidator

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

EQUIVARIANCE_THETA = math.pi / 4


# Color codes for terminal output
class Colors:
    HEADER = '\033[95m'
    OKBLUE = '\033[94m'
    OKCYAN = '\033[96m'
    OKGREEN = '\033[92m'
    WARNING = '\033[93m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'
    BOLD = '\033[1m'


def print_header(text: str):
    """Print a formatted header"""
    print(f"\n{Colors.HEADER}{Colors.BOLD}{'='*60}{Colors.ENDC}")
    print(f"{Colors.HEADER}{Colors.BOLD}{text:^60}{Colors.ENDC}")
    print(f"{Colors.HEADER}{Colors.BOLD}{'='*60}{Colors.ENDC}\n")


def print_success(text: str):
    print(f"{Colors.OKGREEN}✓ {text}{Colors.ENDC}")


def print_error(text: str):
    print(f"{Colors.FAIL}✗ {text}{Colors.ENDC}")


def print_warning(text: str):
    print(f"{Colors.WARNING}⚠ {text}{Colors.ENDC}")


def print_info(text: str):
    print(f"{Colors.OKCYAN}ℹ {text}{Colors.ENDC}")


def print_step(step: int, total: int, text: str):
    print(f"{Colors.OKBLUE}[{step}/{total}]{Colors.ENDC} {text}")


def build_config(args) -> RunConfig:
    """Config file first, then explicit command-line flags on top"""
    config = RunConfig()
    if getattr(args, 'config', None):
        if not os.path.exists(args.config):
            raise ConfigError(f"Config file not found: {args.config}")
        config = load_config(args.config, config)

    try:
        if args.surface is not None:
            config.surface = args.surface
        if args.seed is not None:
            config.seed = args.seed
        if args.samples is not None:
            config.samples = args.samples
        if args.oracle_samples is not None:
            config.oracle_samples = args.oracle_samples
        if args.theta is not None:
            config.thetas = parse_theta_list(args.theta)
        if args.grid is not None:
            config.grid = parse_grid(args.grid)
        if args.report is not None:
            config.report_path = args.report
        if args.csv is not None:
            config.csv_path = args.csv
        if args.equivariance:
            config.equivariance = True
    except ValueError as exc:
        raise ConfigError(str(exc))
    return config


class RuledVerifyCLI:
    """Runs one command against a validated RunConfig"""

    def __init__(self, config: RunConfig, verbose: bool = False):
        self.config = config
        self.verbose = verbose
        self.tol = config.tolerances

    def _validate(self) -> bool:
        result = RunConfigValidator(self.config).validate()
        for warning in result['warnings']:
            print_warning(f"  {warning}")
        if result['errors']:
            for error in result['errors']:
                print_error(f"  {error}")
            return False
        return True

    def _load(self):
        entry = load_entry(self.config.surface, samples=8, seed=self.config.seed, tol=self.tol)
        print_success(f"Loaded {entry.name} ({entry.provenance})")
        if self.verbose:
            for flag, value in sorted(entry.measured.items()):
                print_info(f"  {flag}: {value}")
        return entry

    def _sweep(self, report: Report, func, items, label: str) -> List[Dict]:
        """Per-point evaluation; geometry errors are recorded as skips"""
        def guarded(indexed):
            index, item = indexed
            try:
                return index, func(item), None
            except GeometryError as exc:
                return index, None, str(exc)

        results = []
        for index, value, error in parallel_map(guarded, list(enumerate(items)), self.config.threads):
            if error is not None:
                report.skip({'sweep': label, 'index': index}, error)
            else:
                results.append(value)
        if self.verbose:
            print_info(f"  {label}: {len(results)} evaluated, {len(items) - len(results)} skipped")
        return results

    def _finish(self, report: Report) -> int:
        for record in sorted(report.records, key=lambda r: r.check_id):
            if record.passed:
                print_success(f"  {record.check_id}: {record.measured}")
            else:
                print_error(f"  {record.check_id}: {record.measured} (tolerance {record.tolerance})")
        if report.skipped:
            print_warning(f"  {len(report.skipped)} point(s) skipped")
        if self.config.report_path:
            report.write(self.config.report_path)
            print_info(f"Report written to {self.config.report_path}")

        print_header("Summary")
        passed = sum(1 for record in report.records if record.passed)
        if report.passed:
            print_success(f"All {passed} check(s) passed")
            return EXIT_OK
        print_error(f"{len(report.failures)} of {len(report.records)} check(s) failed")
        return EXIT_FAIL

    # ------------------------------------------------------------------
    # commands

    def surface_verify(self) -> int:
        from ruledmin.surface import (adapted_frame, conn_residual, curvature_ellipse, dual_fields,
                                      frame_derivatives, gauss_equation_residual, ricci_residuals,
                                      sample_points)

        print_header("Surface verification")
        print_step(1, 3, "Validating configuration...")
        if not self._validate():
            return EXIT_USAGE
        entry = self._load()
        surface, tol = entry.surface, self.tol
        report = Report('surface-verify', self.config)
        report.sections['catalog'] = entry.manifest()
        points = sample_points(surface, self.config.samples, self.config.seed)

        print_step(2, 3, "Checking minimality, curvature and isotropy...")
        report.add(at_most('surface.minimality', 'trace of the second fundamental form vanishes',
                           entry.residuals['minimality'], tol.minimal))
        isotropic = entry.measured['one_isotropic']
        report.add(holds('surface.isotropy', 'curvature ellipse is a circle at every point',
                         isotropic == entry.declared['one_isotropic'], measured=isotropic,
                         declared=entry.declared['one_isotropic'], control=entry.control))
        if entry.declared.get('flat'):
            report.add(at_most('surface.flatness', 'Gauss curvature vanishes', entry.residuals['max_abs_K'], 1e-8))

        ellipses = self._sweep(report, lambda p: curvature_ellipse(surface, p, tol), points, 'ellipse')
        kappas = np.array([e.kappa for e in ellipses])
        mus = np.array([e.mu for e in ellipses])
        report.sections['ellipse'] = {'kappa_min': kappas.min(), 'kappa_max': kappas.max(),
                                      'mu_min': mus.min(), 'mu_max': mus.max()}
        if isotropic:
            report.add(at_most('surface.ellipse_gap', 'kappa = mu', float(np.max(np.abs(kappas - mus))), tol.iso))
        else:
            report.add(holds('surface.ellipse_degenerate', 'control: mu vanishes for the Clifford torus',
                             bool(mus.max() <= 1e-8), measured=float(mus.max())))

        print_step(3, 3, "Checking structure equations...")
        if not (isotropic and entry.measured['substantial']):
            print_info("  structure equations need a substantial 1-isotropic surface; skipped")
            report.skip({'sweep': 'structure'}, 'surface is not substantial and 1-isotropic')
            return self._finish(report)

        def structure(point):
            frame = adapted_frame(surface, point, tol)
            derivs = frame_derivatives(surface, frame, tol)
            return {
                'conn': conn_residual(frame),
                'omegas': dual_fields(frame).omegas_residual,
                'gauss': gauss_equation_residual(frame),
                'ricci': float(np.max(np.abs(ricci_residuals(frame, derivs)))),
                'frame': frame.orthonormality_residual(),
                'kappa1': frame.kappa1,
            }

        rows = self._sweep(report, structure, points, 'structure')
        worst = {key: max(row[key] for row in rows) for key in ('conn', 'omegas', 'gauss', 'ricci', 'frame')}
        radii = [row['kappa1'] for row in rows if row['kappa1'] is not None]
        if radii:
            report.sections['third_ellipse'] = {'kappa1_min': min(radii), 'kappa1_max': max(radii)}
        report.add(at_most('surface.frame', 'adapted frame is orthonormal', worst['frame'], tol.frame))
        report.add(at_most('surface.conn', 'omega_45 = -(1/lambda) *omega_35, omega_46 = -(1/lambda) *omega_36',
                           worst['conn'], 1e-6))
        report.add(at_most('surface.omegas', 'c = -(1/lambda) *a, d = -(1/lambda) *b', worst['omegas'], 1e-6))
        report.add(at_most('surface.gauss_equation', 'K = 1 - kappa^2 - mu^2', worst['gauss'], 1e-6))
        report.add(at_most('surface.ricci', 'flat normal curvature identities for a, b', worst['ricci'], 1e-5))
        return self._finish(report)

    def ruled_verify(self) -> int:
        from ruledmin.ruled import (ConePoint, PointGeometry, cross_section_check, genuineness_ranks,
                                    horizontal_metric, is_singular, length_prediction, nullity_residual,
                                    random_cone_points, second_form_invariants, shape_operators,
                                    shape_operators_fd, singular_scan)
        from ruledmin.surface import sample_points

        print_header("Ruled submanifold verification")
        print_step(1, 4, "Validating configuration...")
        if not self._validate():
            return EXIT_USAGE
        entry = self._load()
        if not entry.measured['one_isotropic']:
            print_error(f"{entry.name} is not 1-isotropic; the cone construction needs a circular ellipse")
            return EXIT_USAGE
        surface, tol, seed = entry.surface, self.tol, self.config.seed
        n = surface.n
        report = Report('ruled-verify', self.config)

        print_step(2, 4, "Scanning the singular set...")
        bases = sample_points(surface, max(1, self.config.samples // 10), seed + 1)
        scan = singular_scan(surface, bases, seed + 1, tol=tol)
        report.add(holds('ruled.singular_scan', 'no point with s = 0 and unit v in the rulings is singular',
                         scan['singular'] == 0, measured=scan['singular'], samples=scan['checked']))
        base = tuple(bases[0])
        vertex = is_singular(surface, ConePoint(0.0, base, np.zeros(n - 2)), tol=tol)
        report.add(holds('ruled.vertex', 'the vertex (0, p, 0) is singular', vertex))

        print_step(3, 4, "Evaluating shape operators...")
        expected_rank = 3 if n == 3 else 4

        def evaluate(cp):
            geo = PointGeometry(surface, cp.p, tol)
            shape = shape_operators(surface, cp, geo, tol)
            inv = second_form_invariants(shape, cp, n, tol=tol)
            scaled = shape_operators(surface, cp.scaled(2.0), geo, tol)
            scaled_norm = second_form_invariants(scaled, cp.scaled(2.0), n, scalar=False, tol=tol).norm_sq
            metric = horizontal_metric(surface, cp, geo, tol)
            row = {
                'norm_sq': inv.norm_sq, 'rank': inv.rank, 'normalized_scalar': inv.normalized_scalar,
                'trace': float(max(abs(np.trace(shape.A_xi)), abs(np.trace(shape.A_eta)))),
                'nullity': nullity_residual(shape, cp, n),
                'homogeneity': abs(scaled_norm - inv.norm_sq / 4.0) / max(inv.norm_sq / 4.0, 1e-300),
                'h': float(np.max(np.abs(shape.h))),
                'metric': float(np.max(np.abs(metric['measured'] - metric['closed_form']))),
                'length': length_prediction(shape, geo.frame, cp),
            }
            if n == 4:
                row['genuine'] = min(genuineness_ranks(shape, tol=tol))
            return row

        cones = random_cone_points(surface, self.config.samples, seed)
        rows = self._sweep(report, evaluate, cones, 'shape')
        norms = np.array([row['norm_sq'] for row in rows])
        report.add(at_most('ruled.trace', 'F_g is minimal: traces of A_xi, A_eta vanish',
                           max(row['trace'] for row in rows), 1e-10))
        report.add(at_most('ruled.nullity', 'the radial direction lies in the relative nullity',
                           max(row['nullity'] for row in rows), 1e-8))
        report.add(at_most('ruled.homogeneity', '|alpha_G|^2 scales as 1/r^2 along rays',
                           max(row['homogeneity'] for row in rows), 1e-6))
        report.add(at_most('ruled.horizontal_metric', 'g_ij of G_* X_i in phi and 1/lambda',
                           max(row['metric'] for row in rows), 1e-8))
        share = float(np.mean([row['rank'] == expected_rank for row in rows]))
        report.add(holds('ruled.rank', f'rank of the second fundamental form is {expected_rank}',
                         share >= 0.99, measured=share, expected_rank=expected_rank))
        if n == 4:
            genuine = min(row['genuine'] for row in rows)
            report.add(holds('ruled.genuineness', 'cos(psi) A_xi + sin(psi) A_eta has rank 4 for all psi',
                             genuine == 4, measured=genuine))

        printed = np.array([row['length']['printed'] for row in rows])
        from_matrices = np.array([row['length']['from_matrices'] for row in rows])
        report.sections['length_audit'] = {
            'norm_sq_mean': norms.mean(), 'norm_sq_std': norms.std(),
            'printed_prediction_mean': printed.mean(), 'matrix_prediction_mean': from_matrices.mean(),
            'matrix_prediction_gap': float(np.max(np.abs(from_matrices - norms))),
        }
        if entry.declared.get('flat'):
            scalars = np.array([row['normalized_scalar'] for row in rows])
            report.add(at_most('ruled.flat_norm', '|alpha_F|^2 is constant over the flat-torus slice',
                               norms.std(), 1e-6, mean=norms.mean(), stated_value=8.0))
            report.add(at_most('ruled.flat_h', 'h_1 = h_2 = 0 on the flat torus',
                               max(row['h'] for row in rows), 1e-6))
            report.add(at_most('ruled.flat_scalar', 'normalized scalar curvature is constant',
                               scalars.std(), 1e-6, mean=scalars.mean(), stated_value=-1.0 / 3.0))

        print_step(4, 4, "Cross-checking against the finite-difference oracle...")
        oracle_points = random_cone_points(surface, self.config.oracle_samples, seed + 2)

        def oracle(cp):
            geo = PointGeometry(surface, cp.p, tol)
            shape = shape_operators(surface, cp, geo, tol)
            fd = shape_operators_fd(surface, cp, geo, tol)
            gap = max(np.max(np.abs(shape.A_xi - fd.A_xi)), np.max(np.abs(shape.A_eta - fd.A_eta)))
            return float(gap), fd.tangent_residual

        if oracle_points:
            checks = self._sweep(report, oracle, oracle_points, 'oracle')
            if checks:
                report.add(at_most('ruled.oracle', 'closed-form shape operators match second derivatives of G',
                                   max(c[0] for c in checks), 1e-4, evaluated=len(checks)))

        sections = self._sweep(report, lambda p: cross_section_check(surface, [p], tol),
                               sample_points(surface, 4, seed + 3), 'cross_section')
        flat = [record for chunk in sections for record in chunk]
        if flat:
            report.add(at_most('ruled.zero_section', 'alpha_F on s = +-1 reproduces +-alpha_g',
                               max(r['tangent_residual'] for r in flat), 1e-8))
            report.add(at_most('ruled.zero_section_ruling', 'ruling column of the oracle equals -s a',
                               max(r['ruling_residual'] for r in flat), 1e-4))
        return self._finish(report)

    def family_sweep(self) -> int:
        from ruledmin.family import (ConnectionCache, equivariance_check, family_isometry_checks,
                                     family_sweep, gauss_compatibility, integrate_surface_family)
        from ruledmin.ruled import PointGeometry, random_cone_points, shape_operators

        print_header("Associated family sweep")
        print_step(1, 4, "Validating configuration...")
        if not self._validate():
            return EXIT_USAGE
        entry = self._load()
        if not entry.measured['one_isotropic']:
            print_error(f"{entry.name} is not 1-isotropic; the associated family needs a circular ellipse")
            return EXIT_USAGE
        surface, tol, config = entry.surface, self.tol, self.config
        report = Report('family-sweep', config)

        print_step(2, 4, "Rotating shape operators...")

        def prepare(cp):
            geo = PointGeometry(surface, cp.p, tol)
            return shape_operators(surface, cp, geo, tol), geo.frame, cp

        samples = self._sweep(report, prepare, random_cone_points(surface, config.samples, config.seed), 'family')
        records = family_sweep(samples, config.thetas, seed=config.seed, tol=tol)
        report.sections['sweep'] = records
        for record in records:
            tag = f"{record['theta']:.6f}"
            report.add(at_most(f'family.forms[{tag}]', 'alpha of G_theta from R_{-theta} alpha_G and beta',
                               record['forms_residual'], 1e-8, printed_form=record['forms_residual_printed']))
            report.add(at_most(f'family.gauss[{tag}]', 'Gauss equation is preserved along the family',
                               record['gauss_residual'], 1e-8))
            report.add(at_most(f'family.normals[{tag}]', '|xi_theta| = |eta_theta| = Omega',
                               record['normal_residual'], 1e-9))
            if record['theta'] == 0.0:
                report.add(holds('family.identity', 'theta = 0 reproduces the base exactly',
                                 record['forms_residual'] == 0.0 and record['gauss_residual'] == 0.0))
        if samples:
            shape, frame, cp = samples[0]
            perturbed = gauss_compatibility(shape, frame, cp, 0.7, kappa_override=1.1 * frame.kappa, tol=tol)
            report.add(holds('family.gauss_control', 'a perturbed kappa breaks the Gauss equation',
                             perturbed > 1e-6, measured=perturbed))

        print_step(3, 4, f"Integrating g_theta on a {config.grid[0]}x{config.grid[1]} grid...")
        connections = ConnectionCache(surface, tol, threads=config.threads)
        for theta in config.thetas:
            tag = f"{theta:.6f}"
            try:
                integrated = integrate_surface_family(surface, theta, config.grid, config.grid_extent,
                                                      connections=connections, tol=tol)
            except GeometryError as exc:
                report.add(holds(f'integration.closure[{tag}]', 'g_theta frame equations integrate', False,
                                 measured=str(exc)))
                continue
            checks = family_isometry_checks(surface, integrated, tol=tol)
            report.add(at_most(f'integration.closure[{tag}]', 'loop closure per grid cell',
                               checks['closure'], tol.integration))
            report.add(at_most(f'integration.metric[{tag}]', 'g_theta is isometric to g', checks['metric'], 1e-6,
                               analytic=checks['metric_analytic']))
            report.add(at_most(f'integration.ellipse[{tag}]', 'ellipse of g_theta is a circle of radius kappa',
                               max(checks['kappa'], checks['circle']), 1e-5))

        print_step(4, 4, "Equivariance...")
        if config.equivariance:
            if entry.measured['pseudoholomorphic']:
                result = equivariance_check(surface, EQUIVARIANCE_THETA, True, seed=config.seed,
                                            grid=config.equivariance_grid, extent=config.grid_extent,
                                            connections=connections, tol=tol)
                report.sections['equivariance'] = result
                report.add(at_most('family.equivariance', 'F_theta is congruent to F_g composed with S_{-theta}',
                                   result['rms'], 1e-4, best_multiplier=result['best_multiplier']))
            else:
                print_warning(f"  {entry.name} is not pseudoholomorphic; equivariance skipped")
                report.skip({'sweep': 'equivariance'}, 'surface is not pseudoholomorphic')
        else:
            print_info("  not requested")
        return self._finish(report)

    def export(self) -> int:
        from ruledmin.catalog import manifest
        from ruledmin.ruled import csv_columns, sample_grid, sample_row

        print_header("Export")
        print_step(1, 2, "Validating configuration...")
        if not self._validate():
            return EXIT_USAGE
        entry = self._load()
        surface, tol, config = entry.surface, self.tol, self.config
        report = Report('export', config)
        report.sections['catalog'] = manifest([entry])

        print_step(2, 2, f"Sampling a {config.grid[0]}x{config.grid[1]} grid...")
        if not entry.measured['one_isotropic']:
            report.add(holds('export.manifest', 'catalog manifest written', True))
        else:
            cones = sample_grid(surface, config.grid, config.seed)
            rows = self._sweep(report, lambda cp: sample_row(surface, cp, tol), cones, 'export')
            csv_path = config.csv_path or f"{surface.name}_samples.csv"
            write_csv(csv_path, csv_columns(surface.n), rows)
            print_success(f"Wrote {len(rows)} row(s) to {csv_path}")
            report.sections['csv'] = {'path': csv_path, 'rows': len(rows),
                                      'singular': sum(1 for row in rows if row['singular'])}
            report.add(holds('export.rows', 'every grid point produced a row', len(rows) == len(cones),
                             measured=len(rows)))
        if not config.report_path:
            config.report_path = f"{surface.name}_report.json"
        return self._finish(report)

    def run(self, command: str) -> int:
        handlers = {
            'surface-verify': self.surface_verify,
            'ruled-verify': self.ruled_verify,
            'family-sweep': self.family_sweep,
            'export': self.export,
        }
        try:
            return handlers[command]()
        except (CatalogError, ConfigError) as exc:
            print_error(str(exc))
            return EXIT_USAGE
        except GeometryError as exc:
            print_error(f"Geometry error: {exc}")
            if self.verbose:
                import traceback
                print(traceback.format_exc())
            return EXIT_USAGE


COMMANDS = ('surface-verify', 'ruled-verify', 'family-sweep', 'export')


def add_run_options(parser: argparse.ArgumentParser):
    parser.add_argument('--surface', '-s', help='Catalog surface name')
    parser.add_argument('--seed', type=int, help='Random seed')
    parser.add_argument('--samples', '-n', type=int, help='Number of sampled points')
    parser.add_argument('--oracle-samples', dest='oracle_samples', type=int,
                        help='Points cross-checked against the finite-difference oracle')
    parser.add_argument('--theta', help='Comma-separated theta values')
    parser.add_argument('--grid', help='Grid size, e.g. 64x64')
    parser.add_argument('--config', '-c', help='Config file (key = value)')
    parser.add_argument('--report', help='JSON report path')
    parser.add_argument('--csv', help='CSV export path')
    parser.add_argument('--equivariance', action='store_true', help='Run the equivariance check')
    parser.add_argument('--verbose', '-v', action='store_true', help='Show debug output')


def run_command(command: str, args) -> int:
    try:
        config = build_config(args)
    except ConfigError as exc:
        print_error(str(exc))
        return EXIT_USAGE
    return RuledVerifyCLI(config, args.verbose).run(command)


def main():
    """Main CLI entry point"""
    parser = argparse.ArgumentParser(
        description='Verify ruled minimal submanifolds built from 1-isotropic surfaces',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  ruledmin surface-verify --surface equilateral-torus --seed 7
  ruledmin ruled-verify --surface equilateral-torus --samples 1000
  ruledmin family-sweep --theta 0,0.5,1.0,1.5
  ruledmin export --grid 64x64 --csv torus.csv
  ruledmin watch run.cfg --command ruled-verify
        """
    )

    subparsers = parser.add_subparsers(dest='command', help='Command to execute')
    for command in COMMANDS:
        add_run_options(subparsers.add_parser(command, help=f'Run {command}'))

    watch_parser = subparsers.add_parser('watch', help='Re-run a command whenever its config file changes')
    watch_parser.add_argument('config_file', help='Config file to watch')
    watch_parser.add_argument('--command', dest='target', choices=COMMANDS, default='surface-verify')
    watch_parser.add_argument('--verbose', '-v', action='store_true', help='Show debug output')

    args = parser.parse_args()

    if not args.command:
        parser.print_help()
        sys.exit(EXIT_USAGE)

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')

    if args.command == 'watch':
        from ruled_watch import watch_config
        sys.exit(watch_config(args.config_file, args.target, args.verbose))

    sys.exit(run_command(args.command, args))


if __name__ == '__main__':
    main()
