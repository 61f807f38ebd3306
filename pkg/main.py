#!/usr/bin/env python3
"""
Holomorphic Dynamics Toolkit

This is the main entry point of the command-line front end. It resolves the
run configuration, dispatches to one of the lyap, scan, density, centers and
verify pipelines, writes the output files next to the echoed configuration
and turns failures into exit codes.
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from core.bifurcation import (
    DensityField, FieldSpec, ParamGrid, ScalarField, bifurcation_measure, boundary_distance, ddc_density,
    mass_outside, scan, scan_activity, wedge_density,
)
from core.config import RunConfig, parse_complex, resolve_config
from core.cycles import CycleRecord, continuation_cycles, cycle_residuals, cycle_table, periodic_cycles, per_n_w
from core.exceptions import ConfigurationError, DynamicsException, NumericError, VerificationError
from core.family import FamilyKind, FamilySpec, create_family
from core.green import sample_green_measure
from core.lyapunov import LyapMethod, cross_validate, estimate, lower_bound, lyap_birkhoff
from core.maps import RationalMapInstance, instantiate
from core.verification import VerificationSuite
from ui.report import ConsoleReport
from utils.export import (
    export_field, read_field_csv, write_config_echo, write_cycles_csv, write_estimates_csv, write_report,
    write_samples_csv, write_table,
)
from utils.platform import cap_workers, ensure_parent_exists, resolve_log_file

# Define version
__version__ = "1.0.0"

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INVALID_INPUT = 2
EXIT_NUMERIC = 3

CENTER_RESIDUAL_WARNING = 1e-6

logger = logging.getLogger(__name__)


class DynamicsApp:
    """Runs one subcommand for a resolved configuration."""

    def __init__(self, config: RunConfig, report: Optional[ConsoleReport] = None):
        """Initialize the application.

        Args:
            config: The resolved run configuration.
            report: Console output; standard output when None.
        """
        self.config = config
        self.report = report or ConsoleReport()
        self.logger = logging.getLogger(__name__)
        self.workers = cap_workers(config.workers)

    @property
    def family(self) -> FamilySpec:
        return FamilySpec.parse(self.config.family)

    @property
    def prefix(self) -> str:
        return self.config.out

    def grid(self) -> ParamGrid:
        return ParamGrid.parse(self.config.grid, self.config.base_point, self.config.grid_coords)

    def run(self) -> int:
        """Dispatch the configured subcommand.

        Returns:
            int: The exit code of the subcommand.
        """
        commands = {
            "lyap": self.cmd_lyap,
            "scan": self.cmd_scan,
            "density": self.cmd_density,
            "centers": self.cmd_centers,
            "verify": self.cmd_verify,
        }
        echo = write_config_echo(self.prefix, self.config)
        self.logger.debug(f"Configuration echoed to {echo}")
        return commands[self.config.subcommand]()

    def cmd_lyap(self) -> int:
        """Run the requested Lyapunov estimators and compare them pairwise.

        Returns:
            int: 0 when every pairwise agreement holds, 1 otherwise.
        """
        config = self.config
        m = instantiate(self.family, config.params)
        estimates = []
        paths = []
        for method in LyapMethod.parse(config.method):
            if method is LyapMethod.BIRKHOFF:
                cloud = sample_green_measure(m, config.samples, burn_in=config.burn_in, seed=config.seed,
                                             n_chains=config.chains, workers=self.workers)
                paths.append(write_samples_csv(f"{self.prefix}.samples.csv", cloud.chart()))
                estimates.append(lyap_birkhoff(m, config.samples, cloud=cloud))
                continue
            estimates.append(estimate(m, method, tol=config.tol, max_iter=config.max_iter, n_max=config.n_max,
                                      root_tol=config.root_tol))
            if method is LyapMethod.CYCLES:
                paths.append(self._write_cycles(m))
        agreements = cross_validate(estimates)
        paths.insert(0, write_estimates_csv(f"{self.prefix}.lyap.csv", estimates))

        title = f"Lyapunov exponent of {self.family} at {', '.join(str(p) for p in m.params)}"
        self.report.display_estimates(title, estimates, agreements, lower_bound(m))
        self.logger.info(f"Wrote {', '.join(paths)}")
        mismatches = [a for a in agreements if not a.ok]
        if mismatches:
            self.logger.warning(f"{len(mismatches)} estimator pair(s) disagree")
            return EXIT_VERIFICATION
        return EXIT_OK

    def _write_cycles(self, m: RationalMapInstance) -> str:
        """Cycle table of every exact period 1..n; periods that do not separate are logged and left out."""
        records: List[CycleRecord] = []
        for period in range(1, self.config.n + 1):
            try:
                records.extend(periodic_cycles(m, period, root_tol=self.config.root_tol))
            except NumericError as e:
                self.logger.warning(f"Period-{period} cycles left out of the table: {e}")
        rows, classes = cycle_table(records)
        return write_cycles_csv(f"{self.prefix}.cycles.csv", rows, classes)

    def _scan_field(self, field_text: str, grid: ParamGrid) -> ScalarField:
        config = self.config
        methods = LyapMethod.parse(config.method)
        if len(methods) != 1:
            raise ConfigurationError("Scans take a single method")
        return scan(self.family, grid, field_text, method=methods[0], tol=config.tol,
                    max_iter=config.max_iter, workers=self.workers, n_max=config.n_max,
                    n_samples=config.samples, seed=config.seed, burn_in=config.burn_in, root_tol=config.root_tol)

    def cmd_scan(self) -> int:
        """Scan a scalar field over the grid and export it as CSV and PGM."""
        field = self._scan_field(self.config.field, self.grid())
        paths = export_field(self.prefix, field)
        self.report.display_field(field, paths)
        return EXIT_OK

    def _density_source(self) -> DensityField:
        config = self.config
        if config.input:
            fields = [read_field_csv(path) for path in config.input.split(",") if path.strip()]
            if len(fields) == 1 and fields[0].grid.dimension == 1:
                return ddc_density(fields[0])
            if len(fields) == 1:
                return bifurcation_measure(fields[0])
            if len(fields) == 2:
                return wedge_density(fields[0], fields[1])
            raise ConfigurationError(f"--in takes one field or two 2-dim fields, got {len(fields)}")

        grid = self.grid()
        if grid.dimension == 1:
            return ddc_density(self._scan_field(config.field, grid))
        if config.wedge:
            try:
                i, j = (int(k) for k in config.wedge.split(","))
            except ValueError:
                raise ConfigurationError(f"--wedge takes two critical point indices i,j, got {config.wedge!r}")
            u = scan_activity(self.family, grid, i, config.tol, config.max_iter, self.workers)
            v = u if j == i else scan_activity(self.family, grid, j, config.tol, config.max_iter, self.workers)
            return wedge_density(u, v)
        field_spec = FieldSpec.parse(config.field)
        if field_spec.kind != "L":
            raise ConfigurationError("2-dim densities without --wedge need the L field")
        return bifurcation_measure(self._scan_field(config.field, grid))

    def _mass_diagnostics(self, density: DensityField) -> Dict[str, float]:
        """Family-specific localisation of the mass, when the grid allows it."""
        extra: Dict[str, float] = {}
        if self.config.input:
            return extra
        spec = self.family
        grid = density.grid
        if spec.kind is FamilyKind.QUADRATIC and grid.dimension == 1:
            near = boundary_distance(grid, self.config.max_iter) <= 0.2
            extra["mass_fraction_far_from_boundary"] = mass_outside(density, near)
        if spec.kind is FamilyKind.POLYCA:
            r_c, r_a = create_family(spec).connectedness_bound()
            params = grid.parameters(spec.parameter_dimension)
            ball = np.all(np.abs(params[..., :-1]) <= r_c, axis=-1) & (np.abs(params[..., -1]) <= r_a)
            extra["mass_fraction_outside_bounding_polydisk"] = mass_outside(density, ball)
        return extra

    def cmd_density(self) -> int:
        """Compute a dd^c or wedge density and report its mass."""
        density = self._density_source()
        extra = self._mass_diagnostics(density)
        paths = export_field(self.prefix, density.as_field())
        summary: Dict[str, Any] = {
            "total_mass": density.total_mass,
            "raw_mass": density.raw_mass,
            "negative_mass_fraction": density.negative_mass_fraction,
            "invalid_cells": int(density.invalid.sum()),
            "invalid_mass": density.invalid_mass,
            **extra,
        }
        paths.append(write_report(f"{self.prefix}.mass.txt", summary))
        self.report.display_density(density, extra, paths)
        return EXIT_OK

    def cmd_centers(self) -> int:
        """Export the parameters of Per_n(w) and the cycle found at each.

        The residual column is recomputed from the exported (c, z) by running
        the orbit of z under z^2 + c.
        """
        config = self.config
        if self.family.kind is not FamilyKind.QUADRATIC:
            raise ConfigurationError("Per_n(w) curves are computed for the quadratic family")
        w = parse_complex(config.w)
        result = per_n_w(config.n, w, root_tol=config.root_tol)
        residuals = cycle_residuals(result.parameters, result.points, config.n, w)
        worst = float(np.max(residuals)) if residuals.size else 0.0
        if worst > CENTER_RESIDUAL_WARNING:
            self.logger.warning(f"Per_{config.n}({w}): recomputed residual {worst:.3e}")
        result = replace(result, residuals=residuals)
        rows = np.column_stack([result.parameters.real, result.parameters.imag,
                                result.points.real, result.points.imag, residuals])
        paths = [write_table(f"{self.prefix}.centers.csv", ["re_c", "im_c", "re_z", "im_z", "residual"], rows)]
        table, classes = cycle_table(continuation_cycles(result, config.n))
        paths.append(write_cycles_csv(f"{self.prefix}.cycles.csv", table, classes))
        self.report.display_centers(config.n, w, result, paths)
        return EXIT_OK

    def cmd_verify(self) -> int:
        """Run the invariant suite.

        Returns:
            int: 0 if every check passed, 1 otherwise.
        """
        config = self.config
        suite = VerificationSuite(config.suite, seed=config.seed, workers=self.workers, tol=config.tol,
                                  max_iter=config.max_iter, wedge_resolution=config.wedge_resolution,
                                  root_tol=config.root_tol, division_tol=config.division_tol)
        results = suite.run()
        summary = {r.name: "pass" if r.passed else "fail" for r in results}
        summary.update({f"{r.name}.flagged": r.flagged for r in results if r.flagged})
        write_report(f"{self.prefix}.verify.txt", summary)
        self.report.display_checks(results)
        failed = [r.name for r in results if not r.passed]
        if failed:
            self.logger.error(f"Verification failed: {', '.join(failed)}")
            return EXIT_VERIFICATION
        return EXIT_OK


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Flags left out stay None so that environment values and defaults apply.

    Returns:
        argparse.Namespace: The parsed command-line arguments.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", help="quadratic, polyca:<d> or mod2")
    common.add_argument("--grid", help="cx,cy,halfw,res[,cx2,cy2,halfw2,res2]")
    common.add_argument("--seed", type=int, help="Unsigned 64-bit seed")
    common.add_argument("--out", help="Output path prefix")
    common.add_argument("--workers", type=int, help="Worker processes")
    common.add_argument("--method", help="formula, cycles, birkhoff or all")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override any configuration key")

    parser = argparse.ArgumentParser(description="Holomorphic dynamics bifurcation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    lyap = subparsers.add_parser("lyap", parents=[common], help="Lyapunov exponent of one map")
    lyap.add_argument("--param", help="Comma-separated complex parameters")
    lyap.add_argument("--n", type=int, help="Largest period in the cycle table of the cycles method")

    for name, text in (("scan", "Scan a scalar field over a grid"),
                       ("density", "dd^c or wedge density of a field")):
        sub = subparsers.add_parser(name, parents=[common], help=text)
        sub.add_argument("--field", help="L, activity:<i>, lnr:<n>:<r> or mandelbrot")
        if name == "density":
            sub.add_argument("--wedge", help="Critical point indices i,j of T_i ^ T_j on a 2-dim grid")
            sub.add_argument("--in", dest="input", help="Field CSV (or two 2-dim field CSVs) to read")

    centers = subparsers.add_parser("centers", parents=[common], help="Parameters of Per_n(w)")
    centers.add_argument("--n", type=int, help="Period")
    centers.add_argument("--w", help="Multiplier as a complex literal")

    verify = subparsers.add_parser("verify", parents=[common], help="Run the invariant suite")
    verify.add_argument("--suite", choices=["quick", "full"], help="Suite size")

    return parser.parse_args(argv)


def setup_logging(config: RunConfig) -> None:
    level = getattr(logging, config.log_level.upper(), None)
    if not isinstance(level, int):
        raise ConfigurationError(f"Unknown log level {config.log_level!r}")
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.log_file:
        path = resolve_log_file(config.log_file)
        ensure_parent_exists(path)
        handlers.append(logging.FileHandler(path, encoding="utf-8"))
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        handlers=handlers, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the application."""
    args = parse_arguments(argv)
    report = ConsoleReport()
    try:
        config = resolve_config({k: v for k, v in vars(args).items() if k != "overrides"}, args.overrides)
        setup_logging(config)
        logger.info(f"dynlab {__version__}: {config.subcommand} for {config.family}")
        return DynamicsApp(config, report).run()
    except ConfigurationError as e:
        report.display_error(str(e))
        return EXIT_INVALID_INPUT
    except VerificationError as e:
        report.display_error(str(e))
        return EXIT_VERIFICATION
    except DynamicsException as e:
        logger.error(f"{type(e).__name__}: {e}")
        report.display_error(f"{type(e).__name__}: {e}")
        return EXIT_NUMERIC
    except OSError as e:
        report.display_error(f"Cannot write output: {e}")
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
