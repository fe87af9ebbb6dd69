import sys
import shlex
import logging
import argparse
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from jcspectra.constants import *
from jcspectra.asymptotics import convergence_table, splitting_table
from jcspectra.checks.suite import InvariantSuite
from jcspectra.errors import ParameterError, SpectraError
from jcspectra.jacobi import converged_spectrum, ladder_index
from jcspectra.model import ModelParams, validate_params
from jcspectra.perturbation.diagnostics import lambda3_bound
from jcspectra.perturbation.report import series_report
from jcspectra.projectors import projector_direct_sum, projector_element
from jcspectra.special_functions import contour_quadrature, overlap_block
from jcspectra.utils import load_file, setup_logger, write_table

PACKAGE_LOGGER = "jcspectra"

HEADERS = {
    Command.SPECTRUM: ["m", "eigenvalue", "ladder_index"],
    Command.OVERLAPS: ["n", "overlap", "contour", "residual", "imag_residue"],
    Command.PROJECTORS: ["k", "m", "closed_form", "direct_sum", "defect", "complement_defect"],
    Command.PERTURB: ["order", "correction", "partial_sum", "remainder_bound", "series_bound", "residual"],
    Command.ASYMPTOTICS: ["m", "lambda_exact", "partial_sum", "remainder_bound", "asymptotic",
                          "residual_series", "residual_asymptotic"],
    Command.SPLITTING: ["m", "lambda_lo", "lambda_hi", "delta", "rwa_delta"],
    Command.VALIDATE: ["check", "status", "value", "threshold", "detail"],
}

class RunConfig(BaseModel):
    """One validated invocation. Physical parameters are checked again by `validate_params`."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    command: Command
    omega: float = 1.0
    omega0: float = 0.0
    g: float = 0.0
    variant: str | None = None
    m: int | None = Field(default=None, ge=0)
    m_max: int | None = Field(default=None, ge=0)
    n_max: int | None = Field(default=None, ge=0)
    k: int | None = Field(default=None, ge=0)
    m_list: list[int] | None = None
    order: int = Field(default=3, ge=0)
    n_sum: int | None = Field(default=None, gt=0)
    quad_points: int = Field(default=QUAD_MIN_POINTS, ge=QUAD_MIN_POINTS, le=QUAD_MAX_POINTS)
    horizon: int | None = Field(default=None, ge=1)
    tol: float = Field(default=DEFAULT_TOL_ABS, gt=0)
    max_n: int | None = Field(default=None, gt=0)
    format: OutputFormat = OutputFormat.CSV
    output: Path | None = None
    max_workers: int = Field(default=4, ge=1)
    log_file: Path | None = None
    grid: Path | None = None

    @property
    def params(self) -> ModelParams:
        return validate_params(self.omega, self.omega0, self.g)

    def meta(self) -> dict:
        meta = {"command": self.command, "params": self.params.as_dict()}
        if self.variant is not None:
            meta["variant"] = self.variant
        return meta

def parse_int_list(value: str) -> list[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}")

def expand_args_from(argv: list[str], parser: argparse.ArgumentParser) -> list[str]:
    """Replace `--args-from FILE` by the flags listed in FILE, placed right after the subcommand."""
    argv = list(argv)
    files = []
    i = 0
    while i < len(argv):
        if argv[i] == "--args-from":
            if i + 1 >= len(argv):
                parser.error("argument --args-from: expected one argument")
            files.append(argv[i + 1])
            del argv[i : i + 2]
        elif argv[i].startswith("--args-from="):
            files.append(argv[i].split("=", 1)[1])
            del argv[i]
        else:
            i += 1
    if not files:
        return argv

    inserted = []
    for file_path in files:
        try:
            lines = load_file(Path(file_path)).splitlines()
        except OSError as e:
            parser.error(f"argument --args-from: cannot read {file_path}: {e.strerror}")
        for line in lines:
            line = line.strip()
            if line and not line.startswith("#"):
                inserted.extend(shlex.split(line))
    position = next((i for i, token in enumerate(argv) if not token.startswith("-")), len(argv))
    return argv[: position + 1] + inserted + argv[position + 1 :]

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--omega", type=float, default=1.0, help="Field frequency (> 0).")
    common.add_argument("--omega0", type=float, default=0.0, help="Atomic frequency (>= 0).")
    common.add_argument("--g", type=float, default=0.0, help="Coupling constant (>= 0).")
    common.add_argument(
        "--format",
        type=str,
        default=OutputFormat.CSV.value,
        choices=[fmt.value for fmt in OutputFormat],
        help="Report format.",
    )
    common.add_argument("--output", type=Path, help="Write the report here instead of standard output.")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL_ABS, help="Absolute eigenvalue tolerance.")
    common.add_argument("--max-n", type=int, help=f"Truncation cap (default ${MAX_N_ENV} or {DEFAULT_MAX_N}).")
    common.add_argument("--max-workers", type=int, default=4, help="Number of threads for parallel work.")
    common.add_argument("--log-file", type=Path, help="Also write the log to this file.")
    common.add_argument("--args-from", type=Path, help="Read additional flags from a file, one per line.")

    parser = argparse.ArgumentParser(
        prog="jc-spectra",
        description="Spectra of the Jaynes-Cummings model without the rotating wave approximation.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    variants = [v.value for v in Variant]

    spectrum = subparsers.add_parser(Command.SPECTRUM.value, parents=[common],
                                     help="Certified eigenvalues of H1, H2 or A0.")
    spectrum.add_argument("--variant", type=str, required=True, choices=[label.value for label in MatrixLabel])
    spectrum.add_argument("--m-max", type=int, required=True, help="Highest eigenvalue index.")

    overlaps = subparsers.add_parser(Command.OVERLAPS.value, parents=[common],
                                     help="Displaced-oscillator overlaps with a contour-quadrature check.")
    overlaps.add_argument("--m", type=int, required=True, help="Column index m of P^(m)_n.")
    overlaps.add_argument("--n-max", type=int, required=True, help="Highest row index n.")
    overlaps.add_argument("--quad-points", type=int, default=QUAD_MIN_POINTS,
                          help="Initial number of quadrature points.")

    projectors = subparsers.add_parser(Command.PROJECTORS.value, parents=[common],
                                       help="Transformed projector element against its parity sum.")
    projectors.add_argument("--variant", type=str, required=True, choices=[p.value for p in ProjectorVariant])
    projectors.add_argument("--k", type=int, required=True, help="Row index.")
    projectors.add_argument("--m", type=int, required=True, help="Column index.")
    projectors.add_argument("--n-sum", type=int, help="Truncation of the parity sum.")

    perturb = subparsers.add_parser(Command.PERTURB.value, parents=[common],
                                    help="Perturbation series in omega0 with remainder bounds.")
    perturb.add_argument("--variant", type=str, required=True, choices=variants)
    perturb.add_argument("--m", type=int, required=True, help="Eigenvalue index.")
    perturb.add_argument("--order", type=int, default=3, help="Highest correction order.")
    perturb.add_argument("--horizon", type=int, help="Search horizon for the m0 certificate.")

    asymptotics = subparsers.add_parser(Command.ASYMPTOTICS.value, parents=[common],
                                        help="Exact eigenvalues against partial sums and the large-m ladder.")
    asymptotics.add_argument("--variant", type=str, required=True, choices=variants)
    asymptotics.add_argument("--m-list", type=parse_int_list, required=True, help="Comma-separated indices.")
    asymptotics.add_argument("--order", type=int, default=3, help="Highest correction order.")

    splitting = subparsers.add_parser(Command.SPLITTING.value, parents=[common],
                                      help="Splittings of neighbouring eigenvalue pairs.")
    splitting.add_argument("--variant", type=str, required=True, choices=variants)
    splitting.add_argument("--m-max", type=int, required=True, help="Highest pair index.")

    validate = subparsers.add_parser(Command.VALIDATE.value, parents=[common],
                                     help="Run the invariant suite and report pass/fail per check.")
    validate.add_argument("--grid", type=Path, help="YAML file with check grids (defaults to the packaged grid).")
    return parser

def make_config(args: argparse.Namespace) -> RunConfig:
    values = {key: value for key, value in vars(args).items() if key != "args_from" and value is not None}
    return RunConfig(**values)

def run_spectrum(config: RunConfig):
    params = config.params
    spectrum = converged_spectrum(config.variant, params, config.m_max, config.tol, config.max_n)
    rows = [[m, lam, ladder_index(config.variant, params, lam)] for m, lam in enumerate(spectrum.eigenvalues)]
    meta = config.meta() | {
        "n_basis": spectrum.truncation.n_basis,
        "converged_upto": spectrum.converged_upto,
        "sturm_certified": spectrum.sturm_certified,
        "tol_abs": config.tol,
    }
    return rows, meta

def run_overlaps(config: RunConfig):
    params = config.params
    ns = np.arange(config.n_max + 1)
    closed = overlap_block(ns, [config.m], params.g, params.omega)[:, 0]
    rows = []
    for n, value in zip(ns, closed):
        contour = contour_quadrature(config.m, int(n), params.g, params.omega, config.quad_points)
        rows.append([int(n), value, contour.value, abs(value - contour.value), contour.imag_residue])
    return rows, config.meta() | {"m": config.m}

def run_projectors(config: RunConfig):
    params = config.params
    k, m = config.k, config.m
    closed = projector_element(config.variant, k, m, params)
    direct = projector_direct_sum(config.variant, k, m, params, config.n_sum)
    both = projector_element(ProjectorVariant.P1, k, m, params) + projector_element(ProjectorVariant.P2, k, m, params)
    row = [k, m, closed, direct, abs(closed - direct), abs(both - float(k == m))]
    return [row], config.meta()

def run_perturb(config: RunConfig):
    params = config.params
    report = series_report(config.variant, config.m, params, config.order, horizon=config.horizon)
    exact = float(converged_spectrum(config.variant, params, config.m, config.tol, config.max_n).eigenvalues[config.m])
    rows = [
        [k, report.corrections[k], report.partial_sums[k], report.remainder_bounds[k],
         report.series_bounds[k], abs(exact - report.partial_sums[k])]
        for k in range(report.k_max + 1)
    ]
    m0 = report.m0
    meta = config.meta() | {
        "m": config.m,
        "lambda_exact": exact,
        "sigma_m": report.sigma_m,
        "t_m": report.t_m,
        "q": report.q,
        "convergent": params.convergent,
        "m0": None if m0 is None else {"m0": m0.m0, "horizon": m0.horizon, "covers_m": m0.covers(config.m)},
        "lambda3_bound": lambda3_bound(config.variant, config.m, params),
        "engine_agreement": report.engine_agreement,
    }
    return rows, meta

def run_asymptotics(config: RunConfig):
    table = convergence_table(config.variant, config.params, config.m_list, config.order, config.tol,
                              config.max_n, config.max_workers, progress=True)
    rows = [
        [row.m, row.lambda_exact, row.partial_sums[-1], row.remainder_bound, row.asymptotic,
         row.residual_series, row.residual_asymptotic]
        for row in table.rows
    ]
    return rows, config.meta() | {"order": config.order, "converged_upto": table.converged_upto}

def run_splitting(config: RunConfig):
    table = splitting_table(config.variant, config.params, config.m_max, config.tol, config.max_n)
    rows = [[row.m, row.lambda_lo, row.lambda_hi, row.delta, row.rwa_delta] for row in table.rows]
    return rows, config.meta() | {"converged_upto": table.converged_upto}

def run_validate(config: RunConfig):
    grid = load_file(config.grid) if config.grid is not None else None
    suite = InvariantSuite(grid)
    suite.run_threadpool(config.max_workers)
    logging.getLogger(PACKAGE_LOGGER).info("\n" + suite.render_summary())
    rows = [[r["check"], r["status"], r["value"], r["threshold"], r["detail"]] for r in suite.ordered_reports()]
    return rows, {"command": config.command} | suite.get_summary()

HANDLERS = {
    Command.SPECTRUM: run_spectrum,
    Command.OVERLAPS: run_overlaps,
    Command.PROJECTORS: run_projectors,
    Command.PERTURB: run_perturb,
    Command.ASYMPTOTICS: run_asymptotics,
    Command.SPLITTING: run_splitting,
    Command.VALIDATE: run_validate,
}

def run(argv: list[str] | None = None) -> int:
    """Parse, compute and emit one report. Returns the process exit code."""
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parser.parse_args(expand_args_from(argv, parser))
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    logger = setup_logger(args.log_file, PACKAGE_LOGGER, args.command, handle_tqdm=True)
    try:
        config = make_config(args)
        validate_params(config.omega, config.omega0, config.g)
    except ValidationError as e:
        logger.error(f"ArgumentError: {e}")
        return 2
    except ParameterError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2

    try:
        rows, meta = HANDLERS[config.command](config)
        write_table(HEADERS[config.command], rows, meta, config.format, config.output)
    except ParameterError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2
    except SpectraError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1
    except (ValueError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2

    if config.command is Command.VALIDATE and not meta["passed"]:
        logger.error(f"Invariant checks failed: {', '.join(meta['failed'])}")
        return 1
    return 0

def cli_main():
    """Entry point for the jc-spectra command."""
    sys.exit(run())

if __name__ == "__main__":
    cli_main()
