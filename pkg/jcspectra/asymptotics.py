import math
import logging
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from tqdm import tqdm

from jcspectra.constants import DEFAULT_ORDER_CAP, DEFAULT_TOL_ABS, RESONANCE_TOL, Variant
from jcspectra.errors import NoConvergence, NotResonant
from jcspectra.jacobi import converged_spectrum
from jcspectra.model import ModelParams
from jcspectra.perturbation.kato import as_variant
from jcspectra.perturbation.report import SeriesReport, series_report

logger = logging.getLogger(__name__)

def asymptotic_eigenvalue(m: int, params: ModelParams) -> float:
    return m * params.omega + 1.5 * params.omega0 - params.g**2 / params.omega

def rwa_eigenvalues(m: int, params: ModelParams) -> tuple[float, float]:
    """Resonant rotating-wave pair omega (2m + 2) -+ g sqrt(2m + 1)."""
    if abs(params.omega - params.omega0) > RESONANCE_TOL:
        raise NotResonant(f"omega={params.omega} and omega0={params.omega0} are not resonant")
    center = params.omega * (2 * m + 2)
    half = params.g * math.sqrt(2 * m + 1)
    return center - half, center + half

def dyadic_envelope(values: np.ndarray, starts) -> np.ndarray:
    """max |values[m']| over each block m <= m' < 2m."""
    values = np.abs(np.asarray(values, dtype=float))
    out = []
    for start in starts:
        if 2 * start > values.size:
            raise ValueError(f"block [{start}, {2 * start}) needs {2 * start} values, got {values.size}")
        out.append(values[start : 2 * start].max())
    return np.array(out)

@dataclass(frozen=True)
class SplittingRow:
    m: int
    lambda_lo: float
    lambda_hi: float
    delta: float
    rwa_delta: float | None

@dataclass(frozen=True)
class SplittingTable:
    variant: Variant
    params: ModelParams
    rows: list[SplittingRow]
    converged_upto: int

    def deltas(self) -> np.ndarray:
        return np.array([row.delta for row in self.rows])

def splitting_table(variant, params: ModelParams, m_max: int, tol_abs: float = DEFAULT_TOL_ABS,
                    max_n: int | None = None) -> SplittingTable:
    variant = as_variant(variant)
    top = 2 * m_max + 2
    spectrum = converged_spectrum(variant, params, top, tol_abs, max_n)
    if spectrum.converged_upto < top:
        raise NoConvergence(f"splittings need index {top}, certified only up to {spectrum.converged_upto}")
    resonant = variant is Variant.H2 and abs(params.omega - params.omega0) <= RESONANCE_TOL
    # H1 pairs (2m+1, 2m+2), H2 pairs (2m, 2m+1)
    shift = 1 if variant is Variant.H1 else 0
    rows = []
    for m in range(m_max + 1):
        lo = spectrum.eigenvalues[2 * m + shift]
        hi = spectrum.eigenvalues[2 * m + shift + 1]
        rwa = 2 * params.g * math.sqrt(2 * m + 1) if resonant else None
        rows.append(SplittingRow(m, float(lo), float(hi), float(hi - lo), rwa))
    return SplittingTable(variant, params, rows, spectrum.converged_upto)

def asymptotic_residuals(variant, params: ModelParams, m_max: int, tol_abs: float = DEFAULT_TOL_ABS,
                         max_n: int | None = None) -> np.ndarray:
    """|lambda_exact(m) - asymptotic(m)| for m = 0..m_max."""
    spectrum = converged_spectrum(as_variant(variant), params, m_max, tol_abs, max_n)
    ladder = np.arange(m_max + 1) * params.omega + 1.5 * params.omega0 - params.g**2 / params.omega
    return np.abs(spectrum.eigenvalues - ladder)

def asymptotic_residual_envelope(variant, params: ModelParams, starts, tol_abs: float = DEFAULT_TOL_ABS,
                                 max_n: int | None = None) -> np.ndarray:
    residuals = asymptotic_residuals(variant, params, 2 * max(starts) - 1, tol_abs, max_n)
    return dyadic_envelope(residuals, starts)

@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    lambda_exact: float
    partial_sums: tuple[float, ...]
    remainder_bound: float
    asymptotic: float
    residual_series: float
    residual_asymptotic: float

@dataclass(frozen=True)
class ConvergenceTable:
    variant: Variant
    params: ModelParams
    k_max: int
    rows: list[ConvergenceRow]
    converged_upto: int

def _convergence_row(report: SeriesReport, exact: float) -> ConvergenceRow:
    partial = report.partial_sums[-1]
    asymptotic = asymptotic_eigenvalue(report.m, report.params)
    return ConvergenceRow(
        m=report.m,
        lambda_exact=exact,
        partial_sums=tuple(float(x) for x in report.partial_sums),
        remainder_bound=float(report.remainder_bounds[-1]),
        asymptotic=asymptotic,
        residual_series=abs(exact - partial),
        residual_asymptotic=abs(exact - asymptotic),
    )

def convergence_table(variant, params: ModelParams, m_list, k_max: int, tol_abs: float = DEFAULT_TOL_ABS,
                      max_n: int | None = None, max_workers: int = 4,
                      order_cap: int = DEFAULT_ORDER_CAP, progress: bool = False) -> ConvergenceTable:
    variant = as_variant(variant)
    m_list = [int(m) for m in m_list]
    spectrum = converged_spectrum(variant, params, max(m_list), tol_abs, max_n)

    reports: dict[int, SeriesReport] = {}
    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = {
            executor.submit(series_report, variant, m, params, k_max, order_cap): m
            for m in sorted(set(m_list))
        }
        with tqdm(total=len(futures), dynamic_ncols=True, disable=not progress,
                  desc=f"Series reports [{max_workers} threads]") as pbar:
            for future in as_completed(futures):
                reports[futures[future]] = future.result()
                pbar.update(1)

    rows = [_convergence_row(reports[m], float(spectrum.eigenvalues[m])) for m in m_list]
    return ConvergenceTable(variant, params, k_max, rows, spectrum.converged_upto)
