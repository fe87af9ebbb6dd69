import logging
from typing import TypedDict
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from jinja2 import Template
from tqdm import tqdm

from jcspectra.constants import *
from jcspectra.asymptotics import asymptotic_residual_envelope, dyadic_envelope, splitting_table
from jcspectra.checks.templates import SUMMARY_TEMPLATE
from jcspectra.jacobi import build_matrix, converged_spectrum, dense_eig_oracle, eigenvalues_sturm
from jcspectra.model import validate_params
from jcspectra.perturbation.diagnostics import f_m, hardy_diagnostics, sigma_m
from jcspectra.perturbation.kato import (
    compositions,
    count_compositions,
    kato_correction,
    lambda1,
    lambda2,
    lambda3,
)
from jcspectra.perturbation.report import series_report
from jcspectra.projectors import (
    bu_identity_defect,
    idempotency_defect,
    projector_block,
    projector_direct_matrix,
)
from jcspectra.special_functions import (
    displaced_overlap,
    displaced_overlap_contour,
    laguerre,
    laguerre_asymptotic,
    laguerre_envelope,
    overlap_matrix,
)
from jcspectra.utils import load_file

logger = logging.getLogger(__name__)

class CheckReport(TypedDict):
    check: str
    status: str
    value: float
    threshold: float
    detail: str

def _report(check: str, value: float, threshold: float, passed: bool, detail: str) -> CheckReport:
    status = CheckStatus.PASS if passed else CheckStatus.FAIL
    return CheckReport(check=check, status=status.value, value=float(value),
                       threshold=float(threshold), detail=detail)

def _strictly_decreasing(values: np.ndarray) -> bool:
    return bool(np.all(np.diff(values) < 0))

def check_eigensolver_oracle(grid: dict) -> CheckReport:
    worst = 0.0
    for n in grid["n_values"]:
        for g in grid["g_values"]:
            for omega0 in grid["omega0_values"]:
                params = validate_params(1.0, omega0, g)
                for label in MatrixLabel:
                    t = build_matrix(label, params, n)
                    sturm = eigenvalues_sturm(t, 0, n - 1, tol_abs=1e-13)
                    dense = dense_eig_oracle(t).eigenvalues
                    worst = max(worst, float(np.max(np.abs(sturm - dense))))
    return _report("eigensolver_oracle", worst, grid["tol"], worst <= grid["tol"],
                   "Sturm bisection vs cyclic Jacobi rotations")

def check_a0_exactness(grid: dict) -> CheckReport:
    worst = 0.0
    for g in grid["g_values"]:
        params = validate_params(1.0, grid["omega0"], g)
        spectrum = converged_spectrum(MatrixLabel.A0, params, grid["m_max"], tol_abs=1e-10)
        exact = params.omega0 + np.arange(grid["m_max"] + 1) * params.omega - g**2 / params.omega
        worst = max(worst, float(np.max(np.abs(spectrum.eigenvalues - exact))))
    return _report("a0_exactness", worst, grid["tol"], worst <= grid["tol"],
                   "shifted-oscillator ladder omega0 + m omega - g^2/omega")

def check_laguerre_asymptotic(grid: dict) -> CheckReport:
    constant = 0.0
    for n in grid["n_values"]:
        for s in grid["s_values"]:
            for x in grid["x_values"]:
                error = abs(laguerre(n, s, x) - laguerre_asymptotic(n, s, x)) / laguerre_envelope(n, s, x)
                constant = max(constant, error * np.sqrt(n))
    return _report("laguerre_asymptotic", constant, grid["max_constant"],
                   constant <= grid["max_constant"], "sqrt(n) * |L - asymptotic| / envelope")

def check_overlap_contour(grid: dict) -> CheckReport:
    worst = 0.0
    for g in grid["g_values"]:
        for m in grid["indices"]:
            for n in grid["indices"]:
                closed = displaced_overlap(m, n, g, 1.0)
                contour = displaced_overlap_contour(m, n, g, 1.0, QUAD_MIN_POINTS)
                worst = max(worst, abs(closed - contour))
    return _report("overlap_contour", worst, grid["tol"], worst <= grid["tol"],
                   "Laguerre closed form vs contour quadrature, both orderings of (m, n)")

def check_overlap_orthogonality(grid: dict) -> CheckReport:
    matrix = overlap_matrix(grid["n_basis"], grid["g"], 1.0, m_guard=grid["m_guard"])
    defect = matrix.orthogonality_defect
    return _report("overlap_orthogonality", defect, grid["tol"], defect <= grid["tol"],
                   f"U^T U = E on columns <= {grid['m_guard']}")

def check_projector_closed_vs_direct(grid: dict) -> CheckReport:
    index = np.arange(grid["k_max"] + 1)
    worst = 0.0
    for g in grid["g_values"]:
        params = validate_params(1.0, 0.0, g)
        for variant in ProjectorVariant:
            closed = projector_block(variant, index, index, params)
            direct = projector_direct_matrix(variant, params, grid["k_max"])
            worst = max(worst, float(np.max(np.abs(closed - direct))))
    return _report("projector_closed_vs_direct", worst, grid["tol"], worst <= grid["tol"],
                   "closed form vs parity sums of overlaps at coupling g")

def check_projector_complementarity(grid: dict) -> CheckReport:
    index = np.arange(grid["n_basis"])
    worst = 0.0
    for g in grid["g_values"]:
        params = validate_params(1.0, 0.0, g)
        total = (projector_block(ProjectorVariant.P1, index, index, params)
                 + projector_block(ProjectorVariant.P2, index, index, params))
        worst = max(worst, float(np.max(np.abs(total - np.eye(index.size)))))
    return _report("projector_complementarity", worst, grid["tol"], worst <= grid["tol"], "P1 + P2 = E")

def check_projector_idempotency(grid: dict) -> CheckReport:
    worst = 0.0
    for g in grid["g_values"]:
        params = validate_params(1.0, 0.0, g)
        for variant in ProjectorVariant:
            worst = max(worst, idempotency_defect(variant, params, grid["n_basis"], grid["window"]))
    return _report("projector_idempotency", worst, grid["tol"], worst <= grid["tol"],
                   f"P^2 = P on the top-left {grid['window']} block")

def check_bu_identity(grid: dict) -> CheckReport:
    worst = 0.0
    for case in grid["cases"]:
        params = validate_params(1.0, 0.0, case["g"])
        worst = max(worst, bu_identity_defect(params, case["n_basis"], grid["window"]))
    return _report("bu_identity", worst, grid["tol"], worst <= grid["tol"], "(B U(2g))^2 = E")

def check_kato_engine(grid: dict) -> CheckReport:
    closed_forms = {1: lambda1, 2: lambda2, 3: lambda3}
    worst = 0.0
    for omega0 in grid["omega0_values"]:
        for g in grid["g_values"]:
            params = validate_params(1.0, omega0, g)
            for m in grid["m_values"]:
                for variant in Variant:
                    for k, closed in closed_forms.items():
                        engine = kato_correction(k, variant, m, params)
                        worst = max(worst, abs(engine - closed(variant, m, params)))
    return _report("kato_engine", worst, grid["tol"], worst <= grid["tol"],
                   "trace engine vs closed forms, orders 1-3")

def check_composition_counts(grid: dict) -> CheckReport:
    mismatches = 0
    for k in range(1, grid["k_max"] + 1):
        found = compositions(k)
        if len(found) != count_compositions(k) or any(sum(c.parts) != k - 1 for c in found):
            mismatches += 1
    return _report("composition_counts", mismatches, 0, mismatches == 0,
                   f"count = (2k-2)!/((k-1)!)^2 for k <= {grid['k_max']}")

def check_remainder_bound(grid: dict) -> CheckReport:
    worst_ratio = 0.0
    for g in grid["g_values"]:
        params = validate_params(1.0, grid["omega0"], g)
        spectrum = converged_spectrum(Variant.H2, params, max(grid["m_values"]), tol_abs=1e-11)
        for m in grid["m_values"]:
            report = series_report(Variant.H2, m, params, max(grid["orders"]))
            for n in grid["orders"]:
                residual = abs(spectrum.eigenvalues[m] - report.partial_sums[n])
                bound = report.remainder_bounds[n]
                ratio = residual / bound if np.isfinite(bound) else np.inf
                worst_ratio = max(worst_ratio, ratio)
    return _report("remainder_bound", worst_ratio, 1.0, worst_ratio <= 1.0,
                   "largest residual / remainder bound")

def check_asymptotic_ladder(grid: dict) -> CheckReport:
    worst = 0.0
    failures = []
    for omega0 in grid["omega0_values"]:
        for g in grid["g_values"]:
            params = validate_params(1.0, omega0, g)
            envelope = asymptotic_residual_envelope(Variant.H2, params, grid["starts"])
            worst = max(worst, float(np.max(envelope[1:] / envelope[:-1])))
            if not _strictly_decreasing(envelope):
                failures.append(f"(omega0={omega0}, g={g})")
    detail = "dyadic envelopes of |lambda - asymptotic| decrease"
    if failures:
        detail += "; not decreasing at " + ", ".join(failures)
    return _report("asymptotic_ladder", worst, 1.0, not failures, detail)

def check_splitting_contrast(grid: dict) -> CheckReport:
    params = validate_params(1.0, grid["omega0"], grid["g"])
    table = splitting_table(Variant.H2, params, 2 * max(grid["starts"]) - 1)
    envelope = dyadic_envelope(table.deltas() - params.omega, grid["starts"])
    rwa = table.rows[grid["rwa_index"]].rwa_delta
    passed = (_strictly_decreasing(envelope) and envelope[-1] <= grid["max_deviation"] * params.omega
              and rwa is not None and rwa > 2 * params.omega)
    return _report("splitting_contrast", envelope[-1], grid["max_deviation"], passed,
                   f"|Delta - omega| envelopes {np.round(envelope, 4).tolist()}, RWA splitting {rwa:.4g}")

def check_vanishing_diagnostics(grid: dict) -> CheckReport:
    params = validate_params(1.0, grid["omega0"], grid["g"])
    top = 2 * max(grid["starts"])
    sigmas, ts, seconds = np.zeros(top), np.zeros(top), np.zeros(top)
    for m in range(min(grid["starts"]), top):
        sigmas[m] = sigma_m(m, params)
        ts[m] = hardy_diagnostics(m, params).t_m
        seconds[m] = lambda2(Variant.H2, m, params)
    failures = [name for name, values in (("sigma_m", sigmas), ("t_m", ts), ("lambda2", seconds))
                if not _strictly_decreasing(dyadic_envelope(values, grid["starts"]))]

    excess = -np.inf
    for m in grid["hardy_m_values"]:
        hardy = hardy_diagnostics(m, params)
        excess = max(excess, hardy.row_abs_sum - (1 - hardy.delta_m))
        if not sigma_m(m, params) < f_m(m) < PI_OVER_SQRT3:
            failures.append(f"sigma_m < f_m < pi/sqrt(3) at m={m}")
    if excess > grid["slack"]:
        failures.append("Hardy row sums")
    detail = "sigma_m, |t_m|, |lambda2| envelopes decrease; row sums <= 1 - delta_m"
    if failures:
        detail += "; failed: " + ", ".join(failures)
    return _report("vanishing_diagnostics", excess, grid["slack"], not failures, detail)

def check_scaling_law(grid: dict) -> CheckReport:
    params = validate_params(1.0, grid["omega0"], grid["g"])
    worst = 0.0
    for factor in grid["factors"]:
        scaled = params.replace(omega0=factor * params.omega0)
        for m in grid["m_values"]:
            for k in grid["orders"]:
                expected = factor**k * kato_correction(k, Variant.H2, m, params)
                found = kato_correction(k, Variant.H2, m, scaled)
                worst = max(worst, abs(found - expected) / max(abs(expected), 1e-300))
    return _report("scaling_law", worst, grid["tol"], worst <= grid["tol"],
                   "corrections of order k scale as omega0^k")

CHECKS = {
    "eigensolver_oracle": check_eigensolver_oracle,
    "a0_exactness": check_a0_exactness,
    "laguerre_asymptotic": check_laguerre_asymptotic,
    "overlap_contour": check_overlap_contour,
    "overlap_orthogonality": check_overlap_orthogonality,
    "projector_closed_vs_direct": check_projector_closed_vs_direct,
    "projector_complementarity": check_projector_complementarity,
    "projector_idempotency": check_projector_idempotency,
    "bu_identity": check_bu_identity,
    "kato_engine": check_kato_engine,
    "composition_counts": check_composition_counts,
    "remainder_bound": check_remainder_bound,
    "asymptotic_ladder": check_asymptotic_ladder,
    "splitting_contrast": check_splitting_contrast,
    "vanishing_diagnostics": check_vanishing_diagnostics,
    "scaling_law": check_scaling_law,
}

class InvariantSuite:
    grid: dict
    reports: dict[str, CheckReport]

    def __init__(self, grid: dict | None = None):
        self.grid = grid if grid is not None else load_file(CHECKS_GRID_PATH)
        self.reports = {}

    def run_check(self, name: str) -> CheckReport:
        logger.info(f"Running check {name}...")
        try:
            report = CHECKS[name](self.grid[name])
        except Exception as e:
            logger.error(f"Check {name} raised {type(e).__name__}: {e}")
            report = CheckReport(check=name, status=CheckStatus.ERROR.value, value=float("nan"),
                                 threshold=float("nan"), detail=f"{type(e).__name__}: {e}")
        logger.info(f"Check {name}: {report['status']}")
        return report

    def run_threadpool(self, max_workers: int, names: list[str] | None = None, progress: bool = True):
        names = [name for name in CHECKS if name in self.grid] if names is None else names
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            futures = {executor.submit(self.run_check, name): name for name in names}
            with tqdm(total=len(futures), dynamic_ncols=True, disable=not progress,
                      desc=f"Running invariant checks [{max_workers} threads]") as pbar:
                for future in as_completed(futures):
                    self.reports[futures[future]] = future.result()
                    pbar.update(1)

    def ordered_reports(self) -> list[CheckReport]:
        return [self.reports[name] for name in CHECKS if name in self.reports]

    def passed(self) -> bool:
        return bool(self.reports) and all(
            report["status"] == CheckStatus.PASS.value for report in self.reports.values())

    def get_summary(self) -> dict:
        reports = self.ordered_reports()
        passed = [r["check"] for r in reports if r["status"] == CheckStatus.PASS.value]
        return {
            "num_checks": len(reports),
            "num_passed": len(passed),
            "failed": [r["check"] for r in reports if r["check"] not in passed],
            "passed": self.passed(),
        }

    def render_summary(self) -> str:
        summary = self.get_summary()
        return Template(SUMMARY_TEMPLATE).render(reports=self.ordered_reports(), **summary)
