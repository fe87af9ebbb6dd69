import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from jcspectra.constants import (
    DEFAULT_M0_HORIZON,
    PI_OVER_SQRT3,
    PROJECTOR_SIGN,
    VARIANT_PROJECTOR,
    Variant,
)
from jcspectra.errors import (
    M0NotCertified,
    NotFoundWithinHorizon,
    OrderTooLow,
    OutsideConvergentRegime,
)
from jcspectra.model import ModelParams
from jcspectra.perturbation.kato import as_variant, count_compositions
from jcspectra.projectors import overlap_window, projector_element
from jcspectra.special_functions import laguerre_table

logger = logging.getLogger(__name__)

def sigma_m(m: int, params: ModelParams) -> float:
    """[sum_{j != m} P^{(m)}_j(2g)^2 / (j - m)^2]^{1/2}"""
    window = overlap_window(m, params)
    offsets = window.indices - m
    off = offsets != 0
    return math.sqrt(float(np.sum(window.column[off] ** 2 / offsets[off] ** 2)))

def f_m(m: int) -> float:
    """[sum_{i != m, i >= 0} (i - m)^{-2}]^{1/2}, which stays below pi/sqrt(3)."""
    below = sum(1.0 / k**2 for k in range(1, m + 1))
    return math.sqrt(below + math.pi**2 / 6)

@dataclass(frozen=True)
class HardyDiagnostics:
    m: int
    t_m: float
    row_abs_sum: float
    delta_m: float
    c_mn_samples: dict[int, float]

def c_row(m: int, params: ModelParams) -> np.ndarray:
    """C_{m,n} for n = 1, 2, ...; entry n-1 holds C_{m,n}."""
    window = overlap_window(m, params)
    full = np.zeros(int(window.indices.max()) + 1)
    full[window.indices] = window.column
    n = np.arange(1, max(m, full.size - 1 - m) + 1)

    def lookup(k):
        inside = (k >= 0) & (k < full.size)
        return np.where(inside, full[np.clip(k, 0, full.size - 1)], 0.0)

    lower = np.where(n <= m, lookup(m - n) ** 2, 0.0)
    return lower - lookup(m + n) ** 2

def hardy_diagnostics(m: int, params: ModelParams, sample_ns=(1, 2, 3)) -> HardyDiagnostics:
    window = overlap_window(m, params)
    offsets = window.indices - m
    off = offsets != 0
    t_m = float(np.sum(window.column[off] ** 2 / -offsets[off]))
    row = c_row(m, params)
    samples = {n: float(row[n - 1]) if n <= row.size else 0.0 for n in sample_ns}
    delta_m = float(window.column[window.position] ** 2)
    return HardyDiagnostics(m, t_m, float(np.sum(np.abs(row))), delta_m, samples)

@dataclass(frozen=True)
class M0Certificate:
    """Finite-range certificate: |2 P_{m,m}| < pi/sqrt(3) for every m0 <= m <= horizon."""
    m0: int
    horizon: int
    variant: Variant

    def covers(self, m: int) -> bool:
        return self.m0 <= m <= self.horizon

def find_m0(params: ModelParams, horizon: int, variant=Variant.H2) -> M0Certificate:
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    variant = as_variant(variant)
    x = 4 * params.gamma**2
    sign, log_abs = laguerre_table(horizon, [0], x)
    diagonal = sign[:, 0] * np.exp(log_abs[:, 0] - x / 2)
    parity = np.where(np.arange(horizon + 1) % 2 == 0, 1.0, -1.0)
    doubled = np.abs(1.0 + PROJECTOR_SIGN[VARIANT_PROJECTOR[variant]] * parity * diagonal)
    holds = doubled < PI_OVER_SQRT3

    failing = np.flatnonzero(~holds)
    m0 = int(failing[-1]) + 1 if failing.size else 0
    # both parities must be inside the certified range
    if horizon - m0 < 1:
        raise NotFoundWithinHorizon(f"|2 P_mm| < pi/sqrt(3) fails at m={horizon} (horizon)")
    return M0Certificate(m0, horizon, variant)

def _certified(m: int, params: ModelParams, variant, horizon: int | None) -> M0Certificate:
    horizon = max(DEFAULT_M0_HORIZON, 2 * m + 1) if horizon is None else horizon
    try:
        certificate = find_m0(params, horizon, variant)
    except NotFoundWithinHorizon as e:
        raise M0NotCertified(str(e))
    if not certificate.covers(m):
        raise M0NotCertified(f"m={m} outside the certified range [{certificate.m0}, {horizon}]")
    return certificate

def _check_remainder_args(n: int, params: ModelParams):
    if n <= 2:
        raise OrderTooLow(f"remainder bounds need n > 2, got {n}")
    if params.q >= 1:
        raise OutsideConvergentRegime(f"q = {params.q:.6f} >= 1")

def remainder_bound(n: int, m: int, params: ModelParams, variant=Variant.H2,
                    horizon: int | None = None) -> float:
    """(3 omega / 4 pi^2) sigma_m q^n / (1 - q)"""
    _check_remainder_args(n, params)
    _certified(m, params, variant, horizon)
    q = params.q
    return 3 * params.omega / (4 * math.pi**2) * sigma_m(m, params) * q**n / (1 - q)

def series_remainder_bound(n: int, m: int, params: ModelParams, variant=Variant.H2,
                           horizon: int | None = None) -> float:
    """(3 omega / pi^2) sigma_m sum_{k >= n} (N_k / k) r^k with r = omega0 pi / (2 sqrt(3) omega)."""
    _check_remainder_args(n, params)
    _certified(m, params, variant, horizon)
    if params.omega0 == 0:
        return 0.0
    log_r = math.log(params.omega0 * math.pi / (2 * math.sqrt(3) * params.omega))
    total = 0.0
    for k in range(n, n + 100_000):
        log_term = gammaln(2 * k - 1) - 2 * gammaln(k) - math.log(k) + k * log_r
        term = math.exp(log_term)
        total += term
        if term <= 1e-17 * total:
            break
    else:
        logger.warning(f"Remainder series at m={m} truncated before reaching relative 1e-17.")
    return 3 * params.omega / math.pi**2 * sigma_m(m, params) * total

def term_bound(k: int, m: int, params: ModelParams) -> float:
    """Bound on one scaled trace term of order k."""
    return ((params.omega0 / 2) ** k / (k * params.omega ** (k - 1))
            * PI_OVER_SQRT3 ** (k - 2) * sigma_m(m, params))

def order_bound(k: int, m: int, params: ModelParams) -> float:
    if k <= 2:
        raise OrderTooLow(f"order bounds hold for k > 2, got {k}")
    return term_bound(k, m, params) * count_compositions(k)

def lambda3_bound(variant, m: int, params: ModelParams) -> float:
    variant = as_variant(variant)
    doubled = abs(2 * projector_element(VARIANT_PROJECTOR[variant], m, m, params))
    sigma = sigma_m(m, params)
    return (params.omega0 / 2) ** 3 / params.omega**2 * sigma * (PI_OVER_SQRT3 + doubled * sigma)
