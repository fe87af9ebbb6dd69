import logging
from dataclasses import dataclass

import numpy as np

from jcspectra.constants import DEFAULT_M0_HORIZON, DEFAULT_ORDER_CAP, Variant
from jcspectra.errors import M0NotCertified, NotFoundWithinHorizon, OrderTooHigh, OutsideConvergentRegime
from jcspectra.model import ModelParams
from jcspectra.perturbation.diagnostics import (
    M0Certificate,
    find_m0,
    hardy_diagnostics,
    remainder_bound,
    series_remainder_bound,
    sigma_m,
)
from jcspectra.perturbation.kato import (
    as_variant,
    kato_correction,
    lambda0,
    lambda1,
    lambda2,
    lambda3,
)

logger = logging.getLogger(__name__)

ENGINE_AGREEMENT_TOL = 1e-9

@dataclass(frozen=True)
class SeriesReport:
    m: int
    variant: Variant
    params: ModelParams
    corrections: np.ndarray
    partial_sums: np.ndarray
    sigma_m: float
    t_m: float
    m0: M0Certificate | None
    remainder_bounds: np.ndarray
    series_bounds: np.ndarray
    q: float
    engine_agreement: float

    @property
    def k_max(self) -> int:
        return self.corrections.size - 1

def series_report(variant, m: int, params: ModelParams, k_max: int,
                  order_cap: int = DEFAULT_ORDER_CAP, horizon: int | None = None) -> SeriesReport:
    variant = as_variant(variant)
    if k_max > order_cap:
        raise OrderTooHigh(f"k_max={k_max} exceeds the cap {order_cap}")
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")

    closed_forms = [lambda1, lambda2, lambda3]
    corrections = [lambda0(m, params)]
    agreement = 0.0
    for k in range(1, k_max + 1):
        engine = kato_correction(k, variant, m, params, order_cap)
        if k <= len(closed_forms):
            closed = closed_forms[k - 1](variant, m, params)
            agreement = max(agreement, abs(closed - engine))
            corrections.append(closed)
        else:
            corrections.append(engine)
    if agreement > ENGINE_AGREEMENT_TOL:
        logger.warning(f"Closed forms and trace engine differ by {agreement:.3e} at m={m}.")

    try:
        m0 = find_m0(params, horizon or max(DEFAULT_M0_HORIZON, 2 * m + 1), variant)
    except NotFoundWithinHorizon:
        m0 = None

    remainder = np.full(k_max + 1, np.nan)
    series = np.full(k_max + 1, np.nan)
    for n in range(3, k_max + 1):
        try:
            remainder[n] = remainder_bound(n, m, params, variant, horizon)
            series[n] = series_remainder_bound(n, m, params, variant, horizon)
        except (OutsideConvergentRegime, M0NotCertified) as e:
            logger.info(f"No remainder bound for n={n}, m={m}: {type(e).__name__}: {e}")
            break

    corrections = np.array(corrections)
    return SeriesReport(
        m=m,
        variant=variant,
        params=params,
        corrections=corrections,
        partial_sums=np.cumsum(corrections),
        sigma_m=sigma_m(m, params),
        t_m=hardy_diagnostics(m, params).t_m,
        m0=m0,
        remainder_bounds=remainder,
        series_bounds=series,
        q=params.q,
        engine_agreement=agreement,
    )
