import math

import numpy as np
import pytest

from jcspectra.asymptotics import dyadic_envelope
from jcspectra.constants import PI_OVER_SQRT3, Variant
from jcspectra.errors import (
    M0NotCertified,
    NotFoundWithinHorizon,
    OrderTooHigh,
    OrderTooLow,
    OutsideConvergentRegime,
)
from jcspectra.jacobi import converged_spectrum
from jcspectra.model import validate_params
from jcspectra.perturbation.diagnostics import (
    c_row,
    f_m,
    find_m0,
    hardy_diagnostics,
    lambda3_bound,
    order_bound,
    remainder_bound,
    series_remainder_bound,
    sigma_m,
    term_bound,
)
from jcspectra.perturbation.kato import count_compositions, kato_correction, kato_terms, lambda3
from jcspectra.perturbation.report import series_report
from jcspectra.projectors import overlap_window

PARAMS = validate_params(1.0, 0.2, 0.5)

def test_sigma_vanishes_without_coupling():
    assert sigma_m(5, validate_params(1.0, 0.2, 0.0)) == 0.0

def test_sigma_envelope_decreases():
    sigmas = np.array([sigma_m(m, PARAMS) if m >= 10 else 0.0 for m in range(160)])
    envelope = dyadic_envelope(sigmas, [10, 20, 40, 80])
    assert np.all(np.diff(envelope) < 0)

def test_f_m():
    assert f_m(0) == pytest.approx(math.pi / math.sqrt(6))
    values = [f_m(m) for m in (0, 1, 10, 1000)]
    assert values == sorted(values)
    assert values[-1] < PI_OVER_SQRT3
    assert sigma_m(40, PARAMS) < f_m(40)

def test_hardy_diagnostics_without_coupling():
    hardy = hardy_diagnostics(7, validate_params(1.0, 0.2, 0.0))
    assert hardy.t_m == 0.0
    assert hardy.row_abs_sum == 0.0
    assert hardy.delta_m == 1.0

@pytest.mark.parametrize("m", [10, 40, 160])
def test_hardy_row_sums(m):
    hardy = hardy_diagnostics(m, PARAMS)
    assert hardy.row_abs_sum <= 1 - hardy.delta_m + 1e-9
    assert set(hardy.c_mn_samples) == {1, 2, 3}

def test_c_mn_vanishes_along_the_ladder():
    samples = [abs(hardy_diagnostics(m, PARAMS).c_mn_samples[1]) for m in (16, 64, 256, 1024)]
    assert samples == sorted(samples, reverse=True)
    assert samples[-1] < 1e-3

def test_c_row_definition():
    m = 12
    window = overlap_window(m, PARAMS)
    column = dict(zip(window.indices.tolist(), window.column))
    row = c_row(m, PARAMS)
    assert row[0] == pytest.approx(column[m - 1] ** 2 - column[m + 1] ** 2)
    assert row[m + 2] == pytest.approx(-column[2 * m + 3] ** 2)

def test_t_m_matches_second_order():
    hardy = hardy_diagnostics(20, PARAMS)
    from jcspectra.perturbation.kato import lambda2
    assert lambda2("h2", 20, PARAMS) == pytest.approx(PARAMS.omega0**2 / 4 * hardy.t_m)

def test_find_m0():
    weak = find_m0(validate_params(1.0, 0.2, 0.1), 2000)
    medium = find_m0(validate_params(1.0, 0.2, 0.5), 2000)
    strong = find_m0(validate_params(1.0, 0.2, 2.0), 2000)
    assert weak.m0 > 0
    assert strong.m0 <= medium.m0 <= weak.m0
    assert medium.covers(medium.m0) and medium.covers(2000)
    assert not weak.covers(0) and not medium.covers(2001)
    assert weak.variant is Variant.H2

def test_find_m0_horizon_too_short():
    with pytest.raises(NotFoundWithinHorizon):
        find_m0(validate_params(1.0, 0.2, 0.1), 1)

def test_remainder_bound_geometry():
    bound3 = remainder_bound(3, 40, PARAMS)
    assert remainder_bound(4, 40, PARAMS) == pytest.approx(PARAMS.q * bound3)
    assert remainder_bound(3, 40, validate_params(1.0, 0.0, 0.5)) == 0.0
    assert series_remainder_bound(3, 40, PARAMS) <= bound3

def test_remainder_bound_errors():
    with pytest.raises(OrderTooLow):
        remainder_bound(2, 40, PARAMS)
    with pytest.raises(OutsideConvergentRegime):
        remainder_bound(3, 40, validate_params(1.0, 0.5, 0.5))
    with pytest.raises(M0NotCertified):
        remainder_bound(3, 0, validate_params(1.0, 0.2, 0.1))

@pytest.mark.parametrize("m", [60, 100])
def test_remainder_bound_holds(m):
    exact = converged_spectrum(Variant.H2, PARAMS, m, tol_abs=1e-11).eigenvalues[m]
    report = series_report(Variant.H2, m, PARAMS, 4)
    for n in (3, 4):
        assert abs(exact - report.partial_sums[n]) <= report.remainder_bounds[n]

def test_order_bounds():
    assert lambda3_bound("h2", 40, PARAMS) >= abs(lambda3("h2", 40, PARAMS))
    assert order_bound(4, 40, PARAMS) >= abs(kato_correction(4, "h2", 40, PARAMS))
    assert order_bound(4, 40, PARAMS) == pytest.approx(20 * term_bound(4, 40, PARAMS))
    with pytest.raises(OrderTooLow):
        order_bound(2, 40, PARAMS)

@pytest.mark.parametrize("k, m", [(3, 40), (4, 100)])
def test_trace_terms_within_term_bound(k, m):
    assert find_m0(PARAMS, 2 * m + 1).covers(m)
    bound = term_bound(k, m, PARAMS)
    terms = kato_terms(k, Variant.H2, m, PARAMS)
    assert len(terms) == count_compositions(k)
    for composition, value in terms:
        assert abs(value) <= bound, composition.parts

def test_series_report():
    report = series_report("h2", 10, PARAMS, 4)
    assert report.k_max == 4
    assert report.corrections[0] == pytest.approx(10 + 0.2 - 0.25)
    assert np.allclose(report.partial_sums, np.cumsum(report.corrections))
    assert np.all(np.isnan(report.remainder_bounds[:3]))
    assert np.all(np.isfinite(report.remainder_bounds[3:]))
    assert report.engine_agreement <= 1e-9
    assert report.m0 is not None and report.m0.covers(10)
    assert report.q == PARAMS.q

def test_series_report_outside_convergent_regime():
    report = series_report("h1", 10, validate_params(1.0, 0.5, 0.5), 4)
    assert np.all(np.isnan(report.remainder_bounds))
    assert np.all(np.isfinite(report.partial_sums))

def test_series_report_order_cap():
    with pytest.raises(OrderTooHigh):
        series_report("h2", 10, PARAMS, 6)
