import math

import numpy as np
import pytest

from jcspectra.asymptotics import (
    asymptotic_eigenvalue,
    asymptotic_residual_envelope,
    asymptotic_residuals,
    convergence_table,
    dyadic_envelope,
    rwa_eigenvalues,
    splitting_table,
)
from jcspectra.constants import Variant
from jcspectra.errors import NoConvergence, NotResonant
from jcspectra.model import validate_params
from jcspectra.perturbation.kato import lambda0

def test_asymptotic_eigenvalue():
    assert asymptotic_eigenvalue(0, validate_params(1.0, 0.2, 0.5)) == pytest.approx(0.05)
    assert asymptotic_eigenvalue(9, validate_params(1.5, 0.0, 0.0)) == pytest.approx(13.5)

def test_rwa_eigenvalues():
    assert rwa_eigenvalues(0, validate_params(1.0, 1.0, 0.5)) == pytest.approx((1.5, 2.5))
    assert rwa_eigenvalues(4, validate_params(1.0, 1.0, 0.0)) == (10.0, 10.0)
    with pytest.raises(NotResonant):
        rwa_eigenvalues(0, validate_params(1.0, 0.9, 0.5))

def test_dyadic_envelope():
    values = np.array([0, -5, 1, 2, 3, -4, 1, 1])
    assert dyadic_envelope(values, [1, 2, 4]).tolist() == [5, 3, 4]
    with pytest.raises(ValueError):
        dyadic_envelope(values, [5])

def test_splitting_at_zero_coupling():
    table = splitting_table(Variant.H2, validate_params(1.0, 1.0, 0.0), 5)
    assert np.allclose(table.deltas(), 0.0)
    assert [row.rwa_delta for row in table.rows] == [0.0] * 6

def test_splitting_columns():
    params = validate_params(1.0, 0.3, 0.4)
    table = splitting_table("h1", params, 10)
    assert len(table.rows) == 11
    assert all(row.rwa_delta is None for row in table.rows)
    assert all(row.delta == pytest.approx(row.lambda_hi - row.lambda_lo) for row in table.rows)
    assert all(row.delta >= 0 for row in table.rows)

def test_splitting_contrast_with_rwa():
    params = validate_params(1.0, 1.0, 0.5)
    table = splitting_table(Variant.H2, params, 199)
    envelope = dyadic_envelope(table.deltas() - params.omega, [25, 50, 100])
    assert np.all(np.diff(envelope) < 0)
    assert envelope[-1] <= 0.2
    assert table.rows[150].rwa_delta == pytest.approx(2 * 0.5 * math.sqrt(301))
    assert table.rows[150].rwa_delta > 2 * params.omega

def test_splitting_needs_converged_pairs():
    with pytest.raises(NoConvergence):
        splitting_table(Variant.H2, validate_params(1.0, 1.0, 0.5), 40, max_n=128)

@pytest.mark.parametrize("omega0", [0.2, 0.5])
def test_asymptotic_residuals_shrink(omega0):
    params = validate_params(1.0, omega0, 0.5)
    envelope = asymptotic_residual_envelope(Variant.H2, params, [50, 100, 200])
    assert np.all(np.diff(envelope) < 0)

def test_asymptotic_residuals_without_atom():
    residuals = asymptotic_residuals("h2", validate_params(1.0, 0.0, 0.7), 20)
    assert np.max(residuals) <= 1e-9

def test_convergence_table_order_and_values():
    params = validate_params(1.0, 0.2, 0.5)
    table = convergence_table(Variant.H2, params, [100, 40, 60], k_max=3, max_workers=2)
    assert [row.m for row in table.rows] == [100, 40, 60]
    row = table.rows[0]
    assert row.residual_series <= row.remainder_bound
    assert row.residual_series == pytest.approx(abs(row.lambda_exact - row.partial_sums[-1]))
    assert row.asymptotic == pytest.approx(100 + 0.3 - 0.25)
    assert len(row.partial_sums) == 4

def test_convergence_table_without_atom():
    params = validate_params(1.0, 0.0, 0.5)
    table = convergence_table(Variant.H2, params, [3, 7], k_max=2)
    for row in table.rows:
        expected = lambda0(row.m, params)
        assert row.lambda_exact == pytest.approx(expected, abs=1e-9)
        assert row.partial_sums[-1] == pytest.approx(expected)
        assert row.asymptotic == pytest.approx(expected)
