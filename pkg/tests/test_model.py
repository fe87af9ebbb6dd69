import math

import pytest

from jcspectra.constants import CONVERGENCE_THRESHOLD
from jcspectra.errors import (
    InvalidTruncation,
    NegativeCoupling,
    NegativeFrequency,
    NonFinite,
    NonPositiveOmega,
    ParameterError,
)
from jcspectra.model import Truncation, validate_params

def test_convergent_regime():
    params = validate_params(1.0, 0.2, 0.5)
    assert params.q == pytest.approx(0.4 * math.pi / math.sqrt(3))
    assert params.q == pytest.approx(0.7255, abs=1e-4)
    assert params.convergent

def test_convergence_threshold():
    assert validate_params(1.0, CONVERGENCE_THRESHOLD * (1 - 1e-12), 0.3).convergent
    assert not validate_params(1.0, 0.5, 0.3).convergent

def test_gamma_and_resonance():
    params = validate_params(2.0, 2.0, 1.0)
    assert params.gamma == 0.5
    assert params.resonant
    assert not validate_params(1.0, 0.5, 1.0).resonant

@pytest.mark.parametrize(
    "values, error",
    [
        ((0.0, 0.1, 0.1), NonPositiveOmega),
        ((-1.0, 0.1, 0.1), NonPositiveOmega),
        ((1.0, -0.1, 0.1), NegativeFrequency),
        ((1.0, 0.1, -0.1), NegativeCoupling),
        ((float("nan"), 0.1, 0.1), NonFinite),
        ((1.0, float("inf"), 0.1), NonFinite),
        ((1.0, 0.1, "abc"), NonFinite),
    ],
)
def test_invalid_params(values, error):
    with pytest.raises(error):
        validate_params(*values)

def test_parameter_errors_are_value_errors():
    with pytest.raises(ValueError):
        validate_params(0.0, 0.0, 0.0)
    assert issubclass(NonPositiveOmega, ParameterError)

def test_replace_revalidates():
    params = validate_params(1.0, 0.2, 0.5)
    doubled = params.replace(omega0=0.4)
    assert doubled.omega0 == 0.4
    assert doubled.q == pytest.approx(2 * params.q)
    with pytest.raises(NegativeCoupling):
        params.replace(g=-1)

def test_params_are_hashable_and_compared_by_inputs():
    assert validate_params(1, 0.2, 0.5) == validate_params(1.0, 0.2, 0.5)
    assert len({validate_params(1, 0.2, 0.5), validate_params(1.0, 0.2, 0.5)}) == 1

def test_truncation():
    truncation = Truncation.for_basis(100, 1e-10)
    assert truncation.m_guard == 50
    assert Truncation.for_index(10, 1e-10).n_basis == 64
    assert Truncation.for_index(100, 1e-10).n_basis == 400
    with pytest.raises(InvalidTruncation):
        Truncation(10, 10, 1e-10)
    with pytest.raises(InvalidTruncation):
        Truncation(10, 5, 0.0)
