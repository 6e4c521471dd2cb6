import pytest

from biphoton_radon.state import BiphotonParams, covariance_from_params

SIGMA_S = 1500.0
SIGMA_C = 40.0


@pytest.fixture(scope="session")
def ref_params():
    return BiphotonParams.from_widths(SIGMA_S, SIGMA_C)


@pytest.fixture(scope="session")
def ref_state(ref_params):
    return covariance_from_params(ref_params)


@pytest.fixture(scope="session")
def small_params():
    # widths of order one so brute-force quadrature is cheap
    return BiphotonParams(0.7, 1.9)
