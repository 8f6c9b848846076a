import pytest

from app.services.ode_engine import IntegratorConfig
from app.services.potentials import InverseSquare, Tabulated, Zero


@pytest.fixture
def tight():
    return IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


@pytest.fixture
def free():
    return Zero(0.0)


@pytest.fixture
def bessel0():
    return InverseSquare(0.0, 1.0)


@pytest.fixture
def bessel_half():
    return InverseSquare(0.5, 1.0)


@pytest.fixture
def table():
    return Tabulated([0.0, 1.0, 2.0, 3.0, 4.0], [1.0, 0.6, 0.25, 0.05, 0.0], a=0.0)
