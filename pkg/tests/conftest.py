import pytest

from core.services.geometry import Ball, Box
from core.services.kernel import SmoothingKernel


@pytest.fixture
def unit_box():
    return Box((0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def centered_disk():
    return Ball((0.5, 0.5), 0.2)


@pytest.fixture
def fluid_kernel():
    # h = 1.3 dx at dx = 0.1
    return SmoothingKernel(0.13, 2)
