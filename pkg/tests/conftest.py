import numpy as np
import pytest

from unfold_homog import IntegrandSpec, SolverConfig
from unfold_homog.integrand import (
    coefficient_constant,
    coefficient_piecewise,
    potential_double_well,
    potential_power,
    potential_quadratic,
)
from unfold_homog.young import power


@pytest.fixture
def two_phase_spec():
    """1-d laminate a in {1, 4} with quadratic potential; f_hom = 1.6 xi^2."""
    return IntegrandSpec(coefficient_piecewise([0.0, 0.5], [1.0, 4.0]),
                         potential_power(2), growth_B=power(2),
                         growth_M=4.0, growth_a_bound=0.0)


@pytest.fixture
def double_well_spec():
    return IntegrandSpec(coefficient_constant(1.0), potential_double_well())


@pytest.fixture
def convex_quadratic_spec():
    return IntegrandSpec(coefficient_constant(1.0),
                         potential_quadratic(np.array([[2.0]])),
                         growth_B=power(2), growth_M=2.0, growth_a_bound=0.0)


@pytest.fixture
def fast_cfg():
    return SolverConfig(restarts=2, seed=0)
