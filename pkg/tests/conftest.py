import numpy as np
import pytest

from wqc_optim.core import make_quadratic_objective
from wqc_optim.objectives import make_nonconvex_test_objective


@pytest.fixture
def quad1():
    return make_quadratic_objective([[1.0]], [0.0])


@pytest.fixture
def quad_1_10():
    return make_nonconvex_test_objective("quad", H=np.diag([1.0, 10.0]))


@pytest.fixture
def sinsq():
    return make_nonconvex_test_objective("sinsq")


@pytest.fixture
def quartic():
    return make_nonconvex_test_objective("flat_quartic")
