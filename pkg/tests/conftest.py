import pytest

from acceldiff.construct import SpeedFunction
from acceldiff.density import HalfStudentLike, ParetoShifted, PerturbedPareto, make_density


@pytest.fixture(scope='session')
def pareto():
    return make_density(ParetoShifted(5))


@pytest.fixture(scope='session')
def half_student():
    return make_density(HalfStudentLike(4))


@pytest.fixture(scope='session')
def perturbed():
    return make_density(PerturbedPareto(5, 0.3))


@pytest.fixture(scope='session', params=['pareto', 'half_student', 'perturbed'])
def density(request):
    return request.getfixturevalue(request.param)


@pytest.fixture(scope='session')
def pareto_speed(pareto):
    return SpeedFunction(pareto, 1.0, 1.0, a_margin=0.0)
