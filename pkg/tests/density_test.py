import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import beta

from acceldiff.density import (
    HalfStudentLike, ParetoShifted, PerturbedPareto, default_envelope_grid, envelope_constants,
    make_density, model_from_dict, verify_envelope,
)
from acceldiff.errors import ModelError
from acceldiff.sde import stream


def test_pareto_reference_values(pareto):
    assert abs(pareto.pi(0.0) - 4.0) < 1e-10
    assert abs(pareto.mean() - 1.0 / 3.0) < 1e-12
    assert abs(pareto.normalization - 0.25) < 1e-12
    assert abs(pareto.c - 0.25) < 1e-10


def test_pareto_tables_match_closed_forms(pareto):
    z = np.array([0.0, 0.3, 1.0, 7.5, 120.0, 5e3, 2e4])
    assert np.allclose(pareto.cdf(z, closed=False), pareto.cdf(z), rtol=0, atol=1e-11)
    assert np.allclose(pareto.inverse_integral(z, closed=False), pareto.inverse_integral(z),
                       rtol=1e-9, atol=1e-12)
    assert abs(pareto.mean(closed=False) - 1.0 / 3.0) < 1e-9
    u = np.array([0.01, 0.25, 0.5, 0.9, 0.999])
    assert np.allclose(pareto.quantile(u, closed=False), pareto.quantile(u), rtol=1e-8)


def test_quantile_inverts_cdf(half_student):
    u = np.linspace(0.001, 0.999, 37)
    assert np.allclose(half_student.cdf(half_student.quantile(u)), u, rtol=0, atol=1e-10)


def test_half_student_normalization(half_student):
    assert abs(half_student.normalization - 0.5 * beta(0.5, 1.5)) < 1e-10


def test_tail_exponent_must_exceed_three():
    with pytest.raises(ModelError) as e:
        make_density(ParetoShifted(2.5))
    assert 'm > 3' in str(e.value)


def test_perturbation_must_be_small():
    with pytest.raises(ModelError):
        make_density(PerturbedPareto(5, 0.6))


def test_model_from_dict():
    assert model_from_dict({'model': 'half_student', 'm': 4, 's': 2}) == HalfStudentLike(4, 2.0)
    with pytest.raises(ModelError):
        model_from_dict({'model': 'gaussian'})
    with pytest.raises(ModelError):
        model_from_dict({'model': 'pareto_shifted', 'm': 5, 'eps': 1})


def test_envelope_holds(density):
    check = verify_envelope(density, default_envelope_grid())
    assert check.passed
    assert 0.0 < density.c <= 1.0


def test_envelope_holds_off_grid(density):
    x = 10.0 ** stream(5, 0).uniform(-4.0, 6.0, 5000)
    far = np.array([1e4, 3.7e4, 2e5, 9.9e5])
    check = verify_envelope(density, np.unique(np.concatenate([[0.0], x, far])))
    assert check.passed


def test_envelope_constants_between_nodes(half_student):
    # (1 + x)^4 / (1 + x^2)^2 peaks at x = 1, between the nodes of a coarse grid
    low, high = envelope_constants(half_student, np.array([0.0, 0.7, 1.6, 50.0]))
    assert high == pytest.approx(4.0 / half_student.normalization, rel=1e-10)
    assert low == pytest.approx(1.0 / half_student.normalization, rel=1e-10)


def test_envelope_rejects_bad_grid(pareto):
    with pytest.raises(ValueError):
        verify_envelope(pareto, [1.0, 0.5])
    with pytest.raises(ValueError):
        verify_envelope(pareto, [])


def test_density_integrates_to_one(density):
    assert abs(density.expectation(lambda x: 1.0 + 0.0 * x) - 1.0) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.05, max_value=200.0))
def test_log_derivative_matches_finite_difference(x):
    for model in (HalfStudentLike(4, 1.5), PerturbedPareto(5, 0.3), ParetoShifted(4.5)):
        h = 1e-5 * (1.0 + x)
        numeric = (np.log(model.unnormalized(x + h)) - np.log(model.unnormalized(x - h))) / (2.0 * h)
        assert abs(numeric - model.log_derivative(x)) < 1e-6 * (1.0 + abs(model.log_derivative(x)))


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=1e4))
def test_perturbed_density_positive_with_envelope(x):
    d = PerturbedPareto(5, 0.3)
    value = d.unnormalized(x) * (1.0 + x) ** 5
    assert 0.5 < value < 1.5


def test_sample_follows_cdf(perturbed):
    sample = perturbed.sample(stream(11, 0), 4000)
    assert np.all(sample >= 0.0)
    assert stats.kstest(sample, perturbed.cdf).pvalue > 1e-4
