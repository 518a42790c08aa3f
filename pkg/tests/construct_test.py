import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acceldiff.construct import (
    ACCELERATED, BIBBY, DRIFTS, KINDS, LANGEVIN, REVERSIBLE, TIME_CHANGE, SpeedFunction,
    TimeChangedLaw, accelerated_spec, bibby_coefficients, build_spec, key_identity_residual,
    mixing_exponent_r, speed_envelope_grid, stationarity_residual,
)
from acceldiff.quadrature import geometric_grid


def test_speed_function_reference_values(pareto_speed):
    assert abs(pareto_speed(0.0) - 1.0) < 1e-10
    assert abs(pareto_speed(1.0) - 3.625) < 1e-10
    assert abs(pareto_speed.a - 1.0 / 24.0) < 1e-12
    assert abs(pareto_speed.a_envelope - 1.0 / 24.0) < 1e-12


def test_speed_function_envelope(density):
    sf = SpeedFunction(density, 1.0, 2.0)
    z = speed_envelope_grid()
    f2 = sf(z)
    scale = (1.0 + z) ** (density.m + 1.0)
    assert np.all(sf.a * scale <= f2)
    assert np.all(f2 <= scale / sf.a)
    assert sf.a < sf.a_scan
    assert 0.0 < sf.a_envelope <= sf.a_scan * (1.0 + 1e-9)


def test_speed_constants_must_be_positive(pareto):
    with pytest.raises(ValueError):
        SpeedFunction(pareto, 0.0, 1.0)
    with pytest.raises(ValueError):
        SpeedFunction(pareto, 1.0, 1.0, a_margin=1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=0.0, max_value=1e3), st.floats(min_value=1e-3, max_value=10.0))
def test_speed_function_increasing(pareto_speed, z, dz):
    assert pareto_speed(z + dz) > pareto_speed(z)
    assert pareto_speed.derivative(z) > 0.0


def test_key_identity(density):
    sf = SpeedFunction(density, 0.5, 2.0)
    assert key_identity_residual(density, sf, np.linspace(0.0, 100.0, 1001)) <= 1e-6


GRID = np.linspace(0.1, 50.0, 200)


@pytest.mark.parametrize('kind', KINDS)
def test_stationarity(density, kind):
    spec = build_spec(kind, density)
    residual = stationarity_residual(spec, GRID)
    assert residual.relative <= 1e-5
    assert residual.flux_relative <= 1e-5
    assert residual.flux_origin <= 1e-6


@pytest.mark.parametrize('c1, c2', [(1.0, 1.0), (2.0, 1.0), (1.0, 3.0)])
@pytest.mark.parametrize('drift', DRIFTS)
def test_accelerated_family_is_stationary(pareto, c1, c2, drift):
    spec = accelerated_spec(SpeedFunction(pareto, c1, c2), drift=drift)
    residual = stationarity_residual(spec, GRID)
    assert residual.relative <= 1e-5
    assert residual.flux_relative <= 1e-5


@pytest.mark.parametrize('c2', [1.0, 3.0])
def test_time_change_has_flux_against_pi(pareto, c2):
    spec = accelerated_spec(SpeedFunction(pareto, 1.0, c2))
    residual = stationarity_residual(spec, GRID, law=pareto)
    # the interior equation holds, the boundary condition does not
    assert residual.relative <= 1e-5
    assert residual.flux_origin == pytest.approx(0.5 * c2, rel=1e-6)
    assert residual.flux == pytest.approx(0.5 * c2, rel=1e-6)
    assert residual.flux_relative > 0.1


def test_stationarity_detects_wrong_drift(pareto):
    spec = build_spec(LANGEVIN, pareto)
    drift = spec.drift
    spec.drift = lambda x: 1.1 * drift(x)
    assert stationarity_residual(spec, GRID).relative > 1e-3


def test_stationarity_needs_interior_grid(pareto):
    with pytest.raises(ValueError):
        stationarity_residual(build_spec(LANGEVIN, pareto), [0.0, 1.0])


def test_process_kinds(pareto):
    langevin = build_spec(LANGEVIN, pareto)
    accelerated = build_spec(ACCELERATED, pareto)
    bibby = build_spec(BIBBY, pareto)
    x = np.array([0.5, 2.0, 30.0])
    assert np.allclose(langevin.sigma(x), 1.0)
    assert np.allclose(langevin.drift(x), -2.5 / (1.0 + x))
    assert np.allclose(accelerated.sigma(x) ** 2, accelerated.speed(x))
    assert np.allclose(accelerated.drift(x), accelerated.speed(x) * langevin.drift(x))
    assert bibby.reflection == 'clamp'
    assert np.allclose(bibby.drift(x), 1.0 / 3.0 - x)
    with pytest.raises(ValueError):
        build_spec('overdamped', pareto)


def test_bibby_pareto(pareto):
    mu, v = bibby_coefficients(pareto)
    assert abs(mu - 1.0 / 3.0) < 1e-8
    z = np.linspace(0.0, 1e3, 2001)
    assert np.min(v(z)) >= -1e-12
    assert np.allclose(v(z), 2.0 * z * (1.0 + z) / 3.0)


def test_bibby_tables_match_closed_form(pareto):
    _, closed = bibby_coefficients(pareto)
    _, table = bibby_coefficients(pareto, closed=False)
    z = np.array([0.01, 0.2, 1.0 / 3.0, 0.5, 3.0, 80.0, 900.0])
    assert np.allclose(table(z), closed(z), rtol=1e-7)


def test_bibby_nonnegative(density):
    _, v = bibby_coefficients(density)
    assert np.min(v(np.linspace(0.0, 1e3, 5001))) >= -1e-12


def test_mixing_exponent(pareto):
    r = mixing_exponent_r(pareto, geometric_grid(1e6, 60, lower=1.0))
    assert abs(r.r - 2.5) < 1e-5
    with pytest.raises(ValueError):
        mixing_exponent_r(pareto, [1.0, 10.0, 100.0])


def test_drift_forms(pareto_speed):
    time_change = accelerated_spec(pareto_speed)
    reversible = accelerated_spec(pareto_speed, drift=REVERSIBLE)
    x = np.array([0.0, 0.5, 2.0, 30.0])
    pareto = pareto_speed.density
    assert time_change.drift_form == TIME_CHANGE
    assert np.allclose(reversible.drift(x) - time_change.drift(x), 0.5 / pareto.pi(x))
    assert np.allclose(reversible.sigma(x), time_change.sigma(x))
    assert isinstance(time_change.invariant, TimeChangedLaw)
    assert reversible.invariant is pareto
    with pytest.raises(ValueError):
        accelerated_spec(pareto_speed, drift='metropolis')


def test_time_changed_law(pareto_speed):
    law = pareto_speed.time_changed_law
    assert law is pareto_speed.time_changed_law
    pareto = pareto_speed.density
    assert law.normalization == pytest.approx(pareto.expectation(lambda z: 1.0 / pareto_speed(z)),
                                              rel=1e-8)
    u = np.array([0.0, 0.01, 0.3, 0.5, 0.9, 0.999])
    assert np.allclose(law.cdf(law.quantile(u)), u, rtol=0, atol=1e-10)
    z = np.array([0.0, 0.4, 3.0])
    assert np.allclose(law.pi(z), pareto.pi(z) / pareto_speed(z) / law.normalization)
    # mass shifts toward the origin, where the clock runs slowest
    assert 0.0 < law.mean() < pareto.mean()
    assert law.quantile(0.5) < pareto.quantile(0.5)
    assert law.m == 11.0
