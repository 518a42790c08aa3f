import numpy as np
import pytest

from acceldiff.analysis import moment_ladder
from acceldiff.construct import (
    REVERSIBLE, accelerated_spec, bibby_spec, build_spec, langevin_spec,
)
from acceldiff.diagnostics import (
    Binning, SweepReport, TvCurve, binned_tv, bootstrap_se, chi_growth, coarsen, ensemble_tv,
    hitting_stats, lln_check, lln_function, noise_floor, pi_bins, rate_fit, sanity_bound,
    sanity_check, time_change_ks, tv_curve,
)
from acceldiff.errors import CensoringError, InsufficientData
from acceldiff.sde import StepPolicy, simulate_ensemble, stream, time_changed_ensemble


def test_pi_bins(pareto):
    binning = pi_bins(pareto)
    assert len(binning) == 65
    assert binning.has_tail
    assert binning.edges[0] == 0.0
    assert np.all(np.diff(binning.edges) > 0.0)
    assert binning.masses.sum() == pytest.approx(1.0)
    assert binning.edges[-2] == pytest.approx(pareto.quantile(0.999))


def test_stationary_sample_sits_near_floor(pareto):
    binning = pi_bins(pareto)
    n = 10000
    states = pareto.sample(stream(11, 0), n)
    floor = noise_floor(binning, n)
    assert binned_tv(states, binning) <= 3.0 * floor
    assert floor < sanity_bound(binning, n)


def test_all_mass_in_first_bin(pareto):
    binning = pi_bins(pareto)
    assert binned_tv(np.zeros(100), binning) == pytest.approx(1.0 - 0.999 / 64)
    with pytest.raises(InsufficientData):
        binned_tv([], binning)


def test_coarsening(pareto):
    binning = pi_bins(pareto)
    assert len(coarsen(binning, 10000)) == 65
    merged = coarsen(binning, 1000)
    assert len(merged) == 64 and not merged.has_tail
    assert merged.masses.sum() == pytest.approx(1.0)
    small = coarsen(binning, 100)
    assert len(small) == 16
    assert small.expected_min(100) >= 5.0
    with pytest.raises(InsufficientData):
        coarsen(binning, 2)


def test_bootstrap_is_reproducible(pareto):
    binning = pi_bins(pareto)
    states = pareto.sample(stream(1, 0), 2000)
    a = bootstrap_se(states, binning, stream(2, 0))
    assert a == bootstrap_se(states, binning, stream(2, 0))
    assert 0.0 < a < 0.05


def _curve(t, tv, floor=1e-6):
    return TvCurve(t, tv, np.zeros_like(t), floor, 1000, label='synthetic')


def test_exponential_rate_fit():
    t = np.linspace(0.0, 10.0, 21)
    fit = rate_fit(_curve(t, 0.4 * np.exp(-0.5 * t)))
    assert fit.rate == pytest.approx(0.5)
    assert fit.constant == pytest.approx(0.4)
    assert fit.r2 == pytest.approx(1.0)
    assert fit.accepted
    assert fit.n_points == 21
    assert fit.window == (0.0, 10.0)


def test_polynomial_rate_fit_and_model_choice():
    t = np.linspace(1.0, 20.0, 20)
    curve = _curve(t, 0.4 * t ** -2.0)
    poly = rate_fit(curve, 'polynomial')
    assert poly.rate == pytest.approx(2.0)
    assert poly.r2 > rate_fit(curve, 'exponential').r2


def test_rate_fit_skips_burn_in_and_floor():
    t = np.linspace(0.0, 10.0, 21)
    tv = np.where(t < 2.0, 0.9, np.exp(-t))
    fit = rate_fit(_curve(t, tv, floor=1e-4))
    assert fit.window[0] == 2.0
    assert fit.window[1] < 10.0
    assert fit.rate == pytest.approx(1.0)


def test_rate_fit_needs_points():
    t = np.linspace(0.0, 10.0, 21)
    with pytest.raises(InsufficientData):
        rate_fit(_curve(t, 0.4 * np.exp(-0.5 * t), floor=1.0))
    with pytest.raises(ValueError):
        rate_fit(_curve(t, 0.4 * np.exp(-0.5 * t)), 'logistic')


STATIONARY_POLICIES = {
    'langevin': StepPolicy.uniform(0.01),
    'accelerated': StepPolicy('adaptive_relative', kappa=1e-3, h_max=0.01),
    'bibby': StepPolicy.uniform(0.01),
}


@pytest.mark.parametrize('kind', sorted(STATIONARY_POLICIES))
def test_stationary_start_curve_is_flat(pareto, kind):
    spec = build_spec(kind, pareto, a_margin=0.0)
    curve = tv_curve(spec, 'stationary', [0.0, 0.5, 1.0], 4000, STATIONARY_POLICIES[kind], 4,
                     bootstrap=50)
    assert np.all(curve.tv <= 4.0 * curve.floor)
    assert np.all(curve.se > 0.0)
    assert len(list(curve.rows())) == 3


@pytest.mark.slow
@pytest.mark.parametrize('kind', sorted(STATIONARY_POLICIES))
def test_stationary_start_stays_at_floor_for_large_ensembles(pareto, kind):
    spec = build_spec(kind, pareto, a_margin=0.0)
    policy = StepPolicy('adaptive_relative', kappa=1e-3, h_max=0.01)
    curve = tv_curve(spec, 'stationary', [0.0, 0.5, 1.0], 20000, policy, 4, bootstrap=50)
    assert np.all(curve.tv <= 4.0 * curve.floor)


def test_accelerated_process_targets_time_changed_law(pareto_speed):
    spec = accelerated_spec(pareto_speed)
    assert spec.invariant is pareto_speed.time_changed_law
    assert accelerated_spec(pareto_speed, drift=REVERSIBLE).invariant is pareto_speed.density


def test_accelerated_beats_langevin_from_far_start(pareto, pareto_speed):
    fast = tv_curve(accelerated_spec(pareto_speed), 10.0, [1.0], 1000,
                    StepPolicy('adaptive_relative', kappa=1e-3, h_max=0.01), 2, bootstrap=20)
    slow = tv_curve(langevin_spec(pareto), 10.0, [1.0], 1000, StepPolicy.uniform(0.01), 2,
                    bootstrap=20)
    assert slow.tv[0] > 0.9
    assert fast.tv[0] < 0.2


@pytest.mark.parametrize('seed', [0, 1, 2, 3])
def test_two_sample_tv_stays_under_bound(pareto, pareto_speed, seed):
    for law in (pareto, pareto_speed.time_changed_law):
        check = sanity_check(law, pi_bins(law), 20000, seed)
        assert check.passed
        assert 0.0 < check.tv <= check.bound
    assert sanity_check(pareto, pi_bins(pareto), 20000, 0) == sanity_check(
        pareto, pi_bins(pareto), 20000, 0)


def test_ensemble_tv():
    binning = Binning([0.0, 1.0, 2.0, np.inf], [0.5, 0.25, 0.25])
    assert ensemble_tv([0.5, 1.5], [0.5, 1.5], binning) == 0.0
    assert ensemble_tv([0.5, 0.5], [1.5, 5.0], binning) == pytest.approx(1.0)
    assert ensemble_tv([0.5, 1.5], [0.5, 0.5, 0.5, 5.0], binning) == pytest.approx(0.5)


def test_curve_carries_boundary_totals(pareto):
    policy = StepPolicy.uniform(0.01)
    reflected = tv_curve(langevin_spec(pareto), 0.0, [0.5], 1000, policy, 5, bootstrap=10)
    assert isinstance(reflected.local_time, float)
    assert reflected.local_time > 0.0
    assert reflected.clamps == 0
    clamped = tv_curve(bibby_spec(pareto), 0.0, [0.5], 1000, policy, 5, bootstrap=10)
    assert isinstance(clamped.clamps, int)
    assert clamped.clamps >= 0
    assert clamped.local_time >= 0.0

def test_tv_curve_needs_ensemble(pareto):
    with pytest.raises(InsufficientData):
        tv_curve(langevin_spec(pareto), 1.0, [0.0], 500, StepPolicy.uniform(0.01), 0)
    with pytest.raises(InsufficientData):
        tv_curve(langevin_spec(pareto), 1.0, [0.0], 1000, StepPolicy.uniform(0.01), 0,
                 coarsen_bins=False)


def test_hitting_from_threshold(pareto):
    hs = hitting_stats(langevin_spec(pareto), 1.0, 1.0, [0.5], 100, 10.0,
                       StepPolicy.uniform(0.01), 0)
    assert hs.censored == 0
    assert hs.moments[1].value == 0.0 and hs.moments[2].value == 0.0
    assert hs.exp_moments[0.5].value == 1.0
    with pytest.raises(ValueError):
        hitting_stats(langevin_spec(pareto), 0.5, 1.0, [0.5], 100, 10.0,
                      StepPolicy.uniform(0.01), 0)


def test_hitting_censoring(pareto):
    with pytest.raises(CensoringError):
        hitting_stats(langevin_spec(pareto), 50.0, 1.0, [0.5], 100, 1e-6,
                      StepPolicy.uniform(0.01), 0)


@pytest.mark.slow
def test_hitting_mean_matches_boundary_problem(pareto_speed):
    spec = build_spec('accelerated', pareto_speed.density)
    policy = StepPolicy('adaptive_relative', kappa=1e-3, h_max=0.01)
    hs = hitting_stats(spec, 10.0, 1.0, [1.0], 4000, 50.0, policy, 3)
    ladder = moment_ladder(pareto_speed, K=1.0, N=1e3, q_max=2)
    expected = float(ladder.v[1](10.0))
    assert abs(hs.moments[1].value - expected) < 5.0 * hs.moments[1].se + 0.05 * expected
    assert hs.moments[1].value <= ladder.bound(1)


def test_lln_constant_function(pareto):
    table = lln_check(pareto, 'one', [1.0, 2.0], 200, StepPolicy.uniform(0.01), 0)
    assert table.a_g == 1.0
    assert np.all(table.exceedance == 0.0)
    assert table.passed
    with pytest.raises(ValueError):
        lln_function(pareto, 'square')


def test_lln_functions_are_bounded(pareto):
    for g_id in ('tail', 'cauchy'):
        g = lln_function(pareto, g_id)
        values = g(np.array([0.0, 1.0, 1e3]))
        assert np.all((values > 0.0) & (values <= 1.0))


def test_ks_of_identical_samples():
    x = stream(0, 0).random(500)
    result = time_change_ks(x, x)
    assert result.statistic == 0.0
    assert result.passed
    assert 0.0 < result.critical < 1.0


def test_single_curve_sweep():
    t = np.linspace(0.0, 1.0, 3)
    curve = TvCurve(t, [0.5, 0.2, 0.1], [0.01, 0.01, 0.01], 0.001, 1000, label='a')
    report = SweepReport({1.0: curve})
    assert report.spread == 0.0
    assert report.pooled_se == pytest.approx(0.01)
    assert report.collapsed
    assert np.array_equal(report.max_tv, curve.tv)


def test_sweep_detects_spread():
    t = np.linspace(0.0, 1.0, 3)
    a = TvCurve(t, [0.5, 0.2, 0.1], [0.01] * 3, 0.001, 1000)
    b = TvCurve(t, [0.9, 0.8, 0.7], [0.01] * 3, 0.001, 1000)
    assert not SweepReport({1.0: a, 100.0: b}).collapsed


def test_chi_growth(pareto_speed):
    growth = chi_growth(pareto_speed, [2.0, 5.0], 200, StepPolicy.uniform(0.01), 0)
    assert growth.a_g > 0.0
    assert np.all((growth.fraction >= 0.0) & (growth.fraction <= 1.0))
    assert np.all(np.isfinite(growth.mean_rate))
    assert np.all(growth.mean_rate <= 1.0 / pareto_speed.a)


@pytest.mark.slow
def test_direct_and_time_changed_laws_agree(pareto, pareto_speed):
    direct = simulate_ensemble(accelerated_spec(pareto_speed), 1.0, [0.5], 4000,
                               StepPolicy('adaptive_speed', kappa=1e-3), 8)
    changed = time_changed_ensemble(langevin_spec(pareto), pareto_speed, 1.0, [0.5], 4000,
                                    StepPolicy.uniform(1e-3), 8, max_time=1e4, namespace=1)
    assert time_change_ks(direct.at(0), changed.at(0)).passed
