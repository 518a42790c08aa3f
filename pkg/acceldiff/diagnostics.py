"""Monte-Carlo measurements: binned TV curves, hitting-time moments, LLN checks, rate fits."""

import logging
from collections import namedtuple

import numpy as np
from scipy import stats

from acceldiff.construct import langevin_spec
from acceldiff.errors import CensoringError, InsufficientData
from acceldiff.sde import (
    hitting_times, simulate_ensemble, stream, time_changed_ensemble,
)


logger = logging.getLogger(__name__)

MIN_ENSEMBLE = 1000
MIN_EXPECTED = 5.0
MAX_CENSORED = 0.01

# spawn-key prefixes of the bootstrap and two-sample streams
BOOTSTRAP = 0xB007
SANITY = 0x5A17

Estimate = namedtuple('Estimate', 'value se')
KsResult = namedtuple('KsResult', 'statistic pvalue critical passed')
SanityCheck = namedtuple('SanityCheck', 'tv bound passed')


class Binning(object):
    """Histogram cells with their stationary masses; the last edge may be inf."""

    def __init__(self, edges, masses, tail=None):
        self.edges = np.asarray(edges, dtype=float)
        self.masses = np.asarray(masses, dtype=float)
        self._tail = bool(np.isinf(self.edges[-1])) if tail is None else tail

    def __len__(self):
        return len(self.masses)

    @property
    def has_tail(self):
        """Whether the last cell is still the separate tail [q_upper, inf)."""
        return self._tail

    def counts(self, states):
        idx = np.clip(np.searchsorted(self.edges, states, side='right') - 1, 0, len(self) - 1)
        return np.bincount(idx, minlength=len(self))

    def expected_min(self, n):
        return n * float(self.masses.min())

    def merge_tail(self):
        edges = np.concatenate([self.edges[:-2], self.edges[-1:]])
        masses = np.concatenate([self.masses[:-2], [self.masses[-2] + self.masses[-1]]])
        return Binning(edges, masses, tail=False)

    def halve(self):
        n = len(self)
        keep = list(range(0, n + 1, 2))
        if keep[-1] != n:
            keep.append(n)
        return Binning(self.edges[keep], np.add.reduceat(self.masses, keep[:-1]), tail=False)

    def __repr__(self):
        return 'Binning(%d bins, tail=%s)' % (len(self), self.has_tail)


def pi_bins(d, bins=64, upper=0.999):
    """``bins`` cells of equal mass under the law ``d`` on [0, q_upper] plus the tail cell [q_upper, inf)."""
    levels = np.linspace(0.0, upper, bins + 1)
    edges = np.concatenate([d.quantile(levels), [np.inf]])
    edges[0] = 0.0
    masses = np.concatenate([np.full(bins, upper / bins), [1.0 - upper]])
    return Binning(edges, masses)


def coarsen(binning, n, min_expected=MIN_EXPECTED):
    """Merge the tail cell, then halve the bin count, until every cell expects ``min_expected``."""
    original = len(binning)
    while binning.expected_min(n) < min_expected:
        if binning.has_tail:
            binning = binning.merge_tail()
        elif len(binning) > 1:
            binning = binning.halve()
        else:
            raise InsufficientData('ensemble of %d paths is too small for any binning' % n)
    if len(binning) != original:
        logger.warning('coarsened binning from %d to %d bins for %d paths', original, len(binning), n)
    return binning


def binned_tv(states, binning):
    """1/2 sum |p_hat - pi_bin| over the histogram."""
    states = np.asarray(states, dtype=float)
    if states.size == 0:
        raise InsufficientData('no states to bin')
    p_hat = binning.counts(states) / float(states.size)
    return 0.5 * float(np.sum(np.abs(p_hat - binning.masses)))


def noise_floor(binning, n):
    """Expected binned TV of n exact draws from pi, 1/2 sum sqrt(2 p (1 - p) / (pi n))."""
    p = binning.masses
    return 0.5 * float(np.sum(np.sqrt(2.0 * p * (1.0 - p) / (np.pi * n))))


def sanity_bound(binning, n):
    """Aggregate floor sqrt(2 B / (pi n)) for the TV between two pi-ensembles."""
    return float(np.sqrt(2.0 * len(binning) / (np.pi * n)))


def ensemble_tv(first, second, binning):
    """Binned TV between two samples, 1/2 sum |p_hat - q_hat|."""
    p = binning.counts(first) / float(np.size(first))
    q = binning.counts(second) / float(np.size(second))
    return 0.5 * float(np.sum(np.abs(p - q)))


def sanity_check(law, binning, n, seed, namespace=None):
    """TV between two independent n-draws from ``law`` and the bound it should stay under."""
    namespace = _namespace(namespace)
    first = law.sample(stream(seed, 0, (SANITY,) + namespace), n)
    second = law.sample(stream(seed, 1, (SANITY,) + namespace), n)
    tv = ensemble_tv(first, second, binning)
    bound = sanity_bound(binning, n)
    logger.info('two-sample TV of %d draws: %.4g (bound %.4g)', n, tv, bound)
    return SanityCheck(tv, bound, tv <= bound)


def bootstrap_se(states, binning, rng, replicates=200):
    counts = binning.counts(states)
    n = int(counts.sum())
    draws = rng.multinomial(n, counts / float(n), size=replicates) / float(n)
    tv = 0.5 * np.sum(np.abs(draws - binning.masses), axis=1)
    return float(tv.std(ddof=1))


class TvCurve(object):
    """Binned TV distance to the invariant law at each checkpoint, with bootstrap standard errors.

    ``clamps`` counts the steps clamped at 0 and ``local_time`` is the local
    time at 0 accumulated by all paths together.
    """

    def __init__(self, checkpoints, tv, se, floor, ensemble_size=0, binning=None,
                 x0_policy=None, label=None):
        self.checkpoints = np.asarray(checkpoints, dtype=float)
        self.tv = np.asarray(tv, dtype=float)
        self.se = np.asarray(se, dtype=float)
        self.floor = np.broadcast_to(np.asarray(floor, dtype=float), self.tv.shape)
        self.ensemble_size = ensemble_size
        self.binning = binning
        self.x0_policy = x0_policy
        self.label = label
        self.zero_fraction = 0.0
        self.clamps = 0
        self.local_time = 0.0
        self.records = []

    def rows(self):
        for row in zip(self.checkpoints, self.tv, self.se):
            yield (self.label,) + row

    def __repr__(self):
        return 'TvCurve(%r, n=%d, final=%.4g)' % (self.label, self.ensemble_size, self.tv[-1])


def curve_from_ensemble(ensemble, binning, seed, namespace=None, bootstrap=200, x0=None,
                        label=None):
    """Binned TV of every checkpoint column of an ensemble against the binning's law."""
    namespace = _namespace(namespace)
    tv, se, floor = [], [], []
    for k in range(len(ensemble.checkpoints)):
        states = ensemble.at(k)
        tv.append(binned_tv(states, binning))
        rng = stream(seed, k, (BOOTSTRAP,) + namespace)
        se.append(bootstrap_se(states, binning, rng, bootstrap))
        floor.append(noise_floor(binning, states.size))
    curve = TvCurve(ensemble.checkpoints, tv, se, floor, ensemble.size, binning, x0, label)
    curve.zero_fraction = ensemble.zero_fraction
    curve.clamps = int(ensemble.clamps)
    curve.local_time = float(np.nansum(ensemble.local_time))
    curve.records = ensemble.records
    return curve


def binning_for(d, n, bins, coarsen_bins):
    if n < MIN_ENSEMBLE:
        raise InsufficientData('TV curves need at least %d paths (got %d)' % (MIN_ENSEMBLE, n))
    binning = pi_bins(d, bins)
    if binning.expected_min(n) >= MIN_EXPECTED:
        return binning
    if not coarsen_bins:
        raise InsufficientData('%d paths expect fewer than %g states in some of %d bins'
                               % (n, MIN_EXPECTED, len(binning)))
    return coarsen(binning, n)


def _namespace(namespace):
    if namespace is None:
        return ()
    return namespace if isinstance(namespace, tuple) else (namespace,)


def tv_curve(spec, x0, checkpoints, ensemble_size, policy, seed, bins=64, coarsen_bins=True,
             bootstrap=200, namespace=None, label=None, **kwargs):
    """Simulate an ensemble from ``x0`` and measure its binned TV distance to ``spec.invariant``."""
    binning = binning_for(spec.invariant, ensemble_size, bins, coarsen_bins)
    ensemble = simulate_ensemble(spec, x0, checkpoints, ensemble_size, policy, seed,
                                 namespace=namespace, **kwargs)
    curve = curve_from_ensemble(ensemble, binning, seed, namespace, bootstrap, x0,
                                label or spec.kind)
    logger.info('%s TV curve from x0=%s: %s', curve.label, x0,
                ', '.join('%.4g' % v for v in curve.tv))
    return curve


def tv_curve_time_changed(spec_y, sf, x0, checkpoints, ensemble_size, policy, seed, max_time,
                          bins=64, coarsen_bins=True, bootstrap=200, namespace=None, **kwargs):
    """TV curve of Y read on the changed clock chi, i.e. of X built from Y paths."""
    binning = binning_for(sf.time_changed_law, ensemble_size, bins, coarsen_bins)
    ensemble = time_changed_ensemble(spec_y, sf, x0, checkpoints, ensemble_size, policy, seed,
                                     max_time, namespace=namespace, **kwargs)
    return curve_from_ensemble(ensemble, binning, seed, namespace, bootstrap, x0,
                               'time_changed')


def time_change_ks(direct, changed, level=0.01):
    """Two-sample KS test of X_t simulated directly against Y read at beta_t."""
    direct = np.asarray(direct, dtype=float)
    changed = np.asarray(changed, dtype=float)
    direct, changed = direct[np.isfinite(direct)], changed[np.isfinite(changed)]
    result = stats.ks_2samp(direct, changed)
    effective = max(1, int(direct.size * changed.size // (direct.size + changed.size)))
    critical = float(stats.kstwo.ppf(1.0 - level, effective))
    return KsResult(float(result.statistic), float(result.pvalue), critical,
                    bool(result.statistic < critical))


class HittingStats(object):
    """Sampled hitting times of [0, K] with their moment estimates."""

    def __init__(self, K, x0, samples, censored, horizon, moments, exp_moments, aborted=0):
        self.K = K
        self.x0 = x0
        self.samples = samples
        self.censored = censored
        self.horizon = horizon
        self.moments = moments
        self.exp_moments = exp_moments
        self.aborted = aborted

    @property
    def censored_fraction(self):
        return self.censored / float(self.samples.size + self.censored)

    def __repr__(self):
        return 'HittingStats(K=%g, x0=%g, mean=%.6g +- %.2g, censored=%d)' % (
            self.K, self.x0, self.moments[1].value, self.moments[1].se, self.censored)


def _estimate(values):
    n = values.size
    se = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(values.mean()), se)


def hitting_stats(spec, x0, K, alpha_list, ensemble_size, horizon, policy, seed, q_max=3,
                  max_censored=MAX_CENSORED, **kwargs):
    """Moments E gamma^q and exponential moments E exp(alpha gamma) of the hitting time."""
    if not x0 >= K:
        raise ValueError('initial state %r lies below the threshold K=%r' % (x0, K))
    sample = hitting_times(spec, x0, K, horizon, ensemble_size, policy, seed, **kwargs)
    finite = np.isfinite(sample.times)
    censored = int(ensemble_size - finite.sum())
    fraction = censored / float(ensemble_size)
    if fraction >= max_censored:
        raise CensoringError(fraction, horizon)
    if censored:
        logger.warning('%d of %d hitting times censored at t=%g (%d aborted)',
                       censored, ensemble_size, horizon, sample.aborted)
    gamma = sample.times[finite]
    moments = dict((q, _estimate(gamma ** q)) for q in range(1, q_max + 1))
    exp_moments = dict((alpha, _estimate(np.exp(alpha * gamma))) for alpha in alpha_list)
    hs = HittingStats(K, x0, gamma, censored, horizon, moments, exp_moments, sample.aborted)
    logger.info('%r', hs)
    return hs


LLN_FUNCTIONS = ('tail', 'cauchy', 'one')


def lln_function(d, g_id):
    if g_id == 'tail':
        return lambda r: (1.0 + np.abs(r)) ** (-d.m - 1.0)
    if g_id == 'cauchy':
        return lambda r: 1.0 / (1.0 + np.asarray(r, dtype=float) ** 2)
    if g_id == 'one':
        return lambda r: np.ones_like(np.asarray(r, dtype=float))
    raise ValueError('unknown LLN function %r (expected one of %s)' % (g_id, ', '.join(LLN_FUNCTIONS)))


class LlnTable(object):

    def __init__(self, g_id, a_g, eps, delta, horizons, exceedance):
        self.g_id = g_id
        self.a_g = a_g
        self.eps = eps
        self.delta = delta
        self.horizons = np.asarray(horizons, dtype=float)
        self.exceedance = np.asarray(exceedance, dtype=float)

    @property
    def passed(self):
        return bool(self.exceedance[-1] < self.delta)

    def rows(self):
        return zip(self.horizons, self.exceedance)


def lln_check(d, g_id, T_list, ensemble_size, policy, seed, eps_rel=0.1, delta=0.05,
              x0=1.0, **kwargs):
    """Fraction of Langevin paths whose time average of g misses int g pi by more than eps."""
    g = lln_function(d, g_id)
    horizons = np.sort(np.asarray(T_list, dtype=float))
    if horizons[0] <= 0.0:
        raise ValueError('LLN horizons must be positive')
    a_g = 1.0 if g_id == 'one' else d.expectation(g)
    ensemble = simulate_ensemble(langevin_spec(d), x0, horizons, ensemble_size, policy, seed,
                                 integrand=g, **kwargs)
    averages = ensemble.integrals / horizons
    eps = eps_rel * a_g
    exceedance = [float(np.mean(~(np.abs(averages[:, k] - a_g) <= eps)))
                  for k in range(len(horizons))]
    logger.info('LLN for g=%s (a_g=%.6g): %s', g_id, a_g,
                ', '.join('T=%g: %.3g' % row for row in zip(horizons, exceedance)))
    return LlnTable(g_id, a_g, eps, delta, horizons, exceedance)


ChiGrowth = namedtuple('ChiGrowth', 'a_g horizons fraction mean_rate')


def chi_growth(sf, T_list, ensemble_size, policy, seed, x0=1.0, **kwargs):
    """Fraction of Langevin paths with chi_T >= a_g T / 2, a_g = int pi / f^2."""
    d = sf.density
    horizons = np.sort(np.asarray(T_list, dtype=float))
    inverse = lambda z: 1.0 / sf(z)
    a_g = d.expectation(inverse)
    ensemble = simulate_ensemble(langevin_spec(d), x0, horizons, ensemble_size, policy, seed,
                                 integrand=inverse, **kwargs)
    chi = ensemble.integrals
    fraction = np.mean(chi >= 0.5 * a_g * horizons, axis=0)
    return ChiGrowth(a_g, horizons, fraction, np.nanmean(chi, axis=0) / horizons)


MODELS = ('exponential', 'polynomial')


class RateFit(object):
    """Least-squares decay fit of a TV curve.

    exponential: log TV = log C - rate t
    polynomial:  log TV = log C - rate log t
    """

    def __init__(self, model, rate, rate_ci, constant, r2, window, n_points, residuals):
        self.model = model
        self.rate = rate
        self.rate_ci = rate_ci
        self.constant = constant
        self.r2 = r2
        self.window = window
        self.n_points = n_points
        self.residuals = residuals

    @property
    def accepted(self):
        return self.rate > 0.0

    def __repr__(self):
        return 'RateFit(%s, rate=%.6g [%.6g, %.6g], R2=%.4f)' % (
            self.model, self.rate, self.rate_ci[0], self.rate_ci[1], self.r2)


def rate_fit(curve, model='exponential', window=None, burn_in=0.5, floor_factor=3.0,
             min_points=5):
    """Fit from the first checkpoint with TV < ``burn_in``, using points above the noise floor."""
    if model not in MODELS:
        raise ValueError('unknown rate model %r' % model)
    t, tv = curve.checkpoints, curve.tv
    usable = (tv > floor_factor * curve.floor) & (tv > 0.0)
    below = np.flatnonzero(tv < burn_in)
    start = t[below[0]] if below.size else np.inf
    usable &= t >= start
    if model == 'polynomial':
        usable &= t > 0.0
    if window is not None:
        usable &= (t >= window[0]) & (t <= window[1])
    n = int(usable.sum())
    if n < min_points:
        raise InsufficientData('%s fit needs %d checkpoints above %g x noise floor after burn-in, '
                               'got %d' % (model, min_points, floor_factor, n))
    x = t[usable] if model == 'exponential' else np.log(t[usable])
    y = np.log(tv[usable])
    fit = stats.linregress(x, y)
    half = float(stats.t.ppf(0.975, n - 2) * fit.stderr)
    rate = -float(fit.slope)
    residuals = y - (fit.intercept + fit.slope * x)
    result = RateFit(model, rate, (rate - half, rate + half), float(np.exp(fit.intercept)),
                     float(fit.rvalue ** 2), (float(t[usable][0]), float(t[usable][-1])), n,
                     residuals)
    logger.info('%r', result)
    return result


class SweepReport(object):
    """TV curves from several initial states and whether they collapse at the end."""

    def __init__(self, curves):
        self.curves = curves
        tv = np.array([c.tv for c in curves.values()])
        se = np.array([c.se for c in curves.values()])
        self.checkpoints = next(iter(curves.values())).checkpoints
        self.max_tv = tv.max(axis=0)
        self.spread = float(tv[:, -1].max() - tv[:, -1].min())
        self.pooled_se = float(np.sqrt(np.mean(se[:, -1] ** 2)))

    @property
    def collapsed(self):
        return self.spread <= 3.0 * self.pooled_se

    def __repr__(self):
        return 'SweepReport(%d curves, spread=%.4g, pooled_se=%.4g)' % (
            len(self.curves), self.spread, self.pooled_se)


def initial_condition_sweep(spec, x0_list, checkpoints, ensemble_size, policy, seed, **kwargs):
    curves = {}
    for j, x0 in enumerate(x0_list):
        curves[x0] = tv_curve(spec, x0, checkpoints, ensemble_size, policy, seed,
                              namespace=j + 1, label='%s_x0=%g' % (spec.kind, x0), **kwargs)
    report = SweepReport(curves)
    logger.info('%r collapsed=%s', report, report.collapsed)
    return report
