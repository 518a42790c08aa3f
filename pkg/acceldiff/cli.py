"""Command line experiment runner.

    acceldiff run CONFIG [--seed N] [--out DIR] [--emit-svg] [--emit-paths] [--threads N]
    acceldiff validate CONFIG
    acceldiff report RUN_DIR

Exit status is 0 on success, 1 on an operational error and 2 when a
scientific invariant is violated. A run with violated invariants keeps its
outputs; any other failure removes them.
"""

import argparse
import logging
import os
import platform
import shutil
import sys
import time

import numpy as np
import scipy

import acceldiff
from acceldiff.analysis import check_ladder, exp_moment_bound, moment_ladder, tv_bound_curve
from acceldiff.config import DEFAULT_STEPS, load_config
from acceldiff.construct import (
    ACCELERATED, BIBBY, DRIFTS, LANGEVIN, TIME_CHANGE, SpeedFunction, accelerated_spec,
    bibby_coefficients, bibby_spec, build_spec, key_identity_residual, langevin_spec,
    mixing_exponent_r, speed_envelope_grid, stationarity_residual,
)
from acceldiff.density import default_envelope_grid, make_density, verify_envelope
from acceldiff.diagnostics import (
    binning_for, chi_growth, curve_from_ensemble, hitting_stats, initial_condition_sweep,
    lln_check, rate_fit, sanity_check, time_change_ks, tv_curve,
)
from acceldiff.errors import AccelDiffError, InsufficientData, InvariantViolation
from acceldiff.plot import line_plot
from acceldiff.quadrature import geometric_grid
from acceldiff.report import CHECKS, MANIFEST, Check, report, write_csv, write_manifest
from acceldiff.sde import StepPolicy, simulate_ensemble, time_changed_ensemble


logger = logging.getLogger(__name__)

KEY_IDENTITY_TOL = 1e-6
STATIONARITY_TOL = 1e-5
FLUX_TOL = 1e-5
LADDER_TOL = 1e-8
RECORDED_PATHS = 10


class Run(object):
    """Output directory of one run: the files it wrote and the checks it made."""

    def __init__(self, config):
        self.config = config
        self.dir = config.output_dir
        self.files = []
        self.checks = []
        self.diagnostics = []
        self._created = False
        self.density = None

    def open(self):
        if not os.path.isdir(self.dir):
            os.makedirs(self.dir)
            self._created = True

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.dir, name)

    def csv(self, name, header, rows, compress=False):
        return write_csv(self.path(name), header, rows, compress=compress)

    def svg(self, name, series, **kwargs):
        if self.config.emit_svg:
            line_plot(self.path(name), series, **kwargs)

    def check(self, invariant, value, threshold, passed, hard=False):
        check = Check(invariant, value, threshold, bool(passed), hard)
        self.checks.append(check)
        level = logging.INFO if check.passed else (logging.ERROR if hard else logging.WARNING)
        logger.log(level, 'check %s: value=%s threshold=%s %s', invariant, value, threshold,
                   'passed' if check.passed else 'FAILED')
        return check.passed

    def diagnose(self, name, **values):
        """Record reported-only quantities; they go to the manifest without a threshold."""
        self.diagnostics.append((name, values))
        logger.info('%s: %s', name, ', '.join('%s=%s' % kv for kv in sorted(values.items())))

    def hard_failures(self):
        return [c for c in self.checks if c.hard and not c.passed]

    def close(self, status, started):
        seconds = time.time() - started
        self.csv(CHECKS, Check._fields, self.checks)
        config = self.config
        with open(self.path('config.json'), 'w') as fd:
            config.serialize(fd)
            fd.write('\n')
        entries = [
            ('tool', 'acceldiff'),
            ('version', acceldiff.__version__),
            ('experiment', config.experiment),
            ('config_hash', config.hash()),
            ('master_seed', config.master_seed),
            ('density', repr(config.model)),
            ('processes', ','.join(p.kind for p in config.processes)),
            ('normal_method', config.normal_method),
            ('threads', config.threads),
            ('python', platform.python_version()),
            ('numpy', np.__version__),
            ('scipy', scipy.__version__),
            ('started', time.strftime('%Y-%m-%dT%H:%M:%SZ', time.gmtime(started))),
            ('wall_clock_seconds', '%.3f' % seconds),
            ('status', status),
        ] + [
            ('diagnostics_%s' % name, ','.join('%s=%s' % kv for kv in sorted(values.items())))
            for name, values in self.diagnostics
        ] + [
            ('files', ','.join([MANIFEST] + self.files)),
        ]
        write_manifest(os.path.join(self.dir, MANIFEST), entries)

    def remove(self):
        if self._created:
            shutil.rmtree(self.dir, ignore_errors=True)
            return
        for name in self.files + [MANIFEST]:
            path = os.path.join(self.dir, name)
            if os.path.exists(path):
                os.remove(path)


def _density(run):
    if run.density is None:
        run.density = make_density(run.config.model)
    return run.density


def _engine(config):
    return {'chunk_size': config.chunk_size, 'threads': config.threads,
            'normal_method': config.normal_method}


def _spec(run, pc):
    return build_spec(pc.kind, _density(run), pc.c1, pc.c2, pc.reflection, run.config.a_margin,
                      drift=pc.drift or TIME_CHANGE)


def _speed(run):
    pc = run.config.process(ACCELERATED)
    c1, c2 = (pc.c1, pc.c2) if pc else (1.0, 1.0)
    return SpeedFunction(_density(run), c1, c2, a_margin=run.config.a_margin)


def _langevin_policy(config):
    pc = config.process(LANGEVIN)
    return pc.policy if pc else StepPolicy(**DEFAULT_STEPS[LANGEVIN])


def _ladder(run, sf):
    config = run.config
    ladder = moment_ladder(sf, config.K, config.N, config.q_max)
    try:
        rows = check_ladder(ladder, tol=LADDER_TOL)
    except InvariantViolation as e:
        run.check(e.name, e.detail, '', False, hard=True)
        rows = [(q, ladder.v[q].sup(), ladder.bound(q)) for q in range(1, ladder.q_max + 1)]
    else:
        for q, sup, bound in rows:
            run.check('ladder_bound_q%d' % q, sup, bound + LADDER_TOL, True, hard=True)
    run.csv('ladder_bounds.csv', ('q', 'sup_v', 'bound'), rows)
    run.csv('constants.csv', ('name', 'value'), [
        ('m', sf.density.m), ('c', sf.density.c), ('a_scan', sf.a_scan), ('a', sf.a),
        ('a_envelope', sf.a_envelope), ('A_m', ladder.A_m), ('C', ladder.C),
        ('C_envelope', ladder.C_envelope), ('alpha_max', ladder.alpha_max),
        ('ladder_convergence', ladder.convergence),
    ])
    if ladder.convergence is not None:
        run.check('ladder_converged_in_N', ladder.convergence, 1e-6, ladder.convergence <= 1e-6)
    return ladder


def _stationarity(run, label, spec, grid, rows):
    residual = stationarity_residual(spec, grid)
    run.check('stationarity_%s' % label, residual.relative, STATIONARITY_TOL,
              residual.relative <= STATIONARITY_TOL, hard=True)
    run.check('zero_flux_%s' % label, residual.flux_relative, FLUX_TOL,
              residual.flux_relative <= FLUX_TOL, hard=True)
    rows.extend([('stationarity_%s_relative' % label, residual.relative, STATIONARITY_TOL),
                 ('stationarity_%s_absolute' % label, residual.absolute, ''),
                 ('flux_%s_relative' % label, residual.flux_relative, FLUX_TOL),
                 ('flux_%s_absolute' % label, residual.flux, ''),
                 ('flux_%s_origin' % label, residual.flux_origin, '')])


def run_identities(run):
    d = _density(run)
    sf = _speed(run)
    rows = []
    envelope = verify_envelope(d, default_envelope_grid())
    run.check('density_envelope', envelope.c_low, d.c, envelope.passed, hard=True)
    rows.extend([('c', d.c, ''), ('c_low', envelope.c_low, ''), ('c_high', envelope.c_high, '')])

    key = key_identity_residual(d, sf, np.linspace(0.0, 100.0, 2001))
    run.check('key_identity', key, KEY_IDENTITY_TOL, key <= KEY_IDENTITY_TOL, hard=True)
    rows.append(('key_identity_residual', key, KEY_IDENTITY_TOL))

    z = speed_envelope_grid()
    ratio = sf(z) / (1.0 + z) ** (d.m + 1.0)
    worst = max(float(ratio.max()) * sf.a, 1.0 / (float(ratio.min()) / sf.a))
    run.check('speed_envelope', worst, 1.0, worst <= 1.0 + 1e-12, hard=True)
    rows.extend([('a_scan', sf.a_scan, ''), ('a', sf.a, ''), ('a_envelope', sf.a_envelope, ''),
                 ('f2_at_0', float(sf(0.0)), ''), ('f2_at_1', float(sf(1.0)), '')])

    # each process against its own invariant law: pi, or pi / (f^2 Z) for the time change
    grid = np.linspace(0.1, 50.0, 500)
    _stationarity(run, LANGEVIN, langevin_spec(d), grid, rows)
    for drift in DRIFTS:
        _stationarity(run, '%s_%s' % (ACCELERATED, drift), accelerated_spec(sf, drift=drift),
                      grid, rows)
    _stationarity(run, BIBBY, bibby_spec(d), grid, rows)

    # the time change leaves pi / f^2 invariant; against pi its flux is the constant c2/2
    against_pi = stationarity_residual(accelerated_spec(sf), grid, law=d)
    law = sf.time_changed_law
    rows.extend([('time_changed_flux_against_pi', against_pi.flux_origin, ''),
                 ('time_changed_normalization', law.normalization, ''),
                 ('time_changed_mean', law.mean(), '')])

    mu, v = bibby_coefficients(d)
    lowest = float(np.min(v(np.linspace(0.0, 1e3, 10001))))
    run.check('bibby_v_nonnegative', lowest, -1e-12, lowest >= -1e-12, hard=True)
    rows.extend([('bibby_mu', mu, ''), ('bibby_v_min', lowest, '')])

    mixing = mixing_exponent_r(d, geometric_grid(1e6, 60, lower=1.0))
    rows.append(('mixing_exponent_r', mixing.r, ''))
    run.csv('identities.csv', ('quantity', 'value', 'tolerance'), rows)


def run_bvp(run):
    config = run.config
    sf = _speed(run)
    ladder = _ladder(run, sf)
    run.csv('ladder.csv', ('q', 'xi', 'v_q'), ladder.rows())
    xi = np.asarray(config.x0_list, dtype=float)
    bounds, curves = [], []
    for fraction in config.alpha_list:
        alpha = fraction * ladder.alpha_max
        for x, value in zip(xi, exp_moment_bound(ladder, alpha, xi)):
            bounds.append((fraction, alpha, x, value))
        for t, b in tv_bound_curve(ladder, alpha, config.checkpoints):
            curves.append((fraction, alpha, t, b))
    run.csv('exp_moment_bound.csv', ('alpha_fraction', 'alpha', 'xi', 'bound'), bounds)
    run.csv('tv_bound.csv', ('alpha_fraction', 'alpha', 't', 'bound'), curves)


def run_hitting(run):
    config = run.config
    ladder = _ladder(run, _speed(run))
    pc = config.process(ACCELERATED)
    spec = _spec(run, pc)
    alphas = [f * ladder.alpha_max for f in config.alpha_list]
    moments, exps, samples = [], [], []
    pooled = dict((a, []) for a in alphas)
    for j, x0 in enumerate(config.x0_list):
        predicted = float(ladder.v[1](x0))
        horizon = config.horizon or max(10.0 * predicted, 1.0)
        hs = hitting_stats(spec, x0, config.K, alphas, config.ensemble_size, horizon, pc.policy,
                           config.master_seed, q_max=config.q_max, namespace=j + 1,
                           bridge=config.bridge, **_engine(config))
        for q, est in sorted(hs.moments.items()):
            bound = ladder.bound(q)
            moments.append((x0, q, est.value, est.se, bound, float(ladder.v[q](x0))))
            run.check('hitting_moment_bound_x0=%g_q%d' % (x0, q), est.value, bound + 3 * est.se,
                      est.value <= bound + 3 * est.se)
        if x0 <= config.N:
            est = hs.moments[1]
            gap = abs(est.value - predicted)
            run.check('bvp_vs_monte_carlo_x0=%g' % x0, gap, 3 * est.se, gap <= 3 * est.se)
        for fraction, alpha in zip(config.alpha_list, alphas):
            est = hs.exp_moments[alpha]
            bound = 1.0 / (1.0 - alpha * ladder.C)
            series = float(exp_moment_bound(ladder, alpha, x0))
            exps.append((x0, fraction, alpha, est.value, est.se, bound, series))
            run.check('exp_moment_bound_x0=%g_alpha=%g' % (x0, fraction), est.value,
                      bound + 3 * est.se, est.value <= bound + 3 * est.se)
            pooled[alpha].append(est)
        samples.extend((x0, g) for g in hs.samples)
    for fraction, alpha in zip(config.alpha_list, alphas):
        values = [e.value for e in pooled[alpha]]
        se = float(np.sqrt(np.mean([e.se ** 2 for e in pooled[alpha]])))
        spread = max(values) - min(values)
        run.check('exp_moment_uniformity_alpha=%g' % fraction, spread, 3 * se, spread <= 3 * se)
    run.csv('hitting.csv', ('x0', 'q', 'estimate', 'se', 'bound', 'bvp'), moments)
    run.csv('exp_moments.csv', ('x0', 'alpha_fraction', 'alpha', 'estimate', 'se', 'bound',
                                'series_bound'), exps)
    run.csv('hitting_samples.csv', ('x0', 'gamma'), samples)


def run_lln(run):
    config = run.config
    d = _density(run)
    policy = _langevin_policy(config)
    x0 = config.x0
    table = lln_check(d, config.lln_function, config.T_list, config.ensemble_size, policy,
                      config.master_seed, eps_rel=config.eps_rel, delta=config.delta, x0=x0,
                      **_engine(config))
    run.csv('lln.csv', ('T', 'exceedance'), table.rows())
    run.check('lln_exceedance', table.exceedance[-1], table.delta, table.passed)
    growth = chi_growth(_speed(run), config.T_list, config.ensemble_size, policy,
                        config.master_seed, x0=x0, namespace=1, **_engine(config))
    run.csv('chi_growth.csv', ('T', 'fraction', 'mean_rate', 'a_g'),
            [(t, f, r, growth.a_g) for t, f, r in
             zip(growth.horizons, growth.fraction, growth.mean_rate)])


def _fit_rows(run, curve):
    rows, fits = [], {}
    for model in ('exponential', 'polynomial'):
        try:
            fit = rate_fit(curve, model)
        except InsufficientData as e:
            logger.warning('%s %s fit skipped: %s', curve.label, model, e)
            continue
        fits[model] = fit
        rows.append((curve.label, model, fit.rate, fit.rate_ci[0], fit.rate_ci[1], fit.constant,
                     fit.r2, fit.window[0], fit.window[1], fit.n_points))
    return rows, fits


def _envelope_check(run, curve, ladder):
    config = run.config
    alpha = config.alpha_list[0] * ladder.alpha_max
    bound = tv_bound_curve(ladder, alpha, curve.checkpoints)[:, 1]
    below = np.flatnonzero(curve.tv < 0.5)
    window = slice(below[0], None) if below.size else slice(0, 0)
    excess = float(np.max(curve.tv[window] - bound[window])) if below.size else float('nan')
    run.check('tv_below_envelope', excess, 0.0, below.size > 0 and excess <= 0.0)
    return bound


def _boundary_diagnostics(run, curve, kind):
    run.diagnose(kind, zero_fraction='%.6g' % curve.zero_fraction, clamps=curve.clamps,
                 local_time='%.6g' % curve.local_time)
    return (kind, curve.ensemble_size, curve.zero_fraction, curve.clamps, curve.local_time)


def run_tv(run):
    config = run.config
    curves, fit_rows, series, records, boundary = [], [], [], [], []
    ladder = None
    for j, pc in enumerate(config.processes):
        spec = _spec(run, pc)
        curve = tv_curve(spec, config.x0, config.checkpoints, config.ensemble_size, pc.policy,
                         config.master_seed, bins=config.bins, coarsen_bins=config.coarsen_bins,
                         bootstrap=config.bootstrap,
                         record_paths=RECORDED_PATHS if config.emit_paths else 0,
                         **_engine(config))
        curves.append(curve)
        rows, fits = _fit_rows(run, curve)
        fit_rows.extend(rows)
        series.append((pc.kind, curve.checkpoints, curve.tv))
        records.extend((pc.kind,) + r for r in curve.records)
        boundary.append(_boundary_diagnostics(run, curve, pc.kind))
        sanity = sanity_check(spec.invariant, curve.binning, config.ensemble_size,
                              config.master_seed, namespace=j + 1)
        run.check('two_sample_tv_%s' % pc.kind, sanity.tv, sanity.bound, sanity.passed)
        if pc.kind == ACCELERATED:
            exp = fits.get('exponential')
            r2 = exp.r2 if exp else float('nan')
            run.check('exponential_fit_accelerated', r2, 0.95, exp is not None and exp.accepted
                      and r2 >= 0.95)
            if pc.drift == TIME_CHANGE:
                ladder = _ladder(run, spec.speed_function)
                bound = _envelope_check(run, curve, ladder)
                series.append(('bound', curve.checkpoints, bound))
        elif pc.kind == LANGEVIN:
            poly, exp = fits.get('polynomial'), fits.get('exponential')
            r2 = poly.r2 if poly else float('nan')
            run.check('polynomial_fit_langevin', r2, 0.9, poly is not None and r2 >= 0.9 and
                      (exp is None or exp.r2 < r2))
    run.csv('tv_curve.csv', ('process', 't', 'tv', 'se', 'floor'),
            (row + (f,) for c in curves for row, f in zip(c.rows(), c.floor)))
    run.csv('fits.csv', ('process', 'model', 'rate', 'ci_low', 'ci_high', 'constant', 'r2',
                         't_start', 't_end', 'n_points'), fit_rows)
    run.csv('boundary.csv', ('process', 'paths', 'zero_fraction', 'clamps', 'local_time'),
            boundary)
    if ladder is not None:
        alpha = config.alpha_list[0] * ladder.alpha_max
        run.csv('tv_bound.csv', ('t', 'bound'), tv_bound_curve(ladder, alpha, config.checkpoints))
    if config.emit_paths:
        run.csv('paths.csv.gz', ('process', 'path', 't', 'x', 'local_time'), records, compress=True)
    run.svg('tv_curves.svg', series, title='binned TV from x0=%s' % config.x0)
    return dict((c.label, c) for c in curves)


def run_compare(run):
    curves = run_tv(run)
    if LANGEVIN in curves and ACCELERATED in curves:
        t = curves[LANGEVIN].checkpoints
        k = int(np.argmin(np.abs(t - 10.0)))
        slow, fast = curves[LANGEVIN].tv[k], curves[ACCELERATED].tv[k]
        ratio = slow / fast if fast > 0 else float('inf')
        run.check('langevin_over_accelerated_t=%g' % t[k], ratio, 3.0, ratio >= 3.0)
    t = next(iter(curves.values())).checkpoints
    run.csv('compare.csv', ('t',) + tuple(curves), zip(t, *(c.tv for c in curves.values())))


def run_sweep(run):
    config = run.config
    rows, summary = [], []
    for pc in config.processes:
        sweep = initial_condition_sweep(_spec(run, pc), config.x0_list, config.checkpoints,
                                        config.ensemble_size, pc.policy, config.master_seed,
                                        bins=config.bins, coarsen_bins=config.coarsen_bins,
                                        bootstrap=config.bootstrap,
                                        **_engine(config))
        for x0, curve in sweep.curves.items():
            rows.extend((pc.kind, x0, t, tv, se) for t, tv, se in
                        zip(curve.checkpoints, curve.tv, curve.se))
        summary.append((pc.kind, sweep.spread, sweep.pooled_se, sweep.collapsed))
        if pc.kind == ACCELERATED:
            run.check('uniformity_accelerated', sweep.spread, 3 * sweep.pooled_se, sweep.collapsed)
        elif pc.kind == LANGEVIN:
            run.check('no_collapse_langevin', sweep.spread, 3 * sweep.pooled_se,
                      not sweep.collapsed)
        run.svg('sweep_%s.svg' % pc.kind,
                [('x0=%g' % x0, c.checkpoints, c.tv) for x0, c in sweep.curves.items()],
                title='%s TV by initial state' % pc.kind)
    run.csv('sweep.csv', ('process', 'x0', 't', 'tv', 'se'), rows)
    run.csv('sweep_summary.csv', ('process', 'spread', 'pooled_se', 'collapsed'), summary)


def run_timechange(run):
    config = run.config
    d = _density(run)
    pc = config.process(ACCELERATED)
    spec = _spec(run, pc)
    sf = spec.speed_function
    engine = _engine(config)
    direct = simulate_ensemble(spec, config.x0, config.checkpoints, config.ensemble_size,
                               pc.policy, config.master_seed, **engine)
    changed = time_changed_ensemble(langevin_spec(d), sf, config.x0, config.checkpoints,
                                    config.ensemble_size, _langevin_policy(config),
                                    config.master_seed, config.horizon or 1e5, namespace=1,
                                    **engine)
    binning = binning_for(sf.time_changed_law, config.ensemble_size, config.bins,
                          config.coarsen_bins)
    a = curve_from_ensemble(direct, binning, config.master_seed, bootstrap=config.bootstrap,
                            x0=config.x0, label='direct')
    b = curve_from_ensemble(changed, binning, config.master_seed, namespace=1,
                            bootstrap=config.bootstrap, x0=config.x0, label='time_changed')
    rows = []
    for k, t in enumerate(config.checkpoints):
        ks = time_change_ks(direct.at(k), changed.at(k))
        rows.append((t, ks.statistic, ks.pvalue, ks.critical, ks.passed,
                     a.tv[k], a.se[k], b.tv[k], b.se[k]))
    run.csv('timechange.csv', ('t', 'ks_statistic', 'pvalue', 'critical', 'passed',
                               'tv_direct', 'se_direct', 'tv_time_changed', 'se_time_changed'),
            rows)
    last = rows[-1]
    run.check('time_change_ks', last[1], last[3], last[4])
    gap = np.abs(a.tv - b.tv) - 3.0 * np.sqrt(a.se ** 2 + b.se ** 2)
    run.check('time_change_tv_agreement', float(gap.max()), 0.0, gap.max() <= 0.0)
    run.svg('timechange.svg', [('direct', a.checkpoints, a.tv), ('time changed', b.checkpoints,
                                                                  b.tv)],
            title='accelerated process: direct and time-changed')


EXPERIMENTS = {
    'identities': run_identities,
    'bvp': run_bvp,
    'hitting': run_hitting,
    'lln': run_lln,
    'tv': run_tv,
    'compare': run_compare,
    'sweep': run_sweep,
    'timechange': run_timechange,
}


def run_experiment(config):
    """Execute ``config`` into its output directory; return the Run."""
    run = Run(config)
    started = time.time()
    logger.info('running %r into %s', config, run.dir)
    try:
        run.open()
        try:
            EXPERIMENTS[config.experiment](run)
        except InvariantViolation as e:
            run.check(e.name, e.detail, '', False, hard=True)
        failed = run.hard_failures()
        run.close('invariant_violation' if failed else 'ok', started)
        report(run.dir)
    except Exception:
        run.remove()
        raise
    if failed:
        raise InvariantViolation(failed[0].invariant, failed[0].value)
    logger.info('finished %s in %.1fs', config.experiment, time.time() - started)
    return run


def cmd_run(args):
    config = load_config(args.config).with_overrides(
        master_seed=args.seed, output_dir=args.out, threads=args.threads,
        emit_svg=args.emit_svg or None, emit_paths=args.emit_paths or None)
    run_experiment(config)
    print(os.path.join(config.output_dir, 'summary.txt'))
    return 0


def cmd_validate(args):
    config = load_config(args.config)
    print('%s: valid %s experiment (hash %s)' % (args.config, config.experiment, config.hash()))
    return 0


def cmd_report(args):
    sys.stdout.write(report(args.run_dir))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog='acceldiff', description=__doc__.split('\n')[0])
    parser.add_argument('-v', '--verbose', action='store_true', help='log debug messages')
    parser.add_argument('-q', '--quiet', action='store_true', help='log warnings and errors only')
    commands = parser.add_subparsers(dest='command')
    commands.required = True

    run = commands.add_parser('run', help='run the experiment a config declares')
    run.add_argument('config')
    run.add_argument('--seed', type=int, help='override the master seed')
    run.add_argument('--out', help='override the output directory')
    run.add_argument('--emit-svg', action='store_true', help='also write SVG plots')
    run.add_argument('--emit-paths', action='store_true', help='also write sample paths')
    run.add_argument('--threads', type=int, help='worker threads for ensembles')
    run.set_defaults(func=cmd_run)

    validate = commands.add_parser('validate', help='check a config without running it')
    validate.add_argument('config')
    validate.set_defaults(func=cmd_validate)

    rep = commands.add_parser('report', help='summarize a finished run directory')
    rep.add_argument('run_dir')
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except InvariantViolation as e:
        logger.error('%s', e)
        return 2
    except (AccelDiffError, OSError, ValueError) as e:
        logger.error('%s', e)
        return 1


if __name__ == '__main__':
    sys.exit(main())
