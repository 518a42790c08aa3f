"""Euler-Maruyama simulation of reflected diffusions on the half-line.

Single paths are recorded step by step (``simulate_path``); ensembles are
advanced as numpy arrays in chunks of paths, chunk i drawing from random
stream i, so results depend on the master seed and the chunk size but never
on how many worker threads run the chunks.
"""

import logging
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import ndtri

from acceldiff.errors import HorizonExhausted, SimulationError


logger = logging.getLogger(__name__)

# States beyond this abort the path instead of saturating.
OVERFLOW = 1e30

NORMAL_METHODS = ('inverse_cdf', 'ziggurat')
STATIONARY = 'stationary'

HittingSample = namedtuple('HittingSample', 'times aborted')


def stream(master_seed, index, namespace=None):
    """Counter-based (Philox) generator for stream ``index`` of ``master_seed``.

    ``namespace`` (an int or a tuple of ints) prefixes the spawn key so
    unrelated consumers of one master seed never share a stream.
    """
    if namespace is None:
        namespace = ()
    elif not isinstance(namespace, tuple):
        namespace = (namespace,)
    key = tuple(int(k) for k in namespace) + (int(index),)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def make_streams(master_seed, n):
    """n independent reproducible streams; stream i does not depend on n."""
    if int(n) < 1:
        raise ValueError('need at least one stream (got %r)' % n)
    if not 0 <= int(master_seed) < 2 ** 64:
        raise ValueError('master seed must be a 64-bit unsigned integer (got %r)' % master_seed)
    return [stream(master_seed, i) for i in range(int(n))]


def normals(rng, n, method='inverse_cdf'):
    if method == 'ziggurat':
        return rng.standard_normal(n)
    if method == 'inverse_cdf':
        # random() returns multiples of 2^-53 in [0, 1); shift into (0, 1)
        return ndtri(rng.random(n) + 2.0 ** -54)
    raise ValueError('unknown normal method %r' % method)


def reflect(x, rule):
    if rule == 'abs':
        return np.abs(x)
    return np.maximum(x, 0.0)


class StepPolicy(object):
    """Step size rule.

    uniform            h
    adaptive_speed     min(h_max, kappa / s(x))
    adaptive_relative  min(h_max, kappa (1 + x)^2 / s(x))

    where s is the clock speed of the process. A step underflows when
    h s(x) < h_min, i.e. on the Langevin clock.
    """

    MODES = ('uniform', 'adaptive_speed', 'adaptive_relative')

    def __init__(self, mode='uniform', h=1e-3, h_max=None, kappa=1e-3, h_min=1e-12):
        if mode not in self.MODES:
            raise ValueError('unknown step mode %r' % mode)
        if mode == 'uniform':
            h_max = h
        elif h_max is None:
            h_max = 1e-2
        for name, value in (('h', h), ('h_max', h_max), ('kappa', kappa), ('h_min', h_min)):
            if not (np.isfinite(value) and value > 0.0):
                raise ValueError('step policy %s must be positive (got %r)' % (name, value))
        self.mode = mode
        self.h = float(h)
        self.h_max = float(h_max)
        self.kappa = float(kappa)
        self.h_min = float(h_min)

    @classmethod
    def uniform(cls, h):
        return cls('uniform', h=h)

    def steps(self, spec, x):
        x = np.asarray(x, dtype=float)
        if self.mode == 'uniform':
            return np.full_like(x, self.h)
        scale = self.kappa if self.mode == 'adaptive_speed' else self.kappa * (1.0 + x) ** 2
        return np.minimum(self.h_max, scale / spec.speed(x))

    def to_dict(self):
        d = {'mode': self.mode, 'h_min': self.h_min}
        if self.mode == 'uniform':
            d['h'] = self.h
        else:
            d.update(h_max=self.h_max, kappa=self.kappa)
        return d

    def __repr__(self):
        return 'StepPolicy(%s)' % ', '.join('%s=%r' % kv for kv in sorted(self.to_dict().items()))


class Path(object):
    """One trajectory: times, states and accumulated reflection (local time)."""

    def __init__(self, times, states, local_time, seed_id=None, clamps=0):
        self.times = np.asarray(times, dtype=float)
        self.states = np.asarray(states, dtype=float)
        self.local_time = np.asarray(local_time, dtype=float)
        self.seed_id = seed_id
        self.clamps = clamps

    def __len__(self):
        return len(self.times)

    @property
    def duration(self):
        return self.times[-1] - self.times[0]

    @property
    def final(self):
        return self.states[-1]

    def zero_fraction(self):
        return float(np.mean(self.states == 0.0))

    def __repr__(self):
        return 'Path(n=%d, T=%.6g, final=%.6g, seed_id=%r)' % (
            len(self), self.times[-1], self.final, self.seed_id)


class _NormalBuffer(object):

    def __init__(self, rng, method, block=4096):
        self._rng = rng
        self._method = method
        self._block = block
        self._values = np.empty(0)
        self._i = 0

    def next(self):
        if self._i >= len(self._values):
            self._values = normals(self._rng, self._block, self._method)
            self._i = 0
        value = self._values[self._i]
        self._i += 1
        return value


def simulate_path(spec, x0, T, policy, rng, normal_method='inverse_cdf', seed_id=None):
    """Simulate one reflected path from x0 until the first grid time >= T."""
    if not (np.isfinite(T) and T > 0.0):
        raise ValueError('horizon must be finite and positive (got %r)' % T)
    if not x0 >= 0.0:
        raise ValueError('initial state must be >= 0 (got %r)' % x0)
    draws = _NormalBuffer(rng, normal_method)
    t, x, phi = 0.0, float(x0), 0.0
    times, states, local_time = [t], [x], [phi]
    clamps = 0
    while t < T:
        h = float(policy.steps(spec, x))
        if h * float(spec.speed(x)) < policy.h_min:
            raise SimulationError('step underflow (h=%.3g)' % h, seed_id, t, x)
        pre = x + float(spec.drift(x)) * h + float(spec.sigma(x)) * np.sqrt(h) * draws.next()
        new = float(reflect(pre, spec.reflection))
        if not np.isfinite(new) or new > OVERFLOW:
            raise SimulationError('state overflow', seed_id, t + h, new)
        if pre < 0.0:
            phi += new - pre
            clamps += 1
        t += h
        x = new
        times.append(t)
        states.append(x)
        local_time.append(phi)
    if clamps and spec.reflection == 'clamp':
        logger.warning('path %r clamped at 0 on %d steps', seed_id, clamps)
    return Path(times, states, local_time, seed_id=seed_id,
                clamps=clamps if spec.reflection == 'clamp' else 0)


class TimeChange(object):
    """chi_t = int_0^t f^-2(Y_s) ds (trapezoid per step) and its inverse beta."""

    def __init__(self, times, chi):
        self.times = np.asarray(times, dtype=float)
        self.chi = np.asarray(chi, dtype=float)

    @property
    def end(self):
        return float(self.chi[-1])

    def slopes(self):
        return np.diff(self.chi) / np.diff(self.times)

    def chi_at(self, t):
        return np.interp(t, self.times, self.chi)

    def beta(self, s):
        return np.interp(s, self.chi, self.times)


def time_change(y, sf):
    inverse = 1.0 / sf(y.states)
    increments = 0.5 * (inverse[:-1] + inverse[1:]) * np.diff(y.times)
    return TimeChange(y.times, np.concatenate([[0.0], np.cumsum(increments)]))


def chi_end(y, sf):
    return time_change(y, sf).end


def time_change_path(y, sf, T_new):
    """X_t = Y_{beta_t} on the image grid chi(t_i), up to the first chi >= T_new."""
    tc = time_change(y, sf)
    if tc.end < T_new:
        raise HorizonExhausted(tc.end, T_new)
    last = int(np.searchsorted(tc.chi, T_new, side='left'))
    return Path(tc.chi[:last + 1], y.states[:last + 1], y.local_time[:last + 1],
                seed_id=y.seed_id, clamps=y.clamps)


class Ensemble(object):
    """States of independent paths at fixed checkpoints.

    ``states`` has shape (paths, checkpoints); aborted paths hold NaN from
    the checkpoint at which they aborted. ``integrals`` holds the running
    trapezoid integral of the optional integrand.
    """

    def __init__(self, checkpoints, states, aborted, local_time, clamps=0,
                 zero_fraction=0.0, steps=0, integrals=None, records=None):
        self.checkpoints = checkpoints
        self.states = states
        self.aborted = aborted
        self.local_time = local_time
        self.clamps = clamps
        self.zero_fraction = zero_fraction
        self.steps = steps
        self.integrals = integrals
        self.records = records or []

    @property
    def size(self):
        return self.states.shape[0]

    def at(self, k):
        """Finite states at checkpoint k."""
        column = self.states[:, k]
        return column[np.isfinite(column)]


def _chunks(n_paths, chunk_size):
    if n_paths < 1 or chunk_size < 1:
        raise ValueError('need positive path and chunk counts')
    starts = range(0, n_paths, chunk_size)
    return [(i, start, min(n_paths, start + chunk_size)) for i, start in enumerate(starts)]


def _map_chunks(fn, chunks, threads):
    if threads is None or threads <= 1 or len(chunks) == 1:
        return [fn(chunk) for chunk in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, chunks))


def initial_states(spec, x0, n, rng, law=None):
    """n copies of ``x0``, or n draws from ``law`` (the invariant law of ``spec``) for "stationary"."""
    if isinstance(x0, str):
        if x0 != STATIONARY:
            raise ValueError('unknown initial law %r' % x0)
        return (law if law is not None else spec.invariant).sample(rng, n)
    if not x0 >= 0.0:
        raise ValueError('initial state must be >= 0 (got %r)' % x0)
    return np.full(n, float(x0))


def _step(spec, xs, h, rng, method):
    pre = xs + spec.drift(xs) * h + spec.sigma(xs) * np.sqrt(h) * normals(rng, xs.size, method)
    return pre, reflect(pre, spec.reflection)


def simulate_ensemble(spec, x0, checkpoints, n_paths, policy, seed, chunk_size=1000,
                      threads=1, normal_method='inverse_cdf', namespace=None,
                      integrand=None, record_paths=0):
    """Advance ``n_paths`` independent paths through ``checkpoints``.

    Steps are truncated to land exactly on each checkpoint. ``x0`` is a
    state or ``'stationary'`` (initial states drawn from pi).
    """
    checkpoints = np.atleast_1d(np.asarray(checkpoints, dtype=float))
    if checkpoints[0] < 0.0 or np.any(np.diff(checkpoints) < 0.0):
        raise ValueError('checkpoints must be nonnegative and nondecreasing')

    def run(chunk):
        index, start, stop = chunk
        return _ensemble_chunk(spec, x0, checkpoints, policy, stream(seed, index, namespace),
                               stop - start, normal_method, integrand,
                               max(0, min(record_paths - start, stop - start)), start)

    parts = _map_chunks(run, _chunks(n_paths, chunk_size), threads)
    visits = sum(p['visits'] for p in parts)
    ensemble = Ensemble(
        checkpoints,
        np.concatenate([p['states'] for p in parts]),
        np.concatenate([p['aborted'] for p in parts]),
        np.concatenate([p['local_time'] for p in parts]),
        clamps=sum(p['clamps'] for p in parts),
        zero_fraction=sum(p['zeros'] for p in parts) / float(max(visits, 1)),
        steps=max(p['steps'] for p in parts),
        integrals=(np.concatenate([p['integrals'] for p in parts])
                   if integrand is not None else None),
        records=[row for p in parts for row in p['records']],
    )
    if ensemble.aborted.any():
        logger.warning('%d of %d %s paths aborted', ensemble.aborted.sum(), n_paths, spec.kind)
    if ensemble.clamps:
        logger.warning('%s ensemble clamped at 0 on %d steps', spec.kind, ensemble.clamps)
    logger.debug('%s ensemble of %d paths: %d steps, zero fraction %.3g',
                 spec.kind, n_paths, ensemble.steps, ensemble.zero_fraction)
    return ensemble


def _ensemble_chunk(spec, x0, checkpoints, policy, rng, n, method, integrand, n_record, offset):
    x = initial_states(spec, x0, n, rng)
    t = np.zeros(n)
    phi = np.zeros(n)
    aborted = np.zeros(n, dtype=bool)
    states = np.empty((n, len(checkpoints)))
    integrals = np.empty((n, len(checkpoints))) if integrand is not None else None
    running = np.zeros(n)
    g_prev = integrand(x) if integrand is not None else None
    records = [(offset + i, 0.0, x[i], 0.0) for i in range(n_record)]
    clamps = zeros = visits = steps = 0
    for k, target in enumerate(checkpoints):
        while True:
            idx = np.flatnonzero((t < target) & ~aborted)
            if idx.size == 0:
                break
            steps += 1
            xs = x[idx]
            h = policy.steps(spec, xs)
            under = h * spec.speed(xs) < policy.h_min
            if under.any():
                aborted[idx[under]] = True
                idx, xs, h = idx[~under], xs[~under], h[~under]
                if idx.size == 0:
                    continue
            remaining = target - t[idx]
            last = h >= remaining
            h = np.where(last, remaining, h)
            pre, new = _step(spec, xs, h, rng, method)
            bad = ~np.isfinite(new) | (new > OVERFLOW)
            if bad.any():
                aborted[idx[bad]] = True
                idx, xs, h, pre, new, last = (a[~bad] for a in (idx, xs, h, pre, new, last))
            pushed = pre < 0.0
            phi[idx] += np.where(pushed, new - pre, 0.0)
            clamps += int(pushed.sum())
            if integrand is not None:
                g_new = integrand(new)
                running[idx] += 0.5 * (g_prev[idx] + g_new) * h
                g_prev[idx] = g_new
            x[idx] = new
            t[idx] = np.where(last, target, t[idx] + h)
            zeros += int(np.count_nonzero(new == 0.0))
            visits += idx.size
            if n_record:
                for i in idx[idx < n_record]:
                    records.append((offset + int(i), t[i], x[i], phi[i]))
        states[:, k] = np.where(aborted, np.nan, x)
        if integrals is not None:
            integrals[:, k] = np.where(aborted, np.nan, running)
    return {
        'states': states, 'aborted': aborted, 'local_time': phi, 'integrals': integrals,
        'clamps': clamps if spec.reflection == 'clamp' else 0, 'zeros': zeros,
        'visits': visits, 'steps': steps, 'records': records,
    }


def hitting_times(spec, x0, K, horizon, n_paths, policy, seed, chunk_size=1000, threads=1,
                  normal_method='inverse_cdf', namespace=None, bridge=True):
    """First times the paths enter [0, K]; censored paths get +inf.

    With ``bridge`` a crossing between two grid states above K is detected
    with the Brownian-bridge probability exp(-2 (x_n - K)(x_{n+1} - K) / (sigma^2 h)).
    """
    if not K > 0.0:
        raise ValueError('threshold K must be positive (got %r)' % K)

    def run(chunk):
        index, start, stop = chunk
        return _hitting_chunk(spec, x0, K, horizon, policy, stream(seed, index, namespace),
                              stop - start, normal_method, bridge)

    parts = _map_chunks(run, _chunks(n_paths, chunk_size), threads)
    times = np.concatenate([p[0] for p in parts])
    return HittingSample(times, sum(p[1] for p in parts))


def _hitting_chunk(spec, x0, K, horizon, policy, rng, n, method, bridge):
    x = initial_states(spec, x0, n, rng)
    t = np.zeros(n)
    gamma = np.where(x <= K, 0.0, np.inf)
    aborted = np.zeros(n, dtype=bool)
    while True:
        idx = np.flatnonzero(np.isinf(gamma) & (t < horizon) & ~aborted)
        if idx.size == 0:
            break
        xs = x[idx]
        h = policy.steps(spec, xs)
        under = h * spec.speed(xs) < policy.h_min
        aborted[idx[under]] = True
        idx, xs, h = idx[~under], xs[~under], h[~under]
        h = np.minimum(h, horizon - t[idx])
        sigma = spec.sigma(xs)
        pre, new = _step(spec, xs, h, rng, method)
        u = rng.random(idx.size)
        bad = ~np.isfinite(new) | (new > OVERFLOW)
        aborted[idx[bad]] = True
        inside = (new <= K) & ~bad
        gamma[idx[inside]] = t[idx[inside]] + h[inside] * (xs[inside] - K) / (xs[inside] - new[inside])
        if bridge:
            gap = 2.0 * (xs - K) * np.maximum(new - K, 0.0) / np.maximum(sigma ** 2 * h, 1e-300)
            crossed = ~inside & ~bad & (u < np.exp(-gap))
            gamma[idx[crossed]] = t[idx[crossed]] + 0.5 * h[crossed]
        keep = ~bad
        x[idx[keep]] = new[keep]
        t[idx[keep]] += h[keep]
    return gamma, int(aborted.sum())


def time_changed_ensemble(spec_y, sf, x0, checkpoints, n_paths, policy, seed, max_time,
                          chunk_size=1000, threads=1, normal_method='inverse_cdf',
                          namespace=None):
    """Y-paths read on the changed clock: states at the first step with chi >= t_k.

    Raises HorizonExhausted when a path does not reach the last checkpoint
    within ``max_time`` of Langevin time.
    """
    checkpoints = np.atleast_1d(np.asarray(checkpoints, dtype=float))
    # X_t = Y(beta_t) is stationary under the time-changed law, not pi
    law = sf.time_changed_law if isinstance(x0, str) else None

    def run(chunk):
        index, start, stop = chunk
        return _time_changed_chunk(spec_y, sf, x0, checkpoints, policy,
                                   stream(seed, index, namespace), stop - start,
                                   normal_method, max_time, law)

    parts = _map_chunks(run, _chunks(n_paths, chunk_size), threads)
    states = np.concatenate([p[0] for p in parts])
    reached = min(p[1] for p in parts)
    if reached < checkpoints[-1]:
        raise HorizonExhausted(reached, checkpoints[-1])
    aborted = np.concatenate([p[2] for p in parts])
    return Ensemble(checkpoints, states, aborted, np.zeros(len(states)))


def _time_changed_chunk(spec, sf, x0, checkpoints, policy, rng, n, method, max_time, law):
    x = initial_states(spec, x0, n, rng, law=law)
    t = np.zeros(n)
    chi = np.zeros(n)
    inverse = 1.0 / sf(x)
    aborted = np.zeros(n, dtype=bool)
    states = np.full((n, len(checkpoints)), np.nan)
    pending = np.zeros(n, dtype=int)

    def collect(idx):
        while idx.size:
            k = np.minimum(pending[idx], len(checkpoints) - 1)
            ready = (pending[idx] < len(checkpoints)) & (chi[idx] >= checkpoints[k])
            idx = idx[ready]
            states[idx, pending[idx]] = x[idx]
            pending[idx] += 1

    collect(np.arange(n))
    while True:
        idx = np.flatnonzero((pending < len(checkpoints)) & (t < max_time) & ~aborted)
        if idx.size == 0:
            break
        xs = x[idx]
        h = policy.steps(spec, xs)
        pre, new = _step(spec, xs, h, rng, method)
        bad = ~np.isfinite(new) | (new > OVERFLOW)
        aborted[idx[bad]] = True
        idx, h, new = idx[~bad], h[~bad], new[~bad]
        fresh = 1.0 / sf(new)
        chi[idx] += 0.5 * (inverse[idx] + fresh) * h
        inverse[idx] = fresh
        x[idx] = new
        t[idx] += h
        collect(idx)
    live = ~aborted
    reached = float(chi[live & (pending < len(checkpoints))].min()) if np.any(
        live & (pending < len(checkpoints))) else np.inf
    return states, reached, aborted
