"""Declarative experiment configuration.

A configuration is one JSON document describing one experiment::

    {
        "experiment": "tv",
        "density": {"model": "pareto_shifted", "m": 5},
        "processes": [{"kind": "accelerated", "c1": 1, "c2": 1,
                       "step": {"mode": "adaptive_relative", "kappa": 0.001, "h_max": 0.01}}],
        "master_seed": 42,
        "ensemble_size": 100000,
        "checkpoints": [0.5, 1.0, 1.5],
        "x0": 50
    }

Every field is validated and every failure is reported at once.
"""

import hashlib
import json
import logging
import os

import numpy as np

from acceldiff.construct import (
    ACCELERATED, BIBBY, DRIFTS, KINDS, LANGEVIN, REFLECTIONS, TIME_CHANGE,
)
from acceldiff.density import model_from_dict
from acceldiff.diagnostics import LLN_FUNCTIONS, MIN_ENSEMBLE
from acceldiff.errors import ConfigError, ModelError
from acceldiff.sde import NORMAL_METHODS, STATIONARY, StepPolicy


logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'ACCELDIFF_OUTPUT_DIR'

EXPERIMENTS = ('tv', 'hitting', 'lln', 'bvp', 'identities', 'sweep', 'compare', 'timechange')

# Fields that do not change any reported number; excluded from the hash.
OPERATIONAL = ('output_dir', 'emit_paths', 'emit_svg', 'threads')

# Real-valued fields, stored as floats so that 5 and 5.0 hash alike.
REALS = ('horizon', 'K', 'N', 'eps_rel', 'delta', 'a_margin')
REAL_LISTS = ('checkpoints', 'alpha_list', 'x0_list', 'T_list')

DEFAULT_STEPS = {
    LANGEVIN: {'mode': 'adaptive_relative', 'kappa': 1e-2, 'h_max': 0.05},
    ACCELERATED: {'mode': 'adaptive_relative', 'kappa': 1e-3, 'h_max': 0.01},
    BIBBY: {'mode': 'adaptive_relative', 'kappa': 1e-2, 'h_max': 0.05},
}

DEFAULTS = {
    'processes': [{'kind': ACCELERATED}],
    'master_seed': 0,
    'ensemble_size': 10000,
    'checkpoints': [0.5 * (i + 1) for i in range(20)],
    'horizon': None,
    'K': 1.0,
    'N': 1000.0,
    'q_max': 4,
    'alpha_list': [0.5],
    'x0': 50.0,
    'x0_list': [1.0, 10.0, 100.0, 1000.0],
    'bins': 64,
    'coarsen_bins': True,
    'bootstrap': 200,
    'T_list': [50.0, 100.0, 200.0, 400.0],
    'lln_function': 'tail',
    'eps_rel': 0.1,
    'delta': 0.05,
    'normal_method': 'inverse_cdf',
    'chunk_size': 1000,
    'a_margin': 0.01,
    'bridge': True,
    'output_dir': 'runs',
    'emit_paths': False,
    'emit_svg': False,
    'threads': None,
}


class ProcessConfig(object):

    def __init__(self, kind, c1=1.0, c2=1.0, reflection=None, step=None, drift=None):
        self.kind = kind
        self.c1 = float(c1)
        self.c2 = float(c2)
        # only the accelerated process has a choice of drift
        self.drift = (drift or TIME_CHANGE) if kind == ACCELERATED else None
        self.reflection = reflection or ('clamp' if kind == BIBBY else 'abs')
        self.step = dict(DEFAULT_STEPS.get(kind, {}), **(step or {}))
        self.policy = StepPolicy(**self.step)

    def to_dict(self):
        data = {'kind': self.kind, 'c1': self.c1, 'c2': self.c2,
                'reflection': self.reflection, 'step': self.policy.to_dict()}
        if self.drift is not None:
            data['drift'] = self.drift
        return data


class ExperimentConfig(object):
    """A validated experiment configuration; see the module docstring for the format."""

    def __init__(self, data):
        self._data = data
        for key, value in data.items():
            setattr(self, key, value)

    @property
    def model(self):
        return model_from_dict(self.density)

    def process(self, kind):
        for p in self.processes:
            if p.kind == kind:
                return p
        return None

    def with_overrides(self, **overrides):
        data = self.to_dict()
        data.update((k, v) for k, v in overrides.items() if v is not None)
        return parse_config(data)

    def to_dict(self):
        data = dict(self._data)
        data['processes'] = [p.to_dict() for p in self.processes]
        return data

    def semantic(self):
        data = self.to_dict()
        for key in OPERATIONAL:
            data.pop(key, None)
        return data

    def serialize(self, fd=None):
        if fd is None:
            return json.dumps(self, cls=JSONEncoder, indent=2, sort_keys=True)
        return json.dump(self, fd, cls=JSONEncoder, indent=2, sort_keys=True)

    def hash(self):
        canonical = json.dumps(self.semantic(), cls=JSONEncoder, sort_keys=True,
                               separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not (self == other)

    def __repr__(self):
        return 'ExperimentConfig(%s, %s)' % (self.experiment, self.hash()[:12])


class JSONEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, ExperimentConfig):
            return o.to_dict()
        if isinstance(o, ProcessConfig):
            return o.to_dict()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        return super(JSONEncoder, self).default(o)


def _number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool) and np.isfinite(value)


def _integer(value):
    return isinstance(value, int) and not isinstance(value, bool)


def _numbers(value):
    return isinstance(value, list) and len(value) > 0 and all(_number(v) for v in value)


class _Validator(object):

    def __init__(self, data):
        self.data = data
        self.errors = []

    def error(self, field, message, *args):
        self.errors.append('%s: %s' % (field, message % args))

    def require(self, field, ok, message, *args):
        if field in self.data and not ok(self.data[field]):
            self.error(field, message, *args)


def parse_config(data):
    """Validate a configuration mapping and return an ExperimentConfig."""
    if not isinstance(data, dict):
        raise ConfigError(['configuration must be a JSON object'])
    v = _Validator(data)
    unknown = sorted(set(data) - set(DEFAULTS) - {'experiment', 'density'})
    for key in unknown:
        v.error(key, 'unknown field')

    experiment = data.get('experiment')
    if experiment not in EXPERIMENTS:
        v.error('experiment', 'must be one of %s (got %r)', ', '.join(EXPERIMENTS), experiment)

    density = data.get('density')
    if not isinstance(density, dict):
        v.error('density', 'must be an object with a "model" field')
    else:
        try:
            model_from_dict(density).validate()
        except ModelError as e:
            v.error('density', '%s', e)

    merged = dict(DEFAULTS)
    merged.update(data)
    v.data = merged

    processes = []
    if not isinstance(merged['processes'], list) or not merged['processes']:
        v.error('processes', 'must be a nonempty list')
    else:
        for i, p in enumerate(merged['processes']):
            field = 'processes[%d]' % i
            if not isinstance(p, dict) or p.get('kind') not in KINDS:
                v.error(field, 'kind must be one of %s', ', '.join(KINDS))
                continue
            extra = sorted(set(p) - {'kind', 'c1', 'c2', 'reflection', 'step', 'drift'})
            if extra:
                v.error(field, 'unknown keys %s', ', '.join(extra))
                continue
            if 'drift' in p and (p['kind'] != ACCELERATED or p['drift'] not in DRIFTS):
                v.error(field, 'drift applies to the accelerated process and must be one of %s',
                        ', '.join(DRIFTS))
                continue
            if not all(_number(p.get(c, 1.0)) and p.get(c, 1.0) > 0 for c in ('c1', 'c2')):
                v.error(field, 'c1 and c2 must be positive numbers')
                continue
            if p.get('reflection', 'abs') not in REFLECTIONS:
                v.error(field, 'reflection must be one of %s', ', '.join(REFLECTIONS))
                continue
            try:
                processes.append(ProcessConfig(**p))
            except (TypeError, ValueError) as e:
                v.error(field, 'bad step policy: %s', e)
        kinds = [p.get('kind') for p in merged['processes'] if isinstance(p, dict)]
        if len(set(kinds)) != len(kinds):
            v.error('processes', 'each process kind may appear once')

    v.require('master_seed', lambda s: _integer(s) and 0 <= s < 2 ** 64,
              'must be an integer in [0, 2^64)')
    v.require('ensemble_size', lambda n: _integer(n) and n >= 1, 'must be a positive integer')
    v.require('checkpoints', lambda c: _numbers(c) and c[0] >= 0 and
              all(b > a for a, b in zip(c, c[1:])),
              'must be a nonempty increasing list of times >= 0')
    v.require('horizon', lambda h: h is None or (_number(h) and h > 0), 'must be positive or null')
    v.require('K', lambda k: _number(k) and k > 0, 'must be positive')
    v.require('N', lambda n: _number(n) and n > merged['K'] if _number(merged['K']) else True,
              'must exceed K')
    v.require('q_max', lambda q: _integer(q) and 1 <= q <= 8, 'must be an integer in 1..8')
    v.require('alpha_list', lambda a: _numbers(a) and all(0 < x < 1 for x in a),
              'must list fractions of 1/C in (0, 1)')
    v.require('x0', lambda x: x == STATIONARY or (_number(x) and x >= 0),
              'must be a state >= 0 or "%s"', STATIONARY)
    v.require('x0_list', lambda xs: _numbers(xs) and all(x >= 0 for x in xs),
              'must be a nonempty list of states >= 0')
    v.require('bins', lambda b: _integer(b) and b >= 1, 'must be a positive integer')
    v.require('coarsen_bins', lambda b: isinstance(b, bool), 'must be true or false')
    v.require('bootstrap', lambda b: _integer(b) and b >= 2, 'must be an integer >= 2')
    v.require('T_list', lambda ts: _numbers(ts) and all(t > 0 for t in ts),
              'must be a nonempty list of positive horizons')
    v.require('lln_function', lambda g: g in LLN_FUNCTIONS, 'must be one of %s',
              ', '.join(LLN_FUNCTIONS))
    v.require('eps_rel', lambda e: _number(e) and e > 0, 'must be positive')
    v.require('delta', lambda d: _number(d) and 0 < d < 1, 'must lie in (0, 1)')
    v.require('normal_method', lambda m: m in NORMAL_METHODS, 'must be one of %s',
              ', '.join(NORMAL_METHODS))
    v.require('chunk_size', lambda n: _integer(n) and n >= 1, 'must be a positive integer')
    v.require('a_margin', lambda a: _number(a) and 0 <= a < 1, 'must lie in [0, 1)')
    v.require('bridge', lambda b: isinstance(b, bool), 'must be true or false')
    v.require('output_dir', lambda p: isinstance(p, str) and p, 'must be a path')
    v.require('emit_paths', lambda b: isinstance(b, bool), 'must be true or false')
    v.require('emit_svg', lambda b: isinstance(b, bool), 'must be true or false')
    v.require('threads', lambda n: n is None or (_integer(n) and n >= 1),
              'must be a positive integer or null')

    if experiment in ('hitting', 'bvp', 'timechange'):
        accelerated = [p for p in processes if p.kind == ACCELERATED]
        if not accelerated:
            v.error('processes', '%s experiments need an accelerated process', experiment)
        elif accelerated[0].drift != TIME_CHANGE:
            v.error('processes', '%s experiments need the %s drift of the accelerated process',
                    experiment, TIME_CHANGE)
    if experiment == 'compare' and len(processes) < 2:
        v.error('processes', 'compare needs at least two processes')
    if experiment in ('tv', 'sweep', 'compare', 'timechange'):
        n = merged['ensemble_size']
        if _integer(n) and n < MIN_ENSEMBLE:
            v.error('ensemble_size', 'TV curves need at least %d paths', MIN_ENSEMBLE)
    if experiment == 'hitting' and _numbers(merged['x0_list']) and _number(merged['K']):
        low = [x for x in merged['x0_list'] if x < merged['K']]
        if low:
            v.error('x0_list', 'hitting experiments need states >= K (got %s)',
                    ', '.join('%g' % x for x in low))

    if v.errors:
        raise ConfigError(v.errors)
    _canonicalize(merged)
    merged['processes'] = processes
    if merged['threads'] is None:
        merged['threads'] = os.cpu_count() or 1
    return ExperimentConfig(merged)


def _real(value):
    return value if isinstance(value, (str, type(None))) else float(value)


def _canonicalize(data):
    """Coerce real-valued fields to float in place; integer fields stay integers."""
    density = dict(data['density'])
    for key, value in density.items():
        if _number(value):
            density[key] = float(value)
    data['density'] = density
    for key in REALS + ('x0',):
        data[key] = _real(data[key])
    for key in REAL_LISTS:
        data[key] = [float(x) for x in data[key]]


def load_config(path):
    with open(path) as fd:
        try:
            data = json.load(fd)
        except ValueError as e:
            raise ConfigError(['%s: not valid JSON (%s)' % (path, e)])
    config = parse_config(data)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        config = config.with_overrides(output_dir=override)
    logger.debug('loaded %r from %s', config, path)
    return config
