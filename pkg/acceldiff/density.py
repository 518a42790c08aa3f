"""Heavy-tailed target densities on the half-line.

Every built-in model is a density pi on [0, inf) with a polynomial envelope

    c (1 + x)^-m <= pi(x) <= c^-1 (1 + x)^-m,    m > 3.

Log-derivatives are supplied in closed form; normalization, the cumulative
distribution, the mean and the running integral of 1/pi are tabulated by
adaptive quadrature up to a cutoff and completed analytically beyond it with
the power-law tail.
"""

import logging
from collections import namedtuple

import numpy as np
from scipy import integrate, optimize
from scipy.special import beta

from acceldiff.errors import ModelError
from acceldiff.quadrature import CumulativeTable, geometric_grid


logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 1e4

EnvelopeCheck = namedtuple('EnvelopeCheck', 'c_low c_high passed')


class DensityModel(object):
    """Base class of the built-in families; subclasses supply the shape."""

    name = None
    # Cap on quadrature cell width, for shapes with oscillating factors.
    max_cell = None

    def __init__(self, m):
        self.m = float(m)

    def params(self):
        return {'m': self.m}

    def validate(self):
        if not np.isfinite(self.m) or self.m <= 3.0:
            raise ModelError('tail exponent m must satisfy m > 3 (got %r)' % self.m)

    def unnormalized(self, x):
        raise NotImplementedError

    def log_derivative(self, x):
        raise NotImplementedError

    def closed_forms(self):
        return {}

    def to_dict(self):
        d = {'model': self.name}
        d.update(self.params())
        return d

    def __eq__(self, other):
        return type(self) is type(other) and self.params() == other.params()

    def __ne__(self, other):
        return not (self == other)

    def __hash__(self):
        return hash((self.name, tuple(sorted(self.params().items()))))

    def __repr__(self):
        return '%s(%s)' % (type(self).__name__, ', '.join(
            '%s=%r' % kv for kv in sorted(self.params().items())))


class ParetoShifted(DensityModel):
    """pi(x) = (m - 1)(1 + x)^-m; every auxiliary integral is elementary."""

    name = 'pareto_shifted'

    def unnormalized(self, x):
        return (1.0 + np.asarray(x, dtype=float)) ** -self.m

    def log_derivative(self, x):
        return -self.m / (1.0 + np.asarray(x, dtype=float))

    def closed_forms(self):
        m = self.m

        def inverse_integral(z):
            return ((1.0 + np.asarray(z, dtype=float)) ** (m + 1) - 1.0) / ((m - 1.0) * (m + 1.0))

        def cdf(z):
            return -np.expm1((1.0 - m) * np.log1p(np.asarray(z, dtype=float)))

        def quantile(u):
            return np.expm1(np.log1p(-np.asarray(u, dtype=float)) / (1.0 - m))

        def bibby_variance(z):
            z = np.asarray(z, dtype=float)
            return 2.0 * z * (1.0 + z) / (m - 2.0)

        return {
            'normalization': 1.0 / (m - 1.0),
            'mean': 1.0 / (m - 2.0),
            'inverse_integral': inverse_integral,
            'cdf': cdf,
            'quantile': quantile,
            'bibby_variance': bibby_variance,
        }


class HalfStudentLike(DensityModel):
    """pi proportional to (1 + (x/s)^2)^(-m/2) on the half-line."""

    name = 'half_student'

    def __init__(self, m, s=1.0):
        super(HalfStudentLike, self).__init__(m)
        self.s = float(s)

    def params(self):
        return {'m': self.m, 's': self.s}

    def validate(self):
        super(HalfStudentLike, self).validate()
        if not np.isfinite(self.s) or self.s <= 0.0:
            raise ModelError('scale s must be positive (got %r)' % self.s)

    def unnormalized(self, x):
        x = np.asarray(x, dtype=float) / self.s
        return (1.0 + x * x) ** (-0.5 * self.m)

    def log_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -self.m * x / (self.s * self.s + x * x)

    def closed_forms(self):
        return {'normalization': 0.5 * self.s * beta(0.5, 0.5 * (self.m - 1.0))}


class PerturbedPareto(DensityModel):
    """Pareto shape modulated by 1 + eps sin(x)/(1 + x): no monotone tail."""

    name = 'perturbed_pareto'
    max_cell = 0.25

    def __init__(self, m, eps):
        super(PerturbedPareto, self).__init__(m)
        self.eps = float(eps)

    def params(self):
        return {'m': self.m, 'eps': self.eps}

    def validate(self):
        super(PerturbedPareto, self).validate()
        if not np.isfinite(self.eps) or abs(self.eps) >= 0.5:
            raise ModelError('perturbation eps must satisfy |eps| < 1/2 (got %r)' % self.eps)

    def unnormalized(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 + x) ** -self.m * (1.0 + self.eps * np.sin(x) / (1.0 + x))

    def log_derivative(self, x):
        x = np.asarray(x, dtype=float)
        u = np.sin(x) / (1.0 + x)
        du = (np.cos(x) * (1.0 + x) - np.sin(x)) / (1.0 + x) ** 2
        return -self.m / (1.0 + x) + self.eps * du / (1.0 + self.eps * u)


MODELS = dict((cls.name, cls) for cls in (ParetoShifted, HalfStudentLike, PerturbedPareto))


def model_from_dict(data):
    """Build a model from ``{'model': name, **params}``."""
    data = dict(data)
    name = data.pop('model', None)
    try:
        cls = MODELS[name]
    except KeyError:
        raise ModelError('unknown density model %r (expected one of %s)'
                         % (name, ', '.join(sorted(MODELS))))
    try:
        return cls(**data)
    except TypeError as e:
        raise ModelError('bad parameters for %s: %s' % (name, e))


def default_envelope_grid():
    """Dense grid on [0, 10^3]: 0.01 spacing to 10, then 2000 geometric nodes."""
    return np.union1d(np.linspace(0.0, 10.0, 1001), geometric_grid(1e3, 2000, lower=10.0))


class TargetDensity(object):
    """A normalized target density with its tabulated auxiliary integrals.

    Immutable after construction. Methods taking ``closed`` use the model's
    closed form when one exists and ``closed`` is true, and the quadrature
    table otherwise, so closed forms double as oracles for the tables.
    """

    support = 'half-line'

    def __init__(self, model, cutoff=DEFAULT_CUTOFF, n_cells=2048, rtol=1e-12):
        self.model = model
        self.m = model.m
        self.cutoff = float(cutoff)
        m = self.m
        grid = geometric_grid(self.cutoff, n_cells, max_width=model.max_cell)
        mass = CumulativeTable(model.unnormalized, grid, rtol=rtol)
        amplitude = float(model.unnormalized(self.cutoff)) * (1.0 + self.cutoff) ** m
        normalization = mass.total + amplitude * (1.0 + self.cutoff) ** (1.0 - m) / (m - 1.0)
        if not np.isfinite(normalization) or normalization <= 0.0:
            raise ModelError('%r is not normalizable' % model)
        self.normalization = normalization
        # pi(x) ~ tail_amplitude (1 + x)^-m beyond the cutoff
        self.tail_amplitude = amplitude / normalization
        self._mass = mass
        self._first_moment = CumulativeTable(lambda x: x * self.pi(x), grid, rtol=rtol)
        self._inverse = CumulativeTable(lambda x: 1.0 / self.pi(x), grid, rtol=rtol)
        self.grid = grid
        self.closed_forms = model.closed_forms()
        c_low, c_high = envelope_constants(self)
        self.c = min(c_low, 1.0 / c_high, 1.0)
        logger.debug('built %r: normalization=%.12g c=%.6g cells=%d',
                     model, normalization, self.c, len(grid) - 1)

    def pi(self, x):
        return self.model.unnormalized(x) / self.normalization

    def log_pi(self, x):
        return np.log(self.pi(x))

    def log_pi_prime(self, x):
        return self.model.log_derivative(x)

    def _closed(self, name, closed):
        return self.closed_forms.get(name) if closed else None

    def cdf(self, z, closed=True):
        form = self._closed('cdf', closed)
        if form is not None:
            return form(z)
        z = np.asarray(z, dtype=float)
        inside = self._mass(z) / self.normalization
        return np.where(z <= self.cutoff, inside, 1.0 - self.tail_mass(z))

    def tail_mass(self, z):
        """int_z^inf pi for z beyond the cutoff (power-law completion)."""
        z = np.maximum(np.asarray(z, dtype=float), self.cutoff)
        return self.tail_amplitude * (1.0 + z) ** (1.0 - self.m) / (self.m - 1.0)

    def quantile(self, u, closed=True):
        form = self._closed('quantile', closed)
        if form is not None:
            return form(u)
        u = np.asarray(u, dtype=float)
        top = self._mass.total / self.normalization
        z = self._mass.inverse(np.minimum(u, top) * self.normalization)
        tail =np.expm1(np.log((self.m - 1.0) * np.maximum(1.0 - u, 1e-300) /
                               self.tail_amplitude) / (1.0 - self.m))
        return np.where(u <= top, z, tail)

    def mean(self, closed=True):
        form = self._closed('mean', closed)
        if form is not None:
            return form
        m, cut = self.m, self.cutoff
        tail = self.tail_amplitude * ((1.0 + cut) ** (2.0 - m) / (m - 2.0) -
                                      (1.0 + cut) ** (1.0 - m) / (m - 1.0))
        return self._first_moment.total + tail

    def first_moment(self, z):
        """int_0^z s pi(s) ds."""
        return self._first_moment(z)

    def inverse_integral(self, z, closed=True):
        """int_0^z dy / pi(y)."""
        form = self._closed('inverse_integral', closed)
        if form is not None:
            return form(z)
        z = np.asarray(z, dtype=float)
        m, cut = self.m, self.cutoff
        beyond = self._inverse.total + ((1.0 + np.maximum(z, cut)) ** (m + 1.0) -
                                        (1.0 + cut) ** (m + 1.0)) / (self.tail_amplitude * (m + 1.0))
        return np.where(z <= cut, self._inverse(z), beyond)

    def expectation(self, g):
        """int g pi over [0, inf) by adaptive quadrature."""
        f = lambda x: g(x) * self.pi(x)
        total = 0.0
        for a, b in ((0.0, 10.0), (10.0, self.cutoff), (self.cutoff, np.inf)):
            value, _ = integrate.quad(f, a, b, limit=500, epsabs=0.0, epsrel=1e-11)
            total += value
        return total

    def sample(self, rng, n):
        """Draw n states from pi by inverse CDF."""
        return self.quantile(rng.random(n))

    def __repr__(self):
        return 'TargetDensity(%r, c=%.6g)' % (self.model, self.c)


def make_density(model, cutoff=DEFAULT_CUTOFF):
    """Validate ``model`` and build its normalized TargetDensity."""
    model.validate()
    return TargetDensity(model, cutoff=cutoff)


def envelope_constants(d, grid=None, refine=8):
    """inf and sup of pi(x)(1 + x)^m over [0, 10^6].

    The ``refine`` most extreme local minima and maxima on the grid are
    polished by bounded scalar minimization between their neighbours, so the
    constants also hold between grid nodes.
    """
    if grid is None:
        grid = np.union1d(default_envelope_grid(), geometric_grid(1e6, 300, lower=1e3))
    grid = np.asarray(grid, dtype=float)

    def ratio(x):
        return d.pi(x) * (1.0 + x) ** d.m

    values = ratio(grid)
    extremes = []
    for sign in (1.0, -1.0):
        v = sign * values
        inner = np.flatnonzero((v[1:-1] < v[:-2]) & (v[1:-1] < v[2:])) + 1
        best = [float(v.min())]
        for i in inner[np.argsort(v[inner])][:refine]:
            result = optimize.minimize_scalar(lambda x: sign * float(ratio(x)),
                                              bounds=(grid[i - 1], grid[i + 1]), method='bounded',
                                              options={'xatol': 1e-12})
            best.append(float(result.fun))
        extremes.append(sign * min(best))
    return extremes[0], extremes[1]


def verify_envelope(d, grid, c=None):
    """Tightest empirical envelope constants of pi(x)(1 + x)^m over ``grid``.

    ``passed`` compares them against ``c`` (the density's declared constant
    by default).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError('envelope grid must be a nonempty 1-d sequence')
    if grid[0] < 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ValueError('envelope grid must be strictly increasing within [0, inf)')
    ratio = d.pi(grid) * (1.0 + grid) ** d.m
    c = d.c if c is None else c
    c_low, c_high = float(ratio.min()), float(ratio.max())
    # relative slack absorbs the round trip c -> 1/c
    passed = c_low >= c * (1.0 - 1e-12) and c_high * c <= 1.0 + 1e-12
    return EnvelopeCheck(c_low, c_high, bool(passed))
