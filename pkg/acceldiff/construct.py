"""Coefficients of the three diffusions that leave a target density invariant.

LangevinY     dY = dW + b(Y) dt + reflection,            b = (ln pi)' / 2
AcceleratedX  dX = f(X) dW + f^2(X) b(X) dt + reflection, f^2 = c1 + c2 int_0^z dy/pi
BibbyZ        dZ = -(Z - mu) dt + sqrt(v(Z)) dW

together with the analytic identities behind their invariant laws, checked
numerically.

The accelerated process comes in two drift forms. With drift f^2 b it is the
Langevin process run on the clock f^2, X_t = Y(beta_t). Its probability flux
1/2 (f^2 pi)' - f^2 b pi = 1/2 (f^2)' pi = c2/2 does not vanish, so under
reflection its invariant law is pi / (f^2 Z), Z = int pi / f^2, not pi. The
reversible form adds 1/2 (f^2)' = c2 / (2 pi) to the drift; its generator is
(pi f^2 v')' / (2 pi), the flux is zero and pi is invariant, but it is no
longer a time change of the Langevin process.
"""

import logging
from collections import namedtuple

import numpy as np

from acceldiff.density import default_envelope_grid
from acceldiff.errors import InvariantViolation
from acceldiff.quadrature import CumulativeTable, geometric_grid


logger = logging.getLogger(__name__)

LANGEVIN = 'langevin'
ACCELERATED = 'accelerated'
BIBBY = 'bibby'
KINDS = (LANGEVIN, ACCELERATED, BIBBY)

REFLECTIONS = ('abs', 'project', 'clamp')

# drift forms of the accelerated process
TIME_CHANGE = 'time_change'
REVERSIBLE = 'reversible'
DRIFTS = (TIME_CHANGE, REVERSIBLE)

StationarityResidual = namedtuple('StationarityResidual',
                                  'absolute relative flux flux_relative flux_origin')
MixingExponent = namedtuple('MixingExponent', 'r points products')


def drift_b(d, x):
    """Langevin drift b = (ln pi)'/2."""
    return 0.5 * d.log_pi_prime(x)


def speed_envelope_grid():
    """10^3 geometric nodes to 10^4 together with a dense grid on [0, 10]."""
    return np.union1d(np.linspace(0.0, 10.0, 1001), geometric_grid(1e4, 999))


class SpeedFunction(object):
    """f^2(z) = c1 + c2 int_0^z dy / pi(y).

    ``a`` is the envelope constant of a (1+z)^(m+1) <= f^2 <= a^-1 (1+z)^(m+1)
    found by grid scan and shrunk by ``a_margin``; ``a_envelope`` is the
    constant that follows from the density envelope alone.
    """

    def __init__(self, density, c1=1.0, c2=1.0, a_margin=0.01, closed=True):
        if not (c1 > 0.0 and c2 > 0.0):
            raise ValueError('speed constants must be positive (c1=%r, c2=%r)' % (c1, c2))
        if not 0.0 <= a_margin < 1.0:
            raise ValueError('a_margin must lie in [0, 1) (got %r)' % a_margin)
        self.density = density
        self.c1 = float(c1)
        self.c2 = float(c2)
        self._closed = closed
        self._law = None
        m, c = density.m, density.c
        grid = speed_envelope_grid()
        ratio = self(grid) / (1.0 + grid) ** (m + 1.0)
        self.a_scan = min(float(ratio.min()), 1.0 / float(ratio.max()), 1.0)
        self.a = self.a_scan * (1.0 - a_margin)
        k = self.c2 * c / (m + 1.0)
        self.a_envelope = min(self.c1, k, 1.0 / self.c1, c * (m + 1.0) / self.c2, 1.0)
        logger.debug('speed function c1=%g c2=%g: a_scan=%.8g a=%.8g a_envelope=%.8g',
                     c1, c2, self.a_scan, self.a, self.a_envelope)

    def __call__(self, z):
        return self.c1 + self.c2 * self.density.inverse_integral(z, closed=self._closed)

    def derivative(self, z):
        """(f^2)' = c2 / pi, exact."""
        return self.c2 / self.density.pi(z)

    def f(self, z):
        return np.sqrt(self(z))

    @property
    def time_changed_law(self):
        """Invariant law of the time-changed process, built on first use."""
        if self._law is None:
            self._law = TimeChangedLaw(self)
        return self._law

    def __repr__(self):
        return 'SpeedFunction(%r, c1=%g, c2=%g, a=%.6g)' % (
            self.density.model, self.c1, self.c2, self.a)


def speed_function(d, c1=1.0, c2=1.0, **kwargs):
    return SpeedFunction(d, c1=c1, c2=c2, **kwargs)


class TimeChangedLaw(object):
    """The law pi / (f^2 Z), Z = int_0^inf pi / f^2, tabulated on the density's grid.

    Its tail decays like (1 + z)^-(2m + 1); the mass beyond the density's
    cutoff is of order cutoff^-2m and is dropped.
    """

    def __init__(self, sf):
        self.speed_function = sf
        self.density = sf.density
        self.m = 2.0 * sf.density.m + 1.0
        self.grid = sf.density.grid
        self._mass = CumulativeTable(self._weight, self.grid)
        self.normalization = float(self._mass.total)
        logger.debug('time-changed law of %r: Z=%.12g', sf, self.normalization)

    def _weight(self, z):
        return self.density.pi(z) / self.speed_function(z)

    def pi(self, z):
        return self._weight(z) / self.normalization

    def cdf(self, z):
        return np.clip(self._mass(z) / self.normalization, 0.0, 1.0)

    def quantile(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return self._mass.inverse(u * self.normalization)

    def mean(self):
        return float(CumulativeTable(lambda z: z * self.pi(z), self.grid).total)

    def sample(self, rng, n):
        return self.quantile(rng.random(n))

    def __repr__(self):
        return 'TimeChangedLaw(%r, Z=%.6g)' % (self.speed_function, self.normalization)


class ProcessSpec(object):
    """Drift, noise coefficient, clock speed and boundary rule of a diffusion.

    ``speed`` is the factor by which the process clock runs faster than the
    Langevin clock (f^2 for the accelerated process, 1 otherwise); step
    policies and the underflow guard are expressed through it.
    ``invariant`` is the law the process converges to: the target density
    except for the time-change form of the accelerated process.
    """

    def __init__(self, kind, drift, sigma, density, speed=None, reflection='abs',
                 speed_function=None, mu=None, variance=None, invariant=None,
                 drift_form=None):
        if kind not in KINDS:
            raise ValueError('unknown process kind %r' % kind)
        if reflection not in REFLECTIONS:
            raise ValueError('unknown reflection rule %r' % reflection)
        self.kind = kind
        self.drift = drift
        self.sigma = sigma
        self.density = density
        self.speed = speed or _unit
        self.reflection = reflection
        self.speed_function = speed_function
        self.mu = mu
        self.variance = variance
        self.invariant = invariant if invariant is not None else density
        self.drift_form = drift_form

    def __repr__(self):
        return 'ProcessSpec(kind=%r, reflection=%r, density=%r)' % (
            self.kind, self.reflection, getattr(self.density, 'model', self.density))


def _unit(x):
    return np.ones_like(np.asarray(x, dtype=float))


def langevin_spec(d, reflection='abs'):
    return ProcessSpec(LANGEVIN, lambda x: drift_b(d, x), _unit, d, reflection=reflection)


def accelerated_spec(sf, reflection='abs', drift=TIME_CHANGE):
    """Accelerated process with drift f^2 b (``time_change``) or f^2 b + c2/(2 pi) (``reversible``)."""
    if drift not in DRIFTS:
        raise ValueError('unknown accelerated drift %r (expected one of %s)'
                         % (drift, ', '.join(DRIFTS)))
    d = sf.density

    def time_change_drift(x):
        return sf(x) * drift_b(d, x)

    def reversible_drift(x):
        return sf(x) * drift_b(d, x) + 0.5 * sf.derivative(x)

    def sigma(x):
        return np.sqrt(sf(x))

    if drift == TIME_CHANGE:
        return ProcessSpec(ACCELERATED, time_change_drift, sigma, d, speed=sf,
                           reflection=reflection, speed_function=sf,
                           invariant=sf.time_changed_law, drift_form=drift)
    return ProcessSpec(ACCELERATED, reversible_drift, sigma, d, speed=sf, reflection=reflection,
                       speed_function=sf, drift_form=drift)


def bibby_spec(d):
    mu, v = bibby_coefficients(d)

    def drift(x):
        return mu - np.asarray(x, dtype=float)

    def sigma(x):
        return np.sqrt(np.maximum(v(x), 0.0))

    return ProcessSpec(BIBBY, drift, sigma, d, reflection='clamp', mu=mu, variance=v)


def build_spec(kind, d, c1=1.0, c2=1.0, reflection='abs', a_margin=0.01, drift=TIME_CHANGE):
    """Process spec by kind name, as the experiment runner declares them."""
    if kind == LANGEVIN:
        return langevin_spec(d, reflection=reflection)
    if kind == ACCELERATED:
        return accelerated_spec(SpeedFunction(d, c1, c2, a_margin=a_margin), reflection=reflection,
                                drift=drift)
    if kind == BIBBY:
        return bibby_spec(d)
    raise ValueError('unknown process kind %r' % kind)


class BibbyVariance(object):
    """v(z) = 2 pi(z)^-1 int_0^z (mu - s) pi(s) ds.

    Below mu the running integral is tabulated from 0; above mu it is the
    equal tail integral int_z^inf (s - mu) pi(s) ds, so both branches have
    nonnegative integrands and no cancellation.
    """

    def __init__(self, d, mu, closed=True):
        self.density = d
        self.mu = mu
        self._closed = d.closed_forms.get('bibby_variance') if closed else None
        if self._closed is not None:
            return
        self._below = CumulativeTable(lambda s: (mu - s) * d.pi(s), d.grid)
        self._above = CumulativeTable(lambda s: (s - mu) * d.pi(s), d.grid, from_right=True)

    def _tail(self, z):
        d, m = self.density, self.density.m
        z = np.maximum(z, d.cutoff)
        return d.tail_amplitude * ((1.0 + z) ** (2.0 - m) / (m - 2.0) -
                                   (1.0 + self.mu) * (1.0 + z) ** (1.0 - m) / (m - 1.0))

    def integral(self, z):
        """int_0^z (mu - s) pi(s) ds."""
        z = np.asarray(z, dtype=float)
        if self._closed is not None:
            return 0.5 * self._closed(z) * self.density.pi(z)
        cut = self.density.cutoff
        above = np.where(z <= cut, self._above(z) + self._tail(cut), self._tail(z))
        return np.where(z <= self.mu, self._below(z), above)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if self._closed is not None:
            return self._closed(z)
        return 2.0 * self.integral(z) / self.density.pi(z)


def bibby_coefficients(d, closed=True):
    """Mean reversion level mu and variance function v of the affine diffusion."""
    mu = d.mean(closed=closed)
    v = BibbyVariance(d, mu, closed=closed)
    lowest = float(np.min(v(default_envelope_grid())))
    if lowest < -1e-12:
        raise InvariantViolation('bibby_v_nonnegative', 'min v = %.3g' % lowest)
    return mu, v


def key_identity_residual(d, sf, grid, rel_step=1e-5):
    """max |(f^2)'(x) pi(x) - c2| with (f^2)' differenced from the tabulated f^2.

    The analytic derivative c2/pi satisfies the identity exactly; this checks
    the table. Points too close to 0 for a centered stencil use the
    second-order one-sided one.
    """
    z = np.atleast_1d(np.asarray(grid, dtype=float))
    h = rel_step * (1.0 + z)
    central = (sf(z + h) - sf(np.maximum(z - h, 0.0))) / (2.0 * h)
    forward = (-3.0 * sf(z) + 4.0 * sf(z + h) - sf(z + 2.0 * h)) / (2.0 * h)
    derivative = np.where(z >= h, central, forward)
    return float(np.max(np.abs(derivative * d.pi(z) - sf.c2)))


def stationarity_residual(spec, grid, rel_step=1e-3, law=None):
    """Residuals of the stationary equations of ``law`` (``spec.invariant`` by default).

    absolute, relative   max |L* p| = max |(sigma^2 p)''/2 - (drift p)'| over ``grid``
    flux, flux_relative  max |J| over ``grid`` and the origin, J = (sigma^2 p)'/2 - drift p
    flux_origin          |J(0)|

    A reflected diffusion leaves p invariant only when both vanish. Interior
    derivatives are five-point centered differences with a step proportional
    to 1 + x, the one at the origin the fourth order one-sided stencil.
    ``relative`` divides by |sigma^2 p|/(1+x)^2 + |drift p|/(1+x), the flux
    by |sigma^2 p|/(1+x) + |drift p|.
    """
    x = np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(x <= 0.0):
        raise ValueError('stationarity residual needs grid points inside (0, inf)')
    pi = (law if law is not None else spec.invariant).pi

    def a(y):
        return spec.sigma(y) ** 2 * pi(y)

    def b(y):
        return spec.drift(y) * pi(y)

    h = np.minimum(rel_step * (1.0 + x), x / 2.5)
    a1 = (-a(x + 2 * h) + 8 * a(x + h) - 8 * a(x - h) + a(x - 2 * h)) / (12 * h)
    a2 = (-a(x + 2 * h) + 16 * a(x + h) - 30 * a(x) + 16 * a(x - h) - a(x - 2 * h)) / (12 * h * h)
    b1 = (-b(x + 2 * h) + 8 * b(x + h) - 8 * b(x - h) + b(x - 2 * h)) / (12 * h)
    residual = np.abs(0.5 * a2 - b1)
    scale = np.abs(a(x)) / (1.0 + x) ** 2 + np.abs(b(x)) / (1.0 + x)
    relative = _relative(residual, scale)

    h0 = rel_step
    nodes = h0 * np.arange(5.0)
    a0 = np.dot([-25.0, 48.0, -36.0, 16.0, -3.0], a(nodes)) / (12 * h0)
    origin = abs(0.5 * a0 - float(b(np.zeros(1))[0]))
    flux = np.concatenate([[origin], np.abs(0.5 * a1 - b(x))])
    flux_scale = np.concatenate([[abs(float(a(np.zeros(1))[0])) + abs(float(b(np.zeros(1))[0]))],
                                 (1.0 + x) * scale])
    flux_relative = _relative(flux, flux_scale)
    return StationarityResidual(float(residual.max()), float(relative.max()),
                                float(flux.max()), float(flux_relative.max()), float(origin))


def _relative(value, scale):
    return np.where(scale > 0.0, value / np.where(scale > 0.0, scale, 1.0), value)


def mixing_exponent_r(d, points, tail=3):
    """Estimate r = -liminf x b(x) from the largest ``tail`` points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 1 or points.size == 0 or np.any(np.diff(points) <= 0.0):
        raise ValueError('points must be a nonempty increasing sequence')
    if points[-1] < 1e3:
        raise ValueError('largest point must be at least 1e3 (got %g)' % points[-1])
    products = points * drift_b(d, points)
    return MixingExponent(-float(products[-tail:].min()), points, products)
