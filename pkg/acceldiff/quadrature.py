"""Cumulative integral tables on geometric grids.

Integrands here grow or decay like powers of (1 + z), so grids are equally
spaced in log(1 + z); cells can additionally be capped to a maximum width for
integrands with oscillating factors.
"""

import logging

import numpy as np
from numpy.polynomial.legendre import leggauss

from acceldiff.errors import QuadratureError


logger = logging.getLogger(__name__)

_RULES = dict((n, leggauss(n)) for n in (8, 16))


def geometric_grid(upper, n, lower=0.0, max_width=None):
    """Return nodes lower = z_0 < ... < upper, equally spaced in log(1 + z).

    With ``max_width`` every cell wider than it is split uniformly.
    """
    if not upper > lower > -1.0:
        raise ValueError('need -1 < lower < upper, got %r, %r' % (lower, upper))
    nodes = np.expm1(np.linspace(np.log1p(lower), np.log1p(upper), int(n) + 1))
    nodes[0], nodes[-1] = lower, upper
    if max_width is None:
        return nodes
    pieces = [nodes[:1]]
    for left, right in zip(nodes[:-1], nodes[1:]):
        k = int(np.ceil((right - left) / max_width))
        pieces.append(np.linspace(left, right, k + 1)[1:])
    return np.concatenate(pieces)


def gauss_legendre(f, a, b, n=16):
    """Integrate vectorized ``f`` over every interval [a_i, b_i] with an n-point rule."""
    x, w = _RULES[n]
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    points = mid[..., None] + half[..., None] * x
    return half * np.sum(w * f(points), axis=-1)


def cell_integrals(f, grid, rtol=1e-12, max_depth=40):
    """Integrate ``f`` over each cell of ``grid``.

    A cell is accepted when its 8- and 16-point Gauss rules agree to ``rtol``
    relative to the integral of |f|; otherwise it is bisected.
    """
    grid = np.asarray(grid, dtype=float)
    return _adaptive(f, grid[:-1], grid[1:], rtol, max_depth)


def _adaptive(f, a, b, rtol, depth):
    fine = gauss_legendre(f, a, b, 16)
    coarse = gauss_legendre(f, a, b, 8)
    scale = gauss_legendre(lambda x: np.abs(f(x)), a, b, 16)
    bad = np.abs(fine - coarse) > rtol * np.maximum(np.abs(fine), scale)
    if not bad.any():
        return fine
    if depth == 0:
        raise QuadratureError('cell integrals did not converge to rtol=%g on %d cells '
                              '(first at [%g, %g])'
                              % (rtol, bad.sum(), a[bad][0], b[bad][0]))
    mid = 0.5 * (a[bad] + b[bad])
    fine[bad] = (_adaptive(f, a[bad], mid, rtol, depth - 1) +
                 _adaptive(f, mid, b[bad], rtol, depth - 1))
    return fine


class CumulativeTable(object):
    """Running integral of ``f`` over a grid.

    ``from_right=False`` tabulates F(z) = int_{z_0}^z f, otherwise
    R(z) = int_z^{z_n} f. Values between nodes come from a 16-point rule over
    the partial cell, so the table is exact to quadrature accuracy everywhere
    on [z_0, z_n].
    """

    def __init__(self, f, grid, from_right=False, rtol=1e-12):
        self._f = f
        self.grid = np.asarray(grid, dtype=float)
        self.from_right = from_right
        cells = cell_integrals(f, self.grid, rtol=rtol)
        if from_right:
            self.values = np.concatenate([np.cumsum(cells[::-1])[::-1], [0.0]])
        else:
            self.values = np.concatenate([[0.0], np.cumsum(cells)])
        logger.debug('cumulative table over [%g, %g] with %d cells',
                     self.grid[0], self.grid[-1], len(cells))

    @property
    def total(self):
        return self.values[0] if self.from_right else self.values[-1]

    def __call__(self, z):
        z = np.clip(np.asarray(z, dtype=float), self.grid[0], self.grid[-1])
        i = np.clip(np.searchsorted(self.grid, z, side='right') - 1, 0, len(self.grid) - 2)
        if self.from_right:
            return self.values[i + 1] + gauss_legendre(self._f, z, self.grid[i + 1])
        return self.values[i] + gauss_legendre(self._f, self.grid[i], z)

    def inverse(self, level):
        """z with F(z) = level for levels in [0, total], by bracketed Newton steps.

        Only defined for tables running from the left.
        """
        if self.from_right:
            raise ValueError('inverse needs a table running from the left')
        level = np.asarray(level, dtype=float)
        values = self.values
        i = np.clip(np.searchsorted(values, level, side='right') - 1, 0, len(values) - 2)
        lo, hi = self.grid[i], self.grid[i + 1]
        width = np.maximum(values[i + 1] - values[i], 1e-300)
        z = lo + (hi - lo) * np.clip((level - values[i]) / width, 0.0, 1.0)
        for _ in range(8):
            z = np.clip(z - (self(z) - level) / self._f(z), lo, hi)
        return z
