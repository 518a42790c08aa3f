"""Quadrature oracles for hitting times of the accelerated diffusion.

For the generator L = f^2 (D^2/2 + b D) the moments v_q(xi) = E_xi gamma^q of
the hitting time of [0, K] solve the ladder L v_q = -q v_{q-1}, v_0 = 1, on
[K, N] with v(K) = 0 and v'(N) = 0. Each rung is the double integral

    v(xi) = 2 int_K^xi pi(w)^-1 int_w^N psi pi / f^2 dw' dw.
"""

import logging
from math import factorial

import numpy as np
from scipy.interpolate import PchipInterpolator

from acceldiff.errors import InvariantViolation
from acceldiff.quadrature import CumulativeTable, cell_integrals, geometric_grid


logger = logging.getLogger(__name__)

MAX_LADDER = 8


class BoundarySolution(object):
    """Nodal values of v on a grid over [K, N], read by monotone cubic interpolation.

    Below K the solution reads v(K), above N it reads v(N).
    """

    def __init__(self, grid, values):
        self.grid = np.asarray(grid, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self._interp = PchipInterpolator(self.grid, self.values, extrapolate=False)

    @classmethod
    def constant(cls, K, N, value=1.0):
        return cls([K, N], [value, value])

    @property
    def K(self):
        return self.grid[0]

    @property
    def N(self):
        return self.grid[-1]

    def __call__(self, z):
        return self._interp(np.clip(np.asarray(z, dtype=float), self.grid[0], self.grid[-1]))

    def sup(self):
        return float(self.values.max())

    def __repr__(self):
        return 'BoundarySolution([%g, %g], sup=%.6g)' % (self.K, self.N, self.sup())


def solve_bvp(sf, psi, K, N, n_cells=2048, rtol=1e-8):
    """Solve f^2 (v''/2 + b v') = -psi on [K, N], v(K) = 0, v'(N) = 0.

    Exchanging the order of the double integral gives, with
    g = psi pi / f^2 and I(x) = int_K^x dw / pi,

        v(xi) = 2 (int_K^xi g I + I(xi) int_xi^N g),

    two single cumulative tables with nonnegative integrands.
    """
    if not 0.0 < K < N:
        raise ValueError('need 0 < K < N (got K=%r, N=%r)' % (K, N))
    d = sf.density
    grid = geometric_grid(N, n_cells, lower=K)
    if np.min(psi(grid)) < 0.0:
        raise ValueError('source psi must be nonnegative on [K, N]')
    at_k = sf(K)

    def source(w):
        return psi(w) * d.pi(w) / sf(w)

    def inverse(w):
        return (sf(w) - at_k) / sf.c2

    remaining = CumulativeTable(source, grid, from_right=True, rtol=rtol)
    weighted = CumulativeTable(lambda w: source(w) * inverse(w), grid, rtol=rtol)
    values = 2.0 * (weighted.values + inverse(grid) * remaining.values)
    values[0] = 0.0
    logger.debug('solved boundary problem on [%g, %g]: v(N)=%.10g', K, N, values[-1])
    return BoundarySolution(grid, values)


def outer_boundary_change(sf, K, N, n_cells=64):
    """Increase of v_1 when the outer boundary moves from N to 2N.

    On [K, N] the increase is 2 I(xi) int_N^2N g, largest at xi = N.
    """
    d = sf.density
    extra = cell_integrals(lambda w: d.pi(w) / sf(w), geometric_grid(2.0 * N, n_cells, lower=N))
    return float(2.0 * (sf(N) - sf(K)) / sf.c2 * np.sum(extra))


def tail_integral(d, K):
    """A_m = int_K^inf (1 + w)^-m dw."""
    return (1.0 + K) ** (1.0 - d.m) / (d.m - 1.0)


class MomentLadder(object):
    """The solutions v_0..v_qmax with the bound constants they must respect.

    ``C`` uses the speed function's scanned constant ``a``; ``C_envelope``
    the constant implied by the density envelope alone.
    """

    def __init__(self, K, N, v, A_m, a, a_envelope, m, convergence=None):
        self.K = K
        self.N = N
        self.v = v
        self.q_max = len(v) - 1
        self.A_m = A_m
        self.a = a
        self.C = A_m / (a * m)
        self.C_envelope = A_m / (a_envelope * m)
        self.alpha_max = 1.0 / self.C
        self.convergence = convergence

    @property
    def grid(self):
        return self.v[1].grid

    def bound(self, q):
        return factorial(q) * self.C ** q

    def rows(self):
        """(q, xi, v_q) over the grid, q >= 1."""
        for q in range(1, self.q_max + 1):
            for xi, value in zip(self.v[q].grid, self.v[q].values):
                yield q, xi, value

    def __repr__(self):
        return 'MomentLadder(K=%g, N=%g, q_max=%d, C=%.6g)' % (self.K, self.N, self.q_max, self.C)


def moment_ladder(sf, K=1.0, N=1e3, q_max=4, n_cells=2048, check_n=True):
    if not 1 <= q_max <= MAX_LADDER:
        raise ValueError('q_max must lie in 1..%d (got %r)' % (MAX_LADDER, q_max))
    v = [BoundarySolution.constant(K, N)]
    for q in range(1, q_max + 1):
        previous = v[-1]
        v.append(solve_bvp(sf, lambda z, p=previous, q=q: q * p(z), K, N, n_cells=n_cells))
    convergence = None
    if check_n:
        convergence = outer_boundary_change(sf, K, N) / max(v[1].sup(), 1e-300)
        if convergence > 1e-6:
            logger.warning('ladder not converged in N=%g: relative change %.3g at 2N', N, convergence)
    d = sf.density
    ladder = MomentLadder(K, N, v, tail_integral(d, K), sf.a, sf.a_envelope, d.m, convergence)
    logger.info('moment ladder K=%g N=%g: C=%.6g (envelope C=%.6g), sup v_1=%.6g',
                K, N, ladder.C, ladder.C_envelope, v[1].sup())
    return ladder


def check_ladder(ladder, tol=1e-8):
    """Verify v_q(K) = 0, monotonicity and v_q <= q! C^q; return (q, sup, bound) rows."""
    rows = []
    for q in range(1, ladder.q_max + 1):
        v = ladder.v[q]
        if abs(v.values[0]) > tol:
            raise InvariantViolation('ladder_boundary', 'v_%d(K) = %.3g' % (q, v.values[0]))
        if np.min(np.diff(v.values)) < -tol:
            raise InvariantViolation('ladder_monotone', 'v_%d decreases on the grid' % q)
        bound = ladder.bound(q)
        if v.sup() > bound + tol:
            raise InvariantViolation('ladder_bound', 'sup v_%d = %.10g > %d! C^%d = %.10g'
                                     % (q, v.sup(), q, q, bound))
        rows.append((q, v.sup(), bound))
    return rows


def exp_moment_bound(ladder, alpha, xi=None):
    """sum_q alpha^q v_q(xi) / q! through q_max plus the geometric tail (alpha C)^q beyond."""
    if not 0.0 <= alpha < ladder.alpha_max:
        raise ValueError('alpha must lie in [0, 1/C) = [0, %.6g) (got %r)' % (ladder.alpha_max, alpha))
    xi = ladder.grid if xi is None else np.asarray(xi, dtype=float)
    total = np.zeros(np.shape(xi))
    for q, v in enumerate(ladder.v):
        total = total + alpha ** q * v(xi) / factorial(q)
    ratio = alpha * ladder.C
    return total + ratio ** (ladder.q_max + 1) / (1.0 - ratio)


def tv_bound_curve(ladder, alpha, times):
    """Rows (t, 2 exp(-alpha t) / (1 - alpha C))."""
    if not 0.0 < alpha < ladder.alpha_max:
        raise ValueError('alpha must lie in (0, 1/C) = (0, %.6g) (got %r)' % (ladder.alpha_max, alpha))
    times = np.asarray(times, dtype=float)
    return np.column_stack([times, 2.0 * np.exp(-alpha * times) / (1.0 - alpha * ladder.C)])
