"""acceldiff - accelerated diffusion samplers for heavy-tailed densities on the half-line

This module just exports the main API of acceldiff.
"""

__author__ = 'The acceldiff developers'
__version__ = '0.1.0'

from acceldiff.analysis import (
    BoundarySolution, MomentLadder, check_ladder, exp_moment_bound, moment_ladder, solve_bvp,
    tv_bound_curve,
)
from acceldiff.construct import (
    ProcessSpec, SpeedFunction, TimeChangedLaw, accelerated_spec, bibby_coefficients,
    bibby_spec, key_identity_residual, langevin_spec, mixing_exponent_r, speed_function,
    stationarity_residual,
)
from acceldiff.density import (
    HalfStudentLike, ParetoShifted, PerturbedPareto, TargetDensity, make_density,
    verify_envelope,
)
from acceldiff.diagnostics import (
    HittingStats, LlnTable, RateFit, SweepReport, TvCurve, hitting_stats,
    initial_condition_sweep, lln_check, rate_fit, tv_curve,
)
from acceldiff.sde import (
    Path, StepPolicy, TimeChange, chi_end, hitting_times, make_streams, simulate_ensemble,
    simulate_path, time_change, time_change_path,
)


__all__ = [
    'ParetoShifted',
    'HalfStudentLike',
    'PerturbedPareto',
    'TargetDensity',
    'make_density',
    'verify_envelope',
    'SpeedFunction',
    'TimeChangedLaw',
    'ProcessSpec',
    'speed_function',
    'langevin_spec',
    'accelerated_spec',
    'bibby_spec',
    'bibby_coefficients',
    'key_identity_residual',
    'stationarity_residual',
    'mixing_exponent_r',
    'Path',
    'StepPolicy',
    'TimeChange',
    'make_streams',
    'simulate_path',
    'time_change',
    'time_change_path',
    'chi_end',
    'simulate_ensemble',
    'hitting_times',
    'BoundarySolution',
    'MomentLadder',
    'solve_bvp',
    'moment_ladder',
    'check_ladder',
    'exp_moment_bound',
    'tv_bound_curve',
    'TvCurve',
    'HittingStats',
    'RateFit',
    'SweepReport',
    'LlnTable',
    'tv_curve',
    'hitting_stats',
    'lln_check',
    'rate_fit',
    'initial_condition_sweep',
]
