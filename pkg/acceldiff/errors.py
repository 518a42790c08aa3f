"""Exceptions raised by acceldiff.

Operations raise; only the command line runner turns them into exit codes.
"""


class AccelDiffError(Exception):
    pass


class ModelError(AccelDiffError):
    """Density parameters outside the admissible class."""


class QuadratureError(AccelDiffError):
    """Adaptive refinement did not reach the requested tolerance."""


class SimulationError(AccelDiffError):
    """A path overflowed or its step underflowed."""

    def __init__(self, reason, path=None, time=None, state=None):
        self.reason = reason
        self.path = path
        self.time = time
        self.state = state
        super(SimulationError, self).__init__(
            '%s (path=%r, t=%r, x=%r)' % (reason, path, time, state))


class HorizonExhausted(AccelDiffError):
    """The Langevin path is too short to reach the requested changed time."""

    def __init__(self, reached, requested):
        self.reached = reached
        self.requested = requested
        super(HorizonExhausted, self).__init__(
            'horizon exhausted: time change reached %.6g < %.6g; '
            'resimulate with a longer horizon' % (reached, requested))


class CensoringError(AccelDiffError):
    """Too many hitting times were censored by the horizon."""

    def __init__(self, fraction, horizon):
        self.fraction = fraction
        self.horizon = horizon
        super(CensoringError, self).__init__(
            'horizon too short: %.2f%% of hitting times censored at t=%.6g'
            % (100.0 * fraction, horizon))


class InsufficientData(AccelDiffError):
    pass


class ConfigError(AccelDiffError):
    """Invalid experiment configuration; ``errors`` lists every bad field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super(ConfigError, self).__init__(
            'invalid configuration:\n' + '\n'.join('  ' + e for e in self.errors))


class ReportError(AccelDiffError):
    pass


class InvariantViolation(AccelDiffError):
    """A scientific invariant failed."""

    def __init__(self, name, detail):
        self.name = name
        self.detail = detail
        super(InvariantViolation, self).__init__('%s violated: %s' % (name, detail))
