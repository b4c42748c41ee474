"""Exception types shared across the package."""


class SingularModelError(ValueError):
    """The analytic scattering model is singular at the requested point."""


class UndefinedPhaseError(ValueError):
    """The transmission vanishes, so its phase (and group delay) is undefined."""


class SteadyStateError(RuntimeError):
    """The Liouvillian does not determine a unique steady state."""


class RankError(ValueError):
    """A regression design matrix is rank deficient (e.g. too few distinct powers)."""


class ConvergenceError(RuntimeError):
    """An iterative fit terminated without meeting its convergence criterion."""


class ConfigError(ValueError):
    """An experiment configuration failed validation."""
