"""Exception and warning types raised across the package."""


class SimulationError(Exception):
    """Base class for numerical failures (CLI exit code 2)."""


class TruncationTooSmall(SimulationError):
    """The Fock-basis truncation cannot hold the requested state."""


class IndexOutOfRange(ValueError):
    pass


class SingularFisher(SimulationError):
    pass


class SweepBracketFailure(SimulationError):
    pass


class FlatLikelihood(SimulationError):
    pass


class DegeneratePosterior(SimulationError):
    pass


class OutOfFringeRange(SimulationError):
    pass


class ConfigError(ValueError):
    """Invalid run configuration (CLI exit code 1)."""


class NotConverged(UserWarning):
    """Emitted when an optimizer exhausts its iteration budget.

    The result is still returned, with ``converged=False``.
    """
