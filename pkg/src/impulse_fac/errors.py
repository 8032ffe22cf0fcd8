"""Exception hierarchy shared by all modules."""


class ImpulseFacError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ImpulseFacError, ValueError):
    pass


class EmptySubspace(ImpulseFacError, ValueError):
    pass


class NotSymmetric(ImpulseFacError, ValueError):
    pass


class SingularOperator(ImpulseFacError, ArithmeticError):
    pass


class NegativeTime(ImpulseFacError, ValueError):
    pass


class IndexOutOfRange(ImpulseFacError, IndexError):
    pass


class MissingFrozenTrajectory(ImpulseFacError, ValueError):
    pass


class EmptyTrajectory(ImpulseFacError, ValueError):
    pass


class NodeMismatch(ImpulseFacError, ValueError):
    pass


class UnsupportedBackend(ImpulseFacError, TypeError):
    pass


class UnsupportedGrowthKind(ImpulseFacError, ValueError):
    pass


class UnknownFixture(ImpulseFacError, KeyError):
    pass


class ConfigError(ImpulseFacError, ValueError):
    """Invalid run configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class NoConvergence(ImpulseFacError, RuntimeError):
    """Picard iteration hit ``max_iter`` without meeting the tolerance.

    The last iterate and the per-iteration history are attached so callers
    can report the failure without re-running.
    """

    def __init__(self, max_iter: int, last_delta: float, history=None, trajectory=None, result=None):
        super().__init__(f"no convergence after {max_iter} iterations (last delta {last_delta:.3e})")
        self.max_iter = max_iter
        self.last_delta = last_delta
        self.history = list(history or [])
        self.trajectory = trajectory
        self.result = result
