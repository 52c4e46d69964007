"""Exception hierarchy shared by all modules."""


class SoftmaxSpectraError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SoftmaxSpectraError, ValueError):
    pass


class NotSymmetric(SoftmaxSpectraError, ValueError):
    pass


class NoConvergence(SoftmaxSpectraError, RuntimeError):
    pass


class InvalidDataset(SoftmaxSpectraError, ValueError):
    pass


class BadClassCount(SoftmaxSpectraError, ValueError):
    pass


class RegimeMismatch(SoftmaxSpectraError, ValueError):
    pass


class NoValidSubset(SoftmaxSpectraError, ValueError):
    pass


class SingularHessian(SoftmaxSpectraError, ValueError):
    pass


class NotPositiveTarget(SoftmaxSpectraError, ValueError):
    pass


class NotInvertible(SoftmaxSpectraError, ValueError):
    pass


class BadTheta(SoftmaxSpectraError, ValueError):
    pass


class BadSpectrum(SoftmaxSpectraError, ValueError):
    pass


class InsufficientTrace(SoftmaxSpectraError, ValueError):
    pass


class Diverged(SoftmaxSpectraError, RuntimeError):
    """Gradient descent blew up. ``trace`` holds the iterations recorded so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class MalformedInput(SoftmaxSpectraError, ValueError):
    pass
