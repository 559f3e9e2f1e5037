"""Exception hierarchy. Every error subclasses ``ValueError`` so callers can
catch input problems generically; the CLI maps them to exit code 1."""


class NodalLabError(ValueError):
    pass


class DomainError(NodalLabError):
    """Bad dimension, side length, point or ball for a domain."""


class NotAnEigenvalueError(NodalLabError):
    pass


class ModeError(NodalLabError):
    """Invalid frequency vector / phase combination."""


class OneSignedFieldError(NodalLabError):
    pass


class NonVanishingBallError(NodalLabError):
    pass


class DegenerateBallError(NodalLabError):
    """Zero sup over the half ball, so the growth is undefined."""


class GridMismatchError(NodalLabError):
    pass


class FitError(NodalLabError):
    pass
