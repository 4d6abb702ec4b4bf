"""Exception hierarchy shared by the library and the command line front end.

Every error carries the process exit code the CLI maps it to.
"""


class TwistspecError(Exception):
    exit_code = 1


class ConfigError(TwistspecError):
    exit_code = 2


class HypothesisViolation(TwistspecError):
    """A theorem hypothesis does not hold for the requested configuration."""

    exit_code = 3


class HalfPlaneViolated(HypothesisViolation):
    pass


class NotDiverging(HypothesisViolation):
    pass


class NoOrigin(HypothesisViolation):
    pass


class NoInradius(HypothesisViolation):
    pass


class NotInside(TwistspecError):
    pass


class EmptyGrid(TwistspecError):
    pass


class ZeroVector(TwistspecError):
    pass


class AsymmetricMatrix(TwistspecError):
    pass


class TooLarge(TwistspecError):
    pass


class NotConverged(TwistspecError):
    """Raised on request when an eigensolve leaves some pairs unconverged.

    The partial result is attached as ``result``.
    """

    exit_code = 1

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
