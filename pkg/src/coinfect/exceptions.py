"""Exception hierarchy shared by all analysis modules."""


class CoinfectError(Exception):
    """Base class. ``module`` names the subsystem that raised."""

    module = "coinfect"

    def record(self):
        """Machine-readable description used by the command line."""
        return {"error": type(self).__name__, "module": self.module, "message": str(self)}


class ParameterError(CoinfectError, ValueError):
    module = "params"


class NonPositiveRate(ParameterError):
    pass


class NonPositiveK(ParameterError):
    pass


class EqualSigmas(ParameterError):
    pass


class SigmaOrderViolation(ParameterError):
    pass


class DegenerateDelta(ParameterError):
    pass


class InconsistentRates(ParameterError):
    pass


class ConfigParseError(ParameterError):
    module = "cli"


class IllConditionedSystem(CoinfectError, ArithmeticError):
    module = "equilibria"


class EigenSolverFailure(CoinfectError, ArithmeticError):
    module = "stability"


class MultipleStable(CoinfectError):
    module = "stability"

    def __init__(self, message, points=()):
        super().__init__(message)
        self.points = list(points)


class NoneStable(CoinfectError):
    module = "stability"

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest


class LabelChangeInsideInterval(CoinfectError):
    module = "branch"

    def __init__(self, message, K_change=None):
        super().__init__(message)
        self.K_change = K_change


class DiscontinuousBranch(CoinfectError):
    module = "branch"

    def __init__(self, message, threshold=None):
        super().__init__(message)
        self.threshold = threshold


class StepSizeUnderflow(CoinfectError, ArithmeticError):
    module = "simulate"


class InvalidInitialState(CoinfectError, ValueError):
    module = "simulate"
