"""Exception hierarchy shared by all modules."""


class FjmgtError(Exception):
    """Base class for every error raised by the package."""

    #: short tag used by the CLI in its ``error[<tag>]:`` prefix
    tag = "error"


class DomainError(FjmgtError, ValueError):
    tag = "domain"


class PointwiseUndefined(FjmgtError, ValueError):
    tag = "pointwise"


class NumericalError(FjmgtError, ArithmeticError):
    tag = "numerical"


class NoIntegrableResolvent(FjmgtError, ValueError):
    tag = "resolvent"


class UnsupportedScenario(FjmgtError, ValueError):
    tag = "unsupported"


class CaseMismatch(FjmgtError, ValueError):
    tag = "case"


class ShapeError(FjmgtError, ValueError):
    tag = "shape"


class DegenerateCoefficient(FjmgtError, ArithmeticError):
    tag = "degenerate"


class NoContraction(FjmgtError, ArithmeticError):
    tag = "contraction"

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals or [])


class RunawayError(NumericalError):
    tag = "runaway"


class ConfigError(FjmgtError, ValueError):
    tag = "config"

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class OutputError(FjmgtError, OSError):
    tag = "io"

    def __init__(self, path, reason):
        self.path = str(path)
        super().__init__(f"{self.path}: {reason}")
