"""Exception hierarchy shared by the library and the CLI."""


class LipcertError(Exception):
    """Base class for all errors raised by lipcert."""


class NonFinite(LipcertError, ValueError):
    pass


class NotSquare(LipcertError, ValueError):
    pass


class DimensionMismatch(LipcertError, ValueError):
    pass


class NotPsd(LipcertError, ValueError):
    """The matrix has a pivot (or residual) that rules out semi-definiteness."""


class NoConvergence(LipcertError, RuntimeError):
    """Power iteration did not stabilise.

    The last iterate's value and eigen-residual are attached so callers can
    decide whether the estimate is still usable.
    """

    def __init__(self, message, value=float("nan"), residual=float("nan"), iterations=0):
        super().__init__(message)
        self.value = value
        self.residual = residual
        self.iterations = iterations


class UndefinedGradient(LipcertError, ArithmeticError):
    """The Mahalanobis distance is not differentiable at zero distance."""


class DegenerateQuadruple(LipcertError, ValueError):
    pass


class ZeroMatrix(LipcertError, ValueError):
    pass


class ZeroRadius(LipcertError, ValueError):
    pass


class ParseError(LipcertError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "")
            message = f"{loc}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column
