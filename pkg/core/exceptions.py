# core/exceptions.py
from typing import Optional


class KwiseError(Exception):
    """Base class for every failure raised by the toolkit"""

    exit_code = 1

    def to_dict(self) -> dict:
        return {"error": str(self), "type": type(self).__name__, "exit_code": self.exit_code}


class ValidationError(KwiseError, ValueError):
    """Invalid input or violated precondition"""

    exit_code = 1


class GraphError(ValidationError):
    pass


class MarginError(ValidationError):
    pass


class SamplerError(ValidationError):
    pass


class LimitLawError(ValidationError):
    pass


class IndependenceError(ValidationError):
    pass


class GofError(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NumericalError(KwiseError, ArithmeticError):
    """A numerical routine did not reach its accuracy target"""

    exit_code = 2

    def __init__(self, message: str, residual: Optional[float] = None):
        if residual is not None:
            message = f"{message} (residual estimate {residual:.3e})"
        super().__init__(message)
        self.residual = residual

    def to_dict(self) -> dict:
        payload = super().to_dict()
        payload["residual"] = self.residual
        return payload


class QuadratureError(NumericalError):
    pass


class CfInversionError(NumericalError):
    pass


class StatisticalRejection(KwiseError):
    """A goodness-of-fit battery rejected its null in assert mode"""

    exit_code = 3
