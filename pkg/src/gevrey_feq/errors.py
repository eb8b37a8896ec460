"""Exception hierarchy shared by all modules."""


class FeqError(Exception):
    """Base class for every error raised by gevrey_feq."""


class ExprSyntaxError(FeqError, ValueError):
    def __init__(self, message, pos=None, text=None):
        self.pos = pos
        self.text = text
        if pos is not None:
            message = f"{message} (at position {pos})"
        super().__init__(message)


class UnknownIdentifierError(ExprSyntaxError):
    pass


class EvaluationDomainError(FeqError, ArithmeticError):
    """An expression was evaluated where it is undefined (zero denominator)."""


class ChebDomainError(FeqError, ValueError):
    """A Chebyshev series was evaluated outside [-1, 1]."""


class ResolutionError(FeqError):
    """Adaptive interpolation did not resolve the function at max_degree."""

    def __init__(self, message, envelope=None):
        super().__init__(message)
        self.envelope = envelope


class InvalidMapError(FeqError):
    """An inner map does not send [-1, 1] into [-1, 1]."""

    def __init__(self, message, index=None, witness=None):
        super().__init__(message)
        self.index = index
        self.witness = witness


class ContractionError(FeqError):
    def __init__(self, message, rho=None):
        super().__init__(message)
        self.rho = rho


class ConvergenceError(FeqError):
    def __init__(self, message, iterations=None, increment=None):
        super().__init__(message)
        self.iterations = iterations
        self.increment = increment


class TooFewCoefficientsError(FeqError, ValueError):
    pass


class ConfigError(FeqError, ValueError):
    pass
