"""Exception hierarchy.

ValidationError maps to CLI exit code 1, NumericalError to exit code 2.
"""


class EmbeddingError(Exception):
    pass


class ValidationError(EmbeddingError):
    pass


class NumericalError(EmbeddingError):
    pass


class ModelError(ValidationError):
    pass


class ScfError(NumericalError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class RpaInstabilityError(NumericalError):
    def __init__(self, msg, value=None):
        super().__init__(msg)
        self.value = value


class QpConvergenceError(NumericalError):
    def __init__(self, msg, orbital=None, last_iterates=None):
        super().__init__(msg)
        self.orbital = orbital
        self.last_iterates = last_iterates


class QuadratureError(NumericalError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual
