"""Exception types raised by blockgibbs."""


class BlockGibbsError(Exception):
    """Base class for all package errors."""


class ModelValidationError(BlockGibbsError, ValueError):
    """Raised when a model violates one or more structural invariants.

    ``errors`` holds every violation as ``(code, message)`` pairs, where
    ``code`` is one of ``AsymmetricEdges``, ``ReducibleJumpGraph``,
    ``AsymmetricW``, ``BadProportions``, ``BadSizes``, ``BadShape`` or
    ``BadBeta``.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        msg = "; ".join(f"{code}: {text}" for code, text in self.errors)
        super().__init__(msg or "invalid model")

    @property
    def codes(self):
        return [code for code, _ in self.errors]


class SizeMismatch(BlockGibbsError, ValueError):
    pass


class InconsistentFlip(BlockGibbsError, ValueError):
    pass


class TooLarge(BlockGibbsError, ValueError):
    pass


class StepTooLarge(BlockGibbsError, ArithmeticError):
    pass


class BoundaryPoint(BlockGibbsError, ValueError):
    pass


class NotAFixedPoint(BlockGibbsError, ValueError):
    pass


class NonConvergence(BlockGibbsError, RuntimeError):
    """The fixed-point iteration hit ``max_iter``; ``report`` has the last iterate."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
