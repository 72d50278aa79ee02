"""Exception hierarchy shared by the solver modules.

The CLI maps these onto process exit codes, so every failure raised by the
library falls in one of three classes: bad input (contract), numerics that
did not converge, or a violated invariant.
"""


class BecLinearError(Exception):
    exit_code = 1


class ContractError(BecLinearError, ValueError):
    """Caller violated a precondition (shapes, ranges, domains)."""

    exit_code = 2


class DomainError(ContractError):
    pass


class SingularEvaluationError(ContractError):
    """A kernel was evaluated exactly on its singular set."""


class PoleError(ContractError):
    pass


class RangeError(ContractError):
    pass


class NumericalFailure(BecLinearError, RuntimeError):
    exit_code = 3

    def __init__(self, message, partial=None, achieved=None):
        super().__init__(message)
        self.partial = partial
        self.achieved = achieved


class StepSizeError(NumericalFailure):
    pass


class BranchError(NumericalFailure):
    """The principal log branch of a contour integrand was lost."""


class InvariantViolation(BecLinearError, AssertionError):
    exit_code = 4


class ConsistencyError(InvariantViolation):
    pass
