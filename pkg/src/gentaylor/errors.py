"""Exception hierarchy shared by all gentaylor modules."""


class GentaylorError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(GentaylorError, ValueError):
    """A caller supplied arguments that violate an operation's preconditions."""


class EvaluationError(GentaylorError, ArithmeticError):
    """A coefficient, forcing or kernel produced a non-finite value."""


class CapabilityError(GentaylorError):
    """A required derivative order is unavailable (no oracle, fallback disabled)."""


class StepSizeError(GentaylorError):
    """The adaptive integrator needed a step below the minimum step size."""


class StepBudgetError(GentaylorError):
    """The adaptive integrator exhausted its step budget."""


class QuadratureError(GentaylorError):
    """Adaptive quadrature ran out of panels before meeting its tolerance.

    The best available value and its error estimate are kept on the exception.
    """

    def __init__(self, message, value, error_estimate, evaluations):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
        self.evaluations = evaluations


class GridError(GentaylorError):
    """A marching scheme hit a singular diagonal factor; use a finer grid."""


class CatalogueLookupError(GentaylorError, LookupError):
    """Unknown catalogue problem name."""


class ExpressionError(GentaylorError, ValueError):
    """An expression descriptor falls outside the supported grammar."""


class ProblemFileError(GentaylorError):
    """A problem definition file is malformed or fails schema validation."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
