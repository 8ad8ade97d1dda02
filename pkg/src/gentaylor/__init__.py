"""Generalized Taylor formula for linear differential operators.

Builds Cauchy kernels, Kronecker-normalised fundamental sets and adjoint
solutions numerically, reconstructs functions from initial data plus a
kernel-weighted remainder, solves nonhomogeneous problems by the Cauchy
formula, and reduces linear integro-differential equations to Volterra
equations of the second kind.
"""

from .errors import (
    ArgumentError,
    CapabilityError,
    CatalogueLookupError,
    EvaluationError,
    ExpressionError,
    GentaylorError,
    GridError,
    ProblemFileError,
    QuadratureError,
    StepBudgetError,
    StepSizeError,
)
from .expansion import GeneralizedTaylor, ReconstructionReport, cauchy_solve, classical_taylor, reconstruct
from .expressions import Expr, parse
from .ivp import (
    AdjointSlice,
    FundamentalSet,
    KernelSlice,
    SolveConfig,
    Trajectory,
    adjoint_phi,
    cauchy_kernel,
    fundamental_from_adjoint,
    fundamental_set,
    integrate,
    kernel_table,
)
from .operator import (
    CoefficientBundle,
    Jet,
    LinearOperator,
    SmoothFunction,
    apply_adjoint,
    apply_forward,
    concomitant,
    lagrange_residual,
)
from .quad import QuadResult, integrate_adaptive
from .volterra import (
    GridSolution,
    IntegroDifferentialProblem,
    VolterraProblem,
    cross_validate,
    reduce,
    solve_ide_direct,
    solve_volterra,
)

__version__ = "0.1.0"
