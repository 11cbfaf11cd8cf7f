"""Variable-exponent Abel operators and fractional differential equations.

Forward operators, approximate-inversion kernels, a second-kind Volterra
solver for first-kind Abel equations, and the variable-exponent
Riemann-Liouville FDE pipeline.
"""

from .errors import (DomainError, FracvxError, IllConditioned, InvalidInitialValue, ParseError,
                     QuadratureFailure, RangeViolation)
from .exponent import Regime, TwoVariableExponent, VariableExponent, make_exponent
from .funclang import ScalarFunc, parse_expr
from .inversion import Composition, compose_residual, rhs_abel, rhs_fde
from .kernels import gamma_weight, kernel_K, kernel_L, kernel_M_dt, kernel_RL
from .operators import Family, OperatorSpec, eval_forward, eval_forward_grid
from .quadrature import GradedMesh, gauss_jacobi, graded_mesh, product_weights
from .solvers import (AbelProblem, FdeProblem, GammaMode, SolutionGrid, fde_residual, solve_abel,
                      solve_fde, solve_vie2)

__version__ = "0.1.0"
