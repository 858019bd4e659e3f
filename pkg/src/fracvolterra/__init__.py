"""Nonlinear fractional Volterra equations with power-type forcing.

Solves ``x(t) = x0 + int_0^t f(s, x(s)) (t-s)^(alpha-1) ds`` on long
horizons and checks growth-rate statements about the solutions.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .param_plan import (  # noqa: F401
    OrderPair,
    ParamPlan,
    build_plan,
    check_h_growth,
    default_plan,
    p2_bounds,
    plan_violations,
    validate_orders,
    zeta_bound,
)
from .bihari import BihariProfile, GSpec, check_superlinear, eval_W, power_lower_bound  # noqa: F401
from .problems import (  # noqa: F401
    CoefficientSpec,
    ProblemSpec,
    make_constant,
    make_custom,
    make_linear_relaxation,
    make_logistic,
    make_sharpness,
    make_sublinear_cooling,
)
from .mesh import Mesh, build_geometric_tail_mesh, build_graded_mesh, default_grading  # noqa: F401
from .solver import (  # noqa: F401
    ContractionConfig,
    SolutionPath,
    observed_order,
    product_weights,
    richardson_order,
    solve_picard,
    solve_step,
    uniqueness_probe,
)
from .asymptotics import (  # noqa: F401
    ExponentFit,
    SharpnessReport,
    TheoremDiagnostics,
    fit_growth_exponent,
    mittag_leffler,
    mittag_leffler_array,
    omega_analysis,
    theorem_diagnostics,
    verify_sharpness,
    verify_upper_estimate,
)
from .kernels import available_backends, default_backend_name  # noqa: F401
