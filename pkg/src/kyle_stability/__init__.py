"""Discrete-time Kyle equilibrium, policy-iteration operators and stability."""

from .experiments import (
    eigenvalue_table,
    key_results_table,
    perturbation_battery,
    variance_perturbation_experiment,
)
from .model import (
    BCoefficients,
    Equilibrium,
    ModelParams,
    RecursionReport,
    equilibrium_from_params,
    implied_b,
    solve_b_recursion,
    verify_kyle_recursions,
)
from .montecarlo import (
    EfficiencyRegression,
    SimConfig,
    SimResult,
    TerminalVarianceCheck,
    equilibrium_config,
    expected_equilibrium_profit,
    simulate,
    terminal_variance_check,
)
from .operators import (
    DOMAIN_RTOL,
    InsiderResponse,
    MakerResponse,
    OperatorResult,
    insider_policy_step,
    insider_response,
    maker_policy_step,
    market_maker_response,
    pinned_coordinate_step,
    pinned_step_polynomials,
)
from .stability import (
    IterationTrace,
    NotAFixedPointError,
    OutOfDomainError,
    StabilityReport,
    StencilDomainError,
    classify_fixed_point,
    classify_spectral_radius,
    eigenvalues,
    iterate,
    iterate_scalar,
    jacobian_closed_form,
    jacobian_fd,
    linearized_pinned_iteration,
    pinned_coordinate_derivative,
    richardson_derivative,
)

__version__ = "0.1.0"

__all__ = [
    "BCoefficients",
    "DOMAIN_RTOL",
    "EfficiencyRegression",
    "Equilibrium",
    "InsiderResponse",
    "IterationTrace",
    "MakerResponse",
    "ModelParams",
    "NotAFixedPointError",
    "OperatorResult",
    "OutOfDomainError",
    "RecursionReport",
    "SimConfig",
    "SimResult",
    "StabilityReport",
    "StencilDomainError",
    "TerminalVarianceCheck",
    "classify_fixed_point",
    "classify_spectral_radius",
    "eigenvalue_table",
    "eigenvalues",
    "equilibrium_config",
    "equilibrium_from_params",
    "expected_equilibrium_profit",
    "implied_b",
    "insider_policy_step",
    "insider_response",
    "iterate",
    "iterate_scalar",
    "jacobian_closed_form",
    "jacobian_fd",
    "key_results_table",
    "linearized_pinned_iteration",
    "maker_policy_step",
    "market_maker_response",
    "perturbation_battery",
    "pinned_coordinate_derivative",
    "pinned_coordinate_step",
    "pinned_step_polynomials",
    "richardson_derivative",
    "simulate",
    "solve_b_recursion",
    "terminal_variance_check",
    "variance_perturbation_experiment",
    "verify_kyle_recursions",
    "__version__",
]
