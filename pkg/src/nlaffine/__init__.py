"""Worst-case (sublinear) expectations of affine jump-diffusions under
parameter uncertainty: coefficient sets, the worst-case generator, a monotone
finite-difference solver for the associated Kolmogorov equation, Monte Carlo
lower bounds, and hypothesis checkers."""

__version__ = "0.1.0"

from .params import (
    AffineParameter,
    AtomicLevyMeasure,
    CoefficientBox,
    FiniteParameterSet,
    ParameterSet,
    StateSpace,
    Triplet,
    TruncationFunction,
    check_admissible,
    check_coefficient_bounds,
    check_linear_bound,
    enumerate_vertices,
    growth_bound,
    growth_norm,
    hat_triplet_at,
    levy_norm,
    small_jump_mass,
    triplet_at,
    truncation_constant,
)
from .generator import (
    GeneratorMode,
    TestFunction,
    generator_value,
    jump_integral,
    matrix_sqrt,
    sqrt_diffusion_lipschitz,
    worst_case_generator,
)
from .payoffs import make_payoff
from .pide import (
    CFLError,
    Grid,
    NonFiniteError,
    SchemeConfig,
    ValueSurface,
    dpp_gap,
    holder_exponent,
    solve,
)
from .montecarlo import (
    PathBundle,
    SimConfig,
    estimate_expectation,
    lower_bound_sublinear,
    moment_bound_report,
    simulate_paths,
)
from .conditions import ConditionReport, check_comparison_conditions, uniqueness_gate
from .config import ConfigError, ExperimentConfig

__all__ = [
    "AffineParameter",
    "AtomicLevyMeasure",
    "CFLError",
    "CoefficientBox",
    "ConditionReport",
    "ConfigError",
    "ExperimentConfig",
    "FiniteParameterSet",
    "GeneratorMode",
    "Grid",
    "NonFiniteError",
    "ParameterSet",
    "PathBundle",
    "SchemeConfig",
    "SimConfig",
    "StateSpace",
    "TestFunction",
    "Triplet",
    "TruncationFunction",
    "ValueSurface",
    "check_admissible",
    "check_coefficient_bounds",
    "check_comparison_conditions",
    "check_linear_bound",
    "dpp_gap",
    "enumerate_vertices",
    "estimate_expectation",
    "generator_value",
    "growth_bound",
    "growth_norm",
    "hat_triplet_at",
    "holder_exponent",
    "jump_integral",
    "levy_norm",
    "lower_bound_sublinear",
    "make_payoff",
    "matrix_sqrt",
    "moment_bound_report",
    "simulate_paths",
    "small_jump_mass",
    "solve",
    "sqrt_diffusion_lipschitz",
    "triplet_at",
    "truncation_constant",
    "uniqueness_gate",
    "worst_case_generator",
]
