"""Simulation and analysis toolkit for a mass-conserving nonlocal dynamics.

The state is a field represented by weighted value atoms; the package
integrates the induced atom dynamics exactly, computes decreasing
rearrangements and Lyapunov energies, and predicts / validates the
long-time limit step profiles.
"""

from .dynamics import (
    IntegratorConfig,
    Termination,
    Trajectory,
    characteristic_flow,
    integrate,
    step_rk4,
    verify_trajectory,
)
from .energy import (
    EnergyLimit,
    EnergyRecord,
    dissipation_constant,
    dissipation_rate,
    energy_limit,
    energy_record,
    lyapunov,
)
from .errors import (
    BallTooLargeError,
    ComparisonError,
    ConfigError,
    DenominatorVanishingError,
    DissipationUnavailableError,
    DomainMismatchError,
    EvalDomainError,
    ExprSyntaxError,
    FieldError,
    InfeasibleMeasureError,
    ModelValidationError,
    NldynError,
    NoRootError,
    NotConvergedError,
    NumericalFailureError,
    PairingError,
    PredictionResidualError,
    QuadratureError,
    UnknownIdentifierError,
    UnknownModelError,
)
from .exprparse import build_model, differentiate, evaluate, parse, unparse
from .field import (
    AtomField,
    StepProfile,
    distribution,
    from_samples,
    integral_of,
    l1_distance,
    mass,
    profile_l1_distance,
    rearrange,
)
from .model import (
    HypothesisClass,
    LipschitzEstimate,
    NonlinearityPair,
    antiderivative_value,
    builtin_model,
    classify_hypothesis,
    lambda_of,
    lipschitz_bound,
    rhs,
    validate_pair,
)
from .omega import (
    GFunction,
    OmegaPrediction,
    consistency_check,
    extract_limit,
    gfunction,
    predict_h1,
    predict_h3,
    sample_g_monotone,
)

__version__ = "0.1.0"

__all__ = [
    "AtomField",
    "BallTooLargeError",
    "ComparisonError",
    "ConfigError",
    "DenominatorVanishingError",
    "DissipationUnavailableError",
    "DomainMismatchError",
    "EnergyLimit",
    "EnergyRecord",
    "EvalDomainError",
    "ExprSyntaxError",
    "FieldError",
    "GFunction",
    "HypothesisClass",
    "InfeasibleMeasureError",
    "IntegratorConfig",
    "LipschitzEstimate",
    "ModelValidationError",
    "NldynError",
    "NoRootError",
    "NonlinearityPair",
    "NotConvergedError",
    "NumericalFailureError",
    "OmegaPrediction",
    "PairingError",
    "PredictionResidualError",
    "QuadratureError",
    "StepProfile",
    "Termination",
    "Trajectory",
    "UnknownIdentifierError",
    "UnknownModelError",
    "antiderivative_value",
    "build_model",
    "builtin_model",
    "characteristic_flow",
    "classify_hypothesis",
    "consistency_check",
    "differentiate",
    "dissipation_constant",
    "dissipation_rate",
    "distribution",
    "energy_limit",
    "energy_record",
    "evaluate",
    "extract_limit",
    "from_samples",
    "gfunction",
    "integral_of",
    "integrate",
    "l1_distance",
    "lambda_of",
    "lipschitz_bound",
    "lyapunov",
    "mass",
    "parse",
    "predict_h1",
    "predict_h3",
    "profile_l1_distance",
    "rearrange",
    "rhs",
    "sample_g_monotone",
    "step_rk4",
    "unparse",
    "validate_pair",
    "verify_trajectory",
]
