"""Composite minimax polynomial approximations for encrypted-friendly inference.

The library builds minimax composite approximants of the sign function,
derives precise polynomial ReLU / max / max-pooling operators from them,
plans their evaluation cost in non-scalar multiplications and depth, and
bounds (and measures) the end-to-end inference gap of block networks whose
non-polynomial pieces were replaced by these operators.
"""

from .bsgs import (
    BsgsEvaluation,
    CompositeCost,
    EvalPlan,
    composite_cost,
    eval_bsgs,
    mult_envelope,
    plan_bsgs,
)
from .composite import (
    ApproxSpec,
    ClosenessReport,
    SignComposite,
    build_sign_composite,
    certify_closeness,
    image_interval,
    schedule_depth,
    standard_schedule,
    standard_sign_composite,
)
from .netmodel import (
    AvgPool,
    BatchNormInf,
    BoundTrace,
    CompareReport,
    Linear,
    MaxPool,
    Model,
    Relu,
    Residual,
    Softmax,
    empirical_compare,
    error_bound,
    fold_to_linear,
    infinity_norm,
    load_model,
    model_from_json,
    model_to_json,
    run_approx,
    run_original,
    save_model,
)
from .ops import (
    BoundReport,
    MaxApprox,
    MaxPoolApprox,
    ReluApprox,
    max_approx,
    maxpool_approx,
    relu_approx,
    verify_bound,
)
from .poly import Poly, SymmetricDomain, to_power_basis
from .precision import DEFAULT_PRECISION_BITS, default_precision
from .remez import RemezConvergenceError, RemezResult, remez_general, remez_sign_odd

__version__ = "0.1.0"

__all__ = [
    "ApproxSpec",
    "AvgPool",
    "BatchNormInf",
    "BoundReport",
    "BoundTrace",
    "BsgsEvaluation",
    "ClosenessReport",
    "CompareReport",
    "CompositeCost",
    "DEFAULT_PRECISION_BITS",
    "EvalPlan",
    "Linear",
    "MaxApprox",
    "MaxPool",
    "MaxPoolApprox",
    "Model",
    "Poly",
    "Relu",
    "ReluApprox",
    "RemezConvergenceError",
    "RemezResult",
    "Residual",
    "SignComposite",
    "Softmax",
    "SymmetricDomain",
    "build_sign_composite",
    "certify_closeness",
    "composite_cost",
    "default_precision",
    "empirical_compare",
    "error_bound",
    "eval_bsgs",
    "fold_to_linear",
    "image_interval",
    "infinity_norm",
    "load_model",
    "max_approx",
    "maxpool_approx",
    "model_from_json",
    "model_to_json",
    "mult_envelope",
    "plan_bsgs",
    "relu_approx",
    "run_approx",
    "run_original",
    "save_model",
    "schedule_depth",
    "standard_schedule",
    "standard_sign_composite",
    "to_power_basis",
    "verify_bound",
]
