from .exact import (
    EstimatorPolys,
    Rollout,
    estimator_polys,
    expect,
    noise_variances,
    poly_moments,
    poly_nsr,
    poly_objective,
    propagate,
)
from .multipoly import MultiPoly, expect_product, mul, substitute
from .system import (
    PolyPolicyParams,
    PolySystem,
    cubic_1d,
    linear_as_poly,
    load_poly_system,
    quadratic_1d,
)

__all__ = [
    "EstimatorPolys",
    "MultiPoly",
    "PolyPolicyParams",
    "PolySystem",
    "Rollout",
    "cubic_1d",
    "estimator_polys",
    "expect",
    "expect_product",
    "linear_as_poly",
    "load_poly_system",
    "mul",
    "noise_variances",
    "poly_moments",
    "poly_nsr",
    "poly_objective",
    "propagate",
    "quadratic_1d",
    "substitute",
]
