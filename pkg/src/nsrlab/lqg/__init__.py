from .bounds import lifted_state_map_norm_bounds, variance_upper_bound
from .lift import LiftedSystem, lift
from .multi_step import (
    joint_mean_grads,
    joint_second_moments,
    multi_step_mean_grads,
    multi_step_second_moments,
    nsr,
    objective,
    state_covariances,
)
from .one_step import OneStepCore, one_step_core, one_step_mean_grads, one_step_second_moments
from .system import (
    GaussianLinearPolicy,
    LinearSystem,
    default_double_integrator_policy,
    double_integrator,
    load_system,
    rotation_family,
)

__all__ = [
    "GaussianLinearPolicy",
    "LiftedSystem",
    "LinearSystem",
    "OneStepCore",
    "default_double_integrator_policy",
    "double_integrator",
    "joint_mean_grads",
    "joint_second_moments",
    "lift",
    "lifted_state_map_norm_bounds",
    "load_system",
    "multi_step_mean_grads",
    "multi_step_second_moments",
    "nsr",
    "objective",
    "one_step_core",
    "one_step_mean_grads",
    "one_step_second_moments",
    "rotation_family",
    "state_covariances",
    "variance_upper_bound",
]
