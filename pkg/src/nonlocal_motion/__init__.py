"""Nonlocal constants of motion for Lagrangian systems with generalized forces.

A constant is built from a model and a perturbation family::

    from nonlocal_motion import NonlocalConstant, State, integrate, make_preset, time_shift_family

    sys_ = make_preset("hydraulic", potential="bump", n=2)
    nc = NonlocalConstant(sys_, time_shift_family())
    traj = integrate(sys_, [nc], State(0.0, [1.0, 0.0], [0.5, 0.2]), 10.0)
    traj.relative_drift()
"""

from .core import (
    AugmentedSystem,
    NonlocalConstant,
    PerturbationFamily,
    Quadrature,
    SecondOrderSystem,
    State,
    augmented_rhs,
    boundary_term,
    constant_value,
    el_residual,
    family_residual,
    integrand_M,
)
from .errors import (
    ConfigError,
    ContractViolation,
    LawViolation,
    NonFiniteError,
    NonlocalMotionError,
    PreconditionError,
    RegimeError,
    SingularConfigurationError,
)
from .families import (
    family_from_id,
    hyd_shift_family,
    mb_aniso_scaling_family,
    mb_rotation_family,
    mb_translation_family,
    rotation_family,
    scaling_hom2_family,
    time_shift_family,
    visc_shift_family,
    zero_family,
)
from .integrate import IntegratorConfig, Status, Trajectory, integrate, order_check, round_trip_error
from .models import (
    CalogeroParams,
    CentralInverseSquareParams,
    HydraulicParams,
    MaxwellBlochParams,
    OscillatorParams,
    ViscousParams,
    make_calogero,
    make_central_inverse_square,
    make_hydraulic,
    make_maxwell_bloch,
    make_oscillator,
    make_preset,
    make_viscous,
)

__all__ = [
    "AugmentedSystem",
    "NonlocalConstant",
    "PerturbationFamily",
    "Quadrature",
    "SecondOrderSystem",
    "State",
    "augmented_rhs",
    "boundary_term",
    "constant_value",
    "el_residual",
    "family_residual",
    "integrand_M",
    "ConfigError",
    "ContractViolation",
    "LawViolation",
    "NonFiniteError",
    "NonlocalMotionError",
    "PreconditionError",
    "RegimeError",
    "SingularConfigurationError",
    "family_from_id",
    "hyd_shift_family",
    "mb_aniso_scaling_family",
    "mb_rotation_family",
    "mb_translation_family",
    "rotation_family",
    "scaling_hom2_family",
    "time_shift_family",
    "visc_shift_family",
    "zero_family",
    "IntegratorConfig",
    "Status",
    "Trajectory",
    "integrate",
    "order_check",
    "round_trip_error",
    "CalogeroParams",
    "CentralInverseSquareParams",
    "HydraulicParams",
    "MaxwellBlochParams",
    "OscillatorParams",
    "ViscousParams",
    "make_calogero",
    "make_central_inverse_square",
    "make_hydraulic",
    "make_maxwell_bloch",
    "make_oscillator",
    "make_preset",
    "make_viscous",
]
__version__ = "0.1.0"
