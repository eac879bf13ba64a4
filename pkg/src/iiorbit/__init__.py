"""Orbital stabilization toolbox.

Builds controllers that immerse a plant's dynamics into a lower-dimensional
oscillator, verifies the construction identities numerically, simulates the
closed loop, and measures convergence to the induced periodic orbit.
"""

from .core import (
    ControlAffineSystem,
    Controller,
    IandIBundle,
    ImmersionMap,
    ImplicitManifold,
    ParameterError,
    TargetDynamics,
    ValidationReport,
    augmented_field,
    closed_loop_field,
    constraint_residual,
    fbi_residual,
    left_annihilator,
    manifold_residual,
    on_manifold_control,
    validate_bundle,
)
from .odesim import (
    FieldEvaluationError,
    IntegrationAbort,
    SectionEvent,
    Trajectory,
    VectorFieldHandle,
    detect_crossings,
    estimate_period,
    integrate_adaptive,
    integrate_fixed,
)
from .analysis import (
    DecayFit,
    Lemma1Report,
    Lemma2Report,
    Lemma2Setup,
    OrbitSet,
    energy_drift,
    fit_decay,
    lemma1_check,
    lemma2_check,
    lemma2_F,
    lemma2_l2min,
    lemma2_r0,
    orbit_samples,
    orbital_distance,
    orbital_distance_tail,
    wrap_angle,
)
from .plants import (
    CartPendLinearParams,
    CartPendNonlinearParams,
    DcAcParams,
    IwpParams,
    LtiParams,
    PRESETS,
    cartpend_singularity_margin,
    iwp_energy,
    make_cartpend_linear,
    make_cartpend_nonlinear,
    make_dcac,
    make_inline,
    make_iwp,
    make_lti,
    make_preset,
    preset_params,
)

__version__ = "0.1.0"

__all__ = [
    "ControlAffineSystem",
    "Controller",
    "IandIBundle",
    "ImmersionMap",
    "ImplicitManifold",
    "ParameterError",
    "TargetDynamics",
    "ValidationReport",
    "augmented_field",
    "closed_loop_field",
    "constraint_residual",
    "fbi_residual",
    "left_annihilator",
    "manifold_residual",
    "on_manifold_control",
    "validate_bundle",
    "FieldEvaluationError",
    "IntegrationAbort",
    "SectionEvent",
    "Trajectory",
    "VectorFieldHandle",
    "detect_crossings",
    "estimate_period",
    "integrate_adaptive",
    "integrate_fixed",
    "DecayFit",
    "Lemma1Report",
    "Lemma2Report",
    "Lemma2Setup",
    "OrbitSet",
    "energy_drift",
    "fit_decay",
    "lemma1_check",
    "lemma2_check",
    "lemma2_F",
    "lemma2_l2min",
    "lemma2_r0",
    "orbit_samples",
    "orbital_distance",
    "orbital_distance_tail",
    "wrap_angle",
    "CartPendLinearParams",
    "CartPendNonlinearParams",
    "DcAcParams",
    "IwpParams",
    "LtiParams",
    "PRESETS",
    "cartpend_singularity_margin",
    "iwp_energy",
    "make_cartpend_linear",
    "make_cartpend_nonlinear",
    "make_dcac",
    "make_inline",
    "make_iwp",
    "make_lti",
    "make_preset",
    "preset_params",
    "__version__",
]
