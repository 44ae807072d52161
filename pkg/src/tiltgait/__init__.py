"""Tilt-rotor quadrotor simulation and control with cat-inspired gaits.

Subpackages by concern: ``rigidbody`` (dynamics), ``gaits`` (tilt-angle
schedules), ``singularity`` (decoupling-matrix invertibility),
``lincontrol`` (feedback-linearization controller), ``simkit`` (fixed-step
closed-loop experiments), ``cli`` (command-line front end).
"""

from .rigidbody import (
    ROTOR_SIGNS,
    EulerAttitude,
    RigidState,
    VehicleParams,
    euler_from_rotation,
    hat,
    hover_signed_squares,
    rotation_matrix,
    state_derivative,
    thrust_map,
    torque_map,
)
from .gaits import (
    BUILTIN_GAIT_NAMES,
    GaitSchedule,
    GaitWaveform,
    builtin_gait,
    parse_gait_file,
    serialize_gait,
)
from .singularity import (
    LinearizationData,
    SingularLocus,
    approx_condition,
    decoupling_matrix,
    exact_condition,
    locus_sweep,
    min_scale,
)
from .lincontrol import (
    ControlConfig,
    GaitTrackingController,
    PdGains,
    feedback_linearize,
    lateral_force,
    modified_decoupler,
    pd_outer,
)
from .simkit import (
    ExperimentConfig,
    TrackingMetrics,
    ode3_step,
    run_experiment,
    sup_error,
)

__version__ = "0.1.0"
