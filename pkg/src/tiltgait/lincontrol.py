"""Feedback-linearization tracking controller.

The controlled outputs are y = (roll, pitch, yaw, altitude). A PD outer
loop turns output references into desired accelerations; feedback
linearization inverts the decoupling matrix to find the rotor
signed-squares that realize them. Horizontal position is tracked
indirectly: a PD position loop produces desired X/Y accelerations, and an
attitude-position decoupler converts them into roll/pitch targets. The
modified decoupler additionally cancels the lateral force that a tilted
gait generates at hover thrust, which the conventional decoupler ignores.

The tilt angles are treated as constant within each control step
(quasi-static schedule); the rotor command solved each step is applied
through a one-step servo on the signed squares, so the new-input vector
U is the rate of w toward the feedback-linearization solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularityError
from .rigidbody import (
    ROTOR_SIGNS,
    RigidState,
    VehicleParams,
    euler_from_rotation,
    thrust_map,
    torque_map,
)
from .singularity import (
    DEFAULT_MARGIN,
    LinearizationData,
    decoupling_matrix,
    exact_condition,
)

__all__ = [
    "PdGains",
    "ControlConfig",
    "ControlCommand",
    "pd_outer",
    "feedback_linearize",
    "lateral_force",
    "modified_decoupler",
    "conventional_decoupler",
    "GaitTrackingController",
]


@dataclass(frozen=True)
class PdGains:
    """Per-channel proportional (1/s^2) and derivative (1/s) gains."""

    kp: tuple[float, ...] = (16.0, 16.0, 16.0, 16.0)
    kd: tuple[float, ...] = (8.0, 8.0, 8.0, 8.0)

    def __post_init__(self):
        if len(self.kp) != len(self.kd):
            raise ValueError("kp and kd must have the same number of channels")
        if any(g < 0 for g in self.kp) or any(g < 0 for g in self.kd):
            raise ValueError("gains must be nonnegative")


@dataclass(frozen=True)
class ControlConfig:
    """Controller parameters; defaults stabilize the nominal vehicle."""

    attitude_gains: PdGains = field(default_factory=PdGains)
    position_kp: float = 1.0
    position_kd: float = 1.6
    tilt_limit: float = 0.4          # saturation of commanded roll/pitch, rad
    margin: float = DEFAULT_MARGIN   # singularity margin on |condition|
    decoupler: str = "modified"      # 'modified' or 'conventional'
    rotor_floor: float = 100.0       # min |w_i|, keeps rotor signs fixed
    accel_feedforward: bool = True   # feed reference acceleration to the loops

    def __post_init__(self):
        if self.decoupler not in ("modified", "conventional"):
            raise ValueError(f"unknown decoupler {self.decoupler!r}")


def pd_outer(ref, meas, gains: PdGains) -> np.ndarray:
    """Desired output accelerations from a PD law.

    ``ref`` is (y_r, ydot_r, yddot_r) and ``meas`` is (y, ydot); all
    channel vectors. Returns yddot_r + kp (y_r - y) + kd (ydot_r - ydot).
    """
    y_r, yd_r, ydd_r = (np.asarray(v, dtype=float) for v in ref)
    y, yd = (np.asarray(v, dtype=float) for v in meas)
    kp = np.asarray(gains.kp, dtype=float)
    kd = np.asarray(gains.kd, dtype=float)
    return ydd_r + kp * (y_r - y) + kd * (yd_r - yd)


def feedback_linearize(
    lin: LinearizationData,
    ydd_desired: np.ndarray,
    condition: float | None = None,
    margin: float = DEFAULT_MARGIN,
) -> np.ndarray:
    """Solve the linearizing input from delta @ U = ydd_desired - drift.

    When ``condition`` is given it is checked against the singularity
    margin first and a :class:`SingularityError` carrying the value is
    raised on violation; the caller decides the fallback. The solution is
    verified to the residual contract of the linear solve.
    """
    if condition is not None and abs(condition) <= margin:
        raise SingularityError(
            f"invertibility condition {condition:.6g} inside margin {margin:g}",
            condition=condition,
        )
    rhs = np.asarray(ydd_desired, dtype=float) - lin.drift
    u = np.linalg.solve(lin.delta, rhs)
    res = lin.delta @ u - rhs
    residual = math.sqrt(res @ res)
    if residual > 1e-10 * max(1.0, math.sqrt(rhs @ rhs)):
        raise SingularityError(
            f"linear solve residual {residual:.3g} exceeds tolerance", condition=condition
        )
    return u


def lateral_force(
    alpha: np.ndarray, params: VehicleParams, thrust: np.ndarray | None = None
) -> tuple[float, float]:
    """Body-frame lateral force (F_X, F_Y) of the hover allocation.

    The hover allocation is the minimum-norm signed-square vector whose
    vertical thrust balances gravity at the given tilt angles; the
    thrust coefficient cancels between the allocation and the force rows.
    """
    F = thrust_map(np.asarray(alpha, dtype=float), params) if thrust is None else thrust
    vertical = F[2]
    norm_sq = vertical @ vertical
    if norm_sq == 0.0:
        raise SingularityError("vertical thrust row is zero, gait cannot hover")
    w_hover = vertical * (params.mass * params.gravity / norm_sq)
    fx, fy = F[:2] @ w_hover
    return float(fx), float(fy)


def modified_decoupler(
    xdd_desired: float,
    ydd_desired: float,
    yaw: float,
    lateral: tuple[float, float],
    params: VehicleParams,
) -> tuple[float, float]:
    """Roll/pitch targets realizing desired horizontal accelerations.

    Includes the lateral-force correction terms F_Y/(mg) on roll and
    -F_X/(mg) on pitch; passing lateral = (0, 0) gives the conventional
    attitude-position decoupler.
    """
    g = params.gravity
    mg = params.mass * g
    fx, fy = lateral
    sy, cy = math.sin(yaw), math.cos(yaw)
    roll = (xdd_desired * sy - ydd_desired * cy) / g + fy / mg
    pitch = (xdd_desired * cy + ydd_desired * sy) / g - fx / mg
    return roll, pitch


def conventional_decoupler(
    xdd_desired: float, ydd_desired: float, yaw: float, params: VehicleParams
) -> tuple[float, float]:
    """Attitude-position decoupler without lateral-force correction."""
    return modified_decoupler(xdd_desired, ydd_desired, yaw, (0.0, 0.0), params)


@dataclass
class ControlCommand:
    """Output of one controller step."""

    rotor_rate: np.ndarray        # U = dw/dt command
    rotor_target: np.ndarray      # signed squares the servo drives toward
    alpha: np.ndarray             # tilt angles applied this step
    ydd_desired: np.ndarray       # PD-loop desired accelerations
    condition: float              # invertibility-condition value
    degraded: bool                # margin violated, previous command held
    attitude: tuple               # (roll, pitch, yaw) used by the loops
    thrust: np.ndarray            # F(alpha) for this step
    torque: np.ndarray            # tau(alpha) for this step


class GaitTrackingController:
    """Discrete controller stepped once per integration step.

    Holds the last valid rotor command so a transient singularity-margin
    violation degrades the run instead of aborting it. One instance per
    run; instances share nothing.
    """

    def __init__(
        self,
        params: VehicleParams,
        config: ControlConfig,
        schedule,
        reference,
        dt: float,
    ):
        self.params = params
        self.config = config
        self.schedule = schedule
        self.reference = reference
        self.dt = dt
        self._kp = np.asarray(config.attitude_gains.kp, dtype=float)
        self._kd = np.asarray(config.attitude_gains.kd, dtype=float)
        self._last_rate = np.zeros(4)
        self._ever_degraded = False

    @property
    def ever_degraded(self) -> bool:
        return self._ever_degraded

    def command(self, t: float, state: RigidState) -> ControlCommand:
        params, cfg = self.params, self.config
        alpha = self.schedule.sample(t)
        thrust = thrust_map(alpha, params)
        torque = torque_map(alpha, params)
        roll, pitch, yaw = euler_from_rotation(state.rotation)

        ref_p = self.reference.position(t)
        ref_v = self.reference.velocity(t)
        ref_a = self.reference.acceleration(t) if cfg.accel_feedforward else np.zeros(3)

        # Horizontal position loop -> desired X/Y accelerations.
        acc_xy = (
            ref_a[:2]
            + cfg.position_kp * (ref_p[:2] - state.position[:2])
            + cfg.position_kd * (ref_v[:2] - state.velocity[:2])
        )
        if cfg.decoupler == "modified":
            lateral = lateral_force(alpha, params, thrust=thrust)
        else:
            lateral = (0.0, 0.0)
        roll_d, pitch_d = modified_decoupler(acc_xy[0], acc_xy[1], yaw, lateral, params)
        limit = cfg.tilt_limit
        roll_d = min(limit, max(-limit, roll_d))
        pitch_d = min(limit, max(-limit, pitch_d))

        # Attitude/altitude PD on y = (roll, pitch, yaw, Z); the altitude
        # channel tracks the reference Z with vertical feedforward.
        y_err = np.array(
            [roll_d - roll, pitch_d - pitch, -yaw, ref_p[2] - state.position[2]]
        )
        yd_err = np.array(
            [-state.body_rates[0], -state.body_rates[1], -state.body_rates[2],
             ref_v[2] - state.velocity[2]]
        )
        ydd_desired = self._kp * y_err + self._kd * yd_err
        ydd_desired[3] += ref_a[2]

        lin = decoupling_matrix(state, alpha, params, thrust=thrust, torque=torque)
        condition = exact_condition(alpha, roll, pitch)
        degraded = False
        try:
            target = feedback_linearize(lin, ydd_desired, condition, cfg.margin)
            target = self._clamp_rotors(target)
            rate = (target - state.rotor_squares) / self.dt
        except SingularityError:
            rate = self._last_rate
            target = state.rotor_squares + rate * self.dt
            degraded = True
            self._ever_degraded = True

        self._last_rate = rate
        return ControlCommand(
            rotor_rate=rate,
            rotor_target=target,
            alpha=alpha,
            ydd_desired=ydd_desired,
            condition=float(condition),
            degraded=degraded,
            attitude=(roll, pitch, yaw),
            thrust=thrust,
            torque=torque,
        )

    def _clamp_rotors(self, w: np.ndarray) -> np.ndarray:
        """Enforce the per-rotor sign convention and magnitude floor."""
        floor = self.config.rotor_floor
        return ROTOR_SIGNS * np.maximum(ROTOR_SIGNS * w, floor)
