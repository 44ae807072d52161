"""Rigid-body dynamics of an eight-input tilt-rotor quadrotor.

Four rotors sit at the ends of the arms and each one tilts about its arm
axis by an angle ``alpha_i``, redirecting its thrust sideways. Rotors 1
and 3 spin with negative rate, rotors 2 and 4 with positive rate. Thrust
and drag are quadratic in rotor speed, so the dynamics are written in the
signed-square variables ``w_i = varpi_i * |varpi_i|``, in which both the
force and torque allocation maps are linear:

    p_ddot     = [0, 0, -g] + (1/m) * R @ F(alpha) @ w
    omega_dot  = I_B^-1 @ tau(alpha) @ w
    R_dot      = R @ hat(omega)
    w_dot      = u                       (rotor inputs)

The rotation matrix is integrated directly and re-orthonormalized after
every step; Euler angles are extracted from it for control and logging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

__all__ = [
    "ROTOR_SIGNS",
    "STATE_DIM",
    "VehicleParams",
    "EulerAttitude",
    "RigidState",
    "rotation_matrix",
    "euler_from_rotation",
    "hat",
    "thrust_map",
    "torque_map",
    "state_derivative",
    "derivative_vector",
    "orthonormalize",
    "rotor_speeds",
    "signed_squares",
    "hover_signed_squares",
]

# Spin direction of each rotor: varpi_{1,3} < 0, varpi_{2,4} > 0.
ROTOR_SIGNS = np.array([-1.0, 1.0, -1.0, 1.0])

# State vector layout: p(3), v(3), R(9, row-major), omega_B(3), w(4).
STATE_DIM = 22


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the airframe (SI units, angles in radians).

    Defaults are the reference vehicle: m = 0.429 kg, L = 0.1785 m,
    K_f = 8.048e-6 N s^2/rad^2, K_m = 2.423e-7 N m s^2/rad^2,
    I_B = diag(2.24e-3, 2.99e-3, 4.80e-3) kg m^2, g = 9.8 N/kg.

    ``coriolis`` adds the -I^-1 (omega x I omega) term to the body-rate
    dynamics; it is off by default because the baseline model omits it.
    """

    mass: float = 0.429
    arm_length: float = 0.1785
    k_thrust: float = 8.048e-6
    k_drag: float = 2.423e-7
    inertia_diag: tuple[float, float, float] = (2.24e-3, 2.99e-3, 4.80e-3)
    gravity: float = 9.8
    coriolis: bool = False

    def __post_init__(self):
        scalars = {
            "mass": self.mass,
            "arm_length": self.arm_length,
            "k_thrust": self.k_thrust,
            "k_drag": self.k_drag,
            "gravity": self.gravity,
        }
        for name, value in scalars.items():
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"{name} must be strictly positive, got {value}")
        if len(self.inertia_diag) != 3 or any(
            not (i > 0.0 and math.isfinite(i)) for i in self.inertia_diag
        ):
            raise ValueError(f"inertia_diag must be 3 positive values, got {self.inertia_diag}")

    @property
    def inertia(self) -> np.ndarray:
        """Body inertia matrix (diagonal)."""
        return np.diag(self.inertia_diag)

    @cached_property
    def inertia_inv_diag(self) -> np.ndarray:
        """Elementwise inverse of the inertia diagonal."""
        return 1.0 / np.asarray(self.inertia_diag)


class EulerAttitude(NamedTuple):
    """Z-Y-X Euler angles in radians; valid range |roll|, |pitch| < pi/2."""

    roll: float
    pitch: float
    yaw: float


def rotation_matrix(att: EulerAttitude) -> np.ndarray:
    """Body-to-world rotation matrix from Z-Y-X Euler angles."""
    roll, pitch, yaw = att
    sp, cp = math.sin(roll), math.cos(roll)
    st, ct = math.sin(pitch), math.cos(pitch)
    sy, cy = math.sin(yaw), math.cos(yaw)
    return np.array(
        [
            [ct * cy, sp * st * cy - cp * sy, cp * st * cy + sp * sy],
            [ct * sy, sp * st * sy + cp * cy, cp * st * sy - sp * cy],
            [-st, sp * ct, cp * ct],
        ]
    )


def euler_from_rotation(R: np.ndarray) -> EulerAttitude:
    """Extract Z-Y-X Euler angles from a rotation matrix.

    Inverse of :func:`rotation_matrix` for |roll|, |pitch| < pi/2.
    """
    pitch = -math.asin(min(1.0, max(-1.0, R[2, 0])))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return EulerAttitude(roll, pitch, yaw)


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def thrust_map(alpha: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Force allocation matrix F(alpha), body frame, 3x4.

    Column i is K_f times the unit thrust direction of rotor i; the signed
    squares w multiply it from the right to give the total body force.
    """
    s = np.sin(alpha)
    c = np.cos(alpha)
    kf = params.k_thrust
    F = np.zeros((3, 4))
    F[0, 1] = kf * s[1]
    F[0, 3] = -kf * s[3]
    F[1, 0] = kf * s[0]
    F[1, 2] = -kf * s[2]
    F[2] = (kf * ROTOR_SIGNS) * c
    return F


def torque_map(alpha: np.ndarray, params: VehicleParams) -> np.ndarray:
    """Torque allocation matrix tau(alpha), body frame, 3x4.

    Combines the thrust moment arm (L*K_f terms) with the propeller drag
    torque (K_m terms); the signed squares w multiply it from the right.
    """
    s = np.sin(alpha)
    c = np.cos(alpha)
    lk = params.arm_length * params.k_thrust
    km = params.k_drag
    tau = np.zeros((3, 4))
    tau[0, 1] = lk * c[1] - km * s[1]
    tau[0, 3] = -lk * c[3] + km * s[3]
    tau[1, 0] = lk * c[0] + km * s[0]
    tau[1, 2] = -lk * c[2] - km * s[2]
    tau[2] = lk * (-ROTOR_SIGNS) * s - km * c
    return tau


def rotor_speeds(w: np.ndarray) -> np.ndarray:
    """Rotor angular rates varpi_i from signed squares: sign(w)*sqrt(|w|)."""
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.sqrt(np.abs(w))


def signed_squares(speeds: np.ndarray) -> np.ndarray:
    """Signed-square variables w_i = varpi_i * |varpi_i|."""
    speeds = np.asarray(speeds, dtype=float)
    return speeds * np.abs(speeds)


def hover_signed_squares(params: VehicleParams) -> np.ndarray:
    """Signed squares that balance gravity at level attitude, alpha = 0."""
    w0 = params.mass * params.gravity / (4.0 * params.k_thrust)
    return ROTOR_SIGNS * w0


@dataclass
class RigidState:
    """Full vehicle state.

    The rotation matrix is the primary attitude representation; Euler
    angles are derived views. ``rotor_squares`` holds the signed squares
    w_i, negative on rotors 1 and 3.
    """

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    body_rates: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotor_squares: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.body_rates = np.asarray(self.body_rates, dtype=float)
        self.rotor_squares = np.asarray(self.rotor_squares, dtype=float)

    @property
    def attitude(self) -> EulerAttitude:
        return euler_from_rotation(self.rotation)

    @property
    def rotor_rates(self) -> np.ndarray:
        return rotor_speeds(self.rotor_squares)

    def rotation_error(self) -> float:
        """Max-norm deviation of R^T R from the identity."""
        R = self.rotation
        return float(np.abs(R.T @ R - np.eye(3)).max())

    def as_vector(self) -> np.ndarray:
        x = np.empty(STATE_DIM)
        x[0:3] = self.position
        x[3:6] = self.velocity
        x[6:15] = self.rotation.reshape(9)
        x[15:18] = self.body_rates
        x[18:22] = self.rotor_squares
        return x

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "RigidState":
        x = np.asarray(x, dtype=float)
        return cls(
            position=x[0:3].copy(),
            velocity=x[3:6].copy(),
            rotation=x[6:15].reshape(3, 3).copy(),
            body_rates=x[15:18].copy(),
            rotor_squares=x[18:22].copy(),
        )


def derivative_vector(
    x: np.ndarray,
    alpha: np.ndarray,
    u: np.ndarray,
    params: VehicleParams,
    thrust: np.ndarray | None = None,
    torque: np.ndarray | None = None,
) -> np.ndarray:
    """Time derivative of the flat state vector; hot path of the simulator.

    ``alpha`` and ``u`` are held constant over the evaluation (zero-order
    hold); no validity checks are performed here. Precomputed allocation
    maps for the current tilt angles may be passed to avoid rebuilding
    them at every integrator stage.
    """
    v = x[3:6]
    R = x[6:15].reshape(3, 3)
    omega = x[15:18]
    w = x[18:22]

    if thrust is None:
        thrust = thrust_map(alpha, params)
    if torque is None:
        torque = torque_map(alpha, params)

    f_body = thrust @ w
    acc = R @ f_body / params.mass
    acc[2] -= params.gravity

    omega_dot = params.inertia_inv_diag * (torque @ w)
    if params.coriolis:
        inertia = np.asarray(params.inertia_diag)
        omega_dot -= params.inertia_inv_diag * np.cross(omega, inertia * omega)

    dx = np.empty(STATE_DIM)
    dx[0:3] = v
    dx[3:6] = acc
    # R @ hat(omega): column j is a cross product of the columns of R
    p, q, r = omega
    r_dot = dx[6:15].reshape(3, 3)
    r_dot[:, 0] = R[:, 1] * r - R[:, 2] * q
    r_dot[:, 1] = R[:, 2] * p - R[:, 0] * r
    r_dot[:, 2] = R[:, 0] * q - R[:, 1] * p
    dx[15:18] = omega_dot
    dx[18:22] = u
    return dx


def state_derivative(
    state: RigidState, alpha: np.ndarray, u: np.ndarray, params: VehicleParams
) -> np.ndarray:
    """State derivative as a flat vector (layout of ``RigidState.as_vector``).

    Raises :class:`BlowUpError` if any input is non-finite.
    """
    from .errors import BlowUpError

    x = state.as_vector()
    alpha = np.asarray(alpha, dtype=float)
    u = np.asarray(u, dtype=float)
    if not (np.isfinite(x).all() and np.isfinite(alpha).all() and np.isfinite(u).all()):
        raise BlowUpError("non-finite state, tilt angles, or rotor input")
    return derivative_vector(x, alpha, u, params)


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Re-orthonormalize a near-rotation matrix by modified Gram-Schmidt.

    Operates on columns; preserves orientation for matrices close to SO(3).
    """
    q = R.copy()
    c0 = q[:, 0]
    c0 /= math.sqrt(c0 @ c0)
    c1 = q[:, 1]
    c1 -= (c0 @ c1) * c0
    c1 /= math.sqrt(c1 @ c1)
    c2 = q[:, 2]
    c2 -= (c0 @ c2) * c0
    c2 -= (c1 @ c2) * c1
    c2 /= math.sqrt(c2 @ c2)
    return q
