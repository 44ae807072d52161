"""Fixed-step integration and closed-loop tracking experiments.

A run plays one gait schedule against one reference trajectory: at every
step the controller samples the gait, converts position error into
attitude targets through the selected decoupler, solves the feedback
linearization, and the rigid body is advanced by one fixed step of the
third-order Bogacki-Shampine rule. Control and integration share the
same fundamental sample time. After an initial settling window the
supremum of the position-error norm is the tracking metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExperimentFailure
from .gaits import BUILTIN_GAIT_NAMES, GaitSchedule, GaitWaveform, builtin_gait
from .lincontrol import ControlConfig, GaitTrackingController
from .rigidbody import (
    ROTOR_SIGNS,
    RigidState,
    VehicleParams,
    derivative_vector,
    orthonormalize,
    rotor_speeds,
)

__all__ = [
    "ReferenceTrajectory",
    "make_reference",
    "REFERENCE_KINDS",
    "ExperimentConfig",
    "TrackingMetrics",
    "RunLog",
    "LOG_COLUMNS",
    "ode3_step",
    "run_experiment",
    "sup_error",
    "zero_waveform",
    "resolve_gait",
]

REFERENCE_KINDS = ("rectilinear", "circular", "hover")

LOG_COLUMNS = (
    ["t"]
    + ["px", "py", "pz"]
    + ["vx", "vy", "vz"]
    + ["roll", "pitch", "yaw"]
    + ["wx", "wy", "wz"]
    + [f"alpha{i}" for i in range(1, 5)]
    + [f"varpi{i}" for i in range(1, 5)]
    + [f"U{i}" for i in range(1, 5)]
    + ["condition"]
    + ["ref_x", "ref_y", "ref_z"]
)


class ReferenceTrajectory:
    """Analytic reference with zero yaw and zero altitude.

    Rectilinear: X = Y = speed * t (Y = 0 selectable); circular: radius 5 m
    at angular rate 0.1 rad/s, starting on the +X axis.
    """

    def __init__(self, kind: str, speed: float = 1.5, radius: float = 5.0,
                 omega: float = 0.1, y_mode: str = "track"):
        if kind not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference {kind!r}; valid: {REFERENCE_KINDS}")
        if y_mode not in ("track", "zero"):
            raise ValueError(f"rectilinear y mode must be 'track' or 'zero', got {y_mode!r}")
        self.kind = kind
        self.speed = speed
        self.radius = radius
        self.omega = omega
        self.y_mode = y_mode

    def position(self, t: float) -> np.ndarray:
        if self.kind == "rectilinear":
            y = self.speed * t if self.y_mode == "track" else 0.0
            return np.array([self.speed * t, y, 0.0])
        if self.kind == "circular":
            return np.array(
                [self.radius * math.cos(self.omega * t), self.radius * math.sin(self.omega * t), 0.0]
            )
        return np.zeros(3)

    def velocity(self, t: float) -> np.ndarray:
        if self.kind == "rectilinear":
            vy = self.speed if self.y_mode == "track" else 0.0
            return np.array([self.speed, vy, 0.0])
        if self.kind == "circular":
            rw = self.radius * self.omega
            return np.array([-rw * math.sin(self.omega * t), rw * math.cos(self.omega * t), 0.0])
        return np.zeros(3)

    def acceleration(self, t: float) -> np.ndarray:
        if self.kind == "circular":
            rww = self.radius * self.omega**2
            return np.array(
                [-rww * math.cos(self.omega * t), -rww * math.sin(self.omega * t), 0.0]
            )
        return np.zeros(3)


def make_reference(kind: str, y_mode: str = "track") -> ReferenceTrajectory:
    return ReferenceTrajectory(kind, y_mode=y_mode)


def zero_waveform() -> GaitWaveform:
    """All-zero gait: the vehicle behaves as a plain quadrotor."""
    return GaitWaveform(
        name="zero", phases=np.arange(4) / 4.0, angles=np.zeros((4, 4)), base_amplitude=0.0
    )


def resolve_gait(name: str) -> GaitWaveform:
    """Waveform for a gait name; 'zero' gives the all-zero gait."""
    if name == "zero":
        return zero_waveform()
    return builtin_gait(name)


@dataclass(frozen=True)
class ExperimentConfig:
    """One closed-loop tracking run."""

    gait: str = "run"
    scale: int = 1
    period: float = 1.0
    decoupler: str = "modified"
    reference: str = "circular"
    duration: float = 60.0
    settle_time: float = 20.0
    initial_rotor_speed: float = 300.0
    step: float = 1e-3
    rectilinear_y: str = "track"

    def __post_init__(self):
        if not (self.duration > self.settle_time > 0.0):
            raise ValueError(
                f"need duration > settle_time > 0, got {self.duration}, {self.settle_time}"
            )
        if not self.step > 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.gait != "zero" and self.gait not in BUILTIN_GAIT_NAMES:
            raise ValueError(f"unknown gait {self.gait!r}")
        if self.reference not in REFERENCE_KINDS:
            raise ValueError(f"unknown reference {self.reference!r}")


@dataclass
class RunLog:
    """Per-step time series of a run; columns listed in ``LOG_COLUMNS``."""

    data: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    @property
    def position(self) -> np.ndarray:
        return self.data[:, 1:4]

    @property
    def reference(self) -> np.ndarray:
        return self.data[:, 26:29]

    def position_error(self) -> np.ndarray:
        return self.position - self.reference

    def to_csv(self, path):
        np.savetxt(path, self.data, fmt="%.17g", delimiter=",",
                   header=",".join(LOG_COLUMNS), comments="")


@dataclass
class TrackingMetrics:
    """Tracking performance of one run."""

    sup_error: float
    per_axis: np.ndarray
    degraded: bool
    log: RunLog | None


def ode3_step(f, state: np.ndarray, t: float, h: float) -> np.ndarray:
    """One fixed step of the third-order Bogacki-Shampine rule.

    ``f(t, y)`` is the derivative function. Local error is O(h^4); this
    is the fixed-step variant of the rule behind the 'ode3' solver name.
    """
    k1 = f(t, state)
    k2 = f(t + 0.5 * h, state + (0.5 * h) * k1)
    k3 = f(t + 0.75 * h, state + (0.75 * h) * k2)
    return state + (h / 9.0) * (2.0 * k1 + 3.0 * k2 + 4.0 * k3)


def sup_error(log: RunLog, settle_time: float) -> float:
    """Supremum of the position-error norm over t >= settle_time."""
    mask = log.t >= settle_time
    if not mask.any():
        raise ValueError(f"no samples at or after settle_time = {settle_time}")
    err = log.position_error()[mask]
    return float(np.sqrt((err**2).sum(axis=1)).max())


class _TabulatedSchedule:
    """Gait schedule backed by a precomputed table over the step grid.

    Sampling at arbitrary times falls back to the exact schedule, so the
    controller sees identical values either way; the table only removes
    the per-step spline evaluation from the hot loop.
    """

    def __init__(self, schedule: GaitSchedule, t_grid: np.ndarray, step: float):
        self._schedule = schedule
        self._table = schedule.sample_array(t_grid)
        self._step = step
        self._n = len(t_grid)

    def sample(self, t: float) -> np.ndarray:
        k = int(round(t / self._step))
        if 0 <= k < self._n and abs(k * self._step - t) < 1e-12:
            return self._table[k]
        return self._schedule.sample(t)


def run_experiment(
    cfg: ExperimentConfig,
    params: VehicleParams | None = None,
    control: ControlConfig | None = None,
    waveform: GaitWaveform | None = None,
    keep_log: bool = True,
) -> TrackingMetrics:
    """Simulate one closed-loop tracking run and compute its metrics.

    Raises :class:`ExperimentFailure` with reason ``"divergence"`` when
    the state blows up or roll/pitch leave (-pi/2, pi/2), and with reason
    ``"singularity"`` when the invertibility margin stays violated for
    more than half a second. A transient margin violation only marks the
    run degraded.
    """
    params = params or VehicleParams()
    control = control or ControlConfig(decoupler=cfg.decoupler)
    if control.decoupler != cfg.decoupler:
        raise ValueError("control.decoupler disagrees with cfg.decoupler")
    wave = waveform if waveform is not None else resolve_gait(cfg.gait)
    schedule = GaitSchedule(wave, period=cfg.period, scale=cfg.scale)
    reference = make_reference(cfg.reference, y_mode=cfg.rectilinear_y)

    h = cfg.step
    n_steps = int(round(cfg.duration / h))
    t_grid = np.arange(n_steps + 1) * h
    controller = GaitTrackingController(
        params, control, _TabulatedSchedule(schedule, t_grid, h), reference, h
    )

    x = np.empty(22)
    x[0:3] = reference.position(0.0)
    x[3:6] = reference.velocity(0.0)
    x[6:15] = np.eye(3).reshape(9)
    x[15:18] = 0.0
    x[18:22] = ROTOR_SIGNS * cfg.initial_rotor_speed**2

    log = np.empty((n_steps + 1, len(LOG_COLUMNS)))
    half_pi = math.pi / 2
    stall_limit = max(1, int(round(0.5 / h)))
    stalled = 0

    for k in range(n_steps + 1):
        t = t_grid[k]
        if not np.isfinite(x).all():
            raise ExperimentFailure(f"state blow-up at t = {t:.3f} s", "divergence", t=t)
        state = RigidState(
            position=x[0:3], velocity=x[3:6], rotation=x[6:15].reshape(3, 3),
            body_rates=x[15:18], rotor_squares=x[18:22],
        )
        cmd = controller.command(t, state)
        roll, pitch, yaw = cmd.attitude
        if abs(roll) >= half_pi or abs(pitch) >= half_pi:
            raise ExperimentFailure(
                f"attitude left the valid Euler range at t = {t:.3f} s", "divergence", t=t
            )
        stalled = stalled + 1 if cmd.degraded else 0
        if stalled > stall_limit:
            raise ExperimentFailure(
                f"invertibility margin violated for {stalled * h:.2f} s at t = {t:.3f} s",
                "singularity",
                t=t,
            )

        row = log[k]
        row[0] = t
        row[1:7] = x[0:6]
        row[7] = roll
        row[8] = pitch
        row[9] = yaw
        row[10:13] = x[15:18]
        row[13:17] = cmd.alpha
        row[17:21] = rotor_speeds(x[18:22])
        row[21:25] = cmd.rotor_rate
        row[25] = cmd.condition
        row[26:29] = reference.position(t)

        if k == n_steps:
            break

        alpha, u = cmd.alpha, cmd.rotor_rate
        thrust, torque = cmd.thrust, cmd.torque

        def f(_t, y):
            return derivative_vector(y, alpha, u, params, thrust=thrust, torque=torque)

        x = ode3_step(f, x, t, h)
        x[6:15] = orthonormalize(x[6:15].reshape(3, 3)).reshape(9)
        x[18:22] = ROTOR_SIGNS * np.maximum(ROTOR_SIGNS * x[18:22], control.rotor_floor)

    run_log = RunLog(log)
    err = np.abs(run_log.position_error()[run_log.t >= cfg.settle_time])
    metrics = TrackingMetrics(
        sup_error=sup_error(run_log, cfg.settle_time),
        per_axis=err.max(axis=0),
        degraded=controller.ever_degraded,
        log=run_log if keep_log else None,
    )
    return metrics
