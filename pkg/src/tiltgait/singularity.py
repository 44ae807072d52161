"""Invertibility analysis of the feedback-linearization decoupling matrix.

The controlled outputs are roll, pitch, yaw, and altitude. Their
decoupling matrix stacks the body-rate rows I_B^-1 tau(alpha) on top of
the altitude row (1/m) e3^T R F(alpha). Its determinant, normalized so
the value at alpha = 0, level attitude is 4.000, expands into 31
sine/cosine monomials with three attitude factors:

    value = B_st(alpha) * sin(pitch)
          + B_spct(alpha) * sin(roll) cos(pitch)
          + B_cpct(alpha) * cos(roll) cos(pitch)

The coefficient tables below carry the published 4-significant-digit
values; they are roundings of 4, 1/mu - 2 mu, 1 - mu^2, 2, mu, and
(1/mu - mu)/2 with mu = K_m / (L K_f) ~= 0.16867, so the tabulated
condition tracks the true normalized determinant to about 5e-4 per term.
Feedback linearization is valid wherever |value| stays above a margin;
the zero set of ``value`` in the roll-pitch plane is the singular locus
of a tilt-angle snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError
from .gaits import GaitWaveform
from .rigidbody import VehicleParams, RigidState, thrust_map, torque_map

__all__ = [
    "LinearizationData",
    "SingularLocus",
    "decoupling_matrix",
    "approx_condition",
    "exact_condition",
    "condition_groups",
    "locus_sweep",
    "min_scale",
    "DEFAULT_MARGIN",
    "DEFAULT_GRID_LIMIT",
    "DEFAULT_GRID_RESOLUTION",
]

# Operational margin on |condition| below which the matrix is treated as
# singular (~2.5% of the alpha = 0 value 4.000), and the default roll-pitch
# sweep window.
DEFAULT_MARGIN = 0.1
DEFAULT_GRID_LIMIT = 1.2
DEFAULT_GRID_RESOLUTION = 201

# Each term: (coefficient, sine mask) where the mask selects which of the
# four tilt angles contribute sin(alpha_i) rather than cos(alpha_i).
_TERMS_SIN_PITCH = [
    (+1.000, (0, 0, 0, 1)),
    (-1.000, (0, 1, 0, 0)),
    (-2.880, (0, 0, 1, 1)),
    (+2.880, (0, 1, 1, 0)),
    (-2.880, (1, 0, 0, 1)),
    (+2.880, (1, 1, 0, 0)),
    (-1.000, (1, 0, 1, 1)),
    (+1.000, (1, 1, 1, 0)),
]
_TERMS_SINROLL_COSPITCH = [
    (+1.000, (0, 0, 1, 0)),
    (-1.000, (1, 0, 0, 0)),
    (+2.880, (0, 0, 1, 1)),
    (+2.880, (0, 1, 1, 0)),
    (-2.880, (1, 0, 0, 1)),
    (-2.880, (1, 1, 0, 0)),
    (-1.000, (0, 1, 1, 1)),
    (+1.000, (1, 1, 0, 1)),
]
_TERMS_COSROLL_COSPITCH = [
    (+4.000, (0, 0, 0, 0)),
    (+5.592, (0, 0, 0, 1)),
    (-5.592, (0, 0, 1, 0)),
    (+5.592, (0, 1, 0, 0)),
    (-5.592, (1, 0, 0, 0)),
    (+0.9716, (0, 0, 1, 1)),
    (-2.000, (0, 1, 0, 1)),
    (+0.9716, (0, 1, 1, 0)),
    (+0.9716, (1, 0, 0, 1)),
    (-2.000, (1, 0, 1, 0)),
    (+0.9716, (1, 1, 0, 0)),
    (-0.1687, (0, 1, 1, 1)),
    (+0.1687, (1, 0, 1, 1)),
    (-0.1687, (1, 1, 0, 1)),
    (+0.1687, (1, 1, 1, 0)),
]


def _pack(terms):
    coeffs = np.array([c for c, _ in terms])
    masks = np.array([m for _, m in terms], dtype=bool)
    return coeffs, masks


_GROUPS = [_pack(t) for t in (_TERMS_SIN_PITCH, _TERMS_SINROLL_COSPITCH, _TERMS_COSROLL_COSPITCH)]


def _group_value(s: np.ndarray, c: np.ndarray, coeffs: np.ndarray, masks: np.ndarray):
    factors = np.where(masks, s[..., None, :], c[..., None, :])
    return factors.prod(axis=-1) @ coeffs


def condition_groups(alpha: np.ndarray):
    """Attitude-factor coefficients (B_st, B_spct, B_cpct) of the condition.

    ``alpha`` may have any leading shape ending in 4; the three returned
    arrays share that leading shape. Since the coefficients depend only
    on the tilt angles, a gait's full time history can be reduced once
    and the condition then evaluated per attitude in constant time.
    """
    alpha = np.asarray(alpha, dtype=float)
    s, c = np.sin(alpha), np.cos(alpha)
    return tuple(_group_value(s, c, coeffs, masks) for coeffs, masks in _GROUPS)


def exact_condition(alpha: np.ndarray, roll, pitch):
    """Invertibility-condition value at tilt angles and roll/pitch attitude.

    Zero marks a singular decoupling matrix. Broadcasts over any common
    shape of ``roll``/``pitch`` against the leading shape of ``alpha``.
    """
    b_st, b_spct, b_cpct = condition_groups(alpha)
    roll = np.asarray(roll, dtype=float)
    pitch = np.asarray(pitch, dtype=float)
    ct = np.cos(pitch)
    value = b_st * np.sin(pitch) + (b_spct * np.sin(roll) + b_cpct * np.cos(roll)) * ct
    return value if value.ndim else float(value)


def approx_condition(alpha: np.ndarray):
    """Invertibility condition linearized at level attitude (roll = pitch = 0).

    Transcribed from its own published grouping; agrees with
    ``exact_condition(alpha, 0, 0)`` up to coefficient rounding.
    """
    alpha = np.asarray(alpha, dtype=float)
    s, c = np.sin(alpha), np.cos(alpha)
    s1, s2, s3, s4 = (s[..., i] for i in range(4))
    c1, c2, c3, c4 = (c[..., i] for i in range(4))
    value = (
        4.000 * c1 * c2 * c3 * c4
        + 5.592 * (c1 * c2 * c3 * s4 - c1 * c2 * s3 * c4 + c1 * s2 * c3 * c4 - s1 * c2 * c3 * c4)
        + 0.9716 * (c1 * c2 * s3 * s4 + c1 * s2 * s3 * c4 + s1 * c2 * c3 * s4 + s1 * s2 * c3 * c4)
        + 2.000 * (-c1 * s2 * c3 * s4 - s1 * c2 * s3 * c4)
        + 0.1687 * (-c1 * s2 * s3 * s4 + s1 * c2 * s3 * s4 - s1 * s2 * c3 * s4 + s1 * s2 * s3 * c4)
    )
    return value if value.ndim else float(value)


@dataclass
class LinearizationData:
    """Decoupling matrix and drift vector of the linearized output dynamics.

    Rows 1-3 of ``delta`` map the rotor inputs to roll/pitch/yaw
    accelerations (I_B^-1 tau(alpha), tilt-angle dependent only); row 4
    maps them to vertical acceleration through the current attitude. The
    drift is zero on the attitude rows and carries the body-rate coupling
    term minus gravity on the altitude row.
    """

    delta: np.ndarray
    drift: np.ndarray


def decoupling_matrix(
    state: RigidState,
    alpha: np.ndarray,
    params: VehicleParams,
    thrust: np.ndarray | None = None,
    torque: np.ndarray | None = None,
) -> LinearizationData:
    """Assemble the 4x4 decoupling matrix and drift at a state.

    Raises :class:`SingularityError` when any rotor rate is zero, which
    makes the linearization unusable regardless of the tilt angles.
    Precomputed allocation maps for ``alpha`` may be passed.
    """
    w = np.asarray(state.rotor_squares, dtype=float)
    if np.any(w == 0.0):
        raise SingularityError("zero rotor angular velocity, decoupling matrix singular")
    alpha = np.asarray(alpha, dtype=float)
    R = state.rotation
    F = thrust_map(alpha, params) if thrust is None else thrust
    tau = torque_map(alpha, params) if torque is None else torque

    delta = np.empty((4, 4))
    delta[0:3] = params.inertia_inv_diag[:, None] * tau
    delta[3] = (R[2] @ F) / params.mass

    fx, fy, fz = F @ w
    p, q, r = state.body_rates
    coupling = np.array([q * fz - r * fy, r * fx - p * fz, p * fy - q * fx])
    drift = np.zeros(4)
    drift[3] = (R[2] @ coupling) / params.mass - params.gravity
    return LinearizationData(delta=delta, drift=drift)


@dataclass
class SingularLocus:
    """Zero crossings of the exact condition in the roll-pitch plane."""

    alpha: np.ndarray
    roll_range: tuple[float, float]
    pitch_range: tuple[float, float]
    resolution: int
    points: np.ndarray  # (N, 2) columns roll, pitch

    def min_distance(self) -> float:
        """Distance from level attitude to the nearest locus point; inf if empty."""
        if self.points.size == 0:
            return math.inf
        return float(np.sqrt((self.points**2).sum(axis=1)).min())


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    flo = f(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if abs(fmid) < tol:
            return mid
        if (flo > 0) != (fmid > 0):
            hi = mid
        else:
            lo, flo = mid, fmid
    return 0.5 * (lo + hi)


def locus_sweep(
    alpha: np.ndarray,
    roll_range: tuple[float, float] = (-DEFAULT_GRID_LIMIT, DEFAULT_GRID_LIMIT),
    pitch_range: tuple[float, float] = (-DEFAULT_GRID_LIMIT, DEFAULT_GRID_LIMIT),
    resolution: int = DEFAULT_GRID_RESOLUTION,
    tol: float = 1e-9,
) -> SingularLocus:
    """Singular locus of a tilt-angle snapshot.

    Evaluates the exact condition on the grid, finds sign changes along
    grid edges, and refines each crossing by bisection until the
    condition magnitude drops below ``tol``.
    """
    if resolution < 2:
        raise ValueError(f"grid resolution must be at least 2, got {resolution}")
    alpha = np.asarray(alpha, dtype=float)
    b_st, b_spct, b_cpct = condition_groups(alpha)

    def value(roll, pitch):
        ct = np.cos(pitch)
        return b_st * np.sin(pitch) + (b_spct * np.sin(roll) + b_cpct * np.cos(roll)) * ct

    rolls = np.linspace(roll_range[0], roll_range[1], resolution)
    pitches = np.linspace(pitch_range[0], pitch_range[1], resolution)
    grid = value(rolls[:, None], pitches[None, :])

    points = []
    sign = np.sign(grid)
    zero_i, zero_j = np.nonzero(grid == 0.0)
    points.extend((rolls[i], pitches[j]) for i, j in zip(zero_i, zero_j))

    cross_i, cross_j = np.nonzero(sign[:-1, :] * sign[1:, :] < 0)
    for i, j in zip(cross_i, cross_j):
        pitch = pitches[j]
        root = _bisect(lambda r: value(r, pitch), rolls[i], rolls[i + 1], tol)
        points.append((root, pitch))

    cross_i, cross_j = np.nonzero(sign[:, :-1] * sign[:, 1:] < 0)
    for i, j in zip(cross_i, cross_j):
        roll = rolls[i]
        root = _bisect(lambda p: value(roll, p), pitches[j], pitches[j + 1], tol)
        points.append((roll, root))

    pts = np.array(points) if points else np.empty((0, 2))
    return SingularLocus(
        alpha=alpha,
        roll_range=roll_range,
        pitch_range=pitch_range,
        resolution=resolution,
        points=pts,
    )


def min_scale(
    waveform: GaitWaveform,
    attitude_box: tuple[float, float] = (0.3, 0.3),
    time_samples: int = 64,
    margin: float = DEFAULT_MARGIN,
    grid_points: int = 21,
    max_scale: int = 64,
) -> int:
    """Smallest integer scale making the gait invertible over an attitude box.

    Checks |condition| > margin for every sampled gait phase and every
    roll/pitch in the box. Termination is guaranteed because the scaled
    angles approach zero, where the condition tends to 4 cos(roll)
    cos(pitch) > 0; ``max_scale`` is only a safety stop.
    """
    roll_max, pitch_max = attitude_box
    if not (0.0 < roll_max < math.pi / 2 and 0.0 < pitch_max < math.pi / 2):
        raise ValueError(f"attitude box must lie within (0, pi/2)^2, got {attitude_box}")
    if time_samples < 8:
        raise ValueError(f"need at least 8 time samples, got {time_samples}")

    phases = np.arange(time_samples) / time_samples
    alphas = waveform.evaluate(phases)
    rolls = np.linspace(-roll_max, roll_max, grid_points)
    pitches = np.linspace(-pitch_max, pitch_max, grid_points)
    sin_p, cos_p = np.sin(pitches), np.cos(pitches)
    sin_r, cos_r = np.sin(rolls), np.cos(rolls)

    for n in range(1, max_scale + 1):
        b_st, b_spct, b_cpct = condition_groups(alphas / n)
        value = (
            b_st[:, None, None] * sin_p[None, None, :]
            + (
                b_spct[:, None, None] * sin_r[None, :, None]
                + b_cpct[:, None, None] * cos_r[None, :, None]
            )
            * cos_p[None, None, :]
        )
        if np.abs(value).min() > margin:
            return n
    raise RuntimeError(f"no invertible scale found up to n = {max_scale}")
