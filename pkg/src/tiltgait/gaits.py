"""Cat-inspired periodic schedules for the four tilting angles.

A gait is a periodic waveform alpha(phase) for the four rotor tilt angles,
phase in [0, 1). The built-in gaits are constructed from quadruped
footfall timing: rotor i is assigned a footfall phase offset and a duty
factor; its tilt angle ramps from +A to -A over the stance fraction of
the period and back from -A to +A over the swing fraction. The resulting
piecewise-linear trace is sampled at 32 knots and smoothed by periodic
cubic interpolation, so the scheduled angles are C1 in time.

Rotor-to-limb mapping (fixed, clockwise from the body X axis):
rotor 1 = left fore, rotor 2 = right fore, rotor 3 = right hind,
rotor 4 = left hind.

A schedule attaches a period T and an integer scale n to a waveform;
sampled angles are the waveform angles divided by n, which is the gait
modification used to restore invertibility of the decoupling matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import GaitFormatError, GaitValidationError

__all__ = [
    "GaitWaveform",
    "GaitSchedule",
    "FootfallParams",
    "BUILTIN_GAIT_PARAMS",
    "BUILTIN_GAIT_NAMES",
    "builtin_gait",
    "make_footfall_waveform",
    "footfall_trace",
    "sample",
    "scale",
    "parse_gait_file",
    "serialize_gait",
    "phase_offsets",
    "is_evenly_spaced",
    "max_amplitude_phase",
]

MIN_KNOTS = 4


@dataclass
class GaitWaveform:
    """Periodic per-rotor tilt-angle function defined by knots.

    ``phases`` is strictly increasing within [0, 1); ``angles`` has one
    row of four tilt angles per knot. Instances are immutable by
    convention once constructed.
    """

    name: str
    phases: np.ndarray = field(repr=False)
    angles: np.ndarray = field(repr=False)
    interpolation: str = "cubic"
    base_amplitude: float = 1.0

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        if self.interpolation not in ("cubic", "linear"):
            raise GaitValidationError(
                f"interpolation must be 'cubic' or 'linear', got {self.interpolation!r}"
            )
        if self.phases.ndim != 1 or self.angles.shape != (self.phases.size, 4):
            raise GaitValidationError(
                "angles must be one row of 4 values per knot phase"
            )
        if self.phases.size < MIN_KNOTS:
            raise GaitValidationError(
                f"at least {MIN_KNOTS} knots required, got {self.phases.size}"
            )
        if not np.isfinite(self.angles).all() or not np.isfinite(self.phases).all():
            raise GaitValidationError("knot phases and angles must be finite")
        if self.phases[0] < 0.0 or self.phases[-1] >= 1.0:
            raise GaitValidationError("knot phases must lie within [0, 1)")
        if not (np.diff(self.phases) > 0.0).all():
            raise GaitValidationError("phases strictly increasing")

    @cached_property
    def _interpolant(self):
        # One wrap knot closes the period for both interpolation kinds.
        x = np.append(self.phases, self.phases[0] + 1.0)
        y = np.vstack([self.angles, self.angles[:1]])
        if self.interpolation == "cubic":
            return CubicSpline(x, y, bc_type="periodic")
        return x, y

    def evaluate(self, phase) -> np.ndarray:
        """Tilt angles at the given phase(s); periodic with period 1."""
        phase = np.asarray(phase, dtype=float)
        x0 = self.phases[0]
        u = x0 + np.mod(phase - x0, 1.0)
        if self.interpolation == "cubic":
            return self._interpolant(u)
        x, y = self._interpolant
        if u.ndim == 0:
            return np.array([np.interp(u, x, y[:, j]) for j in range(4)])
        return np.stack([np.interp(u, x, y[:, j]) for j in range(4)], axis=-1)


@dataclass(frozen=True)
class GaitSchedule:
    """A waveform played back with period T, angles divided by scale n."""

    waveform: GaitWaveform
    period: float = 1.0
    scale: int = 1

    def __post_init__(self):
        if not self.period > 0.0:
            raise GaitValidationError(f"period must be positive, got {self.period}")
        if not (isinstance(self.scale, (int, np.integer)) and self.scale >= 1):
            raise GaitValidationError(f"scale must be an integer >= 1, got {self.scale}")

    def sample(self, t: float) -> np.ndarray:
        """Tilt angles at time t (seconds)."""
        phase = math.fmod(t, self.period) / self.period
        return self.waveform.evaluate(phase) / self.scale

    def sample_array(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized sampling; returns an array of shape (len(ts), 4)."""
        ts = np.asarray(ts, dtype=float)
        phases = np.mod(ts, self.period) / self.period
        return self.waveform.evaluate(phases) / self.scale


def sample(schedule: GaitSchedule, t: float) -> np.ndarray:
    """Tilt angles of a schedule at time t."""
    return schedule.sample(t)


def scale(schedule: GaitSchedule, n: int) -> GaitSchedule:
    """Schedule with scale n; the waveform object is shared, not copied."""
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise GaitValidationError(f"scale must be an integer >= 1, got {n}")
    return replace(schedule, scale=int(n))


@dataclass(frozen=True)
class FootfallParams:
    """Timing parameters of one built-in gait.

    ``offsets`` are per-rotor footfall phases, ``duty`` the stance
    fraction of the period, ``amplitude`` the peak tilt in radians.
    """

    offsets: tuple[float, float, float, float]
    duty: float
    amplitude: float = 1.0


# Walk and run are symmetrical (footfall offsets evenly spaced mod 1), the
# two gallops asymmetrical; transverse vs rotary differ by hind-pair order.
# Amplitudes keep the unscaled run gait clear of the singular region while
# the other three gaits violate it and need scaling.
BUILTIN_GAIT_PARAMS: dict[str, FootfallParams] = {
    "walk": FootfallParams(offsets=(0.0, 0.25, 0.5, 0.75), duty=0.75, amplitude=1.0),
    "run": FootfallParams(offsets=(0.0, 0.5, 0.5, 0.0), duty=0.35, amplitude=1.0),
    "transverse_gallop": FootfallParams(offsets=(0.0, 0.1, 0.5, 0.6), duty=0.3, amplitude=1.1),
    "rotary_gallop": FootfallParams(offsets=(0.0, 0.1, 0.6, 0.5), duty=0.3, amplitude=1.0),
}

BUILTIN_GAIT_NAMES = tuple(BUILTIN_GAIT_PARAMS)


def footfall_trace(phase, offset: float, duty: float, amplitude: float):
    """Piecewise-linear tilt trace of one rotor.

    Ramps from +A at footfall to -A at the end of stance, then back to +A
    over the swing; continuous and periodic.
    """
    v = np.mod(np.asarray(phase, dtype=float) - offset, 1.0)
    stance = v < duty
    down = amplitude * (1.0 - 2.0 * v / duty)
    up = amplitude * (-1.0 + 2.0 * (v - duty) / (1.0 - duty))
    return np.where(stance, down, up)


def make_footfall_waveform(
    name: str,
    params: FootfallParams,
    n_knots: int = 32,
    interpolation: str = "cubic",
) -> GaitWaveform:
    """Build a waveform from footfall timing parameters."""
    phases = np.arange(n_knots) / n_knots
    angles = np.stack(
        [
            footfall_trace(phases, params.offsets[i], params.duty, params.amplitude)
            for i in range(4)
        ],
        axis=1,
    )
    return GaitWaveform(
        name=name,
        phases=phases,
        angles=angles,
        interpolation=interpolation,
        base_amplitude=params.amplitude,
    )


def builtin_gait(name: str) -> GaitWaveform:
    """Canonical shipped waveform for one of the four built-in gaits."""
    if name not in BUILTIN_GAIT_PARAMS:
        raise GaitValidationError(
            f"unknown gait {name!r}; valid names: {', '.join(BUILTIN_GAIT_NAMES)}"
        )
    return make_footfall_waveform(name, BUILTIN_GAIT_PARAMS[name])


def serialize_gait(waveform: GaitWaveform) -> str:
    """Gait file text; full double precision so parsing round-trips exactly."""
    lines = [f"gait {waveform.name} amplitude {waveform.base_amplitude:.17g}"]
    for phase, row in zip(waveform.phases, waveform.angles):
        values = " ".join(f"{a:.17g}" for a in row)
        lines.append(f"knot {phase:.17g} {values}")
    return "\n".join(lines) + "\n"


def parse_gait_file(text: str, interpolation: str = "cubic") -> GaitWaveform:
    """Parse the gait file format.

    Format: one header line ``gait <name> amplitude <A>``, then one
    ``knot <phase> <a1> <a2> <a3> <a4>`` line per knot (radians, decimal).
    Comments start with ``#``. Syntax errors raise
    :class:`GaitFormatError` with the line number; structural problems
    raise :class:`GaitValidationError` naming the violated invariant.
    """
    name = None
    amplitude = None
    phases: list[float] = []
    rows: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "gait":
            if name is not None:
                raise GaitFormatError("duplicate gait header", line=lineno)
            if len(fields) != 4 or fields[2] != "amplitude":
                raise GaitFormatError(
                    "header must be 'gait <name> amplitude <A>'", line=lineno
                )
            name = fields[1]
            try:
                amplitude = float(fields[3])
            except ValueError:
                raise GaitFormatError(f"bad amplitude {fields[3]!r}", line=lineno) from None
        elif fields[0] == "knot":
            if name is None:
                raise GaitFormatError("knot before gait header", line=lineno)
            if len(fields) != 6:
                raise GaitFormatError(
                    "knot line must be 'knot <phase> <a1> <a2> <a3> <a4>'", line=lineno
                )
            try:
                values = [float(f) for f in fields[1:]]
            except ValueError:
                raise GaitFormatError(f"bad number in {line!r}", line=lineno) from None
            phases.append(values[0])
            rows.append(values[1:])
        else:
            raise GaitFormatError(f"unknown directive {fields[0]!r}", line=lineno)
    if name is None:
        raise GaitFormatError("no gait header found")
    return GaitWaveform(
        name=name,
        phases=np.array(phases),
        angles=np.array(rows),
        interpolation=interpolation,
        base_amplitude=amplitude,
    )


def phase_offsets(waveform: GaitWaveform, samples: int = 4096) -> np.ndarray:
    """Per-rotor phase offsets relative to rotor 1.

    Estimated from the phase of the fundamental Fourier component of each
    rotor trace, which is exact when the four traces are shifted copies
    of a common shape. Returns values in [0, 1).
    """
    grid = np.arange(samples) / samples
    traces = waveform.evaluate(grid)
    fundamental = np.fft.rfft(traces, axis=0)[1, :]
    if np.any(np.abs(fundamental) < 1e-9 * samples):
        raise GaitValidationError("rotor trace has no fundamental harmonic")
    rel = np.angle(fundamental[0]) - np.angle(fundamental)
    return np.mod(rel / (2.0 * math.pi), 1.0)


def is_evenly_spaced(offsets, tol: float = 0.02) -> bool:
    """Whether the distinct phase offsets form an arithmetic progression mod 1."""
    values = np.sort(np.mod(np.asarray(offsets, dtype=float), 1.0))
    distinct = [values[0]]
    for v in values[1:]:
        if v - distinct[-1] > tol:
            distinct.append(v)
    # wrap-around duplicate of the first cluster
    if len(distinct) > 1 and (1.0 - distinct[-1] + distinct[0]) <= tol:
        distinct.pop()
    if len(distinct) <= 2:
        return True
    gaps = np.diff(distinct + [distinct[0] + 1.0])
    return bool(np.ptp(gaps) <= tol)


def max_amplitude_phase(waveform: GaitWaveform, samples: int = 1024) -> float:
    """Phase maximizing the l2 norm of the four tilt angles.

    Scaling divides all angles uniformly, so this phase is scale-invariant.
    """
    grid = np.arange(samples) / samples
    traces = waveform.evaluate(grid)
    return float(grid[int(np.argmax((traces**2).sum(axis=1)))])
