"""Recovering a straight-line pass from binary-sensor transition times.

Two solvers are provided:

* :func:`solve_minimal_3sensor` is the closed form for exactly three sensors.
* :func:`solve_ls` is the two-stage least-squares pipeline for any n >= 3.

Both work from the same two facts.  Closest-approach times are affine in the
sensor coordinates, ``t* = a x + b y + c`` with ``(a, b) = (sin th, cos th)/s``.
And every sensor sees the same detection radius ``R``, so the half-chord
``h = s (t_leave - t_enter) / 2`` obeys ``h**2 + p**2 = R**2``, where ``p``
is the sensor's perpendicular offset from the track.  Differencing two
sensors removes the unknown ``R``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CoincidentSensors, DegenerateGeometry, MissingTransitions, RankDeficient
from .model import TWO_PI, LinearTrajectory, SensorField
from .numerics import solve_least_squares
from .signal import TransitionRecord

AXIS_TOL = 1e-9


@dataclass(frozen=True)
class LinearDiagnostics:
    condition_A1: float
    condition_A2: float
    n_used: int


@dataclass(frozen=True)
class LinearEstimate:
    s_hat: float
    theta_hat: float
    x_o_hat: float
    y_o_hat: float
    diagnostics: LinearDiagnostics

    def __post_init__(self):
        if not self.s_hat > 0:
            raise ValueError("estimated speed must be positive")
        object.__setattr__(self, "theta_hat", float(self.theta_hat) % TWO_PI)

    @property
    def trajectory(self) -> LinearTrajectory:
        return LinearTrajectory(self.x_o_hat, self.y_o_hat, self.s_hat, self.theta_hat)

    def params(self) -> dict[str, float]:
        return {"s": self.s_hat, "theta": self.theta_hat, "x_o": self.x_o_hat, "y_o": self.y_o_hat}


def _check_records(records: Sequence[TransitionRecord], minimum: int) -> None:
    if len(records) < minimum:
        raise ValueError(f"need at least {minimum} transition records, got {len(records)}")
    ids = [r.sensor_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("each sensor may contribute only one transition record")


def _need_chords(records: Sequence[TransitionRecord]) -> None:
    missing = [r.sensor_id for r in records if not r.has_chord]
    if missing:
        raise MissingTransitions(f"sensors {missing[:5]} carry no entry/exit times")


def solve_minimal_3sensor(records: Sequence[TransitionRecord], field: SensorField) -> LinearEstimate:
    """Closed-form line from exactly three sensors.

    The scene is moved so that sensor 1 sits at the origin and sensor 2 on the
    positive x-axis.  In that frame the affine time law gives ``(s, theta)``
    directly, the intercept fixes the along-track position and the chord
    difference of sensors 1 and 2 fixes the cross-track position.  The chord
    step divides by ``x_2 cos(theta)``, so a track parallel to the line through
    sensors 1 and 2 is degenerate.

    Raises
    ------
    CoincidentSensors
        Two of the three sensors share a location.
    DegenerateGeometry
        The sensors are collinear or the rotated heading is axis-aligned.
    """
    if len(records) != 3:
        raise ValueError(f"the minimal solver takes exactly 3 records, got {len(records)}")
    _check_records(records, 3)
    _need_chords(records)
    xy = field.locate([r.sensor_id for r in records])
    t = np.array([r.t_star for r in records])
    span = np.array([r.duration for r in records])

    scale = max(float(np.abs(xy).max()), 1.0)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        if np.linalg.norm(xy[i] - xy[j]) <= 1e-12 * scale:
            raise CoincidentSensors("two of the three sensors coincide")

    origin = xy[0]
    d = xy[1] - origin
    x2 = float(np.hypot(*d))
    cos_psi, sin_psi = d / x2
    rot = np.array([[cos_psi, sin_psi], [-sin_psi, cos_psi]])  # maps sensor 2 onto +x
    x3, y3 = rot @ (xy[2] - origin)
    if abs(y3) <= 1e-12 * scale:
        raise DegenerateGeometry("the three sensors are collinear")

    c = t[0]
    a = (t[1] - t[0]) / x2
    b = (t[2] - t[0] - a * x3) / y3
    s = 1.0 / math.hypot(a, b)
    sin_t, cos_t = a * s, b * s
    if abs(cos_t) <= AXIS_TOL:
        raise DegenerateGeometry("heading is parallel to the sensor 1-2 baseline")

    m = np.array([[sin_t, cos_t],
                  [2 * x2 * cos_t ** 2, -2 * x2 * sin_t * cos_t]])
    rhs = np.array([-s * c,
                    0.25 * s * s * (span[1] ** 2 - span[0] ** 2) + x2 * x2 * cos_t ** 2])
    p_rot = np.linalg.solve(m, rhs)

    x_o, y_o = rot.T @ p_rot + origin
    ux, uy = rot.T @ np.array([sin_t, cos_t])
    cond = float(np.linalg.cond(m))
    return LinearEstimate(s, math.atan2(ux, uy), float(x_o), float(y_o),
                          LinearDiagnostics(condition_A1=math.nan, condition_A2=cond, n_used=3))


def fit_time_plane(records: Sequence[TransitionRecord], field: SensorField):
    """Stage 1: least-squares fit of ``t* = a x + b y + c``.

    Returns ``(s, theta, c, report)``.  The intercept ``c`` absorbs the unknown
    time origin, so positions are later reported at ``t = 0``.
    """
    xy = field.locate([r.sensor_id for r in records])
    t = np.array([r.t_star for r in records])
    A1 = np.column_stack([xy, np.ones(len(t))])
    rep = solve_least_squares(A1, t)
    a, b, c = rep.solution
    norm = math.hypot(a, b)
    if norm == 0.0:
        raise RankDeficient("closest-approach times do not vary across the field")
    return 1.0 / norm, math.atan2(a, b), float(c), rep


def solve_ls(records: Sequence[TransitionRecord], field: SensorField) -> LinearEstimate:
    """Two-stage least-squares line fit from ``n >= 3`` sensors.

    Stage 2 pairs the median-chord sensor against every other sensor.  Chord
    rows constrain only the cross-track offset of the track and the intercept
    row only the along-track position, so the two do not compete and need no
    relative weighting.

    Raises
    ------
    RankDeficient
        Collinear sensor field (stage 1) or all sensors at the same
        cross-track offset (stage 2).
    MissingTransitions
        A record lacks entry/exit times.
    """
    _check_records(records, 3)
    _need_chords(records)
    s, theta, c, rep1 = fit_time_plane(records, field)
    sin_t, cos_t = math.sin(theta), math.cos(theta)

    xy = field.locate([r.sensor_id for r in records])
    half = 0.5 * s * np.array([r.duration for r in records])
    e = xy[:, 1] * sin_t - xy[:, 0] * cos_t  # offset of each sensor relative to a track through the origin
    ref = int(np.argsort(half, kind="stable")[len(half) // 2])
    others = np.arange(len(records)) != ref
    de = e[ref] - e[others]
    rows = np.column_stack([2 * de * cos_t, -2 * de * sin_t])
    rhs = half[others] ** 2 - half[ref] ** 2 - e[ref] ** 2 + e[others] ** 2
    A2 = np.vstack([rows, [-sin_t / s, -cos_t / s]])
    Y2 = np.append(rhs, c)
    rep2 = solve_least_squares(A2, Y2)
    x_o, y_o = rep2.solution
    return LinearEstimate(s, theta, float(x_o), float(y_o),
                          LinearDiagnostics(rep1.condition_estimate, rep2.condition_estimate, len(records)))
