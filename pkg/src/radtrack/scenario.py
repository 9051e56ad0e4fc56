"""Random problem instances: generic trajectories over uniform sensor fields, plus
hand-built degenerate cases.

Detection here is geometric: a sensor triggers when the track enters the disc
of radius ``detect_radius`` around it, which is the exact small-window limit
of the photon-rate threshold once the source strength is calibrated to that
radius.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import RejectionBudgetExceeded, RepeatedTimes
from .estimate_parabola import genericity_check
from .model import (TWO_PI, LinearTrajectory, ParabolicTrajectory, Sensor, SensorField,
                    closest_approach_times)
from .signal import TransitionRecord

REJECTION_BUDGET = 10_000
GAMMA_EPS = 0.01


@dataclass(frozen=True)
class GenConfig:
    extent: float = 2000.0
    n_sensors: int = 100
    detect_radius: float = 170.0
    s_range: tuple = (5.0, 50.0)
    theta_range: tuple = (0.0, TWO_PI)
    alpha_range: tuple = (-40.0, 40.0)
    beta_range: tuple = (-40.0, 40.0)
    gamma_range: tuple = (GAMMA_EPS, 2.0)  # magnitude; the sign is drawn separately
    origin_box: float | None = None  # half-width; defaults to half the extent
    parabola_horizon: tuple = (0.0, 120.0)
    min_genericity: float = 1e-9

    def __post_init__(self):
        if not self.extent > 0 or self.n_sensors < 1 or not self.detect_radius > 0:
            raise ValueError("extent, n_sensors and detect_radius must be positive")
        for name in ("s_range", "theta_range", "alpha_range", "beta_range", "gamma_range", "parabola_horizon"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must be a non-empty interval")
        if self.s_range[0] <= 0:
            raise ValueError("speeds must be positive")
        if self.gamma_range[0] < GAMMA_EPS:
            raise ValueError(f"|gamma| must stay at least {GAMMA_EPS} away from zero")

    @property
    def half_box(self) -> float:
        return 0.5 * self.extent if self.origin_box is None else self.origin_box


def uniform_field(extent: float, n: int, rng: np.random.Generator) -> SensorField:
    """``n`` sensors i.i.d. uniform on the square ``[-extent/2, extent/2]**2``."""
    return SensorField.from_xy(rng.uniform(-0.5 * extent, 0.5 * extent, size=(n, 2)))


def linear_records(traj: LinearTrajectory, field: SensorField, radius: float,
                   horizon: tuple | None = None) -> list[TransitionRecord]:
    """Exact disc-crossing records of a straight pass, in field order.

    Only complete passes count: entry at or after ``horizon[0]`` (default
    ``t_o``) and, if given, exit no later than ``horizon[1]``.
    """
    lo = traj.t_o if horizon is None else horizon[0]
    hi = math.inf if horizon is None else horizon[1]
    xy = field.positions
    dx, dy = xy[:, 0] - traj.x_o, xy[:, 1] - traj.y_o
    sin_t, cos_t = math.sin(traj.theta), math.cos(traj.theta)
    along = dx * sin_t + dy * cos_t
    across = dx * cos_t - dy * sin_t
    inside = radius ** 2 - across ** 2
    half = np.sqrt(np.where(inside > 0, inside, 0.0))
    t_enter = traj.t_o + (along - half) / traj.s
    t_leave = traj.t_o + (along + half) / traj.s
    keep = (inside > 0) & (t_enter >= lo) & (t_leave <= hi)
    return [TransitionRecord(sid, float(a), float(b))
            for sid, a, b, k in zip(field.ids, t_enter, t_leave, keep) if k]


def parabola_records(traj: ParabolicTrajectory, field: SensorField, radius: float,
                     horizon: tuple) -> list[TransitionRecord]:
    """Exact closest-approach records for sensors the parabola passes within ``radius`` of.

    The closest approach must fall strictly inside ``horizon``.
    """
    lo, hi = horizon
    xy = field.positions
    t = closest_approach_times(traj, xy, horizon)
    x, y = traj.position(t)
    d = np.hypot(x - xy[:, 0], y - xy[:, 1])
    keep = (d < radius) & (t > lo) & (t < hi)
    return [TransitionRecord.from_star(sid, float(tk)) for sid, tk, k in zip(field.ids, t, keep) if k]


def _draw(rng, bounds):
    return float(rng.uniform(*bounds))


def gen_generic_linear(cfg: GenConfig, rng: np.random.Generator) -> tuple[LinearTrajectory, SensorField]:
    """Random line and field with at least three complete forward passes.

    The trigger test uses the whole forward ray, so whether an instance is
    accepted does not depend on the speed, and accepted speeds follow the
    prior exactly.
    """
    for _ in range(REJECTION_BUDGET):
        traj = LinearTrajectory(_draw(rng, (-cfg.half_box, cfg.half_box)), _draw(rng, (-cfg.half_box, cfg.half_box)),
                                _draw(rng, cfg.s_range), _draw(rng, cfg.theta_range))
        field = uniform_field(cfg.extent, cfg.n_sensors, rng)
        if len(linear_records(traj, field, cfg.detect_radius)) >= 3:
            return traj, field
    raise RejectionBudgetExceeded(f"no linear instance with 3 triggers in {REJECTION_BUDGET} attempts")


def gen_generic_parabola(cfg: GenConfig, rng: np.random.Generator) -> tuple[ParabolicTrajectory, SensorField]:
    """Random parabola and field with at least six triggered sensors whose first
    six (field order) pass the genericity check."""
    for _ in range(REJECTION_BUDGET):
        gamma = _draw(rng, cfg.gamma_range) * (1.0 if rng.random() < 0.5 else -1.0)
        traj = ParabolicTrajectory(_draw(rng, (-cfg.half_box, cfg.half_box)), _draw(rng, (-cfg.half_box, cfg.half_box)),
                                   _draw(rng, cfg.alpha_range), _draw(rng, cfg.beta_range), gamma)
        field = uniform_field(cfg.extent, cfg.n_sensors, rng)
        recs = parabola_records(traj, field, cfg.detect_radius, cfg.parabola_horizon)
        if len(recs) < 6:
            continue
        try:
            if genericity_check(recs[:6], field) > cfg.min_genericity:
                return traj, field
        except RepeatedTimes:
            continue
    raise RejectionBudgetExceeded(f"no generic parabola instance in {REJECTION_BUDGET} attempts")


class DegenerateKind(str, enum.Enum):
    COINCIDENT_SENSORS = "CoincidentSensors"
    AXIS_ALIGNED_THETA = "AxisAlignedTheta"
    COLLINEAR_FIELD = "CollinearField"


@dataclass(frozen=True)
class DegenerateInstance:
    kind: DegenerateKind
    trajectory: LinearTrajectory
    field: SensorField
    records: list


def gen_degenerate_linear(kind, rng: np.random.Generator, radius: float = 170.0,
                          n_sensors: int = 10) -> DegenerateInstance:
    """Build one of the measure-zero linear configurations exactly.

    * ``CoincidentSensors``: three records, two of them from one location.
    * ``AxisAlignedTheta``: sensors 1 and 2 lie on a line parallel to the
      track, so in the frame with sensor 2 on the x-axis the heading is
      exactly pi/2.
    * ``CollinearField``: ``n_sensors`` triggered sensors on one straight line.
    """
    kind = DegenerateKind(kind)
    traj = LinearTrajectory(float(rng.uniform(-200, 200)), float(rng.uniform(-200, 200)),
                            float(rng.uniform(10, 40)), float(rng.uniform(0, TWO_PI)))
    u = np.array([math.sin(traj.theta), math.cos(traj.theta)])
    nrm = np.array([math.cos(traj.theta), -math.sin(traj.theta)])
    start = np.array([traj.x_o, traj.y_o])

    def at(q, r):
        return start + q * u + r * nrm

    if kind is DegenerateKind.COINCIDENT_SENSORS:
        p = at(500.0, 40.0)
        pts = [p, p.copy(), at(800.0, -60.0)]
    elif kind is DegenerateKind.AXIS_ALIGNED_THETA:
        r = float(rng.uniform(-120, 120))
        pts = [at(500.0, r), at(700.0, r), at(900.0, -r / 2 + 30.0)]
    else:
        q0, q1 = 400.0, 1200.0
        r0, r1 = float(rng.uniform(-150, 150)), float(rng.uniform(-150, 150))
        pts = [at(q0 + (q1 - q0) * k / (n_sensors - 1), r0 + (r1 - r0) * k / (n_sensors - 1))
               for k in range(n_sensors)]
    field = SensorField(tuple(Sensor(i, float(x), float(y)) for i, (x, y) in enumerate(pts)), strict=False)
    return DegenerateInstance(kind, traj, field, linear_records(traj, field, radius))
