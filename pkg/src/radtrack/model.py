"""Trajectory and sensor types plus the exact closest-approach kinematics.

Angle convention
----------------
A linear piece moves along the unit vector ``(sin(theta), cos(theta))``: the
sine drives the x-coordinate and the cosine the y-coordinate.  ``theta`` is
therefore measured clockwise from the +y axis.  Every estimator and bound in
the package uses this convention.

Time origin
-----------
``(x_o, y_o)`` is the position at ``t = t_o``.  Generated scenarios use
``t_o = 0`` and estimators report the position at ``t = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import CoincidentSensors, DegenerateGeometry
from .numerics import DEFAULT_NUMERICS, NumericsConfig, minimize_scalar

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LinearTrajectory:
    x_o: float
    y_o: float
    s: float
    theta: float
    t_o: float = 0.0

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError(f"speed must be positive, got {self.s}")
        object.__setattr__(self, "theta", float(self.theta) % TWO_PI)

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.sin(self.theta), math.cos(self.theta)])

    def position(self, t):
        dt = np.asarray(t, dtype=float) - self.t_o
        return (self.x_o + self.s * dt * math.sin(self.theta),
                self.y_o + self.s * dt * math.cos(self.theta))

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        return (np.full_like(t, self.s * math.sin(self.theta)),
                np.full_like(t, self.s * math.cos(self.theta)))

    def at_origin_time(self, t_ref: float = 0.0) -> "LinearTrajectory":
        """Same line re-anchored so that ``(x_o, y_o)`` is the position at ``t_ref``."""
        x, y = self.position(t_ref)
        return replace(self, x_o=float(x), y_o=float(y), t_o=t_ref)

    def rotated(self, phi: float) -> "LinearTrajectory":
        """Rotate the whole scene counter-clockwise by ``phi`` about the origin."""
        c, s = math.cos(phi), math.sin(phi)
        return replace(self, x_o=c * self.x_o - s * self.y_o, y_o=s * self.x_o + c * self.y_o,
                       theta=self.theta - phi)

    def translated(self, dx: float, dy: float) -> "LinearTrajectory":
        return replace(self, x_o=self.x_o + dx, y_o=self.y_o + dy)


@dataclass(frozen=True)
class ParabolicTrajectory:
    x_o: float
    y_o: float
    alpha: float
    beta: float
    gamma: float
    t_o: float = 0.0

    def position(self, t):
        dt = np.asarray(t, dtype=float) - self.t_o
        return (self.x_o + self.alpha * dt,
                self.y_o + self.beta * dt + 0.5 * self.gamma * dt * dt)

    def velocity(self, t):
        dt = np.asarray(t, dtype=float) - self.t_o
        return np.full_like(dt, self.alpha), self.beta + self.gamma * dt

    def translated(self, dx: float, dy: float) -> "ParabolicTrajectory":
        return replace(self, x_o=self.x_o + dx, y_o=self.y_o + dy)


Trajectory = Union[LinearTrajectory, ParabolicTrajectory]


@dataclass(frozen=True)
class Sensor:
    id: int
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"sensor {self.id} has non-finite coordinates")


@dataclass(frozen=True)
class SensorField:
    """Ordered collection of point sensors.

    ``strict=False`` skips the distinct-location check; it exists only so
    deliberately degenerate test instances can be built.
    """

    sensors: tuple
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        sensors = tuple(self.sensors)
        object.__setattr__(self, "sensors", sensors)
        if not sensors:
            raise ValueError("a sensor field needs at least one sensor")
        ids = [s.id for s in sensors]
        if len(set(ids)) != len(ids):
            raise ValueError("sensor ids must be unique")
        object.__setattr__(self, "_index", {s.id: i for i, s in enumerate(sensors)})
        if self.strict:
            xy = self.positions
            if len(np.unique(xy, axis=0)) != len(xy):
                raise CoincidentSensors("two or more sensors share a location")

    @classmethod
    def from_xy(cls, xy, ids: Iterable[int] | None = None, strict: bool = True) -> "SensorField":
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        ids = range(len(xy)) if ids is None else ids
        return cls(tuple(Sensor(int(i), float(x), float(y)) for i, (x, y) in zip(ids, xy)), strict=strict)

    @property
    def positions(self) -> np.ndarray:
        return np.array([[s.x, s.y] for s in self.sensors], dtype=float)

    @property
    def ids(self) -> list[int]:
        return [s.id for s in self.sensors]

    def __len__(self) -> int:
        return len(self.sensors)

    def __iter__(self) -> Iterator[Sensor]:
        return iter(self.sensors)

    def __getitem__(self, i) -> Sensor:
        return self.sensors[i]

    def by_id(self, sensor_id: int) -> Sensor:
        return self.sensors[self._index[sensor_id]]

    def locate(self, ids: Sequence[int]) -> np.ndarray:
        """``(n, 2)`` array of coordinates for the given sensor ids."""
        return np.array([[self.by_id(i).x, self.by_id(i).y] for i in ids], dtype=float).reshape(-1, 2)

    def subset(self, ids: Sequence[int]) -> "SensorField":
        return SensorField(tuple(self.by_id(i) for i in ids), strict=self.strict)

    def rotated(self, phi: float) -> "SensorField":
        c, s = math.cos(phi), math.sin(phi)
        return SensorField(tuple(Sensor(q.id, c * q.x - s * q.y, s * q.x + c * q.y) for q in self.sensors),
                           strict=False)

    def translated(self, dx: float, dy: float) -> "SensorField":
        return SensorField(tuple(Sensor(q.id, q.x + dx, q.y + dy) for q in self.sensors), strict=False)


def distance_at(traj: Trajectory, sensor: Sensor, t):
    """Euclidean distance between the source at time ``t`` and ``sensor``."""
    x, y = traj.position(t)
    d = np.hypot(x - sensor.x, y - sensor.y)
    return float(d) if np.ndim(d) == 0 else d


def closest_approach_time_linear(traj: LinearTrajectory, sensor: Sensor) -> float:
    """Time at which a linear piece passes closest to ``sensor``."""
    return traj.t_o + (math.sin(traj.theta) * (sensor.x - traj.x_o)
                       + math.cos(traj.theta) * (sensor.y - traj.y_o)) / traj.s


def perpendicular_offset(traj: LinearTrajectory, sensor: Sensor) -> float:
    """Signed distance of ``sensor`` from the line (positive to the left of travel)."""
    return ((sensor.y - traj.y_o) * math.sin(traj.theta)
            - (sensor.x - traj.x_o) * math.cos(traj.theta))


def circle_crossings_linear(traj: LinearTrajectory, sensor: Sensor, radius: float):
    """Entry/exit times of a line through a disc of ``radius`` around ``sensor``.

    Returns ``None`` when the line stays outside the disc.
    """
    p = perpendicular_offset(traj, sensor)
    if abs(p) >= radius:
        return None
    half = math.sqrt(radius * radius - p * p) / traj.s
    t_star = closest_approach_time_linear(traj, sensor)
    return t_star - half, t_star + half


def stationarity_parabola(traj: ParabolicTrajectory, sensor: Sensor, t):
    """Half the time derivative of the squared distance, ``(r(t) - p) . v(t)``."""
    x, y = traj.position(t)
    vx, vy = traj.velocity(t)
    return (x - sensor.x) * vx + (y - sensor.y) * vy


def closest_approach_cubic_residual(traj: ParabolicTrajectory, sensor: Sensor, t):
    """Left minus right side of the closest-approach cubic for a parabolic piece.

    With ``u = t - t_o`` the stationary points satisfy::

        g/2 u^3 + 3b/2 u^2 + ((a^2 + b^2)/g + y_o) u
            + (a/g)(x_o - x_j) + (b/g)(y_o - y_j) = y_j u

    This is ``stationarity_parabola / gamma`` written out term by term.
    """
    a, b, g = traj.alpha, traj.beta, traj.gamma
    u = np.asarray(t, dtype=float) - traj.t_o
    lhs = (0.5 * g * u ** 3 + 1.5 * b * u ** 2 + ((a * a + b * b) / g + traj.y_o) * u
           + (a / g) * (traj.x_o - sensor.x) + (b / g) * (traj.y_o - sensor.y))
    return lhs - sensor.y * u


def closest_approach_time_parabola(traj: ParabolicTrajectory, sensor: Sensor, horizon,
                                   numerics: NumericsConfig = DEFAULT_NUMERICS) -> float:
    """Global minimiser of the sensor distance over ``horizon`` for a parabolic piece.

    A dense scan plus golden-section search isolates the global basin, then a
    few Newton steps on the stationarity condition polish the root to
    floating-point accuracy (a flat minimum of ``d**2`` alone only pins ``t``
    to about ``sqrt(eps)``).
    """
    if traj.gamma == 0.0:
        raise DegenerateGeometry("gamma = 0: use closest_approach_time_linear")
    lo, hi = float(horizon[0]), float(horizon[1])
    if not lo < hi:
        raise ValueError("empty horizon")

    def d2(t):
        x, y = traj.position(t)
        return (x - sensor.x) ** 2 + (y - sensor.y) ** 2

    span = hi - lo
    n_grid = max(numerics.min_grid, int(span / 1e-2) + 1)
    t = minimize_scalar(d2, lo, hi, tol=numerics.minimize_tol * max(1.0, span), grid_points=n_grid)
    return float(_polish_parabola_root(traj, [sensor.x, sensor.y], [t], lo, hi)[0])


def _polish_parabola_root(traj: ParabolicTrajectory, xy, t, lo, hi):
    """Newton iterations on the stationarity condition, vectorised over sensors."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    a, g = traj.alpha, traj.gamma
    t = np.array(t, dtype=float)
    for _ in range(12):
        x, y = traj.position(t)
        vy = traj.beta + g * (t - traj.t_o)
        f = (x - xy[:, 0]) * a + (y - xy[:, 1]) * vy
        fp = a * a + vy * vy + g * (y - xy[:, 1])
        ok = fp > 0
        step = np.where(ok, f / np.where(ok, fp, 1.0), 0.0)
        t_new = np.clip(t - step, lo, hi)
        done = np.all(np.abs(t_new - t) <= 4 * np.finfo(float).eps * np.maximum(1.0, np.abs(t)))
        t = t_new
        if done:
            break
    return t


def closest_approach_times(traj: Trajectory, xy: np.ndarray, horizon,
                           numerics: NumericsConfig = DEFAULT_NUMERICS) -> np.ndarray:
    """Vectorised closest-approach times for many sensor locations at once.

    Linear pieces use the closed form; parabolic pieces use a shared time grid
    followed by the same Newton polish as :func:`closest_approach_time_parabola`.
    """
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if isinstance(traj, LinearTrajectory):
        return traj.t_o + (math.sin(traj.theta) * (xy[:, 0] - traj.x_o)
                           + math.cos(traj.theta) * (xy[:, 1] - traj.y_o)) / traj.s
    if traj.gamma == 0.0:
        raise DegenerateGeometry("gamma = 0: use the linear closest-approach routine")
    lo, hi = float(horizon[0]), float(horizon[1])
    grid = np.linspace(lo, hi, 2 * numerics.min_grid - 1)
    gx, gy = traj.position(grid)
    out = np.empty(len(xy))
    chunk = max(1, 2_000_000 // len(grid))
    for start in range(0, len(xy), chunk):
        block = xy[start:start + chunk]
        d2 = (gx[None, :] - block[:, :1]) ** 2 + (gy[None, :] - block[:, 1:]) ** 2
        out[start:start + chunk] = grid[np.argmin(d2, axis=1)]
    return _polish_parabola_root(traj, xy, out, lo, hi)


def closest_approach_time(traj: Trajectory, sensor: Sensor, horizon=None) -> float:
    if isinstance(traj, LinearTrajectory):
        return closest_approach_time_linear(traj, sensor)
    if horizon is None:
        raise ValueError("a horizon is required for parabolic trajectories")
    return closest_approach_time_parabola(traj, sensor, horizon)
