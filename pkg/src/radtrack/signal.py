"""Photon-rate model and transition-time generation for binary sensors.

A sensor reports the first and last instants at which the photon count in a
sliding window reaches the threshold ``lambda_T``.  ``lambda_T`` is a count
per one-second window; for a window of length ``w`` the count threshold is
``lambda_T * w`` and the expected-value criterion is "mean rate over the
window >= lambda_T".  ``window = 0`` selects the instantaneous limit, in
which a sensor is "on" exactly while the source is inside the disc where the
expected rate equals ``lambda_T``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (DegenerateDistance, DomainError, InvalidShape, MajorizerOverflow, NonUnimodal)
from .model import (Sensor, SensorField, Trajectory, closest_approach_time,
                    closest_approach_times)
from .numerics import DEFAULT_NUMERICS, NumericsConfig, find_bracketed_root, integrate_adaptive

DISTANCE_FLOOR = 0.1  # metres; keeps the 1/d**2 law finite when a source passes over a sensor
DEFAULT_RATE_CAP = 1e7  # photons/s; above this the thinning majoriser is treated as unphysical
THINNING_SEGMENTS = 2048

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True)
class EmissionModel:
    """Source statistics.  ``lambda_s`` may be ``None`` until calibrated."""

    lambda_s: float | None
    alpha_s: float = 0.0
    lambda_b: float = 0.0

    def __post_init__(self):
        if self.lambda_s is not None and self.lambda_s < 0:
            raise ValueError("lambda_s must be non-negative")
        if self.alpha_s < 0 or self.lambda_b < 0:
            raise ValueError("alpha_s and lambda_b must be non-negative")


@dataclass(frozen=True)
class DetectionConfig:
    lambda_T: float
    window: float = 1.0
    slide_step: float = 0.01

    def __post_init__(self):
        if not self.lambda_T > 0:
            raise ValueError("lambda_T must be positive")
        if self.window < 0:
            raise ValueError("window must be >= 0")
        if self.window > 0 and not 0 < self.slide_step < self.window:
            raise ValueError("slide_step must lie in (0, window)")


@dataclass(frozen=True)
class TransitionRecord:
    """Entry/exit time stamps of one sensor; ``t_star`` is always their midpoint.

    Records carrying only a closest-approach time (no chord) are built with
    :meth:`from_star`; their ``t_enter``/``t_leave`` are NaN.
    """

    sensor_id: int
    t_enter: float = math.nan
    t_leave: float = math.nan
    t_star: float = math.nan

    def __post_init__(self):
        te, tl = float(self.t_enter), float(self.t_leave)
        if math.isfinite(te) and math.isfinite(tl):
            if te > tl:
                raise ValueError(f"t_enter {te} after t_leave {tl}")
            mid = (te + tl) / 2
            if math.isfinite(self.t_star) and self.t_star != mid:
                raise ValueError("t_star must equal the midpoint of t_enter and t_leave")
            object.__setattr__(self, "t_star", mid)
        elif not math.isfinite(self.t_star):
            raise ValueError("a record needs both transition times or a finite t_star")

    @classmethod
    def from_star(cls, sensor_id: int, t_star: float) -> "TransitionRecord":
        return cls(sensor_id, math.nan, math.nan, float(t_star))

    @property
    def has_chord(self) -> bool:
        return math.isfinite(self.t_enter) and math.isfinite(self.t_leave)

    @property
    def duration(self) -> float:
        return self.t_leave - self.t_enter


class NoiseMode(str, enum.Enum):
    NOISE_FREE = "noise_free"
    ERLANG = "erlang"
    PHOTON = "photon"


@dataclass(frozen=True)
class NoiseSpec:
    mode: NoiseMode = NoiseMode.NOISE_FREE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", NoiseMode(self.mode))
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def expected_rate(em: EmissionModel, d):
    """Expected photon rate ``lambda_s exp(-alpha_s d) / d**2 + lambda_b`` at distance ``d``.

    Distances below ``DISTANCE_FLOOR`` are clamped to it; negative or
    non-finite distances raise :class:`DegenerateDistance`.
    """
    if em.lambda_s is None:
        raise ValueError("emission model has no lambda_s; calibrate it first")
    d = np.asarray(d, dtype=float)
    if np.any(~np.isfinite(d)) or np.any(d < 0):
        raise DegenerateDistance("distance must be finite and non-negative")
    d = np.maximum(d, DISTANCE_FLOOR)
    rate = em.lambda_s * np.exp(-em.alpha_s * d) / (d * d) + em.lambda_b
    return float(rate) if rate.ndim == 0 else rate


def calibrate_lambda_s(detect_radius: float, em: EmissionModel, dc: DetectionConfig) -> float:
    """Source strength that puts the expected rate at ``detect_radius`` exactly at ``lambda_T``."""
    if not detect_radius > 0:
        raise ValueError("detection radius must be positive")
    if dc.lambda_T <= em.lambda_b:
        raise ValueError("lambda_T must exceed the background rate")
    return (dc.lambda_T - em.lambda_b) * detect_radius ** 2 * math.exp(em.alpha_s * detect_radius)


def calibrated(em: EmissionModel, dc: DetectionConfig, detect_radius: float) -> EmissionModel:
    return replace(em, lambda_s=calibrate_lambda_s(detect_radius, em, dc))


def detection_radius(em: EmissionModel, dc: DetectionConfig) -> float:
    """Distance at which the instantaneous expected rate equals ``lambda_T``."""
    excess = dc.lambda_T - em.lambda_b
    if excess <= 0:
        return math.inf
    # rate is decreasing in d, so bisect on log-distance
    f = lambda d: em.lambda_s * math.exp(-em.alpha_s * d) / (d * d) - excess
    lo, hi = 1e-6, 1.0
    while f(hi) > 0:
        hi *= 2.0
    return find_bracketed_root(f, lo, hi, tol=1e-12 * hi)


def windowed_mean_rate(traj: Trajectory, sensor: Sensor, em: EmissionModel, dc: DetectionConfig,
                       t: float, numerics: NumericsConfig = DEFAULT_NUMERICS) -> float:
    """Expected rate averaged over the window centred at ``t`` (adaptive quadrature)."""
    if dc.window == 0:
        x, y = traj.position(t)
        return expected_rate(em, math.hypot(x - sensor.x, y - sensor.y))
    half = 0.5 * dc.window

    def integrand(tau):
        x, y = traj.position(tau)
        return expected_rate(em, np.hypot(x - sensor.x, y - sensor.y))

    return integrate_adaptive(integrand, t - half, t + half, rel_tol=numerics.quad_rel_tol,
                              max_depth=numerics.quad_max_depth) / dc.window


def noise_free_transitions(traj: Trajectory, sensor: Sensor, em: EmissionModel, dc: DetectionConfig,
                           horizon, numerics: NumericsConfig = DEFAULT_NUMERICS):
    """Expected-value transition times of one sensor, or ``None``.

    The threshold function (window-mean rate minus ``lambda_T``) is scanned
    on a uniform grid that also contains the closest-approach time; the two
    sign changes are then refined by bisection.  ``None`` is returned when the
    threshold is never reached or the pass is not complete inside ``horizon``.

    Raises
    ------
    NonUnimodal
        If the scan finds more than two threshold crossings.
    """
    lo, hi = float(horizon[0]), float(horizon[1])
    t_c = min(max(closest_approach_time(traj, sensor, (lo, hi)), lo), hi)
    x, y = traj.position(t_c)
    if expected_rate(em, math.hypot(x - sensor.x, y - sensor.y)) < dc.lambda_T:
        return None  # the window mean can never exceed the peak rate

    def excess(t):
        return windowed_mean_rate(traj, sensor, em, dc, t, numerics) - dc.lambda_T

    grid = np.union1d(np.linspace(lo, hi, numerics.scan_points), [t_c])
    values = np.array([excess(t) for t in grid])
    on = values >= 0
    flips = np.flatnonzero(on[1:] != on[:-1])
    if len(flips) > 2:
        raise NonUnimodal(f"{len(flips)} threshold crossings for sensor {sensor.id}")
    if not on.any() or on[0] or on[-1] or len(flips) != 2:
        return None
    i, j = flips
    t_enter = find_bracketed_root(excess, grid[i], grid[i + 1], tol=numerics.root_tol)
    t_leave = find_bracketed_root(excess, grid[j], grid[j + 1], tol=numerics.root_tol)
    return TransitionRecord(sensor.id, t_enter, t_leave)


def _window_mean_rate_batch(traj: Trajectory, xy: np.ndarray, em: EmissionModel, window: float,
                            t: np.ndarray) -> np.ndarray:
    if window == 0:
        x, y = traj.position(t)
        return expected_rate(em, np.hypot(x - xy[:, 0], y - xy[:, 1]))
    tau = t[:, None] + 0.5 * window * _GL_NODES[None, :]
    x, y = traj.position(tau)
    rate = expected_rate(em, np.hypot(x - xy[:, :1], y - xy[:, 1:]))
    return 0.5 * rate @ _GL_WEIGHTS


def noise_free_transitions_batch(traj: Trajectory, field: SensorField, em: EmissionModel,
                                 dc: DetectionConfig, horizon,
                                 numerics: NumericsConfig = DEFAULT_NUMERICS) -> list[TransitionRecord]:
    """Vectorised counterpart of :func:`noise_free_transitions` for a whole field.

    Assumes the unimodal received-count profile (no multi-crossing scan) and
    uses a 24-point Gauss-Legendre rule over the window; crossings are
    bisected for all sensors simultaneously.  Returns records for the sensors
    with a complete pass inside ``horizon``, in field order.
    """
    lo, hi = float(horizon[0]), float(horizon[1])
    xy = field.positions
    ids = np.array(field.ids)
    t_c = np.clip(closest_approach_times(traj, xy, (lo, hi), numerics), lo, hi)
    x, y = traj.position(t_c)
    peak = expected_rate(em, np.hypot(x - xy[:, 0], y - xy[:, 1]))
    cand = np.flatnonzero(peak >= dc.lambda_T)
    if cand.size == 0:
        return []
    xy, ids, t_c = xy[cand], ids[cand], t_c[cand]

    def excess(t):
        return _window_mean_rate_batch(traj, xy, em, dc.window, t) - dc.lambda_T

    n = len(cand)
    f_lo = excess(np.full(n, lo))
    f_hi = excess(np.full(n, hi))
    f_c = excess(t_c)
    ok = (f_lo < 0) & (f_hi < 0) & (f_c >= 0)

    def bisect(a, b, rising):
        a, b = a.copy(), b.copy()
        for _ in range(200):
            if not np.any(b - a > numerics.root_tol):
                break
            mid = 0.5 * (a + b)
            above = excess(mid) >= 0
            move_b = above if rising else ~above
            b = np.where(move_b, mid, b)
            a = np.where(move_b, a, mid)
        return 0.5 * (a + b)

    t_enter = bisect(np.full(n, lo), t_c, rising=True)
    t_leave = bisect(t_c, np.full(n, hi), rising=False)
    return [TransitionRecord(int(i), float(a), float(b))
            for i, a, b, keep in zip(ids, t_enter, t_leave, ok) if keep]


def erlang_times(times, lambda_T: float, rng: np.random.Generator) -> np.ndarray:
    """Erlang(k, k/t) draws with ``k = round(lambda_T)``: mean ``t``, variance ``t**2/k``."""
    k = int(round(lambda_T))
    if k < 1:
        raise InvalidShape(f"Erlang shape round({lambda_T}) = {k} < 1")
    times = np.asarray(times, dtype=float)
    if np.any(~(times > 0)):
        raise DomainError("Erlang surrogate needs transition times strictly after t_o")
    return rng.gamma(shape=k, scale=times / k)


def sample_transitions_erlang(exact: TransitionRecord, lambda_T: float,
                              rng: np.random.Generator) -> TransitionRecord:
    """Perturb exact entry/exit times with independent Erlang noise."""
    t_enter, t_leave = erlang_times([exact.t_enter, exact.t_leave], lambda_T, rng)
    if t_enter > t_leave:
        t_enter, t_leave = t_leave, t_enter
    return TransitionRecord(exact.sensor_id, float(t_enter), float(t_leave))


def simulate_photon_arrivals(traj: Trajectory, sensor: Sensor, em: EmissionModel, horizon,
                             rng: np.random.Generator, rate_cap: float = DEFAULT_RATE_CAP,
                             segments: int = THINNING_SEGMENTS) -> np.ndarray:
    """Arrival times of a non-homogeneous Poisson photon stream, by thinning.

    The horizon is cut into equal segments.  On each one the distance is at
    least the midpoint distance minus the largest speed times the half-width,
    so the rate at that distance bounds the rate over the segment.
    Candidates come from a homogeneous process at that bound and are kept
    with probability ``rate(t) / bound``.
    """
    lo, hi = float(horizon[0]), float(horizon[1])
    t_c = min(max(closest_approach_time(traj, sensor, (lo, hi)), lo), hi)
    x, y = traj.position(t_c)
    peak = expected_rate(em, math.hypot(x - sensor.x, y - sensor.y)) * (1.0 + 1e-12)
    if peak > rate_cap:
        raise MajorizerOverflow(f"peak rate {peak:.3e}/s exceeds cap {rate_cap:.3e}/s")
    if peak == 0.0:
        return np.empty(0)
    edges = np.linspace(lo, hi, segments + 1)
    h = (hi - lo) / segments
    mx, my = traj.position(0.5 * (edges[:-1] + edges[1:]))
    vx, vy = traj.velocity(edges)
    vmax = np.maximum(np.hypot(vx[:-1], vy[:-1]), np.hypot(vx[1:], vy[1:]))
    reach = np.hypot(mx - sensor.x, my - sensor.y) - 0.5 * h * vmax
    bound = np.minimum(expected_rate(em, np.maximum(reach, 0.0)) * (1.0 + 1e-12), peak)
    counts = rng.poisson(bound * h)
    seg = np.repeat(np.arange(segments), counts)
    candidates = edges[seg] + h * rng.random(seg.size)
    x, y = traj.position(candidates)
    rate = expected_rate(em, np.hypot(x - sensor.x, y - sensor.y))
    keep = rng.random(seg.size) * bound[seg] < rate
    return np.sort(candidates[keep])


def window_counts(arrivals: np.ndarray, centers: np.ndarray, window: float) -> np.ndarray:
    half = 0.5 * window
    return (np.searchsorted(arrivals, centers + half, side="right")
            - np.searchsorted(arrivals, centers - half, side="left"))


def sample_transitions_photon(traj: Trajectory, sensor: Sensor, em: EmissionModel, dc: DetectionConfig,
                              horizon, rng: np.random.Generator, rate_cap: float = DEFAULT_RATE_CAP):
    """Transition times from a simulated photon stream and a sliding count window.

    ``t_enter``/``t_leave`` are the centres of the first/last window whose
    count reaches ``lambda_T * window``; ``None`` if no window does.
    """
    if dc.window <= 0:
        raise ValueError("photon-stream mode needs a positive window")
    lo, hi = float(horizon[0]), float(horizon[1])
    arrivals = simulate_photon_arrivals(traj, sensor, em, (lo, hi), rng, rate_cap)
    n_steps = int(math.floor((hi - lo - dc.window) / dc.slide_step + 1e-9))
    centers = lo + 0.5 * dc.window + dc.slide_step * np.arange(n_steps + 1)
    counts = window_counts(arrivals, centers, dc.window)
    hit = np.flatnonzero(counts >= dc.lambda_T * dc.window - 1e-9)
    if hit.size == 0:
        return None
    return TransitionRecord(sensor.id, float(centers[hit[0]]), float(centers[hit[-1]]))


def simulate_transitions(traj: Trajectory, field: SensorField, em: EmissionModel, dc: DetectionConfig,
                         horizon, noise: NoiseSpec, rng: np.random.Generator | None = None,
                         numerics: NumericsConfig = DEFAULT_NUMERICS,
                         rate_cap: float = DEFAULT_RATE_CAP) -> list[TransitionRecord]:
    """All triggered sensors of ``field`` under the requested noise mode, in field order.

    Erlang noise is drawn in field order for every triggered sensor, so a
    given sensor receives the same perturbation whatever subset is used later.
    """
    rng = np.random.default_rng(noise.seed) if rng is None else rng
    if noise.mode is NoiseMode.PHOTON:
        records = []
        for sensor in field:
            rec = sample_transitions_photon(traj, sensor, em, dc, horizon, rng, rate_cap)
            if rec is not None:
                records.append(rec)
        return records
    exact = noise_free_transitions_batch(traj, field, em, dc, horizon, numerics)
    if noise.mode is NoiseMode.NOISE_FREE:
        return exact
    return [sample_transitions_erlang(rec, dc.lambda_T, rng) for rec in exact]
