"""Seeded Monte-Carlo sweeps over threshold (SNR) and number of sensors used.

Random streams are split so that comparisons along a sweep are paired:

* the sensor field of trial ``k`` depends only on ``(master_seed, k)``, so
  every sweep point of a trial sees the same field;
* timing noise depends on ``(master_seed, threshold index, k)`` and is drawn
  for all triggered sensors in field order, so the sensor-count sweep reuses
  the same perturbed records and only changes which of them are used.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bounds import crlb_upper, fisher_entries
from .errors import InsufficientTriggers, RadtrackError
from .estimate_linear import solve_ls, solve_minimal_3sensor
from .estimate_parabola import solve_parabola
from .model import (TWO_PI, LinearTrajectory, SensorField, Trajectory,
                    closest_approach_times)
from .scenario import uniform_field
from .signal import (DetectionConfig, EmissionModel, NoiseMode, NoiseSpec, TransitionRecord, calibrated,
                     erlang_times, noise_free_transitions_batch, simulate_transitions)

LINEAR_PARAMS = ("s", "theta", "x_o", "y_o")
PARABOLA_PARAMS = ("alpha", "beta", "gamma", "x_o", "y_o")


def truth_params(traj: Trajectory) -> dict[str, float]:
    if isinstance(traj, LinearTrajectory):
        t0 = traj.at_origin_time(0.0)
        return {"s": t0.s, "theta": t0.theta, "x_o": t0.x_o, "y_o": t0.y_o}
    return {"alpha": traj.alpha, "beta": traj.beta, "gamma": traj.gamma, "x_o": traj.x_o, "y_o": traj.y_o}


def relative_errors(estimate: dict[str, float], truth: dict[str, float]) -> dict[str, float]:
    """``|est - truth| / |truth|`` per parameter (absolute when the truth is 0).

    Heading differences are wrapped to ``(-pi, pi]`` first.
    """
    out = {}
    for name, true in truth.items():
        diff = estimate[name] - true
        if name == "theta":
            diff = (diff + math.pi) % TWO_PI - math.pi
        out[name] = abs(diff) / abs(true) if true != 0 else abs(diff)
    return out


@dataclass(frozen=True)
class ExperimentSpec:
    trajectory: Trajectory
    em: EmissionModel = EmissionModel(None, 0.0068, 1.0)  # lambda_s None: calibrate per threshold
    dc: DetectionConfig = DetectionConfig(10.0)  # lambda_T is replaced by each sweep value
    noise: NoiseSpec = NoiseSpec(NoiseMode.ERLANG)
    lambda_T_values: tuple = (10.0, 100.0, 1000.0)
    n_values: tuple = (500,)
    trials: int = 1000
    master_seed: int = 0
    extent: float = 2000.0
    n_field: int | None = None  # sensors placed per trial; default 1000 (line) / 500 (parabola)
    detect_radius: float = 170.0
    horizon: tuple | None = None  # default (0, 60) for a line, (0, 120) for a parabola
    solver: str = "ls"  # linear only: "ls" or "minimal"
    sweep_param: str = "lambda_T"  # label only; "snr_db" reports 10 log10(lambda_T)
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.lambda_T_values or not self.n_values:
            raise ValueError("sweep lists must be non-empty")
        if not self.extent > 0:
            raise ValueError("extent must be positive")
        if self.solver not in ("ls", "minimal"):
            raise ValueError("solver must be 'ls' or 'minimal'")
        if self.sweep_param not in ("lambda_T", "snr_db"):
            raise ValueError("sweep_param must be 'lambda_T' or 'snr_db'")
        object.__setattr__(self, "lambda_T_values", tuple(float(v) for v in self.lambda_T_values))
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))

    @property
    def is_linear(self) -> bool:
        return isinstance(self.trajectory, LinearTrajectory)

    @property
    def params(self) -> tuple:
        return LINEAR_PARAMS if self.is_linear else PARABOLA_PARAMS

    @property
    def field_size(self) -> int:
        if self.n_field is not None:
            return self.n_field
        return 1000 if self.is_linear else 500

    @property
    def time_span(self) -> tuple:
        if self.horizon is not None:
            return tuple(self.horizon)
        return (0.0, 60.0) if self.is_linear else (0.0, 120.0)

    def sweep_label(self, lambda_T: float) -> float:
        return 10.0 * math.log10(lambda_T) if self.sweep_param == "snr_db" else lambda_T


@dataclass(frozen=True)
class TrialResult:
    trial_index: int
    sweep_index: int
    lambda_T: float
    n_sensors: int
    truth: dict
    n_triggered: int
    estimate: object | None = None
    errors: dict | None = None
    failure: str | None = None  # error class name of a failed trial
    bound: dict | None = None  # relative variance bounds (linear only)

    @property
    def ok(self) -> bool:
        return self.failure is None


@dataclass(frozen=True)
class ParamStats:
    median: float
    mean: float
    rmse: float
    p05: float
    p95: float


@dataclass(frozen=True)
class SweepPoint:
    lambda_T: float
    n_sensors: int
    trials: int
    failed: int
    stats: dict  # param -> ParamStats
    bound: dict  # param -> mean relative variance bound (NaN when unavailable)
    triggered_mean: float
    triggered_min: int
    triggered_max: int

    @property
    def succeeded(self) -> int:
        return self.trials - self.failed

    @property
    def fail_rate(self) -> float:
        return self.failed / self.trials


@dataclass(frozen=True)
class SweepSummary:
    points: tuple

    def point(self, lambda_T: float, n_sensors: int) -> SweepPoint:
        for p in self.points:
            if p.lambda_T == lambda_T and p.n_sensors == n_sensors:
                return p
        raise KeyError((lambda_T, n_sensors))


def _nan_stats() -> ParamStats:
    return ParamStats(math.nan, math.nan, math.nan, math.nan, math.nan)


def param_stats(values) -> ParamStats:
    """Order-insensitive aggregates: the input is sorted before any summation."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return _nan_stats()
    return ParamStats(median=float(np.median(v)), mean=float(np.mean(v)),
                      rmse=float(np.sqrt(np.mean(v * v))),
                      p05=float(np.percentile(v, 5)), p95=float(np.percentile(v, 95)))


def summarize(results: Sequence[TrialResult]) -> SweepSummary:
    """Aggregate trial results per ``(lambda_T, n_sensors)`` over successful trials."""
    if not results:
        raise ValueError("nothing to summarize")
    groups: dict = {}
    for r in results:
        groups.setdefault((r.lambda_T, r.n_sensors), []).append(r)
    points = []
    for (lam, n), group in sorted(groups.items()):
        good = [r for r in group if r.ok]
        names = list(group[0].truth)
        stats = {p: param_stats([r.errors[p] for r in good]) for p in names}
        bound = {}
        for p in names:
            vals = np.sort([r.bound[p] for r in good if r.bound is not None and p in r.bound])
            bound[p] = float(np.mean(vals)) if vals.size else math.nan
        trig = np.array([r.n_triggered for r in group])
        points.append(SweepPoint(lam, n, len(group), len(group) - len(good), stats, bound,
                                 float(np.mean(np.sort(trig))), int(trig.min()), int(trig.max())))
    return SweepSummary(tuple(points))


def _closeness(traj: Trajectory, field: SensorField, records: list[TransitionRecord], horizon) -> np.ndarray:
    xy = field.locate([r.sensor_id for r in records])
    t = closest_approach_times(traj, xy, horizon)
    x, y = traj.position(t)
    return np.hypot(x - xy[:, 0], y - xy[:, 1])


def select_closest(traj: Trajectory, field: SensorField, records: list[TransitionRecord], n: int,
                   horizon) -> list[TransitionRecord]:
    """The ``n`` records whose sensors pass closest to the true track (all if fewer)."""
    if len(records) <= n:
        return list(records)
    order = np.argsort(_closeness(traj, field, records, horizon), kind="stable")[:n]
    return [records[i] for i in sorted(order)]


def _estimate(spec: ExperimentSpec, records, field):
    if not spec.is_linear:
        return solve_parabola(records, field)
    if spec.solver == "minimal":
        return solve_minimal_3sensor(records[:3], field)
    return solve_ls(records, field)


def _bound(spec: ExperimentSpec, lambda_T: float, records, field) -> dict | None:
    if not spec.is_linear:
        return None
    traj = spec.trajectory.at_origin_time(0.0)
    try:
        sub = field.subset([r.sensor_id for r in records])
        b = crlb_upper(fisher_entries(traj, sub, lambda_T), traj, sub)
    except RadtrackError:
        return {"s": math.nan, "theta": math.nan}
    return {"s": b.var_s_upper / traj.s ** 2, "theta": b.var_theta_upper / traj.theta ** 2}


def run_trial(spec: ExperimentSpec, trial: int) -> list[TrialResult]:
    """All sweep points of one trial (one sensor field)."""
    traj = spec.trajectory
    truth = truth_params(traj)
    horizon = spec.time_span
    need = 3 if spec.is_linear else 6
    field = uniform_field(spec.extent, spec.field_size, np.random.default_rng([spec.master_seed, 0, trial]))
    exact_cache = None
    out = []
    for i, lam in enumerate(spec.lambda_T_values):
        rng = np.random.default_rng([spec.master_seed, 1, i, trial])
        dc = replace(spec.dc, lambda_T=lam)
        em = calibrated(spec.em, dc, spec.detect_radius) if spec.em.lambda_s is None else spec.em
        try:
            if spec.noise.mode is NoiseMode.PHOTON:
                records = simulate_transitions(traj, field, em, dc, horizon, spec.noise, rng=rng)
            else:
                # calibrated noise-free crossings do not depend on lambda_T; reuse them
                if exact_cache is None or spec.em.lambda_s is not None:
                    exact_cache = noise_free_transitions_batch(traj, field, em, dc, horizon)
                records = exact_cache
                if spec.noise.mode is NoiseMode.ERLANG and records:
                    times = erlang_times([[r.t_enter, r.t_leave] for r in records], lam, rng)
                    times.sort(axis=1)
                    records = [TransitionRecord(r.sensor_id, float(a), float(b))
                               for r, (a, b) in zip(records, times)]
            sim_error = None
        except RadtrackError as exc:
            records, sim_error = [], type(exc).__name__
        for n in spec.n_values:
            base = dict(trial_index=trial, sweep_index=i, lambda_T=lam, n_sensors=n, truth=truth,
                        n_triggered=len(records))
            if sim_error is not None:
                out.append(TrialResult(**base, failure=sim_error))
                continue
            chosen = select_closest(traj, field, records, n, horizon)
            if len(chosen) < need:
                out.append(TrialResult(**base, failure=InsufficientTriggers.__name__))
                continue
            try:
                est = _estimate(spec, chosen, field)
            except (RadtrackError, np.linalg.LinAlgError) as exc:
                out.append(TrialResult(**base, failure=type(exc).__name__))
                continue
            errs = relative_errors(est.params(), truth)
            if not all(math.isfinite(v) for v in errs.values()):
                out.append(TrialResult(**base, failure="NonFiniteEstimate"))
                continue
            out.append(TrialResult(**base, estimate=est, errors=errs, bound=_bound(spec, lam, chosen, field)))
    return out


def _run_block(args):
    spec, trials = args
    return [r for k in trials for r in run_trial(spec, k)]


def run_experiment(spec: ExperimentSpec) -> tuple[SweepSummary, list[TrialResult]]:
    """Run every trial of ``spec``; the output is a pure function of the spec."""
    trials = list(range(spec.trials))
    if spec.workers > 1 and spec.trials > 1:
        blocks = [trials[w::spec.workers] for w in range(spec.workers)]
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            results = [r for block in pool.map(_run_block, [(spec, b) for b in blocks]) for r in block]
    else:
        results = _run_block((spec, trials))
    results.sort(key=lambda r: (r.sweep_index, r.n_sensors, r.trial_index))
    return summarize(results), results
