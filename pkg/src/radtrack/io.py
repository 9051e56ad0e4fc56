"""Scenario files (YAML, schema version 1) and the CSV tables written by the CLI.

Scenario layout::

    schema_version: 1
    trajectory:
      model: linear                  # or parabola
      params: {s: 30.0, theta: 45deg, x_o: -1000.0, y_o: 500.0}
      t_span: [0.0, 60.0]
    sensors:                         # exactly one of `generate` / `list`
      generate: {extent: 2000.0, count: 1000, placement: uniform, seed: 1}
      # list: [[id, x, y], ...]
    emission: {alpha_s: 0.0068, lambda_b: 1.0, lambda_s: null}   # null: calibrate to `radius`
    detection: {lambda_T: 10.0, window: 1.0, slide_step: 0.01, radius: 170.0}
    noise: {mode: erlang, seed: 0}   # noise_free | erlang | photon
    sweep:                           # optional, used by `mc`
      lambda_T: [10, 100, 1000]      # or snr_db: [...]
      n_sensors: [20, 50, 500]
      trials: 1000

Angles may be written in degrees with a ``deg`` suffix; they are stored and
written back in radians.  Floats are written with ``repr`` so every file
round-trips exactly.
"""

from __future__ import annotations

import csv
import io as _io
import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import yaml

from .model import LinearTrajectory, ParabolicTrajectory, Sensor, SensorField, Trajectory
from .scenario import uniform_field
from .signal import DetectionConfig, EmissionModel, NoiseMode, NoiseSpec, TransitionRecord

SCHEMA_VERSION = 1
TRANSITIONS_HEADER = ("sensor_id", "x", "y", "t_enter", "t_leave", "t_star", "mode")
ESTIMATE_HEADER = ("param", "value", "truth", "rel_error")
MC_HEADER = ("sweep_param", "sweep_value", "n_sensors", "param", "median_err", "mean_err", "rmse",
             "fail_rate", "bound")
BOUNDS_HEADER = ("name", "value")

LINEAR_KEYS = ("s", "theta", "x_o", "y_o")
PARABOLA_KEYS = ("alpha", "beta", "gamma", "x_o", "y_o")
_DEG = re.compile(r"^\s*([-+0-9.eE]+)\s*deg\s*$")


class ScenarioError(ValueError):
    """Malformed scenario; the message names the field and, when known, the line."""


@dataclass(frozen=True)
class SensorSpec:
    extent: float | None = None
    count: int | None = None
    placement: str = "uniform"
    seed: int | None = None
    explicit: tuple | None = None  # ((id, x, y), ...)

    def build(self) -> SensorField:
        if self.explicit is not None:
            return SensorField(tuple(Sensor(int(i), float(x), float(y)) for i, x, y in self.explicit))
        return uniform_field(self.extent, self.count, np.random.default_rng(self.seed))


@dataclass(frozen=True)
class SweepSpec:
    param: str  # "lambda_T" or "snr_db"
    values: tuple
    n_sensors: tuple
    trials: int

    @property
    def lambda_T_values(self) -> tuple:
        if self.param == "snr_db":
            return tuple(10.0 ** (v / 10.0) for v in self.values)
        return tuple(self.values)


@dataclass(frozen=True)
class Scenario:
    trajectory: Trajectory
    t_span: tuple
    sensors: SensorSpec
    em: EmissionModel
    dc: DetectionConfig
    radius: float
    noise: NoiseSpec
    sweep: SweepSpec | None = None

    @property
    def model(self) -> str:
        return "linear" if isinstance(self.trajectory, LinearTrajectory) else "parabola"

    def field(self) -> SensorField:
        return self.sensors.build()


def _line_of(root, path: Sequence[str]) -> int | None:
    node = root
    line = None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == key:
                    node, line = v, v.start_mark.line + 1
                    break
            else:
                return line
        else:
            return line
    return line


class _Reader:
    def __init__(self, data, root):
        self.data, self.root = data, root

    def fail(self, path, msg):
        line = _line_of(self.root, path) if self.root is not None else None
        where = ".".join(path) + (f" (line {line})" if line else "")
        raise ScenarioError(f"{where}: {msg}")

    def get(self, path, required=True, default=None):
        node = self.data
        for i, key in enumerate(path):
            if not isinstance(node, dict):
                self.fail(path[:i], "expected a mapping")
            if key not in node:
                if required:
                    self.fail(path, "missing required field")
                return default
            node = node[key]
        return node

    def real(self, path, required=True, default=None, angle=False, positive=False, nonneg=False):
        raw = self.get(path, required, default)
        if raw is None:
            return None
        if angle and isinstance(raw, str):
            m = _DEG.match(raw)
            if not m:
                self.fail(path, f"cannot read angle {raw!r}; use radians or a 'deg' suffix")
            value = math.radians(float(m.group(1)))
        elif isinstance(raw, bool) or not isinstance(raw, (int, float)):
            self.fail(path, f"expected a number, got {raw!r}")
        else:
            value = float(raw)
        if not math.isfinite(value):
            self.fail(path, "must be finite")
        if positive and not value > 0:
            self.fail(path, "must be positive")
        if nonneg and value < 0:
            self.fail(path, "must be non-negative")
        return value

    def integer(self, path, required=True, default=None, minimum=None):
        raw = self.get(path, required, default)
        if raw is None:
            return None
        if isinstance(raw, bool) or not isinstance(raw, int):
            self.fail(path, f"expected an integer, got {raw!r}")
        if minimum is not None and raw < minimum:
            self.fail(path, f"must be >= {minimum}")
        return raw


def parse_scenario(text: str) -> Scenario:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping at the top level")
    r = _Reader(data, root)
    version = r.get(("schema_version",))
    if version != SCHEMA_VERSION:
        r.fail(("schema_version",), f"unsupported version {version!r}; expected {SCHEMA_VERSION}")

    model = r.get(("trajectory", "model"))
    if model not in ("linear", "parabola"):
        r.fail(("trajectory", "model"), f"unknown model {model!r}")
    keys = LINEAR_KEYS if model == "linear" else PARABOLA_KEYS
    params = r.get(("trajectory", "params"))
    if not isinstance(params, dict):
        r.fail(("trajectory", "params"), "expected a mapping")
    extra = set(params) - set(keys)
    if extra:
        r.fail(("trajectory", "params"), f"unexpected keys {sorted(extra)}")
    vals = {k: r.real(("trajectory", "params", k), angle=(k == "theta")) for k in keys}
    try:
        traj = LinearTrajectory(**vals) if model == "linear" else ParabolicTrajectory(**vals)
    except ValueError as exc:
        r.fail(("trajectory", "params"), str(exc))
    span = r.get(("trajectory", "t_span"))
    if not (isinstance(span, list) and len(span) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in span)):
        r.fail(("trajectory", "t_span"), "expected [start, end]")
    t_span = (float(span[0]), float(span[1]))
    if not t_span[0] < t_span[1]:
        r.fail(("trajectory", "t_span"), "start must precede end")

    sensors = r.get(("sensors",))
    if not isinstance(sensors, dict) or (("generate" in sensors) == ("list" in sensors)):
        r.fail(("sensors",), "give exactly one of 'generate' or 'list'")
    if "generate" in sensors:
        placement = r.get(("sensors", "generate", "placement"), required=False, default="uniform")
        if placement != "uniform":
            r.fail(("sensors", "generate", "placement"), f"unsupported placement {placement!r}")
        spec = SensorSpec(extent=r.real(("sensors", "generate", "extent"), positive=True),
                          count=r.integer(("sensors", "generate", "count"), minimum=1),
                          placement=placement,
                          seed=r.integer(("sensors", "generate", "seed"), minimum=0))
    else:
        rows = sensors["list"]
        if not isinstance(rows, list) or not rows:
            r.fail(("sensors", "list"), "expected a non-empty list of [id, x, y]")
        parsed = []
        for row in rows:
            if not (isinstance(row, list) and len(row) == 3 and isinstance(row[0], int)
                    and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row[1:])):
                r.fail(("sensors", "list"), f"bad sensor row {row!r}")
            parsed.append((row[0], float(row[1]), float(row[2])))
        spec = SensorSpec(explicit=tuple(parsed))
        try:
            spec.build()
        except ValueError as exc:
            r.fail(("sensors", "list"), str(exc))

    em = EmissionModel(lambda_s=r.real(("emission", "lambda_s"), required=False, positive=True),
                       alpha_s=r.real(("emission", "alpha_s"), nonneg=True),
                       lambda_b=r.real(("emission", "lambda_b"), nonneg=True))
    try:
        dc = DetectionConfig(lambda_T=r.real(("detection", "lambda_T"), positive=True),
                             window=r.real(("detection", "window"), required=False, default=1.0, nonneg=True),
                             slide_step=r.real(("detection", "slide_step"), required=False, default=0.01,
                                               positive=True))
    except ValueError as exc:
        r.fail(("detection",), str(exc))
    if dc.lambda_T <= em.lambda_b:
        r.fail(("detection", "lambda_T"), "must exceed the background rate lambda_b")
    radius = r.real(("detection", "radius"), positive=True)

    mode = r.get(("noise", "mode"))
    try:
        mode = NoiseMode(mode)
    except ValueError:
        r.fail(("noise", "mode"), f"unknown mode {mode!r}")
    noise = NoiseSpec(mode, r.integer(("noise", "seed"), required=False, default=0, minimum=0))

    sweep = None
    if "sweep" in data:
        block = r.get(("sweep",))
        if not isinstance(block, dict) or (("lambda_T" in block) == ("snr_db" in block)):
            r.fail(("sweep",), "give exactly one of 'lambda_T' or 'snr_db'")
        param = "lambda_T" if "lambda_T" in block else "snr_db"
        values = r.get(("sweep", param))
        ns = r.get(("sweep", "n_sensors"))
        for name, lst in ((param, values), ("n_sensors", ns)):
            if not isinstance(lst, list) or not lst:
                r.fail(("sweep", name), "expected a non-empty list")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            r.fail(("sweep", param), "expected numbers")
        if not all(isinstance(v, int) and v >= 1 for v in ns):
            r.fail(("sweep", "n_sensors"), "expected positive integers")
        sweep = SweepSpec(param, tuple(float(v) for v in values), tuple(ns),
                          r.integer(("sweep", "trials"), minimum=1))
        if any(lam <= em.lambda_b for lam in sweep.lambda_T_values):
            r.fail(("sweep", param), "every threshold must exceed lambda_b")
    return Scenario(traj, t_span, spec, em, dc, radius, noise, sweep)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def scenario_to_dict(sc: Scenario) -> dict:
    tr = sc.trajectory
    keys = LINEAR_KEYS if sc.model == "linear" else PARABOLA_KEYS
    if sc.sensors.explicit is not None:
        sensors = {"list": [[int(i), float(x), float(y)] for i, x, y in sc.sensors.explicit]}
    else:
        sensors = {"generate": {"extent": float(sc.sensors.extent), "count": int(sc.sensors.count),
                                "placement": sc.sensors.placement, "seed": int(sc.sensors.seed)}}
    out = {
        "schema_version": SCHEMA_VERSION,
        "trajectory": {"model": sc.model, "params": {k: float(getattr(tr, k)) for k in keys},
                       "t_span": [float(sc.t_span[0]), float(sc.t_span[1])]},
        "sensors": sensors,
        "emission": {"alpha_s": float(sc.em.alpha_s), "lambda_b": float(sc.em.lambda_b),
                     "lambda_s": None if sc.em.lambda_s is None else float(sc.em.lambda_s)},
        "detection": {"lambda_T": float(sc.dc.lambda_T), "window": float(sc.dc.window),
                      "slide_step": float(sc.dc.slide_step), "radius": float(sc.radius)},
        "noise": {"mode": sc.noise.mode.value, "seed": int(sc.noise.seed)},
    }
    if sc.sweep is not None:
        out["sweep"] = {sc.sweep.param: [float(v) for v in sc.sweep.values],
                        "n_sensors": [int(n) for n in sc.sweep.n_sensors], "trials": int(sc.sweep.trials)}
    return out


def dump_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(sc), sort_keys=False, default_flow_style=None)


def fmt(value) -> str:
    """Full-precision text for a CSV cell; ``None`` becomes an empty cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_rows(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_rows(text: str, header: Sequence[str]) -> list[dict]:
    reader = csv.DictReader(_io.StringIO(text))
    if tuple(reader.fieldnames or ()) != tuple(header):
        raise ValueError(f"unexpected CSV header {reader.fieldnames}; expected {list(header)}")
    return list(reader)


def _num(cell: str) -> float:
    return math.nan if cell == "" else float(cell)


def transitions_csv(records: Sequence[TransitionRecord], field: SensorField, mode: NoiseMode) -> str:
    rows = []
    for r in records:
        s = field.by_id(r.sensor_id)
        te = r.t_enter if r.has_chord else None
        tl = r.t_leave if r.has_chord else None
        rows.append((r.sensor_id, s.x, s.y, te, tl, r.t_star, NoiseMode(mode).value))
    return write_rows(TRANSITIONS_HEADER, rows)


def read_transitions(text: str) -> tuple[list[TransitionRecord], SensorField, list[str]]:
    """Records, the sensor field they reference, and the per-row noise mode."""
    rows = read_rows(text, TRANSITIONS_HEADER)
    records, sensors, modes = [], [], []
    for row in rows:
        sid = int(row["sensor_id"])
        sensors.append(Sensor(sid, float(row["x"]), float(row["y"])))
        te, tl = _num(row["t_enter"]), _num(row["t_leave"])
        if math.isfinite(te) and math.isfinite(tl):
            records.append(TransitionRecord(sid, te, tl))
        else:
            records.append(TransitionRecord.from_star(sid, float(row["t_star"])))
        modes.append(row["mode"])
    return records, SensorField(tuple(sensors)), modes
