"""``radtrack`` command-line front end.

Subcommands: ``gen``, ``simulate``, ``estimate``, ``mc``, ``bounds``.

Exit codes: 0 success, 2 usage or parse error, 3 empty result, 4 numerical
degeneracy.  ``RADTRACK_SEED`` in the environment overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys


from . import io as rio
from .bounds import crlb_upper, finite_difference_fisher, fisher_entries, snr_db
from .errors import RadtrackError
from .estimate_linear import solve_ls, solve_minimal_3sensor
from .estimate_parabola import solve_parabola
from .mc import ExperimentSpec, relative_errors, run_experiment, truth_params
from .model import LinearTrajectory, ParabolicTrajectory
from .scenario import linear_records
from .signal import DetectionConfig, EmissionModel, NoiseMode, NoiseSpec, calibrated, simulate_transitions

EXIT_OK, EXIT_USAGE, EXIT_EMPTY, EXIT_DEGENERATE = 0, 2, 3, 4
FD_REL_TOL = 1e-3


class UsageError(Exception):
    pass


def _seed(flag: int | None, fallback: int) -> int:
    env = os.environ.get("RADTRACK_SEED")
    if env is not None and env.strip():
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"RADTRACK_SEED must be an integer, got {env!r}") from None
    else:
        value = fallback if flag is None else flag
    if not 0 <= value < 2 ** 64:
        raise UsageError("seed must be an unsigned 64-bit integer")
    return value


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _load(path: str) -> rio.Scenario:
    try:
        return rio.load_scenario(path)
    except OSError as exc:
        raise UsageError(f"cannot read scenario: {exc}") from None
    except rio.ScenarioError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _calibrated_em(sc: rio.Scenario) -> EmissionModel:
    return calibrated(sc.em, sc.dc, sc.radius) if sc.em.lambda_s is None else sc.em


def default_scenario(model: str, seed: int = 1, noise: str = "erlang", lambda_T: float = 10.0) -> rio.Scenario:
    """Reference set-up: 2 km square field, 170 m trigger radius, background 1/s, shielding 0.0068/m."""
    if model == "linear":
        traj = LinearTrajectory(-1000.0, 500.0, 30.0, math.pi / 4)
        count, span, n_sweep = 1000, (0.0, 60.0), (20, 50, 500)
    else:
        traj = ParabolicTrajectory(-1000.0, -1000.0, 29.89, 2.61, 0.82)
        count, span, n_sweep = 500, (0.0, 120.0), (20, 50, 200)
    return rio.Scenario(
        trajectory=traj, t_span=span,
        sensors=rio.SensorSpec(extent=2000.0, count=count, placement="uniform", seed=seed),
        em=EmissionModel(None, 0.0068, 1.0),
        dc=DetectionConfig(lambda_T, 1.0, 0.01), radius=170.0,
        noise=NoiseSpec(NoiseMode(noise), seed),
        sweep=rio.SweepSpec("lambda_T", (10.0, 100.0, 1000.0), n_sweep, 1000),
    )


def cmd_gen(args) -> int:
    sc = default_scenario(args.model, seed=_seed(args.seed, 1), noise=args.noise, lambda_T=args.lambda_T)
    _emit(rio.dump_scenario(sc), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _load(args.scenario)
    noise = NoiseSpec(sc.noise.mode, _seed(args.seed, sc.noise.seed))
    field = sc.field()
    try:
        records = simulate_transitions(sc.trajectory, field, _calibrated_em(sc), sc.dc, sc.t_span, noise)
    except RadtrackError as exc:
        print(f"simulate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    _emit(rio.transitions_csv(records, field, noise.mode), args.out)
    if not records:
        print("simulate: no sensor triggered", file=sys.stderr)
        return EXIT_EMPTY
    return EXIT_OK


def _estimate_rows(est, truth: dict | None):
    rows = []
    params = est.params()
    errs = relative_errors(params, truth) if truth else {}
    for name, value in params.items():
        rows.append((name, value, truth.get(name) if truth else None, errs.get(name)))
    for name, value in vars(est.diagnostics).items():
        rows.append((name, value, None, None))
    return rows


def cmd_estimate(args) -> int:
    try:
        with open(args.transitions, encoding="utf-8") as fh:
            records, field, _ = rio.read_transitions(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read transitions: {exc}") from None
    n = len(records)
    if args.model == "parabola":
        if n < 6:
            raise UsageError(f"the parabola solver needs at least 6 rows, got {n}")
        solver = solve_parabola
    elif args.solver == "minimal":
        if n != 3:
            raise UsageError(f"the minimal solver takes exactly 3 rows, got {n}")
        solver = solve_minimal_3sensor
    else:
        if n < 3:
            raise UsageError(f"the least-squares solver needs at least 3 rows, got {n}")
        solver = solve_ls
    truth = None
    if args.scenario:
        sc = _load(args.scenario)
        if sc.model != args.model:
            raise UsageError(f"scenario model {sc.model!r} does not match --model {args.model!r}")
        truth = truth_params(sc.trajectory)
    try:
        est = solver(records, field)
    except RadtrackError as exc:
        _emit(rio.write_rows(rio.ESTIMATE_HEADER, [("error", type(exc).__name__, None, None)]), args.out)
        print(f"estimate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    _emit(rio.write_rows(rio.ESTIMATE_HEADER, _estimate_rows(est, truth)), args.out)
    return EXIT_OK


def cmd_mc(args) -> int:
    sc = _load(args.scenario)
    if sc.sweep is None:
        raise UsageError("the scenario has no sweep block")
    if sc.sensors.explicit is not None:
        raise UsageError("Monte-Carlo runs need a generated sensor field (sensors.generate)")
    trials = sc.sweep.trials if args.trials is None else args.trials
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    spec = ExperimentSpec(
        trajectory=sc.trajectory, em=sc.em, dc=sc.dc,
        noise=sc.noise, lambda_T_values=sc.sweep.lambda_T_values, n_values=sc.sweep.n_sensors,
        trials=trials, master_seed=_seed(args.seed, sc.noise.seed), extent=sc.sensors.extent,
        n_field=sc.sensors.count, detect_radius=sc.radius, horizon=sc.t_span,
        sweep_param=sc.sweep.param, workers=args.workers)
    summary, _ = run_experiment(spec)
    label = dict(zip(sc.sweep.lambda_T_values, sc.sweep.values))
    rows = []
    for p in summary.points:
        for name, st in p.stats.items():
            rows.append((sc.sweep.param, label[p.lambda_T], p.n_sensors, name, st.median, st.mean, st.rmse,
                         p.fail_rate, p.bound.get(name, math.nan)))
    _emit(rio.write_rows(rio.MC_HEADER, rows), args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    sc = _load(args.scenario)
    if sc.model != "linear":
        raise UsageError("bounds are only defined for linear trajectories")
    traj = sc.trajectory.at_origin_time(0.0)
    field = sc.field()
    triggered = linear_records(traj, field, sc.radius, sc.t_span)
    if not triggered:
        print("bounds: no sensor triggered", file=sys.stderr)
        return EXIT_EMPTY
    sub = field.subset([r.sensor_id for r in triggered])
    try:
        fs = fisher_entries(traj, sub, sc.dc.lambda_T)
        cb = crlb_upper(fs, traj, sub)
    except RadtrackError as exc:
        _emit(rio.write_rows(rio.BOUNDS_HEADER, [("error", type(exc).__name__)]), args.out)
        print(f"bounds: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    rows = [("n_sensors", fs.n), ("F_ss", fs.F_ss), ("F_stheta", fs.F_stheta), ("F_thetatheta", fs.F_thetatheta),
            ("D", fs.D), ("var_s_upper", cb.var_s_upper), ("var_theta_upper", cb.var_theta_upper),
            ("snr_db", snr_db(sc.dc.lambda_T))]
    status = EXIT_OK
    if args.verify_fd:
        fd = finite_difference_fisher(traj, sub, sc.dc.lambda_T)
        scale = math.sqrt(fs.F_ss * fs.F_thetatheta)
        ok = (abs(fd[0, 0] - fs.F_ss) <= FD_REL_TOL * fs.F_ss
              and abs(fd[1, 1] - fs.F_thetatheta) <= FD_REL_TOL * fs.F_thetatheta
              and abs(fd[0, 1] - fs.F_stheta) <= FD_REL_TOL * scale)
        rows += [("fd_F_ss", fd[0, 0]), ("fd_F_stheta", fd[0, 1]), ("fd_F_thetatheta", fd[1, 1]),
                 ("fd_check", "PASS" if ok else "FAIL")]
        status = EXIT_OK if ok else EXIT_DEGENERATE
    _emit(rio.write_rows(rio.BOUNDS_HEADER, rows), args.out)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radtrack", description="Track a radiation source with binary proximity sensors.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a reference scenario file")
    g.add_argument("--model", choices=("linear", "parabola"), required=True)
    g.add_argument("--noise", choices=[m.value for m in NoiseMode], default="erlang")
    g.add_argument("--lambda-T", dest="lambda_T", type=float, default=10.0)
    g.add_argument("--seed", type=int, help="sensor placement and noise seed (default 1)")
    g.add_argument("--out", help="output file (default: stdout)")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("simulate", help="simulate transition times for one scenario")
    s.add_argument("scenario")
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate the trajectory from a transitions table")
    e.add_argument("transitions")
    e.add_argument("--model", choices=("linear", "parabola"), required=True)
    e.add_argument("--solver", choices=("minimal", "ls"), default="ls")
    e.add_argument("--scenario", help="scenario holding the true trajectory, for error columns")
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    m = sub.add_parser("mc", help="Monte-Carlo sweep over the scenario's sweep block")
    m.add_argument("scenario")
    m.add_argument("--out")
    m.add_argument("--trials", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--workers", type=int, default=1)
    m.set_defaults(func=cmd_mc)

    b = sub.add_parser("bounds", help="Fisher entries and variance bounds for a linear scenario")
    b.add_argument("scenario")
    b.add_argument("--out")
    b.add_argument("--verify-fd", action="store_true", help="cross-check Fisher entries by finite differences")
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"radtrack {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
