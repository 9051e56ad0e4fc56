import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from radtrack.bounds import fisher_entries
from radtrack.estimate_linear import solve_ls
from radtrack.estimate_parabola import solve_parabola
from radtrack.model import LinearTrajectory, ParabolicTrajectory, SensorField
from radtrack.numerics import solve_least_squares
from radtrack.scenario import linear_records, parabola_records
from radtrack.signal import TransitionRecord

coord = st.floats(-800, 800)
speed = st.floats(5, 50)
angle = st.floats(0, 2 * math.pi, exclude_max=True)
seeds = st.integers(0, 2 ** 32 - 1)


def wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def dense_field(traj, seed, n=40):
    rng = np.random.default_rng(seed)
    q, r = rng.uniform(50, 1500, n), rng.uniform(-160, 160, n)
    u = np.array([math.sin(traj.theta), math.cos(traj.theta)])
    nrm = np.array([math.cos(traj.theta), -math.sin(traj.theta)])
    return SensorField.from_xy(np.array([traj.x_o, traj.y_o]) + np.outer(q, u) + np.outer(r, nrm))


@given(st.floats(-1e4, 1e4), st.floats(0, 1e3))
def test_record_midpoint(a, d):
    r = TransitionRecord(0, a, a + d)
    assert r.t_star == pytest.approx(a + d / 2, abs=1e-9)
    assert r.t_enter <= r.t_star <= r.t_leave


@settings(max_examples=60, deadline=None)
@given(coord, coord, speed, angle, seeds)
def test_linear_round_trip(x, y, s, th, seed):
    traj = LinearTrajectory(x, y, s, th)
    field = dense_field(traj, seed)
    recs = linear_records(traj, field, 170.0)
    assume(len(recs) >= 3)
    est = solve_ls(recs, field)
    assert est.s_hat == pytest.approx(s, rel=1e-8)
    assert abs(wrap(est.theta_hat - th)) < 1e-8
    assert est.x_o_hat == pytest.approx(x, abs=1e-6)
    assert est.y_o_hat == pytest.approx(y, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(coord, coord, speed, angle, seeds, angle, st.floats(-500, 500), st.floats(-500, 500))
def test_rigid_motion_equivariance(x, y, s, th, seed, phi, dx, dy):
    traj = LinearTrajectory(x, y, s, th)
    field = dense_field(traj, seed)
    recs = linear_records(traj, field, 170.0)
    assume(len(recs) >= 3)
    moved = field.rotated(phi).translated(dx, dy)
    est = solve_ls(recs, field)
    est2 = solve_ls(recs, moved)
    assert est2.s_hat == pytest.approx(est.s_hat, rel=1e-8)
    assert abs(wrap(est2.theta_hat - (est.theta_hat - phi))) < 1e-8
    c, sn = math.cos(phi), math.sin(phi)
    xe = c * est.x_o_hat - sn * est.y_o_hat + dx
    ye = sn * est.x_o_hat + c * est.y_o_hat + dy
    assert est2.x_o_hat == pytest.approx(xe, abs=1e-6)
    assert est2.y_o_hat == pytest.approx(ye, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-300, 300), st.floats(-300, 300), st.floats(-30, 30), st.floats(-30, 30),
       st.floats(0.05, 2.0), st.booleans(), seeds)
def test_parabola_round_trip(x, y, a, b, g, flip, seed):
    assume(abs(a) > 1.0)
    traj = ParabolicTrajectory(x, y, a, b, -g if flip else g)
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(5, 100, 30))
    px, py = traj.position(t)
    vx, vy = a + 0 * t, b + traj.gamma * t
    nv = np.hypot(vx, vy)
    off = rng.uniform(-150, 150, t.size)
    field = SensorField.from_xy(np.column_stack([px + off * vy / nv, py - off * vx / nv]))
    recs = parabola_records(traj, field, 170.0, (0.0, 120.0))
    assume(len(recs) >= 8)
    est = solve_parabola(recs, field)
    for k, v in est.params().items():
        truth = getattr(traj, k)
        assert abs(v - truth) <= 1e-4 * max(abs(truth), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 30), st.integers(1, 6), seeds)
def test_lsq_residual_orthogonal(n, k, seed):
    assume(n >= k)
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, k))
    y = rng.normal(size=n)
    rep = solve_least_squares(A, y)
    r = y - A @ rep.solution
    assert np.abs(A.T @ r).max() <= 1e-9 * (1 + np.abs(A).max() * np.abs(y).max() * n)


@settings(max_examples=60, deadline=None)
@given(coord, coord, speed, angle, seeds, st.floats(1.5, 1e4))
def test_fisher_psd(x, y, s, th, seed, lam):
    traj = LinearTrajectory(x, y, s, th)
    fs = fisher_entries(traj, dense_field(traj, seed, 10), lam)
    assert fs.D >= 0
    eig = np.linalg.eigvalsh(fs.matrix)
    assert eig.min() >= -1e-9 * eig.max()
