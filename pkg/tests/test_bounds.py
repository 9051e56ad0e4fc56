import math

import numpy as np
import pytest

from radtrack.bounds import (crlb_upper, exact_crlb, finite_difference_fisher, fisher_entries, log_likelihood,
                             snr_db, track_coordinates)
from radtrack.errors import DegenerateD, DomainError
from radtrack.model import LinearTrajectory, SensorField
from radtrack.signal import TransitionRecord

from conftest import REF_LINE


def field_along(traj, q, r):
    u = np.array([math.sin(traj.theta), math.cos(traj.theta)])
    nrm = np.array([math.cos(traj.theta), -math.sin(traj.theta)])
    return SensorField.from_xy(np.array([traj.x_o, traj.y_o]) + np.outer(q, u) + np.outer(r, nrm))


def random_config(rng, n=None):
    traj = LinearTrajectory(*rng.uniform(-500, 500, 2), rng.uniform(5, 50), rng.uniform(0, 2 * math.pi))
    n = int(rng.integers(3, 80)) if n is None else n
    return traj, field_along(traj, rng.uniform(20, 1500, n), rng.uniform(-170, 170, n))


def exact_records(traj, field):
    q, _ = track_coordinates(traj, field.positions)
    return [TransitionRecord.from_star(i, traj.t_o + qj / traj.s) for i, qj in zip(field.ids, q)]


def literal_double_sum(traj, field):
    """D evaluated term by term over ordered pairs j != k."""
    xy = field.positions - [traj.x_o, traj.y_o]
    st, ct = math.sin(traj.theta), math.cos(traj.theta)
    total = 0.0
    for j in range(len(xy)):
        for k in range(len(xy)):
            if k == j:
                continue
            qj = xy[j, 0] * st + xy[j, 1] * ct
            qk = xy[k, 0] * st + xy[k, 1] * ct
            rj = xy[j, 0] * ct - xy[j, 1] * st
            cross = xy[j, 0] * xy[k, 1] - xy[j, 1] * xy[k, 0]
            total += rj / qj ** 2 * cross / qk
    return total


def test_f_ss_example():
    traj, field = random_config(np.random.default_rng(0), n=20)
    traj = LinearTrajectory(traj.x_o, traj.y_o, 30.0, traj.theta)
    field = field_along(traj, np.linspace(100, 900, 20), np.linspace(-100, 120, 20))
    fs = fisher_entries(traj, field, 100.0)
    assert fs.F_ss == pytest.approx(2 * 20 * 100 / 900)
    assert fs.F_ss == pytest.approx(4.4444, abs=1e-4)
    fd = finite_difference_fisher(traj, field, 100.0)
    assert fd[0, 0] == pytest.approx(fs.F_ss, rel=1e-3)


def test_mirror_pair_cancels_cross_term():
    fs = fisher_entries(REF_LINE, field_along(REF_LINE, [400.0, 400.0], [60.0, -60.0]), 10.0)
    assert fs.F_stheta == pytest.approx(0.0, abs=1e-12)


def test_fisher_matches_finite_differences(rng):
    for _ in range(10):
        traj, field = random_config(rng)
        lam = float(rng.choice([10.0, 100.0, 1000.0]))
        fs = fisher_entries(traj, field, lam)
        fd = finite_difference_fisher(traj, field, lam)
        assert fd[0, 0] == pytest.approx(fs.F_ss, rel=1e-3)
        assert fd[1, 1] == pytest.approx(fs.F_thetatheta, rel=1e-3)
        assert abs(fd[0, 1] - fs.F_stheta) <= 1e-3 * math.sqrt(fs.F_ss * fs.F_thetatheta)


def test_D_equals_printed_double_sum(rng):
    for _ in range(5):
        traj, field = random_config(rng, n=25)
        assert fisher_entries(traj, field, 10.0).D == pytest.approx(literal_double_sum(traj, field), rel=1e-9)


def test_bounds_scale_and_sign(rng):
    for _ in range(100):
        traj, field = random_config(rng)
        fs1 = fisher_entries(traj, field, 50.0)
        fs2 = fisher_entries(traj, field, 100.0)
        b1, b2 = crlb_upper(fs1, traj, field), crlb_upper(fs2, traj, field)
        assert b1.var_theta_upper > 0 and b1.var_s_upper > 0
        assert b2.var_s_upper * 2 == pytest.approx(b1.var_s_upper, rel=1e-14)
        assert b2.var_theta_upper * 2 == pytest.approx(b1.var_theta_upper, rel=1e-14)
        assert np.linalg.eigvalsh(fs1.matrix).min() >= -1e-9 * np.abs(fs1.matrix).max()


def test_relation_to_exact_crlb(rng):
    traj, field = random_config(rng, n=40)
    fs = fisher_entries(traj, field, 100.0)
    b = crlb_upper(fs, traj, field)
    inv = exact_crlb(fs)
    assert b.var_s_upper == pytest.approx(inv[0, 0], rel=1e-9)
    assert b.var_theta_upper * fs.n == pytest.approx(inv[1, 1], rel=1e-9)


def test_permutation_invariance(rng):
    traj, field = random_config(rng, n=30)
    perm = SensorField(tuple(field.sensors[i] for i in rng.permutation(len(field))))
    a, b = fisher_entries(traj, field, 10.0), fisher_entries(traj, perm, 10.0)
    assert a.F_ss == b.F_ss
    assert a.F_stheta == pytest.approx(b.F_stheta, rel=1e-12)
    assert a.F_thetatheta == pytest.approx(b.F_thetatheta, rel=1e-12)


def test_degenerate_D():
    on_line = field_along(REF_LINE, [300.0, 600.0, 900.0], [0.0, 0.0, 0.0])
    fs = fisher_entries(REF_LINE, on_line, 10.0)
    with pytest.raises(DegenerateD):
        crlb_upper(fs, REF_LINE, on_line)


def test_domain_error_behind_start():
    field = field_along(REF_LINE, [-50.0, 300.0, 600.0], [10.0, 20.0, -30.0])
    with pytest.raises(DomainError):
        fisher_entries(REF_LINE, field, 10.0)
    recs = [TransitionRecord.from_star(i, 5.0) for i in field.ids]
    with pytest.raises(DomainError):
        log_likelihood(REF_LINE, recs, field, 10.0)


def test_likelihood_peaks_at_true_speed():
    field = field_along(REF_LINE, [450.0], [80.0])
    recs = exact_records(REF_LINE, field)
    speeds = np.linspace(20, 40, 2001)
    ll = [log_likelihood(LinearTrajectory(REF_LINE.x_o, REF_LINE.y_o, s, REF_LINE.theta), recs, field, 10.0)
          for s in speeds]
    assert speeds[int(np.argmax(ll))] == pytest.approx(30.0, abs=0.01)
    # stretching every time by c moves the maximiser to s / c
    c = 1.5
    stretched = [TransitionRecord.from_star(r.sensor_id, c * r.t_star) for r in recs]
    ll = [log_likelihood(LinearTrajectory(REF_LINE.x_o, REF_LINE.y_o, s, REF_LINE.theta), stretched, field, 10.0)
          for s in speeds]
    assert speeds[int(np.argmax(ll))] == pytest.approx(30.0 / c, abs=0.01)


def test_likelihood_gradient_vanishes_at_truth(rng):
    traj, field = random_config(rng, n=30)
    recs = exact_records(traj, field)
    h = 1e-6

    def ll(s, th):
        return log_likelihood(LinearTrajectory(traj.x_o, traj.y_o, s, th), recs, field, 100.0)

    g_s = (ll(traj.s + h, traj.theta) - ll(traj.s - h, traj.theta)) / (2 * h)
    g_t = (ll(traj.s, traj.theta + h) - ll(traj.s, traj.theta - h)) / (2 * h)
    fs = fisher_entries(traj, field, 100.0)
    assert abs(g_s) <= 1e-4 * fs.F_ss * traj.s
    assert abs(g_t) <= 1e-4 * fs.F_thetatheta


def test_snr_db():
    assert snr_db(100.0) == pytest.approx(20.0)
    assert snr_db(1.0) == 0.0
    assert snr_db(10.0) == pytest.approx(10.0)


@pytest.fixture(scope="module")
def heading_mc():
    from radtrack.mc import ExperimentSpec, run_experiment
    spec = ExperimentSpec(trajectory=REF_LINE, lambda_T_values=(100.0,), n_values=(500,), trials=1000, master_seed=11)
    summary, _ = run_experiment(spec)
    p = summary.point(100.0, 500)
    return p.stats["theta"].rmse ** 2, p.bound["theta"]


@pytest.mark.xfail(strict=True, reason="var_theta_upper is the exact bound divided by n; the MSE sits ~100x above it")
def test_heading_mse_within_factor_10_of_upper_bound(heading_mc):
    mse, bound = heading_mc
    assert bound / 10 <= mse <= 10 * bound


def test_heading_mse_within_factor_10_of_exact_bound(heading_mc):
    mse, bound = heading_mc
    exact = 500 * bound
    assert exact / 10 <= mse <= 10 * exact
