"""Fisher information and error-variance bounds for the speed and heading of a line.

Each midpoint time ``t_j - t_o`` is modelled as Erlang with shape
``K = 2 lambda_T`` and mean ``mu_j = q_j / s``, where ``q_j`` is the
along-track distance from the start point to sensor ``j``'s foot point and
``r_j`` its cross-track offset:

    q_j = (x_j - x_o) sin th + (y_j - y_o) cos th
    r_j = (x_j - x_o) cos th - (y_j - y_o) sin th

Only the ``(s, theta)`` block is provided: the start point is not
identifiable from closest-approach times alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateD, DomainError
from .model import LinearTrajectory, SensorField
from .signal import TransitionRecord

D_TOL = 1e-12


@dataclass(frozen=True)
class FisherSummary:
    F_ss: float
    F_stheta: float
    F_thetatheta: float
    D: float
    n: int
    lambda_T: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.F_ss, self.F_stheta], [self.F_stheta, self.F_thetatheta]])


@dataclass(frozen=True)
class CrlbBounds:
    var_s_upper: float
    var_theta_upper: float


def track_coordinates(traj: LinearTrajectory, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Along-track ``q`` and cross-track ``r`` coordinates of each sensor."""
    dx = xy[:, 0] - traj.x_o
    dy = xy[:, 1] - traj.y_o
    sin_t, cos_t = math.sin(traj.theta), math.cos(traj.theta)
    return dx * sin_t + dy * cos_t, dx * cos_t - dy * sin_t


def _ratios(traj: LinearTrajectory, field: SensorField) -> np.ndarray:
    q, r = track_coordinates(traj, field.positions)
    if np.any(q <= 0):
        raise DomainError("some sensors lie behind the start point (non-positive closest-approach delay)")
    return r / q


def log_likelihood(traj: LinearTrajectory, records: Sequence[TransitionRecord], field: SensorField,
                   lambda_T: float) -> float:
    """Erlang log-likelihood of the observed midpoint times under the line ``traj``.

    ``n log(K**K / (K - 1)) + (K - 1) sum log(t_j - t_o) - K sum log(q_j / s) - K sum s (t_j - t_o) / q_j``
    with ``K = 2 lambda_T``.
    """
    k = 2.0 * lambda_T
    xy = field.locate([r.sensor_id for r in records])
    dt = np.array([r.t_star for r in records]) - traj.t_o
    q, _ = track_coordinates(traj, xy)
    if np.any(q <= 0):
        raise DomainError("non-positive closest-approach distance along the track")
    if np.any(dt <= 0):
        raise DomainError("observed times must follow the start time")
    n = len(records)
    const = n * (k * math.log(k) - math.log(k - 1.0))
    return float(const + (k - 1.0) * np.sum(np.log(dt)) - k * np.sum(np.log(q / traj.s))
                 - k * np.sum(traj.s * dt / q))


def fisher_entries(traj: LinearTrajectory, field: SensorField, lambda_T: float) -> FisherSummary:
    rho = _ratios(traj, field)
    k = 2.0 * lambda_T
    n = len(rho)
    # the double sum over ordered pairs j != k collapses to n * sum(rho**2) - sum(rho)**2
    D = float(n * np.sum(rho * rho) - np.sum(rho) ** 2)
    return FisherSummary(F_ss=n * k / traj.s ** 2,
                         F_stheta=float(-k / traj.s * np.sum(rho)),
                         F_thetatheta=float(k * np.sum(rho * rho)),
                         D=D, n=n, lambda_T=float(lambda_T))


def crlb_upper(fs: FisherSummary, traj: LinearTrajectory, field: SensorField) -> CrlbBounds:
    """Upper bounds on the achievable error variance of ``s`` and ``theta``.

    ``var_s <= s**2 sum(rho**2) / (2 D lambda_T)`` and ``var_theta <= 1 / (2 D lambda_T)``.
    Both carry an explicit ``1/lambda_T`` factor; ``D`` does not depend on it.
    """
    if abs(fs.D) < D_TOL:
        raise DegenerateD(f"|D| = {abs(fs.D):.3e}: sensors give no heading information")
    rho = _ratios(traj, field)
    denom = 2.0 * fs.D * fs.lambda_T
    return CrlbBounds(var_s_upper=float(traj.s ** 2 * np.sum(rho * rho) / denom),
                      var_theta_upper=1.0 / denom)


def exact_crlb(fs: FisherSummary) -> np.ndarray:
    """Inverse of the 2x2 Fisher block (the Cramér-Rao lower bound itself)."""
    return np.linalg.inv(fs.matrix)


def snr_db(lambda_T: float) -> float:
    """SNR of a threshold count ``lambda_T`` in dB: ``20 log10(sqrt(lambda_T))``."""
    if not lambda_T > 0:
        raise ValueError("lambda_T must be positive")
    return 10.0 * math.log10(lambda_T)


def finite_difference_fisher(traj: LinearTrajectory, field: SensorField, lambda_T: float,
                             rel_step: float = 1e-4) -> np.ndarray:
    """Negated central-difference Hessian of the log-likelihood in ``(s, theta)``.

    The data are the exact closest-approach delays.  The log-likelihood is
    linear in the data, so at these points the Hessian equals its
    expectation.
    """
    recs = [TransitionRecord.from_star(sid, traj.t_o + qj / traj.s)
            for sid, qj in zip(field.ids, track_coordinates(traj, field.positions)[0])]
    steps = np.array([rel_step * traj.s, rel_step])

    def ll(p):
        return log_likelihood(LinearTrajectory(traj.x_o, traj.y_o, p[0], p[1], traj.t_o), recs, field, lambda_T)

    p0 = np.array([traj.s, traj.theta])
    H = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            ei = np.eye(2)[i] * steps[i]
            ej = np.eye(2)[j] * steps[j]
            H[i, j] = (ll(p0 + ei + ej) - ll(p0 + ei - ej) - ll(p0 - ei + ej) + ll(p0 - ei - ej)) / (4 * steps[i] * steps[j])
    return -0.5 * (H + H.T)
