"""Recovering a parabolic pass ``x = x_o + alpha t``, ``y = y_o + beta t + gamma t**2 / 2``.

At the closest-approach time ``t_j`` of sensor ``j`` the velocity is
orthogonal to the sensor-to-source vector.  Dividing that condition by
``gamma`` leaves an equation that is linear in six combinations of the
parameters:

    X1 + X2 t**3 + X3 t**2 + X4 t + X5 x_j + X6 y_j = y_j t

    X1 = (alpha x_o + beta y_o) / gamma     X2 = gamma / 2
    X3 = 3 beta / 2                         X4 = (alpha**2 + beta**2) / gamma + y_o
    X5 = -alpha / gamma                     X6 = -beta / gamma

Six sensors give a square system and more give least squares.  Only the
closest-approach times are used; chord lengths are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometry, GammaNearZero, RankDeficient, RepeatedTimes
from .model import ParabolicTrajectory, SensorField
from .numerics import DEFAULT_NUMERICS, solve_least_squares
from .signal import TransitionRecord

GAMMA_TOL = 1e-12
RATIO_TOL = 1e-12


@dataclass(frozen=True)
class ParabolaDiagnostics:
    condition_A3: float
    genericity_det: float  # NaN unless exactly six records were used
    n_used: int


@dataclass(frozen=True)
class ParabolaEstimate:
    alpha_hat: float
    beta_hat: float
    gamma_hat: float
    x_o_hat: float
    y_o_hat: float
    diagnostics: ParabolaDiagnostics

    @property
    def trajectory(self) -> ParabolicTrajectory:
        return ParabolicTrajectory(self.x_o_hat, self.y_o_hat, self.alpha_hat, self.beta_hat, self.gamma_hat)

    def params(self) -> dict[str, float]:
        return {"alpha": self.alpha_hat, "beta": self.beta_hat, "gamma": self.gamma_hat,
                "x_o": self.x_o_hat, "y_o": self.y_o_hat}


def design_matrix(t: np.ndarray, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(A3, Y3)`` with rows ``[1, t**3, t**2, t, x, y]`` and right-hand side ``y t``."""
    t = np.asarray(t, dtype=float)
    A = np.column_stack([np.ones_like(t), t ** 3, t ** 2, t, xy[:, 0], xy[:, 1]])
    return A, xy[:, 1] * t


def parameters_from_solution(X) -> tuple[float, float, float, float, float]:
    """Map the six linear unknowns back to ``(alpha, beta, gamma, x_o, y_o)``."""
    X1, X2, _, X4, X5, X6 = (float(v) for v in X)
    gamma = 2.0 * X2
    alpha = -2.0 * X2 * X5
    beta = -2.0 * X2 * X6
    y_o = X4 - 2.0 * X2 * (X5 * X5 + X6 * X6)
    x_o = -(X1 + y_o * X6) / X5
    return alpha, beta, gamma, x_o, y_o


def _looks_linear(t: np.ndarray, xy: np.ndarray) -> bool:
    # a straight pass makes t* exactly affine in the sensor coordinates
    A = np.column_stack([np.ones_like(t), xy])
    coef, *_ = np.linalg.lstsq(A, t, rcond=None)
    return float(np.linalg.norm(A @ coef - t)) <= 1e-9 * float(np.linalg.norm(t))


def solve_parabola(records: Sequence[TransitionRecord], field: SensorField,
                   rank_tol: float = DEFAULT_NUMERICS.rank_tol) -> ParabolaEstimate:
    """Least-squares parabola from ``n >= 6`` closest-approach times (t_o = 0).

    Raises
    ------
    GammaNearZero
        The data are consistent with a straight line; use the linear pipeline.
    DegenerateGeometry
        ``alpha / gamma`` vanishes, so ``x_o`` cannot be recovered.
    RankDeficient
        The sensor/time configuration does not determine the six unknowns.
    """
    if len(records) < 6:
        raise ValueError(f"need at least 6 transition records, got {len(records)}")
    ids = [r.sensor_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValueError("each sensor may contribute only one transition record")
    xy = field.locate(ids)
    t = np.array([r.t_star for r in records])
    A, Y = design_matrix(t, xy)
    try:
        rep = solve_least_squares(A, Y, rank_tol=rank_tol, refine=2)
    except RankDeficient:
        if _looks_linear(t, xy):
            raise GammaNearZero("closest-approach times are affine in position: the pass is straight")
        raise
    X = rep.solution
    if abs(X[1]) * np.linalg.norm(A[:, 1]) < GAMMA_TOL * np.linalg.norm(Y):
        raise GammaNearZero("fitted curvature is numerically zero")
    if abs(X[4]) < RATIO_TOL:
        raise DegenerateGeometry("alpha/gamma vanishes; x_o is unidentifiable")
    generic = math.nan
    if len(records) == 6:
        try:
            generic = genericity_check(records, field)
        except RepeatedTimes:
            generic = 0.0
    return ParabolaEstimate(*parameters_from_solution(X),
                            ParabolaDiagnostics(rep.condition_estimate, generic, len(records)))


def divided_difference(t, f) -> float:
    """Newton divided difference ``f[t_0, ..., t_k]`` (distinct nodes)."""
    t = np.asarray(t, dtype=float)
    coef = np.array(f, dtype=float)
    for level in range(1, len(t)):
        coef[level:] = (coef[level:] - coef[level - 1:-1]) / (t[level:] - t[:-level])
    return float(coef[-1])


def genericity_check(records: Sequence[TransitionRecord], field: SensorField, raw: bool = False) -> float:
    """How far six sensor/time pairs are from the unidentifiable configurations.

    The six-point system is singular exactly when some cubic in ``t`` plus a
    fixed linear combination of the sensor coordinates vanishes at every
    sensor.  Third divided differences annihilate cubics, so with
    ``D_m(f) = f[t1,t2,t3,tm] - f[t1,t2,t3,t4]`` for ``m = 5, 6`` this is
    the vanishing of the 2x2 determinant ``D_5(x) D_6(y) - D_5(y) D_6(x)``.

    Returns the determinant divided by the norms of its two rows, a
    scale-free number in ``[0, 1]``; 0 means degenerate.  With ``raw=True``
    the unscaled ``|prod(t_k - t_j) * det|`` is returned instead.

    Raises
    ------
    RepeatedTimes
        Two closest-approach times coincide.
    """
    if len(records) != 6:
        raise ValueError(f"the genericity check takes exactly 6 records, got {len(records)}")
    t = np.array([r.t_star for r in records])
    gaps = t[None, :] - t[:, None]
    iu = np.triu_indices(6, 1)
    if np.any(gaps[iu] == 0.0) or np.any(np.abs(gaps[iu]) <= 1e-12 * max(np.abs(t).max(), 1.0)):
        raise RepeatedTimes("two sensors report the same closest-approach time")
    xy = field.locate([r.sensor_id for r in records])

    def delta(m, f):
        base = [0, 1, 2]
        return divided_difference(t[base + [m]], f[base + [m]]) - divided_difference(t[base + [3]], f[base + [3]])

    v5 = np.array([delta(4, xy[:, 0]), delta(4, xy[:, 1])])
    v6 = np.array([delta(5, xy[:, 0]), delta(5, xy[:, 1])])
    det = float(v5[0] * v6[1] - v5[1] * v6[0])
    if raw:
        return abs(float(np.prod(gaps[iu])) * det)
    norm = float(np.linalg.norm(v5) * np.linalg.norm(v6))
    return 0.0 if norm == 0.0 else abs(det) / norm
