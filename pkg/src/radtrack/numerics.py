"""Small dense numerical kernels shared by the estimators and the simulator.

Least squares goes through a Householder QR (LAPACK via numpy) on a
column-rescaled matrix; the root finder, quadrature and scalar minimiser are
written out here so their stopping rules are explicit and testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import MaxDepthExceeded, NoSignChange, RankDeficient

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances used throughout the package, gathered in one place."""

    rank_tol: float = 1e-12
    root_tol: float = 1e-9
    quad_rel_tol: float = 1e-9
    quad_max_depth: int = 22
    min_grid: int = 1001
    minimize_tol: float = 1e-10
    scan_points: int = 1201


DEFAULT_NUMERICS = NumericsConfig()


@dataclass(frozen=True)
class LsqReport:
    solution: np.ndarray
    residual_norm: float
    condition_estimate: float


def solve_least_squares(A, y, rank_tol: float = DEFAULT_NUMERICS.rank_tol, refine: int = 0) -> LsqReport:
    """Solve ``min ||A x - y||_2`` with a QR factorisation.

    Columns are scaled to unit Euclidean norm before factorising and the
    solution is unscaled afterwards, so wildly different column magnitudes
    (t, t**2, t**3 next to metres) do not by themselves trigger a rank error.
    ``refine`` extra passes re-solve for the residual computed in extended
    precision, which recovers digits lost to ill-conditioning of the solve.

    Raises
    ------
    RankDeficient
        If a diagonal entry of the triangular factor falls below
        ``rank_tol * max(|diag|)``, or a column is identically zero.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or y.shape != (A.shape[0],):
        raise ValueError(f"shape mismatch: A {A.shape}, y {y.shape}")
    rows, cols = A.shape
    if rows < cols:
        raise RankDeficient(f"underdetermined system: {rows} rows < {cols} columns")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite entries in least-squares input")

    scale = np.linalg.norm(A, axis=0)
    if np.any(scale == 0.0):
        raise RankDeficient("zero column in design matrix")
    q, r = np.linalg.qr(A / scale, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.min() < rank_tol * diag.max():
        raise RankDeficient(
            f"triangular factor diagonal ratio {diag.min() / diag.max():.3e} below {rank_tol:g}"
        )
    x = np.linalg.solve(r, q.T @ y) / scale
    wide = A.astype(np.longdouble)
    for _ in range(refine):
        resid = (y.astype(np.longdouble) - wide @ x.astype(np.longdouble)).astype(float)
        x = x + np.linalg.solve(r, q.T @ resid) / scale
    residual = float(np.linalg.norm(A @ x - y))
    return LsqReport(solution=x, residual_norm=residual, condition_estimate=float(diag.max() / diag.min()))


def find_bracketed_root(f: Callable[[float], float], lo: float, hi: float,
                        tol: float = DEFAULT_NUMERICS.root_tol, max_iter: int = 400) -> float:
    """Bisection on a sign-changing bracket ``[lo, hi]``.

    Returns the midpoint of the final bracket, whose width is at most ``tol``.
    """
    lo, hi = float(lo), float(hi)
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0 or not (np.isfinite(flo) and np.isfinite(fhi)):
        raise NoSignChange(f"f({lo})={flo!r} and f({hi})={fhi!r} do not bracket a root")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:  # bracket at floating-point resolution
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def integrate_adaptive(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                       rel_tol: float = DEFAULT_NUMERICS.quad_rel_tol,
                       max_depth: int = DEFAULT_NUMERICS.quad_max_depth) -> float:
    """Romberg integration of a vectorised integrand over ``[a, b]``.

    The trapezoid rule is refined by interval doubling and each level is
    Richardson-extrapolated; iteration stops once two successive diagonal
    Romberg estimates agree to ``rel_tol`` (relative).  ``f`` must accept a
    1-D array of abscissae.
    """
    a, b = float(a), float(b)
    if b < a:
        raise ValueError("integrate_adaptive requires a <= b")
    if a == b:
        return 0.0
    h = b - a
    fa_fb = np.asarray(f(np.array([a, b])), dtype=float)
    trap = 0.5 * h * float(fa_fb.sum())
    table = [trap]
    max_cols = 7
    for level in range(1, max_depth + 1):
        n_new = 1 << (level - 1)
        step = h / n_new
        mids = a + step * (np.arange(n_new) + 0.5)
        trap = 0.5 * trap + 0.5 * step * float(np.sum(f(mids)))
        row = [trap]
        for j in range(1, min(level, max_cols) + 1):
            factor = 4.0 ** j
            row.append(row[j - 1] + (row[j - 1] - table[j - 1]) / (factor - 1.0))
        best, prev = row[-1], table[-1]
        if level >= 4 and abs(best - prev) <= rel_tol * abs(best):
            return best
        if level >= 4 and best == 0.0 and prev == 0.0:
            return 0.0
        table = row
    raise MaxDepthExceeded(f"no convergence to rel_tol={rel_tol:g} after {max_depth} doublings")


def _evaluate_on_grid(f, grid: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(grid), dtype=float)
        if vals.shape == grid.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([f(float(t)) for t in grid], dtype=float)


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float) -> float:
    """Golden-section search for a minimum of a unimodal ``f`` on ``[lo, hi]``."""
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        if c <= a or d >= b:
            break
    return 0.5 * (a + b)


def minimize_scalar(f: Callable, lo: float, hi: float,
                    tol: float = DEFAULT_NUMERICS.minimize_tol,
                    grid_points: int = DEFAULT_NUMERICS.min_grid) -> float:
    """Global minimiser of ``f`` on ``[lo, hi]``.

    A uniform scan with at least 1000 points isolates the best basin, then a
    golden-section search refines inside the two neighbouring grid cells.
    """
    if not lo < hi:
        raise ValueError("minimize_scalar requires lo < hi")
    grid = np.linspace(lo, hi, max(int(grid_points), 1001))
    vals = _evaluate_on_grid(f, grid)
    i = int(np.nanargmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    return golden_section(lambda t: float(f(t)), a, b, tol)
