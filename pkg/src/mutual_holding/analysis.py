"""Oracles and diagnostics: W1 on the line, first-passage survival, curve gaps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats
from scipy.special import log_ndtr, ndtr

__all__ = [
    "wasserstein1",
    "analytic_survival_bm",
    "CurveComparison",
    "compare_curves",
    "left_continuous_inverse",
    "stieltjes_form",
    "inverse_form",
    "holder_constant",
]


def wasserstein1(samples_a, samples_b) -> float:
    """W1 distance between two empirical measures on the real line.

    Equal sizes use the order-statistics formula (mean absolute gap of the
    sorted samples). Unequal sizes fall back to the exact CDF-area formula.
    """
    a = np.sort(np.asarray(samples_a, dtype=float).ravel())
    b = np.sort(np.asarray(samples_b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("wasserstein1 needs non-empty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    return float(stats.wasserstein_distance(a, b))


def analytic_survival_bm(x0, drift, vol, t):
    """``P[min_{s<=t} (x0 + drift*s + vol*W_s) > 0]`` for ``x0 > 0``.

    Reflection formula, with the exponential factor folded into the log
    of the normal cdf so large ``|drift * x0|`` does not overflow.
    """
    if not vol > 0:
        raise ValueError("vol must be > 0")
    if not x0 > 0:
        raise ValueError("x0 must be > 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        st = vol * np.sqrt(t)
        first = ndtr((x0 + drift * t) / st)
        second = np.exp(-2.0 * drift * x0 / vol**2 + log_ndtr((-x0 + drift * t) / st))
        out = np.where(t > 0, first - second, 1.0)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass
class CurveComparison:
    grid: np.ndarray
    gaps: np.ndarray
    sup_norm_gap: float
    mc_stderr: np.ndarray
    flagged: np.ndarray

    @property
    def n_flagged(self) -> int:
        return int(self.flagged.sum())


def compare_curves(a, b, stderr=0.0, grid=None, n_sigma=3.0) -> CurveComparison:
    """Pointwise gaps ``|a - b|``; points with gap above ``n_sigma * stderr`` are flagged."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"grid mismatch: {a.shape} vs {b.shape}")
    if grid is None:
        grid = np.arange(a.size, dtype=float)
    grid = np.asarray(grid, dtype=float)
    if grid.shape != a.shape:
        raise ValueError(f"grid mismatch: grid {grid.shape} vs values {a.shape}")
    se = np.broadcast_to(np.asarray(stderr, dtype=float), a.shape).copy()
    gaps = np.abs(a - b)
    return CurveComparison(
        grid=grid,
        gaps=gaps,
        sup_norm_gap=float(gaps.max()) if gaps.size else 0.0,
        mc_stderr=se,
        flagged=gaps > n_sigma * se,
    )


# --------------------------------------------------------------------------
# Stieltjes integral against c0 versus the inverse-time integral
# --------------------------------------------------------------------------

def left_continuous_inverse(grid, c0, u):
    """``inf{t : c0(t) < u}`` for the piecewise-linear interpolant of a non-increasing ``c0``.

    Returns ``grid[-1]`` when ``c0`` never drops below ``u`` on the grid.
    """
    grid = np.asarray(grid, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty_like(u)
    for j, level in enumerate(u):
        below = np.nonzero(c0 < level)[0]
        if below.size == 0:
            out[j] = grid[-1]
            continue
        k = below[0]
        if k == 0:
            out[j] = grid[0]
            continue
        # c0[k-1] >= level > c0[k]; linear crossing inside (grid[k-1], grid[k]]
        frac = (c0[k - 1] - level) / (c0[k - 1] - c0[k])
        out[j] = grid[k - 1] + frac * (grid[k] - grid[k - 1])
    return out


def stieltjes_form(values_at_grid, c0, n):
    """Forward-difference sum ``sum_{k<n} g(t_k) (c0(t_{k+1}) - c0(t_k))``."""
    g = np.asarray(values_at_grid, dtype=float)
    dc0 = np.diff(np.asarray(c0, dtype=float))
    return float(np.dot(g[:n], dc0[:n]))


def inverse_form(g, grid, c0, s):
    """``-integral_{c0(s)}^{1} g(c0^{-1}(u)) du`` by adaptive quadrature over ``u``.

    ``g`` is a callable of time. With ``c0`` strictly decreasing this equals the
    Stieltjes integral ``integral_0^s g dc0`` after the change of variable
    ``u = c0(t)``.
    """
    grid = np.asarray(grid, dtype=float)
    c0 = np.asarray(c0, dtype=float)
    c0_s = float(np.interp(s, grid, c0))
    upper = float(c0[0])

    def integrand(u):
        return float(g(left_continuous_inverse(grid, c0, u)[0]))

    # one quadrature per linear piece of the inverse
    knots = np.concatenate(([c0_s], np.sort(c0[(c0 > c0_s) & (c0 < upper)]), [upper]))
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        if hi > lo:
            total += integrate.quad(integrand, lo, hi)[0]
    return -total


def holder_constant(times, values, exponent=1.0 / 6.0) -> float:
    """Smallest ``C`` with ``|v(t_{k+1}) - v(t_k)| <= C dt^exponent`` on adjacent grid points."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    dt = np.diff(times)
    return float(np.max(np.abs(np.diff(values)) / dt**exponent))
