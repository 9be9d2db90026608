"""Equilibrium coefficients of the mutual holding game with absorption at zero.

Everything here is a pure function of its arguments. Scalar and array
positions are both accepted wherever a position ``x`` appears.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "OU",
    "ConstantDrift",
    "AffineDrift",
    "ConstantVol",
    "AffineVol",
    "SIGN_REGIMES",
    "DriftVolSpec",
    "WeightedMeasure",
    "SurvivalCurve",
    "solve_c1",
    "equilibrium_coefficients",
    "equilibrium_drift",
    "equilibrium_vol",
    "smoothed_heaviside",
    "solve_smoothed_c1",
    "smoothed_coefficients",
    "frozen_coefficients",
    "equilibrium_strategy",
]

SIGN_REGIMES = ("nonpositive", "positive", "sign_changing")

C1_TOL = 1e-12


# --------------------------------------------------------------------------
# idiosyncratic coefficients
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OU:
    """Mean-reverting drift ``lam - x``."""
    lam: float

    def __call__(self, t, x):
        return self.lam - np.asarray(x, dtype=float)


@dataclass(frozen=True)
class ConstantDrift:
    mu: float

    def __call__(self, t, x):
        return np.full(np.shape(x), float(self.mu))


@dataclass(frozen=True)
class AffineDrift:
    """Drift ``slope * x + intercept``."""
    slope: float
    intercept: float

    def __call__(self, t, x):
        return self.slope * np.asarray(x, dtype=float) + self.intercept


@dataclass(frozen=True)
class ConstantVol:
    sigma0: float

    def __call__(self, t, x):
        return np.full(np.shape(x), float(self.sigma0))

    @property
    def floor(self):
        return float(self.sigma0)


@dataclass(frozen=True)
class AffineVol:
    """Volatility ``max(slope * x + intercept, floor)``."""
    slope: float
    intercept: float
    floor: float

    def __call__(self, t, x):
        return np.maximum(self.slope * np.asarray(x, dtype=float) + self.intercept, self.floor)


DriftFamily = Union[OU, ConstantDrift, AffineDrift]
VolFamily = Union[ConstantVol, AffineVol]


def _drift_sign_on_halfline(drift):
    """Sign regime of a drift on the state domain ``x >= 0``, or None if undecidable."""
    if isinstance(drift, ConstantDrift):
        slope, intercept = 0.0, drift.mu
    elif isinstance(drift, OU):
        slope, intercept = -1.0, drift.lam
    elif isinstance(drift, AffineDrift):
        slope, intercept = drift.slope, drift.intercept
    else:
        return None
    if intercept <= 0 and slope <= 0:
        return "nonpositive"
    if intercept > 0 and slope >= 0:
        return "positive"
    return "sign_changing"


@dataclass(frozen=True)
class DriftVolSpec:
    """Idiosyncratic drift ``b(t, x)`` and volatility ``sigma(t, x)``.

    The coefficients are measure-free. ``sign_regime`` is checked against
    the drift on ``x >= 0`` at construction; a drift declared
    ``"nonpositive"`` or ``"positive"`` must actually have that sign there.
    ``None`` infers the regime from the drift family.
    """
    drift: DriftFamily
    vol: VolFamily = field(default_factory=lambda: ConstantVol(1.0))
    sign_regime: str | None = None

    def __post_init__(self):
        if not self.vol.floor > 0:
            raise ValueError(f"volatility floor must be > 0, got {self.vol.floor}")
        actual = _drift_sign_on_halfline(self.drift)
        regime = self.sign_regime
        if regime is None:
            object.__setattr__(self, "sign_regime", actual or "sign_changing")
            return
        if regime not in SIGN_REGIMES:
            raise ValueError(f"sign_regime must be one of {SIGN_REGIMES}, got {regime!r}")
        if regime != "sign_changing" and actual is not None and actual != regime:
            raise ValueError(f"drift {self.drift} is not {regime} on x >= 0")

    def b(self, t, x):
        return self.drift(t, x)

    def sigma(self, t, x):
        return self.vol(t, x)


# --------------------------------------------------------------------------
# measures and curves
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedMeasure:
    """Finite measure on ``[0, inf)`` stored as weighted atoms.

    Atoms sitting exactly at 0 are absorbed mass. Anything strictly
    positive, however small, is alive.
    """
    positions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if pos.shape != w.shape or pos.ndim != 1:
            raise ValueError("positions and weights must be 1-d arrays of equal length")
        if np.any(~np.isfinite(pos)) or np.any(pos < 0):
            raise ValueError("atom positions must be finite and >= 0")
        if np.any(~(w > 0)):
            raise ValueError("atom weights must be > 0")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_samples(cls, samples):
        """Empirical measure with equal weights ``1/N``; negative samples are clipped to 0."""
        x = np.maximum(np.asarray(samples, dtype=float).ravel(), 0.0)
        if x.size == 0:
            raise ValueError("empty sample")
        return cls(x, np.full(x.size, 1.0 / x.size))

    @classmethod
    def dirac(cls, x, mass=1.0):
        return cls(np.array([x]), np.array([mass]))

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def alive(self) -> np.ndarray:
        return self.positions > 0

    @property
    def alive_mass(self) -> float:
        return float(self.weights[self.alive].sum())


@dataclass(frozen=True)
class SurvivalCurve:
    """Survival probability ``c0`` and aggregate holding drift ``c1`` on a time grid."""
    grid: np.ndarray
    c0: np.ndarray
    c1: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        c0 = np.asarray(self.c0, dtype=float)
        c1 = np.asarray(self.c1, dtype=float)
        if not (grid.ndim == 1 and grid.shape == c0.shape == c1.shape):
            raise ValueError("grid, c0 and c1 must be 1-d arrays of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(c0 < 0) or np.any(c0 > 1):
            raise ValueError("c0 must lie in [0, 1]")
        if np.any(c1 < 0):
            raise ValueError("c1 must be >= 0")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "c1", c1)

    @classmethod
    def constant(cls, grid, c0=1.0, c1=0.0):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.full(grid.size, float(c0)), np.full(grid.size, float(c1)))

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])

    def index_at(self, t) -> np.ndarray:
        """Grid index for left-continuous piecewise-constant lookup.

        ``t`` in ``(t_{k-1}, t_k]`` maps to ``k``; ``t_0`` maps to 0.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t > self.grid[-1] * (1 + 1e-12)) or np.any(t < self.grid[0]):
            raise ValueError(f"time outside curve range [{self.grid[0]}, {self.grid[-1]}]")
        return np.minimum(np.searchsorted(self.grid, t, side="left"), self.grid.size - 1)

    def at(self, t):
        k = self.index_at(t)
        return self.c0[k], self.c1[k]

    def default_probability(self) -> np.ndarray:
        return 1.0 - self.c0


# --------------------------------------------------------------------------
# c1 and the equilibrium coefficients
# --------------------------------------------------------------------------

def _c1_from_values(drift_values, weights, tol=C1_TOL, max_iter=200):
    """Root of ``F(y) = (1 + sum(w)) y - sum(w (b + y)^+)`` on ``[0, sum(w b^+)]``.

    ``drift_values`` and ``weights`` describe the alive atoms only. ``F`` is
    strictly increasing with ``F(0) <= 0 <= F(hi)``, so bisection always
    brackets; the final iterate is polished with the exact root of the
    linear piece selected by the active set ``{b + y > 0}``.
    """
    b = np.asarray(drift_values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if b.size == 0:
        return 0.0
    mass = w.sum()
    slope = 1.0 + mass

    def F(y):
        return slope * y - np.dot(w, np.maximum(b + y, 0.0))

    lo, hi = 0.0, float(np.dot(w, np.maximum(b, 0.0)))
    if hi <= 0.0:
        return 0.0
    y = 0.5 * (lo + hi)
    for _ in range(max_iter):
        y = 0.5 * (lo + hi)
        fy = F(y)
        if abs(fy) <= tol or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        if fy > 0:
            hi = y
        else:
            lo = y
    # exact solve on the linear piece; only kept if it does better
    active = b + y > 0
    denom = slope - w[active].sum()
    y_lin = float(np.dot(w[active], b[active]) / denom)
    if 0.0 <= y_lin and abs(F(y_lin)) < abs(F(y)):
        y = y_lin
    # the bound is attained when every alive drift is positive; keep rounding inside it
    return float(min(y, hi))


def solve_c1(t, m: WeightedMeasure, spec: DriftVolSpec, tol: float = C1_TOL) -> float:
    """Aggregate holding drift ``c1(t, m)``.

    Solves ``(1 + m(0, inf)) y = integral of (b(t, x) + y)^+ over the alive atoms``.
    The answer satisfies ``0 <= y <= integral of b^+ dm``.
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    alive = m.alive
    return _c1_from_values(spec.b(t, m.positions[alive]), m.weights[alive], tol=tol)


def _equilibrium_from_c1(bx, sx, c1, alive_mass):
    shifted = bx + c1
    B = np.maximum(shifted, 0.0) / (1.0 + alive_mass) - np.maximum(-shifted, 0.0)
    Sigma = sx / (1.0 + alive_mass * (B > 0))
    return B, Sigma


def equilibrium_coefficients(t, x, m: WeightedMeasure, spec: DriftVolSpec, tol: float = C1_TOL):
    """``(B, Sigma)`` at positions ``x`` against the measure ``m``; ``c1`` is solved once."""
    c1 = solve_c1(t, m, spec, tol)
    B, Sigma = _equilibrium_from_c1(spec.b(t, x), spec.sigma(t, x), c1, m.alive_mass)
    if np.ndim(x) == 0:
        return float(B), float(Sigma)
    return B, Sigma


def equilibrium_drift(t, x, m, spec, tol=C1_TOL):
    return equilibrium_coefficients(t, x, m, spec, tol)[0]


def equilibrium_vol(t, x, m, spec, tol=C1_TOL):
    return equilibrium_coefficients(t, x, m, spec, tol)[1]


def equilibrium_strategy(t, x_holder, y_target, m, spec) -> int:
    """Equilibrium holding decision: hold agent ``y_target`` fully iff its drift is > 0.

    ``x_holder`` does not enter; it is kept so the signature reads as a strategy
    ``pi(t, x, y)``.
    """
    return int(equilibrium_drift(t, y_target, m, spec) > 0)


# --------------------------------------------------------------------------
# smoothed coefficients
# --------------------------------------------------------------------------

def smoothed_heaviside(n, x):
    """Mollified indicator ``1{x > 0} exp(-1/(n x))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = np.asarray(x, dtype=float)
    pos = x > 0
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(pos, np.exp(-1.0 / (n * np.where(pos, x, 1.0))), 0.0)
    return float(out) if out.ndim == 0 else out


def solve_smoothed_c1(n, t, m: WeightedMeasure, spec: DriftVolSpec, tol: float = C1_TOL):
    """Smoothed ``c1^n(t, m)`` together with the smoothed alive mass ``m(H^n)``."""
    h = smoothed_heaviside(n, m.positions)
    w = m.weights * h
    keep = w > 0
    c1 = _c1_from_values(spec.b(t, m.positions[keep]), w[keep], tol=tol)
    return c1, float(w.sum())


def _smoothed_from_c1(n, bx, sx, c1, smooth_mass):
    shifted = bx + c1
    B = np.maximum(shifted, 0.0) / (1.0 + smooth_mass) - np.maximum(-shifted, 0.0)
    Sigma = sx / (1.0 + smooth_mass * smoothed_heaviside(n, B))
    return B, Sigma


def smoothed_coefficients(n, t, x, m: WeightedMeasure, spec: DriftVolSpec, tol: float = C1_TOL):
    """``(B^n, Sigma^n)`` with ``b^n = b`` and ``sigma^n = sigma``."""
    c1, smooth_mass = solve_smoothed_c1(n, t, m, spec, tol)
    B, Sigma = _smoothed_from_c1(n, spec.b(t, x), spec.sigma(t, x), c1, smooth_mass)
    if np.ndim(x) == 0:
        return float(B), float(Sigma)
    return B, Sigma


# --------------------------------------------------------------------------
# frozen coefficients
# --------------------------------------------------------------------------

def _frozen_from_values(bx, sx, c0, c1):
    shifted = bx + c1
    B = np.maximum(shifted, 0.0) / (1.0 + c0) - np.maximum(-shifted, 0.0)
    Sigma = sx / (1.0 + c0 * (B > 0))
    return B, Sigma


def frozen_coefficients(t, x, curve: SurvivalCurve, spec: DriftVolSpec):
    """``(B^c, Sigma^c)``: the equilibrium coefficients with the law frozen to ``curve``."""
    if t > curve.horizon * (1 + 1e-12):
        raise ValueError(f"t={t} beyond curve horizon {curve.horizon}")
    c0, c1 = curve.at(t)
    B, Sigma = _frozen_from_values(spec.b(t, x), spec.sigma(t, x), c0, c1)
    if np.ndim(x) == 0:
        return float(B), float(Sigma)
    return B, Sigma
