"""Autonomous fixed-point equation for the survival curve ``c = (c0, c1)``.

The map sends an input curve ``c`` to

    c0'(t_n) = P[R^{0,Z}_{t_n} > 0] + sum_{k<n} P[R^{t_k,0}_{t_n} > 0] (c0(t_{k+1}) - c0(t_k))
    c1'(t_n) = E[1{R^{0,Z}_{t_n} > 0} B^c(t_n, R^{0,Z}_{t_n})^+] + (same restart sum)

where ``R^{t,x}`` is the diffusion with coefficients frozen to ``c``, started at
``x`` at time ``t`` and *not* absorbed. Probabilities are Monte Carlo averages
over ``M`` Euler paths. All restarts of draw ``m`` share the Gaussian increments
``G[i, m]``, and with common random numbers the table is fixed across iterates so
the map is deterministic.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.isotonic import isotonic_regression

from . import _rng
from .coefficients import DriftVolSpec, SurvivalCurve, WeightedMeasure, solve_c1

logger = logging.getLogger(__name__)

__all__ = [
    "RestartPathBank",
    "RestartEstimates",
    "apply_lambda",
    "initial_guess",
    "iterate",
    "IterationDiagnostics",
    "DefaultCurve",
    "fixed_point_default_curve",
    "batch_stderr",
    "CHECKPOINTS",
]

CHECKPOINTS = (1, 10, 50, 100, 200)
MONOTONE_TOL = 1e-9


@dataclass
class RestartEstimates:
    """Per-time Monte Carlo averages from one pass over the bank.

    ``p_restart[k, n]`` and ``e_restart[k, n]`` belong to the restart at ``t_k``
    observed at ``t_n``; they are zero for ``n <= k``.
    """
    p_start: np.ndarray
    e_start: np.ndarray
    p_restart: np.ndarray
    e_restart: np.ndarray

    def combine(self, c0):
        dc0 = np.diff(np.asarray(c0, dtype=float))
        return self.p_start + dc0 @ self.p_restart, self.e_start + dc0 @ self.e_restart


@dataclass
class RestartPathBank:
    """Initial draws ``Z_m`` and the Gaussian table ``G[i, m]`` driving every restart path."""
    grid: np.ndarray
    z: np.ndarray
    gaussians: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        self.gaussians = np.asarray(self.gaussians, dtype=float)
        if self.gaussians.shape != (self.grid.size - 1, self.z.size):
            raise ValueError(f"gaussian table must have shape (steps, paths), got {self.gaussians.shape}")

    @classmethod
    def draw(cls, grid, law, paths, seed, iterate=0, z=None):
        """Fresh bank; ``iterate`` selects an independent table (used when CRN is off)."""
        grid = np.asarray(grid, dtype=float)
        if z is None:
            z = law.sample(_rng.substream(seed, _rng.FP_Z, iterate).integers(2**63), paths)
        z = np.asarray(z, dtype=float)
        g = _rng.substream(seed, _rng.FP_GAUSS, iterate).standard_normal((grid.size - 1, z.size))
        return cls(grid, z, g)

    @property
    def paths(self) -> int:
        return self.z.size

    @property
    def steps(self) -> int:
        return self.grid.size - 1

    def run(self, curve: SurvivalCurve, spec: DriftVolSpec) -> RestartEstimates:
        """Simulate the start path and all restarts under the coefficients frozen to ``curve``.

        Row 0 of the state holds ``R^{0,Z}``; row ``k+1`` holds ``R^{t_k,0}``,
        which joins at ``t_k`` from 0. Coefficients are evaluated once per grid
        time at the left endpoint and reused for the estimator at that time.
        """
        if curve.grid.shape != self.grid.shape or not np.allclose(curve.grid, self.grid):
            raise ValueError("curve grid does not match the bank grid")
        N, M = self.steps, self.paths
        dt = self.grid[1] - self.grid[0]
        sqdt = np.sqrt(dt)
        R = np.zeros((N + 1, M))
        R[0] = self.z
        p_start = np.empty(N + 1)
        e_start = np.empty(N + 1)
        p_restart = np.zeros((N, N + 1))
        e_restart = np.zeros((N, N + 1))
        inv_m = 1.0 / M

        for i in range(N + 1):
            t = self.grid[i]
            # rows alive at t_i: start path, restarts k < i, and the restart joining now
            live = R[: min(i + 2, N + 1)]
            # frozen coefficients, in place: B = (b + c1) / d and Sigma = sigma / d,
            # with d = 1 + c0 1{b + c1 > 0}; same arithmetic as _frozen_from_values
            B = spec.b(t, live)
            B += curve.c1[i]
            denom = (B > 0) * curve.c0[i]
            denom += 1.0
            B /= denom
            Sigma = spec.sigma(t, live)
            Sigma /= denom
            pos = live[: i + 1] > 0
            p = np.count_nonzero(pos, axis=1) * inv_m
            Bp = np.maximum(B[: i + 1], 0.0)
            Bp *= pos
            e = Bp.sum(axis=1) * inv_m
            p_start[i], e_start[i] = p[0], e[0]
            p_restart[:i, i] = p[1:]
            e_restart[:i, i] = e[1:]
            if i == N:
                break
            Sigma *= sqdt
            Sigma *= self.gaussians[i]
            B *= dt
            B += Sigma
            live += B

        return RestartEstimates(p_start, e_start, p_restart, e_restart)


def _check_curve(curve: SurvivalCurve):
    rises = np.diff(curve.c0)
    if np.any(rises > MONOTONE_TOL):
        k = int(np.argmax(rises))
        raise ValueError(f"c0 increases by {rises[k]:.3g} between t={curve.grid[k]} and t={curve.grid[k + 1]}")


def _project(c0_raw, c1_raw, project=True):
    c0 = isotonic_regression(c0_raw, increasing=False) if project else np.asarray(c0_raw, dtype=float)
    return np.clip(c0, 0.0, 1.0), np.maximum(c1_raw, 0.0)


def apply_lambda(curve: SurvivalCurve, bank: RestartPathBank, spec: DriftVolSpec,
                 project: bool = True, return_raw: bool = False):
    """One application of the fixed-point map, with monotone projection of ``c0``.

    ``return_raw`` also returns the pre-projection ``(c0, c1)`` estimates.
    """
    _check_curve(curve)
    est = bank.run(curve, spec)
    c0_raw, c1_raw = est.combine(curve.c0)
    c0, c1 = _project(c0_raw, c1_raw, project)
    out = SurvivalCurve(curve.grid, c0, c1)
    if return_raw:
        return out, (c0_raw, c1_raw)
    return out


def initial_guess(bank: RestartPathBank, spec: DriftVolSpec) -> SurvivalCurve:
    """No-default prior: ``c0 = 1`` and ``c1`` frozen at its value for the initial sample."""
    c1 = solve_c1(0.0, WeightedMeasure.from_samples(bank.z), spec)
    return SurvivalCurve.constant(bank.grid, 1.0, c1)


@dataclass
class IterationDiagnostics:
    deltas: list = field(default_factory=list)
    c1_raw_min: list = field(default_factory=list)
    checkpoints: dict = field(default_factory=dict)
    stop_tol: float = 0.0
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.deltas)

    def summary(self) -> str:
        status = "converged" if self.converged else "not converged"
        last = self.deltas[-1] if self.deltas else float("nan")
        return f"{status} after {self.iterations} iterates; last sup-norm delta {last:.6f} (stop_tol {self.stop_tol:g})"


def _sup_delta(a: SurvivalCurve, b: SurvivalCurve) -> float:
    return float(max(np.max(np.abs(a.c0 - b.c0)), np.max(np.abs(a.c1 - b.c1))))


def iterate(initial: SurvivalCurve, k_max: int, stop_tol: float, config, spec: DriftVolSpec | None = None,
            bank: RestartPathBank | None = None, checkpoints=CHECKPOINTS):
    """Repeat the map from ``initial`` until the sup-norm change drops below ``stop_tol``.

    ``stop_tol = 0`` always runs ``k_max`` iterates. Non-convergence is
    reported in the diagnostics, never raised. Returns ``(curve, diagnostics)``.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    spec = spec or config.spec()
    law = config.law()
    if bank is None:
        bank = RestartPathBank.draw(initial.grid, law, config.paths, config.seed)
    diag = IterationDiagnostics(stop_tol=stop_tol)
    wanted = set(checkpoints)
    curve = initial
    for k in range(1, k_max + 1):
        if not config.crn and k > 1:
            bank = RestartPathBank.draw(initial.grid, law, bank.paths, config.seed, iterate=k)
        new, (_, c1_raw) = apply_lambda(curve, bank, spec, project=config.project, return_raw=True)
        delta = _sup_delta(new, curve)
        diag.deltas.append(delta)
        diag.c1_raw_min.append(float(np.min(c1_raw)))
        curve = new
        if k in wanted:
            diag.checkpoints[k] = curve
        if delta < stop_tol:
            diag.converged = True
            break
    diag.checkpoints[diag.iterations] = curve
    if not diag.converged:
        logger.info("fixed-point iteration: %s", diag.summary())
    return curve, diag


def _renewal_solve(p_start, p_restart):
    """Solve ``c0 = p_start + diff(c0) @ p_restart`` by forward substitution."""
    n = p_start.size
    c0 = np.empty(n)
    c0[0] = p_start[0]
    for i in range(1, n):
        dc = np.diff(c0[:i])
        denom = 1.0 - p_restart[i - 1, i]
        if denom <= 1e-12:
            # every fresh restart is alive one step later: the equation leaves c0[i] free
            c0[i] = c0[i - 1]
            continue
        rhs = p_start[i] + dc @ p_restart[: i - 1, i] - c0[i - 1] * p_restart[i - 1, i]
        c0[i] = rhs / denom
    return c0


def batch_stderr(curve: SurvivalCurve, bank: RestartPathBank, spec: DriftVolSpec, n_batches: int = 20):
    """Batch-means standard error of ``c0`` with coefficients frozen to ``curve``.

    Each batch of paths gets its own solution of the linear renewal equation;
    the spread across batches includes the noise compounded by the restart sum.
    """
    n_batches = max(2, min(n_batches, bank.paths))
    sols = []
    for idx in np.array_split(np.arange(bank.paths), n_batches):
        sub = RestartPathBank(bank.grid, bank.z[idx], bank.gaussians[:, idx])
        est = sub.run(curve, spec)
        sols.append(np.clip(_renewal_solve(est.p_start, est.p_restart), 0.0, 1.0))
    return np.std(sols, axis=0, ddof=1) / np.sqrt(n_batches)


@dataclass
class DefaultCurve:
    times: np.ndarray
    default_probability: np.ndarray
    stderr: np.ndarray
    curve: SurvivalCurve
    diagnostics: IterationDiagnostics


def fixed_point_default_curve(config, spec: DriftVolSpec | None = None, z=None) -> DefaultCurve:
    """Default probability ``1 - c0`` from the iterated fixed-point map.

    ``z`` replaces the initial-law draws (for example an observed sample).
    """
    spec = spec or config.spec()
    bank = RestartPathBank.draw(config.grid(), config.law(), config.paths, config.seed, z=z)
    curve, diag = iterate(initial_guess(bank, spec), config.iterations, config.stop_tol, config, spec, bank)
    D = curve.default_probability()
    se = batch_stderr(curve, bank, spec)
    return DefaultCurve(curve.grid, D, se, curve, diag)
