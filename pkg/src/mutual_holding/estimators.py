"""scikit-learn style wrappers: ``fit`` on initial equity samples, ``predict`` default probabilities."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .config import ExperimentConfig
from .fixed_point import fixed_point_default_curve
from .particles import Baseline, Empirical, Equilibrium, simulate, simulate_smoothed

__all__ = ["FixedPointDefaultEstimator", "ParticleDefaultEstimator"]


def _initial_sample(X):
    """1-D positive sample from ``X`` of shape ``(n,)`` or ``(n, 1)``; ``None`` passes through."""
    if X is None:
        return None
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single feature (initial equity), got {X.shape[1]}")
        X = X[:, 0]
    if np.any(X <= 0):
        raise ValueError("initial equity must be > 0")
    return X


class _DefaultCurveMixin:
    """Shared model parameters and curve interpolation."""

    def _config(self, **extra) -> ExperimentConfig:
        keys = ("horizon", "steps", "drift", "lam", "mu", "sigma", "rate", "seed", "absorption")
        return ExperimentConfig(**{k: getattr(self, k) for k in keys}, **extra)

    def predict(self, t):
        """Default probability at times ``t``, linear between grid points."""
        check_is_fitted(self, "default_probability_")
        t = np.asarray(t, dtype=float)
        if np.any((t < 0) | (t > self.times_[-1])):
            raise ValueError(f"t must lie in [0, {self.times_[-1]}]")
        return np.interp(t, self.times_, self.default_probability_)


class FixedPointDefaultEstimator(_DefaultCurveMixin, BaseEstimator):
    """Default curve ``D = 1 - c0`` from the iterated fixed-point map.

    ``fit(X)`` uses ``X`` as the initial-law draws of the restart bank (one
    path per sample); ``fit()`` draws ``paths`` samples from Exponential(``rate``).
    """

    def __init__(self, horizon=10.0, steps=100, paths=2000, drift="ou", lam=1.0, mu=-0.5, sigma=1.0,
                 rate=1.0, seed=20240601, absorption="bridge", crn=True, iterations=50, stop_tol=0.0,
                 project=True):
        self.horizon = horizon
        self.steps = steps
        self.paths = paths
        self.drift = drift
        self.lam = lam
        self.mu = mu
        self.sigma = sigma
        self.rate = rate
        self.seed = seed
        self.absorption = absorption
        self.crn = crn
        self.iterations = iterations
        self.stop_tol = stop_tol
        self.project = project

    def fit(self, X=None, y=None):
        z = _initial_sample(X)
        paths = self.paths if z is None else z.size
        cfg = self._config(paths=paths, crn=self.crn, iterations=self.iterations,
                           stop_tol=self.stop_tol, project=self.project)
        res = fixed_point_default_curve(cfg, z=z)
        self.curve_ = res.curve
        self.times_ = res.times
        self.default_probability_ = res.default_probability
        self.stderr_ = res.stderr
        self.deltas_ = np.asarray(res.diagnostics.deltas)
        self.converged_ = res.diagnostics.converged
        self.n_iter_ = res.diagnostics.iterations
        return self


class ParticleDefaultEstimator(_DefaultCurveMixin, BaseEstimator):
    """Default curve from an absorbed particle system.

    ``mode`` is ``"equilibrium"`` (mutual holding), ``"baseline"`` (no holding)
    or ``"smoothed"`` (mollified system with index ``smoothing_n``). ``fit(X)``
    starts one particle at each sample.
    """

    def __init__(self, mode="equilibrium", horizon=10.0, steps=100, particles=2000, drift="ou", lam=1.0,
                 mu=-0.5, sigma=1.0, rate=1.0, seed=20240601, absorption="bridge", smoothing_n=10):
        self.mode = mode
        self.horizon = horizon
        self.steps = steps
        self.particles = particles
        self.drift = drift
        self.lam = lam
        self.mu = mu
        self.sigma = sigma
        self.rate = rate
        self.seed = seed
        self.absorption = absorption
        self.smoothing_n = smoothing_n

    def fit(self, X=None, y=None):
        if self.mode not in ("equilibrium", "baseline", "smoothed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        x0 = _initial_sample(X)
        law = None if x0 is None else Empirical(tuple(x0))
        cfg = self._config(particles=self.particles if x0 is None else x0.size)
        if self.mode == "smoothed":
            rec = simulate_smoothed(cfg, self.smoothing_n, law=law)
        else:
            rec = simulate(cfg, Equilibrium() if self.mode == "equilibrium" else Baseline(), law=law)
        self.record_ = rec
        self.times_ = rec.times
        self.default_probability_ = rec.default_probability
        self.stderr_ = rec.stderr
        self.final_positions_ = rec.final_positions
        return self
