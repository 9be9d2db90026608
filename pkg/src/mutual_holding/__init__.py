"""Mean field game of mutual holding with absorption at zero: coefficients, particle systems, fixed point."""
from .analysis import analytic_survival_bm, compare_curves, wasserstein1
from .coefficients import (
    OU,
    AffineDrift,
    AffineVol,
    ConstantDrift,
    ConstantVol,
    DriftVolSpec,
    SurvivalCurve,
    WeightedMeasure,
    equilibrium_coefficients,
    equilibrium_strategy,
    frozen_coefficients,
    smoothed_coefficients,
    solve_c1,
)
from .config import ExperimentConfig, load_config
from .estimators import FixedPointDefaultEstimator, ParticleDefaultEstimator
from .fixed_point import apply_lambda, fixed_point_default_curve, iterate
from .particles import Baseline, Equilibrium, Frozen, baseline_default_curve, simulate, simulate_smoothed

__all__ = [
    "OU", "AffineDrift", "AffineVol", "ConstantDrift", "ConstantVol", "DriftVolSpec", "SurvivalCurve",
    "WeightedMeasure", "equilibrium_coefficients", "equilibrium_strategy", "frozen_coefficients",
    "smoothed_coefficients", "solve_c1", "ExperimentConfig", "load_config", "FixedPointDefaultEstimator",
    "ParticleDefaultEstimator", "apply_lambda", "fixed_point_default_curve", "iterate", "Baseline",
    "Equilibrium", "Frozen", "baseline_default_curve", "simulate", "simulate_smoothed",
    "analytic_survival_bm", "compare_curves", "wasserstein1",
]
