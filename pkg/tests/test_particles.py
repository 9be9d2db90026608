import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutual_holding.coefficients import OU, ConstantDrift, ConstantVol, DriftVolSpec, SurvivalCurve
from mutual_holding.config import ExperimentConfig
from mutual_holding.particles import (
    Baseline,
    Empirical,
    Equilibrium,
    Exponential,
    Frozen,
    PointMass,
    ShiftedGaussianAbs,
    baseline_default_curve,
    sample_initial,
    simulate,
    simulate_smoothed,
    smoothed_weight,
    step_absorbed,
)

from .oracles import reflection_survival

NEG = DriftVolSpec(ConstantDrift(-0.5), ConstantVol(1.0))


def _cfg(**kw):
    base = dict(horizon=1.0, steps=100, particles=2000, drift="constant", mu=-0.5,
                initial_law="point", x0=1.0)
    base.update(kw)
    return ExperimentConfig(**base)


# -- initial laws ----------------------------------------------------------

def test_point_mass_sample():
    ens = sample_initial(PointMass(1.0), 3, seed=0)
    np.testing.assert_array_equal(ens.positions, [1.0, 1.0, 1.0])
    assert not ens.absorbed.any() and ens.time == 0.0


def test_exponential_sample_mean():
    ens = sample_initial(Exponential(1.0), 100_000, seed=11)
    assert ens.positions.mean() == pytest.approx(1.0, abs=0.01)


def test_sampling_is_deterministic():
    a = sample_initial(Exponential(2.0), 500, seed=3)
    b = sample_initial(Exponential(2.0), 500, seed=3)
    assert a.positions.tobytes() == b.positions.tobytes()
    c = sample_initial(Exponential(2.0), 500, seed=4)
    assert not np.array_equal(a.positions, c.positions)


def test_rejects_mass_at_or_below_zero():
    with pytest.raises(ValueError):
        PointMass(0.0)
    with pytest.raises(ValueError):
        Empirical((1.0, -2.0))
    with pytest.raises(ValueError):
        sample_initial(PointMass(1.0), 0, seed=0)


def test_shifted_gaussian_abs_support():
    x = ShiftedGaussianAbs(Exponential(1.0), 10).sample(5, 10_000)
    assert x.min() >= 0.1
    assert np.mean(x ** -2.0) < np.inf


# -- one step --------------------------------------------------------------

def test_all_absorbed_only_time_moves():
    ens = sample_initial(PointMass(1.0), 4, seed=0)
    ens.positions[:] = 0.0
    ens.absorbed[:] = True
    nxt = step_absorbed(ens, 0.1, NEG)
    np.testing.assert_array_equal(nxt.positions, ens.positions)
    np.testing.assert_array_equal(nxt.absorbed, ens.absorbed)
    assert nxt.time == pytest.approx(0.1)


def test_baseline_euler_arithmetic():
    spec = DriftVolSpec(OU(0.0), ConstantVol(1.0))
    ens = sample_initial(PointMass(5.0), 1, seed=0)
    nxt = step_absorbed(ens, 0.01, spec, Baseline(), gaussians=[0.0], uniforms=[1.0])
    assert nxt.positions[0] == pytest.approx(4.95, abs=1e-15)
    assert nxt.running_min[0] == pytest.approx(4.95)


def test_discrete_scheme_ignores_bridge():
    spec = DriftVolSpec(ConstantDrift(0.0), ConstantVol(1.0))
    ens = sample_initial(PointMass(0.01), 1, seed=0)
    # endpoint stays positive: bridge absorbs for u small, discrete never does
    kept = step_absorbed(ens, 0.01, spec, Baseline(), "discrete", gaussians=[0.0])
    hit = step_absorbed(ens, 0.01, spec, Baseline(), "bridge", gaussians=[0.0], uniforms=[1e-6])
    assert not kept.absorbed[0] and hit.absorbed[0] and hit.positions[0] == 0.0


def test_negative_drift_equilibrium_is_baseline():
    cfg = _cfg(particles=10_000, horizon=3.0)
    eq = simulate(cfg, Equilibrium())
    base = simulate(cfg, Baseline())
    # B = b and Sigma = sigma pathwise, so the runs coincide draw by draw
    np.testing.assert_array_equal(eq.survival_fraction, base.survival_fraction)
    np.testing.assert_array_equal(eq.final_positions, base.final_positions)


def test_frozen_matches_equilibrium_for_negative_drift():
    cfg = _cfg(particles=500)
    curve = SurvivalCurve.constant(cfg.grid(), 0.7, 0.0)   # c1 = 0 keeps B^c = b when b < 0
    a = simulate(cfg, Frozen(curve))
    b = simulate(cfg, Equilibrium())
    np.testing.assert_array_equal(a.survival_fraction, b.survival_fraction)


# -- whole runs ------------------------------------------------------------

@pytest.mark.slow
def test_survival_matches_reflection_formula():
    rec = simulate(_cfg(particles=100_000))
    idx = 100
    assert rec.times[idx] == pytest.approx(1.0)
    assert rec.survival_fraction[idx] == pytest.approx(reflection_survival(1.0, -0.5, 1.0, 1.0), abs=0.01)
    assert rec.survival_fraction[idx] == pytest.approx(0.510, abs=0.01)


def test_far_particle_survives_short_horizon():
    absorbed = 0
    for seed in range(1000):
        cfg = _cfg(particles=1, horizon=0.01, steps=1, mu=0.0, x0=10.0, seed=seed)
        absorbed += simulate(cfg, Baseline()).survival_fraction[-1] < 1
    assert absorbed / 1000 < 0.001


def test_simulate_deterministic():
    cfg = ExperimentConfig(particles=300, steps=40)
    a, b = simulate(cfg), simulate(cfg)
    assert a.survival_fraction.tobytes() == b.survival_fraction.tobytes()
    assert a.empirical_c1.tobytes() == b.empirical_c1.tobytes()
    assert a.final_positions.tobytes() == b.final_positions.tobytes()


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32), lam=st.floats(-1.0, 2.0), absorption=st.sampled_from(["bridge", "discrete"]))
def test_run_invariants(seed, lam, absorption):
    cfg = ExperimentConfig(particles=200, steps=30, horizon=3.0, lam=lam, seed=seed,
                           absorption=absorption, record_paths=True)
    rec = simulate(cfg)
    assert rec.survival_fraction[0] == 1.0
    assert np.all(np.diff(rec.survival_fraction) <= 0)
    assert np.all(rec.empirical_c1 >= 0)
    # once at 0, always at 0
    dead = rec.paths == 0.0
    assert np.all(dead[1:] >= dead[:-1])
    assert np.all(rec.paths >= 0)


def test_baseline_default_curve_shape():
    cfg = ExperimentConfig(particles=500, steps=50)
    rec = baseline_default_curve(cfg)
    D = rec.default_probability
    assert D[0] == 0.0 and np.all(np.diff(D) >= 0)
    assert np.all(rec.stderr >= 0)


def test_holding_lowers_default():
    cfg = ExperimentConfig(particles=2000, steps=100)
    eq = simulate(cfg)
    base = baseline_default_curve(cfg)
    assert eq.default_probability[-1] < base.default_probability[-1]


# -- smoothed system -------------------------------------------------------

def test_smoothed_weight_examples():
    assert smoothed_weight(5, 0.0) == 0.0
    assert smoothed_weight(5, -1.0) == 0.0
    assert smoothed_weight(1, 1.0) == pytest.approx(math.exp(-1.0))


def test_smoothed_rejects_bad_n():
    with pytest.raises(ValueError):
        simulate_smoothed(ExperimentConfig(particles=10, steps=5), 0)


def test_smoothed_deterministic_and_monotone():
    cfg = ExperimentConfig(particles=300, steps=50)
    a = simulate_smoothed(cfg, 10)
    b = simulate_smoothed(cfg, 10)
    assert a.survival_fraction.tobytes() == b.survival_fraction.tobytes()
    assert np.all(np.diff(a.survival_fraction) <= 0)
    assert np.all(a.final_positions >= 0)
    assert np.all(a.empirical_c1 >= 0)
