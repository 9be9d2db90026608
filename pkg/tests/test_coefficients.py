import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutual_holding.coefficients import (
    OU,
    AffineDrift,
    AffineVol,
    ConstantDrift,
    ConstantVol,
    DriftVolSpec,
    SurvivalCurve,
    WeightedMeasure,
    _c1_from_values,
    equilibrium_coefficients,
    equilibrium_drift,
    equilibrium_strategy,
    equilibrium_vol,
    frozen_coefficients,
    smoothed_coefficients,
    smoothed_heaviside,
    solve_c1,
    solve_smoothed_c1,
)

from .oracles import bisect_c1

IDENTITY = DriftVolSpec(AffineDrift(1.0, 0.0), ConstantVol(1.0), "sign_changing")
NEG_HALF = DriftVolSpec(ConstantDrift(-1.0), ConstantVol(1.0))


def F(y, m, spec, t=0.0):
    alive = m.alive
    b = spec.b(t, m.positions[alive])
    return (1 + m.alive_mass) * y - np.dot(m.weights[alive], np.maximum(b + y, 0))


# -- c1 --------------------------------------------------------------------

def test_c1_dead_measure_is_zero():
    m = WeightedMeasure(np.zeros(3), np.full(3, 1 / 3))
    assert solve_c1(0.0, m, IDENTITY) == 0.0


def test_c1_dirac_two():
    oracle = bisect_c1([2.0], [1.0], lambda x: x)
    assert oracle == pytest.approx(2.0, abs=1e-12)
    assert solve_c1(0.0, WeightedMeasure.dirac(2.0), IDENTITY) == pytest.approx(oracle, abs=1e-10)


def test_c1_two_atoms_shifted_drift():
    spec = DriftVolSpec(AffineDrift(1.0, -2.0), ConstantVol(1.0), "sign_changing")
    m = WeightedMeasure([1.0, 3.0], [0.5, 0.5])
    oracle = bisect_c1([1.0, 3.0], [0.5, 0.5], lambda x: x - 2)
    assert oracle == pytest.approx(1 / 3, abs=1e-12)
    assert solve_c1(0.0, m, spec) == pytest.approx(oracle, abs=1e-10)


def test_c1_rejects_bad_tol():
    with pytest.raises(ValueError):
        solve_c1(0.0, WeightedMeasure.dirac(1.0), IDENTITY, tol=0)


measures = st.lists(
    st.tuples(st.floats(0, 5), st.floats(0.01, 1)), min_size=1, max_size=30
).map(lambda atoms: WeightedMeasure(
    [a for a, _ in atoms], np.array([w for _, w in atoms]) / sum(w for _, w in atoms)
))
affine_specs = st.tuples(st.floats(-3, 3), st.floats(-3, 3)).map(
    lambda p: DriftVolSpec(AffineDrift(*p), ConstantVol(1.0), "sign_changing")
)


@settings(max_examples=200, deadline=None)
@given(measures, affine_specs)
def test_c1_root_and_bound(m, spec):
    y = solve_c1(0.0, m, spec)
    upper = float(np.dot(m.weights[m.alive], np.maximum(spec.b(0, m.positions[m.alive]), 0)))
    assert abs(F(y, m, spec)) <= 1e-12
    assert 0.0 <= y <= upper


@settings(max_examples=200, deadline=None)
@given(measures, st.floats(0.01, 3), st.floats(0, 3))
def test_c1_bound_attained_for_positive_drift(m, intercept, slope):
    spec = DriftVolSpec(AffineDrift(slope, intercept), ConstantVol(1.0))
    upper = float(np.dot(m.weights[m.alive], spec.b(0, m.positions[m.alive])))
    y = solve_c1(0.0, m, spec)
    assert y <= upper
    assert y == pytest.approx(upper, rel=1e-14, abs=1e-15)


def test_c1_kernel_skips_empty():
    assert _c1_from_values([], []) == 0.0


# -- equilibrium coefficients -------------------------------------------------

def test_negative_constant_drift_is_untouched():
    m = WeightedMeasure([0.5, 2.0, 0.0], [0.2, 0.5, 0.3])
    assert equilibrium_coefficients(0.0, 1.3, m, NEG_HALF) == (-1.0, 1.0)


def test_dead_measure_gives_raw_coefficients():
    m = WeightedMeasure([0.0], [1.0])
    spec = DriftVolSpec(OU(1.0), ConstantVol(0.7))
    for x in (-1.0, 0.3, 2.5):
        B, S = equilibrium_coefficients(0.0, x, m, spec)
        assert B == pytest.approx(1.0 - x)
        assert S == pytest.approx(0.7)


def test_dirac_two_at_one():
    # c1 = 2 from the bisection oracle; B = (1 + 2)/2, Sigma = 1/(1 + 1)
    m = WeightedMeasure.dirac(2.0)
    assert equilibrium_drift(0.0, 1.0, m, IDENTITY) == pytest.approx(1.5, abs=1e-10)
    assert equilibrium_vol(0.0, 1.0, m, IDENTITY) == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(measures, affine_specs, st.floats(-5, 5))
def test_sigma_bounds(m, spec, x):
    S = equilibrium_vol(0.0, x, m, spec)
    assert 0.5 - 1e-15 <= S <= 1.0


@settings(max_examples=100, deadline=None)
@given(measures, st.floats(0.01, 3), st.floats(0, 2), st.floats(0, 5))
def test_positive_regime_closed_form(m, intercept, slope, x):
    spec = DriftVolSpec(AffineDrift(slope, intercept), ConstantVol(1.3), "positive")
    a = m.alive_mass
    mean_b = np.dot(m.weights[m.alive], spec.b(0, m.positions[m.alive]))
    B, S = equilibrium_coefficients(0.0, x, m, spec)
    assert B == pytest.approx((spec.b(0, x) + mean_b) / (1 + a), rel=1e-12, abs=1e-12)
    assert S == pytest.approx(1.3 / (1 + a), rel=1e-12)


def test_array_positions():
    m = WeightedMeasure.dirac(2.0)
    B, S = equilibrium_coefficients(0.0, np.array([1.0, -3.0]), m, IDENTITY)
    np.testing.assert_allclose(B, [1.5, -1.0])
    np.testing.assert_allclose(S, [0.5, 1.0])


# -- strategy --------------------------------------------------------------

def test_strategy_negative_drift_never_holds():
    m = WeightedMeasure([1.0, 2.0], [0.5, 0.5])
    assert all(equilibrium_strategy(0.0, x, y, m, NEG_HALF) == 0 for x in (0.1, 3) for y in (0.1, 5))


def test_strategy_dead_measure():
    assert equilibrium_strategy(0.0, 0.5, 1.0, WeightedMeasure([0.0], [1.0]), IDENTITY) == 1


def test_strategy_boundary_is_zero():
    # B(t, -2, delta_2) = 0 exactly with b(x) = x; ties go to 0
    assert equilibrium_drift(0.0, -2.0, WeightedMeasure.dirac(2.0), IDENTITY) == 0.0
    assert equilibrium_strategy(0.0, 1.0, -2.0, WeightedMeasure.dirac(2.0), IDENTITY) == 0


@settings(max_examples=100, deadline=None)
@given(measures, affine_specs, st.floats(-5, 5), st.floats(-5, 5))
def test_strategy_matches_drift_sign(m, spec, x, y):
    assert equilibrium_strategy(0.0, x, y, m, spec) == int(equilibrium_drift(0.0, y, m, spec) > 0)


# -- smoothing -------------------------------------------------------------

def test_heaviside_values():
    assert smoothed_heaviside(7, -1.0) == 0.0
    assert smoothed_heaviside(3, 0.0) == 0.0
    assert smoothed_heaviside(1, 1.0) == pytest.approx(math.exp(-1))
    assert smoothed_heaviside(100, 1.0) == pytest.approx(math.exp(-0.01))
    assert smoothed_heaviside(1, 1e-300) == 0.0


@given(st.floats(-10, 10), st.floats(0, 5), st.integers(1, 50), st.integers(0, 50))
def test_heaviside_monotone(x, dx, n, dn):
    assert smoothed_heaviside(n, x) <= smoothed_heaviside(n, x + dx)
    assert smoothed_heaviside(n, x) <= smoothed_heaviside(n + dn, x)


def test_heaviside_rejects_n_zero():
    with pytest.raises(ValueError):
        smoothed_heaviside(0, 1.0)


def test_smoothed_dead_measure():
    m = WeightedMeasure([0.0, 0.0], [0.5, 0.5])
    spec = DriftVolSpec(OU(1.0), ConstantVol(1.0))
    assert smoothed_coefficients(5, 0.0, 0.4, m, spec) == pytest.approx((0.6, 1.0))


def test_smoothed_c1_n1_against_bisection():
    h = math.exp(-0.5)
    # weights w H^1(2) with alive mass m(H^1) = h: same root problem, reweighted
    oracle = bisect_c1([2.0], [h], lambda x: x)
    assert oracle == pytest.approx(2 * h, abs=1e-12)
    c1, mass = solve_smoothed_c1(1, 0.0, WeightedMeasure.dirac(2.0), IDENTITY)
    assert mass == pytest.approx(h)
    assert c1 == pytest.approx(oracle, abs=1e-10)


def test_smoothed_converges_to_limit():
    m = WeightedMeasure.dirac(2.0)
    gaps = []
    for n in (1, 10, 100, 10_000, 1_000_000):
        B, S = smoothed_coefficients(n, 0.0, 1.0, m, IDENTITY)
        gaps.append(abs(B - 1.5) + abs(S - 0.5))
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-5


# -- frozen ----------------------------------------------------------------

GRID = np.linspace(0, 1, 5)


def test_frozen_negative_branch():
    curve = SurvivalCurve.constant(GRID, 1.0, 0.0)
    assert frozen_coefficients(0.5, 2.0, curve, NEG_HALF) == (-1.0, 1.0)


@pytest.mark.parametrize("x, expected", [(0.0, (1.0, 0.5)), (3.0, (-1.0, 1.0))])
def test_frozen_ou(x, expected):
    spec = DriftVolSpec(OU(1.0), ConstantVol(1.0))
    curve = SurvivalCurve.constant(GRID, 1.0, 1.0)
    assert frozen_coefficients(0.3, x, curve, spec) == pytest.approx(expected)


def test_frozen_ou_indicator_form():
    lam = 1.0
    spec = DriftVolSpec(OU(lam), ConstantVol(1.0))
    curve = SurvivalCurve(GRID, [1, 0.9, 0.8, 0.6, 0.5], [0.3, 0.2, 0.2, 0.1, 0.0])
    for t in GRID:
        c0, c1 = curve.at(t)
        for x in np.linspace(-1, 3, 17):
            B, S = frozen_coefficients(t, x, curve, spec)
            assert S == pytest.approx(1 / (1 + c0 * (x < lam + c1)))


def test_frozen_left_continuous_lookup():
    curve = SurvivalCurve(GRID, [1, 0.9, 0.8, 0.6, 0.5], np.zeros(5))
    assert curve.at(0.0)[0] == 1.0
    assert curve.at(0.1)[0] == 0.9      # (0, 0.25] -> index 1
    assert curve.at(0.25)[0] == 0.9
    assert curve.at(0.2500001)[0] == 0.8


def test_frozen_rejects_beyond_horizon():
    with pytest.raises(ValueError):
        frozen_coefficients(1.5, 0.0, SurvivalCurve.constant(GRID), NEG_HALF)


# -- types -----------------------------------------------------------------

def test_measure_validation():
    with pytest.raises(ValueError):
        WeightedMeasure([-1.0], [1.0])
    with pytest.raises(ValueError):
        WeightedMeasure([1.0], [0.0])
    m = WeightedMeasure([0.0, 1e-300, 2.0], [0.1, 0.2, 0.3])
    assert m.alive_mass == pytest.approx(0.5)
    assert m.total_mass == pytest.approx(0.6, rel=1e-12)


def test_spec_sign_regime_validation():
    with pytest.raises(ValueError):
        DriftVolSpec(ConstantDrift(0.5), ConstantVol(1.0), "nonpositive")
    with pytest.raises(ValueError):
        DriftVolSpec(OU(1.0), ConstantVol(1.0), "positive")
    with pytest.raises(ValueError):
        DriftVolSpec(ConstantDrift(-1), ConstantVol(0.0))
    assert DriftVolSpec(OU(1.0)).sign_regime == "sign_changing"
    assert DriftVolSpec(AffineDrift(0.5, 0.1)).sign_regime == "positive"
    assert DriftVolSpec(OU(-0.5)).sign_regime == "nonpositive"


def test_affine_vol_floor():
    vol = AffineVol(-1.0, 1.0, 0.2)
    np.testing.assert_allclose(vol(0, np.array([0.0, 0.5, 3.0])), [1.0, 0.5, 0.2])


def test_curve_validation():
    with pytest.raises(ValueError):
        SurvivalCurve([0, 0, 1], [1, 1, 1], [0, 0, 0])
    with pytest.raises(ValueError):
        SurvivalCurve([0, 1], [1, 1.2], [0, 0])
    with pytest.raises(ValueError):
        SurvivalCurve([0, 1], [1, 1], [0, -1])
