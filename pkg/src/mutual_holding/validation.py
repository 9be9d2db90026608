"""Desk-scale invariant and oracle checks behind the ``validate`` subcommand."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import coefficients as coef
from .analysis import (
    analytic_survival_bm,
    holder_constant,
    inverse_form,
    stieltjes_form,
    wasserstein1,
)
from .coefficients import AffineDrift, ConstantDrift, ConstantVol, DriftVolSpec, WeightedMeasure
from .particles import simulate, simulate_smoothed

__all__ = ["CheckResult", "run_checks", "format_table", "FAULTS"]

FAULTS = ("flip_B_sign",)
SMOOTHING_LEVELS = (1, 10, 100)
CHAOS_SIZES = (500, 5000)
CHAOS_SEEDS = 5


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    informational: bool = False


def _random_measure(rng, size):
    pos = np.where(rng.random(size) < 0.2, 0.0, rng.exponential(1.5, size))
    w = rng.random(size) + 1e-3
    return WeightedMeasure(pos, w / w.sum())


def _equilibrium(fault):
    """The coefficient kernel under test; ``fault`` swaps in a deliberately broken one."""
    if fault is None:
        return coef._equilibrium_from_c1
    if fault == "flip_B_sign":
        def broken(bx, sx, c1, alive_mass):
            B, S = coef._equilibrium_from_c1(bx, sx, c1, alive_mass)
            return -B, S
        return broken
    raise ValueError(f"unknown fault {fault!r}; known: {FAULTS}")


# --------------------------------------------------------------------------
# individual checks; each returns (passed, detail)
# --------------------------------------------------------------------------

def check_c1_solver(rng):
    worst_F, bound_ok = 0.0, True
    for _ in range(100):
        m = _random_measure(rng, int(rng.integers(1, 40)))
        spec = DriftVolSpec(AffineDrift(rng.uniform(-2, 2), rng.uniform(-2, 2)), ConstantVol(1.0))
        c1 = coef.solve_c1(0.0, m, spec)
        b = spec.b(0.0, m.positions[m.alive])
        w = m.weights[m.alive]
        F = (1 + w.sum()) * c1 - np.dot(w, np.maximum(b + c1, 0.0))
        worst_F = max(worst_F, abs(F))
        bound_ok &= 0.0 <= c1 <= np.dot(w, np.maximum(b, 0.0)) + 1e-15
    ident = DriftVolSpec(AffineDrift(1.0, 0.0), ConstantVol(1.0))
    shifted = DriftVolSpec(AffineDrift(1.0, -2.0), ConstantVol(1.0))
    d2 = coef.solve_c1(0.0, WeightedMeasure.dirac(2.0), ident)
    two = coef.solve_c1(0.0, WeightedMeasure([1.0, 3.0], [0.5, 0.5]), shifted)
    ok = worst_F <= 1e-12 and bound_ok and abs(d2 - 2.0) <= 1e-10 and abs(two - 1 / 3) <= 1e-10
    return ok, f"max|F|={worst_F:.2e} bounds={'ok' if bound_ok else 'violated'} dirac={d2:.12f} two-atom={two:.12f}"


def check_identities(rng, fault=None):
    kernel = _equilibrium(fault)
    n = 10_000
    # non-positive drift: the formulas must return (b, sigma) unchanged
    bx = -rng.exponential(1.0, n) * (rng.random(n) < 0.9)
    sx = rng.uniform(0.1, 3.0, n)
    a = rng.random(n)
    # c1 solves to 0 when every alive drift is <= 0
    B, S = kernel(bx, sx, 0.0, a)
    neg_ok = bool(np.all(B == bx) and np.all(S == sx))
    # positive drift: B = (b + int b dm)/(1 + a), Sigma = sigma/(1 + a)
    pos_err = 0.0
    for _ in range(200):
        m = _random_measure(rng, int(rng.integers(1, 50)))
        spec = DriftVolSpec(AffineDrift(rng.uniform(0, 2), rng.uniform(0.01, 2)), ConstantVol(rng.uniform(0.1, 3)))
        x = rng.exponential(2.0, 50)
        c1 = coef.solve_c1(0.0, m, spec)
        B, S = kernel(spec.b(0.0, x), spec.sigma(0.0, x), c1, m.alive_mass)
        mean_b = np.dot(m.weights[m.alive], spec.b(0.0, m.positions[m.alive]))
        a = m.alive_mass
        pos_err = max(pos_err,
                      np.max(np.abs(B - (spec.b(0.0, x) + mean_b) / (1 + a))),
                      np.max(np.abs(S - spec.sigma(0.0, x) / (1 + a))))
    ok = neg_ok and pos_err <= 1e-12
    return ok, f"b<=0 exact={'yes' if neg_ok else 'no'} b>0 max err={pos_err:.2e}"


def check_sigma_bounds(rng):
    worst = 0.0
    for _ in range(300):
        m = _random_measure(rng, int(rng.integers(1, 30)))
        spec = DriftVolSpec(AffineDrift(rng.uniform(-2, 2), rng.uniform(-2, 2)), ConstantVol(1.0))
        _, S = coef.equilibrium_coefficients(0.0, rng.uniform(-1, 5, 20), m, spec)
        worst = max(worst, np.max(np.maximum(0.5 - S, S - 1.0)))
    return worst <= 1e-15, f"max violation of [sigma/2, sigma]: {max(worst, 0.0):.2e}"


def check_strategy(rng):
    mismatches = 0
    for _ in range(300):
        m = _random_measure(rng, int(rng.integers(1, 30)))
        spec = DriftVolSpec(AffineDrift(rng.uniform(-2, 2), rng.uniform(-2, 2)), ConstantVol(1.0))
        y = float(rng.uniform(-1, 5))
        pi = coef.equilibrium_strategy(0.0, 1.0, y, m, spec)
        mismatches += pi != int(coef.equilibrium_drift(0.0, y, m, spec) > 0)
    return mismatches == 0, f"{mismatches} mismatches in 300 draws"


def check_absorption(config):
    rec = simulate(config.replace(particles=min(config.particles, 1000), record_paths=True))
    dead = rec.paths == 0.0
    permanent = bool(np.all(dead[1:] >= dead[:-1]))
    monotone = bool(np.all(np.diff(rec.survival_fraction) <= 0))
    c1_ok = bool(np.all(rec.empirical_c1 >= 0))
    return permanent and monotone and c1_ok, (
        f"permanent={permanent} survival non-increasing={monotone} c1>=0={c1_ok}")


def check_wasserstein(rng):
    ok = True
    for _ in range(200):
        n = int(rng.integers(1, 30))
        a, b, c = (rng.normal(size=n) * rng.uniform(0.1, 5) for _ in range(3))
        ab, ba = wasserstein1(a, b), wasserstein1(b, a)
        ok &= ab == ba and wasserstein1(a, a) == 0.0 and ab > 0
        ok &= wasserstein1(a, c) <= ab + wasserstein1(b, c) + 1e-12
    return ok, "symmetry, identity, positivity, triangle inequality on 200 triples"


def check_oracle(config):
    cfg = config.replace(horizon=2.0, steps=100, particles=100_000, drift="constant", mu=-0.5,
                         vol="constant", sigma=1.0, initial_law="point", x0=1.0, absorption="bridge")
    rec = simulate(cfg)
    gaps = []
    for t in (0.5, 1.0, 2.0):
        k = int(round(t / cfg.dt))
        gaps.append(abs(rec.survival_fraction[k] - analytic_survival_bm(1.0, -0.5, 1.0, t)))
    return max(gaps) <= 0.01, "survival gaps at t=0.5,1,2: " + ", ".join(f"{g:.4f}" for g in gaps)


def smoothed_gaps(config, levels=SMOOTHING_LEVELS):
    ref = simulate(config).survival_fraction
    return [float(np.max(np.abs(simulate_smoothed(config, n).survival_fraction - ref))) for n in levels]


def check_smoothed(config):
    gaps = smoothed_gaps(config)
    ok = all(b <= a for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 0.05
    return ok, "sup|c0^n - c0| for n=1,10,100: " + ", ".join(f"{g:.4f}" for g in gaps)


def chaos_gaps(config, sizes=CHAOS_SIZES, n_seeds=CHAOS_SEEDS):
    """Mean W1 between two independent runs of each size, at time T."""
    out = []
    for N in sizes:
        vals = []
        for s in range(n_seeds):
            cfg = config.replace(particles=N)
            a = simulate(cfg.replace(seed=config.seed + 2 * s + 1)).final_positions
            b = simulate(cfg.replace(seed=config.seed + 2 * s + 2)).final_positions
            vals.append(wasserstein1(a, b))
        out.append(float(np.mean(vals)))
    return out


def check_chaos(config):
    gaps = chaos_gaps(config)
    slope = float(np.polyfit(np.log(CHAOS_SIZES), np.log(gaps), 1)[0])
    ok = gaps[-1] < gaps[0] and slope < 0
    return ok, f"W1 at N={CHAOS_SIZES}: {gaps[0]:.4f}, {gaps[1]:.4f}; log-log slope {slope:.3f}"


def check_change_of_variables():
    grid = np.linspace(0, 10, 201)
    c0 = 1 - 0.6 * (1 - np.exp(-grid / 3))
    worst = 0.0
    for k in (5, 50, 200):
        s = grid[k]

        def g(t, s=s):
            return 0.5 + 0.4 * np.exp(-(s - t)) * np.cos(t)

        worst = max(worst, abs(stieltjes_form(g(grid), c0, k) - inverse_form(g, grid, c0, s)))
    return worst <= 1e-3, f"max |sum - integral| = {worst:.2e}"


def check_holder(config):
    rec = simulate(config)
    C = holder_constant(rec.times, rec.survival_fraction)
    return True, f"fitted C for |c0(t)-c0(s)| <= C dt^(1/6): {C:.4f}"


# --------------------------------------------------------------------------

def run_checks(config, fault: str | None = None) -> list[CheckResult]:
    """Run every check at ``config``'s desk scale. ``fault`` is a test hook (see ``FAULTS``)."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {FAULTS}")
    rng = np.random.default_rng(config.seed)
    plan = [
        ("c1 solver exactness", lambda: check_c1_solver(rng)),
        ("coefficient identities", lambda: check_identities(rng, fault)),
        ("sigma bounds", lambda: check_sigma_bounds(rng)),
        ("strategy-drift equivalence", lambda: check_strategy(rng)),
        ("absorption and monotone survival", lambda: check_absorption(config)),
        ("wasserstein axioms", lambda: check_wasserstein(rng)),
        ("first-passage oracle", lambda: check_oracle(config)),
        ("smoothed convergence", lambda: check_smoothed(config)),
        ("propagation of chaos", lambda: check_chaos(config)),
        ("stieltjes vs inverse form", check_change_of_variables),
    ]
    results = []
    for name, fn in plan:
        t0 = time.perf_counter()
        ok, detail = fn()
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    t0 = time.perf_counter()
    ok, detail = check_holder(config)
    results.append(CheckResult("holder regularity (diagnostic)", ok, detail, time.perf_counter() - t0, True))
    for msg in config.warnings():
        results.append(CheckResult("config warning", True, msg, 0.0, True))
    return results


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = []
    for r in results:
        status = "INFO" if r.informational else ("PASS" if r.passed else "FAIL")
        lines.append(f"{status:4}  {r.name:<{width}}  {r.seconds:7.2f}s  {r.detail}")
    return "\n".join(lines)
