"""Euler-Maruyama particle systems absorbed at the origin.

Three dynamics share one stepping kernel:

* ``Equilibrium()`` -- the interacting system, coefficients evaluated against
  the current empirical measure (absorbed particles are atoms at 0);
* ``Frozen(curve)`` -- coefficients frozen to a survival curve;
* ``Baseline()`` -- the stopped SDE with the raw idiosyncratic coefficients,
  i.e. no mutual holding.

The smoothed system is stepped separately: it is never absorbed, and alive-ness
is carried by a mollified weight of the running minimum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import _rng
from .coefficients import (
    C1_TOL,
    DriftVolSpec,
    SurvivalCurve,
    WeightedMeasure,
    _c1_from_values,
    _equilibrium_from_c1,
    _frozen_from_values,
    _smoothed_from_c1,
    smoothed_heaviside,
)

logger = logging.getLogger(__name__)

POSITION_CAP = 1e9
ABSORPTION_SCHEMES = ("bridge", "discrete")


# --------------------------------------------------------------------------
# initial laws
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Exponential:
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("exponential rate must be > 0")

    def sample(self, seed, size):
        return _rng.substream(seed, _rng.INITIAL).exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class PointMass:
    x0: float

    def __post_init__(self):
        if not self.x0 > 0:
            raise ValueError(f"point mass must sit in (0, inf), got {self.x0}")

    def sample(self, seed, size):
        return np.full(size, float(self.x0))


@dataclass(frozen=True)
class ShiftedGaussianAbs:
    """``|Z|/n + max(X0, 1/n)`` with ``X0 ~ base``: keeps mass away from 0 at rate ``1/n``."""
    base: object
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def sample(self, seed, size):
        x0 = self.base.sample(seed, size)
        z = _rng.substream(seed, _rng.SMOOTH_SHIFT).standard_normal(size)
        return np.abs(z) / self.n + np.maximum(x0, 1.0 / self.n)


@dataclass(frozen=True)
class Empirical:
    """Resample-free initial law: the given positions, in order."""
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0 or min(self.values) <= 0:
            raise ValueError("empirical initial law must be non-empty and supported in (0, inf)")

    def sample(self, seed, size):
        if size != len(self.values):
            raise ValueError(f"empirical law has {len(self.values)} atoms, asked for {size}")
        return np.asarray(self.values, dtype=float)


# --------------------------------------------------------------------------
# ensembles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Equilibrium:
    pass


@dataclass(frozen=True)
class Frozen:
    curve: SurvivalCurve


@dataclass(frozen=True)
class Baseline:
    pass


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    running_min: np.ndarray
    absorbed: np.ndarray
    time: float
    master_seed: int
    step: int = 0

    @property
    def size(self) -> int:
        return self.positions.size

    def alive_fraction(self) -> float:
        return float(np.mean(~self.absorbed))

    def empirical_measure(self) -> WeightedMeasure:
        return WeightedMeasure.from_samples(self.positions)


@dataclass
class PathRecord:
    times: np.ndarray
    survival_fraction: np.ndarray
    empirical_c1: np.ndarray
    final_positions: np.ndarray
    n_particles: int
    paths: np.ndarray | None = None

    @property
    def default_probability(self) -> np.ndarray:
        return 1.0 - self.survival_fraction

    @property
    def stderr(self) -> np.ndarray:
        p = self.survival_fraction
        return np.sqrt(p * (1.0 - p) / self.n_particles)


def sample_initial(law, n_particles: int, seed: int) -> ParticleEnsemble:
    if n_particles < 1:
        raise ValueError("need at least one particle")
    x = np.asarray(law.sample(seed, n_particles), dtype=float)
    if np.any(x <= 0):
        raise ValueError("initial law must be supported in (0, inf)")
    return ParticleEnsemble(
        positions=x,
        running_min=x.copy(),
        absorbed=np.zeros(n_particles, dtype=bool),
        time=0.0,
        master_seed=int(seed),
    )


# --------------------------------------------------------------------------
# stepping
# --------------------------------------------------------------------------

def _coefficients(ens: ParticleEnsemble, spec: DriftVolSpec, mode, t):
    """Drift and volatility at the alive positions, plus c1 of the empirical measure."""
    alive = ~ens.absorbed
    x = ens.positions[alive]
    bx = spec.b(t, x)
    sx = spec.sigma(t, x)
    w = np.full(x.size, 1.0 / ens.size)
    c1 = _c1_from_values(bx, w, tol=C1_TOL)
    if isinstance(mode, Equilibrium):
        B, Sigma = _equilibrium_from_c1(bx, sx, c1, x.size / ens.size)
    elif isinstance(mode, Frozen):
        c0_t, c1_t = mode.curve.at(t)
        B, Sigma = _frozen_from_values(bx, sx, c0_t, c1_t)
    elif isinstance(mode, Baseline):
        B, Sigma = bx, sx
    else:
        raise TypeError(f"unknown mode {mode!r}")
    return B, Sigma, c1


def _cap(x):
    over = np.abs(x) > POSITION_CAP
    if over.any():
        logger.warning("clipping %d positions at +-%g", int(over.sum()), POSITION_CAP)
        x = np.clip(x, -POSITION_CAP, POSITION_CAP)
    return x


def _bridge_crossed(y, y_new, Sigma, dt, u):
    """Brownian-bridge crossing test between two positive endpoints."""
    with np.errstate(over="ignore"):
        p = np.exp(-2.0 * y * y_new / (Sigma**2 * dt))
    return u < p


def _advance(ens, dt, B, Sigma, absorption, gaussians=None, uniforms=None):
    if absorption not in ABSORPTION_SCHEMES:
        raise ValueError(f"absorption must be one of {ABSORPTION_SCHEMES}")
    alive = ~ens.absorbed
    n_alive = int(alive.sum())
    if gaussians is None:
        gaussians = _rng.normals(ens.master_seed, _rng.GAUSS, ens.step, ens.size)
    g = np.asarray(gaussians, dtype=float)[alive]

    y = ens.positions[alive]
    y_new = _cap(y + B * dt + Sigma * np.sqrt(dt) * g)
    hit = y_new <= 0
    if absorption == "bridge" and n_alive:
        if uniforms is None:
            uniforms = _rng.uniforms(ens.master_seed, _rng.BRIDGE, ens.step, ens.size)
        u = np.asarray(uniforms, dtype=float)[alive]
        hit |= _bridge_crossed(y, np.maximum(y_new, 0.0), Sigma, dt, u)

    positions = ens.positions.copy()
    running_min = ens.running_min.copy()
    absorbed = ens.absorbed.copy()
    y_new = np.where(hit, 0.0, y_new)
    positions[alive] = y_new
    running_min[alive] = np.minimum(running_min[alive], y_new)
    idx = np.flatnonzero(alive)[hit]
    absorbed[idx] = True
    return ParticleEnsemble(positions, running_min, absorbed, ens.time + dt, ens.master_seed, ens.step + 1)


def step_absorbed(ens: ParticleEnsemble, dt: float, spec: DriftVolSpec, mode=Equilibrium(),
                  absorption: str = "bridge", gaussians=None, uniforms=None) -> ParticleEnsemble:
    """One explicit Euler step for every alive particle; returns a new ensemble.

    Coefficients are taken at the left endpoint. ``gaussians`` / ``uniforms``
    override the keyed random draws (one entry per particle, alive or not).
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if ens.absorbed.all():
        return replace(ens, time=ens.time + dt, step=ens.step + 1)
    B, Sigma, _ = _coefficients(ens, spec, mode, ens.time)
    return _advance(ens, dt, B, Sigma, absorption, gaussians, uniforms)


def simulate(config, mode=Equilibrium(), spec: DriftVolSpec | None = None, law=None) -> PathRecord:
    """Run the absorbed particle system over ``config``'s grid."""
    spec = spec or config.spec()
    law = law or config.law()
    times = config.grid()
    dt = config.dt
    ens = sample_initial(law, config.particles, config.seed)
    survival = np.empty(times.size)
    c1_path = np.empty(times.size)
    paths = np.empty((times.size, ens.size)) if config.record_paths else None

    for k, t in enumerate(times):
        survival[k] = ens.alive_fraction()
        if paths is not None:
            paths[k] = ens.positions
        if ens.absorbed.all():
            c1_path[k] = 0.0
            if k < times.size - 1:
                ens = replace(ens, time=times[k + 1], step=ens.step + 1)
            continue
        B, Sigma, c1_path[k] = _coefficients(ens, spec, mode, t)
        if k < times.size - 1:
            ens = _advance(ens, dt, B, Sigma, config.absorption)

    return PathRecord(times, survival, c1_path, ens.positions.copy(), ens.size, paths)


def baseline_default_curve(config, spec: DriftVolSpec | None = None) -> PathRecord:
    """Default probability without mutual holding: ``record.default_probability``."""
    return simulate(config, Baseline(), spec)


# --------------------------------------------------------------------------
# smoothed system
# --------------------------------------------------------------------------

def smoothed_weight(n, running_min):
    """Alive-ness weight ``H^n(inf_{s<=t} Y_s)`` of a smoothed particle."""
    return smoothed_heaviside(n, running_min)


def _bridge_minimum(y, y_new, Sigma, dt, u):
    """Sample of the bridge minimum between ``y`` and ``y_new``, driven by ``u`` in (0, 1].

    Uses the same uniform as the absorbed system's crossing test, so the
    minimum is <= 0 exactly when that test would absorb.
    """
    disc = (y_new - y) ** 2 - 2.0 * Sigma**2 * dt * np.log(u)
    return 0.5 * (y + y_new - np.sqrt(disc))


def simulate_smoothed(config, n: int, spec: DriftVolSpec | None = None, law=None) -> PathRecord:
    """Smoothed interacting system ``Y^n``: never absorbed, weighted by ``H^n(I^n)``.

    The recorded survival is that of the induced process ``X^n = Y^n 1{I^n > 0}``
    and ``final_positions`` are ``X^n_T``. Under bridge absorption the running
    minimum includes a sampled bridge minimum per step, which keeps survival
    comparable with :func:`simulate` at equal seeds.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = spec or config.spec()
    base = law or config.law()
    times = config.grid()
    dt = config.dt
    seed = config.seed
    N = config.particles
    y = np.asarray(ShiftedGaussianAbs(base, n).sample(seed, N), dtype=float)
    running_min = y.copy()
    survival = np.empty(times.size)
    c1_path = np.empty(times.size)
    paths = np.empty((times.size, N)) if config.record_paths else None

    for k, t in enumerate(times):
        survival[k] = np.mean(running_min > 0)
        if paths is not None:
            paths[k] = np.where(running_min > 0, y, 0.0)
        atoms = y * smoothed_heaviside(n, running_min)
        h = smoothed_heaviside(n, atoms) / N
        keep = h > 0
        c1 = _c1_from_values(spec.b(t, atoms[keep]), h[keep], tol=C1_TOL)
        c1_path[k] = c1
        if k == times.size - 1:
            break
        B, Sigma = _smoothed_from_c1(n, spec.b(t, y), spec.sigma(t, y), c1, float(h.sum()))
        g = _rng.normals(seed, _rng.GAUSS, k, N)
        y_new = _cap(y + B * dt + Sigma * np.sqrt(dt) * g)
        if config.absorption == "bridge":
            u = _rng.uniforms(seed, _rng.BRIDGE, k, N)
            step_min = np.minimum(_bridge_minimum(y, y_new, Sigma, dt, u), y_new)
        else:
            step_min = y_new
        running_min = np.minimum(running_min, step_min)
        y = y_new

    final = np.where(running_min > 0, y, 0.0)
    return PathRecord(times, survival, c1_path, final, N, paths)
