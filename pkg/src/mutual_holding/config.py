"""Experiment configuration: flat ``key = value`` files, CLI overrides, provenance hash."""
from __future__ import annotations

import dataclasses
import hashlib
import warnings
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .coefficients import OU, AffineDrift, AffineVol, ConstantDrift, ConstantVol, DriftVolSpec
from .particles import ABSORPTION_SCHEMES, Exponential, PointMass

__all__ = ["ExperimentConfig", "load_config", "parse_config_text", "PAPER_SCALE"]

PAPER_SCALE = {"paths": 10_000, "particles": 10_000, "steps": 200, "iterations": 200}

# not part of the result-determining state
_NON_HASHED = {"output_dir"}


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of a run.

    Drift families: ``ou`` (``lam - x``), ``constant`` (``mu``), ``affine``
    (``drift_slope * x + drift_intercept``). Volatility: ``constant`` (``sigma``)
    or ``affine`` (``max(vol_slope * x + vol_intercept, vol_floor)``).
    ``q`` is the moment exponent of the initial law; it is documentation only.
    """
    horizon: float = 10.0
    steps: int = 100
    paths: int = 2000
    particles: int = 2000
    drift: str = "ou"
    lam: float = 1.0
    mu: float = -0.5
    drift_slope: float = 0.0
    drift_intercept: float = 0.0
    vol: str = "constant"
    sigma: float = 1.0
    vol_slope: float = 0.0
    vol_intercept: float = 1.0
    vol_floor: float = 0.1
    sign_regime: str = "auto"
    initial_law: str = "exponential"
    rate: float = 1.0
    x0: float = 1.0
    q: float = 2.0
    seed: int = 20240601
    absorption: str = "bridge"
    crn: bool = True
    iterations: int = 50
    stop_tol: float = 0.0
    project: bool = True
    smoothing_n: int = 10
    record_paths: bool = False
    output_dir: str = "results"

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        for name in ("steps", "paths", "particles", "iterations", "smoothing_n"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.absorption not in ABSORPTION_SCHEMES:
            raise ValueError(f"absorption must be one of {ABSORPTION_SCHEMES}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be >= 0")
        # fail early on bad model parameters
        self.spec()
        self.law()

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def spec(self) -> DriftVolSpec:
        if self.drift == "ou":
            drift = OU(self.lam)
        elif self.drift == "constant":
            drift = ConstantDrift(self.mu)
        elif self.drift == "affine":
            drift = AffineDrift(self.drift_slope, self.drift_intercept)
        else:
            raise ValueError(f"unknown drift family {self.drift!r}")
        if self.vol == "constant":
            vol = ConstantVol(self.sigma)
        elif self.vol == "affine":
            vol = AffineVol(self.vol_slope, self.vol_intercept, self.vol_floor)
        else:
            raise ValueError(f"unknown vol family {self.vol!r}")
        regime = None if self.sign_regime == "auto" else self.sign_regime
        return DriftVolSpec(drift, vol, regime)

    def law(self):
        if self.initial_law == "exponential":
            return Exponential(self.rate)
        if self.initial_law == "point":
            return PointMass(self.x0)
        raise ValueError(f"unknown initial law {self.initial_law!r}")

    def warnings(self) -> list[str]:
        out = []
        if self.q <= 1:
            out.append(f"q={self.q} <= 1: the initial law must have a finite moment of order q > 1")
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def paper_scale(self) -> "ExperimentConfig":
        return self.replace(**PAPER_SCALE)

    def to_text(self, hashed_only: bool = False) -> str:
        lines = []
        for f in fields(self):
            if hashed_only and f.name in _NON_HASHED:
                continue
            lines.append(f"{f.name} = {_format(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text(hashed_only=True).encode()).hexdigest()[:16]


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    if name not in types:
        raise KeyError(f"unknown config key {name!r}")
    kind = types[name]
    raw = raw.strip()
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """``key = value`` per line; ``#`` starts a comment; blank lines ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        values[key] = _coerce(key, raw)
    return values


def load_config(path=None, overrides: dict | None = None, paper_scale: bool = False) -> ExperimentConfig:
    """Defaults, then the file, then the paper-scale preset, then explicit overrides."""
    values = {}
    if path is not None:
        values.update(parse_config_text(Path(path).read_text()))
    if paper_scale:
        values.update(PAPER_SCALE)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig(**values)
    for msg in cfg.warnings():
        warnings.warn(msg, stacklevel=2)
    return cfg
