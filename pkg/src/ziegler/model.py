"""Pendulum configurations and the M, D, K matrices of the linearized model.

Joints and masses are numbered from the base upward: stiffness/damping ``i``
belongs to joint ``i`` (joint 1 clamps the first rod to the ground) and mass
``i`` sits at the upper end of rod ``i``, so mass ``m`` is the free-end mass.
The generalized coordinates are the absolute rod angles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError


def _as_tuple(values, name):
    try:
        out = tuple(float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a list of numbers") from exc
    if not all(math.isfinite(v) for v in out):
        raise ConfigError(f"{name} contains non-finite values")
    return out


@dataclass(frozen=True)
class PendulumConfig:
    """Physical description of an m-link Ziegler pendulum.

    ``dampings`` defaults to all zeros (undamped, purely circulatory system).
    """

    link_count: int
    link_length: float
    masses: tuple[float, ...]
    stiffnesses: tuple[float, ...]
    dampings: tuple[float, ...] = field(default=())

    def __post_init__(self):
        m = self.link_count
        if isinstance(m, bool) or int(m) != m:
            raise ConfigError("link_count must be an integer")
        m = int(m)
        object.__setattr__(self, "link_count", m)
        if m < 2:
            raise ConfigError("the model needs at least two links")
        length = float(self.link_length)
        if not math.isfinite(length) or length <= 0:
            raise ConfigError("link_length must be finite and positive")
        object.__setattr__(self, "link_length", length)

        masses = _as_tuple(self.masses, "masses")
        stiff = _as_tuple(self.stiffnesses, "stiffnesses")
        damp = _as_tuple(self.dampings, "dampings") if len(self.dampings) else (0.0,) * m
        for name, seq in (("masses", masses), ("stiffnesses", stiff), ("dampings", damp)):
            if len(seq) != m:
                raise ConfigError(f"{name} must have link_count={m} entries, got {len(seq)}")
        if any(v < 0 for v in masses):
            raise ConfigError("masses must be non-negative")
        if not any(v > 0 for v in masses):
            raise ConfigError("at least one mass must be positive")
        if any(v <= 0 for v in stiff):
            raise ConfigError("stiffnesses must be strictly positive")
        if any(v < 0 for v in damp):
            raise ConfigError("dampings must be non-negative")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "stiffnesses", stiff)
        object.__setattr__(self, "dampings", damp)

    @property
    def is_damped(self) -> bool:
        return any(d > 0 for d in self.dampings)

    @property
    def load_scale(self) -> float:
        """Force unit used to normalize loads: ``c_m / l`` (free-end joint stiffness)."""
        return self.stiffnesses[-1] / self.link_length

    def normalize(self, load: float) -> float:
        return load / self.load_scale

    def denormalize(self, p: float) -> float:
        return p * self.load_scale

    def with_masses(self, masses) -> "PendulumConfig":
        return PendulumConfig(self.link_count, self.link_length, tuple(masses),
                              self.stiffnesses, self.dampings)

    def with_dampings(self, dampings) -> "PendulumConfig":
        return PendulumConfig(self.link_count, self.link_length, self.masses,
                              self.stiffnesses, tuple(dampings))

    def to_dict(self) -> dict:
        return {
            "link_count": self.link_count,
            "link_length": self.link_length,
            "masses": list(self.masses),
            "stiffnesses": list(self.stiffnesses),
            "dampings": list(self.dampings),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PendulumConfig":
        if not isinstance(data, dict):
            raise ConfigError("config document must be a JSON object")
        required = ("link_count", "link_length", "masses", "stiffnesses")
        missing = [k for k in required if k not in data]
        if missing:
            raise ConfigError(f"config is missing keys: {', '.join(missing)}")
        unknown = set(data) - set(required) - {"dampings"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(
            link_count=data["link_count"],
            link_length=data["link_length"],
            masses=data["masses"],
            stiffnesses=data["stiffnesses"],
            dampings=data.get("dampings") or (),
        )


def load_config(path) -> PendulumConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return PendulumConfig.from_dict(data)


def ziegler_config(m1=2.0, m2=1.0, c1=1.0, c2=1.0, length=1.0, d1=0.0, d2=0.0) -> PendulumConfig:
    """Two-link configuration; the defaults are Ziegler's original design."""
    return PendulumConfig(2, length, (m1, m2), (c1, c2), (d1, d2))


@dataclass(frozen=True)
class MatrixTriple:
    """Mass, damping and positional-force matrices at a given follower load."""

    M: np.ndarray
    D: np.ndarray
    K: np.ndarray
    load: float

    @property
    def size(self) -> int:
        return self.M.shape[0]

    @property
    def is_damped(self) -> bool:
        return bool(np.any(self.D != 0))


def mass_block(m: int, k: int, length: float = 1.0) -> np.ndarray:
    """Contribution of a unit mass at the top of rod ``k`` (1-based) to M."""
    out = np.zeros((m, m))
    out[:k, :k] = length**2
    return out


def mass_matrix(masses, length: float) -> np.ndarray:
    masses = np.asarray(masses, dtype=float)
    m = len(masses)
    # tail[i] = sum_{k >= i} m_k
    tail = np.cumsum(masses[::-1])[::-1]
    idx = np.maximum.outer(np.arange(m), np.arange(m))
    return length**2 * tail[idx]


def joint_matrix(coeffs) -> np.ndarray:
    """Symmetric tridiagonal matrix of the joint springs (or dampers)."""
    c = np.asarray(coeffs, dtype=float)
    m = len(c)
    out = np.zeros((m, m))
    for i in range(m):
        out[i, i] = c[i] + (c[i + 1] if i + 1 < m else 0.0)
        if i + 1 < m:
            out[i, i + 1] = out[i + 1, i] = -c[i + 1]
    return out


def follower_matrix(m: int, length: float) -> np.ndarray:
    """Load-proportional part of K per unit load P."""
    out = np.zeros((m, m))
    for i in range(m - 1):
        out[i, i] -= length
        out[i, m - 1] += length
    return out


def assemble(config: PendulumConfig, load: float) -> MatrixTriple:
    """Assemble M, D and K(P) for ``config`` at follower load ``load``."""
    load = float(load)
    if not math.isfinite(load):
        raise ConfigError("load must be finite")
    m, l = config.link_count, config.link_length
    M = mass_matrix(config.masses, l)
    D = joint_matrix(config.dampings)
    K = joint_matrix(config.stiffnesses) + load * follower_matrix(m, l)
    return MatrixTriple(M=M, D=D, K=K, load=load)


def mass_determinant(config: PendulumConfig) -> float:
    """det M in closed form, ``l**(2m) * prod(m_i)``."""
    return config.link_length ** (2 * config.link_count) * math.prod(config.masses)
