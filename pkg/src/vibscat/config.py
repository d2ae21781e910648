"""Run configuration: a flat ``key = value`` text file.

One key per line, ``#`` starts a comment, blank lines are ignored.  Lists
(the impact-parameter grid) are comma separated.  Unknown keys and
malformed values raise :class:`ConfigError`.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .units import MU_H2

# above this many qubits a run needs allow_large (cost grows like 4^n per step)
LARGE_QUBITS = 5


class ConfigError(ValueError):
    pass


def default_b_grid() -> tuple[float, ...]:
    """40 impact parameters in bohr, densest where ``b P(b)`` peaks.

    A few points below 0.2, steps of 0.075 from 0.2 to 2, coarser steps to
    6 and a sparse tail to 12 where the interaction has died off.
    """
    head = np.array([0.01, 0.05, 0.1, 0.15])
    core = np.linspace(0.2, 2.0, 25)
    shoulder = np.array([2.25, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0])
    tail = np.array([7.0, 8.5, 10.0, 12.0])
    return tuple(float(round(b, 10)) for b in np.concatenate([head, core, shoulder, tail]))


@dataclass
class CollisionConfig:
    # radial mesh and diatom
    mesh_points: int = 256
    r_min: float = 0.02
    r_mesh_max: float = 20.0
    mu: float = MU_H2
    # surface
    surface: str = "pairwise_morse"
    de: float = 0.1745
    re: float = 1.40
    a: float = 1.03
    # collision
    e_lab: float = 100.0
    gamma: float = math.pi / 2
    r_max: float = 20.0
    delta_r: float = 0.1
    b_grid: tuple[float, ...] = field(default_factory=default_b_grid)
    # basis and propagation
    n_states: int = 16
    n_continuum: int | None = None
    tau: float = 0.01
    order: int = 2
    prune_eps: float = 1e-12
    rtol: float = 1e-6
    atol: float = 1e-12
    # readout
    initial: int = 0
    shots: int = 0
    seed: int = 12345
    allow_large: bool = False

    def __post_init__(self) -> None:
        self.b_grid = tuple(float(b) for b in self.b_grid)
        self.validate()

    def validate(self) -> None:
        for name in ("mesh_points", "r_mesh_max", "mu", "de", "re", "a", "e_lab", "r_max",
                     "delta_r", "n_states", "tau", "rtol", "atol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if not 0 <= self.r_min < self.r_mesh_max:
            raise ConfigError(f"r_min must lie in [0, r_mesh_max), got {self.r_min}")
        if not 0 <= self.gamma <= math.pi:
            raise ConfigError(f"gamma must lie in [0, pi], got {self.gamma}")
        if self.surface not in ("pairwise_morse", "none"):
            raise ConfigError(f"surface must be 'pairwise_morse' or 'none', got {self.surface!r}")
        if self.order not in (1, 2):
            raise ConfigError(f"order must be 1 or 2, got {self.order}")
        if self.n_continuum is not None and self.n_continuum < 0:
            raise ConfigError(f"n_continuum must be >= 0, got {self.n_continuum}")
        if self.shots < 0:
            raise ConfigError(f"shots must be >= 0, got {self.shots}")
        if self.initial < 0:
            raise ConfigError(f"initial must be >= 0, got {self.initial}")
        if len(self.b_grid) == 0:
            raise ConfigError("b_grid is empty")
        b = np.asarray(self.b_grid)
        if np.any(b < 0) or np.any(b >= self.r_max):
            raise ConfigError(f"b_grid values must lie in [0, r_max={self.r_max})")
        if np.any(np.diff(b) <= 0):
            raise ConfigError("b_grid must be strictly ascending")
        if self.n_states > self.mesh_points:
            raise ConfigError(f"n_states={self.n_states} exceeds mesh_points={self.mesh_points}")
        qubits = max(1, (self.n_states - 1).bit_length())
        if qubits > LARGE_QUBITS and not self.allow_large:
            raise ConfigError(
                f"n_states={self.n_states} needs {qubits} qubits; set allow_large to run beyond {LARGE_QUBITS}"
            )

    def replace(self, **changes) -> "CollisionConfig":
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {_format(value)}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]

    def snapshot(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_value(name: str, text: str):
    kinds = {f.name: f.type for f in fields(CollisionConfig)}
    kind = kinds[name]
    if name == "b_grid":
        return tuple(float(x) for x in text.split(",") if x.strip())
    if kind == "int | None":
        return None if text.lower() == "none" else int(text)
    if kind == "bool":
        return _parse_bool(text)
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    return text


def parse_config(text: str, base: CollisionConfig | None = None) -> CollisionConfig:
    known = {f.name for f in fields(CollisionConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    base = base or CollisionConfig()
    try:
        return base.replace(**values)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> CollisionConfig:
    if path is None:
        return CollisionConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
