"""Diatom and atom-diatom model potentials in Jacobi coordinates.

The default triatomic surface is pairwise additive: every atom pair interacts
through the same Morse curve as the isolated diatom.  The atom-diatom
interaction is the triatomic energy minus the diatom curve, so it vanishes
when the projectile is far away.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

COMBINATION_RULES = ("pairwise_morse", "none")


@dataclass(frozen=True)
class JacobiGeometry:
    """Projectile position relative to the diatom (bohr, bohr, radians)."""

    R: float
    r: float
    gamma: float

    def __post_init__(self) -> None:
        if self.R < 0:
            raise ValueError(f"R must be >= 0, got {self.R}")
        if self.r <= 0:
            raise ValueError(f"r must be > 0, got {self.r}")
        if not 0.0 <= self.gamma <= np.pi:
            raise ValueError(f"gamma must lie in [0, pi], got {self.gamma}")


@dataclass(frozen=True)
class SurfaceModel:
    """Morse diatom parameters plus the rule combining pairs into a surface.

    Attributes:
        de: well depth in hartree.
        re: equilibrium bond length in bohr.
        a: Morse width parameter in 1/bohr.
        rule: ``"pairwise_morse"`` (default) or ``"none"``, which switches the
            atom-diatom interaction off entirely.
    """

    de: float = 0.1745
    re: float = 1.40
    a: float = 1.03
    rule: str = "pairwise_morse"

    def __post_init__(self) -> None:
        if self.rule not in COMBINATION_RULES:
            raise ValueError(f"unknown combination rule {self.rule!r}; expected one of {COMBINATION_RULES}")
        if self.de <= 0 or self.a <= 0 or self.re <= 0:
            raise ValueError("Morse parameters must be positive")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def jacobi_to_distances(R, r, gamma):
    """Distances from the projectile to each diatom atom.

    Works elementwise on arrays.  Returns ``(d_plus, d_minus)`` with
    ``d_pm = sqrt(R^2 + r^2/4 -/+ R r cos(gamma))``.
    """
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    base = R * R + 0.25 * r * r
    cross = R * r * np.cos(gamma)
    # roundoff can push a collinear touching configuration slightly negative
    d_plus = np.sqrt(np.maximum(base - cross, 0.0))
    d_minus = np.sqrt(np.maximum(base + cross, 0.0))
    return d_plus, d_minus


def diatom_potential(r, model: SurfaceModel):
    """Morse curve ``De (1 - exp(-a (r - re)))^2 - De`` in hartree."""
    r = np.asarray(r, dtype=float)
    return model.de * (1.0 - np.exp(-model.a * (r - model.re))) ** 2 - model.de


def triatomic_potential(R, r, gamma, model: SurfaceModel):
    """Full three-atom energy of the model surface."""
    v_diatom = diatom_potential(r, model)
    if model.rule == "none":
        return v_diatom + np.zeros_like(np.asarray(R, dtype=float))
    d_plus, d_minus = jacobi_to_distances(R, r, gamma)
    return v_diatom + diatom_potential(d_plus, model) + diatom_potential(d_minus, model)


def interaction_potential(R, r, gamma, model: SurfaceModel):
    """Atom-diatom interaction ``V3(R, r, gamma) - V_diatom(r)``.

    Broadcasts over ``R`` and ``r``.  Goes to zero as ``R`` grows for any
    bond length.
    """
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    if model.rule == "none":
        return np.zeros(np.broadcast(R, r).shape)
    d_plus, d_minus = jacobi_to_distances(R, r, gamma)
    return diatom_potential(d_plus, model) + diatom_potential(d_minus, model)
