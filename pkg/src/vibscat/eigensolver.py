"""Vibrational pseudo-states of the isolated diatom on a uniform radial mesh.

The radial equation is discretised with three-point central differences and
Dirichlet walls at ``r_min`` and ``r_max``.  Every eigenpair of the resulting
tridiagonal matrix is kept: negative energies are bound levels, positive ones
sample the dissociative continuum.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg

from .units import MU_H2


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialMesh:
    """Uniform mesh with ``n_points`` interior nodes between two fixed walls.

    The walls themselves are extra nodes where the wavefunction is pinned to
    zero, so the spacing is ``(r_max - r_min) / (n_points + 1)`` and the
    eigenproblem has exactly ``n_points`` unknowns.
    """

    r_min: float = 0.02
    r_max: float = 20.0
    n_points: int = 256

    def __post_init__(self) -> None:
        if not self.r_min < self.r_max:
            raise ValueError(f"r_min ({self.r_min}) must be below r_max ({self.r_max})")
        if self.n_points < 3:
            raise ValueError(f"n_points must be >= 3, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.r_max - self.r_min) / (self.n_points + 1)

    @property
    def nodes(self) -> np.ndarray:
        """All nodes including both walls, length ``n_points + 2``."""
        return np.linspace(self.r_min, self.r_max, self.n_points + 2)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_points + 2, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w


@dataclass
class VibrationalBasis:
    """Eigenpairs of the diatom Hamiltonian sampled on the full mesh.

    ``wavefunctions[i]`` is state ``i`` on ``mesh.nodes`` (zero at both walls),
    normalised with the trapezoidal rule.
    """

    mesh: RadialMesh
    mu: float
    energies: np.ndarray
    wavefunctions: np.ndarray
    _digest: str | None = field(default=None, repr=False)

    @property
    def n_states(self) -> int:
        return len(self.energies)

    @property
    def n_bound(self) -> int:
        return int(np.count_nonzero(self.energies < 0.0))

    def overlap(self) -> np.ndarray:
        w = self.mesh.trapezoid_weights()
        return (self.wavefunctions * w) @ self.wavefunctions.T

    def digest(self) -> str:
        if self._digest is None:
            h = hashlib.sha256()
            h.update(np.array([self.mesh.r_min, self.mesh.r_max, self.mesh.n_points, self.mu]).tobytes())
            h.update(np.ascontiguousarray(self.energies).tobytes())
            h.update(np.ascontiguousarray(self.wavefunctions).tobytes())
            self._digest = h.hexdigest()[:16]
        return self._digest

    def to_csv(self, path: str | Path, header_comment: str | None = None) -> None:
        """Write energies and interior wavefunction values.

        Layout: optional ``#`` comment line, a header row ``r,phi_0,...``, an
        ``energy`` row, then one row per interior mesh point.
        """
        path = Path(path)
        with path.open("w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["r"] + [f"phi_{i}" for i in range(self.n_states)])
            writer.writerow(["energy"] + [repr(float(e)) for e in self.energies])
            for k, r in enumerate(self.mesh.interior, start=1):
                writer.writerow([repr(float(r))] + [repr(float(v)) for v in self.wavefunctions[:, k]])


def build_fd_hamiltonian(
    mesh: RadialMesh, potential: Callable[[np.ndarray], np.ndarray], mu: float = MU_H2
) -> tuple[np.ndarray, np.ndarray]:
    """Three-point finite-difference radial Hamiltonian.

    Args:
        mesh: radial mesh; only interior nodes carry unknowns.
        potential: diatom curve evaluated on an array of bond lengths.
        mu: reduced mass in electron masses.

    Returns:
        ``(diagonal, off_diagonal)`` of the symmetric tridiagonal matrix.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    h2 = mesh.spacing**2
    diag = 1.0 / (mu * h2) + np.asarray(potential(mesh.interior), dtype=float)
    off = np.full(mesh.n_points - 1, -0.5 / (mu * h2))
    return diag, off


def dense_tridiagonal(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def solve_eigensystem(diag: np.ndarray, off: np.ndarray, mesh: RadialMesh, mu: float = MU_H2) -> VibrationalBasis:
    """Full spectrum of the tridiagonal Hamiltonian.

    Eigenvectors are rescaled so the trapezoidal norm on the mesh is one and
    flipped so that their first non-negligible component is positive.
    """
    try:
        energies, vecs = scipy.linalg.eigh_tridiagonal(diag, off, lapack_driver="stev")
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(f"tridiagonal eigensolver failed: {exc}") from exc
    if not np.all(np.isfinite(energies)):
        bad = int(np.flatnonzero(~np.isfinite(energies))[0])
        raise EigensolverError(f"eigenvalue {bad} did not converge")

    vecs = vecs.T / np.sqrt(mesh.spacing)
    # threshold instead of "first nonzero" keeps the sign stable against
    # roundoff in the exponentially small tail near the inner wall
    for row in vecs:
        lead = np.flatnonzero(np.abs(row) > 1e-8 * np.abs(row).max())[0]
        if row[lead] < 0:
            row *= -1.0

    full = np.zeros((len(energies), mesh.n_points + 2))
    full[:, 1:-1] = vecs
    return VibrationalBasis(mesh=mesh, mu=mu, energies=energies, wavefunctions=full)


def solve_basis(mesh: RadialMesh, potential: Callable[[np.ndarray], np.ndarray], mu: float = MU_H2) -> VibrationalBasis:
    diag, off = build_fd_hamiltonian(mesh, potential, mu)
    return solve_eigensystem(diag, off, mesh, mu)


def bound_levels(mesh: RadialMesh, potential: Callable[[np.ndarray], np.ndarray], mu: float = MU_H2) -> np.ndarray:
    """Negative eigenvalues only, without eigenvectors (cheap on fine meshes)."""
    diag, off = build_fd_hamiltonian(mesh, potential, mu)
    return scipy.linalg.eigh_tridiagonal(diag, off, eigvals_only=True, select="v", select_range=(-np.inf, 0.0))


def morse_levels(de: float, a: float, mu: float, vmax: int | None = None) -> np.ndarray:
    """Analytic Morse levels (zero at the dissociation limit)."""
    omega = a * np.sqrt(2.0 * de / mu)
    if vmax is None:
        vmax = morse_vmax(de, a, mu)
    v = np.arange(vmax + 1) + 0.5
    return -de + omega * v - omega**2 / (4.0 * de) * v**2


def morse_vmax(de: float, a: float, mu: float) -> int:
    return int(np.floor(np.sqrt(2.0 * mu * de) / a - 0.5))
