"""Hamiltonian matrix elements in the vibrational basis along the trajectory.

``h_ij(R) = eps_i delta_ij + <phi_i | V(R, r, gamma) | phi_j>`` is tabulated on
a uniform grid in the projectile distance ``R`` and interpolated with
degree-4 splines.  The table covers one fixed orientation ``gamma``; any
impact parameter reuses it through ``R(t) = sqrt(b^2 + v^2 t^2)``.

Both supported surfaces are symmetric under exchange of the two diatom atoms,
which makes every ``h_ij`` an even function of ``R``.  The spline is fitted on
the mirrored grid ``[-R_max, R_max]`` so that this holds for the interpolant
too; a plain one-sided fit loses an order of accuracy next to ``R = 0``.
"""

from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import BSpline, make_interp_spline

from .eigensolver import VibrationalBasis
from .potential import SurfaceModel, interaction_potential

logger = logging.getLogger(__name__)

SPLINE_DEGREE = 4


def matrix_element(
    i: int, j: int, R: float, basis: VibrationalBasis, surface: SurfaceModel, gamma: float = np.pi / 2
) -> float:
    """Single element ``h_ij(R)`` by trapezoidal quadrature on the radial mesh."""
    n = basis.n_states
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"state indices ({i}, {j}) out of range for a basis of {n} states")
    if R < 0:
        raise ValueError(f"R must be >= 0, got {R}")
    r = basis.mesh.nodes
    w = basis.mesh.trapezoid_weights()
    v = interaction_potential(R, r, gamma, surface)
    value = float(np.sum(w * basis.wavefunctions[i] * v * basis.wavefunctions[j]))
    if i == j:
        value += float(basis.energies[i])
    return value


def _packed_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n)


def unpack_symmetric(packed: np.ndarray, n: int) -> np.ndarray:
    """Expand upper-triangle storage (last axis) into symmetric matrices."""
    iu, ju = _packed_index(n)
    out = np.empty(packed.shape[:-1] + (n, n), dtype=packed.dtype)
    out[..., iu, ju] = packed
    out[..., ju, iu] = packed
    return out


@dataclass
class CouplingTable:
    """``h_ij(R_k)`` for ``i <= j`` on ``R_k = k * delta_r``, ``k = 0..n``.

    Attributes:
        r_grid: tabulation points in bohr, from 0 to ``r_max``.
        packed: array ``(len(r_grid), n(n+1)/2)`` in ``numpy.triu_indices``
            order.
        energies: asymptotic energies of the tabulated states.
        gamma: fixed orientation angle in radians.
    """

    r_grid: np.ndarray
    packed: np.ndarray
    energies: np.ndarray
    gamma: float
    key: str = ""
    _spline: BSpline | None = field(default=None, repr=False)

    @property
    def n_states(self) -> int:
        return len(self.energies)

    @property
    def r_max(self) -> float:
        return float(self.r_grid[-1])

    @property
    def delta_r(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    def values(self) -> np.ndarray:
        """Tabulated matrices, shape ``(n_R, n, n)``."""
        return unpack_symmetric(self.packed, self.n_states)

    def element(self, i: int, j: int) -> np.ndarray:
        """Tabulated ``h_ij`` on the grid; symmetric in ``i, j``."""
        i, j = min(i, j), max(i, j)
        n = self.n_states
        col = i * n - i * (i - 1) // 2 + (j - i)
        return self.packed[:, col]

    def subset(self, n: int) -> "CouplingTable":
        """Table restricted to the lowest ``n`` states."""
        if not 0 < n <= self.n_states:
            raise ValueError(f"cannot take {n} states from a table of {self.n_states}")
        iu, ju = _packed_index(n)
        big = self.n_states
        cols = iu * big - iu * (iu - 1) // 2 + (ju - iu)
        return CouplingTable(
            self.r_grid, self.packed[:, cols].copy(), self.energies[:n].copy(), self.gamma, key=f"{self.key}:{n}"
        )

    @property
    def spline(self) -> BSpline:
        if self._spline is None:
            r = np.concatenate([-self.r_grid[:0:-1], self.r_grid])
            y = np.concatenate([self.packed[:0:-1], self.packed])
            self._spline = make_interp_spline(r, y, k=SPLINE_DEGREE, axis=0)
        return self._spline

    def interpolate(self, R) -> np.ndarray:
        """Interpolated symmetric matrices at distances ``R`` (scalar or array)."""
        return unpack_symmetric(self.spline(R), self.n_states)

    def save(self, path: str | Path) -> None:
        np.savez(
            path, r_grid=self.r_grid, packed=self.packed, energies=self.energies, gamma=self.gamma, key=self.key
        )

    @classmethod
    def load(cls, path: str | Path) -> "CouplingTable":
        with np.load(path) as data:
            return cls(
                data["r_grid"], data["packed"], data["energies"], float(data["gamma"]), key=str(data["key"])
            )

    def to_csv(self, path: str | Path, header_comment: str | None = None) -> None:
        """Long-format CSV: ``R,i,j,h`` for every tabulated ``i <= j``."""
        iu, ju = _packed_index(self.n_states)
        with Path(path).open("w") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            fh.write("R,i,j,h\n")
            for k, R in enumerate(self.r_grid):
                for col in range(len(iu)):
                    fh.write(f"{float(R)!r},{iu[col]},{ju[col]},{float(self.packed[k, col])!r}\n")


def make_r_grid(delta_r: float = 0.1, r_max: float = 20.0) -> np.ndarray:
    if delta_r <= 0:
        raise ValueError(f"delta_r must be positive, got {delta_r}")
    steps = int(round(r_max / delta_r))
    if steps < 3 or abs(steps * delta_r - r_max) > 1e-9 * r_max:
        raise ValueError(f"r_max={r_max} is not a whole number (>= 3) of steps {delta_r}")
    return np.linspace(0.0, r_max, steps + 1)


def table_key(
    basis: VibrationalBasis, surface: SurfaceModel, gamma: float, delta_r: float, r_max: float, n_states: int
) -> str:
    blob = f"{surface.digest()}|{basis.digest()}|{float(delta_r)!r}|{float(r_max)!r}|{float(gamma)!r}|{int(n_states)}"
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def build_coupling_table(
    basis: VibrationalBasis,
    surface: SurfaceModel,
    gamma: float = np.pi / 2,
    delta_r: float = 0.1,
    r_max: float = 20.0,
    n_states: int | None = None,
) -> CouplingTable:
    """Tabulate ``h_ij(R)`` for the lowest ``n_states`` basis states."""
    n = basis.n_states if n_states is None else n_states
    if not 0 < n <= basis.n_states:
        raise IndexError(f"n_states={n} outside basis of {basis.n_states}")
    r_grid = make_r_grid(delta_r, r_max)
    phi = basis.wavefunctions[:n]
    phi_w = phi * basis.mesh.trapezoid_weights()
    v = interaction_potential(r_grid[:, None], basis.mesh.nodes[None, :], gamma, surface)
    iu, ju = _packed_index(n)
    packed = np.empty((len(r_grid), len(iu)))
    for k in range(len(r_grid)):
        h = (phi_w * v[k]) @ phi.T
        packed[k] = h[iu, ju]
    diag_cols = np.flatnonzero(iu == ju)
    packed[:, diag_cols] += basis.energies[:n]
    key = table_key(basis, surface, gamma, delta_r, r_max, n)
    return CouplingTable(r_grid, packed, basis.energies[:n].copy(), gamma, key=key)


def cached_coupling_table(
    basis: VibrationalBasis,
    surface: SurfaceModel,
    gamma: float,
    delta_r: float,
    r_max: float,
    n_states: int,
    cache_dir: str | Path | None,
) -> CouplingTable:
    """Like :func:`build_coupling_table` but reuses an ``.npz`` cache entry."""
    if cache_dir is None:
        return build_coupling_table(basis, surface, gamma, delta_r, r_max, n_states)
    key = table_key(basis, surface, gamma, delta_r, r_max, n_states)
    path = Path(cache_dir) / f"coupling-{key}.npz"
    if path.exists():
        logger.info("coupling table cache hit: %s", path)
        return CouplingTable.load(path)
    logger.info("coupling table cache miss, building %s", path)
    table = build_coupling_table(basis, surface, gamma, delta_r, r_max, n_states)
    os.makedirs(path.parent, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    table.save(tmp)
    os.replace(tmp, path)
    return table


def trajectory(b: float, v: float, t):
    """Straight-line projectile distance ``sqrt(b^2 + v^2 t^2)``."""
    if b < 0:
        raise ValueError(f"impact parameter must be >= 0, got {b}")
    t = np.asarray(t, dtype=float)
    return np.sqrt(b * b + (v * t) ** 2)


def half_duration(b: float, v: float, r_max: float) -> float:
    """Time ``T(b)`` at which the projectile reaches ``r_max``."""
    if not 0 <= b < r_max:
        raise ValueError(f"impact parameter {b} must lie in [0, {r_max})")
    return float(np.sqrt(r_max * r_max - b * b) / v)


def coupling_at_time(table: CouplingTable, t, b: float, v: float) -> tuple[np.ndarray, bool]:
    """Hamiltonian matrix at time(s) ``t`` on the straight-line trajectory.

    Distances beyond the table are clamped to ``r_max``; the second return
    value reports whether that happened.
    """
    R = trajectory(b, v, t)
    clamped = bool(np.any(R > table.r_max))
    if clamped:
        R = np.minimum(R, table.r_max)
    return table.interpolate(R), clamped
