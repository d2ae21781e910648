"""End-to-end runs assembled from a :class:`CollisionConfig`.

A :class:`Pipeline` owns the vibrational basis, the (cached) coupling table
and the projectile speed, and runs circuit or ODE propagation per impact
parameter.  Scans over ``b`` can be spread over worker processes; the
coupling table is built once in the parent and shipped to the workers.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import cached_property
from pathlib import Path

import numpy as np

from .circuits import build_evolution_circuit
from .config import CollisionConfig, ConfigError
from .coupling import CouplingTable, cached_coupling_table
from .eigensolver import RadialMesh, VibrationalBasis, solve_basis
from .ode import integrate_schrodinger
from .potential import SurfaceModel, diatom_potential
from .scattering import ConvergenceTable, convergence_table, cross_section_dissociation, projectile_velocity
from .smatrix import SMatrix, assemble_smatrix, probability_matrix, transition_probabilities

logger = logging.getLogger(__name__)


class Pipeline:
    def __init__(self, config: CollisionConfig, cache_dir: str | Path | None = None):
        self.config = config
        self.cache_dir = cache_dir

    @cached_property
    def surface(self) -> SurfaceModel:
        c = self.config
        return SurfaceModel(de=c.de, re=c.re, a=c.a, rule=c.surface)

    @cached_property
    def basis(self) -> VibrationalBasis:
        c = self.config
        mesh = RadialMesh(r_min=c.r_min, r_max=c.r_mesh_max, n_points=c.mesh_points)
        return solve_basis(mesh, lambda r: diatom_potential(r, self.surface), c.mu)

    @property
    def n_bound(self) -> int:
        return self.basis.n_bound

    @cached_property
    def n_physical(self) -> int:
        """``n_bound + n_continuum`` when a continuum count is set, else ``n_states``."""
        c = self.config
        if c.n_continuum is None:
            n = c.n_states
        else:
            n = self.n_bound + c.n_continuum
            if n > self.basis.n_states:
                raise ConfigError(f"n_continuum={c.n_continuum} exceeds the available continuum states")
            qubits = max(1, (n - 1).bit_length())
            if qubits > 5 and not c.allow_large:
                raise ConfigError(f"{n} states need {qubits} qubits; set allow_large")
        if n > self.basis.n_states:
            raise ConfigError(f"{n} states requested but the basis has {self.basis.n_states}")
        return n

    @cached_property
    def velocity(self) -> float:
        return projectile_velocity(self.config.e_lab)

    @cached_property
    def table(self) -> CouplingTable:
        c = self.config
        return cached_coupling_table(
            self.basis, self.surface, c.gamma, c.delta_r, c.r_max, self.n_physical, self.cache_dir
        )

    def metadata(self, b: float | None = None, tau: float | None = None) -> dict:
        c = self.config
        meta = {
            "e_lab": c.e_lab,
            "gamma": c.gamma,
            "n_states": self.n_physical,
            "n_bound": self.n_bound,
            "n_continuum": max(0, self.n_physical - self.n_bound),
            "basis_hash": self.basis.digest(),
            "coupling_key": self.table.key,
            "velocity": self.velocity,
        }
        if b is not None:
            meta["b"] = b
        meta["tau"] = c.tau if tau is None else tau
        return meta

    def circuit(self, b: float, tau: float | None = None):
        c = self.config
        return build_evolution_circuit(
            self.table, b, self.velocity, c.tau if tau is None else tau, order=c.order, prune_eps=c.prune_eps
        )

    def check_initial(self, i: int) -> None:
        limit = min(self.n_bound, self.n_physical)
        if not 0 <= i < limit:
            raise ConfigError(f"initial state {i} is not one of the {limit} bound states in the basis")

    def probabilities(self, b: float, initial: int | None = None, tau: float | None = None) -> np.ndarray:
        i = self.config.initial if initial is None else initial
        self.check_initial(i)
        c = self.config
        return transition_probabilities(
            self.circuit(b, tau), i, self.n_physical, self.n_bound, shots=c.shots, seed=c.seed
        )

    def ode_probabilities(self, b: float, initial: int | None = None) -> tuple[np.ndarray, float]:
        """Benchmark probabilities and final norm."""
        i = self.config.initial if initial is None else initial
        self.check_initial(i)
        c = self.config
        amp = integrate_schrodinger(self.table, b, self.velocity, i, rtol=c.rtol, atol=c.atol)
        return amp.probabilities, amp.norm

    def smatrix(self, b: float, mode: str | None = None, tau: float | None = None) -> SMatrix:
        c = self.config
        mode = mode or ("shots" if c.shots > 0 else "exact")
        s = assemble_smatrix(self.circuit(b, tau), self.n_physical, mode=mode, shots=c.shots or 100_000, seed=c.seed)
        s.metadata.update(self.metadata(b, tau))
        return s

    def scan(self, initials, b_grid=None, jobs: int = 1, tau: float | None = None) -> np.ndarray:
        """Exact ``P_ij(b)`` with shape ``(len(initials), n_b, N)``."""
        initials = list(initials)
        for i in initials:
            self.check_initial(i)
        b_grid = list(self.config.b_grid if b_grid is None else b_grid)
        c = self.config
        args = [
            (self.table, b, self.velocity, c.tau if tau is None else tau, c.order, c.prune_eps, initials,
             self.n_physical)
            for b in b_grid
        ]
        if jobs > 1 and len(args) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(_scan_point, args))
        else:
            rows = [_scan_point(a) for a in args]
        return np.stack(rows, axis=1)


def _scan_point(args) -> np.ndarray:
    table, b, v, tau, order, prune_eps, initials, n_phys = args
    circuit = build_evolution_circuit(table, b, v, tau, order=order, prune_eps=prune_eps)
    logger.debug("b=%.4f: %d steps", b, circuit.metadata["n_steps"])
    return probability_matrix(circuit, initials, n_phys)


def convergence_study(
    config: CollisionConfig,
    initials,
    n_continuum,
    cache_dir: str | Path | None = None,
    jobs: int = 1,
) -> tuple[ConvergenceTable, dict[int, np.ndarray]]:
    """Dissociation cross sections for each continuum count.

    Returns the deviation table and, per ``N_c``, the probability scans
    ``(len(initials), n_b, N)`` they came from.
    """
    n_continuum = sorted(int(x) for x in n_continuum)
    initials = list(initials)
    scans = {}
    sigma = np.zeros((len(initials), len(n_continuum)))
    for m, nc in enumerate(n_continuum):
        pipe = Pipeline(config.replace(n_continuum=nc), cache_dir)
        probs = pipe.scan(initials, jobs=jobs)
        scans[nc] = probs
        for k in range(len(initials)):
            if nc == 0:
                sigma[k, m] = 0.0
            else:
                sigma[k, m] = cross_section_dissociation(config.b_grid, probs[k], pipe.table.energies)
        logger.info("N_c=%d done", nc)
    return convergence_table(initials, n_continuum, sigma), scans
