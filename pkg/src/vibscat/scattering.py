"""Collision kinematics, impact-parameter cross sections and N_c sweeps.

Cross sections use ``sigma = 2 pi int b P(b) db`` evaluated with the
trapezoid rule on the impact-parameter grid, with the integrand pinned to
zero at ``b = 0`` and ``P`` taken as zero beyond the last grid point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coupling import trajectory
from .units import AMU_ME, ev_to_hartree

__all__ = [
    "CrossSection",
    "ConvergenceTable",
    "bp_profile",
    "convergence_table",
    "cross_section_bound",
    "cross_section_dissociation",
    "cross_section_table",
    "projectile_velocity",
    "quadrature_total",
    "sum_rule_defects",
    "trajectory",
]


def projectile_velocity(e_lab: float, projectile_mass: float = 1.0, target_mass: float = 2.0) -> float:
    """Relative speed (a.u.) for a lab-frame projectile energy in eV.

    Masses are in amu.  ``E_cm = E_lab m_t / (m_p + m_t)`` and the reduced
    mass is ``m_p m_t / (m_p + m_t)``; for H + H2 both factors are 2/3.
    """
    if e_lab <= 0:
        raise ValueError(f"E_lab must be positive, got {e_lab}")
    total = projectile_mass + target_mass
    e_cm = ev_to_hartree(e_lab) * target_mass / total
    reduced = projectile_mass * target_mass / total * AMU_ME
    return math.sqrt(2.0 * e_cm / reduced)


def _grid(b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or len(b) < 2:
        raise ValueError("cross sections need at least 2 impact parameters")
    if np.any(np.diff(b) <= 0) or b[0] < 0:
        raise ValueError("impact parameters must be nonnegative and strictly ascending")
    return b


def _integrate(b: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``2 pi int b P db`` along the last axis of ``p``."""
    y = b * p
    if b[0] > 0:
        b = np.concatenate([[0.0], b])
        y = np.concatenate([np.zeros(p.shape[:-1] + (1,)), y], axis=-1)
    return 2.0 * math.pi * np.trapezoid(y, b, axis=-1)


def quadrature_total(b) -> float:
    """Same-quadrature value of ``2 pi int b db`` (the ``P = 1`` cross section)."""
    b = _grid(b)
    return float(_integrate(b, np.ones_like(b)))


def cross_section_bound(b, p) -> float:
    """``sigma_{i->j}`` in bohr^2 from samples ``P_ij(b)``."""
    b = _grid(b)
    p = np.asarray(p, dtype=float)
    if p.shape != b.shape:
        raise ValueError(f"{len(b)} impact parameters but {p.shape} probabilities")
    return float(_integrate(b, p))


def cross_section_dissociation(b, probs, energies) -> float:
    """``sigma_{i->D}``: total flux into the positive-energy pseudo-states.

    Args:
        b: impact-parameter grid, shape ``(n_b,)``.
        probs: ``P_ij(b)`` for one initial state, shape ``(n_b, N)``.
        energies: level energies, length ``>= N``; ``eps > 0`` marks continuum.
    """
    b = _grid(b)
    probs = np.asarray(probs, dtype=float)
    eps = np.asarray(energies)[: probs.shape[1]]
    continuum = eps > 0
    if not np.any(continuum):
        raise ValueError("basis contains no continuum states")
    return float(_integrate(b, probs[:, continuum].sum(axis=1)))


def bp_profile(b, probs) -> np.ndarray:
    """Integrand ``b P(b)``; ``probs`` may carry trailing state axes."""
    b = np.asarray(b, dtype=float)
    probs = np.asarray(probs, dtype=float)
    return probs * b.reshape((-1,) + (1,) * (probs.ndim - 1))


@dataclass
class CrossSection:
    initial: int
    final: int | str
    value: float
    elastic: bool = False
    quadrature: dict = field(default_factory=dict)


def cross_section_table(b, probs, energies, initial: int) -> list[CrossSection]:
    """Every bound-bound ``sigma_{i->j}`` plus ``sigma_{i->D}`` when a continuum exists.

    The elastic channel ``j = i`` is included but flagged.
    """
    b = _grid(b)
    probs = np.asarray(probs, dtype=float)
    eps = np.asarray(energies)[: probs.shape[1]]
    meta = {"rule": "trapezoid", "n_b": len(b), "b_max": float(b[-1])}
    sigmas = _integrate(b, probs.T)
    rows = [
        CrossSection(initial, j, float(sigmas[j]), elastic=j == initial, quadrature=meta)
        for j in np.flatnonzero(eps <= 0)
    ]
    if np.any(eps > 0):
        rows.append(CrossSection(initial, "D", cross_section_dissociation(b, probs, eps), quadrature=meta))
    return rows


def sum_rule_defects(b, probs, energies) -> tuple[np.ndarray, float]:
    """Probability and cross-section sum-rule residuals for one initial state.

    Returns ``(|sum_j P_ij(b) - 1|`` per ``b``, relative defect of
    ``sigma_D + sum_bound sigma_j`` against the ``P = 1`` total).
    """
    b = _grid(b)
    probs = np.asarray(probs, dtype=float)
    per_b = np.abs(probs.sum(axis=1) - 1.0)
    rows = cross_section_table(b, probs, energies, initial=-1)
    total = sum(r.value for r in rows)
    ref = quadrature_total(b)
    return per_b, abs(total - ref) / ref


def write_cross_sections(path: str | Path, rows: list[CrossSection], header_comment: str | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["initial", "final", "sigma_bohr2", "elastic"])
        for r in rows:
            w.writerow([r.initial, r.final, repr(r.value), int(r.elastic)])


def write_profiles(path: str | Path, b, probs, energies, header_comment: str | None = None) -> None:
    """``b P_ij(b)`` curves per final state, plus the summed continuum column ``D``."""
    b = np.asarray(b, dtype=float)
    probs = np.asarray(probs, dtype=float)
    eps = np.asarray(energies)[: probs.shape[1]]
    prof = bp_profile(b, probs)
    cols = [f"bP_{j}" for j in range(probs.shape[1])]
    has_d = bool(np.any(eps > 0))
    with Path(path).open("w", newline="") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["b"] + cols + (["bP_D"] if has_d else []))
        for k in range(len(b)):
            row = [repr(float(b[k]))] + [repr(float(x)) for x in prof[k]]
            if has_d:
                row.append(repr(float(prof[k, eps > 0].sum())))
            w.writerow(row)


@dataclass
class ConvergenceTable:
    """Dissociation cross sections per continuum count and their deviations.

    ``sigma[k, m]`` belongs to ``initials[k]`` and ``n_continuum[m]``;
    ``deviation`` is the percent difference from the largest-``N_c`` column.
    """

    initials: list[int]
    n_continuum: list[int]
    sigma: np.ndarray
    deviation: np.ndarray

    def mean_abs_deviation(self) -> np.ndarray:
        return np.mean(np.abs(self.deviation), axis=0)

    def decreasing_on_average(self) -> bool:
        """Least-squares slope of the mean |deviation| against N_c is negative."""
        if len(self.n_continuum) < 3:
            return bool(self.mean_abs_deviation()[0] >= self.mean_abs_deviation()[-1])
        x = np.asarray(self.n_continuum[:-1], dtype=float)
        y = self.mean_abs_deviation()[:-1]
        return bool(np.polyfit(x, y, 1)[0] < 0)

    def write(self, path: str | Path, header_comment: str | None = None) -> None:
        with Path(path).open("w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["initial", "n_continuum", "sigma_D_bohr2", "deviation_percent"])
            for k, i in enumerate(self.initials):
                for m, nc in enumerate(self.n_continuum):
                    w.writerow([i, nc, repr(float(self.sigma[k, m])), repr(float(self.deviation[k, m]))])


def convergence_table(initials, n_continuum, sigma) -> ConvergenceTable:
    """Deviation of each ``sigma_D`` from the run with the most continuum states."""
    n_continuum = [int(x) for x in n_continuum]
    if any(b <= a for a, b in zip(n_continuum, n_continuum[1:])):
        raise ValueError("n_continuum values must be strictly ascending")
    sigma = np.asarray(sigma, dtype=float).reshape(len(initials), len(n_continuum))
    ref = sigma[:, -1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        dev = np.where(ref != 0, (sigma - ref) / ref * 100.0, 0.0)
    return ConvergenceTable(list(initials), n_continuum, sigma, dev)
