"""Classical benchmark: coupled-channel equations integrated with RK45.

Expanding the wavefunction in the fixed vibrational basis turns the
time-dependent Schroedinger equation into ``i dc/dt = H(t) c``.  The same
coupling table and trajectory as the circuit path are used, so differences
between the two isolate Trotter and encoding errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .coupling import CouplingTable, coupling_at_time, half_duration

RTOL = 1e-6
ATOL = 1e-12
PROBABILITY_FLOOR = 1e-8


class IntegrationError(RuntimeError):
    pass


@dataclass
class AmplitudeVector:
    t: float
    c: np.ndarray
    n_steps: int = 0

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.c) ** 2

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.c) ** 2)))


def propagate(hamiltonian, c0: np.ndarray, t0: float, t1: float, rtol: float = RTOL, atol: float = ATOL) -> AmplitudeVector:
    """Integrate ``dc/dt = -i H(t) c`` from ``t0`` to ``t1`` (either direction).

    ``hamiltonian(t)`` returns the dense matrix at time ``t``.
    """

    def rhs(t, c):
        return -1j * (hamiltonian(t) @ c)

    sol = solve_ivp(rhs, (t0, t1), np.asarray(c0, dtype=complex), method="RK45", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise IntegrationError(f"RK45 failed at t={sol.t[-1]:.6g}: {sol.message}")
    return AmplitudeVector(float(sol.t[-1]), sol.y[:, -1].copy(), n_steps=len(sol.t) - 1)


def trajectory_hamiltonian(table: CouplingTable, b: float, v: float):
    def hamiltonian(t):
        return coupling_at_time(table, t, b, v)[0]

    return hamiltonian


def integrate_schrodinger(
    table: CouplingTable,
    b: float,
    v: float,
    initial: int | np.ndarray,
    n_states: int | None = None,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> AmplitudeVector:
    """Amplitudes at ``+T(b)`` starting from a basis state (or vector) at ``-T(b)``."""
    if n_states is not None and n_states != table.n_states:
        table = table.subset(n_states)
    n = table.n_states
    if np.ndim(initial) == 0:
        if not 0 <= int(initial) < n:
            raise IndexError(f"initial state {initial} outside {n} states")
        c0 = np.zeros(n, dtype=complex)
        c0[int(initial)] = 1.0
    else:
        c0 = np.asarray(initial, dtype=complex)
    T = half_duration(b, v, table.r_max)
    return propagate(trajectory_hamiltonian(table, b, v), c0, -T, T, rtol, atol)


def relative_deviations(p_test: np.ndarray, p_ref: np.ndarray, floor: float = PROBABILITY_FLOOR) -> np.ndarray:
    """``|p_test - p_ref| / p_ref * 100`` where ``p_ref > floor``, NaN elsewhere."""
    p_test = np.asarray(p_test, dtype=float)
    p_ref = np.asarray(p_ref, dtype=float)
    out = np.full(p_ref.shape, np.nan)
    mask = p_ref > floor
    out[mask] = np.abs(p_test[mask] - p_ref[mask]) / p_ref[mask] * 100.0
    return out


def benchmark_deviation(
    p_circuit: np.ndarray, p_ode: np.ndarray, exclude: tuple[int, ...] = (), floor: float = PROBABILITY_FLOOR
) -> float:
    """Maximum relative deviation (percent) over populated states.

    States listed in ``exclude`` (e.g. the ground state) are left out.
    """
    dev = relative_deviations(p_circuit, p_ode, floor)
    if exclude:
        dev[list(exclude)] = np.nan
    if np.all(np.isnan(dev)):
        return 0.0
    return float(np.nanmax(dev))
