"""Transition probabilities and the complex S-matrix from evolution circuits.

Probabilities come from running the evolution circuit on one encoded basis
state.  Full complex elements ``S_ij = <q_i|U|q_j>`` come from a Hadamard
test: an ancilla (the extra most-significant qubit) starts in
``(|0>|q_i> + c |1>|q_j>) / sqrt(2)`` with ``c = 1`` for the real part and
``c = -i`` for the imaginary part, controls ``U`` and is read out after a
final Hadamard; ``p0 - p1`` is the requested part.

Convention: row index = final state, column index = initial state.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuits import CNOT, Circuit, Controlled, GlobalPhase, H, control_circuit
from .simulator import (
    apply_gate,
    basis_state,
    circuit_unitary,
    probabilities,
    qubit_probability,
    run,
    sample,
)

logger = logging.getLogger(__name__)

PARTS = ("real", "imaginary")
UNITARITY_TOL = 1e-6


def _check_part(part: str) -> None:
    if part not in PARTS:
        raise ValueError(f"part must be one of {PARTS}, got {part!r}")


def hadamard_initial_state(i: int, j: int, n: int, part: str = "real") -> np.ndarray:
    """``(|0>|q_i> + c|1>|q_j>)/sqrt(2)`` on ``n + 1`` qubits, ancilla = qubit ``n``."""
    _check_part(part)
    dim = 1 << n
    if not (0 <= i < dim and 0 <= j < dim):
        raise ValueError(f"indices ({i}, {j}) out of range for {n} qubits")
    psi = np.zeros(2 * dim, dtype=complex)
    psi[i] = 1.0 / math.sqrt(2.0)
    psi[dim + j] = (1.0 if part == "real" else -1j) / math.sqrt(2.0)
    return psi


def hadamard_preparation(i: int, j: int, n: int, part: str = "real") -> Circuit:
    """Gates taking ``|0>|q_i>`` to the Hadamard-test initial state.

    Hadamard on the ancilla, ancilla-controlled flips of the bits where ``i``
    and ``j`` differ, then ``S^dagger`` on the ancilla (a controlled phase of
    ``-pi/2``) for the imaginary part.
    """
    _check_part(part)
    anc = n
    c = Circuit(n + 1).append(H(anc))
    diff = i ^ j
    for q in range(n):
        if diff >> q & 1:
            c.append(CNOT(anc, q))
    if part == "imaginary":
        c.append(Controlled(GlobalPhase(-math.pi / 2), anc))
    return c


def _readout(states: np.ndarray, ancilla: int) -> tuple[np.ndarray, np.ndarray]:
    """Hadamard on the ancilla, then ``(p0, p1)`` per column."""
    apply_gate(states, H(ancilla))
    return qubit_probability(states, ancilla, 0), qubit_probability(states, ancilla, 1)


def _estimate(p0: np.ndarray, p1: np.ndarray, shots: int, rng: np.random.Generator | None) -> np.ndarray:
    # p0 - p1 rather than 2 p0 - 1: identical for a normalized state, but
    # immune to the roundoff norm drift of long circuits
    if shots <= 0:
        return p0 - p1
    counts = rng.binomial(shots, np.clip(p0 / (p0 + p1), 0.0, 1.0))
    return 2.0 * counts / shots - 1.0


def hadamard_test(
    circuit: Circuit,
    i: int,
    j: int,
    part: str = "real",
    mode: str = "exact",
    shots: int = 100_000,
    seed: int | None = None,
    preparation: str = "amplitude",
) -> float:
    """Estimate ``Re`` or ``Im`` of ``<q_i|U|q_j>`` with an ancilla.

    Args:
        circuit: the register unitary ``U``.
        mode: ``"exact"`` reads ``p0`` off the amplitudes; ``"shots"`` draws
            ``shots`` ancilla measurements.
        preparation: ``"amplitude"`` loads the initial state directly,
            ``"gates"`` builds it from ``|0>|q_i>`` with
            :func:`hadamard_preparation`.
    """
    if mode not in ("exact", "shots"):
        raise ValueError(f"mode must be 'exact' or 'shots', got {mode!r}")
    n = circuit.n_qubits
    if preparation == "amplitude":
        psi = hadamard_initial_state(i, j, n, part)
    elif preparation == "gates":
        psi = run(hadamard_preparation(i, j, n, part), basis_state(i, n + 1))
    else:
        raise ValueError(f"unknown preparation {preparation!r}")
    final = run(control_circuit(circuit, n), psi)
    p0, p1 = _readout(final, n)
    rng = np.random.default_rng(seed) if mode == "shots" else None
    return float(_estimate(np.atleast_1d(p0), np.atleast_1d(p1), shots if mode == "shots" else 0, rng)[0])


@dataclass
class SMatrix:
    matrix: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    def unitarity_defect(self) -> float:
        s = self.matrix
        return float(np.max(np.abs(s.conj().T @ s - np.eye(self.n_states))))

    def column_norms(self) -> np.ndarray:
        return np.sum(np.abs(self.matrix) ** 2, axis=0)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.matrix) ** 2

    def to_csv(self, path: str | Path, header_comment: str | None = None) -> None:
        """Columns ``i,j,Re,Im`` with ``i`` the final and ``j`` the initial state."""
        with Path(path).open("w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "Re", "Im"])
            for j in range(self.n_states):
                for i in range(self.n_states):
                    z = self.matrix[i, j]
                    w.writerow([i, j, repr(float(z.real)), repr(float(z.imag))])

    def to_json(self, path: str | Path) -> None:
        doc = {
            "metadata": self.metadata,
            "n_states": self.n_states,
            "real": self.matrix.real.ravel().tolist(),
            "imag": self.matrix.imag.ravel().tolist(),
            "unitarity_defect": self.unitarity_defect(),
        }
        Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True, default=str))

    @classmethod
    def from_json(cls, path: str | Path) -> "SMatrix":
        doc = json.loads(Path(path).read_text())
        n = doc["n_states"]
        m = (np.array(doc["real"]) + 1j * np.array(doc["imag"])).reshape(n, n)
        return cls(m, doc["metadata"])


def assemble_smatrix(
    circuit: Circuit,
    n_physical: int | None = None,
    mode: str = "exact",
    shots: int = 100_000,
    seed: int | None = None,
    tol: float = UNITARITY_TOL,
) -> SMatrix:
    """All ``S_ij`` of the physical block from ``2 N^2`` Hadamard tests.

    The controlled evolution is simulated once on every ancilla-register basis
    state; each test's final state then follows by linearity, so the cost is
    independent of the number of tests.
    """
    if mode not in ("exact", "shots"):
        raise ValueError(f"mode must be 'exact' or 'shots', got {mode!r}")
    n = circuit.n_qubits
    n_phys = (1 << n) if n_physical is None else n_physical
    anc = n
    controlled_u = circuit_unitary(control_circuit(circuit, anc))

    pairs = [(i, j) for j in range(n_phys) for i in range(n_phys)]
    dim = 1 << n
    inv = 1.0 / math.sqrt(2.0)
    values = {}
    for part, c in (("real", 1.0), ("imaginary", -1j)):
        init_cols = np.array([i for i, _ in pairs])
        anc_cols = np.array([dim + j for _, j in pairs])
        final = inv * (controlled_u[:, init_cols] + c * controlled_u[:, anc_cols])
        values[part] = _readout(np.ascontiguousarray(final), anc)

    rng = np.random.default_rng(seed) if mode == "shots" else None
    n_shots = shots if mode == "shots" else 0
    re = _estimate(*values["real"], n_shots, rng)
    im = _estimate(*values["imaginary"], n_shots, rng)
    s = np.zeros((n_phys, n_phys), dtype=complex)
    for k, (i, j) in enumerate(pairs):
        s[i, j] = re[k] + 1j * im[k]

    meta = {k: v for k, v in circuit.metadata.items() if k != "schedule"}
    meta.update(mode=mode, shots=n_shots, n_physical=n_phys)
    result = SMatrix(s, meta)
    defect = result.unitarity_defect()
    result.metadata["unitarity_defect"] = defect
    if mode == "exact" and defect > tol:
        logger.warning("S-matrix unitarity defect %.3e exceeds %.1e", defect, tol)
    return result


def transition_probabilities(
    circuit: Circuit,
    initial: int,
    n_physical: int | None = None,
    n_bound: int | None = None,
    shots: int = 0,
    seed: int | None = None,
) -> np.ndarray:
    """Final-state probabilities ``P_{initial -> j}`` over the physical states.

    With ``shots > 0`` the exact distribution is replaced by sampled
    frequencies.  ``n_bound`` enforces that only bound levels start a
    collision.
    """
    n = circuit.n_qubits
    n_phys = (1 << n) if n_physical is None else n_physical
    limit = n_phys if n_bound is None else min(n_bound, n_phys)
    if not 0 <= initial < limit:
        raise ValueError(f"initial state {initial} is not one of the {limit} bound states in the basis")
    final = run(circuit, basis_state(initial, n))
    if shots > 0:
        p = sample(final, shots, seed) / shots
    else:
        p = probabilities(final)
    return p[:n_phys]


def probability_matrix(circuit: Circuit, initials, n_physical: int | None = None) -> np.ndarray:
    """Rows ``P_{i -> j}`` for several initial states in one batched run."""
    n = circuit.n_qubits
    n_phys = (1 << n) if n_physical is None else n_physical
    initials = list(initials)
    batch = np.zeros((1 << n, len(initials)), dtype=complex)
    for col, i in enumerate(initials):
        batch[i, col] = 1.0
    final = run(circuit, batch)
    return (np.abs(final[:n_phys]) ** 2).T
