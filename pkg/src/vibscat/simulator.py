"""Exact statevector simulator.

States are complex numpy arrays of length ``2**n`` with basis index bit ``k``
holding qubit ``k``.  A 2-D array ``(2**n, K)`` is a batch of ``K`` states
evolved together, which is how :func:`circuit_unitary` works.

Circuits are executed by a compiled kernel that walks a block's gate
template once per repetition, updating amplitude pairs in place.
"""

from __future__ import annotations

import numba
import numpy as np

from .circuits import Block, Circuit, Gate

MAX_DENSE_QUBITS = 10
# parameter rows fetched per kernel call for repeated blocks
_CHUNK_ELEMENTS = 1 << 22

_H, _RX, _RZ, _CNOT, _PHASE = range(5)
_INV_SQRT2 = 1.0 / np.sqrt(2.0)


@numba.njit(cache=True, nogil=True)
def _apply_program(state, kinds, target, source, wrap, theta, slot, params):
    dim, width = state.shape
    half = dim // 2
    for s in range(params.shape[0]):
        for g in range(kinds.shape[0]):
            angle = theta[g]
            if slot[g] >= 0:
                angle = angle * params[s, slot[g]]
            kind = kinds[g]
            wmask = 0
            if wrap[g] >= 0:
                wmask = 1 << wrap[g]

            if kind == _PHASE:
                ph = np.cos(angle) + 1j * np.sin(angle)
                for i in range(dim):
                    if (i & wmask) == wmask:
                        for c in range(width):
                            state[i, c] *= ph
                continue

            t = target[g]
            tbit = 1 << t
            low = tbit - 1
            cmask = wmask
            if kind == _CNOT:
                cmask |= 1 << source[g]

            if kind == _CNOT:
                for j in range(half):
                    i0 = ((j >> t) << (t + 1)) | (j & low)
                    if (i0 & cmask) != cmask:
                        continue
                    i1 = i0 | tbit
                    for c in range(width):
                        tmp = state[i0, c]
                        state[i0, c] = state[i1, c]
                        state[i1, c] = tmp
            elif kind == _RZ:
                e0 = np.cos(0.5 * angle) - 1j * np.sin(0.5 * angle)
                e1 = np.cos(0.5 * angle) + 1j * np.sin(0.5 * angle)
                for j in range(half):
                    i0 = ((j >> t) << (t + 1)) | (j & low)
                    if (i0 & cmask) != cmask:
                        continue
                    i1 = i0 | tbit
                    for c in range(width):
                        state[i0, c] *= e0
                        state[i1, c] *= e1
            elif kind == _H:
                for j in range(half):
                    i0 = ((j >> t) << (t + 1)) | (j & low)
                    if (i0 & cmask) != cmask:
                        continue
                    i1 = i0 | tbit
                    for c in range(width):
                        a = state[i0, c]
                        b = state[i1, c]
                        state[i0, c] = (a + b) * _INV_SQRT2
                        state[i1, c] = (a - b) * _INV_SQRT2
            else:
                co = np.cos(0.5 * angle)
                si = -1j * np.sin(0.5 * angle)
                for j in range(half):
                    i0 = ((j >> t) << (t + 1)) | (j & low)
                    if (i0 & cmask) != cmask:
                        continue
                    i1 = i0 | tbit
                    for c in range(width):
                        a = state[i0, c]
                        b = state[i1, c]
                        state[i0, c] = co * a + si * b
                        state[i1, c] = si * a + co * b


def n_qubits_of(state: np.ndarray) -> int:
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError(f"state length {dim} is not a power of two")
    return n


def basis_state(index: int, n_qubits: int) -> np.ndarray:
    if not 0 <= index < 1 << n_qubits:
        raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def _as_batch(state: np.ndarray) -> np.ndarray:
    return state.reshape(state.shape[0], 1) if state.ndim == 1 else state


def _run_block(batch: np.ndarray, block: Block) -> None:
    program = block.program()
    if block.params is None:
        _apply_program(batch, *program, np.zeros((1, 0)))
        return
    n_steps = block.n_steps
    n_slots = max(1, int(program[-1].max(initial=-1)) + 1)
    step = max(1, _CHUNK_ELEMENTS // n_slots)
    for start in range(0, n_steps, step):
        chunk = np.ascontiguousarray(block.param_chunk(start, min(n_steps, start + step)), dtype=float)
        _apply_program(batch, *program, chunk)


def apply_gate(state: np.ndarray, gate: Gate) -> np.ndarray:
    """Apply one gate in place and return the same array."""
    if gate.slot >= 0:
        raise ValueError("cannot apply an unbound template gate")
    if state.dtype != np.complex128 or not state.flags.c_contiguous:
        raise TypeError("apply_gate needs a C-contiguous complex128 array (updated in place)")
    n = n_qubits_of(state)
    for q in gate.wires:
        if not 0 <= q < n:
            raise IndexError(f"gate {gate} touches qubit {q} of a {n}-qubit state")
    _run_block(_as_batch(state), Block([gate]))
    return state


def run(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    """Final state(s) after applying every gate in order; input untouched."""
    if n_qubits_of(state) != circuit.n_qubits:
        raise ValueError(f"{circuit.n_qubits}-qubit circuit applied to a {n_qubits_of(state)}-qubit state")
    out = np.array(state, dtype=complex, order="C", copy=True)
    batch = _as_batch(out)
    for block in circuit.blocks:
        _run_block(batch, block)
    return out


def probabilities(state: np.ndarray) -> np.ndarray:
    return np.abs(state) ** 2


def sample(state: np.ndarray, shots: int, seed: int | None = None) -> np.ndarray:
    """Outcome counts from ``shots`` projective measurements (seeded)."""
    if shots <= 0:
        raise ValueError(f"shots must be positive, got {shots}")
    p = probabilities(state)
    p = p / p.sum()
    return np.random.default_rng(seed).multinomial(shots, p)


def qubit_probability(state: np.ndarray, qubit: int, value: int = 0) -> np.ndarray:
    """Probability of reading ``value`` on one qubit (per batch column)."""
    n = n_qubits_of(state)
    if not 0 <= qubit < n:
        raise IndexError(f"qubit {qubit} out of range")
    idx = np.arange(1 << n)
    mask = ((idx >> qubit) & 1) == value
    return np.sum(np.abs(state[mask]) ** 2, axis=0)


def circuit_unitary(circuit: Circuit, max_qubits: int = MAX_DENSE_QUBITS) -> np.ndarray:
    """Dense matrix whose column ``j`` is ``run(circuit, |j>)``."""
    if circuit.n_qubits > max_qubits:
        raise ValueError(f"dense unitary of {circuit.n_qubits} qubits exceeds the {max_qubits}-qubit guard")
    return run(circuit, np.eye(1 << circuit.n_qubits, dtype=complex))
