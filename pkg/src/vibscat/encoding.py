"""Qubit-efficient encoding of an N-level Hamiltonian onto log2(N) qubits.

Level ``i`` maps to the computational basis state whose binary expansion is
``i`` (qubit ``k`` holds bit ``k``), so ``H = sum_ij h_ij |q_i><q_j|`` becomes a
real combination of Pauli strings, ``H = sum_k g_k P_k``.

Pauli labels are written most-significant qubit first: ``"XIYZ"`` puts ``X``
on qubit 3 and ``Z`` on qubit 0, which is also the order of the Kronecker
factors of the dense matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np

LETTERS = "IXYZ"
PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, label written MSB first."""

    label: str

    def __post_init__(self) -> None:
        if not self.label or any(ch not in LETTERS for ch in self.label):
            raise ValueError(f"invalid Pauli label {self.label!r}")

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliString":
        """Inverse of :attr:`index`."""
        chars = []
        for _ in range(n):
            chars.append(LETTERS[index % 4])
            index //= 4
        return cls("".join(reversed(chars)))

    @property
    def n_qubits(self) -> int:
        return len(self.label)

    @property
    def index(self) -> int:
        """Position in the canonical (lexicographic I<X<Y<Z) enumeration."""
        idx = 0
        for ch in self.label:
            idx = 4 * idx + LETTERS.index(ch)
        return idx

    def letter(self, qubit: int) -> str:
        return self.label[self.n_qubits - 1 - qubit]

    def support(self) -> list[int]:
        """Qubits carrying a non-identity letter, ascending."""
        return [q for q in range(self.n_qubits) if self.letter(q) != "I"]

    @property
    def n_y(self) -> int:
        return self.label.count("Y")

    def matrix(self) -> np.ndarray:
        return reduce(np.kron, (PAULI_MATRICES[ch] for ch in self.label))

    def __str__(self) -> str:
        return self.label


@dataclass
class QubitHamiltonian:
    n_qubits: int
    terms: list[tuple[PauliString, float]]

    def __len__(self) -> int:
        return len(self.terms)

    def sorted(self) -> "QubitHamiltonian":
        return QubitHamiltonian(self.n_qubits, sorted(self.terms, key=lambda t: t[0].index))

    def coefficient(self, label: str) -> float:
        for p, g in self.terms:
            if p.label == label:
                return g
        return 0.0

    def to_text(self) -> str:
        return "".join(f"{p.label}\t{complex(g).real!r}\n" for p, g in self.terms)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "QubitHamiltonian":
        terms = []
        for line in text.splitlines():
            if not line.strip():
                continue
            label, g = line.split("\t")
            terms.append((PauliString(label.strip()), float(g)))
        if not terms:
            raise ValueError("empty term list")
        return cls(terms[0][0].n_qubits, terms)


def n_qubits_for(dim: int) -> int:
    n = dim.bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"matrix dimension {dim} is not a power of two")
    return n


def pad_to_power_of_two(h: np.ndarray) -> np.ndarray:
    """Zero-pad the trailing two axes up to the next power of two."""
    dim = h.shape[-1]
    target = 1 << max(0, (dim - 1).bit_length())
    if target == dim:
        return h
    out = np.zeros(h.shape[:-2] + (target, target), dtype=h.dtype)
    out[..., :dim, :dim] = h
    return out


def pauli_coefficients(h: np.ndarray) -> np.ndarray:
    """All ``4**n`` coefficients ``Tr(P_k h) / 2**n`` in canonical order.

    Leading axes are treated as a batch.  Each qubit is handled in turn by
    mapping its (row bit, column bit) pair to the four Pauli channels, which
    costs ``O(n 4**n)`` per matrix.
    """
    h = np.asarray(h)
    dim = h.shape[-1]
    if h.ndim < 2 or h.shape[-2] != dim:
        raise ValueError(f"expected square matrices, got shape {h.shape}")
    n = n_qubits_for(dim)
    batch = h.shape[:-2]
    b = len(batch)
    t = h.astype(complex).reshape(batch + (2,) * (2 * n))
    for p in range(n):
        t = np.moveaxis(t, b + n, b + p + 1)
        shape = t.shape
        t = t.reshape(shape[: b + p] + (4,) + shape[b + p + 2 :])
        lead = (slice(None),) * (b + p)
        m00, m01, m10, m11 = (t[lead + (k,)] for k in range(4))
        t = 0.5 * np.stack([m00 + m11, m01 + m10, 1j * (m01 - m10), m00 - m11], axis=b + p)
    return t.reshape(batch + (4**n,))


def _check_hermitian(h: np.ndarray, tol: float) -> None:
    defect = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))) if h.size else 0.0
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian (max |H - H^dagger| = {defect:.3e})")


def encode_hamiltonian(h: np.ndarray, prune_eps: float = 1e-12, hermitian_tol: float = 1e-12) -> QubitHamiltonian:
    """Pauli decomposition of a Hermitian ``2**n x 2**n`` matrix.

    Strings with ``|g_k| <= prune_eps`` are dropped; the rest come back in
    canonical order with real coefficients.
    """
    h = np.asarray(h)
    n = n_qubits_for(h.shape[-1])
    _check_hermitian(h, hermitian_tol)
    g = pauli_coefficients(h)
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.max(np.abs(g.imag)) > 1e-12 * scale:
        raise ValueError("Pauli coefficients are not real; input is not Hermitian")
    g = g.real
    terms = [(PauliString.from_index(k, n), float(g[k])) for k in np.flatnonzero(np.abs(g) > prune_eps)]
    return QubitHamiltonian(n, terms)


def reconstruct(hq: QubitHamiltonian) -> np.ndarray:
    """Dense ``sum_k g_k P_k`` built from explicit Kronecker products."""
    dim = 1 << hq.n_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for p, g in hq.terms:
        if p.n_qubits != hq.n_qubits:
            raise ValueError(f"term {p} does not act on {hq.n_qubits} qubits")
        out += g * p.matrix()
    return out


def basis_index_to_qubit_state(i: int, n: int) -> tuple[int, ...]:
    """Bits ``(y_{n-1}, ..., y_0)`` of basis state ``i``."""
    if not 0 <= i < 1 << n:
        raise ValueError(f"basis index {i} out of range for {n} qubits")
    return tuple((i >> k) & 1 for k in reversed(range(n)))


def qubit_state_to_basis_index(bits) -> int:
    idx = 0
    for bit in bits:
        idx = 2 * idx + int(bit)
    return idx
