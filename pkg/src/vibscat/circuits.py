"""Gate-level circuits: Pauli exponentials, Trotter steps, controlled copies.

A :class:`Circuit` is a sequence of blocks.  A plain block is an explicit
gate list.  A repeated block holds one gate template and a table of
per-repetition parameters; this is how a time evolution is stored, since
every Trotter step has the same gate structure and only the Pauli
coefficients change from step to step.  A template gate with ``slot >= 0``
gets the angle ``theta * params[step, slot]``.

Gate kinds and their matrices (qubit ``k`` is bit ``k`` of the basis index):

* ``H``      Hadamard.
* ``RX``     ``exp(-i theta X / 2)``.
* ``RZ``     ``exp(-i theta Z / 2) = diag(exp(-i theta/2), exp(i theta/2))``.
* ``CNOT``   ``qubits = (control, target)``.
* ``PHASE``  global phase ``exp(i theta)``; acts on no qubit.

Any gate may carry ``control``: it then acts only where that qubit is 1.  A
controlled ``PHASE`` is therefore ``diag(1, exp(i theta))`` on the control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Protocol, Sequence

import numpy as np

from .encoding import PauliString, QubitHamiltonian

KIND_CODES = {"H": 0, "RX": 1, "RZ": 2, "CNOT": 3, "PHASE": 4}
ANGLE_KINDS = ("RX", "RZ", "PHASE")


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...] = ()
    theta: float = 0.0
    control: int | None = None
    slot: int = -1

    def __post_init__(self) -> None:
        if self.kind not in KIND_CODES:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity = {"H": 1, "RX": 1, "RZ": 1, "CNOT": 2, "PHASE": 0}[self.kind]
        if len(self.qubits) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s), got {self.qubits}")
        if self.kind == "CNOT" and self.qubits[0] == self.qubits[1]:
            raise ValueError("CNOT control and target must differ")
        if self.control is not None and self.control in self.qubits:
            raise ValueError(f"control qubit {self.control} overlaps gate qubits {self.qubits}")

    @property
    def wires(self) -> tuple[int, ...]:
        return self.qubits if self.control is None else self.qubits + (self.control,)

    def bind(self, params_row: np.ndarray | None) -> "Gate":
        """Concrete gate for one repetition of a template."""
        if self.slot < 0:
            return self
        return replace(self, theta=self.theta * float(params_row[self.slot]), slot=-1)

    def inverse(self) -> "Gate":
        if self.kind in ANGLE_KINDS:
            return replace(self, theta=-self.theta)
        return self

    def to_text(self) -> str:
        if self.slot >= 0:
            raise ValueError("bind template gates before exporting")
        parts = [self.kind] + [f"q{q}" for q in self.qubits]
        if self.kind in ANGLE_KINDS:
            parts.append(repr(float(self.theta)))
        text = " ".join(parts)
        if self.control is not None:
            text = f"CTRL a{self.control} {text}"
        return text

    @classmethod
    def from_text(cls, line: str) -> "Gate":
        tokens = line.split()
        control = None
        if tokens[0] == "CTRL":
            control = int(tokens[1].lstrip("aq"))
            tokens = tokens[2:]
        kind = tokens[0]
        qubits = tuple(int(t[1:]) for t in tokens[1:] if t.startswith("q"))
        theta = float(tokens[-1]) if kind in ANGLE_KINDS else 0.0
        return cls(kind, qubits, theta, control)


def H(q: int) -> Gate:
    return Gate("H", (q,))


def RX(q: int, theta: float) -> Gate:
    return Gate("RX", (q,), theta)


def RZ(q: int, theta: float) -> Gate:
    return Gate("RZ", (q,), theta)


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def GlobalPhase(theta: float) -> Gate:
    return Gate("PHASE", (), theta)


def Controlled(gate: Gate, control: int) -> Gate:
    if gate.control is not None:
        raise ValueError("nested controls are not supported")
    return replace(gate, control=control)


class ParamSource(Protocol):
    """Lazily evaluated parameter table for a repeated block."""

    n_steps: int
    n_slots: int

    def chunk(self, start: int, stop: int) -> np.ndarray: ...


@dataclass
class Block:
    gates: list[Gate]
    params: np.ndarray | ParamSource | None = None
    label: str = ""
    _program: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_steps(self) -> int:
        if self.params is None:
            return 1
        if isinstance(self.params, np.ndarray):
            return self.params.shape[0]
        return self.params.n_steps

    def param_chunk(self, start: int, stop: int) -> np.ndarray:
        if self.params is None:
            return np.zeros((1, 0))
        if isinstance(self.params, np.ndarray):
            return self.params[start:stop]
        return self.params.chunk(start, stop)

    def program(self) -> tuple[np.ndarray, ...]:
        """Gate template as flat arrays for the simulator kernels."""
        if self._program is None:
            m = len(self.gates)
            kinds = np.empty(m, np.int8)
            target = np.full(m, -1, np.int64)
            source = np.full(m, -1, np.int64)
            wrap = np.full(m, -1, np.int64)
            theta = np.zeros(m)
            slot = np.full(m, -1, np.int64)
            for k, g in enumerate(self.gates):
                kinds[k] = KIND_CODES[g.kind]
                if g.kind == "CNOT":
                    source[k], target[k] = g.qubits
                elif g.qubits:
                    target[k] = g.qubits[0]
                wrap[k] = -1 if g.control is None else g.control
                theta[k] = g.theta
                slot[k] = g.slot
            self._program = (kinds, target, source, wrap, theta, slot)
        return self._program


@dataclass
class Circuit:
    n_qubits: int
    blocks: list[Block] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_gates(cls, n_qubits: int, gates: Sequence[Gate]) -> "Circuit":
        c = cls(n_qubits)
        for g in gates:
            c.append(g)
        return c

    def _check(self, gate: Gate) -> None:
        for q in gate.wires:
            if not 0 <= q < self.n_qubits:
                raise IndexError(f"gate {gate} touches qubit {q} outside a {self.n_qubits}-qubit circuit")

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        if gate.slot >= 0:
            raise ValueError("template gates belong in a repeated block")
        if not self.blocks or self.blocks[-1].params is not None:
            self.blocks.append(Block([]))
        self.blocks[-1].gates.append(gate)
        self.blocks[-1]._program = None
        return self

    def add_block(self, block: Block) -> "Circuit":
        for g in block.gates:
            self._check(g)
        self.blocks.append(block)
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        if other.n_qubits > self.n_qubits:
            raise ValueError("cannot append a wider circuit")
        for block in other.blocks:
            if block.params is None:
                for g in block.gates:
                    self.append(g)
            else:
                self.add_block(Block(list(block.gates), block.params, block.label))
        return self

    def __len__(self) -> int:
        return sum(len(b.gates) * b.n_steps for b in self.blocks)

    def gates(self) -> Iterator[Gate]:
        """All concrete gates in execution order (expands repeated blocks)."""
        for block in self.blocks:
            if block.params is None:
                yield from block.gates
                continue
            for start in range(0, block.n_steps, 1024):
                chunk = block.param_chunk(start, min(block.n_steps, start + 1024))
                for row in chunk:
                    for g in block.gates:
                        yield g.bind(row)

    def inverse(self) -> "Circuit":
        """Reversed gate order with negated angles (explicit gates only)."""
        gates = [g.inverse() for g in self.gates()]
        return Circuit.from_gates(self.n_qubits, gates[::-1])

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for block in self.blocks:
            for g in block.gates:
                counts[g.kind] = counts.get(g.kind, 0) + block.n_steps
        return counts

    def to_text(self) -> str:
        """Line-based export, one gate per line (see module docstring)."""
        lines = [f"QUBITS {self.n_qubits}"]
        lines.extend(g.to_text() for g in self.gates())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        n = int(lines[0].split()[1])
        return cls.from_gates(n, [Gate.from_text(ln) for ln in lines[1:]])


def rotation_gates(pauli: PauliString, theta: float, slot: int = -1) -> list[Gate]:
    """Gates implementing ``exp(-i theta/2 P)`` exactly, global phase included.

    X letters are rotated to Z with Hadamards, Y letters with
    ``RX(pi/2) ... RX(-pi/2)``; a CNOT chain then collects the parity of the
    active qubits onto the highest one, which receives ``RZ(theta)``.  The
    all-identity string is a pure phase ``exp(-i theta/2)``.
    """
    active = pauli.support()
    if not active:
        return [Gate("PHASE", (), -0.5 * theta, None, slot)]
    pre: list[Gate] = []
    post: list[Gate] = []
    for q in active:
        letter = pauli.letter(q)
        if letter == "X":
            pre.append(H(q))
            post.append(H(q))
        elif letter == "Y":
            pre.append(RX(q, math.pi / 2))
            post.append(RX(q, -math.pi / 2))
    ladder = [CNOT(a, b) for a, b in zip(active[:-1], active[1:])]
    rz = Gate("RZ", (active[-1],), theta, None, slot)
    return pre + ladder + [rz] + ladder[::-1] + post


def compile_pauli_rotation(pauli: PauliString, theta: float) -> Circuit:
    return Circuit.from_gates(pauli.n_qubits, rotation_gates(pauli, theta))


def trotter_sequence(n_terms: int, order: int = 2) -> list[tuple[int, float]]:
    """(term index, multiple of ``tau g_k``) pairs in execution order.

    The multiple is the rotation angle ``theta`` in units of ``tau g_k``:
    a full ``exp(-i tau g P)`` is ``theta = 2 tau g``.
    """
    if order == 1:
        return [(k, 2.0) for k in range(n_terms)]
    if order == 2:
        if n_terms == 0:
            return []
        half = [(k, 1.0) for k in range(n_terms - 1)]
        return half + [(n_terms - 1, 2.0)] + half[::-1]
    raise ValueError(f"Trotter order must be 1 or 2, got {order}")


def trotter_template(paulis: Sequence[PauliString], order: int = 2) -> list[Gate]:
    """One Trotter step with angle slots; ``params[k] = tau * g_k``."""
    gates: list[Gate] = []
    for k, scale in trotter_sequence(len(paulis), order):
        gates.extend(rotation_gates(paulis[k], scale, slot=k))
    return gates


def trotter_step(hq: QubitHamiltonian, tau: float, order: int = 2) -> Circuit:
    """Product-formula circuit for ``exp(-i tau H)`` in canonical term order."""
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    terms = sorted(hq.terms, key=lambda t: t[0].index)
    circuit = Circuit(hq.n_qubits)
    for k, scale in trotter_sequence(len(terms), order):
        pauli, g = terms[k]
        for gate in rotation_gates(pauli, scale * tau * g):
            circuit.append(gate)
    return circuit


def control_circuit(circuit: Circuit, ancilla: int) -> Circuit:
    """Every gate (template gates included) controlled on ``ancilla``.

    Global-phase gates become phases on the ancilla's ``|1>`` branch, so the
    phase of ``U`` survives as a measurable relative phase.
    """
    if 0 <= ancilla < circuit.n_qubits:
        raise ValueError(f"ancilla {ancilla} is already a register qubit")
    out = Circuit(max(circuit.n_qubits, ancilla + 1), metadata=dict(circuit.metadata))
    for block in circuit.blocks:
        gates = [Controlled(g, ancilla) for g in block.gates]
        out.add_block(Block(gates, block.params, block.label))
    return out


class EvolutionSchedule:
    """Per-step angles ``tau_k g_k(R(t_k))`` for a straight-line collision.

    Steps end at ``t_k = -T + k tau`` for ``k = 1..M`` with
    ``M = ceil(2T / tau)``; when ``2T`` is not a whole number of steps the
    last one is shortened so it ends exactly at ``+T``.  Coefficients are
    re-encoded at every step; those at or below ``prune_eps`` get angle 0,
    which is the identity.
    """

    def __init__(self, table, b: float, v: float, tau: float, paulis: Sequence[PauliString],
                 prune_eps: float = 1e-12, cache_limit: int = 1 << 25):
        from .coupling import half_duration

        if tau <= 0:
            raise ValueError(f"tau must be positive, got {tau}")
        self.table = table
        self.b = b
        self.v = v
        self.tau = tau
        self.prune_eps = prune_eps
        self.term_index = np.array([p.index for p in paulis], dtype=np.int64)
        self.n_slots = len(paulis)
        self.T = half_duration(b, v, table.r_max)
        self.n_steps = max(0, int(math.ceil(2.0 * self.T / tau - 1e-9)))
        k = np.arange(1, self.n_steps + 1, dtype=float)
        self.times = -self.T + k * tau
        self.steps = np.full(self.n_steps, tau)
        self.shortened = False
        if self.n_steps:
            self.times[-1] = self.T
            self.steps[-1] = 2.0 * self.T - (self.n_steps - 1) * tau
            self.shortened = abs(self.steps[-1] - tau) > 1e-12 * tau
        self.clamped = False
        self._cache = None
        self._cache_limit = cache_limit

    def coefficients(self, start: int, stop: int) -> np.ndarray:
        """Template Pauli coefficients ``g_k(t)`` for steps ``start..stop-1``."""
        from .coupling import coupling_at_time
        from .encoding import pad_to_power_of_two, pauli_coefficients

        h, clamped = coupling_at_time(self.table, self.times[start:stop], self.b, self.v)
        self.clamped |= clamped
        g = pauli_coefficients(pad_to_power_of_two(h)).real[:, self.term_index]
        g[np.abs(g) <= self.prune_eps] = 0.0
        return g

    def chunk(self, start: int, stop: int) -> np.ndarray:
        if self._cache is not None:
            return self._cache[start:stop]
        if start == 0 and stop == self.n_steps and self.n_steps * self.n_slots <= self._cache_limit:
            self._cache = self.coefficients(0, self.n_steps) * self.steps[:, None]
            return self._cache
        return self.coefficients(start, stop) * self.steps[start:stop, None]


def active_terms(table, prune_eps: float = 1e-12) -> list[PauliString]:
    """Pauli strings that carry weight anywhere on the tabulated R grid."""
    from .encoding import n_qubits_for, pad_to_power_of_two, pauli_coefficients

    g = pauli_coefficients(pad_to_power_of_two(table.values())).real
    n = n_qubits_for(g.shape[-1]) // 2
    keep = np.flatnonzero(np.max(np.abs(g), axis=0) > prune_eps)
    return [PauliString.from_index(int(k), n) for k in keep]


def build_evolution_circuit(table, b: float, v: float, tau: float, n_states: int | None = None,
                            order: int = 2, prune_eps: float = 1e-12) -> Circuit:
    """Time-ordered product of Trotter steps along the trajectory.

    Args:
        table: coupling table; its lowest ``n_states`` levels are used and
            zero-padded up to a power of two.
        b: impact parameter (bohr), below ``table.r_max``.
        v: projectile speed (atomic units).
        tau: time step (atomic units).

    Returns:
        Circuit with one repeated block.  ``metadata`` records ``T``, the
        number of steps, whether the last step was shortened, and the
        physical/padded state counts.
    """
    if n_states is not None and n_states != table.n_states:
        table = table.subset(n_states)
    if b >= table.r_max:
        raise ValueError(f"impact parameter {b} must be below R_max = {table.r_max}")
    n_phys = table.n_states
    n_qubits = max(1, (n_phys - 1).bit_length())
    paulis = active_terms(table, prune_eps)
    schedule = EvolutionSchedule(table, b, v, tau, paulis, prune_eps)
    circuit = Circuit(n_qubits)
    circuit.metadata.update(
        b=b, v=v, tau=tau, T=schedule.T, n_steps=schedule.n_steps, shortened=schedule.shortened,
        no_steps=schedule.n_steps == 0, n_physical=n_phys, n_terms=len(paulis), order=order,
    )
    if schedule.n_steps:
        circuit.add_block(Block(trotter_template(paulis, order), schedule, label="evolution"))
    circuit.metadata["schedule"] = schedule
    return circuit
