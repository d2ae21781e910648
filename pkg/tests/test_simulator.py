import numpy as np
import pytest

from oracles import circuit_matrix, gate_matrix
from vibscat.circuits import CNOT, RX, RZ, Circuit, Controlled, Gate, GlobalPhase, H
from vibscat.simulator import (
    apply_gate,
    basis_state,
    circuit_unitary,
    probabilities,
    qubit_probability,
    run,
    sample,
)


def random_state(rng, n):
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


def all_gates(n, rng):
    gates = [GlobalPhase(rng.uniform(-3, 3))]
    for q in range(n):
        gates += [H(q), RX(q, rng.uniform(-3, 3)), RZ(q, rng.uniform(-3, 3))]
        for t in range(n):
            if t != q:
                gates.append(CNOT(q, t))
    controlled = []
    for g in gates:
        for a in range(n):
            if a not in g.qubits:
                controlled.append(Controlled(g, a))
    return gates + controlled


def test_rz_on_zero():
    psi = apply_gate(basis_state(0, 1), RZ(0, 0.8))
    np.testing.assert_allclose(psi, [np.exp(-0.4j), 0], atol=1e-16)


def test_rx_pi_on_zero():
    psi = apply_gate(basis_state(0, 1), RX(0, np.pi))
    np.testing.assert_allclose(psi, [0, -1j], atol=1e-16)


def test_every_gate_matches_dense_oracle(rng):
    n = 3
    for g in all_gates(n, rng):
        psi = random_state(rng, n)
        out = apply_gate(psi.copy(), g)
        np.testing.assert_allclose(out, gate_matrix(g, n) @ psi, atol=1e-14)
        assert abs(np.linalg.norm(out) - 1) < 1e-14


def test_controlled_phase_is_diag_on_control():
    u = circuit_unitary(Circuit.from_gates(1, [Controlled(GlobalPhase(0.3), 0)]))
    np.testing.assert_allclose(u, np.diag([1, np.exp(0.3j)]), atol=1e-16)


def test_empty_and_involution(rng):
    psi = random_state(rng, 2)
    assert np.array_equal(run(Circuit(2), psi), psi)
    hh = run(Circuit.from_gates(1, [H(0), H(0)]), np.array([0.6, 0.8j]))
    np.testing.assert_allclose(hh, [0.6, 0.8j], atol=1e-15)


def test_run_does_not_touch_input(rng):
    psi = random_state(rng, 2)
    before = psi.copy()
    run(Circuit.from_gates(2, [H(0), CNOT(0, 1)]), psi)
    assert np.array_equal(psi, before)


def test_run_columns_match_unitary(rng):
    gates = [g for g in all_gates(3, rng)]
    circuit = Circuit.from_gates(3, [gates[k] for k in rng.integers(0, len(gates), 60)])
    u = circuit_unitary(circuit)
    np.testing.assert_allclose(u, circuit_matrix(circuit), atol=1e-13)
    for i in range(8):
        np.testing.assert_allclose(run(circuit, basis_state(i, 3)), u[:, i], atol=1e-15)


def test_linearity(rng):
    gates = all_gates(3, rng)
    circuit = Circuit.from_gates(3, [gates[k] for k in rng.integers(0, len(gates), 40)])
    a, b = random_state(rng, 3), random_state(rng, 3)
    alpha, beta = 0.3 - 0.2j, 1.1j
    lhs = run(circuit, alpha * a + beta * b)
    np.testing.assert_allclose(lhs, alpha * run(circuit, a) + beta * run(circuit, b), atol=1e-12)


def test_norm_drift(rng):
    gates = all_gates(4, rng)
    circuit = Circuit.from_gates(4, [gates[k] for k in rng.integers(0, len(gates), 10_000)])
    out = run(circuit, random_state(rng, 4))
    assert abs(np.linalg.norm(out) - 1) < 1e-12


def test_repeated_block_matches_expansion(rng):
    from vibscat.circuits import Block

    template = [Gate("RX", (0,), 1.0, None, 0), CNOT(0, 1), Gate("RZ", (1,), 0.5, None, 1), H(1)]
    params = rng.normal(size=(7, 2))
    c = Circuit(2).add_block(Block(template, params))
    expanded = Circuit.from_gates(2, list(c.gates()))
    assert len(expanded) == 28
    np.testing.assert_allclose(circuit_unitary(c), circuit_matrix(expanded), atol=1e-14)


def test_probabilities_and_qubit_marginals():
    p = probabilities(basis_state(3, 2))
    np.testing.assert_array_equal(p, [0, 0, 0, 1])
    uniform = np.full(4, 0.5, dtype=complex)
    np.testing.assert_allclose(probabilities(uniform), 0.25)
    assert qubit_probability(basis_state(2, 2), 1, 1) == pytest.approx(1.0)
    assert qubit_probability(basis_state(2, 2), 0, 0) == pytest.approx(1.0)


def test_sampling_within_binomial_bounds(rng):
    psi = random_state(rng, 3)
    p = probabilities(psi)
    shots = 100_000
    counts = sample(psi, shots, seed=7)
    assert counts.sum() == shots
    sigma = np.sqrt(shots * p * (1 - p))
    assert np.all(np.abs(counts - shots * p) <= 4 * sigma)
    assert np.array_equal(counts, sample(psi, shots, seed=7))


def test_sampling_rejects_zero_shots():
    with pytest.raises(ValueError):
        sample(basis_state(0, 1), 0)


def test_unitary_examples():
    np.testing.assert_array_equal(circuit_unitary(Circuit(2)), np.eye(4))
    cnot = circuit_unitary(Circuit.from_gates(2, [CNOT(0, 1)]))
    # control qubit 0 (low bit) flips qubit 1: |01> <-> |11> in index terms 1 <-> 3
    perm = np.eye(4)[:, [0, 3, 2, 1]]
    np.testing.assert_array_equal(cnot, perm)
    with pytest.raises(ValueError):
        circuit_unitary(Circuit(11))


def test_errors():
    with pytest.raises(IndexError):
        apply_gate(basis_state(0, 2), H(2))
    with pytest.raises(ValueError):
        run(Circuit(3), basis_state(0, 2))
    with pytest.raises(ValueError):
        basis_state(4, 2)
    with pytest.raises(TypeError):
        apply_gate(np.zeros(4), H(0))
    with pytest.raises(ValueError):
        apply_gate(basis_state(0, 1), Gate("RZ", (0,), 1.0, None, 0))


def test_batch_columns_independent(rng):
    gates = all_gates(2, rng)
    circuit = Circuit.from_gates(2, [gates[k] for k in rng.integers(0, len(gates), 30)])
    batch = np.stack([random_state(rng, 2) for _ in range(5)], axis=1)
    out = run(circuit, batch)
    for c in range(5):
        np.testing.assert_allclose(out[:, c], run(circuit, batch[:, c]), atol=1e-15)


def test_deterministic(rng):
    gates = all_gates(3, rng)
    circuit = Circuit.from_gates(3, [gates[k] for k in rng.integers(0, len(gates), 100)])
    psi = random_state(rng, 3)
    assert np.array_equal(run(circuit, psi), run(circuit, psi))
