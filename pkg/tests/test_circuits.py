import itertools
import math

import numpy as np
import pytest
from scipy.linalg import expm

from oracles import circuit_matrix
from vibscat.circuits import (
    CNOT,
    RX,
    RZ,
    Circuit,
    Controlled,
    Gate,
    GlobalPhase,
    H,
    build_evolution_circuit,
    compile_pauli_rotation,
    control_circuit,
    trotter_sequence,
    trotter_step,
)
from vibscat.coupling import build_coupling_table, coupling_at_time, half_duration
from vibscat.eigensolver import RadialMesh, solve_basis
from vibscat.encoding import PauliString, QubitHamiltonian, encode_hamiltonian, pad_to_power_of_two
from vibscat.potential import SurfaceModel, diatom_potential
from vibscat.scattering import projectile_velocity
from vibscat.simulator import basis_state, circuit_unitary, run

V = projectile_velocity(100.0)


def all_strings(n):
    return [PauliString("".join(t)) for t in itertools.product("IXYZ", repeat=n)]


def random_qubit_hamiltonian(rng, n):
    a = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
    h = (a + a.conj().T) / 2
    return h, encode_hamiltonian(h)


@pytest.fixture(scope="module")
def small_table():
    surface = SurfaceModel()
    basis = solve_basis(RadialMesh(), lambda r: diatom_potential(r, surface))
    return build_coupling_table(basis, surface, math.pi / 2, 0.1, 20.0, 4)


def test_single_z():
    c = compile_pauli_rotation(PauliString("Z"), 0.9)
    assert list(c.gates()) == [RZ(0, 0.9)]
    np.testing.assert_allclose(circuit_unitary(c), np.diag([np.exp(-0.45j), np.exp(0.45j)]), atol=1e-16)


def test_fig3_pattern():
    theta = 0.37
    gates = list(compile_pauli_rotation(PauliString("XIYX"), theta).gates())
    expected = [
        H(0), RX(1, math.pi / 2), H(3),
        CNOT(0, 1), CNOT(1, 3), RZ(3, theta), CNOT(1, 3), CNOT(0, 1),
        H(0), RX(1, -math.pi / 2), H(3),
    ]
    assert gates == expected
    assert all(2 not in g.wires for g in gates)


def test_identity_string_is_global_phase():
    c = compile_pauli_rotation(PauliString("II"), 0.7)
    assert list(c.gates()) == [GlobalPhase(-0.35)]
    np.testing.assert_allclose(circuit_unitary(c), np.exp(-0.35j) * np.eye(4), atol=1e-16)


@pytest.mark.parametrize("n", [2, 3])
def test_rotation_exact_with_phase(n, rng):
    for p in all_strings(n):
        for theta in rng.uniform(-2 * np.pi, 2 * np.pi, 20):
            u = circuit_unitary(compile_pauli_rotation(p, theta))
            assert np.max(np.abs(u - expm(-0.5j * theta * p.matrix()))) < 1e-12


def test_gate_count_formula():
    for n in (1, 2, 3):
        for p in all_strings(n):
            w = len(p.support())
            if w == 0:
                continue
            counts = compile_pauli_rotation(p, 0.1).count_ops()
            nx, ny = p.label.count("X"), p.label.count("Y")
            assert counts.get("H", 0) == 2 * nx
            assert counts.get("RX", 0) == 2 * ny
            assert counts.get("CNOT", 0) == 2 * (w - 1)
            assert counts["RZ"] == 1
            assert sum(counts.values()) == 2 * nx + 2 * ny + 2 * (w - 1) + 1


def test_compiled_circuits_unitary(rng):
    for p in all_strings(3)[::5]:
        u = circuit_unitary(compile_pauli_rotation(p, rng.uniform(-3, 3)))
        assert np.max(np.abs(u.conj().T @ u - np.eye(8))) < 1e-12


def test_trotter_sequence():
    assert trotter_sequence(3, 2) == [(0, 1.0), (1, 1.0), (2, 2.0), (1, 1.0), (0, 1.0)]
    assert trotter_sequence(3, 1) == [(0, 2.0), (1, 2.0), (2, 2.0)]
    with pytest.raises(ValueError):
        trotter_sequence(3, 4)


def test_single_term_step_is_exact():
    hq = QubitHamiltonian(2, [(PauliString("XY"), 0.8)])
    tau = 0.3
    u = circuit_unitary(trotter_step(hq, tau))
    np.testing.assert_allclose(u, expm(-1j * tau * 0.8 * PauliString("XY").matrix()), atol=1e-14)


def test_commuting_terms_are_exact(rng):
    h = np.diag(rng.normal(size=8))
    hq = encode_hamiltonian(h)
    for tau in (0.01, 0.7, 5.0):
        for order in (1, 2):
            u = circuit_unitary(trotter_step(hq, tau, order))
            assert np.max(np.abs(u - expm(-1j * tau * h))) < 1e-12


def test_order_two_error_scaling(rng):
    h, hq = random_qubit_hamiltonian(rng, 2)
    err = []
    for tau in (0.02, 0.01, 0.005):
        u = circuit_unitary(trotter_step(hq, tau, 2))
        err.append(np.linalg.norm(u - expm(-1j * tau * h), 2))
    ratios = np.array(err[:-1]) / np.array(err[1:])
    np.testing.assert_allclose(ratios, 8.0, rtol=0.25)


def test_order_one_error_scaling(rng):
    h, hq = random_qubit_hamiltonian(rng, 2)
    e1 = np.linalg.norm(circuit_unitary(trotter_step(hq, 0.01, 1)) - expm(-0.01j * h), 2)
    e2 = np.linalg.norm(circuit_unitary(trotter_step(hq, 0.005, 1)) - expm(-0.005j * h), 2)
    assert e1 / e2 == pytest.approx(4.0, rel=0.25)


def test_palindrome_inverse(rng):
    _, hq = random_qubit_hamiltonian(rng, 3)
    step = trotter_step(hq, 0.05, 2)
    u = circuit_unitary(step)
    u_rev = circuit_unitary(step.inverse())
    assert np.max(np.abs(u @ u_rev - np.eye(8))) < 1e-10
    # for the palindrome the reversed list equals the step at -tau
    np.testing.assert_allclose(u_rev, u.conj().T, atol=1e-12)


def test_empty_hamiltonian_is_identity():
    c = trotter_step(QubitHamiltonian(2, []), 0.1)
    assert len(c) == 0
    np.testing.assert_array_equal(circuit_unitary(c), np.eye(4))
    with pytest.raises(ValueError):
        trotter_step(QubitHamiltonian(2, []), 0.0)


def test_control_circuit(rng):
    _, hq = random_qubit_hamiltonian(rng, 2)
    c = trotter_step(hq, 0.3)
    c.append(GlobalPhase(0.4))
    u = circuit_unitary(c)
    cu = circuit_unitary(control_circuit(c, 2))
    np.testing.assert_allclose(cu[:4, :4], np.eye(4), atol=1e-14)
    np.testing.assert_allclose(cu[4:, 4:], u, atol=1e-14)
    assert np.max(np.abs(cu[:4, 4:])) == 0 and np.max(np.abs(cu[4:, :4])) == 0
    phase = circuit_unitary(control_circuit(Circuit.from_gates(0, [GlobalPhase(0.9)]), 0))
    np.testing.assert_allclose(phase, np.diag([1, np.exp(0.9j)]), atol=1e-16)
    with pytest.raises(ValueError):
        control_circuit(c, 1)


def test_gate_validation():
    with pytest.raises(ValueError):
        CNOT(1, 1)
    with pytest.raises(ValueError):
        Gate("SWAP", (0, 1))
    with pytest.raises(ValueError):
        Controlled(H(0), 0)
    with pytest.raises(IndexError):
        Circuit(2).append(H(2))


def test_text_roundtrip(rng):
    _, hq = random_qubit_hamiltonian(rng, 2)
    c = control_circuit(trotter_step(hq, 0.2), 2)
    c.append(GlobalPhase(-0.35))
    text = c.to_text()
    assert text.startswith("QUBITS 3\n")
    assert "PHASE -0.35" in text
    assert any(line.startswith("CTRL a2 RZ q") for line in text.splitlines())
    back = Circuit.from_text(text)
    assert list(back.gates()) == list(c.gates())
    assert H(0).to_text() == "H q0" and CNOT(0, 1).to_text() == "CNOT q0 q1"
    assert RX(2, 1.5707963).to_text() == "RX q2 1.5707963"


def test_evolution_time_grid(small_table):
    for b, tau in ((0.01, 0.1), (3.0, 0.37)):
        c = build_evolution_circuit(small_table, b, V, tau)
        sched = c.metadata["schedule"]
        T = half_duration(b, V, 20.0)
        assert c.metadata["T"] == T
        assert sched.n_steps == math.ceil(2 * T / tau)
        assert sched.times[-1] == T
        assert math.isclose(sched.steps.sum(), 2 * T, rel_tol=1e-12)
        assert 0 < sched.steps[-1] <= tau * (1 + 1e-9)
        np.testing.assert_allclose(sched.times[:-1], -T + tau * np.arange(1, sched.n_steps))


def test_evolution_shorter_than_one_step(small_table):
    b = 19.99995
    T = half_duration(b, V, 20.0)
    c = build_evolution_circuit(small_table, b, V, 4 * T)
    sched = c.metadata["schedule"]
    assert sched.n_steps == 1 and sched.shortened and not c.metadata["no_steps"]
    assert sched.steps[0] == pytest.approx(2 * T)


def test_evolution_matches_explicit_step_product(small_table):
    """Block/parameter machinery against a step-by-step rebuild."""
    b, tau = 2.0, 8.0
    c = build_evolution_circuit(small_table, b, V, tau)
    sched = c.metadata["schedule"]
    u = np.eye(4, dtype=complex)
    for t, dt in zip(sched.times, sched.steps):
        h, _ = coupling_at_time(small_table, t, b, V)
        u = circuit_matrix(trotter_step(encode_hamiltonian(pad_to_power_of_two(h)), dt)) @ u
    assert np.max(np.abs(circuit_unitary(c) - u)) < 1e-12


def test_near_rmax_is_free_evolution(small_table):
    b = 19.99
    c = build_evolution_circuit(small_table, b, V, 0.01)
    T = c.metadata["T"]
    for i in range(4):
        amp = run(c, basis_state(i, 2))
        assert abs(amp[i]) ** 2 > 0.999
        assert abs(amp[i] - np.exp(-1j * small_table.energies[i] * 2 * T)) < 1e-3


def test_evolution_rejects_b_beyond_rmax(small_table):
    with pytest.raises(ValueError):
        build_evolution_circuit(small_table, 20.0, V, 0.1)


def test_evolution_metadata_and_padding(small_table):
    table = small_table.subset(3)
    c = build_evolution_circuit(table, 1.0, V, 1.0)
    assert c.n_qubits == 2 and c.metadata["n_physical"] == 3
    assert c.metadata["n_steps"] == math.ceil(2 * c.metadata["T"])
    # H annihilates the padded level, so only Trotter splitting error couples it in
    leak = []
    for tau in (0.4, 0.2):
        u = circuit_unitary(build_evolution_circuit(table, 1.0, V, tau))
        leak.append(max(np.max(np.abs(u[3, :3])), abs(u[3, 3] - 1)))
    assert leak[0] < 1e-4
    assert leak[0] / leak[1] == pytest.approx(4.0, rel=0.25)
