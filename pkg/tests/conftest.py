import numpy as np
import pytest

from vibscat.config import CollisionConfig
from vibscat.pipeline import Pipeline
from vibscat.simulator import circuit_unitary
from vibscat.smatrix import assemble_smatrix


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("coupling-cache")


@pytest.fixture(scope="session")
def pipeline16(cache_dir):
    """Default N = 16 pipeline (all bound levels, default surface)."""
    return Pipeline(CollisionConfig(), cache_dir)


@pytest.fixture(scope="session")
def evolution_tau001(pipeline16):
    """b = 0.01, tau = 0.01 evolution: circuit, its dense unitary and the assembled S-matrix."""
    circuit = pipeline16.circuit(0.01, tau=0.01)
    u = circuit_unitary(circuit)
    s = assemble_smatrix(circuit, 16)
    return circuit, u, s


@pytest.fixture(scope="session")
def evolution_tau01(pipeline16):
    circuit = pipeline16.circuit(0.01, tau=0.1)
    return circuit, circuit_unitary(circuit)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one ``ACCEPTANCE k: PASS|FAIL`` line; the summary prints them all."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
