"""End-to-end runs through :class:`Pipeline`."""

import numpy as np
import pytest

from vibscat.config import CollisionConfig, ConfigError
from vibscat.coupling import half_duration
from vibscat.ode import benchmark_deviation
from vibscat.pipeline import Pipeline, convergence_study
from vibscat.smatrix import transition_probabilities


def test_zero_interaction_is_identity(cache_dir):
    pipe = Pipeline(CollisionConfig(surface="none", n_states=8, tau=0.5), cache_dir)
    for b in (0.01, 1.0):
        p = pipe.probabilities(b, 3)
        np.testing.assert_allclose(p, np.eye(8)[3], atol=1e-12)


def test_near_r_max_is_elastic(pipeline16):
    b = 19.9
    p_circ = pipeline16.probabilities(b, 2, tau=0.1)
    p_ode, norm = pipeline16.ode_probabilities(b, 2)
    assert p_circ[2] > 0.999
    assert p_ode[2] > 0.999
    # the ODE at default tolerances loses ~1e-5 of the norm; the circuit is unitary
    assert np.max(np.abs(p_circ - p_ode)) < 1e-4
    assert abs(norm**2 - p_ode.sum()) < 1e-12


def test_edge_of_sphere_circuit_is_short(pipeline16):
    c = pipeline16.circuit(19.999, tau=0.01)
    assert c.metadata["n_steps"] == int(np.ceil(2 * half_duration(19.999, pipeline16.velocity, 20.0) / 0.01 - 1e-9))
    p = transition_probabilities(c, 0, 16)
    assert p[0] > 0.999


def test_default_run_matches_ode(evolution_tau001, pipeline16):
    """tau = 0.01 at b = 0.01: deviation inside the few-percent envelope."""
    _, u, _ = evolution_tau001
    p_circ = np.abs(u[:16, 0]) ** 2
    p_ode, _ = pipeline16.ode_probabilities(0.01, 0)
    assert benchmark_deviation(p_circ, p_ode) <= 5.0
    dominant = p_ode > 1e-3
    assert np.max(np.abs(p_circ[dominant] - p_ode[dominant]) / p_ode[dominant]) < 0.01


def test_smatrix_matches_probabilities(evolution_tau001):
    circuit, _, s = evolution_tau001
    for i in (0, 3, 15):
        p = transition_probabilities(circuit, i, 16)
        np.testing.assert_allclose(np.abs(s.matrix[:, i]) ** 2, p, atol=1e-8)
    np.testing.assert_allclose(s.column_norms(), 1.0, atol=1e-6)


def test_smatrix_metadata(pipeline16):
    s = pipeline16.smatrix(3.0, tau=0.5)
    meta = s.metadata
    assert meta["b"] == 3.0 and meta["tau"] == 0.5
    assert meta["n_states"] == 16 and meta["n_continuum"] == 0
    assert meta["coupling_key"] == pipeline16.table.key
    assert s.unitarity_defect() < 1e-6


def test_parallel_scan_matches_serial(pipeline16):
    b = [0.2, 1.0, 3.0]
    serial = pipeline16.scan([0, 4], b_grid=b, tau=0.5)
    parallel = pipeline16.scan([0, 4], b_grid=b, tau=0.5, jobs=2)
    assert serial.shape == (2, 3, 16)
    np.testing.assert_array_equal(serial, parallel)


def test_continuum_basis_size(cache_dir, pipeline16):
    pipe = Pipeline(CollisionConfig(n_continuum=3, tau=0.5), cache_dir)
    n_bound = pipeline16.n_bound
    assert pipe.n_physical == n_bound + 3
    assert pipe.table.n_states == n_bound + 3
    eps = pipe.table.energies
    assert np.all(eps[:n_bound] < 0) and np.all(eps[n_bound:] > 0)
    p = pipe.probabilities(0.5, 0)
    assert p.shape == (n_bound + 3,)
    # padding to 32 slots leaks only at the Trotter splitting level
    assert abs(p.sum() - 1) < 1e-6
    with pytest.raises(ConfigError, match="bound"):
        pipe.probabilities(0.5, n_bound)


def test_basis_limits(cache_dir):
    with pytest.raises(ConfigError, match="allow_large"):
        Pipeline(CollisionConfig(n_continuum=20), cache_dir).n_physical
    with pytest.raises(ConfigError, match="initial"):
        Pipeline(CollisionConfig(n_states=4), cache_dir).probabilities(0.5, 4)


def test_convergence_study_smoke(cache_dir):
    cfg = CollisionConfig(tau=0.5, b_grid=(0.01, 0.1, 0.3))
    table, scans = convergence_study(cfg, [0], [0, 1, 2], cache_dir)
    assert table.sigma[0, 0] == 0.0
    assert table.deviation[0, -1] == 0.0
    assert set(scans) == {0, 1, 2}
    assert scans[2].shape[-1] == scans[0].shape[-1] + 2
    assert np.all(table.sigma[0, 1:] > 0)
