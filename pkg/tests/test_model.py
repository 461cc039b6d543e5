import math

import numpy as np
import pytest

from nonmarkov.model import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DisorderSpec,
    SpinChainParams,
    build_dephasing_model,
    build_spin_chain,
    dephasing_partition,
    op_on_qubits,
    sample_disorder,
    spin_chain_partition,
)
from nonmarkov.states import spectral_norm
from nonmarkov.stats import RngSpec


def test_params_validation():
    SpinChainParams(1, np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError):
        SpinChainParams(1, np.zeros(4), np.zeros(2))
    with pytest.raises(ValueError):
        SpinChainParams(1, np.zeros(3), np.zeros(3))
    with pytest.raises(ValueError):
        DisorderSpec(0.2, -0.01, 0.8, 0.05)


def test_op_on_qubits_placement():
    m = op_on_qubits({1: PAULI_Z}, 2)
    np.testing.assert_allclose(m, np.kron(np.eye(2), PAULI_Z), atol=1e-15)
    m = op_on_qubits({0: PAULI_X, 2: PAULI_Y}, 3)
    np.testing.assert_allclose(
        m, np.kron(np.kron(PAULI_X, np.eye(2)), PAULI_Y), atol=1e-15
    )


def test_single_site_chain():
    parts = build_spin_chain(SpinChainParams(0, np.array([0.7]), np.zeros(0)))
    np.testing.assert_allclose(parts.total, 0.35 * PAULI_Z, atol=1e-15)
    assert np.all(parts.interaction == 0)
    assert parts.noise_strength == 0.0
    assert math.isinf(parts.correlation_time)


def test_two_site_coupling_block():
    # N=1, zero frequencies, J=(1,0): H = X0 Y1 + Y0 X1 (identity on site 2)
    parts = build_spin_chain(SpinChainParams(1, np.zeros(3), np.array([1.0, 0.0])))
    want = op_on_qubits({0: PAULI_X, 1: PAULI_Y}, 3) + op_on_qubits(
        {0: PAULI_Y, 1: PAULI_X}, 3
    )
    np.testing.assert_allclose(parts.total, want, atol=1e-12)
    # brute force over the full 8x8 matrix agrees with the 4x4 sub-block value
    assert abs(spectral_norm(parts.interaction) - 2.0) < 1e-12
    assert abs(parts.noise_strength - 2.0) < 1e-12
    assert abs(parts.correlation_time - 0.5) < 1e-12


def test_chain_structure():
    params = sample_disorder(DisorderSpec(0.2, 0.05, 0.8, 0.05), 2, RngSpec(5).generator())
    parts = build_spin_chain(params)
    assert parts.num_qubits == 5
    h = parts.total
    np.testing.assert_allclose(h, h.conj().T, atol=1e-12)
    np.testing.assert_allclose(parts.interaction, parts.interaction.conj().T, atol=1e-12)
    assert abs(np.trace(parts.interaction)) < 1e-10
    assert abs(parts.noise_strength * parts.correlation_time - 1.0) < 1e-12
    # interaction is the full coupling sum: H - interaction is diagonal
    drift = h - parts.interaction
    np.testing.assert_allclose(drift, np.diag(np.diag(drift)), atol=1e-12)


def test_noise_strength_homogeneity():
    rng = np.random.default_rng(13)
    for _ in range(5):
        omegas = rng.normal(0.2, 0.05, size=5)
        couplings = rng.normal(0.8, 0.2, size=4)
        lam = build_spin_chain(SpinChainParams(2, omegas, couplings)).noise_strength
        for c in (0.5, 2.0, -3.0):
            scaled = build_spin_chain(SpinChainParams(2, omegas, c * couplings))
            assert abs(scaled.noise_strength - abs(c) * lam) < 1e-9


def test_uncoupled_chain_commutes_with_z():
    params = SpinChainParams(1, np.array([0.3, 0.1, 0.7]), np.zeros(2))
    h = build_spin_chain(params).total
    for k in range(3):
        zk = op_on_qubits({k: PAULI_Z}, 3)
        comm = h @ zk - zk @ h
        assert np.max(np.abs(comm)) < 1e-12


def test_spin_chain_partition_layout():
    part = spin_chain_partition(3)
    assert part.total_qubits == 7
    assert part.system_indices == (1, 3, 5)
    assert part.environment_indices == (0, 2, 4, 6)
    with pytest.raises(ValueError):
        spin_chain_partition(0)


def test_dephasing_model():
    parts = build_dephasing_model(0.0)
    assert np.all(parts.total == 0)
    assert parts.noise_strength == 0.0

    parts = build_dephasing_model(1.0)
    np.testing.assert_allclose(parts.total, np.kron(PAULI_Z, PAULI_Z), atol=1e-15)
    np.testing.assert_allclose(parts.interaction, parts.total, atol=1e-15)
    assert abs(parts.noise_strength - 1.0) < 1e-12

    parts = build_dephasing_model(0.7, n_spectators=2)
    assert parts.num_qubits == 4
    part = dephasing_partition(2)
    assert part.system_indices == (0, 2, 3)
    assert part.environment_indices == (1,)
    assert abs(parts.noise_strength - 0.7) < 1e-12


def test_sample_disorder():
    spec = DisorderSpec(0.2, 0.0, 0.8, 0.05)
    params = sample_disorder(spec, 3, RngSpec(9).generator())
    np.testing.assert_allclose(params.omegas, np.full(7, 0.2), atol=1e-15)
    assert params.couplings.shape == (6,)

    again = sample_disorder(spec, 3, RngSpec(9).generator())
    assert np.array_equal(params.omegas, again.omegas)
    assert np.array_equal(params.couplings, again.couplings)

    # sample mean of many coupling draws sits at mu within standard error
    big = sample_disorder(DisorderSpec(0.2, 0.05, 0.8, 0.05), 2500, RngSpec(31).generator())
    assert abs(big.couplings.mean() - 0.8) < 0.002
