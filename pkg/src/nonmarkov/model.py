"""Hamiltonian builders: disordered spin chain, dephasing toy model, and
the interaction split that defines the noise strength and its timescale."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .states import (
    HERM_ATOL,
    QubitPartition,
    check_qubit_budget,
    spectral_norm,
)

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def op_on_qubits(ops: dict[int, np.ndarray], num_qubits: int) -> np.ndarray:
    """Kronecker product acting with ops[q] on qubit q, identity elsewhere."""
    out = np.eye(1, dtype=np.complex128)
    for q in range(num_qubits):
        out = np.kron(out, ops.get(q, PAULI_I))
    return out


@dataclass(frozen=True)
class SpinChainParams:
    """Frequencies and nearest-neighbor couplings of a 2N+1 site chain."""

    n_system: int
    omegas: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        if self.n_system < 0:
            raise ValueError("n_system must be >= 0")
        omegas = np.asarray(self.omegas, dtype=np.float64)
        couplings = np.asarray(self.couplings, dtype=np.float64)
        n_sites = 2 * self.n_system + 1
        if omegas.shape != (n_sites,):
            raise ValueError(f"omegas must have length {n_sites}, got {omegas.shape}")
        if couplings.shape != (n_sites - 1,):
            raise ValueError(f"couplings must have length {n_sites - 1}, got {couplings.shape}")
        omegas.setflags(write=False)
        couplings.setflags(write=False)
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "couplings", couplings)

    @property
    def n_sites(self) -> int:
        return 2 * self.n_system + 1


@dataclass(frozen=True)
class DisorderSpec:
    """Normal distributions for site frequencies and couplings.

    The coupling deviation is named coupling_std to keep it apart from the
    information flux, which also goes by sigma in this package.
    """

    omega_mean: float = 0.2
    omega_std: float = 0.05
    coupling_mean: float = 0.8
    coupling_std: float = 0.05

    def __post_init__(self):
        if self.omega_std < 0 or self.coupling_std < 0:
            raise ValueError("standard deviations must be >= 0")


@dataclass(frozen=True)
class HamiltonianParts:
    """Total Hamiltonian, its system-environment interaction part, and the
    noise strength lambda = ||interaction||_2 with timescale 1/lambda."""

    total: np.ndarray
    interaction: np.ndarray
    noise_strength: float = field(init=False)
    correlation_time: float = field(init=False)

    def __post_init__(self):
        total = np.asarray(self.total, dtype=np.complex128)
        interaction = np.asarray(self.interaction, dtype=np.complex128)
        if total.shape != interaction.shape or total.ndim != 2:
            raise ValueError("total and interaction must be square matrices of equal shape")
        for name, m in (("total", total), ("interaction", interaction)):
            herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
            if herm > HERM_ATOL:
                raise ValueError(f"{name} Hamiltonian is not Hermitian (max asymmetry {herm:.3e})")
        lam = spectral_norm(interaction)
        tau_c = 1.0 / lam if lam > 0 else math.inf
        total.setflags(write=False)
        interaction.setflags(write=False)
        object.__setattr__(self, "total", total)
        object.__setattr__(self, "interaction", interaction)
        object.__setattr__(self, "noise_strength", lam)
        object.__setattr__(self, "correlation_time", tau_c)

    @property
    def num_qubits(self) -> int:
        return self.total.shape[0].bit_length() - 1


def build_spin_chain(params: SpinChainParams, max_qubits: int | None = None) -> HamiltonianParts:
    """Chain of 2N+1 spins with Z fields and XY+YX nearest-neighbor couplings.

    Sites alternate environment and system (E-S-E-...-E, system on odd
    sites), so every coupling term straddles the partition boundary and
    the interaction part is the entire coupling sum. Each coupling
    operator is traceless, which removes internal environment evolution
    from the noise-strength bound.
    """
    n = params.n_sites
    check_qubit_budget(n, max_qubits)
    d = 1 << n
    free = np.zeros((d, d), dtype=np.complex128)
    coupling = np.zeros((d, d), dtype=np.complex128)
    for k in range(n):
        free += 0.5 * params.omegas[k] * op_on_qubits({k: PAULI_Z}, n)
    for k in range(n - 1):
        term = op_on_qubits({k: PAULI_X, k + 1: PAULI_Y}, n)
        term += op_on_qubits({k: PAULI_Y, k + 1: PAULI_X}, n)
        coupling += params.couplings[k] * term
    return HamiltonianParts(free + coupling, coupling)


def spin_chain_partition(n_system: int) -> QubitPartition:
    """E-S-E-...-E layout: N system qubits on odd sites, N+1 environment."""
    if n_system < 1:
        raise ValueError("chain partition needs at least one system qubit")
    n_sites = 2 * n_system + 1
    return QubitPartition(n_sites, tuple(range(1, n_sites, 2)))


def build_dephasing_model(
    coupling: float, n_spectators: int = 0, max_qubits: int | None = None
) -> HamiltonianParts:
    """One probe qubit ZZ-coupled to one environment qubit, plus idle
    system spectators: H = J Z_probe Z_env tensored with identities.

    Qubit 0 is the probe, qubit 1 the environment, qubits 2.. spectators.
    With the environment prepared in a Z eigenstate the probe dynamics is
    trivial; backflow experiments prepare it in |+>.
    """
    if n_spectators < 0:
        raise ValueError("n_spectators must be >= 0")
    n = 2 + n_spectators
    check_qubit_budget(n, max_qubits)
    h = coupling * op_on_qubits({0: PAULI_Z, 1: PAULI_Z}, n)
    return HamiltonianParts(h, h)


def dephasing_partition(n_spectators: int = 0) -> QubitPartition:
    """Probe plus spectators form the system; qubit 1 is the environment."""
    if n_spectators < 0:
        raise ValueError("n_spectators must be >= 0")
    n = 2 + n_spectators
    return QubitPartition(n, (0,) + tuple(range(2, n)))


def sample_disorder(
    spec: DisorderSpec, n_system: int, rng: np.random.Generator
) -> SpinChainParams:
    """Draw chain parameters i.i.d. normal; negative draws are kept."""
    n_sites = 2 * n_system + 1
    omegas = rng.normal(spec.omega_mean, spec.omega_std, size=n_sites)
    couplings = rng.normal(spec.coupling_mean, spec.coupling_std, size=n_sites - 1)
    return SpinChainParams(n_system, omegas, couplings)
