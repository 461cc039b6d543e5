"""Qubit-register state algebra: pure states, density matrices, tensor
products, partial traces, Haar sampling, and the trace distance.

Convention used throughout the package: qubit 0 is the most significant
bit of the amplitude index, so ``np.kron(a, b)`` places the qubits of
``a`` before those of ``b``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

NORM_ATOL = 1e-12
HERM_ATOL = 1e-10
TRACE_ATOL = 1e-10
EIG_ATOL = 1e-10

DEFAULT_MAX_QUBITS = 14
MAX_QUBITS_ENV_VAR = "NONMARKOV_MAX_QUBITS"


def qubit_cap() -> int:
    """Largest joint register the dense backend will allocate.

    The default keeps runs at desk scale (2^14 amplitudes). Set the
    NONMARKOV_MAX_QUBITS environment variable to opt in to larger and
    much slower registers.
    """
    return int(os.environ.get(MAX_QUBITS_ENV_VAR, DEFAULT_MAX_QUBITS))


def check_qubit_budget(num_qubits: int, max_qubits: int | None = None) -> None:
    """Raise if a register of `num_qubits` exceeds the configured cap."""
    cap = qubit_cap() if max_qubits is None else max_qubits
    if num_qubits > cap:
        raise ValueError(
            f"register of {num_qubits} qubits exceeds the cap of {cap} qubits; "
            f"raise it with --max-qubits or {MAX_QUBITS_ENV_VAR}"
        )


def _infer_num_qubits(dim: int, what: str) -> int:
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise ValueError(f"{what} dimension {dim} is not a power of two >= 2")
    return n


def _frozen_array(obj, name: str, value: np.ndarray) -> None:
    value.setflags(write=False)
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class PureState:
    """Unit-norm complex amplitude vector over a qubit register."""

    amplitudes: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1:
            raise ValueError(f"amplitudes must be a vector, got shape {amps.shape}")
        n = _infer_num_qubits(amps.size, "state vector")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state vector norm {norm!r} differs from 1 by more than {NORM_ATOL}")
        _frozen_array(self, "amplitudes", amps.copy())
        object.__setattr__(self, "num_qubits", n)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        """The projector |psi><psi| as a density matrix."""
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix on a qubit register.

    Eigenvalues in [-1e-10, 0) are tolerated as rounding noise; anything
    more negative is rejected because it signals a simulation bug.
    """

    entries: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        n = _infer_num_qubits(m.shape[0], "density matrix")
        herm = np.max(np.abs(m - m.conj().T))
        if herm > HERM_ATOL:
            raise ValueError(f"density matrix is not Hermitian (max asymmetry {herm:.3e})")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr!r} differs from 1 by more than {TRACE_ATOL}")
        min_eig = float(np.linalg.eigvalsh(m)[0])
        if min_eig < -EIG_ATOL:
            raise ValueError(f"density matrix has eigenvalue {min_eig:.3e} below -{EIG_ATOL}")
        _frozen_array(self, "entries", m.copy())
        object.__setattr__(self, "num_qubits", n)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class QubitPartition:
    """Split of a qubit register into system and environment indices."""

    total_qubits: int
    system_indices: tuple[int, ...]
    environment_indices: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        sys_idx = tuple(int(q) for q in self.system_indices)
        if self.total_qubits < 1:
            raise ValueError("total_qubits must be >= 1")
        if any(q < 0 or q >= self.total_qubits for q in sys_idx):
            raise ValueError(f"system indices {sys_idx} out of range for {self.total_qubits} qubits")
        if len(set(sys_idx)) != len(sys_idx) or list(sys_idx) != sorted(sys_idx):
            raise ValueError(f"system indices {sys_idx} must be sorted and distinct")
        env_idx = tuple(q for q in range(self.total_qubits) if q not in sys_idx)
        object.__setattr__(self, "system_indices", sys_idx)
        object.__setattr__(self, "environment_indices", env_idx)

    @property
    def num_system(self) -> int:
        return len(self.system_indices)

    @property
    def num_environment(self) -> int:
        return len(self.environment_indices)

    @property
    def system_dim(self) -> int:
        return 1 << self.num_system

    @property
    def environment_dim(self) -> int:
        return 1 << self.num_environment

    def sysmajor_to_physical(self) -> np.ndarray:
        """Index map from system-major ordering to physical ordering.

        Entry m of the result is the physical amplitude index whose
        system-qubit bits (in system_indices order) form the high bits of
        m and whose environment bits form the low bits.
        """
        n = self.total_qubits
        order = self.system_indices + self.environment_indices
        return np.arange(1 << n).reshape((2,) * n).transpose(order).ravel()


def computational_state(num_qubits: int, index: int = 0) -> PureState:
    """Basis state |index> on `num_qubits` qubits."""
    if not 0 <= index < (1 << num_qubits):
        raise ValueError(f"basis index {index} out of range for {num_qubits} qubits")
    amps = np.zeros(1 << num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return PureState(amps)


def plus_state(num_qubits: int) -> PureState:
    """Uniform superposition |+...+> on `num_qubits` qubits."""
    d = 1 << num_qubits
    return PureState(np.full(d, 1.0 / np.sqrt(d), dtype=np.complex128))


def haar_random_state(num_qubits: int, rng: np.random.Generator) -> PureState:
    """Draw a Haar-distributed pure state on `num_qubits` qubits.

    Samples i.i.d. standard complex Gaussian amplitudes and normalizes;
    unitary invariance of the Gaussian ensemble makes the result uniform
    on the sphere of pure states.
    """
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    d = 1 << num_qubits
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(z / np.linalg.norm(z))


def tensor(a, b, max_qubits: int | None = None):
    """Kronecker product of two states of the same kind, qubits a-then-b."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        check_qubit_budget(a.num_qubits + b.num_qubits, max_qubits)
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        check_qubit_budget(a.num_qubits + b.num_qubits, max_qubits)
        return DensityMatrix(np.kron(a.entries, b.entries))
    raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")


def partial_trace(state, partition: QubitPartition) -> DensityMatrix:
    """Reduced density matrix on the partition's system indices."""
    if state.num_qubits != partition.total_qubits:
        raise ValueError(
            f"state has {state.num_qubits} qubits but partition expects {partition.total_qubits}"
        )
    if partition.num_system == 0:
        raise ValueError("partition leaves no system qubits to reduce onto")
    n = partition.total_qubits
    order = partition.system_indices + partition.environment_indices
    ds, de = partition.system_dim, partition.environment_dim
    if isinstance(state, PureState):
        a = state.amplitudes.reshape((2,) * n).transpose(order).reshape(ds, de)
        rho = a @ a.conj().T
    elif isinstance(state, DensityMatrix):
        axes = order + tuple(n + q for q in order)
        m = state.entries.reshape((2,) * (2 * n)).transpose(axes).reshape(ds, de, ds, de)
        rho = np.einsum("aebe->ab", m)
    else:
        raise TypeError(f"cannot partial-trace a {type(state).__name__}")
    return DensityMatrix(rho)


def _half_trace_norm(deltas: np.ndarray) -> np.ndarray:
    """Half the trace norm of a stack (..., d, d) of Hermitian matrices."""
    return 0.5 * np.abs(np.linalg.eigvalsh(deltas)).sum(axis=-1)


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    """Trace distance D(rho1, rho2), half the trace norm of the difference.

    The difference of two density matrices is Hermitian, so the trace norm
    is the sum of absolute eigenvalues of a Hermitian eigendecomposition.
    """
    if rho1.dim != rho2.dim:
        raise ValueError(f"dimension mismatch: {rho1.dim} vs {rho2.dim}")
    return float(_half_trace_norm(rho1.entries - rho2.entries))


def spectral_norm(m: np.ndarray) -> float:
    """Largest absolute eigenvalue of a Hermitian matrix."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    herm = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if herm > HERM_ATOL:
        raise ValueError(f"matrix is not Hermitian (max asymmetry {herm:.3e})")
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))
