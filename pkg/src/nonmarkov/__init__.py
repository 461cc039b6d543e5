"""Monte Carlo estimation of non-Markovianity measures for open quantum
systems with explicit environments.

The pipeline: build a joint Hamiltonian (`model`), diagonalize it once
(`propagator`), track trace distances of Haar-random pure-state pairs and
their information flux (`measures`), and reduce to three scalars —
n_avg, n_pure, and a sampled BLP lower bound — with bootstrap confidence
intervals (`stats`).  `experiments` and `cli` wrap this into reproducible
runs that emit CSV, JSON, and figures.
"""

from .config import ExperimentConfig, make_config, parse_config_file
from .experiments import (
    run_experiment,
    run_fd_convergence,
    run_measure,
    run_sweep_mu,
    run_sweep_sigma,
    run_toy_scaling,
)
from .measures import (
    DepolarizingDynamics,
    FdStudy,
    FluxAggregate,
    FluxTrace,
    MeasureResult,
    TimeGrid,
    aggregate_flux,
    bootstrap_measure_cis,
    estimate_measures,
    fd_convergence_study,
    integrate_measures,
    markovian_oracle,
    pair_flux,
    sample_flux_traces,
    strongly_nonmarkovian,
)
from .model import (
    DisorderSpec,
    HamiltonianParts,
    SpinChainParams,
    build_dephasing_model,
    build_spin_chain,
    dephasing_partition,
    op_on_qubits,
    sample_disorder,
    spin_chain_partition,
)
from .propagator import SpectralPropagator, evolve_reduced, prepare
from .states import (
    DEFAULT_MAX_QUBITS,
    MAX_QUBITS_ENV_VAR,
    DensityMatrix,
    PureState,
    QubitPartition,
    computational_state,
    haar_random_state,
    partial_trace,
    plus_state,
    qubit_cap,
    spectral_norm,
    tensor,
    trace_distance,
)
from .stats import ConfidenceInterval, RngSpec, bootstrap_ci, derive_seed

__version__ = "0.1.0"

__all__ = [
    "ConfidenceInterval",
    "DEFAULT_MAX_QUBITS",
    "DensityMatrix",
    "DepolarizingDynamics",
    "DisorderSpec",
    "ExperimentConfig",
    "FdStudy",
    "FluxAggregate",
    "FluxTrace",
    "HamiltonianParts",
    "MAX_QUBITS_ENV_VAR",
    "MeasureResult",
    "PureState",
    "QubitPartition",
    "RngSpec",
    "SpectralPropagator",
    "SpinChainParams",
    "TimeGrid",
    "aggregate_flux",
    "bootstrap_ci",
    "bootstrap_measure_cis",
    "build_dephasing_model",
    "build_spin_chain",
    "computational_state",
    "dephasing_partition",
    "derive_seed",
    "estimate_measures",
    "evolve_reduced",
    "fd_convergence_study",
    "haar_random_state",
    "integrate_measures",
    "make_config",
    "markovian_oracle",
    "op_on_qubits",
    "pair_flux",
    "parse_config_file",
    "partial_trace",
    "plus_state",
    "prepare",
    "qubit_cap",
    "run_experiment",
    "run_fd_convergence",
    "run_measure",
    "run_sweep_mu",
    "run_sweep_sigma",
    "run_toy_scaling",
    "sample_disorder",
    "sample_flux_traces",
    "spectral_norm",
    "spin_chain_partition",
    "strongly_nonmarkovian",
    "tensor",
    "trace_distance",
    "__version__",
]
