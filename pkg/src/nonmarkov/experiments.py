"""Experiment drivers: build a model from a config, run the Monte Carlo
estimators, and write plot-ready CSV plus a JSON summary (and a figure)
under the configured output directory.

File discipline: every artifact is written atomically (temp file in the
target directory, then rename), so a crashed run never leaves a partial
CSV behind.  CSVs start with two comment lines — a schema tag and the full
resolved config as JSON — making every output self-describing.  Float cells
use repr-precision (%.17g) so reruns are byte-identical.
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .measures import (
    MeasureResult,
    TimeGrid,
    aggregate_flux,
    bootstrap_measure_cis,
    estimate_measures,
    fd_convergence_study,
    integrate_measures,
    sample_flux_traces,
)
from .model import (
    DisorderSpec,
    SpinChainParams,
    build_dephasing_model,
    build_spin_chain,
    dephasing_partition,
    sample_disorder,
    spin_chain_partition,
)
from .propagator import prepare
from .states import PureState, computational_state, haar_random_state, plus_state
from .stats import BOOTSTRAP_STREAM, DISORDER_STREAM, RngSpec, bootstrap_ci

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"


# ---------------------------------------------------------------------------
# output plumbing

def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _format_cell(value) -> str:
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    return str(value)


# Keys that describe how a run executed, not what it computed.  They are
# left out of the CSV config echo so that identical science produces
# identical bytes (worker count or output directory must never show up in
# a data-file diff).
_EXECUTION_KEYS = ("max_qubits", "out", "plot", "workers")


def write_csv(path: Path, config: ExperimentConfig, columns: list[str], rows) -> None:
    """Schema comment, config comment, header row, then data rows."""
    echo = {k: v for k, v in config.as_dict().items() if k not in _EXECUTION_KEYS}
    lines = [
        f"# schema=nonmarkov.{config.experiment}.v{SCHEMA_VERSION}",
        "# config=" + json.dumps(echo, sort_keys=True),
        ",".join(columns),
    ]
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(columns)}")
        lines.append(",".join(_format_cell(v) for v in row))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: Path, payload: dict) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _ci_dict(ci) -> dict | None:
    if ci is None:
        return None
    return {"lower": ci.lower, "upper": ci.upper, "level": ci.level}


def _measures_dict(result: MeasureResult) -> dict:
    return {
        "n_avg": {"value": result.n_avg, "ci": _ci_dict(result.ci_n_avg)},
        "n_pure": {"value": result.n_pure, "ci": _ci_dict(result.ci_n_pure)},
        "n_blp_lower": {"value": result.n_blp_lower, "ci": _ci_dict(result.ci_n_blp_lower)},
    }


def _progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


# ---------------------------------------------------------------------------
# model assembly

def _env_state(kind: str, num_env_qubits: int) -> PureState:
    if kind == "plus":
        return plus_state(num_env_qubits)
    return computational_state(num_env_qubits, 0)


def _prepare_chain(config: ExperimentConfig, params: SpinChainParams):
    parts = build_spin_chain(params, max_qubits=config.max_qubits)
    partition = spin_chain_partition(params.n_system)
    kind = "zeros" if config.env_state == "auto" else config.env_state
    prop = prepare(parts, partition, _env_state(kind, partition.num_environment),
                   max_qubits=config.max_qubits)
    return prop, parts


def _prepare_dephasing(config: ExperimentConfig, n_spectators: int):
    parts = build_dephasing_model(config.coupling, n_spectators,
                                  max_qubits=config.max_qubits)
    partition = dephasing_partition(n_spectators)
    kind = "plus" if config.env_state == "auto" else config.env_state
    prop = prepare(parts, partition, _env_state(kind, partition.num_environment),
                   max_qubits=config.max_qubits)
    return prop, parts


def build_dynamics(config: ExperimentConfig):
    """Propagator + Hamiltonian parts for the configured model.

    Chain disorder draws come from a dedicated stream of the master seed,
    so they never overlap the per-pair state streams.
    """
    if config.model == "chain":
        rng = RngSpec(config.seed, DISORDER_STREAM).generator()
        spec = DisorderSpec(config.omega_mean, config.omega_std,
                            config.coupling_mean, config.coupling_std)
        params = sample_disorder(spec, config.n_system, rng)
        return _prepare_chain(config, params)
    return _prepare_dephasing(config, config.n_spectators)


def grid_for(config: ExperimentConfig, correlation_time: float) -> TimeGrid:
    if config.fd_step is not None:
        return TimeGrid(config.t_max, config.n_points, config.fd_step)
    return TimeGrid.with_auto_step(config.t_max, config.n_points, correlation_time)


def _chain_disorder_draws(config: ExperimentConfig, realization: int):
    """Standard-normal draws for one disorder realization.

    Realization r uses stream DISORDER_STREAM + r, and the same draws are
    reused at every sweep point (paired design): each point sees identical
    disorder shapes shifted to its own mean/spread, which isolates the
    swept parameter from realization sampling noise.  Realization 0
    coincides with the single-shot draw in build_dynamics.
    """
    rng = RngSpec(config.seed, DISORDER_STREAM + realization).generator()
    n_sites = 2 * config.n_system + 1
    z_omega = rng.standard_normal(n_sites)
    z_coupling = rng.standard_normal(n_sites - 1)
    return z_omega, z_coupling


def _pooled_cis(traces, n_realizations: int, grid, seed: int,
                level: float = 0.90, n_resamples: int = 2000):
    """Bootstrap CIs for one sweep point.

    With a single realization this is the ordinary per-pair bootstrap.
    With several pooled disorder realizations, traces within a realization
    share a Hamiltonian, so resampling happens at the realization level
    (block bootstrap) to keep the intervals honest about that clustering.
    """
    if n_realizations <= 1:
        return bootstrap_measure_cis(traces, grid, seed, level=level,
                                     n_resamples=n_resamples)
    times = grid.times
    n_per = len(traces) // n_realizations
    flux_blocks = np.stack([t.flux for t in traces]).reshape(n_realizations, n_per, -1)
    backflow_blocks = np.array([t.backflow(grid) for t in traces]).reshape(
        n_realizations, n_per)
    rng = RngSpec(seed, BOOTSTRAP_STREAM).generator()

    def n_avg_of(blocks: np.ndarray) -> float:
        mean_flux = blocks.reshape(-1, blocks.shape[-1]).mean(axis=0)
        return float(np.trapezoid(np.clip(mean_flux, 0.0, None), times))

    return {
        "n_avg": bootstrap_ci(flux_blocks, n_avg_of, level, n_resamples, rng),
        "n_pure": bootstrap_ci(backflow_blocks, lambda b: float(b.mean()),
                               level, n_resamples, rng),
        "n_blp_lower": bootstrap_ci(backflow_blocks, lambda b: float(b.max()),
                                    level, n_resamples, rng),
    }


# ---------------------------------------------------------------------------
# experiment runners

def run_measure(config: ExperimentConfig) -> dict:
    """Single-model run: flux decomposition CSV + measure summary JSON."""
    t0 = time.perf_counter()
    out = Path(config.out)
    prop, parts = build_dynamics(config)
    grid = grid_for(config, parts.correlation_time)
    _progress(f"[measure] model={config.model} qubits={parts.num_qubits} "
              f"pairs={config.n_pairs} h={grid.fd_step:g}")
    traces = sample_flux_traces(prop, grid, config.n_pairs, config.seed,
                                workers=config.workers)
    agg = aggregate_flux(traces)
    point = integrate_measures(agg, traces, grid, seed=config.seed)
    cis = bootstrap_measure_cis(traces, grid, config.seed)
    result = MeasureResult(
        n_avg=point.n_avg, n_pure=point.n_pure, n_blp_lower=point.n_blp_lower,
        n_pairs=point.n_pairs, seed=config.seed,
        ci_n_avg=cis["n_avg"], ci_n_pure=cis["n_pure"],
        ci_n_blp_lower=cis["n_blp_lower"],
    )

    csv_path = out / "measure.csv"
    columns = ["t", "sigma_avg", "sigma_plus", "sigma_minus", "d_avg"]
    rows = zip(grid.times.tolist(), agg.sigma_avg.tolist(), agg.sigma_plus.tolist(),
               agg.sigma_minus.tolist(), agg.mean_distance.tolist())
    write_csv(csv_path, config, columns, rows)

    figure_path = None
    if config.plot:
        from .plotting import plot_measure
        figure_path = plot_measure(grid, agg, out / "measure.png")

    summary = {
        "schema": f"nonmarkov.measure.v{SCHEMA_VERSION}",
        "config": config.as_dict(),
        "noise_strength": parts.noise_strength,
        "correlation_time": parts.correlation_time,
        "fd_step": grid.fd_step,
        "measures": _measures_dict(result),
        "wall_time_s": time.perf_counter() - t0,
        "csv": csv_path.name,
        "figure": None if figure_path is None else figure_path.name,
    }
    write_json(out / "measure.json", summary)
    return summary


def _run_chain_sweep(config: ExperimentConfig, sweep_key: str, values) -> dict:
    """Shared driver for the coupling-mean and coupling-spread sweeps.

    Each sweep point pools pair traces over ``n_realizations`` disorder
    draws.  Draws and state pairs are both reused across points (common
    random numbers), so differences between points reflect the swept
    parameter rather than sampling noise.
    """
    t0 = time.perf_counter()
    out = Path(config.out)
    partition = spin_chain_partition(config.n_system)
    env_kind = "zeros" if config.env_state == "auto" else config.env_state
    env = _env_state(env_kind, partition.num_environment)
    draws = [_chain_disorder_draws(config, r) for r in range(config.n_realizations)]

    points = []
    for k, value in enumerate(values):
        traces = []
        lams, taus, steps = [], [], []
        grid = None
        for r, (z_omega, z_coupling) in enumerate(draws):
            omegas = config.omega_mean + config.omega_std * z_omega
            if sweep_key == "mu":
                couplings = value + config.coupling_std * z_coupling
            else:
                couplings = config.coupling_mean + value * z_coupling
            params = SpinChainParams(config.n_system, omegas, couplings)
            parts = build_spin_chain(params, max_qubits=config.max_qubits)
            prop = prepare(parts, partition, env, max_qubits=config.max_qubits)
            # fd_step tracks each realization's correlation time; the sample
            # times themselves are identical, so traces pool cleanly.
            grid = grid_for(config, parts.correlation_time)
            traces.extend(sample_flux_traces(
                prop, grid, config.n_pairs, config.seed,
                workers=config.workers, stream_offset=r * config.n_pairs))
            lams.append(parts.noise_strength)
            taus.append(parts.correlation_time)
            steps.append(grid.fd_step)
        agg = aggregate_flux(traces)
        point = integrate_measures(agg, traces, grid, seed=config.seed)
        cis = _pooled_cis(traces, config.n_realizations, grid, config.seed)
        result = MeasureResult(
            n_avg=point.n_avg, n_pure=point.n_pure,
            n_blp_lower=point.n_blp_lower, n_pairs=point.n_pairs,
            seed=config.seed, ci_n_avg=cis["n_avg"], ci_n_pure=cis["n_pure"],
            ci_n_blp_lower=cis["n_blp_lower"])
        points.append({
            sweep_key: float(value),
            "noise_strength": lams,
            "correlation_time": taus,
            "fd_step": steps,
            "measures": _measures_dict(result),
        })
        _progress(f"[{config.experiment}] {sweep_key}={value:g} "
                  f"n_avg={result.n_avg:.4g} n_pure={result.n_pure:.4g} "
                  f"({k + 1}/{len(values)})")

    csv_path = out / f"{config.experiment}.csv"
    columns = [sweep_key, "n_avg", "n_avg_ci_lower", "n_avg_ci_upper",
               "n_pure", "n_pure_ci_lower", "n_pure_ci_upper"]
    rows = []
    for p in points:
        m = p["measures"]
        rows.append((p[sweep_key],
                     m["n_avg"]["value"], m["n_avg"]["ci"]["lower"], m["n_avg"]["ci"]["upper"],
                     m["n_pure"]["value"], m["n_pure"]["ci"]["lower"], m["n_pure"]["ci"]["upper"]))
    write_csv(csv_path, config, columns, rows)

    figure_path = None
    if config.plot:
        from .plotting import plot_sweep
        label = "mean coupling mu" if sweep_key == "mu" else "coupling spread sigma_J"
        figure_path = plot_sweep(points, sweep_key, label,
                                 out / f"{config.experiment}.png")

    summary = {
        "schema": f"nonmarkov.{config.experiment}.v{SCHEMA_VERSION}",
        "config": config.as_dict(),
        "points": points,
        "wall_time_s": time.perf_counter() - t0,
        "csv": csv_path.name,
        "figure": None if figure_path is None else figure_path.name,
    }
    write_json(out / f"{config.experiment}.json", summary)
    return summary


def run_sweep_mu(config: ExperimentConfig) -> dict:
    """Measures versus mean coupling strength on the disordered chain."""
    return _run_chain_sweep(config, "mu", config.mu_values)


def run_sweep_sigma(config: ExperimentConfig) -> dict:
    """Measures versus coupling disorder spread at fixed mean coupling."""
    return _run_chain_sweep(config, "sigma_j", config.sigma_values)


def run_fd_convergence(config: ExperimentConfig) -> dict:
    """Central-difference error versus step size for the configured model."""
    t0 = time.perf_counter()
    out = Path(config.out)
    prop, parts = build_dynamics(config)
    tau_c = parts.correlation_time
    if not math.isfinite(tau_c):
        raise ValueError("the convergence study needs an interacting model "
                         "(noise strength is zero, correlation time infinite)")
    h_values = np.geomspace(config.h_min_factor, config.h_max_factor, config.n_h) * tau_c
    rng = RngSpec(config.seed, 0).generator()
    psi1 = haar_random_state(prop.num_system_qubits, rng)
    psi2 = haar_random_state(prop.num_system_qubits, rng)
    study = fd_convergence_study(prop, psi1, psi2, config.t_probe, h_values, tau_c)
    try:
        slope = study.loglog_slope()
    except ValueError:
        slope = None
    _progress(f"[fd-convergence] model={config.model} tau_c={tau_c:g} "
              f"sigma_exact={study.sigma_exact:.6g} slope={slope}")

    csv_path = out / "fd-convergence.csv"
    rows = zip(study.h_over_tau.tolist(), study.rel_errors.tolist())
    write_csv(csv_path, config, ["h_over_tau_c", "rel_error"], rows)

    figure_path = None
    if config.plot:
        from .plotting import plot_fd_study
        figure_path = plot_fd_study(study, out / "fd-convergence.png")

    summary = {
        "schema": f"nonmarkov.fd-convergence.v{SCHEMA_VERSION}",
        "config": config.as_dict(),
        "noise_strength": parts.noise_strength,
        "correlation_time": tau_c,
        "t_probe": config.t_probe,
        "sigma_exact": study.sigma_exact,
        "loglog_slope": slope,
        "wall_time_s": time.perf_counter() - t0,
        "csv": csv_path.name,
        "figure": None if figure_path is None else figure_path.name,
    }
    write_json(out / "fd-convergence.json", summary)
    return summary


def run_toy_scaling(config: ExperimentConfig) -> dict:
    """Measures versus spectator count for the dephasing model.

    Always runs the dephasing model regardless of the configured model key:
    spectator dilution is that model's experiment.
    """
    t0 = time.perf_counter()
    out = Path(config.out)
    points = []
    for k, n_spec in enumerate(config.spectator_values):
        prop, parts = _prepare_dephasing(config, n_spec)
        grid = grid_for(config, parts.correlation_time)
        result = estimate_measures(prop, grid, config.n_pairs, config.seed,
                                   workers=config.workers)
        points.append({
            "n_spectators": int(n_spec),
            "system_qubits": 1 + int(n_spec),
            "noise_strength": parts.noise_strength,
            "correlation_time": parts.correlation_time,
            "fd_step": grid.fd_step,
            "measures": _measures_dict(result),
        })
        _progress(f"[toy-scaling] spectators={n_spec} n_pure="
                  f"{result.n_pure:.4g} ({k + 1}/{len(config.spectator_values)})")

    csv_path = out / "toy-scaling.csv"
    columns = ["n_spectators", "n_avg", "n_pure", "n_blp_lower"]
    rows = [(p["n_spectators"],
             p["measures"]["n_avg"]["value"],
             p["measures"]["n_pure"]["value"],
             p["measures"]["n_blp_lower"]["value"]) for p in points]
    write_csv(csv_path, config, columns, rows)

    figure_path = None
    if config.plot:
        from .plotting import plot_toy_scaling
        figure_path = plot_toy_scaling(points, out / "toy-scaling.png")

    summary = {
        "schema": f"nonmarkov.toy-scaling.v{SCHEMA_VERSION}",
        "config": config.as_dict(),
        "points": points,
        "wall_time_s": time.perf_counter() - t0,
        "csv": csv_path.name,
        "figure": None if figure_path is None else figure_path.name,
    }
    write_json(out / "toy-scaling.json", summary)
    return summary


RUNNERS = {
    "measure": run_measure,
    "sweep-mu": run_sweep_mu,
    "sweep-sigma": run_sweep_sigma,
    "fd-convergence": run_fd_convergence,
    "toy-scaling": run_toy_scaling,
}


def run_experiment(config: ExperimentConfig) -> dict:
    """Dispatch on config.experiment."""
    return RUNNERS[config.experiment](config)
