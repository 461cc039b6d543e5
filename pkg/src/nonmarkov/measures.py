"""Information-flux estimation and non-Markovianity measures.

The flux sigma(t) is the time derivative of the trace distance between two
evolving system states, estimated by central differences with step h (a
one-sided forward difference at t=0, where the dynamical map has no past).
Ensemble averages over Haar-random pure pairs decompose into positive and
negative parts:

    sigma_avg(t) = mean sigma,   sigma_plus(t) = mean max(sigma, 0),
    sigma_minus(t) = mean min(sigma, 0),

with sigma_avg = sigma_plus + sigma_minus holding exactly for sample means.
Three scalar measures follow by trapezoidal integration over the grid:

    n_avg       = integral of max(sigma_avg, 0)      (flux of the mean)
    n_pure      = integral of sigma_plus             (mean positive flux)
    n_blp_lower = max over pairs of the per-pair positive-flux integral,
                  a sampled lower bound on the BLP measure.

The Jensen chain n_avg <= n_pure <= n_blp_lower holds pointwise-exactly on
any common sample set.

A "dynamics" object is any callable mapping (PureState, times array) to a
stack of reduced density matrices, shape (len(times), d, d), exposing a
``num_system_qubits`` attribute.  SpectralPropagator satisfies this; the
depolarizing semigroup oracle below provides a closed-form Markovian
reference for tests.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .states import PureState, haar_random_state, _half_trace_norm
from .stats import RngSpec, ConfidenceInterval, bootstrap_ci, BOOTSTRAP_STREAM

# Default step rule: h = min(dt/2, TAU_C_STEP_FACTOR * tau_c).  The factor
# makes "h much smaller than the interaction correlation time" concrete.
TAU_C_STEP_FACTOR = 0.1

# Slack for identities that hold exactly on sample means (decomposition of
# the average flux, Jensen ordering of the integrated measures).
IDENTITY_ATOL = 1e-12

DISTANCE_RANGE_ATOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, t_max] plus the finite-difference step.

    Direct construction accepts any positive fd_step (convergence studies
    probe deliberately coarse steps); `with_auto_step` applies the default
    rule tying h to the grid spacing and the correlation time.
    """

    t_max: float
    n_points: int
    fd_step: float
    times: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ValueError(f"t_max must be positive and finite, got {self.t_max}")
        if self.n_points < 2:
            raise ValueError(f"need at least 2 grid points, got {self.n_points}")
        if not (math.isfinite(self.fd_step) and self.fd_step > 0):
            raise ValueError(f"fd_step must be positive and finite, got {self.fd_step}")
        times = np.linspace(0.0, self.t_max, self.n_points)
        times.flags.writeable = False
        object.__setattr__(self, "times", times)

    @property
    def dt(self) -> float:
        return self.t_max / (self.n_points - 1)

    @classmethod
    def with_auto_step(cls, t_max: float, n_points: int,
                       correlation_time: float = math.inf) -> "TimeGrid":
        """Grid with h = min(dt/2, 0.1 * correlation_time)."""
        if correlation_time <= 0:
            raise ValueError("correlation_time must be positive")
        dt = t_max / (n_points - 1)
        h = min(0.5 * dt, TAU_C_STEP_FACTOR * correlation_time)
        return cls(t_max, n_points, h)


@dataclass(frozen=True)
class FluxTrace:
    """Distance and flux samples for one evolving state pair."""

    pair_id: int
    distances: np.ndarray
    flux: np.ndarray

    def __post_init__(self):
        distances = np.asarray(self.distances, dtype=np.float64)
        flux = np.asarray(self.flux, dtype=np.float64)
        if distances.ndim != 1 or distances.shape != flux.shape:
            raise ValueError("distances and flux must be 1-d arrays of equal length")
        if distances.min() < -DISTANCE_RANGE_ATOL or distances.max() > 1 + DISTANCE_RANGE_ATOL:
            raise ValueError("trace distances must lie in [0, 1]")
        distances.flags.writeable = False
        flux.flags.writeable = False
        object.__setattr__(self, "distances", distances)
        object.__setattr__(self, "flux", flux)

    def backflow(self, grid: TimeGrid) -> float:
        """Integral of the positive flux part: this pair's backflow total."""
        return float(np.trapezoid(np.clip(self.flux, 0.0, None), grid.times))


@dataclass(frozen=True)
class FluxAggregate:
    """Ensemble-averaged flux decomposition over a common grid.

    sigma_avg is stored as sigma_plus + sigma_minus, so the decomposition
    identity is exact by construction (max(x,0) + min(x,0) == x holds
    per-element in floating point; summing the two means separately would
    reintroduce rounding-order noise).
    """

    sigma_avg: np.ndarray
    sigma_plus: np.ndarray
    sigma_minus: np.ndarray
    mean_distance: np.ndarray
    n_pairs: int

    def __post_init__(self):
        arrays = {}
        for name in ("sigma_avg", "sigma_plus", "sigma_minus", "mean_distance"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            arrays[name] = a
        lengths = {a.shape for a in arrays.values()}
        if len(lengths) != 1 or arrays["sigma_avg"].ndim != 1:
            raise ValueError("aggregate vectors must be 1-d and equal length")
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        if arrays["sigma_plus"].min() < 0 or arrays["sigma_minus"].max() > 0:
            raise ValueError("sigma_plus must be >= 0 and sigma_minus <= 0")
        resid = np.abs(arrays["sigma_avg"] - (arrays["sigma_plus"] + arrays["sigma_minus"]))
        if resid.max() > IDENTITY_ATOL:
            raise ValueError("sigma_avg must equal sigma_plus + sigma_minus")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)


@dataclass(frozen=True)
class MeasureResult:
    """Point estimates (and optional bootstrap CIs) of the three measures."""

    n_avg: float
    n_pure: float
    n_blp_lower: float
    n_pairs: int
    seed: int | None = None
    ci_n_avg: ConfidenceInterval | None = None
    ci_n_pure: ConfidenceInterval | None = None
    ci_n_blp_lower: ConfidenceInterval | None = None

    def __post_init__(self):
        for name in ("n_avg", "n_pure", "n_blp_lower"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.n_avg > self.n_pure + IDENTITY_ATOL or self.n_pure > self.n_blp_lower + IDENTITY_ATOL:
            raise ValueError(
                "Jensen ordering violated: expected n_avg <= n_pure <= n_blp_lower, got "
                f"{self.n_avg} / {self.n_pure} / {self.n_blp_lower}"
            )


def pair_flux(dynamics, psi1: PureState, psi2: PureState, grid: TimeGrid,
              pair_id: int = 0) -> FluxTrace:
    """Distance trace and central-difference flux for one state pair.

    All probe times (grid, grid+h, grid-h) go to the dynamics in a single
    batched call per state; t=0 uses a forward difference since the map has
    no t<0.  For the default h <= dt/2 every other probe stays positive.
    """
    times = grid.times
    h = grid.fd_step
    t_minus = times - h
    t_minus[0] = 0.0  # placeholder, overwritten by the forward difference
    probes = np.concatenate([times, times + h, t_minus])
    rho1 = np.asarray(dynamics(psi1, probes))
    rho2 = np.asarray(dynamics(psi2, probes))
    dists = _half_trace_norm(rho1 - rho2)
    m = times.size
    d_mid, d_plus, d_minus = dists[:m], dists[m:2 * m], dists[2 * m:]
    flux = (d_plus - d_minus) / (2.0 * h)
    flux[0] = (d_plus[0] - d_mid[0]) / h
    return FluxTrace(pair_id=pair_id, distances=d_mid, flux=flux)


def sample_flux_traces(dynamics, grid: TimeGrid, n_pairs: int, seed: int,
                       workers: int = 1, stream_offset: int = 0) -> list[FluxTrace]:
    """Flux traces for n_pairs independent Haar pairs.

    Pair i draws both states from stream (seed, stream_offset + i), so the
    result is identical for any worker count; threads suffice because the
    linear algebra releases the GIL.  The offset lets callers pool several
    batches (e.g. one per disorder realization) without stream reuse.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    if stream_offset < 0:
        raise ValueError("stream_offset must be >= 0")
    num_qubits = dynamics.num_system_qubits

    def one_pair(i: int) -> FluxTrace:
        rng = RngSpec(seed, stream_offset + i).generator()
        psi1 = haar_random_state(num_qubits, rng)
        psi2 = haar_random_state(num_qubits, rng)
        return pair_flux(dynamics, psi1, psi2, grid, pair_id=stream_offset + i)

    if workers <= 1:
        return [one_pair(i) for i in range(n_pairs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one_pair, range(n_pairs)))


def aggregate_flux(traces: Sequence[FluxTrace]) -> FluxAggregate:
    """Ensemble means of the flux and its positive/negative parts."""
    if not traces:
        raise ValueError("need at least one flux trace")
    lengths = {t.flux.size for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces disagree on grid length: {sorted(lengths)}")
    flux = np.stack([t.flux for t in traces])
    dist = np.stack([t.distances for t in traces])
    sigma_plus = np.clip(flux, 0.0, None).mean(axis=0)
    sigma_minus = np.clip(flux, None, 0.0).mean(axis=0)
    return FluxAggregate(
        sigma_avg=sigma_plus + sigma_minus,
        sigma_plus=sigma_plus,
        sigma_minus=sigma_minus,
        mean_distance=dist.mean(axis=0),
        n_pairs=len(traces),
    )


def integrate_measures(agg: FluxAggregate, traces: Sequence[FluxTrace],
                       grid: TimeGrid, seed: int | None = None) -> MeasureResult:
    """Trapezoidal point estimates of the three measures.

    Sign restrictions are applied by clamping grid values (bias O(dt^2),
    dominated by Monte Carlo error).
    """
    if len(traces) != agg.n_pairs:
        raise ValueError("aggregate and trace collection disagree on pair count")
    if agg.sigma_avg.size != grid.n_points:
        raise ValueError("aggregate length does not match the grid")
    times = grid.times
    n_avg = float(np.trapezoid(np.clip(agg.sigma_avg, 0.0, None), times))
    n_pure = float(np.trapezoid(agg.sigma_plus, times))
    n_blp = max(t.backflow(grid) for t in traces)
    return MeasureResult(n_avg=n_avg, n_pure=n_pure, n_blp_lower=n_blp,
                         n_pairs=agg.n_pairs, seed=seed)


def bootstrap_measure_cis(traces: Sequence[FluxTrace], grid: TimeGrid, seed: int,
                          level: float = 0.90, n_resamples: int = 2000,
                          ) -> dict[str, ConfidenceInterval]:
    """Percentile-bootstrap CIs for the three measures.

    n_pure and n_blp_lower resample the per-pair backflow scalars; n_avg is
    a nonlinear function of the mean flux, so its bootstrap resamples whole
    per-pair flux vectors and re-aggregates.
    """
    times = grid.times
    flux_rows = np.stack([t.flux for t in traces])
    backflows = np.array([t.backflow(grid) for t in traces])
    rng = RngSpec(seed, BOOTSTRAP_STREAM).generator()

    def n_avg_of(rows: np.ndarray) -> float:
        return float(np.trapezoid(np.clip(rows.mean(axis=0), 0.0, None), times))

    return {
        "n_avg": bootstrap_ci(flux_rows, n_avg_of, level, n_resamples, rng),
        "n_pure": bootstrap_ci(backflows, lambda s: float(s.mean()), level, n_resamples, rng),
        "n_blp_lower": bootstrap_ci(backflows, lambda s: float(s.max()), level, n_resamples, rng),
    }


def estimate_measures(dynamics, grid: TimeGrid, n_pairs: int, seed: int,
                      workers: int = 1, with_ci: bool = True,
                      level: float = 0.90, n_resamples: int = 2000) -> MeasureResult:
    """Full Monte Carlo pipeline: sample pairs, aggregate, integrate,
    attach bootstrap confidence intervals.  Deterministic given seed."""
    if n_pairs < 2:
        raise ValueError("n_pairs must be >= 2")
    traces = sample_flux_traces(dynamics, grid, n_pairs, seed, workers=workers)
    agg = aggregate_flux(traces)
    point = integrate_measures(agg, traces, grid, seed=seed)
    if not with_ci:
        return point
    cis = bootstrap_measure_cis(traces, grid, seed, level=level, n_resamples=n_resamples)
    return MeasureResult(
        n_avg=point.n_avg, n_pure=point.n_pure, n_blp_lower=point.n_blp_lower,
        n_pairs=point.n_pairs, seed=seed,
        ci_n_avg=cis["n_avg"], ci_n_pure=cis["n_pure"],
        ci_n_blp_lower=cis["n_blp_lower"],
    )


def strongly_nonmarkovian(agg: FluxAggregate, grid: TimeGrid) -> bool:
    """Whether backflow dominates outflow in overall strength.

    Compares the integrated positive part against the magnitude of the
    integrated negative part (the negative part is <= 0 by definition, so
    the comparison is taken against its absolute value).
    """
    inflow = float(np.trapezoid(agg.sigma_plus, grid.times))
    outflow = float(np.trapezoid(agg.sigma_minus, grid.times))
    return inflow > abs(outflow)


class DepolarizingDynamics:
    """Single-qubit depolarizing semigroup in closed form:

        rho(t) = exp(-rate t) rho + (1 - exp(-rate t)) I/2.

    A Markovian reference: the trace distance between any two evolutions
    contracts monotonically, so every measure vanishes up to finite-
    difference noise.  The formula extends smoothly to negative probe
    times, which keeps coarse-step difference stencils well defined.
    """

    def __init__(self, rate: float):
        if rate <= 0:
            raise ValueError(f"rate must be positive, got {rate}")
        self.rate = float(rate)
        self.num_system_qubits = 1

    def __call__(self, state: PureState, times) -> np.ndarray:
        if state.num_qubits != 1:
            raise ValueError("depolarizing oracle acts on a single qubit")
        times = np.atleast_1d(np.asarray(times, dtype=np.float64))
        rho0 = np.outer(state.amplitudes, state.amplitudes.conj())
        decay = np.exp(-self.rate * times)[:, None, None]
        eye = np.eye(2, dtype=np.complex128) / 2.0
        return decay * rho0 + (1.0 - decay) * eye


def markovian_oracle(rate: float) -> DepolarizingDynamics:
    """Closed-form CPTP semigroup used as the Markovian reference in tests."""
    return DepolarizingDynamics(rate)


@dataclass(frozen=True)
class FdStudy:
    """Relative central-difference error versus step size at a fixed time."""

    t_probe: float
    tau_c: float
    sigma_exact: float
    h_values: np.ndarray
    rel_errors: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h_values, dtype=np.float64)
        e = np.asarray(self.rel_errors, dtype=np.float64)
        if h.shape != e.shape or h.ndim != 1:
            raise ValueError("h_values and rel_errors must be 1-d arrays of equal length")
        h.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "h_values", h)
        object.__setattr__(self, "rel_errors", e)

    @property
    def h_over_tau(self) -> np.ndarray:
        return self.h_values / self.tau_c

    def loglog_slope(self, h_over_tau_min: float = 1e-3,
                     h_over_tau_max: float = 1e-1) -> float:
        """Least-squares slope of log(error) vs log(h) over a step window."""
        ratio = self.h_over_tau
        mask = (ratio >= h_over_tau_min * (1 - 1e-9)) & (ratio <= h_over_tau_max * (1 + 1e-9))
        if mask.sum() < 2:
            raise ValueError("fewer than 2 step sizes inside the fit window")
        slope = np.polyfit(np.log(self.h_values[mask]), np.log(self.rel_errors[mask]), 1)[0]
        return float(slope)


def fd_convergence_study(dynamics, psi1: PureState, psi2: PureState,
                         t_probe: float, h_values, tau_c: float) -> FdStudy:
    """Central-difference flux error versus step size at one probe time.

    The reference flux comes from Richardson extrapolation: stencils at
    h0 = min(h_values)/4 and h0/2 combine to an O(h^4)-accurate value, so
    the reference error is negligible against every swept step.
    """
    h = np.asarray(h_values, dtype=np.float64)
    if h.ndim != 1 or h.size < 2:
        raise ValueError("need at least two step sizes")
    if h.min() <= 0 or not np.all(np.isfinite(h)):
        raise ValueError("step sizes must be positive and finite")
    if not (math.isfinite(tau_c) and tau_c > 0):
        raise ValueError(f"tau_c must be positive and finite, got {tau_c}")
    if not (math.isfinite(t_probe) and t_probe > 0):
        raise ValueError(f"t_probe must be positive, got {t_probe}")

    h0 = h.min() / 4.0
    steps = np.concatenate([h, [h0, h0 / 2.0]])
    probes = np.concatenate([t_probe + steps, t_probe - steps])
    rho1 = np.asarray(dynamics(psi1, probes))
    rho2 = np.asarray(dynamics(psi2, probes))
    dists = _half_trace_norm(rho1 - rho2)
    k = steps.size
    sigma = (dists[:k] - dists[k:]) / (2.0 * steps)
    sigma_sweep, s_h0, s_h0_half = sigma[:-2], sigma[-2], sigma[-1]
    sigma_exact = (4.0 * s_h0_half - s_h0) / 3.0
    if abs(sigma_exact) < 1e-12:
        raise ValueError(
            f"flux at t_probe={t_probe} is numerically stationary "
            "(|sigma| < 1e-12); choose a different probe time"
        )
    rel_errors = np.abs(sigma_sweep - sigma_exact) / abs(sigma_exact)
    return FdStudy(t_probe=t_probe, tau_c=tau_c, sigma_exact=float(sigma_exact),
                   h_values=h, rel_errors=rel_errors)
