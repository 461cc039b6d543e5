"""Experiment configuration: flat key=value files plus typed overrides.

A config file is plain text, one ``key = value`` per line, ``#`` starting a
comment line.  Every key maps 1:1 onto an ExperimentConfig field; unknown
keys are rejected so typos fail loudly.  List-valued keys take
comma-separated entries (``mu_values = 0.1, 0.2, 0.4``).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

EXPERIMENTS = ("measure", "sweep-mu", "sweep-sigma", "fd-convergence", "toy-scaling")
MODELS = ("chain", "dephasing")
ENV_STATES = ("auto", "zeros", "plus")


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved parameters for one experiment run.

    fd_step=None means the automatic rule min(dt/2, 0.1*tau_c); max_qubits=None
    defers to the package default cap (or the NONMARKOV_MAX_QUBITS variable).
    """

    experiment: str = "measure"
    model: str = "chain"
    # chain model: N system qubits interleaved with N+1 environment qubits
    n_system: int = 3
    omega_mean: float = 0.2
    omega_std: float = 0.05
    coupling_mean: float = 0.8
    coupling_std: float = 0.05
    # dephasing model: probe-environment strength and idle spectator count
    coupling: float = 1.0
    n_spectators: int = 0
    env_state: str = "auto"
    # time grid and finite-difference step
    t_max: float = 5.0
    n_points: int = 101
    fd_step: float | None = None
    # Monte Carlo
    n_pairs: int = 200
    n_realizations: int = 1
    seed: int = 42
    workers: int = 1
    max_qubits: int | None = None
    # outputs
    out: str = "results"
    plot: bool = True
    # sweep grids
    mu_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    sigma_values: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2)
    spectator_values: tuple[int, ...] = (0, 1, 2, 3, 4)
    # finite-difference convergence study
    t_probe: float = 0.4
    h_min_factor: float = 1e-3
    h_max_factor: float = 1.0
    n_h: int = 13

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.env_state not in ENV_STATES:
            raise ValueError(f"unknown env_state {self.env_state!r}; choose from {ENV_STATES}")
        if self.n_system < 1:
            raise ValueError("n_system must be >= 1")
        if self.omega_std < 0 or self.coupling_std < 0:
            raise ValueError("disorder standard deviations must be >= 0")
        if self.n_spectators < 0:
            raise ValueError("n_spectators must be >= 0")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ValueError("t_max must be positive and finite")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.fd_step is not None and not (math.isfinite(self.fd_step) and self.fd_step > 0):
            raise ValueError("fd_step must be positive, or omitted/'auto' for the default rule")
        if self.n_pairs < 2:
            raise ValueError("n_pairs must be >= 2")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must fit in 64 bits")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.max_qubits is not None and self.max_qubits < 1:
            raise ValueError("max_qubits must be >= 1")
        for name in ("mu_values", "sigma_values", "spectator_values"):
            values = getattr(self, name)
            if len(values) == 0:
                raise ValueError(f"{name} must be non-empty")
        if any(v < 0 for v in self.sigma_values):
            raise ValueError("sigma_values must be >= 0")
        if any(s < 0 for s in self.spectator_values):
            raise ValueError("spectator_values must be >= 0")
        if not (math.isfinite(self.t_probe) and self.t_probe > 0):
            raise ValueError("t_probe must be positive")
        if not 0 < self.h_min_factor < self.h_max_factor:
            raise ValueError("need 0 < h_min_factor < h_max_factor")
        if self.n_h < 2:
            raise ValueError("n_h must be >= 2")

    def resolved_env_state(self) -> str:
        """'auto' means: ground state for the chain, |+> for dephasing."""
        if self.env_state != "auto":
            return self.env_state
        return "plus" if self.model == "dephasing" else "zeros"

    def as_dict(self) -> dict:
        """JSON-friendly echo of every field (tuples become lists)."""
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


_FLOAT_OR_AUTO = ("fd_step",)
_INT_OR_NONE = ("max_qubits",)
_BOOL_KEYS = ("plot",)
_INT_KEYS = ("n_system", "n_spectators", "n_points", "n_pairs", "n_realizations",
             "seed", "workers", "n_h")
_FLOAT_KEYS = ("omega_mean", "omega_std", "coupling_mean", "coupling_std", "coupling",
               "t_max", "t_probe", "h_min_factor", "h_max_factor")
_FLOAT_LIST_KEYS = ("mu_values", "sigma_values")
_INT_LIST_KEYS = ("spectator_values",)
_STR_KEYS = ("experiment", "model", "env_state", "out")

_ALL_KEYS = (_FLOAT_OR_AUTO + _INT_OR_NONE + _BOOL_KEYS + _INT_KEYS + _FLOAT_KEYS
             + _FLOAT_LIST_KEYS + _INT_LIST_KEYS + _STR_KEYS)


def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def coerce_value(key: str, raw: str):
    """Parse one raw string from a config file or --set override."""
    raw = raw.strip()
    try:
        if key in _FLOAT_OR_AUTO:
            return None if raw.lower() in ("auto", "none") else float(raw)
        if key in _INT_OR_NONE:
            return None if raw.lower() in ("auto", "none") else int(raw)
        if key in _BOOL_KEYS:
            return _parse_bool(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _FLOAT_LIST_KEYS:
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        if key in _INT_LIST_KEYS:
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        if key in _STR_KEYS:
            return raw
    except ValueError as exc:
        raise ValueError(f"bad value for config key {key!r}: {exc}") from None
    raise ValueError(f"unknown config key {key!r}; known keys: {', '.join(sorted(_ALL_KEYS))}")


def parse_config_file(path: str | Path) -> dict:
    """Read a flat key=value file into a typed dict of overrides."""
    overrides = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        overrides[key] = coerce_value(key, raw)
    return overrides


def make_config(config_file: str | Path | None = None,
                raw_overrides: dict | None = None, **overrides) -> ExperimentConfig:
    """Defaults, then file values, then explicit overrides (CLI flags).

    raw_overrides holds unparsed strings (--set key=value); these apply even
    when they coerce to None, e.g. ``--set fd_step=auto`` resetting a file
    value back to the automatic rule.  Keyword overrides of None are treated
    as "flag absent" and skipped.
    """
    merged: dict = {}
    if config_file is not None:
        merged.update(parse_config_file(config_file))
    for key, raw in (raw_overrides or {}).items():
        merged[key] = coerce_value(key, raw)
    for key, value in overrides.items():
        if key not in _ALL_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        if value is not None:
            merged[key] = value
    return ExperimentConfig(**merged)
