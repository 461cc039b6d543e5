"""Figure rendering for experiment outputs.

Uses the Agg backend unconditionally: experiments run headless and figures
go straight to PNG files next to the CSV data.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

DPI = 150


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_measure(grid, agg, path: Path) -> Path:
    """Mean distance on top, flux decomposition below."""
    fig, (ax_d, ax_s) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    t = grid.times
    ax_d.plot(t, agg.mean_distance, color="tab:blue")
    ax_d.set_ylabel("mean trace distance")
    ax_d.set_ylim(bottom=0)

    ax_s.plot(t, agg.sigma_avg, color="k", label=r"$\sigma_{avg}$")
    ax_s.plot(t, agg.sigma_plus, color="tab:green", label=r"$\sigma_+$")
    ax_s.plot(t, agg.sigma_minus, color="tab:red", label=r"$\sigma_-$")
    ax_s.axhline(0.0, color="gray", lw=0.5)
    ax_s.set_xlabel("t")
    ax_s.set_ylabel("flux")
    ax_s.legend()
    fig.suptitle(f"flux decomposition over {agg.n_pairs} Haar pairs")
    return _save(fig, path)


def _errorbar(ax, x, points, key, color, label):
    values = np.array([p["measures"][key]["value"] for p in points])
    lo = np.array([p["measures"][key]["ci"]["lower"] for p in points])
    hi = np.array([p["measures"][key]["ci"]["upper"] for p in points])
    yerr = np.vstack([values - lo, hi - values])
    ax.errorbar(x, values, yerr=yerr, marker="o", capsize=3, color=color, label=label)


def plot_sweep(points, sweep_key: str, xlabel: str, path: Path) -> Path:
    """Measures with 90% CIs against the swept parameter."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    x = [p[sweep_key] for p in points]
    _errorbar(ax, x, points, "n_avg", "tab:blue", r"$n_{avg}$")
    _errorbar(ax, x, points, "n_pure", "tab:orange", r"$n_{pure}$")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("non-Markovianity")
    ax.legend()
    return _save(fig, path)


def plot_fd_study(study, path: Path) -> Path:
    """Log-log relative error with an h^2 guide line."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    x = study.h_over_tau
    ax.loglog(x, study.rel_errors, marker="o", color="tab:blue", label="central difference")
    anchor = study.rel_errors[0] if study.rel_errors[0] > 0 else 1e-12
    ax.loglog(x, anchor * (x / x[0]) ** 2, "--", color="gray", label=r"$\propto h^2$")
    ax.set_xlabel(r"$h / \tau_c$")
    ax.set_ylabel("relative flux error")
    ax.legend()
    return _save(fig, path)


def plot_toy_scaling(points, path: Path) -> Path:
    """Measures against spectator count, log scale to expose the decay."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    x = [p["n_spectators"] for p in points]
    for key, color in (("n_avg", "tab:blue"), ("n_pure", "tab:orange"),
                       ("n_blp_lower", "tab:green")):
        y = [p["measures"][key]["value"] for p in points]
        ax.plot(x, y, marker="o", color=color, label=key)
    ax.set_yscale("log")
    ax.set_xlabel("spectator qubits")
    ax.set_ylabel("non-Markovianity")
    ax.set_xticks(x)
    ax.legend()
    return _save(fig, path)
