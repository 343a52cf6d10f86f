"""Figure rendering for the report path.

All figures go straight to PNG files through the Agg backend; nothing here
opens a window. Imported lazily by the emit stage so a bare library import
never pays for matplotlib.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .penalization import PenalizedNonlinearity


def _val(x):
    if isinstance(x, dict):
        return x["value"]
    return x


def render_profile(grid, spec, u, decay_constant, path) -> Path:
    """Profile on linear and log scales with the tail envelope overlaid."""
    path = Path(path)
    u = np.asarray(u, dtype=float)
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4))

    ax0.plot(grid.r, u, color="tab:blue", lw=1.2)
    ax0.axvline(spec.splice_radius, color="gray", ls=":", lw=0.8)
    ax0.set_xlabel("r")
    ax0.set_ylabel("u")
    ax0.set_title("profile")

    tail = grid.r >= spec.splice_radius
    positive = np.abs(u) > 0
    if np.any(positive):
        ax1.semilogy(grid.r[positive], np.abs(u[positive]),
                     color="tab:blue", lw=1.2, label="|u|")
    if np.isfinite(decay_constant) and np.any(tail):
        envelope = decay_constant * (spec.splice_radius
                                     / grid.r[tail]) ** (grid.dim - 2)
        ax1.semilogy(grid.r[tail], envelope, color="tab:red", ls="--",
                     lw=1.0, label="decay bound")
    ax1.axvline(spec.splice_radius, color="gray", ls=":", lw=0.8)
    ax1.set_xlabel("r")
    ax1.set_title("tail (log scale)")
    ax1.legend(loc="upper right", fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_history(history, path) -> Path:
    """Path maximum versus iteration for the minimax descent."""
    path = Path(path)
    history = np.asarray(history, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(np.arange(history.size), history, color="tab:green", lw=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("path maximum")
    ax.set_title("minimax level")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_consistency(grid, spec, u, path) -> Path:
    """k|f(r,u)| against V(r)|u| on the tail, where clamping could bite."""
    path = Path(path)
    u = np.asarray(u, dtype=float)
    pen = PenalizedNonlinearity(spec)
    tail = grid.r >= spec.splice_radius
    r = grid.r[tail]
    lhs = pen.k * np.abs(np.asarray(spec.f(r, u[tail]), dtype=float))
    rhs = np.asarray(spec.V(r), dtype=float) * np.abs(u[tail])
    fig, ax = plt.subplots(figsize=(6, 4))
    floor = 1e-300
    ax.semilogy(r, np.maximum(lhs, floor), color="tab:orange", lw=1.2,
                label="k |f(r, u)|")
    ax.semilogy(r, np.maximum(rhs, floor), color="tab:blue", ls="--", lw=1.2,
                label="V(r) |u|")
    ax.set_xlabel("r")
    ax.set_title("penalization margin on the tail")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_sweep(entry, path) -> Path:
    """Coefficient ratio per sweep radius with admissibility markers."""
    path = Path(path)
    pairs = [{k: _val(v) for k, v in rec.items()}
             for rec in entry["pairs"]]
    radii = [rec["R"] for rec in pairs]
    ratios = [rec["ratio"] for rec in pairs]
    stars = [rec["lambda_star"] / rec["R"] ** _val(entry["R_exponent"])
             for rec in pairs]
    ok = [bool(rec["admissible"]) for rec in pairs]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(radii, ratios, color="tab:blue", lw=1.0, marker="o",
            label="claimed ratio")
    ax.plot(radii, stars, color="tab:red", lw=1.0, ls="--", marker="x",
            label="threshold ratio")
    for r_j, ratio, good in zip(radii, ratios, ok):
        if not good:
            ax.plot([r_j], [ratio], marker="o", color="tab:red", ms=9,
                    mfc="none")
    ax.set_xlabel("R")
    ax.set_ylabel("Lambda / R^exponent")
    ax.set_title(f"sweep trend: {entry['verdict']}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
