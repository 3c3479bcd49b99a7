"""PNG figures for a finished run (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .flow import FlowState  # noqa: E402
from .functionals import FunctionalSample  # noqa: E402
from .singularity import SingularityVerdict  # noqa: E402

_PANELS = [
    ("length", "length"),
    ("kappa_max", "max curvature"),
    ("total_curvature", "total curvature"),
    ("total_torsion", "total torsion"),
    ("ct_entropy", "curvature-torsion entropy"),
    ("flat_point_count", "flat points"),
]


def _column(series, name):
    return np.array([np.nan if getattr(s, name) is None else float(getattr(s, name)) for s in series])


def plot_functionals(series: Sequence[FunctionalSample], path: Path) -> Path:
    t = _column(series, "t")
    fig, axes = plt.subplots(2, 3, figsize=(11, 6), sharex=True)
    for ax, (name, title) in zip(axes.flat, _PANELS):
        ax.plot(t, _column(series, name), lw=1.2)
        ax.set_title(title, fontsize=10)
        ax.grid(alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_curves(snapshots: Sequence[FlowState], path: Path, count: int = 6) -> Path:
    idx = np.unique(np.linspace(0, len(snapshots) - 1, min(count, len(snapshots))).astype(int))
    fig = plt.figure(figsize=(6, 5.5))
    ax = fig.add_subplot(projection="3d")
    colors = plt.cm.viridis(np.linspace(0, 1, len(idx)))
    for c, i in zip(colors, idx):
        s = snapshots[i]
        p = s.curve.points
        if not s.curve.is_screw:
            p = np.vstack([p, p[:1]])
        ax.plot(p[:, 0], p[:, 1], p[:, 2], color=c, lw=1.0, label=f"t = {s.t:.3g}")
    ax.legend(fontsize=8, loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_indicator(verdict: SingularityVerdict, path: Path) -> Path | None:
    if verdict.indicator.size == 0:
        return None
    fig, ax = plt.subplots(figsize=(5.5, 4))
    gap = verdict.omega_hat - verdict.indicator_t
    ax.loglog(gap, verdict.indicator, "o-", ms=3)
    ax.invert_xaxis()
    ax.set_xlabel("omega_hat - t")
    ax.set_ylabel("M_t (omega_hat - t)")
    ax.set_title(verdict.classification)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_run(series, snapshots, verdict, directory: Path) -> list[Path]:
    directory.mkdir(parents=True, exist_ok=True)
    out = [plot_functionals(series, directory / "functionals.png"),
           plot_curves(snapshots, directory / "curves.png")]
    ind = plot_indicator(verdict, directory / "indicator.png")
    if ind is not None:
        out.append(ind)
    return out
