"""Figure builders: one matplotlib figure per supported kind."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .readers import (  # noqa: E402
    AU_TIME_FS,
    read_density,
    read_field,
    read_fit_curve,
    read_stats,
    read_yield,
)

KINDS = ("density", "meanR", "yield", "fit")

# inclusive (min, max) count of input CSVs per kind
_INPUT_COUNTS = {"density": (1, 1), "meanR": (1, 2), "yield": (1, 1), "fit": (1, 1)}


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: kind, input CSV paths, output path, axis ranges."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    dpi: int = 150
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; expected one of {', '.join(KINDS)}"
            )
        lo, hi = _INPUT_COUNTS[self.kind]
        n = len(self.inputs)
        if not lo <= n <= hi:
            want = str(lo) if lo == hi else f"{lo} or {hi}"
            raise ValueError(
                f"kind {self.kind!r} takes {want} input CSV(s), got {n}"
            )


def _fig_density(spec: FigureSpec):
    table = read_density(spec.inputs[0])
    z_vals, z_idx = np.unique(table["z_au"], return_inverse=True)
    r_vals, r_idx = np.unique(table["R_au"], return_inverse=True)
    grid = np.full((r_vals.size, z_vals.size), np.nan)
    grid[r_idx, z_idx] = table["density"]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mesh = ax.pcolormesh(z_vals, r_vals, grid, shading="auto", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="probability density (a.u.)")
    ax.set_xlabel("electron coordinate z (a.u.)")
    ax.set_ylabel("internuclear distance R (a.u.)")
    return fig, ax


def _fig_mean_r(spec: FigureSpec):
    stats = read_stats(spec.inputs[0])
    t_fs = stats["t_fs"]
    mean_r = stats["mean_R"]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    if "sigma_R" in stats:
        ax.fill_between(
            t_fs,
            mean_r - stats["sigma_R"],
            mean_r + stats["sigma_R"],
            alpha=0.25,
            color="C0",
            linewidth=0,
            label=r"$\pm\,\sigma_R$",
        )
    ax.plot(t_fs, mean_r, color="C0", label=r"$\langle R \rangle$")
    ax.set_xlabel("time (fs)")
    ax.set_ylabel(r"$\langle R \rangle$ (a.u.)")
    ax.legend(loc="upper left")

    if len(spec.inputs) > 1:
        trace = read_field(spec.inputs[1])
        inset = ax.inset_axes([0.62, 0.12, 0.33, 0.3])
        inset.plot(trace["t_au"] * AU_TIME_FS, trace["A_au"], color="C3", linewidth=0.8)
        inset.set_xlabel("t (fs)", fontsize=8)
        inset.set_ylabel("A (a.u.)", fontsize=8)
        inset.tick_params(labelsize=7)
    return fig, ax


def _fig_yield(spec: FigureSpec):
    table = read_yield(spec.inputs[0])
    order = np.argsort(table["delay_fs"])
    t_fs = table["delay_fs"][order]
    y = table["yield"][order]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(t_fs, y, color="C0", linewidth=0.8, alpha=0.6)
    ax.scatter(t_fs, y, color="C0", s=18, zorder=3)
    ax.set_xlabel("pump-probe delay (fs)")
    ax.set_ylabel("ionization yield (a.u.)")
    return fig, ax


def _fig_fit(spec: FigureSpec):
    table = read_fit_curve(spec.inputs[0])
    order = np.argsort(table["tau"])
    tau_fs = table["tau"][order] * AU_TIME_FS
    data = table["data"][order]
    model = table["model"][order]
    env_hi = table["envelope_hi"][order]
    env_lo = table["envelope_lo"][order]

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    have = np.isfinite(data)
    ax.scatter(tau_fs[have], data[have], color="k", s=20, zorder=3, label="data")
    ax.plot(tau_fs, model, color="C0", label="model")
    ax.plot(tau_fs, env_hi, color="C0", linewidth=0.9, linestyle="--", label="envelope")
    ax.plot(tau_fs, env_lo, color="C0", linewidth=0.9, linestyle="--")
    ax.set_xlabel("pump-probe delay (fs)")
    ax.set_ylabel("ionization yield (a.u.)")
    ax.legend(loc="best")
    return fig, ax


_BUILDERS = {
    "density": _fig_density,
    "meanR": _fig_mean_r,
    "yield": _fig_yield,
    "fit": _fig_fit,
}


def build_figure(spec: FigureSpec):
    """Build and return the matplotlib Figure for *spec* (no file output)."""
    fig, ax = _BUILDERS[spec.kind](spec)
    if spec.xlim is not None:
        ax.set_xlim(*spec.xlim)
    if spec.ylim is not None:
        ax.set_ylim(*spec.ylim)
    if spec.title:
        ax.set_title(spec.title)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> Path:
    """Render *spec* to its output image file and return the output path."""
    fig = build_figure(spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return out
