"""Matplotlib report figures written next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .render import sweep_colors  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 0.8,
    "savefig.dpi": 150,
    "svg.hashsalt": "loopysim",
}
# strip version/date metadata so identical figures give identical bytes
_PNG_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_theta(record, path, title: str | None = None):
    """Every joint angle against time, with segment boundaries marked."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(7.0, 3.0), layout="constrained")
        t = np.asarray(record.times)
        ax.plot(t, record.theta_array(), color="0.2", alpha=0.6)
        for seg in record.segments[1:]:
            k = record.steps.index(seg["start_step"]) if seg["start_step"] in record.steps else None
            if k is not None:
                ax.axvline(t[k], color="tab:red", lw=0.6, ls="--")
                label = seg.get("value")
                if label is not None:
                    ax.text(t[k], ax.get_ylim()[1], f" {label:g}", va="top", fontsize=7, color="tab:red")
        ax.set_xlabel("time")
        ax.set_ylabel(r"joint angle $\theta_m$ (rad)")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_turning(record, path, title: str | None = None):
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(5.0, 3.0), layout="constrained")
        ax.plot(np.asarray(record.times), record.turning, color="tab:blue")
        ax.set_xlabel("time")
        ax.set_ylabel("turning distance from first stable shape")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_sweep_map(result, path):
    """Lobe fractions as RGB (red 2, green 3, blue 4+, black invalid)."""
    (n1, v1), (n2, v2) = result.config.axis1, result.config.axis2
    rgb = np.zeros((len(v2), len(v1), 3))
    for (i, j), p in result.points.items():
        rgb[j, i] = sweep_colors([p])[0]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 4.0), layout="constrained")
        ax.imshow(rgb, origin="lower", aspect="auto", interpolation="nearest")
        ax.set_xticks(range(len(v1)), [f"{v:g}" for v in v1], rotation=45)
        ax.set_yticks(range(len(v2)), [f"{v:g}" for v in v2])
        ax.set_xlabel(n1)
        ax.set_ylabel(n2)
        return _save(fig, path)


def plot_amplitude_map(result, path):
    """Mean activator amplitude in grey; cells with no valid trial are black."""
    (n1, v1), (n2, v2) = result.config.axis1, result.config.axis2
    amp = np.zeros((len(v2), len(v1)))
    for (i, j), p in result.points.items():
        a = p.mean_amplitude
        amp[j, i] = a if (np.isfinite(a) and p.frac_invalid < 1.0) else 0.0
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 4.0), layout="constrained")
        im = ax.imshow(amp, origin="lower", aspect="auto", cmap="gray", interpolation="nearest")
        fig.colorbar(im, ax=ax, label="mean amplitude")
        ax.set_xticks(range(len(v1)), [f"{v:g}" for v in v1], rotation=45)
        ax.set_yticks(range(len(v2)), [f"{v:g}" for v in v2])
        ax.set_xlabel(n1)
        ax.set_ylabel(n2)
        return _save(fig, path)
