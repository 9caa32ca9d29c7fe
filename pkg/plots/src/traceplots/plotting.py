"""Figure rendering.

Figures are built on plain Agg canvases (no pyplot, no global state), with
a fixed size and style, so rerunning on the same traces produces the same
image.  Curves are drawn raw, without smoothing.  Every figure is written
both as PNG and as SVG next to it.
"""

import os
import warnings

import numpy as np
from matplotlib.figure import Figure

from .reader import read_trace

FIGSIZE = (7.0, 4.5)
DPI = 120


def _save_both(fig, out_path):
    base, ext = os.path.splitext(str(out_path))
    if ext.lower() not in (".png", ".svg"):
        base = str(out_path)
    written = []
    for fmt in ("png", "svg"):
        target = f"{base}.{fmt}"
        fig.savefig(target, format=fmt, dpi=DPI)
        written.append(target)
    return written


def _stem(path):
    return os.path.splitext(os.path.basename(str(path)))[0]


def build_nmi_figure(trace_paths):
    """Figure with one NMI-per-iteration curve per trace file.

    A trace without an NMI column falls back to its active-dish count
    (rescaled axis), with a warning.
    """
    if isinstance(trace_paths, (str, os.PathLike)):
        trace_paths = [trace_paths]
    traces = [read_trace(p) for p in trace_paths]
    fig = Figure(figsize=FIGSIZE)
    ax = fig.add_subplot(111)
    fallback = False
    for tr in traces:
        if tr.has_nmi:
            ax.plot(tr.iteration, tr.nmi, lw=1.2, label=_stem(tr.path))
        else:
            warnings.warn(f"{tr.path}: no NMI column, plotting active_dishes instead")
            fallback = True
            ax.plot(tr.iteration, tr.active_dishes, lw=1.2, ls="--",
                    label=f"{_stem(tr.path)} (active dishes)")
    ax.set_xlabel("iteration")
    if fallback:
        ax.set_ylabel("NMI / active dishes")
    else:
        ax.set_ylabel("NMI")
        ax.set_ylim(0.0, 1.0)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    return fig


def plot_nmi(trace_paths, out_path):
    """Render the NMI figure; returns the written PNG and SVG paths."""
    return _save_both(build_nmi_figure(trace_paths), out_path)


def build_diagnostics_figure(trace_path):
    """Three iteration-aligned panels: active dishes, caps, log joint."""
    tr = read_trace(trace_path)
    fig = Figure(figsize=(FIGSIZE[0], FIGSIZE[1] * 1.6))
    axes = fig.subplots(3, 1, sharex=True)

    axes[0].plot(tr.iteration, tr.active_dishes, lw=1.2, label="active dishes")
    axes[0].plot(tr.iteration, tr.K, lw=1.0, ls=":", label="admissible dish bound")
    axes[0].set_ylabel("dishes")
    axes[0].legend(loc="upper left", fontsize=8)

    axes[1].plot(tr.iteration, tr.k_cap, lw=1.2, label="dish cap")
    axes[1].plot(tr.iteration, tr.t_cap_max, lw=1.2, ls="--", label="largest table cap")
    axes[1].set_ylabel("caps")
    axes[1].legend(loc="upper left", fontsize=8)

    axes[2].plot(tr.iteration, tr.log_joint, lw=1.2, color="tab:red")
    axes[2].set_ylabel("log joint")
    axes[2].set_xlabel("iteration")

    fig.suptitle(_stem(tr.path), fontsize=10)
    fig.tight_layout()
    return fig


def plot_diagnostics(trace_path, out_path):
    """Render the diagnostics figure; returns the written PNG and SVG paths."""
    return _save_both(build_diagnostics_figure(trace_path), out_path)
