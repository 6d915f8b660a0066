"""Static figures written next to the delimited outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (5.5, 3.6),
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_trajectory(states, x, path, snapshots=5, exact=None):
    """Solution profiles at evenly spaced times; ``exact(x, t)`` is overlaid
    dashed when given."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        picks = np.unique(np.linspace(0, len(states) - 1, snapshots).round().astype(int))
        for k in picks:
            st = states[k]
            line, = ax.plot(x, st.values, label=f"t = {st.time:.3g}")
            if exact is not None:
                ax.plot(x, exact(x, st.time), "--", color=line.get_color(), lw=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend()
        return _save(fig, path)


def plot_convergence(report, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        n = np.asarray(report.resolutions, dtype=float)
        err = np.asarray(report.errors)
        ax.loglog(n, err, "o-", label=f"measured (slope {report.fitted_slope:.2f})")
        for order, style in ((1, ":"), (2, "-.")):
            ax.loglog(n, err[0] * (n[0] / n) ** order, style, color="gray", lw=0.8,
                      label=f"order {order}")
        ax.set_xlabel("number of nodes n")
        ax.set_ylabel("L2 error")
        ax.legend()
        return _save(fig, path)


def plot_node_values(values, path, spread=None, ylabel="value", title=None):
    """Per-node values, optionally with a +/- 2 spread band."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        idx = np.arange(len(values))
        ax.plot(idx, values, ".-", lw=0.8)
        if spread is not None:
            spread = np.asarray(spread)
            ax.fill_between(idx, values - 2 * spread, values + 2 * spread, alpha=0.25)
        ax.set_xlabel("node")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        return _save(fig, path)
