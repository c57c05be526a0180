"""Figures rendered from pipeline outputs (matplotlib, Agg backend).

Every function takes already-computed objects, draws one figure and writes
it to ``path``.  Nothing here feeds back into the numbers.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    # fixed metadata keeps repeated renders byte-identical
    "svg.hashsalt": "mixsum",
}
_METADATA = {"Software": None}


def _save(fig, path):
    fig.savefig(path, metadata=_METADATA)
    plt.close(fig)
    return path


def plot_elbow(table, path):
    """Mean discrepancy per k with a +/- one sd band; the selected k is marked."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        k = table.k_values
        m, sd = table.mean, table.sd
        ax.fill_between(k, m - sd, m + sd, color="0.85", label="mean $\\pm$ sd")
        ax.plot(k, m, "o-", color="k", ms=4, label="mean discrepancy")
        ax.axhline(0.0, color="0.5", lw=0.8, ls=":")
        ax.axhline(-table.delta, color="tab:blue", lw=0.8, ls="--", label=f"$-\\delta$ = {-table.delta:g}")
        if table.k_star is not None:
            i = int(np.flatnonzero(k == table.k_star)[0])
            ax.plot([k[i]], [m[i]], "s", color="tab:red", ms=8, mfc="none", label=f"K* = {table.k_star}")
        ax.set_xlabel("summary components k")
        ax.set_ylabel("log density ratio")
        ax.set_xticks(k)
        ax.legend(loc="lower right")
        return _save(fig, path)


def plot_ribbon(ribbon, path, reference=None, estimate=None, data=None):
    """Univariate density ribbon with the posterior mean summary density.

    ``reference`` and ``estimate`` are optional density values on the ribbon
    grid (posterior predictive density and summary estimate).
    """
    x = ribbon.grid[:, 0]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.fill_between(x, ribbon.lower, ribbon.upper, color="0.8", label="95% pointwise band")
        ax.plot(x, ribbon.mean, color="tab:red", lw=1.2, label="posterior mean summary")
        if estimate is not None:
            ax.plot(x, estimate, color="tab:blue", lw=1.2, label="summary estimate")
        if reference is not None:
            ax.plot(x, reference, "k--", lw=1.0, label="posterior predictive")
        if data is not None:
            y = np.asarray(data).ravel()
            ax.plot(y, np.full_like(y, -0.02 * ribbon.upper.max()), "|", color="0.3", ms=6)
        ax.set_xlabel("y")
        ax.set_ylabel("density")
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_allocation(report, data, path):
    """Observations coloured by modal label, with allocation uncertainty.

    Univariate data get a two-panel figure (labels over y; uncertainty bars
    under it); bivariate data a scatter with marker size growing with
    uncertainty.
    """
    X = np.asarray(data)
    if X.ndim == 1:
        X = X[:, None]
    cmap = plt.get_cmap("tab10")
    colors = cmap((report.labels - 1) % 10)
    with plt.rc_context(STYLE):
        if X.shape[1] == 1:
            fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, gridspec_kw={"height_ratios": [1, 2]})
            ax1.scatter(X[:, 0], report.labels, c=colors, s=12)
            ax1.set_ylabel("label")
            ax1.set_yticks(range(1, report.k + 1))
            ax2.vlines(X[:, 0], 0.0, report.uncertainty, colors=colors, lw=1.0)
            ax2.set_ylim(0.0, max(1.0 - 1.0 / report.k, 1e-3) * 1.05)
            ax2.set_ylabel("uncertainty")
            ax2.set_xlabel("y")
            ax1.set_title(f"{report.loss} loss, K* = {report.k}", fontsize=10)
        else:
            fig, ax = plt.subplots(figsize=(5.0, 4.5))
            ax.scatter(X[:, 0], X[:, 1], c=colors, s=6 + 60 * report.uncertainty, alpha=0.8, lw=0)
            ax.set_xlabel("y1")
            ax.set_ylabel("y2")
            ax.set_title(f"{report.loss} loss, K* = {report.k} (size = uncertainty)", fontsize=10)
        return _save(fig, path)
