"""Figure rendering for reports; all output goes straight to files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diagnostics import HISTOGRAM_BINS, PosteriorSummary

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_roc(report, path, title="ROC over credible levels"):
    """ROC curve of an EvalReport with the chance diagonal for reference."""
    best = {}
    for fpr, tpr in report.roc_points:
        best[fpr] = max(best.get(fpr, 0.0), tpr)
    xs = sorted(best)
    ys = [best[x] for x in xs]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], "k:", lw=1, label="chance")
    ax.plot(xs, ys, "o-", ms=3, label=f"AUC = {report.auc:.3f}")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(loc="lower right")
    fig.tight_layout()
    return _save(fig, path)


def plot_posterior_matrix(summary: PosteriorSummary, path, labels=None,
                          truth=None):
    """Grid of per-edge weight histograms (conditional on edge presence).

    Cell (i, j) shows the posterior of the effect of gene j on gene i;
    with ``truth`` given, true-edge panels get a shaded background.
    """
    p = summary.p
    labels = labels or [f"g{i+1}" for i in range(p)]
    centers = np.linspace(summary.prior_lo, summary.prior_hi,
                          HISTOGRAM_BINS + 1)
    centers = 0.5 * (centers[:-1] + centers[1:])
    fig, axes = plt.subplots(p, p, figsize=(1.4 * p, 1.4 * p),
                             sharex=True, sharey=False, squeeze=False)
    for i in range(p):
        for j in range(p):
            ax = axes[i][j]
            e = summary.edge(i, j)
            if truth is not None and truth[i, j]:
                ax.set_facecolor("#fff4d6")
            if not e.never_present:
                width = (summary.prior_hi - summary.prior_lo) / HISTOGRAM_BINS
                ax.bar(centers, e.histogram, width=width, color="steelblue")
                ax.axvline(0.0, color="0.6", lw=0.5)
            ax.set_xticks([])
            ax.set_yticks([])
            if i == 0:
                ax.set_title(labels[j], fontsize=7)
            if j == 0:
                ax.set_ylabel(labels[i], fontsize=7, rotation=0,
                              ha="right", va="center")
    fig.suptitle("edge weight posteriors (regulator by column, target by row)",
                 fontsize=9)
    fig.tight_layout(rect=(0, 0, 1, 0.97))
    return _save(fig, path)


def plot_rhat(rhat: np.ndarray, cutoff: float, path, labels=None):
    """Heatmap of per-parameter Gelman-Rubin statistics."""
    p = rhat.shape[0]
    labels = labels or [f"g{i+1}" for i in range(p)]
    shown = np.where(np.isfinite(rhat), rhat, np.nan)
    fig, ax = plt.subplots(figsize=(0.6 * p + 2, 0.6 * p + 1.5))
    im = ax.imshow(shown, cmap="viridis", vmin=1.0,
                   vmax=max(cutoff, float(np.nanmax(shown))
                            if np.isfinite(shown).any() else cutoff))
    ax.set_xticks(range(p), labels, rotation=90, fontsize=7)
    ax.set_yticks(range(p), labels, fontsize=7)
    ax.set_xlabel("regulator")
    ax.set_ylabel("target")
    n_over = int(np.nansum(shown >= cutoff))
    ax.set_title(f"R-hat per parameter ({n_over} at/above {cutoff})",
                 fontsize=9)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    return _save(fig, path)


def plot_calibration(calibration, path):
    """Histogram of prior-predictive distances with the tolerance marked."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(calibration.distances, bins=60, color="gray")
    ax.axvline(calibration.epsilon, color="crimson",
               label=f"epsilon = {calibration.epsilon:.4g}")
    ax.set_xlabel("distance")
    ax.set_ylabel("prior networks")
    ax.set_title("tolerance calibration")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_study_auc(results, path):
    """Per-seed AUCs grouped by study cell."""
    cells = []
    for r in results:
        if r.cell not in cells:
            cells.append(r.cell)
    fig, ax = plt.subplots(figsize=(max(5, 1.2 * len(cells)), 4))
    for k, cell in enumerate(cells):
        aucs = [r.auc for r in results if r.cell == cell
                and np.isfinite(r.auc)]
        ax.plot([k] * len(aucs), aucs, "o", color="steelblue", alpha=0.7)
        if aucs:
            ax.plot([k - 0.2, k + 0.2], [np.mean(aucs)] * 2, "-",
                    color="crimson")
    ax.axhline(0.5, color="0.7", ls=":")
    ax.set_xticks(range(len(cells)), cells, rotation=30, ha="right")
    ax.set_ylabel("AUC")
    ax.set_ylim(0, 1)
    ax.set_title("study AUC by cell (dots: seeds, bar: mean)")
    fig.tight_layout()
    return _save(fig, path)
