"""Convergence assessment and posterior summarization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RunConfig

HISTOGRAM_BINS = 64
RIGID_CUTOFF = 0.8
FLEXIBLE_CUTOFF = 0.3


def gelman_rubin(chains) -> float:
    """Potential scale reduction factor for one scalar parameter.

    ``chains`` is an (m, n) array of m chains with n samples each.
    Uses the within/between variance decomposition
    R-hat = sqrt((n-1)/n + B/(n W)); if every chain is constant the
    statistic is defined as 1.
    """
    x = np.asarray(chains, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError("need >= 2 chains with >= 2 samples each")
    m, n = x.shape
    w = x.var(axis=1, ddof=1).mean()
    b = n * x.mean(axis=1).var(ddof=1)
    if w == 0.0:
        return 1.0 if b == 0.0 else float("inf")
    return float(np.sqrt((n - 1) / n + b / (n * w)))


def gelman_rubin_matrix(chain_samples, p: int) -> np.ndarray:
    """R-hat for every network parameter from per-chain sample lists.

    Samples include the exact zeros contributed by absent edges, so the
    statistic reflects the mixed discrete-continuous support of each
    parameter.  Chains are truncated to the shortest length.
    """
    if len(chain_samples) < 2:
        return np.full((p, p), np.nan)
    n = min(len(c) for c in chain_samples)
    if n < 2:
        return np.full((p, p), np.nan)
    m = len(chain_samples)
    data = np.empty((m, n, p, p))
    for ci, chain in enumerate(chain_samples):
        for si in range(n):
            data[ci, si] = chain[si].network.params
    w = data.var(axis=1, ddof=1).mean(axis=0)
    b = n * data.mean(axis=1).var(axis=0, ddof=1)
    out = np.empty((p, p))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sqrt((n - 1) / n + b / (n * w))
    out[(w == 0) & (b == 0)] = 1.0
    out[(w == 0) & (b > 0)] = np.inf
    return out


@dataclass(frozen=True)
class EdgeSummary:
    n_samples: int           # retained samples with the edge present
    presence: float          # fraction of retained samples with the edge
    mean: float
    ci_lo: np.ndarray        # (100,) lower bounds, alpha = 1..100
    ci_hi: np.ndarray        # (100,) upper bounds
    histogram: np.ndarray    # (HISTOGRAM_BINS,) masses summing to 1
    rigidity: float
    never_present: bool

    def ci(self, alpha: int):
        return float(self.ci_lo[alpha - 1]), float(self.ci_hi[alpha - 1])

    @property
    def label(self) -> str:
        if self.rigidity >= RIGID_CUTOFF:
            return "rigid"
        if self.rigidity <= FLEXIBLE_CUTOFF:
            return "flexible"
        return "intermediate"


@dataclass(frozen=True)
class PosteriorSummary:
    p: int
    edges: list  # p*p EdgeSummary, row-major
    prior_lo: float
    prior_hi: float

    def edge(self, i: int, j: int) -> EdgeSummary:
        return self.edges[i * self.p + j]

    def rigidity_matrix(self) -> np.ndarray:
        return np.array([e.rigidity for e in self.edges]).reshape(self.p, self.p)

    def mean_matrix(self) -> np.ndarray:
        return np.array([e.mean for e in self.edges]).reshape(self.p, self.p)


def summarize(retained, cfg: RunConfig) -> PosteriorSummary:
    """Per-edge posterior summary of the retained samples.

    Summaries describe the weight of an edge given that the edge is
    present: the exact zeros contributed by structures without the edge
    carry no weight information, so credible intervals and histograms
    are computed over the nonzero samples, alongside the fraction of
    retained samples in which the edge appears at all.  An edge absent
    from every retained sample degenerates to the point interval [0, 0].

    Credible intervals are equal-tailed empirical quantile intervals for
    every alpha in 1..100; the rigidity score is one minus the 90% CI
    width relative to the prior range.
    """
    if not retained:
        raise ValueError("no retained samples to summarize")
    p = retained[0].network.p
    thetas = np.stack([s.network.params for s in retained])  # (n, p, p)
    alphas = np.arange(1, 101)
    lo_q = (1 - alphas / 100.0) / 2.0
    hi_q = 1 - lo_q
    span = cfg.prior_hi - cfg.prior_lo
    bins = np.linspace(cfg.prior_lo, cfg.prior_hi, HISTOGRAM_BINS + 1)
    edges = []
    for i in range(p):
        for j in range(p):
            full = thetas[:, i, j]
            x = full[full != 0]
            if x.size == 0:
                edges.append(EdgeSummary(
                    n_samples=0, presence=0.0, mean=0.0,
                    ci_lo=np.zeros(100), ci_hi=np.zeros(100),
                    histogram=np.zeros(HISTOGRAM_BINS),
                    rigidity=1.0, never_present=True))
                continue
            ci_lo = np.quantile(x, lo_q)
            ci_hi = np.quantile(x, hi_q)
            hist, _ = np.histogram(np.clip(x, cfg.prior_lo, cfg.prior_hi),
                                   bins=bins)
            hist = hist / hist.sum()
            width90 = float(ci_hi[89] - ci_lo[89])
            edges.append(EdgeSummary(
                n_samples=x.size,
                presence=float(x.size / full.size),
                mean=float(x.mean()),
                ci_lo=ci_lo, ci_hi=ci_hi,
                histogram=hist,
                rigidity=float(np.clip(1.0 - width90 / span, 0.0, 1.0)),
                never_present=False,
            ))
    return PosteriorSummary(p=p, edges=edges,
                            prior_lo=cfg.prior_lo, prior_hi=cfg.prior_hi)
