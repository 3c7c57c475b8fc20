"""Scoring inferred posteriors against a known truth network."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RunConfig
from .diagnostics import PosteriorSummary, summarize
from .mcmc import run_abc_net
from .simulators import (GeneratorSpec, generate_retry, raf_truth,
                         sample_raf_params)

ALPHAS = tuple(range(1, 101))


def call_edges(summary: PosteriorSummary, alpha: int,
               bonferroni: bool = False) -> np.ndarray:
    """Edge calls at one credible level: 1 iff the CI excludes zero.

    With ``bonferroni`` the level is widened to alpha adjusted for the
    p*p simultaneous tests (clipped to 100).
    """
    if not 1 <= alpha <= 100:
        raise ValueError("alpha must be in 1..100")
    if bonferroni:
        miss = (100 - alpha) / (summary.p ** 2)
        alpha = min(100, int(round(100 - miss)))
    p = summary.p
    out = np.zeros((p, p), dtype=np.int8)
    for i in range(p):
        for j in range(p):
            lo, hi = summary.edge(i, j).ci(alpha)
            out[i, j] = 1 if (lo > 0 or hi < 0) else 0
    return out


@dataclass(frozen=True)
class EvalReport:
    roc_points: list      # (fpr, tpr) per alpha, plus appended endpoints
    auc: float
    confusion: list       # (alpha, tp, fp, tn, fn)
    n_true_edges: int
    n_true_nonedges: int


def roc_auc(summary: PosteriorSummary, truth: np.ndarray,
            include_diagonal: bool = True,
            bonferroni: bool = False) -> EvalReport:
    """ROC curve and AUC over the credible-level sweep alpha = 1..100.

    Confusion counts compare the calls at each level against the truth
    adjacency; the curve is integrated by trapezoid over unique FPR
    values (max TPR per FPR) with (0,0) and (1,1) appended.
    """
    truth = np.asarray(truth)
    if truth.shape != (summary.p, summary.p):
        raise ValueError(
            f"truth shape {truth.shape} != ({summary.p}, {summary.p})")
    mask = np.ones_like(truth, dtype=bool)
    if not include_diagonal:
        np.fill_diagonal(mask, False)
    pos = (truth == 1) & mask
    neg = (truth == 0) & mask
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("truth must contain both edges and non-edges")

    confusion, points = [], []
    for alpha in ALPHAS:
        calls = call_edges(summary, alpha, bonferroni=bonferroni) == 1
        tp = int((calls & pos).sum())
        fp = int((calls & neg).sum())
        fn = n_pos - tp
        tn = n_neg - fp
        confusion.append((alpha, tp, fp, tn, fn))
        points.append((fp / n_neg, tp / n_pos))

    pts = points + [(0.0, 0.0), (1.0, 1.0)]
    best = {}
    for fpr, tpr in pts:
        best[fpr] = max(best.get(fpr, 0.0), tpr)
    xs = np.array(sorted(best))
    ys = np.array([best[x] for x in xs])
    auc = float(np.trapezoid(ys, xs))
    return EvalReport(roc_points=pts, auc=auc, confusion=confusion,
                      n_true_edges=n_pos, n_true_nonedges=n_neg)


# ---------------------------------------------------------------------------
# simulation-study harness


@dataclass(frozen=True)
class StudyCell:
    """One configuration cell of a simulation study."""

    name: str
    generator_kind: str = "var1"
    noise_sd: float = 1.0
    t_len: int = 20
    cfg: RunConfig = RunConfig()
    seeds: tuple = (0, 1, 2)
    include_diagonal: bool = True


@dataclass(frozen=True)
class CellResult:
    cell: str
    seed: int
    auc: float
    max_rhat: float
    epsilon: float
    main_acceptance: float
    n_rhat_over: int = 0  # parameters past the R-hat cutoff
    error: str | None = None


def run_cell_once(cell: StudyCell, seed: int) -> CellResult:
    """Generate data, calibrate, run the sampler, score against the truth."""
    truth = raf_truth().adjacency
    rng = np.random.default_rng([seed, 0xABC])
    theta1 = sample_raf_params(rng)
    theta2 = (sample_raf_params(rng)
              if cell.generator_kind in ("var2", "var_nl2") else None)
    spec = GeneratorSpec(kind=cell.generator_kind, theta1=theta1,
                         theta2=theta2, t_len=cell.t_len,
                         noise_sd=cell.noise_sd, seed=seed)
    data = generate_retry(spec)
    cfg = cell.cfg.replace(seed=seed)
    result = run_abc_net(data, cfg)
    summary = summarize(result.retained, cfg)
    report = roc_auc(summary, truth, include_diagonal=cell.include_diagonal)
    finite_rhat = result.rhat[np.isfinite(result.rhat)]
    return CellResult(
        cell=cell.name, seed=seed, auc=report.auc,
        max_rhat=float(finite_rhat.max()) if finite_rhat.size else float("nan"),
        epsilon=result.epsilon,
        main_acceptance=float(np.mean(
            [s.main_acceptance for s in result.chain_stats])),
        n_rhat_over=int((result.rhat >= cfg.rhat_cutoff).sum()),
    )


def run_study(cells, progress=None) -> list:
    """Run every (cell, seed) combination; failures are recorded, not raised."""
    results = []
    for cell in cells:
        for seed in cell.seeds:
            try:
                res = run_cell_once(cell, seed)
            except Exception as exc:  # per-cell isolation
                res = CellResult(cell=cell.name, seed=seed, auc=float("nan"),
                                 max_rhat=float("nan"), epsilon=float("nan"),
                                 main_acceptance=float("nan"), error=str(exc))
            results.append(res)
            if progress is not None:
                progress(res)
    return results
