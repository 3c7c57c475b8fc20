"""Discrepancy functions between simulated and observed expression series.

All four kinds operate on whole (genes x time) matrices and sum over
replicates.  Canberra, Euclidean and Manhattan are plain elementwise
double sums; the MVT kind compares the two series after removing their
common best one-step-ahead linear predictions, scaled by a pooled error
covariance.
"""

from __future__ import annotations

import numpy as np

from .core import DistanceKind, ExpressionData

DEFAULT_RIDGE = 1e-8


class SingularCovarianceError(np.linalg.LinAlgError):
    """MVT pooled covariance not invertible even after ridging."""


def canberra(sim: np.ndarray, obs: np.ndarray) -> float:
    num = np.abs(sim - obs)
    den = np.abs(sim + obs)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = num / den
    # 0/0 cells contribute 0 by convention
    terms[num == 0] = 0.0
    if np.isinf(terms).any():
        raise FloatingPointError("canberra term with zero denominator")
    return float(terms.sum())


def euclidean(sim: np.ndarray, obs: np.ndarray) -> float:
    return float(np.sqrt(((sim - obs) ** 2).sum()))


def manhattan(sim: np.ndarray, obs: np.ndarray) -> float:
    return float(np.abs(sim - obs).sum())


def _lag_cross_moment(y: np.ndarray) -> np.ndarray:
    # (1/T) sum_{t=1}^{T-1} y_{t+1} y_t'
    t_len = y.shape[1]
    return (y[:, 1:] @ y[:, :-1].T) / t_len


def mvt(sim: np.ndarray, obs: np.ndarray, ridge: float = DEFAULT_RIDGE) -> float:
    """Multivariate time-series distance of the pooled-predictor form.

    Fitted values use the averaged lag-one cross-moment of the two
    series, with the convention y_0 = 0 so the first fitted column is
    zero.  If the pooled covariance is singular it is retried with
    ``ridge`` added to the diagonal.
    """
    t_len = sim.shape[1]
    theta_hat = 0.5 * (_lag_cross_moment(obs) + _lag_cross_moment(sim))

    # column t of the fitted series is theta_hat @ y_{t-1}, y_0 = 0
    def fitted(y):
        out = np.zeros_like(y)
        out[:, 1:] = theta_hat @ y[:, :-1]
        return out

    r_obs = obs - fitted(obs)
    r_sim = sim - fitted(sim)
    sigma = (r_sim @ r_sim.T + r_obs @ r_obs.T) / (2.0 * t_len)
    d = r_obs - r_sim
    for attempt in (sigma, sigma + ridge * np.eye(sigma.shape[0])):
        try:
            x = np.linalg.solve(attempt, d)
        except np.linalg.LinAlgError:
            continue
        rho = float((d * x).sum() / t_len)
        if np.isfinite(rho):
            return rho
    raise SingularCovarianceError(
        "pooled error covariance singular (ridge retry failed)")


_PAIRWISE = {
    DistanceKind.CANBERRA: canberra,
    DistanceKind.EUCLIDEAN: euclidean,
    DistanceKind.MANHATTAN: manhattan,
    DistanceKind.MVT: mvt,
}


def matrix_distance(kind: DistanceKind, sim: np.ndarray, obs: np.ndarray) -> float:
    """Distance between two single-replicate (p, t) matrices."""
    if sim.shape != obs.shape:
        raise ValueError(f"shape mismatch {sim.shape} vs {obs.shape}")
    return _PAIRWISE[DistanceKind(kind)](sim, obs)


def distance(kind: DistanceKind, sim: ExpressionData, obs: ExpressionData) -> float:
    """Total distance between two datasets, summed over replicates."""
    if (sim.p, sim.t_len, sim.n_replicates) != (obs.p, obs.t_len, obs.n_replicates):
        raise ValueError(
            f"data shape mismatch: ({sim.p}, {sim.t_len}) x {sim.n_replicates}"
            f" vs ({obs.p}, {obs.t_len}) x {obs.n_replicates}")
    fn = _PAIRWISE[DistanceKind(kind)]
    return sum(fn(s, o) for s, o in zip(sim.replicates, obs.replicates))
