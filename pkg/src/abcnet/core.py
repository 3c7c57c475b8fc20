"""Shared domain types: networks, expression data, run configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields
from enum import Enum

import numpy as np


class DistanceKind(str, Enum):
    CANBERRA = "canberra"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    MVT = "mvt"


def _freeze(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GeneNetwork:
    """A directed weighted network: adjacency G and weights theta.

    Orientation: row i = target gene, column j = regulator, so
    ``adjacency[i, j] == 1`` means gene j regulates gene i and
    ``params[i, j]`` is the strength of that effect.  A row's number of
    ones is the fan-in of the corresponding gene.
    """

    adjacency: np.ndarray  # (p, p) of {0, 1}
    params: np.ndarray     # (p, p) float, zero exactly off the edge set

    def __post_init__(self):
        adj = _freeze(np.asarray(self.adjacency, dtype=np.int8))
        par = _freeze(np.asarray(self.params, dtype=np.float64))
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if par.shape != adj.shape:
            raise ValueError(
                f"params shape {par.shape} != adjacency shape {adj.shape}")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if not np.isfinite(par).all():
            raise ValueError("params must be finite")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "params", par)

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def fan_in(self) -> np.ndarray:
        """Number of regulators per gene (row sums of G)."""
        return self.adjacency.sum(axis=1)

    @classmethod
    def empty(cls, p: int) -> "GeneNetwork":
        return cls(np.zeros((p, p), dtype=np.int8), np.zeros((p, p)))

    @classmethod
    def from_params(cls, params) -> "GeneNetwork":
        """Build a network whose edge set is the nonzero pattern of params."""
        params = np.asarray(params, dtype=np.float64)
        return cls((params != 0).astype(np.int8), params)


@dataclass(frozen=True)
class ExpressionData:
    """Expression series for p genes over t_len equally spaced time points.

    Each replicate is a (p, t_len) matrix whose columns are the per-time
    expression vectors.  Replicates are independent series sharing one
    underlying network.
    """

    replicates: tuple  # of (p, t_len) float arrays
    labels: tuple | None = None

    def __post_init__(self):
        reps = tuple(_freeze(np.asarray(r, dtype=np.float64))
                     for r in self.replicates)
        if not reps:
            raise ValueError("at least one replicate required")
        shape = reps[0].shape
        if len(shape) != 2 or shape[1] < 2:
            raise ValueError(
                f"replicates must be (p, t_len) with t_len >= 2, got {shape}")
        for r in reps:
            if r.shape != shape:
                raise ValueError(
                    f"replicate shape mismatch: {r.shape} vs {shape}")
            if not np.isfinite(r).all():
                raise ValueError("expression values must be finite")
        labels = self.labels
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != shape[0]:
                raise ValueError(
                    f"{len(labels)} labels for {shape[0]} genes")
        object.__setattr__(self, "replicates", reps)
        object.__setattr__(self, "labels", labels)

    @property
    def p(self) -> int:
        return self.replicates[0].shape[0]

    @property
    def t_len(self) -> int:
        return self.replicates[0].shape[1]

    @property
    def n_replicates(self) -> int:
        return len(self.replicates)


@dataclass(frozen=True)
class RunConfig:
    """All tunables of the inference pipeline."""

    prior_lo: float = -2.0
    prior_hi: float = 2.0
    max_fan_in: int = 5
    sigma_theta: float = 0.5
    distance: DistanceKind = DistanceKind.EUCLIDEAN
    epsilon_quantile: float = 0.01
    n_calibration_networks: int = 5000
    n_chains: int = 10
    chain_length: int = 1_000_000
    thin: int = 50
    burnin_levels: int = 10
    burnin_iters_per_level: int = 200
    min_burnin_acceptance: float = 0.01
    retain_fraction: float = 0.01
    rhat_cutoff: float = 1.2
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "distance", DistanceKind(self.distance))
        if not self.prior_lo < 0 < self.prior_hi:
            raise ValueError("prior bounds must straddle zero")
        if self.sigma_theta <= 0:
            raise ValueError("sigma_theta must be positive")
        for name in ("max_fan_in", "n_calibration_networks", "n_chains",
                     "chain_length", "thin", "burnin_levels",
                     "burnin_iters_per_level"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 < self.epsilon_quantile <= 1:
            raise ValueError("epsilon_quantile must be in (0, 1]")
        if not 0 < self.retain_fraction <= 1:
            raise ValueError("retain_fraction must be in (0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def replace(self, **kwargs) -> "RunConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(kwargs)
        return RunConfig(**vals)


@dataclass(frozen=True)
class ChainSample:
    """One thinned draw from a chain, with the distance it achieved."""

    network: GeneNetwork
    rho: float
    iteration: int
    chain_id: int

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho >= 0):
            raise ValueError(f"rho must be finite and >= 0, got {self.rho}")


def validate_network(net: GeneNetwork, cfg: RunConfig) -> list[str]:
    """Check a network against the structural constraints.

    Returns a list of human-readable violations; an empty list means the
    network is valid.  Checks (a) params nonzero exactly on the edge set,
    (b) every row's fan-in within ``cfg.max_fan_in``, (c) every edge
    weight strictly inside the prior bounds.
    """
    problems = []
    present = net.adjacency == 1
    bad = np.argwhere(present & (net.params == 0))
    for i, j in bad:
        problems.append(f"zero-mismatch at ({i},{j}): edge present, weight 0")
    bad = np.argwhere(~present & (net.params != 0))
    for i, j in bad:
        problems.append(f"zero-mismatch at ({i},{j}): no edge, weight nonzero")
    fan = net.fan_in()
    for i in np.flatnonzero(fan > cfg.max_fan_in):
        problems.append(
            f"fan-in row {i}: {fan[i]} regulators > max {cfg.max_fan_in}")
    w = net.params[present]
    if w.size and ((w <= cfg.prior_lo) | (w >= cfg.prior_hi)).any():
        bad = np.argwhere(present & ((net.params <= cfg.prior_lo)
                                     | (net.params >= cfg.prior_hi)))
        for i, j in bad:
            problems.append(
                f"bounds at ({i},{j}): {net.params[i, j]} outside "
                f"({cfg.prior_lo}, {cfg.prior_hi})")
    return problems
