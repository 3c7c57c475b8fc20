"""Priors, structure proposals, and the multi-chain ABC-MCMC sampler.

The sampler explores (G, theta) jointly: one structure move per
iteration (add / delete / reverse an edge, chosen uniformly over the
legal one-move neighborhood) followed by a Gaussian random walk on every
edge weight present in the proposed structure.  The likelihood is
replaced by an indicator that the distance between the candidate's
one-step-ahead predictions and the observed data falls below a
tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ChainSample, DistanceKind, ExpressionData, GeneNetwork, RunConfig
from .distances import matrix_distance, mvt
from .simulators import apply_network

BURNIN_RETRY_CAP = 10


class ChainAbortError(RuntimeError):
    """Burn-in never reached the minimum acceptance rate (epsilon too small)."""


# ---------------------------------------------------------------------------
# priors


def _sample_row_sizes(p: int, max_fan_in: int, n_rows: int,
                      rng: np.random.Generator) -> np.ndarray:
    # row size k chosen with weight C(p, k), k = 0..max_fan_in, so the
    # structure is uniform over all fan-in-feasible adjacency matrices
    m = min(max_fan_in, p)
    weights = np.array([math.comb(p, k) for k in range(m + 1)], dtype=float)
    weights /= weights.sum()
    return rng.choice(m + 1, size=n_rows, p=weights)


def sample_prior(cfg: RunConfig, p: int, rng: np.random.Generator) -> GeneNetwork:
    """One draw from the joint prior on (G, theta).

    The structure is uniform over all adjacency matrices whose rows have
    at most ``cfg.max_fan_in`` ones; each present edge gets an
    independent U(prior_lo, prior_hi) weight (exact zeros redrawn).
    """
    adj = np.zeros((p, p), dtype=np.int8)
    for i, k in enumerate(_sample_row_sizes(p, cfg.max_fan_in, p, rng)):
        if k:
            adj[i, rng.choice(p, size=k, replace=False)] = 1
    theta = np.zeros((p, p))
    mask = adj == 1
    k = int(mask.sum())
    if k:
        w = rng.uniform(cfg.prior_lo, cfg.prior_hi, size=k)
        while (w == 0).any():  # pragma: no cover - measure-zero event
            w[w == 0] = rng.uniform(cfg.prior_lo, cfg.prior_hi,
                                    size=int((w == 0).sum()))
        theta[mask] = w
    return GeneNetwork(adj, theta)


# ---------------------------------------------------------------------------
# moves and neighborhoods


def _move_masks(adj: np.ndarray, row_sums: np.ndarray, max_fan_in: int):
    cap = row_sums < max_fan_in
    add = (adj == 0) & cap[:, None]
    delete = adj == 1
    off = ~np.eye(adj.shape[0], dtype=bool)
    reverse = delete & (adj.T == 0) & off & cap[None, :]
    return add, delete, reverse


def _neighborhood_size(adj: np.ndarray, row_sums: np.ndarray,
                       max_fan_in: int) -> int:
    add, delete, reverse = _move_masks(adj, row_sums, max_fan_in)
    return int(add.sum()) + int(delete.sum()) + int(reverse.sum())


def neighborhood_size(net: GeneNetwork, cfg: RunConfig) -> int:
    """Number of structures reachable by one legal add/delete/reverse move."""
    n = _neighborhood_size(net.adjacency, net.fan_in(), cfg.max_fan_in)
    if n == 0:
        raise ValueError("network has no legal moves under this configuration")
    return n


def _propose_structure(adj: np.ndarray, row_sums: np.ndarray, max_fan_in: int,
                       rng: np.random.Generator):
    """Pick one legal move uniformly.

    Returns ``(new_adj, new_row_sums, n_neighbors, (kind, i, j))``.
    """
    add, delete, reverse = _move_masks(adj, row_sums, max_fan_in)
    n_add, n_del, n_rev = int(add.sum()), int(delete.sum()), int(reverse.sum())
    n = n_add + n_del + n_rev
    if n == 0:
        raise ValueError("no legal moves")
    r = int(rng.integers(n))
    new = adj.copy()
    rows = row_sums.copy()
    p = adj.shape[0]
    if r < n_add:
        i, j = divmod(int(np.flatnonzero(add.ravel())[r]), p)
        new[i, j] = 1
        rows[i] += 1
        move = ("add", i, j)
    elif r < n_add + n_del:
        i, j = divmod(int(np.flatnonzero(delete.ravel())[r - n_add]), p)
        new[i, j] = 0
        rows[i] -= 1
        move = ("delete", i, j)
    else:
        i, j = divmod(int(np.flatnonzero(reverse.ravel())[r - n_add - n_del]), p)
        new[i, j] = 0
        new[j, i] = 1
        rows[i] -= 1
        rows[j] += 1
        move = ("reverse", i, j)
    return new, rows, n, move


def _propose_params(adj_new: np.ndarray, theta: np.ndarray, sigma: float,
                    rng: np.random.Generator) -> np.ndarray:
    # every present edge gets a fresh Gaussian step; newly added edges
    # start the walk from zero, absent edges are exactly zero
    mask = adj_new == 1
    out = np.zeros_like(theta)
    k = int(mask.sum())
    if k:
        out[mask] = theta[mask] + sigma * rng.standard_normal(k)
    return out


def propose(current: GeneNetwork, cfg: RunConfig,
            rng: np.random.Generator):
    """Two-step proposal from the current network.

    Returns ``(proposal, forward_prob, reverse_prob)`` where the
    probabilities are the uniform structure-kernel masses 1/N(G) and
    1/N(G*) entering the acceptance ratio.
    """
    adj_new, rows_new, n_cur, _ = _propose_structure(
        current.adjacency, current.fan_in(), cfg.max_fan_in, rng)
    theta_new = _propose_params(adj_new, current.params, cfg.sigma_theta, rng)
    n_prop = _neighborhood_size(adj_new, rows_new, cfg.max_fan_in)
    return GeneNetwork(adj_new, theta_new), 1.0 / n_cur, 1.0 / n_prop


def _prior_ok(adj: np.ndarray, theta: np.ndarray, cfg: RunConfig) -> bool:
    w = theta[adj == 1]
    return bool(((w > cfg.prior_lo) & (w < cfg.prior_hi) & (w != 0)).all())


def _gauss_pdf(x: float, sigma: float) -> float:
    return math.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))


def _dimension_correction(move, theta_cur: np.ndarray, theta_new: np.ndarray,
                          cfg: RunConfig) -> float:
    """Proposal/prior density ratio for the coordinate changed by a move.

    The Gaussian walk terms cancel on edges shared by both structures,
    but the coordinate created or destroyed by an add/delete/reverse
    does not: the forward (or reverse) transition carries a Gaussian
    density there while the target carries the flat prior density.
    Without this factor the chain does not leave the prior invariant as
    the tolerance goes to infinity.
    """
    kind, i, j = move
    span = cfg.prior_hi - cfg.prior_lo
    sigma = cfg.sigma_theta
    if kind == "add":
        return 1.0 / (span * _gauss_pdf(theta_new[i, j], sigma))
    if kind == "delete":
        return span * _gauss_pdf(theta_cur[i, j], sigma)
    # reverse: coordinate (i, j) destroyed, (j, i) created
    return _gauss_pdf(theta_cur[i, j], sigma) / _gauss_pdf(theta_new[j, i], sigma)


def _classify_move(current: GeneNetwork, proposal: GeneNetwork):
    """Recover the structure move linking two adjacency matrices, or None
    if they are identical."""
    diff = proposal.adjacency.astype(np.int8) - current.adjacency
    added = np.argwhere(diff == 1)
    removed = np.argwhere(diff == -1)
    if len(added) == 1 and len(removed) == 0:
        return ("add", *map(int, added[0]))
    if len(added) == 0 and len(removed) == 1:
        return ("delete", *map(int, removed[0]))
    if len(added) == 1 and len(removed) == 1:
        ri, rj = map(int, removed[0])
        ai, aj = map(int, added[0])
        if (ai, aj) == (rj, ri):
            return ("reverse", ri, rj)
    if len(added) == 0 and len(removed) == 0:
        return None
    raise ValueError("proposal is not one legal move away from current")


def acceptance_probability(current: ChainSample, proposal: GeneNetwork,
                           rho_star: float, epsilon: float,
                           n_cur: int, n_prop: int, cfg: RunConfig) -> float:
    """Metropolis-Hastings acceptance for the indicator-likelihood target.

    Uniform priors cancel and the Gaussian walk is symmetric on shared
    edges, leaving the structure-kernel ratio N(G)/N(G*) times the
    density correction for the moved coordinate, times the indicator
    that the proposal's distance clears the tolerance.  A proposal
    violating the fan-in bound or the weight bounds has zero prior and
    is never accepted.
    """
    if (proposal.fan_in() > cfg.max_fan_in).any():
        return 0.0
    if not _prior_ok(proposal.adjacency, proposal.params, cfg):
        return 0.0
    if not rho_star < epsilon:
        return 0.0
    move = _classify_move(current.network, proposal)
    corr = 1.0
    if move is not None:
        corr = _dimension_correction(move, current.network.params,
                                     proposal.params, cfg)
    return min(1.0, (n_cur / n_prop) * corr)


# ---------------------------------------------------------------------------
# tolerance calibration


@dataclass(frozen=True)
class CalibrationResult:
    epsilon: float
    distances: np.ndarray  # sorted ascending

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.distances, q))


def _rho_function(data: ExpressionData, kind: DistanceKind):
    """Distance between a candidate's predictions and the data, as a
    function of the raw theta matrix.

    For the elementwise kinds the copied first column contributes
    nothing, so only the predicted tail is compared.  MVT needs the full
    matrices.
    """
    kind = DistanceKind(kind)
    prevs = [y[:, :-1] for y in data.replicates]
    if kind is DistanceKind.MVT:
        obs = data.replicates

        def rho(theta):
            total = 0.0
            for y, yprev in zip(obs, prevs):
                sim = np.empty_like(y)
                sim[:, 0] = y[:, 0]
                sim[:, 1:] = apply_network(theta, yprev)
                total += mvt(sim, y)
            return total
        return rho

    tails = [y[:, 1:] for y in data.replicates]

    def rho(theta):
        return sum(matrix_distance(kind, apply_network(theta, yprev), tail)
                   for yprev, tail in zip(prevs, tails))
    return rho


def calibrate_epsilon(data: ExpressionData, cfg: RunConfig,
                      rng: np.random.Generator) -> CalibrationResult:
    """Empirical-quantile tolerance from prior-network distances.

    Draws ``cfg.n_calibration_networks`` networks from the prior, scores
    each by the configured distance between its one-step predictions and
    the data, and returns the ``cfg.epsilon_quantile`` quantile along
    with the full sorted distance vector.
    """
    rho = _rho_function(data, cfg.distance)
    dists = np.empty(cfg.n_calibration_networks)
    for k in range(cfg.n_calibration_networks):
        net = sample_prior(cfg, data.p, rng)
        dists[k] = rho(net.params)
    dists.sort()
    return CalibrationResult(float(np.quantile(dists, cfg.epsilon_quantile)),
                             dists)


# ---------------------------------------------------------------------------
# samplers


@dataclass(frozen=True)
class RejectionResult:
    samples: list
    n_proposals: int
    n_accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_proposals


def abc_rejection(data: ExpressionData, cfg: RunConfig, n_proposals: int,
                  epsilon: float, rng: np.random.Generator) -> RejectionResult:
    """Baseline sampler: independent prior draws, accept iff rho <= epsilon."""
    rho = _rho_function(data, cfg.distance)
    samples = []
    for k in range(n_proposals):
        net = sample_prior(cfg, data.p, rng)
        r = rho(net.params)
        if r <= epsilon:
            samples.append(ChainSample(net, r, iteration=k, chain_id=-1))
    return RejectionResult(samples, n_proposals, len(samples))


@dataclass(frozen=True)
class CoolingSchedule:
    """Decreasing burn-in tolerances ending at the target epsilon."""

    levels: tuple
    iters_per_level: int

    def __post_init__(self):
        if any(a <= b for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("cooling levels must be strictly decreasing")
        if self.iters_per_level < 1:
            raise ValueError("iters_per_level must be >= 1")

    @property
    def total_iterations(self) -> int:
        return len(self.levels) * self.iters_per_level


def build_cooling(calibration: CalibrationResult, cfg: RunConfig,
                  epsilon: float | None = None) -> CoolingSchedule:
    """Cooling levels at calibration quantiles stepping down to epsilon.

    Levels sit at geometrically spaced quantiles of the calibration
    distances, from the 100% quantile (everything acceptable, so a
    prior-started chain can move at all) down to the target quantile.
    Burn-in length is kept at no less than 1% of the main run.
    """
    if epsilon is None:
        epsilon = calibration.epsilon
    n_levels = cfg.burnin_levels
    qs = np.geomspace(1.0, cfg.epsilon_quantile, n_levels)[:-1]
    levels = [calibration.quantile(q) for q in qs] + [float(epsilon)]
    # repair ties from discrete calibration vectors
    for i in range(len(levels) - 2, -1, -1):
        if levels[i] <= levels[i + 1]:
            levels[i] = levels[i + 1] * (1 + 1e-9) + 1e-300
    min_total = max(n_levels * cfg.burnin_iters_per_level,
                    math.ceil(0.01 * cfg.chain_length))
    iters = max(cfg.burnin_iters_per_level, math.ceil(min_total / n_levels))
    return CoolingSchedule(tuple(levels), iters)


def fallback_cooling(epsilon: float, cfg: RunConfig) -> CoolingSchedule:
    """Geometric levels from 10x epsilon down to epsilon.

    Used when no calibration vector is available (e.g. a user-supplied
    tolerance); infinite tolerances get a single-level schedule.
    """
    n_levels = cfg.burnin_levels
    min_total = max(n_levels * cfg.burnin_iters_per_level,
                    math.ceil(0.01 * cfg.chain_length))
    if not np.isfinite(epsilon):
        return CoolingSchedule((float("inf"),), min_total)
    levels = epsilon * np.geomspace(10.0, 1.0, n_levels)
    levels[-1] = epsilon
    iters = max(cfg.burnin_iters_per_level, math.ceil(min_total / n_levels))
    return CoolingSchedule(tuple(levels), iters)


@dataclass
class ChainStats:
    chain_id: int
    burnin_acceptance: list = field(default_factory=list)  # one per attempt
    burnin_repeats: int = 0
    main_acceptance: float = 0.0
    n_iterations: int = 0


class _ChainState:
    """Mutable raw-array chain state; GeneNetwork objects are built only
    when a sample is recorded."""

    __slots__ = ("adj", "theta", "rows", "n_nbrs", "rho")

    def __init__(self, net: GeneNetwork, rho: float, max_fan_in: int):
        self.adj = net.adjacency.copy()
        self.theta = net.params.copy()
        self.rows = self.adj.sum(axis=1)
        self.n_nbrs = _neighborhood_size(self.adj, self.rows, max_fan_in)
        self.rho = rho


def _step(state: _ChainState, rho_fn, epsilon: float, cfg: RunConfig,
          rng: np.random.Generator) -> bool:
    """One MCMC iteration in place; returns whether the move was accepted."""
    adj_new, rows_new, n_cur, move = _propose_structure(
        state.adj, state.rows, cfg.max_fan_in, rng)
    theta_new = _propose_params(adj_new, state.theta, cfg.sigma_theta, rng)
    if not _prior_ok(adj_new, theta_new, cfg):
        return False
    rho_star = rho_fn(theta_new)
    if not rho_star < epsilon:
        return False
    n_prop = _neighborhood_size(adj_new, rows_new, cfg.max_fan_in)
    alpha = (n_cur / n_prop) * _dimension_correction(
        move, state.theta, theta_new, cfg)
    if alpha < 1.0 and rng.random() >= alpha:
        return False
    state.adj = adj_new
    state.theta = theta_new
    state.rows = rows_new
    state.n_nbrs = n_prop
    state.rho = rho_star
    return True


def run_chain(data: ExpressionData, cfg: RunConfig, epsilon: float,
              chain_id: int, rng: np.random.Generator,
              cooling: CoolingSchedule | None = None,
              sink=None):
    """One full chain: cooled burn-in, then a thinned main phase.

    The burn-in walks the tolerance down the cooling schedule and is
    repeated (fresh tolerance walk, same state) while its empirical
    acceptance rate stays below ``cfg.min_burnin_acceptance``, up to
    ``BURNIN_RETRY_CAP`` attempts.  The main phase runs
    ``cfg.chain_length`` iterations at the final tolerance, recording
    the current state every ``cfg.thin`` iterations whether or not the
    iteration accepted.  ``sink``, if given, receives each recorded
    ChainSample as it is produced.

    Returns ``(samples, stats)``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if cooling is None:
        cooling = fallback_cooling(epsilon, cfg)
    rho_fn = _rho_function(data, cfg.distance)
    start = sample_prior(cfg, data.p, rng)
    state = _ChainState(start, rho_fn(start.params), cfg.max_fan_in)
    stats = ChainStats(chain_id=chain_id)

    for attempt in range(BURNIN_RETRY_CAP):
        accepted = 0
        for level in cooling.levels:
            for _ in range(cooling.iters_per_level):
                accepted += _step(state, rho_fn, level, cfg, rng)
        rate = accepted / cooling.total_iterations
        stats.burnin_acceptance.append(rate)
        if rate >= cfg.min_burnin_acceptance:
            break
        stats.burnin_repeats += 1
    else:
        raise ChainAbortError(
            f"chain {chain_id}: burn-in acceptance below "
            f"{cfg.min_burnin_acceptance} after {BURNIN_RETRY_CAP} attempts "
            "(tolerance too small for this data)")

    samples = []
    accepted = 0
    for it in range(1, cfg.chain_length + 1):
        accepted += _step(state, rho_fn, epsilon, cfg, rng)
        if it % cfg.thin == 0:
            sample = ChainSample(GeneNetwork(state.adj.copy(),
                                             state.theta.copy()),
                                 state.rho, iteration=it, chain_id=chain_id)
            samples.append(sample)
            if sink is not None:
                sink(sample)
    stats.main_acceptance = accepted / cfg.chain_length
    stats.n_iterations = cfg.chain_length
    return samples, stats


@dataclass
class RunResult:
    """Everything produced by a full multi-chain run."""

    epsilon: float
    calibration: CalibrationResult | None
    chain_samples: list          # list of per-chain sample lists
    chain_stats: list
    rhat: np.ndarray             # (p, p) Gelman-Rubin per parameter
    converged: bool
    retained: list               # pooled smallest-distance samples
    aborted_chains: tuple = ()   # diagnostics of chains lost in burn-in

    @property
    def pooled(self) -> list:
        return [s for chain in self.chain_samples for s in chain]


def retain_smallest(samples: list, fraction: float) -> list:
    """Keep the samples with the smallest distances (at least one)."""
    n_keep = max(1, int(fraction * len(samples)))
    order = sorted(range(len(samples)),
                   key=lambda k: (samples[k].rho, samples[k].chain_id,
                                  samples[k].iteration))
    return [samples[k] for k in order[:n_keep]]


def run_abc_net(data: ExpressionData, cfg: RunConfig,
                epsilon: float | None = None, sink=None) -> RunResult:
    """Calibrate (unless a tolerance is given), run all chains, diagnose.

    Chains use independent seed-sequence substreams of ``cfg.seed`` and
    are merged in chain-id order, so results are reproducible regardless
    of scheduling.  Non-convergence (some parameter's R-hat at or above
    ``cfg.rhat_cutoff``) is reported via ``converged``, not raised.
    """
    from .diagnostics import gelman_rubin_matrix

    root = np.random.SeedSequence(cfg.seed)
    calib_seq, *chain_seqs = root.spawn(cfg.n_chains + 1)
    calibration = None
    if epsilon is None:
        calibration = calibrate_epsilon(
            data, cfg, np.random.default_rng(calib_seq))
        epsilon = calibration.epsilon
        cooling = build_cooling(calibration, cfg)
    else:
        cooling = fallback_cooling(epsilon, cfg)

    chain_samples, chain_stats, aborted = [], [], []
    for cid, seq in enumerate(chain_seqs):
        try:
            samples, stats = run_chain(
                data, cfg, epsilon, cid, np.random.default_rng(seq),
                cooling=cooling, sink=sink)
        except ChainAbortError as exc:
            aborted.append(str(exc))
            continue
        chain_samples.append(samples)
        chain_stats.append(stats)
    if not chain_samples:
        raise ChainAbortError(
            "all chains aborted in burn-in: " + "; ".join(aborted))

    rhat = gelman_rubin_matrix(chain_samples, data.p)
    converged = bool((rhat < cfg.rhat_cutoff).all())
    retained = retain_smallest(
        [s for chain in chain_samples for s in chain], cfg.retain_fraction)
    return RunResult(epsilon=float(epsilon), calibration=calibration,
                     chain_samples=chain_samples, chain_stats=chain_stats,
                     rhat=rhat, converged=converged, retained=retained,
                     aborted_chains=tuple(aborted))
