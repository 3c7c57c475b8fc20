"""Data generators and the deterministic one-step-ahead predictor.

Five generative models produce "observed" series for benchmarking:
a first-order VAR, two nonlinear variants, a second-order VAR, and a
small linear ODE system integrated with fixed-step RK4.  Inside the
sampler only ``one_step_predict`` is used: it maps a candidate network
to noiseless fitted values computed from the observed previous time
point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ExpressionData, GeneNetwork

RAF_LABELS = ("Pkc", "Raf", "Mek", "Erk", "Pka", "Akt",
              "P38", "Jnk", "Plcg", "Pip3", "Pip2")

# target gene -> regulators, read off the linear ODE right-hand sides
_RAF_EDGES = {
    "Pkc": ("Plcg", "Pip2"),
    "Raf": ("Pkc", "Pka"),
    "Mek": ("Pkc", "Raf", "Pka"),
    "Erk": ("Mek", "Pka"),
    "Pka": ("Pkc",),
    "Akt": ("Erk", "Pka", "Pip3"),
    "P38": ("Pkc", "Pka"),
    "Jnk": ("Pkc", "Pka"),
    "Plcg": (),
    "Pip3": ("Plcg",),
    "Pip2": ("Plcg", "Pip3"),
}

# rate matrix of the linear ODE system, same row/column order as RAF_LABELS
_ODE_COEF = {
    ("Pkc", "Plcg"): 0.18, ("Pkc", "Pip2"): -0.75,
    ("Raf", "Pkc"): -0.28, ("Raf", "Pka"): 0.62,
    ("Mek", "Pkc"): 0.63, ("Mek", "Raf"): -0.97, ("Mek", "Pka"): -0.52,
    ("Erk", "Mek"): 0.70, ("Erk", "Pka"): -0.94,
    ("Pka", "Pkc"): 0.31,
    ("Akt", "Erk"): 0.28, ("Akt", "Pka"): 0.60, ("Akt", "Pip3"): 0.92,
    ("P38", "Pkc"): -0.19, ("P38", "Pka"): -0.32,
    ("Jnk", "Pkc"): 0.24, ("Jnk", "Pka"): 0.98,
    ("Pip3", "Plcg"): -0.28,
    ("Pip2", "Plcg"): 0.83, ("Pip2", "Pip3"): -0.98,
}

RECIPROCAL_FLOOR = 1e-8


class GenerationError(RuntimeError):
    """A draw hit a numerical singularity and should be redrawn."""


def raf_truth() -> GeneNetwork:
    """The 20-edge gold-standard Raf pathway as an unweighted network.

    Weights are set to 1 on every true edge; use ``sample_raf_params``
    for a random weighted instance.
    """
    p = len(RAF_LABELS)
    idx = {name: k for k, name in enumerate(RAF_LABELS)}
    adj = np.zeros((p, p), dtype=np.int8)
    for target, regs in _RAF_EDGES.items():
        for r in regs:
            adj[idx[target], idx[r]] = 1
    return GeneNetwork(adj, adj.astype(np.float64))


def raf_ode_matrix() -> np.ndarray:
    """Coefficient matrix A of the linear ODE system y' = A y."""
    p = len(RAF_LABELS)
    idx = {name: k for k, name in enumerate(RAF_LABELS)}
    a = np.zeros((p, p))
    for (target, reg), c in _ODE_COEF.items():
        a[idx[target], idx[reg]] = c
    return a


def sample_raf_params(rng: np.random.Generator,
                      lo: float = 0.25, hi: float = 2.0) -> np.ndarray:
    """Random weights on the Raf edge set: |theta| ~ U(lo, hi), random sign."""
    adj = raf_truth().adjacency
    mag = rng.uniform(lo, hi, size=adj.shape)
    sign = rng.choice((-1.0, 1.0), size=adj.shape)
    return np.where(adj == 1, sign * mag, 0.0)


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one synthetic-data draw.

    ``theta2`` is required for the second-order kinds and forbidden
    otherwise.  ``y_init`` (and ``y2_init`` for second-order models)
    override the random start, which is mainly useful for deterministic
    tests with ``noise_sd = 0``.
    """

    kind: str  # var1 | var2 | var_nl1 | var_nl2 | ode
    theta1: np.ndarray | None
    t_len: int
    noise_sd: float = 1.0
    theta2: np.ndarray | None = None
    seed: int = 0
    y_init: np.ndarray | None = None
    y2_init: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("var1", "var2", "var_nl1", "var_nl2", "ode"):
            raise ValueError(f"unknown generator kind {self.kind!r}")
        second_order = self.kind in ("var2", "var_nl2")
        if second_order != (self.theta2 is not None):
            raise ValueError("theta2 required exactly for second-order kinds")
        if self.kind != "ode" and self.theta1 is None:
            raise ValueError("theta1 required for VAR kinds")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.t_len < 2:
            raise ValueError("t_len must be >= 2")


def apply_network(theta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """theta times y for a column vector or a matrix of columns.

    Both shapes go through einsum with the same summation order, so a
    series generated column by column and a block prediction over all
    columns agree bitwise; with BLAS the two routines can differ by an
    ulp, which would break the exact-zero distance of a noiseless fit.
    """
    sub = "ij,jt->it" if y.ndim == 2 else "ij,j->i"
    return np.einsum(sub, theta, y)


def one_step_predict(net: GeneNetwork, observed: ExpressionData) -> ExpressionData:
    """Deterministic fitted values for a candidate network.

    Per replicate the first column is copied from the observed data and
    every later column is theta times the *observed* previous column.
    No noise is added.
    """
    if net.p != observed.p:
        raise ValueError(
            f"network has {net.p} genes, data has {observed.p}")
    theta = net.params
    out = []
    for y in observed.replicates:
        star = np.empty_like(y)
        star[:, 0] = y[:, 0]
        star[:, 1:] = apply_network(theta, y[:, :-1])
        out.append(star)
    return ExpressionData(tuple(out), labels=observed.labels)


def predicted_tail(theta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Columns 2..T of the one-step prediction for one replicate matrix."""
    return apply_network(theta, y[:, :-1])


def _reciprocal(y: np.ndarray) -> np.ndarray:
    if (np.abs(y) < RECIPROCAL_FLOOR).any():
        raise GenerationError(
            "elementwise reciprocal of a near-zero expression value")
    return 1.0 / y


def generate(spec: GeneratorSpec, labels=None) -> ExpressionData:
    """Draw one replicate of synthetic observed data.

    Pure function of the spec: identical specs give identical output.
    Raises GenerationError if a nonlinear model hits a near-zero value;
    see ``generate_retry`` for the redraw wrapper.
    """
    if spec.kind == "ode":
        return generate_ode(spec.t_len, spec.noise_sd, spec.seed, labels=labels)

    rng = np.random.default_rng(spec.seed)
    theta1 = np.asarray(spec.theta1, dtype=np.float64)
    p = theta1.shape[0]
    t_len = spec.t_len
    sd = spec.noise_sd
    y = np.zeros((p, t_len))

    def noise():
        return sd * rng.standard_normal(p)

    if spec.kind == "var1":
        # y_1 ~ N(0, I); y_t = theta1 y_{t-1} + z_t
        y[:, 0] = rng.standard_normal(p) if spec.y_init is None else spec.y_init
        for t in range(1, t_len):
            y[:, t] = apply_network(theta1, y[:, t - 1]) + noise()
    elif spec.kind == "var_nl1":
        y[:, 0] = noise() if spec.y_init is None else spec.y_init
        for t in range(1, t_len):
            y[:, t] = apply_network(theta1, _reciprocal(y[:, t - 1])) + noise()
    elif spec.kind == "var2":
        theta2 = np.asarray(spec.theta2, dtype=np.float64)
        y[:, 0] = noise() if spec.y_init is None else spec.y_init
        y[:, 1] = (apply_network(theta1, y[:, 0]) + noise()
                   if spec.y2_init is None else spec.y2_init)
        for t in range(2, t_len):
            y[:, t] = (apply_network(theta1, y[:, t - 1])
                       + apply_network(theta2, y[:, t - 2]) + noise())
    else:  # var_nl2; startup row read as y_2 = theta1 y_1^{-1} + z_2
        theta2 = np.asarray(spec.theta2, dtype=np.float64)
        y[:, 0] = noise() if spec.y_init is None else spec.y_init
        y[:, 1] = (apply_network(theta1, _reciprocal(y[:, 0])) + noise()
                   if spec.y2_init is None else spec.y2_init)
        for t in range(2, t_len):
            y[:, t] = (apply_network(theta1, _reciprocal(y[:, t - 1]))
                       + apply_network(theta2, y[:, t - 2]) + noise())

    return ExpressionData((y,), labels=labels)


def generate_retry(spec: GeneratorSpec, max_tries: int = 100,
                   labels=None) -> ExpressionData:
    """Generate, redrawing with the next sub-seed on a singular draw."""
    for k in range(max_tries):
        try:
            return generate(
                GeneratorSpec(**{**spec.__dict__, "seed": spec.seed + k}),
                labels=labels)
        except GenerationError:
            continue
    raise GenerationError(f"no valid draw in {max_tries} tries")


def rk4(f, y0: np.ndarray, t0: float, t1: float, step: float) -> np.ndarray:
    """Integrate y' = f(y) from t0 to t1 with classical fixed-step RK4."""
    n = max(1, int(round((t1 - t0) / step)))
    h = (t1 - t0) / n
    y = np.asarray(y0, dtype=np.float64).copy()
    for _ in range(n):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def generate_ode(t_len: int, noise_sd: float, seed: int,
                 step: float = 0.01, labels=None) -> ExpressionData:
    """Integrate the linear Raf ODE system and sample it at t = 1..t_len.

    Initial values are all ones at t = 1; independent N(0, noise_sd^2)
    noise is added to every sampled measurement.
    """
    a = raf_ode_matrix()
    p = a.shape[0]
    rng = np.random.default_rng(seed)
    y = np.empty((p, t_len))
    state = np.ones(p)
    y[:, 0] = state
    for t in range(1, t_len):
        state = rk4(lambda v: a @ v, state, t, t + 1, step)
        y[:, t] = state
    if noise_sd > 0:
        y = y + noise_sd * rng.standard_normal(y.shape)
    return ExpressionData((y,), labels=labels or RAF_LABELS)
