"""File formats: expression matrices, chain-sample records, report tables.

Expression files are comma-separated with genes as rows: a header line
of time labels, then one line per gene starting with its name.  Multiple
replicates live in separate files sharing the same gene order.  Chain
samples use an append-friendly record format: chain id, iteration,
distance, then the p*p weight matrix in row-major order (the structure
is recoverable as the nonzero pattern).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .core import ChainSample, ExpressionData, GeneNetwork


class ParseError(ValueError):
    """Malformed input file; message carries row/column location."""


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# expression matrices


def _load_matrix(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header and at least one gene row")
    width = len(rows[0])
    genes, values = [], []
    for rnum, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(
                f"{path}: row {rnum} has {len(row)} fields, expected {width}")
        genes.append(row[0].strip())
        vals = []
        for cnum, cell in enumerate(row[1:], start=2):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric cell at row {rnum}, col {cnum}: "
                    f"{cell!r}") from None
            if not np.isfinite(v):
                raise ParseError(
                    f"{path}: non-finite value at row {rnum}, col {cnum}")
            vals.append(v)
        values.append(vals)
    return genes, np.array(values, dtype=np.float64)


def load_expression(paths) -> ExpressionData:
    """Load one or more replicate files into a single dataset.

    Every file must have the same gene names in the same order.
    """
    if isinstance(paths, (str, Path)):
        paths = [paths]
    genes0 = None
    reps = []
    for path in paths:
        genes, mat = _load_matrix(path)
        if genes0 is None:
            genes0 = genes
        elif genes != genes0:
            raise ParseError(
                f"{path}: gene names/order differ from first replicate")
        elif mat.shape != reps[0].shape:
            raise ParseError(
                f"{path}: shape {mat.shape} differs from first replicate "
                f"{reps[0].shape}")
        reps.append(mat)
    return ExpressionData(tuple(reps), labels=tuple(genes0))


def save_expression(data: ExpressionData, path, replicate: int = 0) -> None:
    """Write one replicate in the genes-as-rows format."""
    y = data.replicates[replicate]
    labels = data.labels or [f"g{i+1}" for i in range(data.p)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gene"] + [f"t{t+1}" for t in range(data.t_len)])
        for name, row in zip(labels, y):
            w.writerow([name] + [_fmt(v) for v in row])


def save_expression_replicates(data: ExpressionData, base_path) -> list[Path]:
    """Write every replicate as ``<stem>_rep<k><suffix>``; returns the paths."""
    base = Path(base_path)
    if data.n_replicates == 1:
        save_expression(data, base)
        return [base]
    paths = []
    for k in range(data.n_replicates):
        path = base.with_name(f"{base.stem}_rep{k + 1}{base.suffix}")
        save_expression(data, path, replicate=k)
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# adjacency matrices


def load_adjacency(path) -> tuple[list[str], np.ndarray]:
    """Square 0/1 matrix in the same genes-as-rows format."""
    genes, mat = _load_matrix(path)
    if mat.shape[0] != mat.shape[1]:
        raise ParseError(f"{path}: adjacency must be square, got {mat.shape}")
    if not np.isin(mat, (0.0, 1.0)).all():
        raise ParseError(f"{path}: adjacency entries must be 0 or 1")
    return genes, mat.astype(np.int8)


def save_adjacency(labels, adjacency: np.ndarray, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["gene"] + list(labels))
        for name, row in zip(labels, adjacency):
            w.writerow([name] + [int(v) for v in row])


# ---------------------------------------------------------------------------
# chain samples


class SampleWriter:
    """Streaming writer for chain samples; usable as a run_chain sink."""

    def __init__(self, path):
        self._fh = Path(path).open("w", newline="")
        self._w = csv.writer(self._fh)

    def __call__(self, sample: ChainSample) -> None:
        self._w.writerow(
            [sample.chain_id, sample.iteration, _fmt(sample.rho)]
            + [_fmt(v) for v in sample.network.params.ravel()])

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def persist_samples(samples, path) -> None:
    with SampleWriter(path) as w:
        for s in samples:
            w(s)


def load_samples(path) -> list[ChainSample]:
    out = []
    with Path(path).open(newline="") as fh:
        for rnum, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                chain_id, iteration = int(row[0]), int(row[1])
                rho = float(row[2])
                theta = np.array([float(v) for v in row[3:]])
            except (ValueError, IndexError):
                raise ParseError(f"record {rnum}: malformed sample") from None
            p = int(round(np.sqrt(theta.size)))
            if p * p != theta.size or p == 0:
                raise ParseError(
                    f"record {rnum}: {theta.size} weights is not a square")
            net = GeneNetwork.from_params(theta.reshape(p, p))
            out.append(ChainSample(net, rho, iteration=iteration,
                                   chain_id=chain_id))
    return out


def group_by_chain(samples) -> list[list[ChainSample]]:
    """Split a flat sample list into per-chain lists, ordered by chain id."""
    chains = {}
    for s in samples:
        chains.setdefault(s.chain_id, []).append(s)
    return [sorted(chains[cid], key=lambda s: s.iteration)
            for cid in sorted(chains)]


# ---------------------------------------------------------------------------
# report tables


def write_summary_table(summary, path, labels=None) -> None:
    """Per-edge posterior summary as a delimited table."""
    labels = labels or [f"g{i+1}" for i in range(summary.p)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "regulator", "presence", "n_samples", "mean",
                    "ci90_lo", "ci90_hi", "rigidity", "label"])
        for i in range(summary.p):
            for j in range(summary.p):
                e = summary.edge(i, j)
                lo, hi = e.ci(90)
                w.writerow([labels[i], labels[j], _fmt(e.presence),
                            e.n_samples, _fmt(e.mean), _fmt(lo), _fmt(hi),
                            _fmt(e.rigidity), e.label])


def write_roc_table(report, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "tp", "fp", "tn", "fn", "fpr", "tpr"])
        for (alpha, tp, fp, tn, fn), (fpr, tpr) in zip(
                report.confusion, report.roc_points):
            w.writerow([alpha, tp, fp, tn, fn, _fmt(fpr), _fmt(tpr)])
        w.writerow(["auc", _fmt(report.auc), "", "", "", "", ""])


def write_rhat_table(rhat: np.ndarray, path, labels=None) -> None:
    p = rhat.shape[0]
    labels = labels or [f"g{i+1}" for i in range(p)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["target", "regulator", "rhat"])
        for i in range(p):
            for j in range(p):
                w.writerow([labels[i], labels[j], _fmt(rhat[i, j])])


def write_study_table(results, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "seed", "auc", "max_rhat", "epsilon",
                    "main_acceptance", "error"])
        for r in results:
            w.writerow([r.cell, r.seed, _fmt(r.auc), _fmt(r.max_rhat),
                        _fmt(r.epsilon), _fmt(r.main_acceptance),
                        r.error or ""])


def write_calibration_table(calibration, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epsilon", _fmt(calibration.epsilon)])
        w.writerow(["rank", "distance"])
        for k, d in enumerate(calibration.distances, start=1):
            w.writerow([k, _fmt(d)])
