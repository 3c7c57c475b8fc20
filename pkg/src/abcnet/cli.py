"""Command-line interface.

Subcommands cover the whole pipeline: ``simulate`` writes synthetic
expression data, ``calibrate`` picks a tolerance, ``infer`` runs the
sampler end to end, ``diagnose`` and ``evaluate`` work from persisted
sample files, and ``study`` sweeps whole simulation-study grids.
Reports are delimited tables with matplotlib figures rendered next to
them.

Exit codes: 0 success, 1 runtime failure, 2 bad usage or unreadable
input, 3 finished but not converged.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3

_CONFIG_KEYS = (
    "prior_lo", "prior_hi", "max_fan_in", "sigma_theta", "distance",
    "epsilon_quantile", "n_calibration_networks", "n_chains", "chain_length",
    "thin", "burnin_levels", "burnin_iters_per_level",
    "min_burnin_acceptance", "retain_fraction", "rhat_cutoff", "seed",
)


def _apply_thread_env() -> None:
    # honored only if set before numpy loads its BLAS, hence before any
    # package import below
    n = os.environ.get("ABCNET_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, n)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown option {key!r}")
        out[key] = value.strip()
    return out


def _coerce_config(raw: dict):
    from .core import RunConfig
    typed = {}
    for key, value in raw.items():
        if value is None:
            continue
        kind = type(getattr(RunConfig(), key))
        try:
            typed[key] = value if kind is str else kind(value)
        except (TypeError, ValueError):
            raise ValueError(f"bad value for {key}: {value!r}") from None
    return RunConfig(**typed)


def build_run_config(args):
    """Config file values overridden by any explicitly given flags."""
    raw = {}
    if getattr(args, "config", None):
        raw.update(read_config_file(args.config))
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    return _coerce_config(raw)


def _print_config(cfg, epsilon=None) -> None:
    print("effective configuration:")
    for key in _CONFIG_KEYS:
        val = getattr(cfg, key)
        if hasattr(val, "value"):
            val = val.value
        print(f"  {key} = {val}")
    if epsilon is not None:
        print(f"  epsilon = {epsilon!r}")


def _add_config_flags(sub, sampler=True):
    g = sub.add_argument_group("run configuration")
    g.add_argument("--config", metavar="FILE",
                   help="key = value file of run options")
    g.add_argument("--prior-lo", dest="prior_lo", type=float)
    g.add_argument("--prior-hi", dest="prior_hi", type=float)
    g.add_argument("--max-fan-in", dest="max_fan_in", type=int)
    g.add_argument("--distance", choices=("canberra", "euclidean",
                                          "manhattan", "mvt"))
    g.add_argument("--seed", type=int)
    if sampler:
        g.add_argument("--sigma-theta", dest="sigma_theta", type=float)
        g.add_argument("--epsilon-quantile", dest="epsilon_quantile",
                       type=float)
        g.add_argument("--calibration-networks",
                       dest="n_calibration_networks", type=int)
        g.add_argument("--chains", dest="n_chains", type=int)
        g.add_argument("--chain-length", dest="chain_length", type=int)
        g.add_argument("--thin", type=int)
        g.add_argument("--burnin-levels", dest="burnin_levels", type=int)
        g.add_argument("--burnin-iters", dest="burnin_iters_per_level",
                       type=int)
        g.add_argument("--min-burnin-acceptance",
                       dest="min_burnin_acceptance", type=float)
        g.add_argument("--retain-fraction", dest="retain_fraction",
                       type=float)
        g.add_argument("--rhat-cutoff", dest="rhat_cutoff", type=float)


def _outdir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommand bodies


def cmd_simulate(args) -> int:
    import dataclasses

    import numpy as np

    from . import io, simulators
    from .core import ExpressionData

    if args.genes != 11:
        raise ValueError(
            "generators are tied to the fixed 11-gene signalling network; "
            "--genes must be 11")
    out = _outdir(args)
    if args.model == "ode":
        reps = [simulators.generate_ode(args.timepoints, args.noise_sd,
                                        args.seed + 1000 * k)
                for k in range(args.replicates)]
    else:
        rng = np.random.default_rng([args.seed, 0xABC])
        theta1 = simulators.sample_raf_params(rng)
        theta2 = (simulators.sample_raf_params(rng)
                  if args.model in ("var2", "var_nl2") else None)
        spec = simulators.GeneratorSpec(
            kind=args.model, theta1=theta1, theta2=theta2,
            t_len=args.timepoints, noise_sd=args.noise_sd, seed=args.seed)
        # replicate seeds spaced out so the retry wrapper's sub-seeds
        # cannot collide across replicates
        reps = [simulators.generate_retry(
                    dataclasses.replace(spec, seed=args.seed + 1000 * k))
                for k in range(args.replicates)]
    data = ExpressionData(tuple(r.replicates[0] for r in reps),
                          labels=simulators.RAF_LABELS)

    paths = io.save_expression_replicates(data, out / "expression.csv")
    io.save_adjacency(simulators.RAF_LABELS,
                      simulators.raf_truth().adjacency, out / "truth.csv")
    for p in paths:
        print(f"wrote {p}")
    print(f"wrote {out / 'truth.csv'}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    import numpy as np

    from . import io, plots
    from .mcmc import calibrate_epsilon

    cfg = build_run_config(args)
    data = io.load_expression(args.data)
    _print_config(cfg)
    calib = calibrate_epsilon(data, cfg,
                              np.random.default_rng(
                                  np.random.SeedSequence(cfg.seed).spawn(1)[0]))
    print(f"epsilon ({cfg.epsilon_quantile:.4g} quantile of "
          f"{cfg.n_calibration_networks} prior distances) = {calib.epsilon!r}")
    if args.out_dir:
        out = _outdir(args)
        io.write_calibration_table(calib, out / "calibration.csv")
        plots.plot_calibration(calib, out / "calibration.png")
        print(f"wrote {out / 'calibration.csv'}")
        print(f"wrote {out / 'calibration.png'}")
    return EXIT_OK


def cmd_infer(args) -> int:
    import numpy as np

    from . import io, plots
    from .diagnostics import summarize
    from .mcmc import run_abc_net

    cfg = build_run_config(args)
    data = io.load_expression(args.data)
    out = _outdir(args)
    _print_config(cfg, epsilon=args.epsilon)

    with io.SampleWriter(out / "samples.csv") as sink:
        result = run_abc_net(data, cfg, epsilon=args.epsilon, sink=sink)

    io.persist_samples(result.retained, out / "retained.csv")
    summary = summarize(result.retained, cfg)
    io.write_summary_table(summary, out / "summary.csv", labels=data.labels)
    io.write_rhat_table(result.rhat, out / "rhat.csv", labels=data.labels)
    plots.plot_posterior_matrix(summary, out / "posterior.png",
                                labels=data.labels)
    plots.plot_rhat(result.rhat, cfg.rhat_cutoff, out / "rhat.png",
                    labels=data.labels)
    if result.calibration is not None:
        io.write_calibration_table(result.calibration, out / "calibration.csv")
        plots.plot_calibration(result.calibration, out / "calibration.png")

    print(f"epsilon = {result.epsilon!r}")
    for s in result.chain_stats:
        print(f"chain {s.chain_id}: burn-in acceptance "
              f"{s.burnin_acceptance[-1]:.4f} "
              f"({s.burnin_repeats} repeats), main acceptance "
              f"{s.main_acceptance:.4f}")
    for msg in result.aborted_chains:
        print(f"aborted: {msg}")
    finite = result.rhat[np.isfinite(result.rhat)]
    if finite.size:
        print(f"max R-hat = {finite.max():.4f} (cutoff {cfg.rhat_cutoff})")
    print(f"retained {len(result.retained)} samples")
    for name in ("samples.csv", "retained.csv", "summary.csv", "rhat.csv",
                 "posterior.png", "rhat.png"):
        print(f"wrote {out / name}")
    if not result.converged:
        print("warning: chains did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_diagnose(args) -> int:
    import numpy as np

    from . import io, plots
    from .diagnostics import gelman_rubin_matrix

    chains = io.group_by_chain(io.load_samples(args.samples))
    if not chains:
        raise ValueError(f"{args.samples}: no samples")
    p = chains[0][0].network.p
    rhat = gelman_rubin_matrix(chains, p)
    out = _outdir(args)
    io.write_rhat_table(rhat, out / "rhat.csv")
    plots.plot_rhat(rhat, args.rhat_cutoff, out / "rhat.png")
    finite = rhat[np.isfinite(rhat)]
    if finite.size:
        print(f"max R-hat = {finite.max():.4f} over {len(chains)} chains "
              f"(cutoff {args.rhat_cutoff})")
    print(f"wrote {out / 'rhat.csv'}")
    print(f"wrote {out / 'rhat.png'}")
    if not bool((rhat < args.rhat_cutoff).all()):
        print("warning: chains did not converge")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from . import io, plots
    from .diagnostics import summarize
    from .evaluate import roc_auc
    from .simulators import RAF_LABELS, raf_truth

    cfg = build_run_config(args)
    samples = io.load_samples(args.samples)
    if not samples:
        raise ValueError(f"{args.samples}: no samples")
    if args.truth == "raf":
        labels, truth = list(RAF_LABELS), raf_truth().adjacency
    else:
        labels, truth = io.load_adjacency(args.truth)
    summary = summarize(samples, cfg)
    report = roc_auc(summary, truth,
                     include_diagonal=not args.skip_diagonal)
    out = _outdir(args)
    io.write_summary_table(summary, out / "summary.csv", labels=labels)
    io.write_roc_table(report, out / "roc.csv")
    plots.plot_roc(report, out / "roc.png")
    plots.plot_posterior_matrix(summary, out / "posterior.png",
                                labels=labels, truth=truth)
    print(f"AUC = {report.auc:.4f} over {report.n_true_edges} edges and "
          f"{report.n_true_nonedges} non-edges")
    for name in ("summary.csv", "roc.csv", "roc.png", "posterior.png"):
        print(f"wrote {out / name}")
    return EXIT_OK


def cmd_study(args) -> int:
    from . import io, plots
    from .evaluate import StudyCell, run_study

    cfg = build_run_config(args)
    seeds = tuple(int(s) for s in args.seeds.split(","))
    cells = []
    for model in args.models.split(","):
        for noise in (float(x) for x in args.noise_sd.split(",")):
            for dist in args.distances.split(","):
                cells.append(StudyCell(
                    name=f"{model}/sd{noise:g}/{dist}",
                    generator_kind=model, noise_sd=noise,
                    t_len=args.timepoints,
                    cfg=cfg.replace(distance=dist), seeds=seeds))
    _print_config(cfg)
    print(f"{len(cells)} cells x {len(seeds)} seeds")

    def progress(res):
        print(f"  {res.cell} seed {res.seed}: "
              + (f"error: {res.error}" if res.error
                 else f"auc {res.auc:.3f}, max R-hat {res.max_rhat:.2f}"))

    results = run_study(cells, progress=progress)
    out = _outdir(args)
    io.write_study_table(results, out / "study.csv")
    plots.plot_study_auc(results, out / "study_auc.png")
    print(f"wrote {out / 'study.csv'}")
    print(f"wrote {out / 'study_auc.png'}")
    if any(r.error for r in results):
        return EXIT_FAILURE
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="abcnet",
        description="Likelihood-free Bayesian inference of gene regulatory "
                    "networks from time-series expression data.")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("simulate",
                        help="generate synthetic expression data")
    s.add_argument("--model", required=True,
                   choices=("var1", "var2", "var_nl1", "var_nl2", "ode"))
    s.add_argument("--genes", type=int, default=11)
    s.add_argument("--timepoints", type=int, default=20)
    s.add_argument("--noise-sd", dest="noise_sd", type=float, default=1.0)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out-dir", dest="out_dir", default=".")
    s.set_defaults(func=cmd_simulate)

    s = subs.add_parser("calibrate", help="pick the acceptance tolerance")
    s.add_argument("--data", nargs="+", required=True, metavar="FILE")
    s.add_argument("--out-dir", dest="out_dir")
    _add_config_flags(s)
    s.set_defaults(func=cmd_calibrate)

    s = subs.add_parser("infer", help="run the full sampling pipeline")
    s.add_argument("--data", nargs="+", required=True, metavar="FILE")
    s.add_argument("--out-dir", dest="out_dir", required=True)
    s.add_argument("--epsilon", type=float,
                   help="fixed tolerance (skips calibration)")
    _add_config_flags(s)
    s.set_defaults(func=cmd_infer)

    s = subs.add_parser("diagnose",
                        help="convergence check of a persisted sample file")
    s.add_argument("--samples", required=True, metavar="FILE")
    s.add_argument("--out-dir", dest="out_dir", required=True)
    s.add_argument("--rhat-cutoff", dest="rhat_cutoff", type=float,
                   default=1.2)
    s.set_defaults(func=cmd_diagnose)

    s = subs.add_parser("evaluate",
                        help="score retained samples against a truth network")
    s.add_argument("--samples", required=True, metavar="FILE")
    s.add_argument("--truth", required=True,
                   help="adjacency file, or 'raf' for the built-in network")
    s.add_argument("--out-dir", dest="out_dir", required=True)
    s.add_argument("--skip-diagonal", action="store_true",
                   help="exclude self-edges from the ROC")
    _add_config_flags(s, sampler=False)
    s.set_defaults(func=cmd_evaluate)

    s = subs.add_parser("study", help="run a simulation-study grid")
    s.add_argument("--models", default="var1",
                   help="comma-separated generator kinds")
    s.add_argument("--noise-sd", dest="noise_sd", default="1",
                   help="comma-separated noise levels")
    s.add_argument("--distances", default="euclidean",
                   help="comma-separated distance kinds")
    s.add_argument("--seeds", default="0,1,2")
    s.add_argument("--timepoints", type=int, default=20)
    s.add_argument("--out-dir", dest="out_dir", required=True)
    _add_config_flags(s)
    s.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    _apply_thread_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
