"""Command-line entry point (``rmc``).

Subcommands
-----------
fit            one co-clustering run; writes labels, mu and a JSON summary
bench          repeated runs over algorithms x alpha grid (see rmc.harness)
sweep-alpha    AC/NMI curves against alpha with beta = 0.1 alpha
mu-hist        one run of the multi-manifold solver, exporting the mu histogram
gen-synthetic  write a planted co-cluster matrix (matrix-market) and its labels

``bench`` and ``sweep-alpha`` read an optional JSON config (``--config``);
command-line flags override its fields.  Exit status is 0 only when every
cell succeeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from rmc.harness import ALGORITHMS, ExperimentConfig, export_mu_histogram, run_experiment, sweep_alpha
from rmc.ingest import FORMATS, load_matrix, planted_coclusters, save_matrix, unit_normalize
from rmc.metrics import accuracy, nmi
from rmc.solver import RmcConfig, fit


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="input matrix file")
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("--labels", help="sample label file (one integer per line)")
    p.add_argument("--synthetic-seed", type=int, default=None, help="use a planted 120x100 3x3 instance")
    p.add_argument("--normalize", choices=("samples", "features", "none"), default=None)


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c1", type=int)
    p.add_argument("--c2", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")


def _dataset_spec(args) -> dict | None:
    if args.data:
        return {"path": args.data, "format": args.format or "matrix-market", "labels": args.labels}
    if args.synthetic_seed is not None:
        return {"synthetic": {"seed": args.synthetic_seed}}
    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmc", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("fit", "mu-hist"):
        p = sub.add_parser(name)
        _data_args(p)
        _model_args(p)
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--solver", choices=("emda", "cda"), default="emda")
        if name == "mu-hist":
            p.add_argument("--png", action="store_true", help="also render a bar chart")

    for name in ("bench", "sweep-alpha"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment config")
        _data_args(p)
        _model_args(p)
        p.add_argument("--algorithm", action="append", choices=sorted(ALGORITHMS), help="repeatable")
        p.add_argument("--alpha", type=float, action="append", help="repeatable; replaces the grid")
        p.add_argument("--repeats", type=int)
        p.add_argument("--jobs", type=int)
        if name == "sweep-alpha":
            p.add_argument("--png", action="store_true", help="also render the curves")

    p = sub.add_parser("gen-synthetic")
    p.add_argument("--n1", type=int, default=120)
    p.add_argument("--n2", type=int, default=100)
    p.add_argument("--c1", type=int, default=3)
    p.add_argument("--c2", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--kind", choices=("bernoulli", "gaussian"), default="bernoulli")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="matrix-market output path")
    return parser


def _experiment_config(args) -> ExperimentConfig:
    overrides = {
        "dataset": _dataset_spec(args),
        "normalize": args.normalize,
        "c1": args.c1,
        "c2": args.c2,
        "beta": args.beta,
        "k": args.k,
        "seed": args.seed,
        "output_dir": args.out,
        "algorithms": tuple(args.algorithm) if args.algorithm else None,
        "alpha_grid": tuple(args.alpha) if args.alpha else None,
        "repeats": args.repeats,
        "n_jobs": args.jobs,
    }
    if args.config:
        return ExperimentConfig.from_json(args.config, **overrides)
    return ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})


def _single_fit(args):
    spec = _dataset_spec(args) or {"synthetic": {"seed": 0}}
    if "synthetic" in spec:
        d = planted_coclusters(120, 100, 3, 3, 0.1, spec["synthetic"]["seed"])
    else:
        d = load_matrix(spec["path"], spec["format"], spec["labels"])
    if (args.normalize or "samples") != "none":
        d = unit_normalize(d, args.normalize or "samples")
    c2 = args.c2 or (int(np.unique(d.truth_labels).size) if d.truth_labels is not None else None)
    if c2 is None:
        raise SystemExit("--c2 is required when the data carry no labels")
    cfg = RmcConfig(
        c1=args.c1 or c2, c2=c2, alpha=args.alpha, beta=args.beta,
        k_neighbors=args.k or 5, seed=args.seed or 0, mu_solver=args.solver,
    )
    return d, fit(d.matrix, cfg)


def cmd_fit(args) -> int:
    d, res = _single_fit(args)
    out = Path(args.out or "fit_out")
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "sample_labels.txt", res.sample_labels, fmt="%d")
    np.savetxt(out / "feature_labels.txt", res.feature_labels, fmt="%d")
    export_mu_histogram(res, out / "mu.tsv")
    summary = {
        "dataset": d.name,
        "n_iter": res.n_iter,
        "converged": res.converged,
        "objective": res.trace[-1],
        "mu": [float(m) for m in res.mu],
    }
    if d.truth_labels is not None:
        summary["ac"] = accuracy(d.truth_labels, res.sample_labels)
        summary["nmi"] = nmi(d.truth_labels, res.sample_labels)
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return 0


def cmd_mu_hist(args) -> int:
    _, res = _single_fit(args)
    out = Path(args.out or "mu_hist_out")
    out.mkdir(parents=True, exist_ok=True)
    export_mu_histogram(res, out / "mu.tsv", png=out / "mu.png" if args.png else None)
    print((out / "mu.tsv").read_text(), end="")
    return 0


def cmd_bench(args) -> int:
    report = run_experiment(_experiment_config(args))
    print(report.files["summary"].read_text(), end="")
    return 0 if report.ok else 1


def cmd_sweep(args) -> int:
    report = sweep_alpha(_experiment_config(args), png=args.png)
    print(report.files["curve"].read_text(), end="")
    return 0 if report.ok else 1


def cmd_gen(args) -> int:
    d = planted_coclusters(args.n1, args.n2, args.c1, args.c2, args.noise, args.seed, args.kind)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    labels = out.with_suffix(".labels")
    save_matrix(d, out, "matrix-market", labels_path=labels)
    print(f"wrote {out} and {labels}")
    return 0


COMMANDS = {"fit": cmd_fit, "mu-hist": cmd_mu_hist, "bench": cmd_bench, "sweep-alpha": cmd_sweep,
            "gen-synthetic": cmd_gen}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
