"""Repeated-run benchmark harness.

An experiment is the cartesian product of algorithms, graph-weight grid
points and repeats.  Every run is keyed by ``(algorithm, alpha, repeat)`` and
seeded with ``seed + repeat``, so results can be computed in any order (or in
parallel) and merged into identical report files.

Report files (tab-separated, ``#``-free header row, floats in shortest
round-trip form):

``runs.tsv``
    ``algorithm dataset alpha beta repeat seed status ac nmi n_iter``; one row
    per fit.  ``alpha`` is ``-`` for algorithms without a graph weight.
``cells.tsv``
    ``algorithm dataset alpha beta n_ok n_failed ac_mean ac_std nmi_mean
    nmi_std best``; ``best`` is 1 on the grid point with the highest mean AC
    per algorithm (ties to the smaller alpha).
``summary.txt``
    The best cell per algorithm as an aligned text table.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from rmc import baselines
from rmc.graphs import knn_affinity, laplacian
from rmc.ingest import Dataset, load_matrix, planted_coclusters, unit_normalize
from rmc.metrics import accuracy, nmi
from rmc.solver import ClusteringResult, RmcConfig, fit, fit_single_manifold

log = logging.getLogger(__name__)

ALPHA_GRID = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 500.0, 1500.0)
GRAPH_FREE = ("km", "nmf")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of a benchmark.

    ``dataset`` is either ``{"path": ..., "format": ..., "labels": ...}`` or
    ``{"synthetic": {n1, n2, c1, c2, noise, seed, kind}}``.  ``beta=None``
    ties beta to ``0.1 * alpha``.
    """

    dataset: dict = field(default_factory=lambda: {"synthetic": {}})
    algorithms: tuple = ("rmc-e", "rmc-c")
    alpha_grid: tuple = ALPHA_GRID
    beta: float | None = None
    c1: int | None = None
    c2: int | None = None
    k: int = 5
    repeats: int = 20
    seed: int = 0
    normalize: str = "samples"
    max_outer_iters: int = 500
    output_dir: str = "results"
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if self.repeats < 1:
            raise ValueError("repeats must be at least 1")
        if not self.alpha_grid or not self.algorithms:
            raise ValueError("algorithm list and alpha grid must be non-empty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ValueError(f"unknown algorithms {sorted(unknown)}; choose from {sorted(ALGORITHMS)}")
        if self.normalize not in ("samples", "features", "none"):
            raise ValueError("normalize must be samples, features or none")

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    spec = dict(cfg.dataset)
    if "synthetic" in spec:
        params = {"n1": 120, "n2": 100, "c1": 3, "c2": 3, "noise": 0.1, "seed": 0}
        params.update(spec["synthetic"])
        d = planted_coclusters(**params)
    else:
        d = load_matrix(spec["path"], spec.get("format", "matrix-market"), spec.get("labels"), spec.get("name"))
    if d.truth_labels is None:
        raise ValueError("benchmark datasets need ground-truth sample labels")
    if cfg.normalize != "none":
        d = unit_normalize(d, cfg.normalize)
    return d


def cluster_counts(cfg: ExperimentConfig, d: Dataset) -> tuple[int, int]:
    c2 = cfg.c2 or int(np.unique(d.truth_labels).size)
    c1 = cfg.c1 or c2
    return c1, c2


# Each runner maps (dataset, c1, c2, alpha, beta, k, seed, cfg) to sample labels.
def _run_km(d, c1, c2, alpha, beta, k, seed, cfg):
    return baselines.kmeans(d.matrix.r12.T, c2, seed=seed).labels, 0


def _run_nmf(d, c1, c2, alpha, beta, k, seed, cfg):
    _, v, trace = baselines.nmf(d.matrix.r12, c2, seed=seed)
    return np.argmax(v, axis=1), len(trace)


def _run_gnmf(d, c1, c2, alpha, beta, k, seed, cfg):
    lap = laplacian(knn_affinity(d.matrix.r12.T, k, "binary").w)
    _, v, trace = baselines.gnmf(d.matrix.r12, c2, lap, lam=alpha, seed=seed)
    return np.argmax(v, axis=1), len(trace)


def _rmc_config(c1, c2, alpha, beta, k, seed, cfg, solver="emda"):
    return RmcConfig(
        c1=c1, c2=c2, alpha=alpha, beta=beta, k_neighbors=k, seed=seed,
        mu_solver=solver, max_outer_iters=cfg.max_outer_iters,
    )


def _run_snmtf(d, c1, c2, alpha, beta, k, seed, cfg):
    res = fit_single_manifold(d.matrix, _rmc_config(c1, c2, alpha, beta, k, seed, cfg))
    return res.sample_labels, res.n_iter


def _run_rmc(solver):
    def run(d, c1, c2, alpha, beta, k, seed, cfg):
        res = fit(d.matrix, _rmc_config(c1, c2, alpha, beta, k, seed, cfg, solver))
        return res.sample_labels, res.n_iter

    return run


ALGORITHMS = {
    "km": _run_km,
    "nmf": _run_nmf,
    "gnmf": _run_gnmf,
    "snmtf": _run_snmtf,
    "rmc-e": _run_rmc("emda"),
    "rmc-c": _run_rmc("cda"),
}


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    alpha: float | None
    beta: float | None
    repeat: int
    seed: int
    status: str
    ac: float = math.nan
    nmi: float = math.nan
    n_iter: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def plan_runs(cfg: ExperimentConfig) -> list:
    """All ``(algorithm, alpha, beta, repeat, seed)`` keys in report order."""
    tasks = []
    for algo in cfg.algorithms:
        grid = (None,) if algo in GRAPH_FREE else cfg.alpha_grid
        for alpha in grid:
            beta = None if alpha is None else (cfg.beta if cfg.beta is not None else 0.1 * alpha)
            for rep in range(cfg.repeats):
                tasks.append((algo, alpha, beta, rep, cfg.seed + rep))
    return tasks


def execute_run(task, d: Dataset, cfg: ExperimentConfig) -> RunRecord:
    algo, alpha, beta, rep, seed = task
    c1, c2 = cluster_counts(cfg, d)
    try:
        labels, n_iter = ALGORITHMS[algo](d, c1, c2, alpha, beta, cfg.k, seed, cfg)
    except Exception as exc:  # a failed cell is reported, not fatal
        msg = " ".join(f"{type(exc).__name__}: {exc}".split())
        log.warning("run %s failed: %s", task, msg)
        return RunRecord(algo, alpha, beta, rep, seed, f"failed: {msg}")
    return RunRecord(
        algo, alpha, beta, rep, seed, "ok",
        accuracy(d.truth_labels, labels), nmi(d.truth_labels, labels), int(n_iter),
    )


@dataclass(frozen=True)
class CellSummary:
    algorithm: str
    alpha: float | None
    beta: float | None
    n_ok: int
    n_failed: int
    ac_mean: float
    ac_std: float
    nmi_mean: float
    nmi_std: float
    best: bool = False

    @property
    def ok(self) -> bool:
        return self.n_failed == 0


def summarize(records) -> list:
    cells = {}
    for rec in records:
        cells.setdefault((rec.algorithm, rec.alpha, rec.beta), []).append(rec)
    out = []
    for (algo, alpha, beta), recs in cells.items():
        good = [r for r in recs if r.ok]
        ac = np.array([r.ac for r in good])
        nm = np.array([r.nmi for r in good])
        stats = (
            (float(ac.mean()), float(ac.std()), float(nm.mean()), float(nm.std()))
            if good else (math.nan,) * 4
        )
        out.append(CellSummary(algo, alpha, beta, len(good), len(recs) - len(good), *stats))
    # flag the best grid point per algorithm; first occurrence (smallest alpha) wins ties
    best = {}
    for i, cell in enumerate(out):
        if cell.n_ok == 0:
            continue
        j = best.get(cell.algorithm)
        if j is None or cell.ac_mean > out[j].ac_mean:
            best[cell.algorithm] = i
    return [replace(c, best=(best.get(c.algorithm) == i)) for i, c in enumerate(out)]


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _write_tsv(path: Path, header, rows) -> None:
    lines = ["\t".join(header)]
    lines += ["\t".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def human_table(dataset: str, cells) -> str:
    rows = [(c.algorithm, _fmt(c.alpha), f"{c.ac_mean:.4f} ± {c.ac_std:.4f}", f"{c.nmi_mean:.4f} ± {c.nmi_std:.4f}",
             f"{c.n_failed}") for c in cells if c.best or c.n_ok == 0]
    header = ("algorithm", "alpha", "AC", "NMI", "failed")
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    line = lambda vals: "  ".join(v.ljust(w) for v, w in zip(vals, widths)).rstrip()
    body = [f"dataset: {dataset}", line(header), line(["-" * w for w in widths])]
    body += [line(r) for r in rows]
    return "\n".join(body) + "\n"


@dataclass
class ExperimentReport:
    records: list
    cells: list
    files: dict

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.cells)


def _run_all(tasks, d, cfg) -> list:
    if cfg.n_jobs == 1 or len(tasks) < 2:
        records = [execute_run(t, d, cfg) for t in tasks]
    else:
        from joblib import Parallel, delayed

        records = Parallel(n_jobs=cfg.n_jobs)(delayed(execute_run)(t, d, cfg) for t in tasks)
    order = {t: i for i, t in enumerate(tasks)}
    return sorted(records, key=lambda r: order[(r.algorithm, r.alpha, r.beta, r.repeat, r.seed)])


def run_experiment(cfg: ExperimentConfig, dataset: Dataset | None = None) -> ExperimentReport:
    """Run every (algorithm, alpha, repeat) cell and write the report files."""
    d = dataset if dataset is not None else load_dataset(cfg)
    records = _run_all(plan_runs(cfg), d, cfg)
    cells = summarize(records)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {"runs": out / "runs.tsv", "cells": out / "cells.tsv", "summary": out / "summary.txt",
             "config": out / "config.json"}
    _write_tsv(
        files["runs"],
        ("algorithm", "dataset", "alpha", "beta", "repeat", "seed", "status", "ac", "nmi", "n_iter"),
        [(r.algorithm, d.name, r.alpha, r.beta, r.repeat, r.seed, r.status, r.ac, r.nmi, r.n_iter) for r in records],
    )
    _write_tsv(
        files["cells"],
        ("algorithm", "dataset", "alpha", "beta", "n_ok", "n_failed", "ac_mean", "ac_std", "nmi_mean", "nmi_std", "best"),
        [(c.algorithm, d.name, c.alpha, c.beta, c.n_ok, c.n_failed, c.ac_mean, c.ac_std, c.nmi_mean, c.nmi_std,
          int(c.best)) for c in cells],
    )
    files["summary"].write_text(human_table(d.name, cells))
    files["config"].write_text(cfg.to_json() + "\n")
    return ExperimentReport(records, cells, files)


def sweep_alpha(cfg: ExperimentConfig, dataset: Dataset | None = None, png: bool = False) -> ExperimentReport:
    """AC and NMI versus alpha, with beta locked to ``0.1 * alpha``.

    Writes ``curve.tsv`` (``algorithm dataset alpha ac_mean ac_std nmi_mean
    nmi_std``) next to the regular report, and ``curve.png`` when ``png``.
    """
    cfg = replace(cfg, beta=None, algorithms=tuple(a for a in cfg.algorithms if a not in GRAPH_FREE))
    if not cfg.algorithms:
        raise ValueError("sweep needs at least one graph-regularized algorithm")
    d = dataset if dataset is not None else load_dataset(cfg)
    report = run_experiment(cfg, d)
    out = Path(cfg.output_dir)
    report.files["curve"] = out / "curve.tsv"
    _write_tsv(
        report.files["curve"],
        ("algorithm", "dataset", "alpha", "ac_mean", "ac_std", "nmi_mean", "nmi_std"),
        [(c.algorithm, d.name, c.alpha, c.ac_mean, c.ac_std, c.nmi_mean, c.nmi_std) for c in report.cells],
    )
    if png:
        report.files["curve_png"] = out / "curve.png"
        _plot_curves(report.cells, report.files["curve_png"])
    return report


def _plot_curves(cells, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    for algo in dict.fromkeys(c.algorithm for c in cells):
        mine = [c for c in cells if c.algorithm == algo]
        alphas = [c.alpha for c in mine]
        axes[0].semilogx(alphas, [c.ac_mean for c in mine], marker="o", label=algo)
        axes[1].semilogx(alphas, [c.nmi_mean for c in mine], marker="o", label=algo)
    for ax, name in zip(axes, ("AC", "NMI")):
        ax.set_xlabel("alpha")
        ax.set_ylabel(name)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def export_mu_histogram(result: ClusteringResult, path, png=None) -> Path:
    """Write the manifold coefficients as ``index label mu`` rows (plus an optional bar chart)."""
    mu = np.asarray(result.mu, dtype=np.float64)
    labels = list(result.mu_labels) or [f"candidate_{i}" for i in range(mu.size)]
    if len(labels) != mu.size:
        raise ValueError(f"{len(labels)} labels for {mu.size} coefficients")
    path = Path(path)
    _write_tsv(path, ("index", "label", "mu"), [(i, lab, float(m)) for i, (lab, m) in enumerate(zip(labels, mu))])
    if png is not None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 3))
        ax.bar(range(mu.size), mu)
        ax.set_xticks(range(mu.size), labels, rotation=60, ha="right", fontsize=7)
        ax.set_ylabel("mu")
        fig.tight_layout()
        fig.savefig(png, metadata={"Software": None})
        plt.close(fig)
    return path
