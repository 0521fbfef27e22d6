"""Sweep the regularization weight over the default grid.

Writes ``curve.tsv`` (and ``curve.png`` when matplotlib is available) under
``demo_output/alpha_sweep``.  Run with ``python demos/alpha_sweep.py``.
"""

import importlib.util

from rmc.harness import ExperimentConfig, sweep_alpha


def main():
    cfg = ExperimentConfig(
        dataset={"synthetic": {"n1": 60, "n2": 50, "noise": 0.3}},
        algorithms=("rmc-e", "rmc-c"),
        repeats=3,
        output_dir="demo_output/alpha_sweep",
    )
    png = importlib.util.find_spec("matplotlib") is not None
    report = sweep_alpha(cfg, png=png)
    print(report.files["curve"].read_text())


if __name__ == "__main__":
    main()
