"""Show how beta moves the learned manifold weights.

Small beta concentrates the weight on a few candidate graphs, a large beta
spreads it evenly.  Run with ``python demos/mu_histogram.py``.
"""

from rmc import RmcConfig, fit
from rmc.ingest import planted_coclusters, unit_normalize


def main():
    d = unit_normalize(planted_coclusters(60, 50, 3, 3, noise=0.2, seed=1), "samples")
    for beta in (1e-3, 0.1, 1e3):
        res = fit(d.matrix, RmcConfig(3, 3, alpha=1.0, beta=beta))
        print(f"beta = {beta:g}")
        for label, w in zip(res.mu_labels, res.mu):
            print(f"  {label:16s} {w:7.4f} {'#' * int(round(40 * w))}")


if __name__ == "__main__":
    main()
