"""Compare the two manifold-weight solvers with the exact oracle.

Run with ``python demos/simplex_solvers.py``.
"""

import time

import numpy as np

from rmc.simplex import SimplexProblem, cda, emda, oracle


def main(n=200, seed=0):
    rng = np.random.default_rng(seed)
    gaps = {"emda": [], "cda": []}
    times = {"emda": 0.0, "cda": 0.0}
    for _ in range(n):
        q = int(rng.integers(2, 12))
        p = SimplexProblem(rng.uniform(0.0, 10.0, q), 10 ** rng.uniform(-2, 2))
        best = oracle(p).objective
        for name, solver in (("emda", lambda p: emda(p, max_iters=10**6, tol=1e-9)), ("cda", cda)):
            start = time.perf_counter()
            sol = solver(p)
            times[name] += time.perf_counter() - start
            gaps[name].append(sol.objective - best)
    for name in gaps:
        g = np.array(gaps[name])
        print(f"{name}: median gap {np.median(g):.1e}, worst {g.max():.1e}, {times[name]:.2f}s total")

    p = SimplexProblem([0.0, 1.0], 1.0)
    print("s = (0, 1), beta = 1:", np.round(emda(p, 10**5).mu, 4), np.round(cda(p).mu, 4))


if __name__ == "__main__":
    main()
