"""Time the hot kernels under both backends.

Each backend runs in its own interpreter because the switch is read at
import time. Usage::

    python3 benchmarks/bench_kernels.py [--nodes 3000] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from ftnet import metrics, plfit
from ftnet._accel import backend
from ftnet.nullmodel import NullSpec, gen_er
from ftnet.simx import SimConfig, run_sim

nodes, repeat = int(sys.argv[1]), int(sys.argv[2])
g = gen_er(NullSpec(nodes, nodes * 5, seed=1))
sample = plfit.TailSample(plfit.sample_power_law(20_000, 2.5, 1, "discrete",
                                                 np.random.default_rng(0)))
cases = {
    "bfs_paths": lambda: metrics.path_stats(g, 500, seed=0).L,
    "brandes": lambda: float(metrics.betweenness_all(g, 200, seed=0).values.sum()),
    "triangles": lambda: metrics.clustering_global(g),
    "xmin_scan": lambda: plfit.select_xmin(sample).exponent,
    "simulate": lambda: len(run_sim(SimConfig(agents=1500, ticks_per_day=400, days=2))),
}
out = {"backend": backend()}
for name, fn in cases.items():
    value = fn()  # warm-up, includes compilation
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out[name] = {"seconds": best, "value": float(value)}
print(json.dumps(out))
"""


def run_backend(flag, nodes, repeat):
    env = {**os.environ, "FTNET_NUMBA": flag}
    res = subprocess.run([sys.executable, "-c", WORKER, str(nodes), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=3000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    fast = run_backend("1", args.nodes, args.repeat)
    slow = run_backend("0", args.nodes, args.repeat)
    print(f"{'kernel':<12}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  same result")
    for name in fast:
        if name == "backend":
            continue
        a, b = fast[name], slow[name]
        same = abs(a["value"] - b["value"]) <= 1e-9 * max(1.0, abs(a["value"]))
        print(f"{name:<12}{a['seconds']:>10.3f}{b['seconds']:>10.3f}"
              f"{b['seconds'] / a['seconds']:>8.1f}x  {same}")


if __name__ == "__main__":
    main()
