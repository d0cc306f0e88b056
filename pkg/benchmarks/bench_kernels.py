"""Time the hot kernels under numba and under the numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time (LISTLAB_NO_NUMBA=1 selects numpy).

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, time, sys
import numpy as np
from listlab import _accel, kernels, lattice as lt, constellations as ics
from listlab.geometry import worst_case_list_size

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
L = lt.Lattice(rng.standard_normal((6, 6)) + 3 * np.eye(6))
X = rng.standard_normal((4000, 4))
Y = rng.standard_normal((2000, 4))
th = rng.random((2000, 2))
ic = ics.sample_ic(8.0, 200, 4, rng)
xs = rng.integers(0, 200, 20000)
Z = rng.standard_normal((20000, 4))
P = rng.standard_normal((40, 2))

cases = {
    "enumerate (n=6)": lambda: lt.enumerate_coeffs(L, np.zeros(6), 4.0),
    "count_within 4000x2000": lambda: kernels.count_within(X, Y, 1.0),
    "rogers_counts 2000 lattices": lambda: kernels.rogers_counts(th, 0.1, np.zeros(3), 1.0),
    "awgn scan 2e4 draws": lambda: ics.awgn_errors(ic, xs, Z, "scan"),
    "list size, 40 points": lambda: worst_case_list_size(P, 0.7),
}
res = {}
for name, f in cases.items():
    f()                                   # warm-up, includes JIT compile
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        f()
        best = min(best, time.perf_counter() - t)
    res[name] = best
print(json.dumps({"backend": _accel.backend(), "times": res}))
"""


def run_backend(disable, repeat):
    env = dict(os.environ)
    env.pop("LISTLAB_NO_NUMBA", None)
    if disable:
        env["LISTLAB_NO_NUMBA"] = "1"
    p = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env,
                       capture_output=True, text=True, check=True)
    return json.loads(p.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    fast = run_backend(False, a.repeat)
    slow = run_backend(True, a.repeat)
    print(f"{'kernel':32s} {fast['backend']:>10s} {slow['backend']:>10s} {'speedup':>8s}")
    for k, tf in fast["times"].items():
        ts = slow["times"][k]
        print(f"{k:32s} {tf * 1e3:9.2f}ms {ts * 1e3:9.2f}ms {ts / tf:7.1f}x")


if __name__ == "__main__":
    main()
