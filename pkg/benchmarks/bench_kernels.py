"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Per-kernel timings use both backends in-process.  The end-to-end step
timing runs each backend in its own interpreter, since the backend is
fixed at import time (HALFFLOW_PURE_PYTHON=1 forces the fallback).
"""
import argparse
import json
import os
import subprocess
import sys
import timeit
from pathlib import Path

import numpy as np

from halfflow import kernels

STEP_SNIPPET = """
import json, timeit
from pathlib import Path
from halfflow import kernels
from halfflow.cli import build_settings, read_config
from halfflow.flow import cfl_timestep, step

s = build_settings(read_config(Path({config!r})))
cfg, state = s.flow, s.initial
dt = cfl_timestep(state.u, state.a, cfg.dt_cfl)
t = min(timeit.repeat(lambda: step(state, dt, cfg), number=5, repeat={repeat})) / 5
print(json.dumps({{"backend": kernels.BACKEND, "seconds": t}}))
"""
CONFIG = Path(__file__).resolve().parents[1] / "configs" / "catenoid.ini"


def kernel_cases(rng, m):
    p = np.ascontiguousarray(rng.standard_normal((m, 3)) * 2.0)
    w = np.ascontiguousarray(rng.standard_normal((m, 3)))
    ns, M, support = 64, 1024, 8
    dens = np.ascontiguousarray(rng.random((ns, M)))
    weights = np.zeros((ns, M))
    for o in range(-support, support + 1):
        weights[:, o % M] = rng.random(ns)
    return {
        "sphere_nearest": lambda b: b.sphere_nearest(p, 1.0),
        "sphere_tangent": lambda b: b.sphere_tangent(p, w),
        "circle_pair_nearest": lambda b: b.circle_pair_nearest(p, 1.0, 0.5),
        "circle_pair_tangent": lambda b: b.circle_pair_tangent(p, w),
        "correlate_circular": lambda b: b.correlate_circular(dens, weights, support),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=512, help="grid points per kernel call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = kernels.backends()
    rng = np.random.default_rng(1)
    cases = kernel_cases(rng, args.points)
    names = sorted(backends)
    print(f"{'kernel':<22}" + "".join(f"{n + ' [us]':>16}" for n in names) + f"{'speed-up':>10}")
    for name, fn in cases.items():
        times = {}
        for b in names:
            number = 20
            times[b] = min(timeit.repeat(lambda: fn(backends[b]), number=number, repeat=args.repeat)) / number
        ratio = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<22}" + "".join(f"{times[b] * 1e6:>16.1f}" for b in names) + f"{ratio:>10.2f}")

    print(f"\nfull RK4 step + reprojection, {CONFIG.name}")
    code = STEP_SNIPPET.format(config=str(CONFIG), repeat=args.repeat)
    results = {}
    for force in ("0", "1"):
        env = dict(os.environ, HALFFLOW_PURE_PYTHON=force)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        rec = json.loads(out.stdout)
        results[rec["backend"]] = rec["seconds"]
    for b, s in sorted(results.items()):
        print(f"  {b:<8} {s * 1e3:8.2f} ms/step")
    if "cython" not in backends:
        print("(compiled extension not built; only the fallback was timed)")


if __name__ == "__main__":
    main()
