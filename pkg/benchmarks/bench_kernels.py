"""Time the traversal-time kernels with numba and with the numpy fallback.

The switch is read at import, so each variant runs in its own interpreter:

    python benchmarks/bench_kernels.py            # both, side by side
    python benchmarks/bench_kernels.py --n 50000
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    L = rng.uniform(50, 2000, n)
    vmax = rng.uniform(5, 40, n)
    a = rng.uniform(0.3, 1.5, n)
    b = rng.uniform(0.3, 1.5, n)
    # keep v1 -> v2 reachable on L so every row is a real profile
    v1 = rng.uniform(0, 1, n) * np.minimum(vmax, np.sqrt(2 * a * L))
    v2 = np.minimum(rng.uniform(0, 1, n) * vmax, np.sqrt(v1 ** 2 + 2 * a * L))
    lam = rng.uniform(0, 1, n) * L
    mu = lam + rng.uniform(0, 1, n) * (L - lam)
    vf = np.minimum(0.5, 0.5 * vmax)
    return L, v1, v2, lam, mu, vmax, a, b, vf


def child(n, repeats):
    from mbroute import _kernels
    from mbroute.config import SolveConfig
    from mbroute.generator import generate_instance
    from mbroute.velocity_graph import build_extended_graph

    args = _inputs(n)
    t0 = time.perf_counter()
    _kernels.interval_times(_kernels.FASTEST, *[x[:10] for x in args])
    warmup = time.perf_counter() - t0

    out = {"numba": _kernels.NUMBA_ENABLED, "warmup_s": warmup}
    for name, mode in (("fastest", _kernels.FASTEST), ("slowest", _kernels.SLOWEST)):
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = _kernels.interval_times(mode, *args)
            best = min(best, time.perf_counter() - t0)
        out[f"{name}_s"] = best
        out[f"{name}_checksum"] = float(np.sum(res[np.isfinite(res)]))

    inst = generate_instance(3, 10, "corridor", 1500.0)
    t0 = time.perf_counter()
    for tr in inst.train.values():
        build_extended_graph(tr, inst.network, SolveConfig().delta_v)
    out["graphs_s"] = time.perf_counter() - t0
    print(json.dumps(out))


def run(flag, n, repeats):
    env = dict(os.environ, MBR_DISABLE_NUMBA=flag)
    proc = subprocess.run([sys.executable, __file__, "--child", "--n", str(n), "--repeats", str(repeats)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="profiles per batch")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    opts = ap.parse_args()
    if opts.child:
        child(opts.n, opts.repeats)
        return

    jit = run("0", opts.n, opts.repeats)
    ref = run("1", opts.n, opts.repeats)
    print(f"{opts.n} profiles per batch, best of {opts.repeats}")
    print(f"{'kernel':<22}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for key in ("fastest_s", "slowest_s", "graphs_s"):
        print(f"{key[:-2]:<22}{jit[key]:>11.4f}s{ref[key]:>11.4f}s{ref[key] / jit[key]:>9.1f}x")
    print(f"numba first call (compile or cache load): {jit['warmup_s']:.2f} s")
    for key in ("fastest_checksum", "slowest_checksum"):
        rel = abs(jit[key] - ref[key]) / max(1.0, abs(ref[key]))
        print(f"{key}: numba {jit[key]:.6f} numpy {ref[key]:.6f} rel diff {rel:.1e}")


if __name__ == "__main__":
    main()
