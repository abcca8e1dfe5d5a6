"""Time the compiled campaign kernel against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--users 200] [--items 4] [--samples 200]
"""
import argparse
import time

import numpy as np

from imdpp import kernels
from imdpp.diffusion import sample_keys, sample_values, seed_array
from imdpp.harness import SyntheticSpec, generate_synthetic


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--users", type=int, default=200)
    ap.add_argument("--items", type=int, default=4)
    ap.add_argument("--density", type=float, default=0.03)
    ap.add_argument("--T", type=int, default=3)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    world = generate_synthetic(SyntheticSpec(users=args.users, items=args.items,
                                             edge_density=args.density, seed=1)).world()
    rng = np.random.default_rng(0)
    seeds = [(int(u), int(x), int(rng.integers(1, args.T + 1)))
             for u, x in zip(rng.choice(world.n, 10), rng.integers(0, world.k, 10))]
    arr = seed_array(world, seeds, args.T)
    keys = sample_keys(0, args.samples)

    py_t, py_out = best_of(lambda: sample_values(world, arr, args.T, keys, backend="python"),
                           args.repeat)
    print(f"python  {py_t * 1e3:9.1f} ms  mean={py_out[0].mean():.4f}")
    if not kernels.HAVE_COMPILED:
        print("cython  unavailable (extension not built)")
        return
    c_t, c_out = best_of(lambda: sample_values(world, arr, args.T, keys, backend="cython"),
                         args.repeat)
    same = np.array_equal(py_out[0], c_out[0])
    print(f"cython  {c_t * 1e3:9.1f} ms  mean={c_out[0].mean():.4f}")
    print(f"speedup {py_t / c_t:.1f}x  identical_samples={same}")


if __name__ == "__main__":
    main()
