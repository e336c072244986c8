"""Time the compiled and pure-Python kernels on the same scenario batch.

    python3 benchmarks/bench_kernels.py --scenarios 200000 --repeat 5
"""

import argparse
import time

import numpy as np

from ruinopt.kernels import available_backends
from ruinopt.model import ClaimDistribution, ModelParams, sample_batch
from ruinopt.streams import RandomStream


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenarios", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    model = ModelParams(40.0, 0.03, 200.0, 5.0, 0.08, 0.15, ClaimDistribution(5, 3))
    batch = sample_batch(model, RandomStream(args.seed, "bench"), args.scenarios)
    off, t, x = batch.offsets, batch.jump_times, batch.claim_sizes
    drift = model.c1 - 0.5 * model.c2
    jobs = {
        "inflated_totals": lambda k: k.inflated_totals(off, t, x, model.r),
        "malliavin_sums": lambda k: k.malliavin_sums(off, t, x, model.r, 0.125, model.horizon_T),
        "path_ruin": lambda k: k.path_ruin(off, t, x, model.r, model.u, drift, 0.5),
        "inverse_w4_sums": lambda k: k.inverse_w4_sums(off, t, 0.125, model.horizon_T),
    }
    backends = available_backends()
    print(f"{args.scenarios} scenarios, {t.size} claims, best of {args.repeat}")
    header = f"{'kernel':<18}" + "".join(f"{name:>12}" for name in backends)
    if "cython" in backends:
        header += f"{'speedup':>10}"
    print(header)
    for job, fn in jobs.items():
        results = {name: best_of(lambda: fn(mod), args.repeat) for name, mod in backends.items()}
        row = f"{job:<18}" + "".join(f"{results[n] * 1e3:>10.1f}ms" for n in backends)
        if "cython" in backends:
            row += f"{results['python'] / results['cython']:>9.1f}x"
        print(row)
        if "cython" in backends:
            a, b = fn(backends["python"]), fn(backends["cython"])
            assert np.allclose(a, b, rtol=1e-12, atol=1e-12), job


if __name__ == "__main__":
    main()
