"""Compare the compiled and numpy simulation backends.

    python3 benchmarks/bench_simulate.py [--reps 10000] [--n 1000] [--size 10]

Times the bare kernel on pre-drawn uniforms, then the end-to-end
``additive_sums`` path, which includes Philox draws and chunking.
"""

import argparse
import time

import numpy as np

from mixbound._backend import BACKENDS
from mixbound.chains import generate_chain
from mixbound.montecarlo import _cumulative, additive_sums, draw_uniforms, stream_key


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=10_000)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--size", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    model = generate_chain("random_doeblin", {"size": args.size, "epsilon": 0.5}, 0)
    P = np.asarray(model.kernel)
    cum = _cumulative(P)
    init = _cumulative(np.full(args.size, 1.0 / args.size))
    F = model.f[:, None].astype(float)
    U = draw_uniforms(stream_key(0), 0, args.reps, args.n)
    cells = args.reps * args.n

    print(f"{args.reps} replications x {args.n} steps, {args.size} states")
    print(f"{'backend':<10}{'kernel s':>10}{'Mstep/s':>10}{'end-to-end s':>14}")
    ref = None
    for name, impl in sorted(BACKENDS.items()):
        t_kernel = best_of(lambda: impl.simulate_sums(cum, init, U, F), args.repeat)
        t_full = best_of(lambda: additive_sums(model, args.n, args.reps, 0, model.f, backend=name),
                         args.repeat)
        out = impl.simulate_sums(cum, init, U, F)
        if ref is None:
            ref = out
        same = "identical" if np.array_equal(out, ref) else "MISMATCH"
        print(f"{name:<10}{t_kernel:>10.3f}{cells / t_kernel / 1e6:>10.1f}{t_full:>14.3f}  {same}")
    if "compiled" not in BACKENDS:
        print("compiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
