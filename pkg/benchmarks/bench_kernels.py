"""Time the compiled kernels against the numpy fallback on representative sizes.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from monolab import kernels


def cases(rng):
    g = rng.normal(size=(201, 201))
    s = np.linspace(-10, 10, 201)
    sx, sxs = rng.normal(size=(400, 2)), rng.normal(size=(400, 2))
    px, pxs = rng.normal(size=(5000, 2)), rng.normal(size=(5000, 2))
    a, b = rng.normal(size=(3000, 2)), rng.normal(size=(3000, 2))
    qx, qxs, f = rng.normal(size=(1500, 1)), rng.normal(size=(1500, 1)), rng.normal(size=1500)
    return {
        "maxplus_lines 201x201": lambda: kernels.maxplus_lines(g, s, s),
        "fitzpatrick_values 5000x400": lambda: kernels.fitzpatrick_values(px, pxs, sx, sxs),
        "pairwise_min_gap 2000": lambda: kernels.pairwise_min_gap(sx[:, :1].repeat(5, 0), sxs[:, :1].repeat(5, 0)),
        "hausdorff 3000x3000": lambda: kernels.hausdorff(a, b),
        "conjugate_bruteforce 1500^2": lambda: kernels.conjugate_bruteforce(qx, qxs, f, qx, qxs),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    work = cases(rng)
    backends = ["python"]
    try:
        kernels.use_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled extension not built; timing the fallback only")
    times = {}
    for backend in backends:
        kernels.use_backend(backend)
        for name, fn in work.items():
            fn()
            times[name, backend] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"{'kernel':<32}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name in work:
        row = f"{name:<32}" + "".join(f"{times[name, b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{times[name, 'python'] / times[name, 'cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
