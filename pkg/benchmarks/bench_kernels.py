"""Compare the compiled and numpy kernel backends.

Times the two hot loops on inputs shaped like the ones the norm and pairing
code produce, then times a full Besov norm evaluation with each backend
swapped in.  Results are printed as a table and optionally written as CSV.

    python3 benchmarks/bench_kernels.py --repeat 5 --csv bench.csv
"""

import argparse
import csv
import time

import numpy as np

from rsbesov import kernels
from rsbesov.besov import BesovParams, besov_norm
from rsbesov.fixtures import build_fixture


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def increment_case(rng, n_points=4096, dim=3, n_offsets=64, transported=True):
    Y = rng.standard_normal((n_points, dim))
    base = np.arange(64, n_points - 64)
    offsets = rng.integers(-63, 64, size=n_offsets)
    w = np.full(base.size, 1.0 / base.size)
    Q = np.tile(np.eye(dim), (n_offsets, 1, 1)) + 0.1 * rng.standard_normal((n_offsets, dim, dim))
    P = np.tile(np.eye(dim), (n_points, 1, 1)) if transported else None
    bounds = np.array([0, 1, dim])
    return Y, P, Q, offsets, base, w, bounds


def correlate_case(rng, rows=8, length=20000, taps=40, n_starts=8000):
    c = rng.standard_normal((rows, length))
    g = rng.standard_normal(taps)
    starts = np.sort(rng.integers(0, length - taps, size=n_starts))
    return c, g, starts


def end_to_end(impl, fixture, params):
    saved = kernels.increment_norms
    kernels.increment_norms = impl.increment_norms
    try:
        return besov_norm(fixture.f, fixture.model, params, fixture.K)
    finally:
        kernels.increment_norms = saved


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", help="also write the table to this file")
    args = parser.parse_args(argv)

    impls = kernels.backends()
    rng = np.random.default_rng(args.seed)
    inc = increment_case(rng)
    inc_plain = increment_case(rng, transported=False)
    cor = correlate_case(rng)
    fx = build_fixture("sine-lift", 6)
    params = BesovParams(fx.gamma)

    cases = {
        "increment_norms (transported)": lambda m: m.increment_norms(*inc, 2.0, False),
        "increment_norms (plain)": lambda m: m.increment_norms(*inc_plain, 2.0, False),
        "gather_correlate": lambda m: m.gather_correlate(*cor),
        "besov_norm end to end": lambda m: end_to_end(m, fx, params),
    }
    rows = []
    for case, fn in cases.items():
        ref = None
        timings = {}
        for name, m in impls.items():
            val = np.asarray(fn(m))
            ref = val if ref is None else ref
            agree = float(np.max(np.abs(val - ref), initial=0.0))
            timings[name] = best_of(lambda: fn(m), args.repeat)
            rows.append((case, name, timings[name], agree))
        if "cython" in timings:
            rows.append((case, "speedup", timings["python"] / timings["cython"], 0.0))

    print(f"{'case':32s} {'backend':8s} {'seconds / ratio':>16s} {'max diff':>10s}")
    for case, name, t, agree in rows:
        print(f"{case:32s} {name:8s} {t:16.5f} {agree:10.2e}")
    if "cython" not in impls:
        print("compiled backend not built; only the numpy fallback was timed")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["case", "backend", "value", "max_abs_diff"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
