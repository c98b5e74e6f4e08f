"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--runs 500] [--N 100] [--repeat 3]

Times one SSA ensemble and a batch of master-equation right-hand-side
evaluations with each backend, and checks the outputs are identical.
"""

import argparse
import time

import numpy as np

from onestep import _fallback, build_sis_model, per_state_rates
from onestep.ssa import run_seed

try:
    from onestep import _ext
except ImportError:
    _ext = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=500)
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--rhs-calls", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    model = build_sis_model(args.N, tau=0.05, gamma=1.0, d=20, beta=1.0)
    a, c = per_state_rates(model)
    t = np.linspace(0.0, 10.0, 501)
    seeds = [run_seed(20240501, r) for r in range(args.runs)]
    p = np.random.default_rng(0).random(args.N + 1)
    p /= p.sum()

    backends = [("python", _fallback)] + ([("cython", _ext)] if _ext is not None else [])
    results = {}
    print(f"SIS N={args.N}, {args.runs} SSA runs on 501 grid points, {args.rhs_calls} rhs calls")
    print(f"{'backend':<8} {'ssa [s]':>10} {'rhs [s]':>10}")
    for name, kern in backends:
        t_ssa, ens = best_of(lambda: kern.ssa_ensemble(a, c, 1, t, seeds), args.repeat)
        out = np.empty_like(p)

        def rhs_batch():
            for _ in range(args.rhs_calls):
                kern.master_rhs(a, c, p, out)
            return out.copy()

        t_rhs, rhs = best_of(rhs_batch, args.repeat)
        results[name] = (t_ssa, t_rhs, ens, rhs)
        print(f"{name:<8} {t_ssa:>10.4f} {t_rhs:>10.4f}")

    if "cython" in results:
        py, cy = results["python"], results["cython"]
        same = all(np.array_equal(x, y) for x, y in zip(py[2], cy[2])) and np.array_equal(py[3], cy[3])
        print(f"speedup  ssa x{py[0] / cy[0]:.1f}, rhs x{py[1] / cy[1]:.1f}; identical outputs: {same}")
    else:
        print("compiled extension not built; only the fallback was timed")


if __name__ == "__main__":
    main()
