"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py --customers 8 12 --periods 2 3 --repeat 5
"""
import argparse
import time

import numpy as np

from cdflp import kernels
from cdflp.instance_gen import GenConfig, generate_synthetic
from cdflp.space import CompiledInstance


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--customers", type=int, nargs="+", default=[8, 12])
    p.add_argument("--periods", type=int, nargs="+", default=[2, 3])
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    backends = ["numpy"] + (["numba"] if kernels.numba_kernels is not None else [])
    print(f"{'J':>3} {'T':>2} {'NY':>6} {'NZ':>6} {'kernel':<14}" + "".join(f"{b:>12}" for b in backends)
          + "   speedup")
    for j in args.customers:
        for t in args.periods:
            inst = generate_synthetic(GenConfig(customer_count=j, period_count=t, seed=args.seed))
            compiled = CompiledInstance(inst)
            for name in ("pair_profits", "reaction_scan", "joint_scan"):
                results, times = [], {}
                for b in backends:
                    kernels.run(name, compiled, backend=b)  # warm-up / compile
                    times[b] = best_of(lambda: kernels.run(name, compiled, backend=b), args.repeat)
                    results.append(kernels.run(name, compiled, backend=b))
                for a, b in zip(results, results[1:]):
                    assert all(np.array_equal(x, y) for x, y in zip(a, b)), "backends disagree"
                speed = times["numpy"] / times["numba"] if "numba" in times else float("nan")
                print(f"{j:>3} {t:>2} {compiled.leader_space.size:>6} {compiled.follower_space.size:>6} "
                      f"{name:<14}" + "".join(f"{times[b] * 1000:>10.2f}ms" for b in backends)
                      + f"   {speed:6.1f}x")


if __name__ == "__main__":
    main()
