"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Times the two hot paths on growing problem sizes:

  * joint_marginal: summing a factored joint over all free configurations
    (the enumeration engine's inner loop), on random chain-structured
    factor sets;
  * count_leq_distinct: the masking Monte Carlo distinct-category counter.

Run:  python benchmarks/bench_kernels.py  [--repeats N]

The numba columns report the post-compilation steady state (one warm-up
call per case is excluded from timing). Set EVLR_DISABLE_NUMBA=1 to check
what the fallback-only configuration would see.
"""

import argparse
import time

import numpy as np

from evlr import _kernels


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _random_factor_problem(rng, n_nodes, card):
    """Chain-shaped factor set: node i carries a factor over (i-1, i)."""
    cards = [card] * n_nodes
    factors, axes_lists = [], []
    for i in range(n_nodes):
        if i == 0:
            arr = rng.random(card) + 0.1
            axes = [0]
        else:
            arr = rng.random((card, card)) + 0.1
            axes = [i - 1, i]
        factors.append(arr)
        axes_lists.append(axes)
    return factors, axes_lists, cards


def bench_joint_marginal(repeats):
    rng = np.random.default_rng(0)
    print("joint_marginal (free configurations -> best seconds)")
    header = f"{'configs':>12} {'numpy':>12}"
    if _kernels.HAVE_NUMBA:
        header += f" {'numba':>12} {'speedup':>9}"
    print(header)
    for n_nodes, card in ((8, 4), (10, 4), (12, 4), (10, 6), (8, 8)):
        factors, axes_lists, cards = _random_factor_problem(rng, n_nodes, card)
        total = card ** n_nodes
        t_np = _time(
            lambda: _kernels.joint_marginal_numpy(factors, axes_lists, cards, 0),
            repeats,
        )
        row = f"{total:>12,d} {t_np:>12.4f}"
        if _kernels.HAVE_NUMBA:
            _kernels.joint_marginal_numba(factors, axes_lists, cards, 0)  # warm
            t_nb = _time(
                lambda: _kernels.joint_marginal_numba(factors, axes_lists, cards, 0),
                repeats,
            )
            row += f" {t_nb:>12.4f} {t_np / t_nb:>8.2f}x"
        print(row)


def bench_count_distinct(repeats):
    rng = np.random.default_rng(1)
    p = np.full(10, 0.1)
    cum = np.cumsum(p)
    print()
    print("count_leq_distinct (samples x draws -> best seconds)")
    header = f"{'samples':>12} {'draws':>6} {'numpy':>12}"
    if _kernels.HAVE_NUMBA:
        header += f" {'numba':>12} {'speedup':>9}"
    print(header)
    for n_samples, n_draws in ((10 ** 5, 4), (10 ** 6, 4), (10 ** 6, 8)):
        u = rng.random((n_samples, n_draws))
        t_np = _time(lambda: _kernels.count_leq_distinct_numpy(u, cum, 3), repeats)
        row = f"{n_samples:>12,d} {n_draws:>6d} {t_np:>12.4f}"
        if _kernels.HAVE_NUMBA:
            _kernels.count_leq_distinct_numba(u[:100], cum, 3)  # warm
            t_nb = _time(lambda: _kernels.count_leq_distinct_numba(u, cum, 3), repeats)
            row += f" {t_nb:>12.4f} {t_np / t_nb:>8.2f}x"
        print(row)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    print(f"numba available: {_kernels.HAVE_NUMBA} (using: {_kernels.USING_NUMBA})")
    bench_joint_marginal(args.repeats)
    bench_count_distinct(args.repeats)


if __name__ == "__main__":
    main()
