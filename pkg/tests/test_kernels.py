"""Numba and numpy kernel paths must agree exactly on identical inputs."""

import numpy as np

from evlr import _kernels
from conftest import random_dag, random_evidence


def _prepare_factors(net, evidence):
    """Evidence-sliced factors in the kernel contract (mirrors bayesnet)."""
    ev_idx = {n: net.state_index(n, s) for n, s in evidence.items()}
    free = [n for n in net.names() if n not in ev_idx]
    free_pos = {n: i for i, n in enumerate(free)}
    cards = [net.card(n) for n in free]
    factors, axes_lists = [], []
    for name in net.names():
        scope = list(net.parents[name]) + [name]
        arr = net.cpts[name]
        index = tuple(slice(None) if v not in ev_idx else ev_idx[v] for v in scope)
        arr = arr[index]
        kept = [v for v in scope if v not in ev_idx]
        order = sorted(range(len(kept)), key=lambda i: free_pos[kept[i]])
        arr = np.transpose(arr, order) if kept else arr
        factors.append(np.ascontiguousarray(arr))
        axes_lists.append([free_pos[kept[i]] for i in order])
    return factors, axes_lists, cards


class TestJointMarginal:
    def test_paths_agree_on_random_networks(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            net = random_dag(rng, int(rng.integers(3, 8)))
            ev = random_evidence(rng, net, max_nodes=3)
            free = [n for n in net.names() if n not in ev]
            if not free:
                continue
            target_pos = int(rng.integers(0, len(free)))
            factors, axes_lists, cards = _prepare_factors(net, ev)
            a = _kernels.joint_marginal_numpy(factors, axes_lists, cards, target_pos)
            if _kernels.HAVE_NUMBA:
                b = _kernels.joint_marginal_numba(factors, axes_lists, cards, target_pos)
                np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_scalar_factors_supported(self):
        # a factor with every axis sliced away must act as a constant
        factors = [np.float64(0.25), np.array([0.5, 0.5])]
        axes_lists = [[], [0]]
        out = _kernels.joint_marginal_numpy(factors, axes_lists, [2], 0)
        np.testing.assert_allclose(out, [0.125, 0.125])
        if _kernels.HAVE_NUMBA:
            out_nb = _kernels.joint_marginal_numba(
                [np.asarray(f) for f in factors], axes_lists, [2], 0
            )
            np.testing.assert_allclose(out_nb, out)


class TestCountDistinct:
    def test_paths_agree_on_shared_uniforms(self):
        rng = np.random.default_rng(3)
        p = np.array([0.1, 0.2, 0.3, 0.4])
        cum = np.cumsum(p)
        u = rng.random((20_000, 6))
        for d in (1, 2, 3, 4):
            a = _kernels.count_leq_distinct_numpy(u, cum, d)
            if _kernels.HAVE_NUMBA:
                b = _kernels.count_leq_distinct_numba(u, cum, d)
                assert a == b

    def test_extreme_uniform_clipped(self):
        cum = np.cumsum([0.5, 0.5 - 1e-12])
        u = np.array([[0.999999999999, 0.0]])
        assert _kernels.count_leq_distinct_numpy(u, cum, 2) == 1

    def test_counts_match_direct_python(self):
        rng = np.random.default_rng(8)
        p = np.array([0.6, 0.3, 0.1])
        cum = np.cumsum(p)
        u = rng.random((500, 4))
        draws = np.searchsorted(cum, u, side="right").clip(0, 2)
        want = sum(1 for row in draws if len(set(row.tolist())) <= 2)
        assert _kernels.count_leq_distinct_numpy(u, cum, 2) == want


def test_dispatch_flag_consistency():
    assert _kernels.USING_NUMBA == _kernels.HAVE_NUMBA
