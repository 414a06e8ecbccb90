"""Shared fixtures and independent oracle helpers.

The random-network generators and the brute-force joint builder live here so
the engine tests and the acceptance suite share one source of cases. The
joint builder deliberately reimplements the factored product with plain
numpy broadcasting, independent of evlr.bayesnet internals, so it can serve
as an oracle for both engines.
"""

import numpy as np
import pytest

from evlr.bayesnet import Network, NodeSpec
from evlr.population import table_from_frequencies


@pytest.fixture
def simple_table():
    return table_from_frequencies({
        "D13": {"A": 0.1, "B": 0.1, "C": 0.8},
        "FGA": {"8": 0.2, "9": 0.3, "10": 0.5},
    })


@pytest.fixture
def biallelic_table():
    return table_from_frequencies({"M1": {"A": 0.9, "B": 0.1}})


def random_dirichlet_rows(rng, shape):
    raw = rng.gamma(1.0, 1.0, size=shape) + 1e-3
    return raw / raw.sum(axis=-1, keepdims=True)


def random_polytree(rng, n_nodes, max_states=4, max_space=None):
    """Random polytree: a random tree skeleton with random orientations
    (any orientation of an acyclic skeleton is a DAG) and Dirichlet CPTs."""
    while True:
        names = [f"n{i}" for i in range(n_nodes)]
        cards = rng.integers(2, max_states + 1, n_nodes)
        if max_space is not None and np.prod(cards.astype(float)) > max_space:
            continue
        break
    edges = []
    parents = {i: [] for i in range(n_nodes)}
    for i in range(1, n_nodes):
        j = int(rng.integers(0, i))
        if rng.random() < 0.5:
            edges.append((names[j], names[i]))
            parents[i].append(j)
        else:
            edges.append((names[i], names[j]))
            parents[j].append(i)
    cpts = {}
    for i in range(n_nodes):
        shape = tuple(int(cards[p]) for p in parents[i]) + (int(cards[i]),)
        cpts[names[i]] = random_dirichlet_rows(rng, shape)
    nodes = [
        NodeSpec(names[i], tuple(f"s{k}" for k in range(int(cards[i]))))
        for i in range(n_nodes)
    ]
    return Network(nodes, edges, cpts)


def random_dag(rng, n_nodes, edge_prob=0.35, max_states=3):
    """Random DAG over a random topological order with Dirichlet CPTs."""
    names = [f"n{i}" for i in range(n_nodes)]
    cards = rng.integers(2, max_states + 1, n_nodes)
    order = rng.permutation(n_nodes)
    edges = []
    parents = {i: [] for i in range(n_nodes)}
    for a_pos in range(n_nodes):
        for b_pos in range(a_pos + 1, n_nodes):
            if rng.random() < edge_prob:
                a, b = int(order[a_pos]), int(order[b_pos])
                edges.append((names[a], names[b]))
                parents[b].append(a)
    cpts = {}
    for i in range(n_nodes):
        shape = tuple(int(cards[p]) for p in parents[i]) + (int(cards[i]),)
        cpts[names[i]] = random_dirichlet_rows(rng, shape)
    nodes = [
        NodeSpec(names[i], tuple(f"s{k}" for k in range(int(cards[i]))))
        for i in range(n_nodes)
    ]
    return Network(nodes, edges, cpts)


def random_evidence(rng, net, max_nodes=None):
    names = list(net.names())
    limit = len(names) - 1 if max_nodes is None else max_nodes
    n_ev = int(rng.integers(0, max(1, limit)))
    picks = rng.choice(len(names), size=n_ev, replace=False)
    ev = {}
    for i in picks:
        node = names[int(i)]
        states = net.node(node).states
        ev[node] = states[int(rng.integers(0, len(states)))]
    return ev


def brute_force_joint(net):
    """Full joint tensor over all nodes in declaration order (oracle)."""
    names = list(net.names())
    pos = {n: i for i, n in enumerate(names)}
    shape = tuple(net.card(n) for n in names)
    joint = np.ones(shape)
    for name in names:
        scope = list(net.parents[name]) + [name]
        arr = net.cpts[name]
        view = [1] * len(shape)
        for ax, v in enumerate(scope):
            view[pos[v]] = arr.shape[ax]
        order = np.argsort([pos[v] for v in scope])
        joint = joint * np.transpose(arr, order).reshape(view)
    return joint


def conditional_mutual_information(net, s, t, u):
    """CMI I(S;T|U) from the brute-force joint, in nats."""
    names = list(net.names())
    pos = {n: i for i, n in enumerate(names)}
    joint = brute_force_joint(net)
    keep = sorted({pos[x] for x in (*s, *t, *u)})
    drop = tuple(i for i in range(len(names)) if i not in keep)
    p = joint.sum(axis=drop)
    axis_of = {}
    for new_ax, old_ax in enumerate(keep):
        axis_of[names[old_ax]] = new_ax
    s_ax = tuple(axis_of[x] for x in s)
    t_ax = tuple(axis_of[x] for x in t)
    u_ax = tuple(axis_of[x] for x in u)

    def marg(axes_keep):
        drop_axes = tuple(i for i in range(p.ndim) if i not in axes_keep)
        return p.sum(axis=drop_axes, keepdims=True)

    p_stu = p
    p_su = marg(s_ax + u_ax)
    p_tu = marg(t_ax + u_ax)
    p_u = marg(u_ax) if u_ax else np.ones_like(p)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p_stu > 0, (p_stu * p_u) / (p_su * p_tu), 1.0)
        terms = np.where(p_stu > 0, p_stu * np.log(ratio), 0.0)
    return float(terms.sum())
