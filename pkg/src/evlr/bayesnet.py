"""Discrete DAG engine: validation, separation queries, and exact inference.

A Network is a directed acyclic graph of finite-state nodes, each carrying a
CPT whose leading axes follow the node's parents in declaration order and
whose last axis is the node itself (so every row, one per parent
configuration, is a distribution over the node's states).

Two exact engines are provided:

  * ``propagate``: message passing pulled inward from the leaves to the
    queried node, exact on polytrees and refused (NotPolytree) elsewhere,
    since convergence is not guaranteed on loopy graphs. Parents are
    independent by structure on a polytree, which is what the
    parent-message product in the prior message assumes.
  * ``enumerate_joint``: direct summation of the factored joint over every
    configuration consistent with the evidence; the desk-scale oracle and
    the sanctioned fallback for loopy graphs (capped at 1e7 configurations).

``conditionally_independent`` answers graphical separation queries by
moralizing the ancestral subgraph: marry unmarried co-parents, drop
arrowheads, and test whether every path between the two sets hits the
conditioning set.

Networks are immutable after validation; queries are read-only and safe to
run concurrently.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import (
    CptShapeMismatch,
    CycleDetected,
    ImpossibleEvidence,
    NotPolytree,
    RowNotNormalized,
    StateSpaceTooLarge,
    UnknownNode,
    UnknownState,
)

ROW_TOLERANCE = 1e-9
MAX_ENUM_STATES = 10 ** 7


@dataclass(frozen=True)
class NodeSpec:
    """A named node with its finite, ordered state list."""

    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(str(s) for s in self.states))
        if len(self.states) < 1:
            raise ValueError(f"node {self.name!r} needs at least one state")
        if len(set(self.states)) != len(self.states):
            raise ValueError(f"node {self.name!r} has duplicate states")


class Network:
    """Immutable discrete Bayesian network.

    Construction stores the structure without full validation so that
    ``validate`` can report problems on deliberately broken inputs; the
    inference entry points insist on a clean bill first.
    """

    def __init__(
        self,
        nodes: Sequence[NodeSpec | tuple],
        edges: Iterable[tuple[str, str]] = (),
        cpts: Mapping[str, object] | None = None,
    ):
        specs = []
        for n in nodes:
            specs.append(n if isinstance(n, NodeSpec) else NodeSpec(n[0], tuple(n[1])))
        self.nodes: tuple[NodeSpec, ...] = tuple(specs)
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate node names")
        self._index = {n.name: i for i, n in enumerate(self.nodes)}

        parents: dict[str, list[str]] = {n.name: [] for n in self.nodes}
        children: dict[str, list[str]] = {n.name: [] for n in self.nodes}
        edge_list = []
        for parent, child in edges:
            if parent not in self._index:
                raise UnknownNode(f"edge references unknown node {parent!r}")
            if child not in self._index:
                raise UnknownNode(f"edge references unknown node {child!r}")
            if (parent, child) in edge_list:
                raise ValueError(f"duplicate edge {parent!r} -> {child!r}")
            edge_list.append((parent, child))
            parents[child].append(parent)
            children[parent].append(child)
        self.edges: tuple[tuple[str, str], ...] = tuple(edge_list)
        # parent order == CPT axis order: declaration order of the edges
        self.parents = {k: tuple(v) for k, v in parents.items()}
        self.children = {k: tuple(v) for k, v in children.items()}

        self.cpts: dict[str, np.ndarray] = {}
        for name, table in (cpts or {}).items():
            if name not in self._index:
                raise UnknownNode(f"CPT for unknown node {name!r}")
            arr = np.asarray(table, dtype=np.float64)
            arr.flags.writeable = False
            self.cpts[name] = arr
        self._validated = False

    # -- basics ----------------------------------------------------------

    def node(self, name: str) -> NodeSpec:
        try:
            return self.nodes[self._index[name]]
        except KeyError:
            raise UnknownNode(f"unknown node {name!r}") from None

    def card(self, name: str) -> int:
        return len(self.node(name).states)

    def state_index(self, name: str, state: str) -> int:
        spec = self.node(name)
        try:
            return spec.states.index(state)
        except ValueError:
            raise UnknownState(
                f"node {name!r} has no state {state!r}; states: {spec.states}"
            ) from None

    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes)

    def expected_cpt_shape(self, name: str) -> tuple[int, ...]:
        return tuple(self.card(p) for p in self.parents[name]) + (self.card(name),)

    def topological_order(self) -> list[str]:
        """Kahn's algorithm; raises CycleDetected when no order exists."""
        indeg = {n.name: len(self.parents[n.name]) for n in self.nodes}
        queue = [n for n, d in indeg.items() if d == 0]
        order = []
        while queue:
            n = queue.pop(0)
            order.append(n)
            for c in self.children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if len(order) != len(self.nodes):
            cyclic = sorted(n for n, d in indeg.items() if d > 0)
            raise CycleDetected(f"cycle through nodes {cyclic}")
        return order


def validate(net: Network) -> list[Exception]:
    """Check acyclicity, CPT shapes, and row normalization.

    Returns the list of problems found (empty means valid) rather than
    raising, so a broken document can be reported in full.
    """
    issues: list[Exception] = []
    try:
        net.topological_order()
    except CycleDetected as exc:
        issues.append(exc)
    for spec in net.nodes:
        name = spec.name
        if name not in net.cpts:
            issues.append(CptShapeMismatch(f"node {name!r} has no CPT"))
            continue
        arr = net.cpts[name]
        want = net.expected_cpt_shape(name)
        if arr.shape != want:
            issues.append(CptShapeMismatch(
                f"node {name!r}: CPT shape {arr.shape} != expected {want}"
            ))
            continue
        rows = arr.reshape(-1, want[-1])
        sums = rows.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOLERANCE)
        if bad.size:
            issues.append(RowNotNormalized(
                f"node {name!r}: CPT row {int(bad[0])} sums to {sums[bad[0]]:.12g}"
            ))
        if np.any(arr < 0):
            issues.append(RowNotNormalized(f"node {name!r}: negative CPT entry"))
    return issues


def ensure_valid(net: Network) -> None:
    if getattr(net, "_validated", False):
        return
    issues = validate(net)
    if issues:
        raise issues[0]
    net._validated = True


# ---------------------------------------------------------------------------
# structure queries
# ---------------------------------------------------------------------------

def is_polytree(net: Network) -> bool:
    """True iff the undirected skeleton is acyclic (a forest)."""
    parent = {n.name: n.name for n in net.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in net.edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


def _check_sets(net: Network, *sets):
    out = []
    for s in sets:
        s = frozenset(s)
        for n in s:
            net.node(n)
        out.append(s)
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            if out[i] & out[j]:
                raise ValueError("query sets must be disjoint")
    return out


def conditionally_independent(net: Network, s, t, u=()) -> bool:
    """Graphical separation of node sets S and T given U, by moralization.

    Forms the ancestral subgraph of S,T,U, marries unmarried co-parents,
    drops arrowheads, and reports True ("separated") iff no path joins S and
    T while avoiding U.
    """
    s, t, u = _check_sets(net, s, t, u)
    # ancestral closure
    ancestral = set(s | t | u)
    stack = list(ancestral)
    while stack:
        n = stack.pop()
        for p in net.parents[n]:
            if p not in ancestral:
                ancestral.add(p)
                stack.append(p)
    # moral graph on the ancestral set
    adj: dict[str, set[str]] = {n: set() for n in ancestral}
    for child in ancestral:
        ps = [p for p in net.parents[child]]  # parents are ancestral by closure
        for p in ps:
            adj[p].add(child)
            adj[child].add(p)
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                adj[ps[i]].add(ps[j])
                adj[ps[j]].add(ps[i])
    # reachability from S avoiding U
    seen = set(s)
    stack = [n for n in s]
    while stack:
        n = stack.pop()
        if n in t:
            return False
        for nb in adj[n]:
            if nb not in seen and nb not in u:
                seen.add(nb)
                stack.append(nb)
    return True


# ---------------------------------------------------------------------------
# evidence handling
# ---------------------------------------------------------------------------

def _evidence_indices(net: Network, evidence: Mapping[str, str]) -> dict[str, int]:
    out = {}
    for node, state in evidence.items():
        out[node] = net.state_index(node, state)
    return out


# ---------------------------------------------------------------------------
# polytree belief propagation
# ---------------------------------------------------------------------------

class Direction(Enum):
    FROM_PARENTS = "from_parents"
    FROM_CHILDREN = "from_children"


@dataclass(frozen=True)
class Message:
    """One belief-propagation message addressed to ``target``.

    FROM_PARENTS messages are normalized distributions; FROM_CHILDREN
    messages are nonnegative likelihood vectors and stay unnormalized.
    """

    direction: Direction
    target: str
    values: np.ndarray


class _Propagation:
    """Single-query message-passing state with memoized messages."""

    def __init__(self, net: Network, ev_idx: dict[str, int]):
        self.net = net
        self.ev = ev_idx
        self._pi: dict[str, np.ndarray] = {}
        self._lam: dict[str, np.ndarray] = {}
        self._msg: dict[tuple, Message] = {}

    def indicator(self, node: str) -> np.ndarray:
        v = np.ones(self.net.card(node))
        if node in self.ev:
            v[:] = 0.0
            v[self.ev[node]] = 1.0
        return v

    def pi(self, node: str) -> np.ndarray:
        """Prior message m+: CPT-weighted marginalization of parent messages."""
        if node in self._pi:
            return self._pi[node]
        res = self.net.cpts[node]
        for p in self.net.parents[node]:
            res = np.tensordot(self.pi_msg(p, node).values, res, axes=(0, 0))
        self._pi[node] = res
        return res

    def lam(self, node: str) -> np.ndarray:
        """Likelihood summary m-: own indicator times child messages."""
        if node in self._lam:
            return self._lam[node]
        res = self.indicator(node)
        for c in self.net.children[node]:
            res = res * self.lam_msg(c, node).values
        self._lam[node] = res
        return res

    def pi_msg(self, parent: str, child: str) -> Message:
        """Message a parent passes down: its prior belief times everything
        it hears from its other children, normalized."""
        key = (Direction.FROM_PARENTS, parent, child)
        if key in self._msg:
            return self._msg[key]
        v = self.pi(parent) * self.indicator(parent)
        for c in self.net.children[parent]:
            if c != child:
                v = v * self.lam_msg(c, parent).values
        total = v.sum()
        if total <= 0.0:
            raise ImpossibleEvidence(
                f"evidence upstream of {child!r} has probability zero"
            )
        msg = Message(Direction.FROM_PARENTS, child, v / total)
        self._msg[key] = msg
        return msg

    def lam_msg(self, child: str, parent: str) -> Message:
        """Message a child passes up: marginalize the child and its other
        parents out of the CPT, weighted by their messages."""
        key = (Direction.FROM_CHILDREN, child, parent)
        if key in self._msg:
            return self._msg[key]
        ps = self.net.parents[child]
        letters = string.ascii_letters
        subs = letters[: len(ps) + 1]
        operands = [self.net.cpts[child]]
        specs = [subs]
        out_letter = None
        for i, w in enumerate(ps):
            if w == parent:
                out_letter = subs[i]
            else:
                operands.append(self.pi_msg(w, child).values)
                specs.append(subs[i])
        operands.append(self.lam(child))
        specs.append(subs[len(ps)])
        v = np.einsum(",".join(specs) + "->" + out_letter, *operands)
        msg = Message(Direction.FROM_CHILDREN, parent, np.maximum(v, 0.0))
        self._msg[key] = msg
        return msg

    def posterior(self, node: str) -> np.ndarray:
        v = self.pi(node) * self.lam(node)
        total = v.sum()
        if total <= 0.0:
            raise ImpossibleEvidence("evidence has probability zero")
        return v / total


def _components(net: Network) -> list[set[str]]:
    parent = {n.name: n.name for n in net.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in net.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    comps: dict[str, set[str]] = {}
    for n in net.names():
        comps.setdefault(find(n), set()).add(n)
    return list(comps.values())


def propagate(net: Network, evidence: Mapping[str, str], target: str) -> np.ndarray:
    """Posterior over ``target`` by exact polytree message passing.

    The posterior is the normalized product of the prior summary (from
    ancestors) and the likelihood summary (from descendants); the recursion
    pulls the needed messages inward from the leaves, deterministically,
    and is exact because a polytree admits no second path between any two
    nodes. Evidence anywhere in the target's component is absorbed through
    the messages; evidence in other components only gets a consistency
    check (it cannot move the target's posterior but can be impossible).

    Raises:
        NotPolytree: skeleton has a cycle; use enumerate_joint instead.
        ImpossibleEvidence: the evidence has probability zero.
    """
    ensure_valid(net)
    if not is_polytree(net):
        raise NotPolytree("propagate requires a polytree; use enumerate_joint")
    net.node(target)
    ev_idx = _evidence_indices(net, evidence)
    prop = _Propagation(net, ev_idx)
    post = prop.posterior(target)
    # impossible evidence in a different component must still be detected
    if ev_idx:
        for comp in _components(net):
            if target in comp:
                continue
            ev_here = [n for n in ev_idx if n in comp]
            if not ev_here:
                continue
            probe = ev_here[0]
            mass = float((prop.pi(probe) * prop.lam(probe)).sum())
            if mass <= 0.0:
                raise ImpossibleEvidence("evidence has probability zero")
    return post


# ---------------------------------------------------------------------------
# enumeration engine
# ---------------------------------------------------------------------------

def enumerate_joint(
    net: Network, evidence: Mapping[str, str], target: str
) -> np.ndarray:
    """Posterior over ``target`` by summing the factored joint directly.

    Every CPT is sliced at the evidence states, the remaining factors are
    multiplied over all free-node configurations, and everything but the
    target is summed out. Exact on any DAG; refused above 1e7 free
    configurations.
    """
    ensure_valid(net)
    net.node(target)
    ev_idx = _evidence_indices(net, evidence)

    free = [n for n in net.names() if n not in ev_idx]
    cards = [net.card(n) for n in free]
    total = 1
    for c in cards:
        total *= c
    if total > MAX_ENUM_STATES:
        raise StateSpaceTooLarge(
            f"{total} free configurations exceed the cap of {MAX_ENUM_STATES}"
        )
    free_pos = {n: i for i, n in enumerate(free)}

    factors = []
    axes_lists = []
    for name in net.names():
        scope = list(net.parents[name]) + [name]
        arr = net.cpts[name]
        index = tuple(
            slice(None) if v not in ev_idx else ev_idx[v] for v in scope
        )
        arr = arr[index]
        kept = [v for v in scope if v not in ev_idx]
        # kernel contract: factor axes in ascending free-node order
        order = sorted(range(len(kept)), key=lambda i: free_pos[kept[i]])
        arr = np.transpose(arr, order) if kept else arr
        factors.append(np.ascontiguousarray(arr))
        axes_lists.append([free_pos[kept[i]] for i in order])

    if target in ev_idx:
        # point mass, but the evidence must still be possible
        if free:
            probe = _kernels.joint_marginal(factors, axes_lists, cards, 0)
            mass = float(probe.sum())
        else:
            mass = 1.0
            for f in factors:
                mass *= float(np.asarray(f).reshape(-1)[0])
        if mass <= 0.0:
            raise ImpossibleEvidence("evidence has probability zero")
        out = np.zeros(net.card(target))
        out[ev_idx[target]] = 1.0
        return out

    raw = _kernels.joint_marginal(factors, axes_lists, cards, free_pos[target])
    total_mass = float(raw.sum())
    if total_mass <= 0.0:
        raise ImpossibleEvidence("evidence has probability zero")
    return raw / total_mass


def infer(
    net: Network, evidence: Mapping[str, str], target: str
) -> tuple[np.ndarray, str]:
    """Posterior plus the engine used: propagate on polytrees, else the
    enumeration fallback."""
    ensure_valid(net)
    if is_polytree(net):
        return propagate(net, evidence, target), "propagate"
    return enumerate_joint(net, evidence, target), "enumeration"


# ---------------------------------------------------------------------------
# component extraction (per-marker queries on a combined network)
# ---------------------------------------------------------------------------

def component_subnetwork(net: Network, anchor: str) -> Network:
    """The connected component of ``anchor`` as a standalone Network."""
    net.node(anchor)
    for comp in _components(net):
        if anchor in comp:
            keep = comp
            break
    nodes = [n for n in net.nodes if n.name in keep]
    edges = [(a, b) for a, b in net.edges if a in keep]
    cpts = {n.name: net.cpts[n.name] for n in nodes if n.name in net.cpts}
    sub = Network(nodes, edges, cpts)
    return sub


# ---------------------------------------------------------------------------
# JSON document and DOT export
# ---------------------------------------------------------------------------

def network_from_json(source) -> Network:
    """Load a network document.

    Shape: {"nodes": [{"name", "states"}...], "edges": [[p, c]...],
    "cpts": {node: nested arrays}} with CPT rows in row-major parent-
    configuration order, parents ordered by edge declaration.
    """
    if isinstance(source, (str, Path)) and not (
        isinstance(source, str) and source.lstrip().startswith("{")
    ):
        doc = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    nodes = [NodeSpec(n["name"], tuple(n["states"])) for n in doc["nodes"]]
    edges = [tuple(e) for e in doc.get("edges", [])]
    return Network(nodes, edges, doc.get("cpts", {}))


def network_to_json(net: Network) -> dict:
    return {
        "nodes": [{"name": n.name, "states": list(n.states)} for n in net.nodes],
        "edges": [list(e) for e in net.edges],
        "cpts": {name: arr.tolist() for name, arr in net.cpts.items()},
    }


def to_dot(net: Network, evidence: Mapping[str, str] | None = None) -> str:
    """Graphviz rendering; evidence nodes come out shaded."""
    ev = evidence or {}
    lines = ["digraph network {", "  rankdir=TB;", "  node [shape=ellipse];"]
    for spec in net.nodes:
        attrs = [f'label="{spec.name}"']
        if spec.name in ev:
            attrs.append('style=filled fillcolor=lightgray')
            attrs[0] = f'label="{spec.name} = {ev[spec.name]}"'
        lines.append(f'  "{spec.name}" [{" ".join(attrs)}];')
    for a, b in net.edges:
        lines.append(f'  "{a}" -> "{b}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


__all__ = [
    "NodeSpec",
    "Network",
    "Direction",
    "Message",
    "validate",
    "ensure_valid",
    "is_polytree",
    "conditionally_independent",
    "propagate",
    "enumerate_joint",
    "infer",
    "component_subnetwork",
    "network_from_json",
    "network_to_json",
    "to_dot",
    "ROW_TOLERANCE",
    "MAX_ENUM_STATES",
]
