"""Object-oriented network layer: reusable modules and case templates.

Pedigree and identification networks are assembled from a handful of
generic modules wired by ports:

  * founder: paternal and maternal genes drawn i.i.d. from the allele
    frequencies, combined into a deterministic unordered-pair genotype;
  * meiosis: a child gene picked from the parent's two genes by a fair coin;
  * mutation: a uniform miscopy channel (stay with probability 1-μ, else
    uniform over the other K-1 alleles);
  * selector (identification): output equals one of two same-typed sources
    depending on a Boolean hypothesis;
  * accuracy / testimony: Boolean error channels and their three-stage
    composition (sensation, objectivity, veracity).

Case templates (criminal identification, paternity trio, sibling paternity,
two-contributor mixture, subpopulation, shared mixture fraction) expand
into flat Networks for the bayesnet engines. Markers expand independently
and their LRs multiply, except the subpopulation and fraction templates
whose shared node couples markers into a single query.

The trio and criminal templates flatten to polytrees and run on propagate;
the sibling, mixture-network, subpopulation, and urn-coupled variants are
loopy and run on the enumeration engine, so their unobserved founders are
emitted as single genotype nodes carrying the exact marginal genotype prior
(HWE, urn, or subpopulation-conditional) to stay inside the enumeration cap.
Expansion is deterministic: the same case always yields the same network,
node order, and CPT bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .bayesnet import (
    Network,
    NodeSpec,
    component_subnetwork,
    enumerate_joint,
    infer,
)
from .errors import (
    IncompatibleTables,
    InvalidGrid,
    InvalidRate,
    MalformedCase,
    NameCollision,
    StateSpaceMismatch,
    UnboundPort,
)
from .evaluation import LRValue, MarkerLR
from .genetics import (
    Profile,
    genotype_state_label,
    genotype_states,
    hwe_genotype_distribution,
)
from .population import AlleleFreqTable, polya_conditional_cpt

HYP_STATES = ("true", "false")


# ---------------------------------------------------------------------------
# builder
# ---------------------------------------------------------------------------

class NetworkBuilder:
    """Accumulates namespaced nodes while templates are instantiated."""

    def __init__(self, prefix: str = ""):
        self.prefix = prefix
        self._nodes: list[NodeSpec] = []
        self._edges: list[tuple[str, str]] = []
        self._cpts: dict[str, np.ndarray] = {}
        self._states: dict[str, tuple[str, ...]] = {}

    def add_node(self, name, states, parents=(), cpt=None) -> str:
        name = self.prefix + name
        if name in self._states:
            raise NameCollision(f"node {name!r} already defined")
        states = tuple(str(s) for s in states)
        for p in parents:
            if p not in self._states:
                raise UnboundPort(f"node {name!r} wired to undefined {p!r}")
        self._nodes.append(NodeSpec(name, states))
        self._states[name] = states
        for p in parents:
            self._edges.append((p, name))
        if cpt is not None:
            self._cpts[name] = np.asarray(cpt, dtype=np.float64)
        return name

    def states_of(self, node: str) -> tuple[str, ...]:
        try:
            return self._states[node]
        except KeyError:
            raise UnboundPort(f"port bound to undefined node {node!r}") from None

    def build(self) -> Network:
        return Network(self._nodes, self._edges, self._cpts)


@dataclass(frozen=True)
class PortSpec:
    """A typed input port; ``states=None`` accepts any state space."""

    name: str
    states: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ModuleTemplate:
    """A reusable sub-network: typed ports plus a deterministic builder.

    ``build(builder, path, bindings)`` adds the internal nodes under the
    instance path and returns the output-port node names.
    """

    name: str
    inputs: tuple[PortSpec, ...]
    outputs: tuple[str, ...]
    params: Mapping[str, object] = field(default_factory=dict)
    build: Callable[[NetworkBuilder, str, Mapping[str, str]], dict[str, str]] = None

    def instantiate(
        self, builder: NetworkBuilder, path: str, bindings: Mapping[str, str] = ()
    ) -> dict[str, str]:
        bindings = dict(bindings or {})
        for port in self.inputs:
            if port.name not in bindings:
                raise UnboundPort(
                    f"module {self.name!r} at {path!r}: port {port.name!r} unbound"
                )
            if port.states is not None:
                got = builder.states_of(bindings[port.name])
                if got != port.states:
                    raise StateSpaceMismatch(
                        f"module {self.name!r} at {path!r}: port {port.name!r} "
                        f"expects states {port.states}, got {got}"
                    )
        return self.build(builder, path, bindings)


# ---------------------------------------------------------------------------
# CPT helpers
# ---------------------------------------------------------------------------

def _pair_cpt(k: int) -> np.ndarray:
    """Deterministic unordered combination of two K-state genes."""
    n_g = k * (k + 1) // 2
    pair_index = {}
    pos = 0
    for i in range(k):
        for j in range(i, k):
            pair_index[(i, j)] = pos
            pos += 1
    cpt = np.zeros((k, k, n_g))
    for a in range(k):
        for b in range(k):
            cpt[a, b, pair_index[(min(a, b), max(a, b))]] = 1.0
    return cpt


def _meiosis_cpt(k: int) -> np.ndarray:
    """Child gene given parent genotype: fair coin between the two genes."""
    n_g = k * (k + 1) // 2
    cpt = np.zeros((n_g, k))
    pos = 0
    for i in range(k):
        for j in range(i, k):
            cpt[pos, i] += 0.5
            cpt[pos, j] += 0.5
            pos += 1
    return cpt


def _mutation_cpt(k: int, rate: float) -> np.ndarray:
    """Uniform miscopy channel over K alleles."""
    cpt = np.full((k, k), rate / (k - 1) if k > 1 else 0.0)
    np.fill_diagonal(cpt, 1.0 - rate)
    return cpt


def _selector_cpt(n_states: int) -> np.ndarray:
    """Output = when_true or when_false depending on the hypothesis."""
    cpt = np.zeros((2, n_states, n_states, n_states))
    for a in range(n_states):
        for b in range(n_states):
            cpt[0, a, b, a] = 1.0      # hypothesis "true"
            cpt[1, a, b, b] = 1.0      # hypothesis "false"
    return cpt


def _accuracy_cpt(n_states: int, error: float) -> np.ndarray:
    cpt = np.full(
        (n_states, n_states), error / (n_states - 1) if n_states > 1 else 0.0
    )
    np.fill_diagonal(cpt, 1.0 - error)
    return cpt


def _check_rate(value: float, name: str, upper_open: float = 1.0) -> float:
    value = float(value)
    if not 0.0 <= value < upper_open:
        raise InvalidRate(f"{name} must lie in [0, {upper_open}), got {value}")
    return value


# ---------------------------------------------------------------------------
# generic modules
# ---------------------------------------------------------------------------

def founder_module(
    marker: str,
    freqs: AlleleFreqTable,
    compact: bool = False,
    genotype_prior: np.ndarray | None = None,
) -> ModuleTemplate:
    """Founder: two i.i.d. gene draws and their unordered genotype.

    With ``compact=True`` the gene nodes are marginalized away and the
    genotype node carries the HWE prior directly; exact, and used by the
    loopy templates to stay inside the enumeration cap. ``genotype_prior``
    overrides the prior of the compact form (urn or subpopulation hooks).
    """
    mk = freqs.marker(marker)           # raises UnknownMarker
    k = mk.k
    p = freqs.freqs(marker)
    g_states = genotype_states(mk.alleles)

    def build(builder: NetworkBuilder, path: str, bindings) -> dict[str, str]:
        if compact:
            if genotype_prior is not None:
                prior = np.asarray(genotype_prior, dtype=np.float64)
            else:
                _, prior = hwe_genotype_distribution(marker, freqs)
            gt = builder.add_node(f"{path}.genotype", g_states, (), prior)
            return {"genotype": gt}
        pat = builder.add_node(f"{path}.paternal", mk.alleles, (), p)
        mat = builder.add_node(f"{path}.maternal", mk.alleles, (), p)
        gt = builder.add_node(
            f"{path}.genotype", g_states, (pat, mat), _pair_cpt(k)
        )
        return {"genotype": gt, "paternal": pat, "maternal": mat}

    return ModuleTemplate(
        name="founder",
        inputs=(),
        outputs=("genotype",) if compact else ("genotype", "paternal", "maternal"),
        params={"marker": marker, "compact": compact},
        build=build,
    )


def meiosis_module(marker: str, freqs: AlleleFreqTable) -> ModuleTemplate:
    """Meiosis: child gene = fair-coin pick from the parent's genotype."""
    mk = freqs.marker(marker)
    g_states = genotype_states(mk.alleles)

    def build(builder, path, bindings):
        gene = builder.add_node(
            f"{path}.gene",
            mk.alleles,
            (bindings["parent_genotype"],),
            _meiosis_cpt(mk.k),
        )
        return {"gene": gene}

    return ModuleTemplate(
        name="meiosis",
        inputs=(PortSpec("parent_genotype", g_states),),
        outputs=("gene",),
        params={"marker": marker},
        build=build,
    )


def mutation_module(marker: str, freqs: AlleleFreqTable, rate: float) -> ModuleTemplate:
    """Uniform-miscopy mutation on a gene: original with probability 1-μ,
    otherwise uniform over the other K-1 alleles."""
    mk = freqs.marker(marker)
    mu = _check_rate(rate, "mutation rate")

    def build(builder, path, bindings):
        gene = builder.add_node(
            f"{path}.gene",
            mk.alleles,
            (bindings["original_gene"],),
            _mutation_cpt(mk.k, mu),
        )
        return {"gene": gene}

    return ModuleTemplate(
        name="mutation",
        inputs=(PortSpec("original_gene", mk.alleles),),
        outputs=("gene",),
        params={"marker": marker, "rate": mu},
        build=build,
    )


def selector_module(states: Sequence[str]) -> ModuleTemplate:
    """Identification: output copies when_true or when_false per hypothesis."""
    states = tuple(str(s) for s in states)

    def build(builder, path, bindings):
        out = builder.add_node(
            f"{path}.selected",
            states,
            (bindings["hypothesis"], bindings["when_true"], bindings["when_false"]),
            _selector_cpt(len(states)),
        )
        return {"selected": out}

    return ModuleTemplate(
        name="selector",
        inputs=(
            PortSpec("hypothesis", HYP_STATES),
            PortSpec("when_true", states),
            PortSpec("when_false", states),
        ),
        outputs=("selected",),
        params={"states": states},
        build=build,
    )


def accuracy_module(error: float, states: Sequence[str] = HYP_STATES) -> ModuleTemplate:
    """Channel reproducing its input except with the given error rate."""
    e = _check_rate(error, "error rate")
    states = tuple(str(s) for s in states)

    def build(builder, path, bindings):
        out = builder.add_node(
            f"{path}.output", states, (bindings["input"],), _accuracy_cpt(len(states), e)
        )
        return {"output": out}

    return ModuleTemplate(
        name="accuracy",
        inputs=(PortSpec("input", states),),
        outputs=("output",),
        params={"error": e},
        build=build,
    )


def testimony_module(
    sensation_error: float = 0.0,
    objectivity_error: float = 0.0,
    veracity_error: float = 0.0,
    competence_prob: float = 1.0,
) -> ModuleTemplate:
    """Three-stage witness model: sensation, objectivity, veracity.

    Sensation is an accuracy channel (the agreement between the event and
    what the witness senses) gated by a Boolean competence node: an
    incompetent observation carries no information (uniform output).
    Objectivity and veracity are plain accuracy instances. All rates 0 and
    full competence reproduce the event exactly.
    """
    a = _check_rate(sensation_error, "sensation error")
    b = _check_rate(objectivity_error, "objectivity error")
    c = _check_rate(veracity_error, "veracity error")
    if not 0.0 < competence_prob <= 1.0:
        raise InvalidRate(f"competence must lie in (0, 1], got {competence_prob}")

    def build(builder, path, bindings):
        competent = builder.add_node(
            f"{path}.competent", HYP_STATES, (), [competence_prob, 1.0 - competence_prob]
        )
        sens_cpt = np.empty((2, 2, 2))
        sens_cpt[:, 0] = _accuracy_cpt(2, a)        # competent: agreement channel
        sens_cpt[:, 1] = 0.5                        # incompetent: uninformative
        sensed = builder.add_node(
            f"{path}.sensed", HYP_STATES, (bindings["event"], competent), sens_cpt
        )
        perceived = accuracy_module(b).instantiate(
            builder, f"{path}.objectivity", {"input": sensed}
        )["output"]
        report = accuracy_module(c).instantiate(
            builder, f"{path}.veracity", {"input": perceived}
        )["output"]
        return {"report": report}

    return ModuleTemplate(
        name="testimony",
        inputs=(PortSpec("event", HYP_STATES),),
        outputs=("report",),
        params={
            "sensation_error": a,
            "objectivity_error": b,
            "veracity_error": c,
            "competence": competence_prob,
        },
        build=build,
    )


# ---------------------------------------------------------------------------
# case descriptions
# ---------------------------------------------------------------------------

CASE_KINDS = (
    "criminal",
    "paternity",
    "sibling_paternity",
    "mixture_network",
    "subpopulation",
    "fraction",
)


@dataclass(frozen=True)
class CaseSpec:
    """A case template instance: participants, table, and parameters.

    Only the fields a template reads need to be set; ``expand`` and the LR
    functions reject cases missing their required participants.

    Fields:
        kind: one of CASE_KINDS.
        participants: observed profiles by role (suspect, trace, mother,
            child, putative_father, sibling, victim, contributor1/2).
        freqs: allele frequency table.
        prior: prior probability of the top hypothesis (LRs are invariant
            to it on (0,1)).
        mutation_rate: uniform miscopy rate applied at every meiosis.
        founder: "iid" or "polya" (criminal template only; "polya" couples
            the four founder genes through the urn and needs Dirichlet data
            in the table).
        markers: markers to analyze; defaults to the trace/child markers.
        observed_alleles: mixture template, {marker: [labels]}.
        hyp_p_cell / hyp_d_cell: mixture template, (contributor1 is the
            suspect?, contributor2 is the victim?).
        subpop_tables / subpop_weights: subpopulation template.
        fraction_grid / peak_bins: fraction template.
    """

    kind: str
    participants: Mapping[str, Profile] = field(default_factory=dict)
    freqs: AlleleFreqTable | None = None
    prior: float = 0.5
    mutation_rate: float = 0.0
    founder: str = "iid"
    markers: tuple[str, ...] | None = None
    observed_alleles: Mapping[str, tuple[str, ...]] | None = None
    hyp_p_cell: tuple[bool, bool] = (True, True)
    hyp_d_cell: tuple[bool, bool] = (False, True)
    subpop_tables: tuple[AlleleFreqTable, ...] = ()
    subpop_weights: tuple[float, ...] = ()
    fraction_grid: tuple[float, ...] = ()
    peak_bins: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CASE_KINDS:
            raise MalformedCase(f"unknown case kind {self.kind!r}")
        if not 0.0 < self.prior < 1.0:
            raise MalformedCase("prior must lie strictly inside (0, 1)")

    def participant(self, role: str) -> Profile:
        try:
            return self.participants[role]
        except KeyError:
            raise MalformedCase(
                f"case kind {self.kind!r} needs participant {role!r}"
            ) from None


@dataclass(frozen=True)
class ExpandedCase:
    """A flattened case: network, evidence, and per-marker query nodes."""

    network: Network
    evidence: Mapping[str, str]
    queries: Mapping[str, str]       # marker -> hypothesis/target node
    prior: float
    engine_hint: str                 # "propagate" or "enumeration"


def _profile_state(prof: Profile, marker: str, freqs: AlleleFreqTable) -> str:
    mk = freqs.marker(marker)
    try:
        g = prof.genotype(marker)
    except KeyError:
        raise MalformedCase(
            f"participant profile has no genotype for marker {marker!r}"
        ) from None
    return genotype_state_label(mk, g)


def _case_markers(case: CaseSpec, anchor_role: str) -> tuple[str, ...]:
    if case.markers is not None:
        return tuple(case.markers)
    if case.kind == "mixture_network" and case.observed_alleles:
        return tuple(case.observed_alleles)
    return case.participant(anchor_role).markers()


# -- criminal identification (per-marker polytree, or urn-coupled) ---------

def _build_criminal_marker(builder, case: CaseSpec, marker: str, evidence: dict) -> str:
    freqs = case.freqs
    mk = freqs.marker(marker)
    g_states = genotype_states(mk.alleles)
    hyp = builder.add_node(
        f"{marker}.guilty", HYP_STATES, (), [case.prior, 1.0 - case.prior]
    )
    if case.founder == "polya":
        model = freqs.dirichlet_model(marker)
        if model is None:
            raise MalformedCase(
                f"founder='polya' needs Dirichlet data for marker {marker!r}"
            )
        genes = []
        for i in range(4):
            cpt = polya_conditional_cpt(model, i + 1)
            genes.append(builder.add_node(
                f"{marker}.g{i + 1}", mk.alleles, tuple(genes), cpt
            ))
        s_gt = builder.add_node(
            f"{marker}.suspect.genotype", g_states, (genes[0], genes[1]),
            _pair_cpt(mk.k),
        )
        o_gt = builder.add_node(
            f"{marker}.offender.genotype", g_states, (genes[2], genes[3]),
            _pair_cpt(mk.k),
        )
    else:
        s_gt = founder_module(marker, freqs).instantiate(
            builder, f"{marker}.suspect"
        )["genotype"]
        o_gt = founder_module(marker, freqs).instantiate(
            builder, f"{marker}.offender"
        )["genotype"]
    trace = selector_module(g_states).instantiate(
        builder, f"{marker}.trace",
        {"hypothesis": hyp, "when_true": s_gt, "when_false": o_gt},
    )["selected"]
    evidence[s_gt] = _profile_state(case.participant("suspect"), marker, freqs)
    evidence[trace] = _profile_state(case.participant("trace"), marker, freqs)
    return hyp


# -- paternity trio (per-marker polytree) -----------------------------------

def _maybe_mutate(builder, case, marker, path, gene):
    if case.mutation_rate > 0.0:
        return mutation_module(marker, case.freqs, case.mutation_rate).instantiate(
            builder, path, {"original_gene": gene}
        )["gene"]
    return gene


def _build_paternity_marker(builder, case: CaseSpec, marker: str, evidence: dict) -> str:
    freqs = case.freqs
    mk = freqs.marker(marker)
    g_states = genotype_states(mk.alleles)
    hyp = builder.add_node(
        f"{marker}.paternity", HYP_STATES, (), [case.prior, 1.0 - case.prior]
    )
    m_gt = founder_module(marker, freqs).instantiate(
        builder, f"{marker}.mother"
    )["genotype"]
    f_gt = founder_module(marker, freqs).instantiate(
        builder, f"{marker}.putative_father"
    )["genotype"]
    a_gt = founder_module(marker, freqs).instantiate(
        builder, f"{marker}.alternative_father"
    )["genotype"]
    tf_gt = selector_module(g_states).instantiate(
        builder, f"{marker}.true_father",
        {"hypothesis": hyp, "when_true": f_gt, "when_false": a_gt},
    )["selected"]
    pat_orig = meiosis_module(marker, freqs).instantiate(
        builder, f"{marker}.child.paternal", {"parent_genotype": tf_gt}
    )["gene"]
    pat = _maybe_mutate(builder, case, marker, f"{marker}.child.paternal_mut", pat_orig)
    mat_orig = meiosis_module(marker, freqs).instantiate(
        builder, f"{marker}.child.maternal", {"parent_genotype": m_gt}
    )["gene"]
    mat = _maybe_mutate(builder, case, marker, f"{marker}.child.maternal_mut", mat_orig)
    c_gt = builder.add_node(
        f"{marker}.child.genotype", g_states, (pat, mat), _pair_cpt(mk.k)
    )
    evidence[m_gt] = _profile_state(case.participant("mother"), marker, freqs)
    evidence[f_gt] = _profile_state(case.participant("putative_father"), marker, freqs)
    evidence[c_gt] = _profile_state(case.participant("child"), marker, freqs)
    return hyp


# -- sibling paternity (loopy; compact founders) -----------------------------

def _meiosis_mutation_cpt(k: int, rate: float) -> np.ndarray:
    """Meiosis and miscopy folded into one gene-given-genotype channel."""
    cpt = _meiosis_cpt(k)
    if rate > 0.0:
        cpt = cpt @ _mutation_cpt(k, rate)
    return cpt


def _build_sibling_marker(builder, case: CaseSpec, marker: str, evidence: dict) -> str:
    freqs = case.freqs
    mk = freqs.marker(marker)
    k = mk.k
    p = freqs.freqs(marker)
    g_states = genotype_states(mk.alleles)
    meio = _meiosis_mutation_cpt(k, case.mutation_rate)

    hyp = builder.add_node(
        f"{marker}.paternity", HYP_STATES, (), [case.prior, 1.0 - case.prior]
    )
    gf_gt = founder_module(marker, freqs, compact=True).instantiate(
        builder, f"{marker}.grandfather"
    )["genotype"]
    gm_gt = founder_module(marker, freqs, compact=True).instantiate(
        builder, f"{marker}.grandmother"
    )["genotype"]
    m_gt = founder_module(marker, freqs, compact=True).instantiate(
        builder, f"{marker}.mother"
    )["genotype"]

    f_pat = builder.add_node(f"{marker}.father.paternal", mk.alleles, (gf_gt,), meio)
    f_mat = builder.add_node(f"{marker}.father.maternal", mk.alleles, (gm_gt,), meio)
    s_pat = builder.add_node(f"{marker}.sibling.paternal", mk.alleles, (gf_gt,), meio)
    s_mat = builder.add_node(f"{marker}.sibling.maternal", mk.alleles, (gm_gt,), meio)
    s_gt = builder.add_node(
        f"{marker}.sibling.genotype", g_states, (s_pat, s_mat), _pair_cpt(k)
    )

    # child paternal gene given the putative father's two genes and the
    # hypothesis; under paternity a fair-coin pick of his genes, otherwise a
    # fresh draw for the marginalized alternative father (mutation folded
    # into both branches). The explicit true-father genotype node is
    # marginalized away to keep the loopy graph inside the enumeration cap.
    mut = _mutation_cpt(k, case.mutation_rate) if case.mutation_rate > 0 else np.eye(k)
    alt_row = p @ mut
    c_pat_cpt = np.zeros((k, k, 2, k))
    for a in range(k):
        for b in range(k):
            coin = 0.5 * mut[a] + 0.5 * mut[b]
            c_pat_cpt[a, b, 0] = coin
            c_pat_cpt[a, b, 1] = alt_row
    c_pat = builder.add_node(
        f"{marker}.child.paternal", mk.alleles, (f_pat, f_mat, hyp), c_pat_cpt
    )
    c_mat = builder.add_node(f"{marker}.child.maternal", mk.alleles, (m_gt,), meio)
    c_gt = builder.add_node(
        f"{marker}.child.genotype", g_states, (c_pat, c_mat), _pair_cpt(k)
    )

    evidence[m_gt] = _profile_state(case.participant("mother"), marker, freqs)
    evidence[s_gt] = _profile_state(case.participant("sibling"), marker, freqs)
    evidence[c_gt] = _profile_state(case.participant("child"), marker, freqs)
    return hyp


# -- two-contributor mixture network (loopy) ---------------------------------

CELL_STATES = ("suspect+victim", "suspect+unknown", "unknown+victim", "unknown+unknown")


def _cell_state(cell: tuple[bool, bool]) -> str:
    first = "suspect" if cell[0] else "unknown"
    second = "victim" if cell[1] else "unknown"
    return f"{first}+{second}"


def _genotype_allele_sets(alleles: tuple[str, ...]):
    out = []
    k = len(alleles)
    for i in range(k):
        for j in range(i, k):
            out.append({alleles[i], alleles[j]})
    return out


def _build_mixture_marker(builder, case: CaseSpec, marker: str, evidence: dict) -> str:
    freqs = case.freqs
    mk = freqs.marker(marker)
    g_states = genotype_states(mk.alleles)
    observed = case.observed_alleles or {}
    try:
        obs = set(observed[marker])
    except KeyError:
        raise MalformedCase(f"mixture case lacks observed alleles for {marker!r}")
    for a in obs:
        mk.index(a)

    h1 = builder.add_node(
        f"{marker}.contributor1_is_suspect", HYP_STATES, (),
        [case.prior, 1.0 - case.prior],
    )
    h2 = builder.add_node(
        f"{marker}.contributor2_is_victim", HYP_STATES, (),
        [case.prior, 1.0 - case.prior],
    )
    s_gt = founder_module(marker, freqs, compact=True).instantiate(
        builder, f"{marker}.suspect"
    )["genotype"]
    v_gt = founder_module(marker, freqs, compact=True).instantiate(
        builder, f"{marker}.victim"
    )["genotype"]
    u1_gt = founder_module(marker, freqs, compact=True).instantiate(
        builder, f"{marker}.unknown1"
    )["genotype"]
    u2_gt = founder_module(marker, freqs, compact=True).instantiate(
        builder, f"{marker}.unknown2"
    )["genotype"]
    i1 = selector_module(g_states).instantiate(
        builder, f"{marker}.contributor1",
        {"hypothesis": h1, "when_true": s_gt, "when_false": u1_gt},
    )["selected"]
    i2 = selector_module(g_states).instantiate(
        builder, f"{marker}.contributor2",
        {"hypothesis": h2, "when_true": v_gt, "when_false": u2_gt},
    )["selected"]

    sets = _genotype_allele_sets(mk.alleles)
    n_g = len(sets)
    for allele in sorted(obs):
        cpt = np.zeros((n_g, n_g, 2))
        for x in range(n_g):
            for y in range(n_g):
                present = allele in sets[x] | sets[y]
                cpt[x, y, 0 if present else 1] = 1.0
        node = builder.add_node(
            f"{marker}.allele_{allele}_present", HYP_STATES, (i1, i2), cpt
        )
        evidence[node] = "true"
    cpt = np.zeros((n_g, n_g, 2))
    for x in range(n_g):
        for y in range(n_g):
            clean = (sets[x] | sets[y]) <= obs
            cpt[x, y, 0 if clean else 1] = 1.0
    no_extra = builder.add_node(
        f"{marker}.no_unobserved_alleles", HYP_STATES, (i1, i2), cpt
    )
    evidence[no_extra] = "true"

    cell_cpt = np.zeros((2, 2, 4))
    for x in range(2):
        for y in range(2):
            cell_cpt[x, y, CELL_STATES.index(_cell_state((x == 0, y == 0)))] = 1.0
    cell = builder.add_node(f"{marker}.cell", CELL_STATES, (h1, h2), cell_cpt)

    evidence[s_gt] = _profile_state(case.participant("suspect"), marker, freqs)
    evidence[v_gt] = _profile_state(case.participant("victim"), marker, freqs)
    return cell


# -- subpopulation-coupled criminal case (loopy, single query) ---------------

def _build_subpopulation(builder, case: CaseSpec, evidence: dict) -> str:
    tables = case.subpop_tables
    weights = case.subpop_weights
    if len(tables) < 2:
        raise MalformedCase("subpopulation case needs >= 2 tables")
    if len(weights) != len(tables):
        raise MalformedCase("one mixing weight per subpopulation table")
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0) or not math.isclose(float(w.sum()), 1.0, abs_tol=1e-9):
        raise MalformedCase("mixing weights must be nonnegative and sum to 1")

    markers = _case_markers(case, "trace")
    base = tables[0]
    for t in tables[1:]:
        for marker in markers:
            if t.marker(marker).alleles != base.marker(marker).alleles:
                raise IncompatibleTables(
                    f"subpopulation tables disagree on alleles of {marker!r}"
                )

    names = tuple(
        t.subpopulation or f"subpop{i}" for i, t in enumerate(tables)
    )
    if len(set(names)) != len(names):
        names = tuple(f"subpop{i}" for i in range(len(tables)))
    sub = builder.add_node("subpopulation", names, (), w)
    hyp = builder.add_node("guilty", HYP_STATES, (), [case.prior, 1.0 - case.prior])

    for marker in markers:
        mk = base.marker(marker)
        k = mk.k
        g_states = genotype_states(mk.alleles)
        gene_cpt = np.stack([t.freqs(marker) for t in tables])   # (S, K)
        for actor in ("suspect", "offender"):
            pat = builder.add_node(
                f"{marker}.{actor}.paternal", mk.alleles, (sub,), gene_cpt
            )
            mat = builder.add_node(
                f"{marker}.{actor}.maternal", mk.alleles, (sub,), gene_cpt
            )
            builder.add_node(
                f"{marker}.{actor}.genotype", g_states, (pat, mat), _pair_cpt(k)
            )
        trace = selector_module(g_states).instantiate(
            builder, f"{marker}.trace",
            {
                "hypothesis": hyp,
                "when_true": f"{marker}.suspect.genotype",
                "when_false": f"{marker}.offender.genotype",
            },
        )["selected"]
        evidence[f"{marker}.suspect.genotype"] = _profile_state(
            case.participant("suspect"), marker, base
        )
        evidence[trace] = _profile_state(case.participant("trace"), marker, base)
    return hyp


# -- shared mixture-fraction template ----------------------------------------

def fraction_marker_module(
    marker: str,
    freqs: AlleleFreqTable,
    grid: Sequence[float],
) -> ModuleTemplate:
    """Per-marker discretized peak-fraction observation.

    The peak-bin node is conditioned on both contributor genotypes and the
    shared fraction node. When the two genotypes display four distinct
    alleles the idealized minor-peak fraction min(f, 1-f) lands
    deterministically in the nearest grid bin; with fewer distinct alleles
    masking makes the readout uninformative (uniform row).
    """
    grid = tuple(float(g) for g in grid)
    if not grid or any(not 0.0 < g < 1.0 for g in grid) or len(set(grid)) != len(grid):
        raise InvalidGrid("fraction grid must be distinct values inside (0, 1)")
    mk = freqs.marker(marker)
    g_states = genotype_states(mk.alleles)
    grid_states = tuple(f"{g:g}" for g in grid)
    sets = _genotype_allele_sets(mk.alleles)
    n_g = len(sets)

    def build(builder, path, bindings):
        cpt = np.zeros((n_g, n_g, len(grid), len(grid)))
        for x in range(n_g):
            for y in range(n_g):
                distinct = len(sets[x] | sets[y])
                for fi, f in enumerate(grid):
                    if distinct == 4:
                        m_hat = min(f, 1.0 - f)
                        bin_idx = int(np.argmin([abs(g - m_hat) for g in grid]))
                        cpt[x, y, fi, bin_idx] = 1.0
                    else:
                        cpt[x, y, fi, :] = 1.0 / len(grid)
        node = builder.add_node(
            f"{path}.peak_bin",
            grid_states,
            (bindings["genotype1"], bindings["genotype2"], bindings["fraction"]),
            cpt,
        )
        return {"peak_bin": node}

    return ModuleTemplate(
        name="fraction_marker",
        inputs=(
            PortSpec("genotype1", g_states),
            PortSpec("genotype2", g_states),
            PortSpec("fraction", grid_states),
        ),
        outputs=("peak_bin",),
        params={"marker": marker, "grid": grid},
        build=build,
    )


def _build_fraction(builder, case: CaseSpec, evidence: dict) -> str:
    grid = tuple(float(g) for g in case.fraction_grid)
    if not grid:
        raise InvalidGrid("fraction case needs a fraction grid")
    markers = _case_markers(case, "contributor1")
    grid_states = tuple(f"{g:g}" for g in grid)
    fraction = builder.add_node(
        "fraction", grid_states, (), np.full(len(grid), 1.0 / len(grid))
    )
    for marker in markers:
        gt1 = founder_module(marker, case.freqs, compact=True).instantiate(
            builder, f"{marker}.contributor1"
        )["genotype"]
        gt2 = founder_module(marker, case.freqs, compact=True).instantiate(
            builder, f"{marker}.contributor2"
        )["genotype"]
        peak = fraction_marker_module(marker, case.freqs, grid).instantiate(
            builder, f"{marker}",
            {"genotype1": gt1, "genotype2": gt2, "fraction": fraction},
        )["peak_bin"]
        evidence[gt1] = _profile_state(case.participant("contributor1"), marker, case.freqs)
        evidence[gt2] = _profile_state(case.participant("contributor2"), marker, case.freqs)
        if marker in case.peak_bins:
            value = float(case.peak_bins[marker])
            idx = int(np.argmin([abs(g - value) for g in grid]))
            evidence[peak] = grid_states[idx]
    return fraction


# ---------------------------------------------------------------------------
# expansion and case-level queries
# ---------------------------------------------------------------------------

_MARKER_BUILDERS = {
    "criminal": (_build_criminal_marker, "trace"),
    "paternity": (_build_paternity_marker, "child"),
    "sibling_paternity": (_build_sibling_marker, "child"),
    "mixture_network": (_build_mixture_marker, "suspect"),
}


def expand_case(case: CaseSpec) -> ExpandedCase:
    """Flatten a case into one Network plus its evidence and query nodes.

    Per-marker templates expand each marker into its own connected
    component (namespaced ``<marker>.<instance>.<node>``); the
    subpopulation and fraction templates couple all markers through their
    shared node. Expansion is deterministic.
    """
    if case.freqs is None and case.kind != "subpopulation":
        raise MalformedCase("case needs a frequency table")
    builder = NetworkBuilder()
    evidence: dict[str, str] = {}
    if case.kind in _MARKER_BUILDERS:
        build_marker, anchor = _MARKER_BUILDERS[case.kind]
        markers = _case_markers(case, anchor)
        if not markers:
            raise MalformedCase("case analyzes no markers")
        queries = {}
        for marker in markers:
            queries[marker] = build_marker(builder, case, marker, evidence)
        hint = "propagate" if case.kind in ("criminal", "paternity") else "enumeration"
        if case.kind == "criminal" and case.founder == "polya":
            hint = "enumeration"
        net = builder.build()
        return ExpandedCase(net, evidence, queries, case.prior, hint)
    if case.kind == "subpopulation":
        target = _build_subpopulation(builder, case, evidence)
        return ExpandedCase(
            builder.build(), evidence, {"__all__": target}, case.prior, "enumeration"
        )
    if case.kind == "fraction":
        target = _build_fraction(builder, case, evidence)
        return ExpandedCase(
            builder.build(), evidence, {"__all__": target}, case.prior, "enumeration"
        )
    raise MalformedCase(f"unknown case kind {case.kind!r}")


def expand(case: CaseSpec) -> Network:
    """The flat Network of a case (evidence and queries via expand_case)."""
    return expand_case(case).network


def _odds_ratio_lr(posterior_true: float, prior: float) -> float:
    """LR from the posterior of a Boolean hypothesis node."""
    if posterior_true >= 1.0:
        return math.inf
    post_odds = posterior_true / (1.0 - posterior_true)
    prior_odds = prior / (1.0 - prior)
    return post_odds / prior_odds


def _per_marker_lrs(case: CaseSpec, label: str) -> LRValue:
    expanded = expand_case(case)
    components = []
    combined = 1.0
    for marker, target in expanded.queries.items():
        sub = component_subnetwork(expanded.network, target)
        names = set(sub.names())
        ev = {n: s for n, s in expanded.evidence.items() if n in names}
        post, _engine = infer(sub, ev, target)
        lr = _odds_ratio_lr(float(post[0]), expanded.prior)
        components.append(MarkerLR(marker, label, None, lr))
        combined *= lr
    return LRValue(combined, tuple(components))


def criminal_case_lr(case: CaseSpec) -> LRValue:
    """LR that the suspect, not an unknown offender, left the crime trace.

    Per marker the posterior odds of the hypothesis node against its prior
    give the marker LR; markers multiply. Equals the analytic single-source
    LR at θ=0 for i.i.d. founders; with founder="polya" the four founder
    genes are urn-coupled and database uncertainty deflates matching LRs.
    """
    if case.kind != "criminal":
        raise MalformedCase("criminal_case_lr needs a criminal case")
    return _per_marker_lrs(case, "guilty")


def paternity_lr(case: CaseSpec) -> LRValue:
    """Paternity index: putative father vs unrelated alternative father.

    The trio variant observes mother, child, and putative father; the
    sibling variant observes mother, child, and the putative father's
    sibling, routing paternity through the shared grandparents.
    """
    if case.kind not in ("paternity", "sibling_paternity"):
        raise MalformedCase("paternity_lr needs a paternity case")
    return _per_marker_lrs(case, "paternity")


def mixture_network_lr(case: CaseSpec) -> LRValue:
    """Two-contributor mixture LR from the four-cell hypothesis grid.

    Per marker the posterior over the contributor-combination cell node is
    read off, and the LR between the requested prosecution and defense
    cells is their posterior ratio corrected by the prior ratio.
    """
    if case.kind != "mixture_network":
        raise MalformedCase("mixture_network_lr needs a mixture_network case")
    expanded = expand_case(case)
    p_cell = CELL_STATES.index(_cell_state(case.hyp_p_cell))
    d_cell = CELL_STATES.index(_cell_state(case.hyp_d_cell))
    prior_p = (case.prior if case.hyp_p_cell[0] else 1 - case.prior) * (
        case.prior if case.hyp_p_cell[1] else 1 - case.prior
    )
    prior_d = (case.prior if case.hyp_d_cell[0] else 1 - case.prior) * (
        case.prior if case.hyp_d_cell[1] else 1 - case.prior
    )
    components = []
    combined = 1.0
    for marker, target in expanded.queries.items():
        sub = component_subnetwork(expanded.network, target)
        names = set(sub.names())
        ev = {n: s for n, s in expanded.evidence.items() if n in names}
        post, _engine = infer(sub, ev, target)
        num = float(post[p_cell]) / prior_p
        den = float(post[d_cell]) / prior_d
        lr = math.inf if den == 0.0 else num / den
        components.append(MarkerLR(marker, "mixture", None, lr))
        combined *= lr
    return LRValue(combined, tuple(components))


def cell_posterior(case: CaseSpec, marker: str) -> dict[str, float]:
    """Posterior over the four contributor combinations at one marker."""
    expanded = expand_case(case)
    target = expanded.queries[marker]
    sub = component_subnetwork(expanded.network, target)
    names = set(sub.names())
    ev = {n: s for n, s in expanded.evidence.items() if n in names}
    post, _ = infer(sub, ev, target)
    return dict(zip(CELL_STATES, (float(x) for x in post)))


def subpopulation_network(case: CaseSpec) -> Network:
    """Criminal-case network with founder genes drawn per a shared
    subpopulation indicator (one indicator for every actor and marker)."""
    if case.kind != "subpopulation":
        raise MalformedCase("subpopulation_network needs a subpopulation case")
    return expand_case(case).network


def subpopulation_lr(case: CaseSpec) -> LRValue:
    """Guilt LR under subpopulation uncertainty (single coupled query)."""
    expanded = expand_case(case)
    target = expanded.queries["__all__"]
    post, _ = infer(expanded.network, expanded.evidence, target)
    lr = _odds_ratio_lr(float(post[0]), expanded.prior)
    return LRValue(lr, (MarkerLR("combined", "guilty", None, lr),))


def mixture_fraction_posterior(case: CaseSpec) -> dict[str, float]:
    """Posterior over the shared fraction grid given per-marker peak bins.

    The fraction node is the sanctioned cross-marker coupling, so the query
    always runs on the enumeration engine (trivial at desk scale with the
    contributor genotypes observed).
    """
    if case.kind != "fraction":
        raise MalformedCase("mixture_fraction_posterior needs a fraction case")
    expanded = expand_case(case)
    target = expanded.queries["__all__"]
    post = enumerate_joint(expanded.network, expanded.evidence, target)
    states = expanded.network.node(target).states
    return dict(zip(states, (float(x) for x in post)))


__all__ = [
    "HYP_STATES",
    "CELL_STATES",
    "CASE_KINDS",
    "NetworkBuilder",
    "PortSpec",
    "ModuleTemplate",
    "CaseSpec",
    "ExpandedCase",
    "founder_module",
    "meiosis_module",
    "mutation_module",
    "selector_module",
    "accuracy_module",
    "testimony_module",
    "fraction_marker_module",
    "expand",
    "expand_case",
    "criminal_case_lr",
    "paternity_lr",
    "mixture_network_lr",
    "cell_posterior",
    "subpopulation_network",
    "subpopulation_lr",
    "mixture_fraction_posterior",
]
