"""Allele-frequency tables and the Dirichlet / Pólya-urn population model.

A frequency table maps each STR marker to a vector of allele relative
frequencies, optionally tagged with a subpopulation name. Database
uncertainty about those frequencies is carried by a Dirichlet-multinomial
model: a Dirichlet(α) prior updated with observed allele counts Y gives a
Dirichlet(α+Y) posterior with mean ρ_j = (α_j+Y_j)/M, M = N + Σα_j. Founder
genes drawn i.i.d. from the posterior are equivalently generated by a Pólya
urn: the n-th draw copies each earlier draw with probability 1/(M+n-1) and
otherwise samples fresh from ρ.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import (
    DimensionMismatch,
    FrequencySumOutOfTolerance,
    MalformedTable,
    NonpositivePrior,
    TooManyDraws,
    UnknownAllele,
    UnknownMarker,
)

# Renormalize silently when the per-marker sum is within this of 1; reject
# otherwise.
SUM_TOLERANCE = 1e-6

# Exact urn joints are exponential in the draw count; covers the shipped
# pedigree templates (<= 4-6 founder genes).
MAX_URN_DRAWS = 6


@dataclass(frozen=True)
class Marker:
    """An STR marker: a name plus its ordered allele labels (K >= 2)."""

    name: str
    alleles: tuple[str, ...]

    def __post_init__(self):
        if len(self.alleles) < 2:
            raise MalformedTable(f"marker {self.name!r} needs >= 2 alleles")
        if len(set(self.alleles)) != len(self.alleles):
            raise MalformedTable(f"marker {self.name!r} has duplicate allele labels")

    @property
    def k(self) -> int:
        return len(self.alleles)

    def index(self, allele: str) -> int:
        try:
            return self.alleles.index(allele)
        except ValueError:
            raise UnknownAllele(
                f"allele {allele!r} not defined for marker {self.name!r}"
            ) from None


@dataclass(frozen=True)
class DirichletModel:
    """Dirichlet posterior for one marker's allele frequencies.

    Attributes:
        alpha: prior parameters, all > 0.
        counts: observed allele counts Y, all >= 0 integers.
    Derived: N = ΣY, M = N + Σα, rho_j = (α_j + Y_j)/M (the database allele
    relative frequency and the mean of the posterior Dirichlet(Mρ)).
    """

    alpha: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.alpha) != len(self.counts):
            raise DimensionMismatch(
                f"prior has {len(self.alpha)} components, counts {len(self.counts)}"
            )
        if any(a <= 0 for a in self.alpha):
            raise NonpositivePrior("all Dirichlet prior components must be > 0")
        if any(y < 0 or y != int(y) for y in self.counts):
            raise ValueError("counts must be nonnegative integers")

    @property
    def k(self) -> int:
        return len(self.alpha)

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def m(self) -> float:
        return self.n + float(sum(self.alpha))

    @property
    def posterior(self) -> np.ndarray:
        """Posterior parameters α_j + Y_j."""
        return np.asarray(self.alpha, dtype=float) + np.asarray(self.counts, dtype=float)

    @property
    def rho(self) -> np.ndarray:
        """Posterior mean allele frequencies ρ."""
        return self.posterior / self.m


def dirichlet_posterior(prior, counts) -> DirichletModel:
    """Conjugate update: Dirichlet(α) prior + multinomial counts Y.

    Args:
        prior: sequence of α_j > 0.
        counts: sequence of nonnegative integer allele counts Y_j.

    Returns:
        DirichletModel with posterior parameters α_j + Y_j.
    """
    return DirichletModel(alpha=tuple(float(a) for a in prior),
                          counts=tuple(int(y) for y in counts))


def polya_marginal(model: DirichletModel, draw_index: int) -> np.ndarray:
    """Marginal distribution of the n-th founder gene under the urn.

    By exchangeability every draw has the same marginal ρ, so the draw index
    only gates the precondition n >= 1.
    """
    if draw_index < 1:
        raise ValueError("draw index must be >= 1")
    return model.rho.copy()


def polya_joint(model: DirichletModel, n: int) -> np.ndarray:
    """Exact joint distribution of the first n urn draws.

    Built by the urn recursion: draw g_t copies each earlier draw with
    probability 1/(M+t-1) and otherwise samples fresh from ρ, i.e.
    P(g_t = j | g_1..g_{t-1}) = (c_j + M ρ_j) / (M + t - 1) with c_j the
    count of type j among the earlier draws.

    Args:
        model: Dirichlet posterior supplying M and ρ.
        n: number of draws, 1 <= n <= 6.

    Returns:
        ndarray of shape (K,)*n; entry [j1,...,jn] is P(g_1=j1,...,g_n=jn).

    Raises:
        TooManyDraws: if n exceeds the enumeration cap.
    """
    if n < 1:
        raise ValueError("need at least one draw")
    if n > MAX_URN_DRAWS:
        raise TooManyDraws(f"polya_joint capped at n={MAX_URN_DRAWS}, got {n}")
    k = model.k
    m = model.m
    rho = model.rho
    joint = rho.copy()                       # flat over k^1 prefixes
    # counts[p, j] = occurrences of type j in prefix p
    counts = np.eye(k, dtype=np.float64)
    for t in range(2, n + 1):
        cond = (counts + m * rho) / (m + t - 1)        # (k^(t-1), k)
        joint = (joint.reshape(-1, 1) * cond).reshape(-1)
        if t < n:
            counts = np.repeat(counts, k, axis=0)
            last = np.tile(np.arange(k), k ** (t - 1))
            counts[np.arange(counts.shape[0]), last] += 1.0
    out = joint.reshape((k,) * n)
    out.flags.writeable = False
    return out


def polya_conditional_cpt(model: DirichletModel, n: int) -> np.ndarray:
    """CPT of the n-th draw given draws 1..n-1, for network encodings.

    Shape (K,)*(n-1) + (K,); row [j1..j_{n-1}, :] is the urn predictive
    (c + Mρ)/(M+n-1). For n=1 returns ρ with shape (K,).
    """
    if n < 1:
        raise ValueError("draw index must be >= 1")
    k = model.k
    if n == 1:
        return model.rho.copy()
    m = model.m
    shape = (k,) * (n - 1)
    cpt = np.empty(shape + (k,), dtype=np.float64)
    for prefix in np.ndindex(*shape):
        c = np.bincount(prefix, minlength=k).astype(np.float64)
        cpt[prefix] = (c + m * model.rho) / (m + n - 1)
    return cpt


@dataclass(frozen=True)
class AlleleFreqTable:
    """Per-marker allele relative frequencies, optionally per subpopulation."""

    markers: Mapping[str, Marker]
    frequencies: Mapping[str, np.ndarray]
    subpopulation: str | None = None
    provenance: str = "inline"
    dirichlet: Mapping[str, DirichletModel] = field(default_factory=dict)

    def marker(self, name: str) -> Marker:
        try:
            return self.markers[name]
        except KeyError:
            raise UnknownMarker(f"marker {name!r} not in table {self.provenance}") from None

    def freqs(self, marker: str) -> np.ndarray:
        self.marker(marker)
        return self.frequencies[marker]

    def freq(self, marker: str, allele: str) -> float:
        """Frequency of one allele; raises UnknownMarker/UnknownAllele."""
        m = self.marker(marker)
        return float(self.frequencies[marker][m.index(allele)])

    def marker_names(self) -> tuple[str, ...]:
        return tuple(self.markers)

    def dirichlet_model(self, marker: str) -> DirichletModel | None:
        self.marker(marker)
        return self.dirichlet.get(marker)


def _normalize(name: str, freqs: np.ndarray) -> np.ndarray:
    if np.any(freqs < 0):
        raise MalformedTable(f"marker {name!r}: negative frequency")
    total = float(freqs.sum())
    if abs(total - 1.0) > SUM_TOLERANCE:
        raise FrequencySumOutOfTolerance(
            f"marker {name!r}: frequencies sum to {total:.9f}, "
            f"outside 1 +/- {SUM_TOLERANCE}"
        )
    out = freqs / total
    out.flags.writeable = False
    return out


def load_frequency_table(source, provenance: str | None = None) -> AlleleFreqTable:
    """Load a frequency table from a JSON document.

    Accepts a dict, a JSON string, or a path to a JSON file. Document shape:

        { "<marker>": { "<allele>": frequency, ... }, ...,
          "subpopulation": "name",                      # optional
          "dirichlet": { "alpha":  { "<marker>": { "<allele>": a } },
                         "counts": { "<marker>": { "<allele>": y } } } }

    Every non-reserved top-level key is a marker. Frequencies are
    renormalized when their sum is within 1e-6 of 1 and rejected otherwise.
    A marker appearing only under "dirichlet" gets its frequencies from the
    posterior mean ρ. Omitted alphas default to the flat prior α_j = 1.

    Raises:
        MalformedTable, FrequencySumOutOfTolerance.
    """
    if isinstance(source, (str, Path)) and not (
        isinstance(source, str) and source.lstrip().startswith("{")
    ):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise MalformedTable(f"{path}: {exc}") from exc
        provenance = provenance or str(path)
    elif isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise MalformedTable(str(exc)) from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise MalformedTable("frequency table document must be a JSON object")
    provenance = provenance or "inline"

    subpop = doc.get("subpopulation")
    dirichlet_doc = doc.get("dirichlet", {})
    if not isinstance(dirichlet_doc, dict):
        raise MalformedTable('"dirichlet" must be an object')
    alpha_doc = dirichlet_doc.get("alpha", {})
    counts_doc = dirichlet_doc.get("counts", {})

    markers: dict[str, Marker] = {}
    freqs: dict[str, np.ndarray] = {}
    models: dict[str, DirichletModel] = {}

    marker_entries = {
        k: v for k, v in doc.items() if k not in ("subpopulation", "dirichlet")
    }
    for name in set(counts_doc) - set(marker_entries):
        marker_entries[name] = None     # frequencies come from the posterior

    for name, entry in marker_entries.items():
        count_map = counts_doc.get(name)
        if entry is not None:
            if not isinstance(entry, dict) or not all(
                isinstance(v, (int, float)) for v in entry.values()
            ):
                raise MalformedTable(f"marker {name!r}: expected allele->frequency map")
            labels = tuple(str(a) for a in entry)
            marker = Marker(name, labels)
            vec = np.array([float(entry[a]) for a in entry], dtype=np.float64)
        else:
            labels = tuple(str(a) for a in count_map)
            marker = Marker(name, labels)
            vec = None
        if count_map is not None:
            counts = [int(count_map.get(a, 0)) for a in labels]
            alpha_map = alpha_doc.get(name, {})
            alpha = [float(alpha_map.get(a, 1.0)) for a in labels]
            models[name] = dirichlet_posterior(alpha, counts)
            if vec is None:
                vec = models[name].rho
        markers[name] = marker
        freqs[name] = _normalize(name, vec)

    if not markers:
        raise MalformedTable("frequency table defines no markers")
    return AlleleFreqTable(
        markers=markers,
        frequencies=freqs,
        subpopulation=subpop,
        provenance=provenance,
        dirichlet=models,
    )


def table_from_frequencies(
    freqs: Mapping[str, Mapping[str, float]],
    subpopulation: str | None = None,
    provenance: str = "inline",
) -> AlleleFreqTable:
    """Build a table directly from {marker: {allele: frequency}}."""
    doc: dict = dict(freqs)
    if subpopulation is not None:
        doc["subpopulation"] = subpopulation
    return load_frequency_table(doc, provenance=provenance)


def flat_prior(k: int) -> tuple[float, ...]:
    """Default least-informative Dirichlet prior α_j = 1."""
    return (1.0,) * k


def iid_joint(model: DirichletModel, n: int) -> np.ndarray:
    """Joint of n i.i.d. draws from ρ, the M -> infinity limit of the urn."""
    rho = model.rho
    out = rho
    for _ in range(n - 1):
        out = np.multiply.outer(out, rho)
    return out


__all__ = [
    "Marker",
    "DirichletModel",
    "AlleleFreqTable",
    "dirichlet_posterior",
    "polya_marginal",
    "polya_joint",
    "polya_conditional_cpt",
    "load_frequency_table",
    "table_from_frequencies",
    "flat_prior",
    "iid_joint",
    "MAX_URN_DRAWS",
    "SUM_TOLERANCE",
]
