"""Genotype probabilities under HWE and with the co-ancestry correction.

Under Hardy-Weinberg equilibrium a genotype's probability is the product of
its allele probabilities (squared if homozygous, doubled if heterozygous),
and linkage equilibrium lets per-marker values multiply across loci. Inside
a subpopulation with co-ancestry coefficient θ the draws are not independent:
having seen m copies of allele A among n sampled alleles, the next draw is A
with probability (mθ + (1-θ)p_A) / (1 + (n-1)θ). Chaining that conditional
gives the probability of any allele multiset and, conditioning on the
suspect's two alleles, the probability that a second person in the
subpopulation shares the suspect's genotype (the match probability that
enters the single-source LR denominator).

Everything here is a pure function over immutable inputs; thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Mapping

import numpy as np

from .errors import TooManyDraws
from .population import AlleleFreqTable

# Conservative courtroom presets: individuals related at least as first
# cousins, or as siblings.
THETA_PRESETS = {"first-cousins": 0.0625, "siblings": 0.25}

# Desk-scale cap on the multiset recursion.
MAX_MULTISET_DRAWS = 8


def resolve_theta(theta) -> float:
    """Map a number or a named preset to a θ value in [0, 1]."""
    if isinstance(theta, str):
        try:
            value = THETA_PRESETS[theta]
        except KeyError:
            raise ValueError(
                f"unknown theta preset {theta!r}; options: {sorted(THETA_PRESETS)}"
            ) from None
    else:
        value = float(theta)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class Genotype:
    """Unordered allele pair at one marker; (a, b) and (b, a) are equal."""

    marker: str
    a1: str
    a2: str

    def __post_init__(self):
        if self.a2 < self.a1:
            lo, hi = self.a2, self.a1
            object.__setattr__(self, "a1", lo)
            object.__setattr__(self, "a2", hi)

    @property
    def alleles(self) -> tuple[str, str]:
        return (self.a1, self.a2)

    @property
    def homozygous(self) -> bool:
        return self.a1 == self.a2

    def __str__(self) -> str:
        return f"{self.a1}/{self.a2}"


@dataclass(frozen=True)
class Profile:
    """Multi-marker genotype map for one person (at most one per marker)."""

    genotypes: tuple[Genotype, ...]

    def __post_init__(self):
        markers = [g.marker for g in self.genotypes]
        if len(set(markers)) != len(markers):
            raise ValueError("profile has more than one genotype for a marker")

    @classmethod
    def from_dict(cls, d: Mapping[str, tuple[str, str] | list]) -> "Profile":
        """Build from {marker: (a1, a2)}; allele labels are coerced to str."""
        return cls(tuple(
            Genotype(m, str(pair[0]), str(pair[1])) for m, pair in d.items()
        ))

    def genotype(self, marker: str) -> Genotype:
        for g in self.genotypes:
            if g.marker == marker:
                return g
        raise KeyError(marker)

    def markers(self) -> tuple[str, ...]:
        return tuple(g.marker for g in self.genotypes)

    def __len__(self) -> int:
        return len(self.genotypes)


def genotype_prob_hwe(g: Genotype, freqs: AlleleFreqTable) -> float:
    """HWE genotype probability: p^2 if homozygous, 2 p_A p_B otherwise."""
    p1 = freqs.freq(g.marker, g.a1)
    if g.homozygous:
        return p1 * p1
    p2 = freqs.freq(g.marker, g.a2)
    return 2.0 * p1 * p2


def profile_prob(profile: Profile, freqs: AlleleFreqTable) -> float:
    """Multi-marker profile probability under HWE and linkage equilibrium."""
    p = 1.0
    for g in profile.genotypes:
        p *= genotype_prob_hwe(g, freqs)
    return p


def conditional_allele_prob(
    allele: str,
    m: int,
    n: int,
    theta,
    freqs: AlleleFreqTable,
    marker: str,
) -> float:
    """P(next draw is `allele` | m copies of it among n sampled), θ-corrected.

    Evaluates (mθ + (1-θ) p_A) / (1 + (n-1)θ). The empty conditioning n=0
    returns p_A directly (the formula's (1-θ) factors cancel there, and the
    explicit branch keeps θ=1 well defined).
    """
    if not 0 <= m <= n:
        raise ValueError(f"need 0 <= m <= n, got m={m}, n={n}")
    th = resolve_theta(theta)
    p = freqs.freq(marker, allele)
    if n == 0:
        return p
    return (m * th + (1.0 - th) * p) / (1.0 + (n - 1) * th)


def multiset_prob(
    counts: Mapping[str, int],
    theta,
    freqs: AlleleFreqTable,
    marker: str,
) -> float:
    """Probability of drawing a given allele multiset from the subpopulation.

    Built by chaining the sampling conditional, one type at a time:
    P(A^{r+1} B^s) = P(A^r B^s) * (rθ + (1-θ)p_A) / (1 + (r+s-1)θ), scaled
    by d! for the d distinct types present. With two types this reproduces
    the closed forms P(A^2) = p_A(θ + (1-θ)p_A), P(AB) = 2 p_A p_B (1-θ),
    and their four-draw extensions; with θ=0 it reduces to
    d! * Π p_j^{r_j}.

    Args:
        counts: {allele label: copy count}, total <= 8.
        theta: co-ancestry coefficient or preset name.
        freqs/marker: frequency lookup.
    """
    total = sum(counts.values())
    if total > MAX_MULTISET_DRAWS:
        raise TooManyDraws(
            f"multiset recursion capped at {MAX_MULTISET_DRAWS} draws, got {total}"
        )
    if any(c < 0 for c in counts.values()):
        raise ValueError("allele counts must be nonnegative")
    th = resolve_theta(theta)
    prob = 1.0
    drawn = 0
    distinct = 0
    for allele, r in counts.items():
        if r == 0:
            continue
        distinct += 1
        p = freqs.freq(marker, allele)
        for k in range(r):
            if drawn == 0:
                prob *= p
            else:
                prob *= (k * th + (1.0 - th) * p) / (1.0 + (drawn - 1) * th)
            drawn += 1
    return prob * factorial(distinct)


def match_prob(g: Genotype, theta, freqs: AlleleFreqTable) -> float:
    """P(another subpopulation member has genotype g | suspect has g).

    Conditions on the suspect's two alleles already seen (n=2):

        homozygous:   (2θ + (1-θ)p_A)(3θ + (1-θ)p_A) / ((1+θ)(1+2θ))
        heterozygous: 2 (θ + (1-θ)p_A)(θ + (1-θ)p_B) / ((1+θ)(1+2θ))

    At θ=0 this reduces to the HWE genotype probability.
    """
    th = resolve_theta(theta)
    denom = (1.0 + th) * (1.0 + 2.0 * th)
    p_a = freqs.freq(g.marker, g.a1)
    if g.homozygous:
        return (2.0 * th + (1.0 - th) * p_a) * (3.0 * th + (1.0 - th) * p_a) / denom
    p_b = freqs.freq(g.marker, g.a2)
    return 2.0 * (th + (1.0 - th) * p_a) * (th + (1.0 - th) * p_b) / denom


def genotype_states(marker_alleles: tuple[str, ...]) -> tuple[str, ...]:
    """Canonical unordered-pair state labels "a/b" (i <= j in label order)."""
    k = len(marker_alleles)
    return tuple(
        f"{marker_alleles[i]}/{marker_alleles[j]}"
        for i in range(k)
        for j in range(i, k)
    )


def genotype_state_label(marker, g: Genotype) -> str:
    """State label of a genotype in the marker's declared allele order.

    Genotype itself orders alleles lexicographically for equality; network
    state spaces order pairs by the marker's label indices, so the two can
    disagree (e.g. alleles declared as "9", "14").
    """
    i, j = sorted((marker.index(g.a1), marker.index(g.a2)))
    return f"{marker.alleles[i]}/{marker.alleles[j]}"


def hwe_genotype_distribution(marker: str, freqs: AlleleFreqTable):
    """HWE prior over the canonical genotype states of a marker.

    Returns (state labels, probability vector) aligned with
    genotype_states(); used by the network templates for founder priors.
    """
    mk = freqs.marker(marker)
    p = freqs.freqs(marker)
    labels = genotype_states(mk.alleles)
    probs = []
    for i in range(mk.k):
        for j in range(i, mk.k):
            probs.append(p[i] * p[j] * (1.0 if i == j else 2.0))
    return labels, np.asarray(probs, dtype=float)


__all__ = [
    "Genotype",
    "Profile",
    "genotype_prob_hwe",
    "profile_prob",
    "conditional_allele_prob",
    "multiset_prob",
    "match_prob",
    "genotype_states",
    "genotype_state_label",
    "hwe_genotype_distribution",
    "resolve_theta",
    "THETA_PRESETS",
    "MAX_MULTISET_DRAWS",
]
