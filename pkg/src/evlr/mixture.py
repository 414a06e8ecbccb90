"""DNA mixture quantities: proportion, RMNE exclusion, LR, masking.

A mixed stain shows the allele union of its contributors. The mixture
proportion estimates the minor contributor's share from the four peak
heights of a two-person four-allele marker. The random-man-not-excluded
approach computes, per locus, the probability that a random person carries
an allele outside the observed set (with the θ-corrected variant strictly
below the HWE value), combined across loci as 1 - Π(1-P_l). The LR approach
instead enumerates genotype assignments for the unknown contributors under
each hypothesis, requiring the contributors' allele union to equal the
observed set exactly (no drop-in/drop-out modeled).

All computations are pure; per-marker evaluations are independent under
linkage equilibrium.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import (
    BothZero,
    InconsistentKnowns,
    TooManyContributors,
    WrongPeakCount,
)
from .evaluation import LRValue, MarkerLR
from .genetics import Profile, resolve_theta
from .population import AlleleFreqTable

MAX_CONTRIBUTORS = 4


# ---------------------------------------------------------------------------
# peak-height mixture proportion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeakProfile:
    """Electropherogram peaks per marker: (allele label, height in RFU)."""

    peaks: Mapping[str, tuple[tuple[str, float], ...]]

    def __post_init__(self):
        for marker, entries in self.peaks.items():
            labels = [a for a, _ in entries]
            if len(set(labels)) != len(labels):
                raise ValueError(f"marker {marker!r}: duplicate peak labels")
            if any(h <= 0 for _, h in entries):
                raise ValueError(f"marker {marker!r}: peak heights must be positive")

    @classmethod
    def from_dict(cls, d: Mapping[str, Sequence]) -> "PeakProfile":
        return cls({
            m: tuple((str(a), float(h)) for a, h in entries)
            for m, entries in d.items()
        })

    def proportion(self, marker: str) -> float:
        return mixture_proportion(self.peaks[marker])

    def markers(self) -> tuple[str, ...]:
        return tuple(self.peaks)


def mixture_proportion(peaks: Sequence[tuple[str, float]]) -> float:
    """Minor-contributor proportion from four peaks at one marker.

    The two smallest peaks are the minor pair (ties resolved toward minor,
    which is conservative because it cannot raise the estimate):

        M = (min1 + min2) / (maj1 + maj2 + min1 + min2)

    Raises:
        WrongPeakCount: unless exactly four peaks with positive heights and
            distinct allele labels are supplied.
    """
    if len(peaks) != 4:
        raise WrongPeakCount(f"need exactly 4 peaks, got {len(peaks)}")
    labels = [a for a, _ in peaks]
    if len(set(labels)) != 4:
        raise WrongPeakCount("peak allele labels must be distinct")
    heights = [float(h) for _, h in peaks]
    if any(h <= 0 for h in heights):
        raise WrongPeakCount("peak heights must be positive")
    heights.sort()
    minor = heights[0] + heights[1]
    return minor / sum(heights)


# ---------------------------------------------------------------------------
# exclusion probabilities (RMNE / CPI)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExclusionResult:
    """Per-locus and combined exclusion probabilities with the θ used."""

    per_locus: Mapping[str, float]
    combined: float
    theta: float

    @property
    def inclusion(self) -> float:
        """Cumulative probability of inclusion, the RMNE complement."""
        return 1.0 - self.combined


def exclusion_prob_locus(
    observed: Iterable[str], freqs: AlleleFreqTable, theta, marker: str
) -> float:
    """Probability a random person is excluded by the observed allele set.

    With S the summed frequency of the observed alleles: 1 - S^2 under HWE,
    and 1 - S^2 - θ S (1 - S) with co-ancestry, which is smaller for
    0 < S < 1.
    """
    alleles = set(observed)
    if not alleles:
        raise ValueError("observed allele set is empty")
    th = resolve_theta(theta)
    s = sum(freqs.freq(marker, a) for a in alleles)
    return 1.0 - s * s - th * s * (1.0 - s)


def combine_exclusion(per_locus: Iterable[float]) -> float:
    """Cross-locus exclusion: 1 - Π(1 - P_l)."""
    out = 1.0
    for p in per_locus:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"per-locus exclusion {p} outside [0, 1]")
        out *= 1.0 - p
    return 1.0 - out


def random_man_not_excluded(
    observed: Mapping[str, Iterable[str]], freqs: AlleleFreqTable, theta=0.0
) -> ExclusionResult:
    """RMNE over several markers: per-locus P_E plus the combined value."""
    th = resolve_theta(theta)
    per = {
        marker: exclusion_prob_locus(alleles, freqs, th, marker)
        for marker, alleles in observed.items()
    }
    return ExclusionResult(per, combine_exclusion(per.values()), th)


# ---------------------------------------------------------------------------
# likelihood-ratio route
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixtureHypothesis:
    """Known contributors plus a count of unknown (random) contributors."""

    known: tuple[Profile, ...] = ()
    n_unknown: int = 0

    def __post_init__(self):
        if self.n_unknown < 0:
            raise ValueError("n_unknown must be >= 0")
        if len(self.known) + self.n_unknown < 1:
            raise ValueError("a hypothesis needs at least one contributor")

    @property
    def n_contributors(self) -> int:
        return len(self.known) + self.n_unknown


def _ordered_draw_prob(counts: Mapping[int, int], p: np.ndarray, th: float) -> float:
    """Exchangeable probability of one ordered allele sequence with the
    given per-type counts, under the subpopulation sampling recursion."""
    prob = 1.0
    drawn = 0
    for idx, r in counts.items():
        for k in range(r):
            if drawn == 0:
                prob *= p[idx]
            else:
                prob *= (k * th + (1.0 - th) * p[idx]) / (1.0 + (drawn - 1) * th)
            drawn += 1
    return prob


def _genotype_combo_prob(
    combo: Sequence[tuple[int, int]], p: np.ndarray, th: float
) -> float:
    """Probability of an ordered tuple of unknown genotypes.

    Each heterozygous pair contributes its unordered factor 2; the allele
    draws across all unknowns follow the θ recursion (zero alleles
    conditioned on, matching the RMNE convention). Reduces to the product
    of HWE genotype probabilities at θ=0.
    """
    counts: dict[int, int] = {}
    het = 0
    for a, b in combo:
        counts[a] = counts.get(a, 0) + 1
        counts[b] = counts.get(b, 0) + 1
        if a != b:
            het += 1
    return (2.0 ** het) * _ordered_draw_prob(counts, p, th)


def _hypothesis_likelihood(
    observed_idx: frozenset[int],
    known_pairs: Sequence[tuple[int, int]],
    n_unknown: int,
    p: np.ndarray,
    th: float,
) -> float:
    """P(stain shows exactly the observed alleles | hypothesis), one marker."""
    covered = frozenset(itertools.chain.from_iterable(known_pairs))
    if n_unknown == 0:
        return 1.0 if covered == observed_idx else 0.0
    # unknowns carrying an allele outside the set contribute nothing
    candidates = sorted(observed_idx)
    genotypes = [
        (candidates[i], candidates[j])
        for i in range(len(candidates))
        for j in range(i, len(candidates))
    ]
    total = 0.0
    for combo in itertools.combinations_with_replacement(genotypes, n_unknown):
        union = covered.union(itertools.chain.from_iterable(combo))
        if union != observed_idx:
            continue
        mult: dict[tuple[int, int], int] = {}
        for g in combo:
            mult[g] = mult.get(g, 0) + 1
        perms = factorial(n_unknown)
        for m in mult.values():
            perms //= factorial(m)
        total += perms * _genotype_combo_prob(combo, p, th)
    return total


def _marker_likelihood(
    marker: str,
    observed: Iterable[str],
    hyp: MixtureHypothesis,
    freqs: AlleleFreqTable,
    th: float,
) -> float:
    mk = freqs.marker(marker)
    obs_idx = frozenset(mk.index(a) for a in observed)
    if not obs_idx:
        raise ValueError(f"marker {marker!r}: observed allele set is empty")
    known_pairs = []
    for prof in hyp.known:
        try:
            g = prof.genotype(marker)
        except KeyError:
            raise ValueError(
                f"known contributor has no genotype for marker {marker!r}"
            ) from None
        pair = (mk.index(g.a1), mk.index(g.a2))
        if not set(pair) <= obs_idx:
            raise InconsistentKnowns(
                f"marker {marker!r}: known contributor carries allele "
                f"outside the observed set"
            )
        known_pairs.append(pair)
    return _hypothesis_likelihood(
        obs_idx, known_pairs, hyp.n_unknown, freqs.freqs(marker), th
    )


def mixture_lr(
    observed: Mapping[str, Iterable[str]],
    hyp_p: MixtureHypothesis,
    hyp_d: MixtureHypothesis,
    freqs: AlleleFreqTable,
    theta=0.0,
) -> LRValue:
    """Mixture LR by exact enumeration over unknown-contributor genotypes.

    Per marker, the likelihood of each hypothesis is the probability that
    the contributors' allele union equals the observed set exactly; the LR
    is their ratio and markers multiply. Unknown contributors are
    exchangeable: unordered genotype combinations enter with their
    permutation multiplicity.

    Raises:
        TooManyContributors: more than 4 contributors in a hypothesis.
        InconsistentKnowns: a known contributor has an allele off the set.
        BothZero: some marker is impossible under both hypotheses.
    """
    for hyp in (hyp_p, hyp_d):
        if hyp.n_contributors > MAX_CONTRIBUTORS:
            raise TooManyContributors(
                f"enumeration capped at {MAX_CONTRIBUTORS} contributors"
            )
    th = resolve_theta(theta)
    components = []
    combined = 1.0
    for marker in observed:
        l_p = _marker_likelihood(marker, observed[marker], hyp_p, freqs, th)
        l_d = _marker_likelihood(marker, observed[marker], hyp_d, freqs, th)
        if l_p == 0.0 and l_d == 0.0:
            raise BothZero(f"marker {marker!r}: impossible under both hypotheses")
        lr = math.inf if l_d == 0.0 else l_p / l_d
        mk = freqs.marker(marker)
        label = "|".join(sorted(observed[marker], key=mk.index))
        components.append(MarkerLR(marker, label, None, lr))
        combined *= lr
    return LRValue(combined, tuple(components))


# ---------------------------------------------------------------------------
# masking probability
# ---------------------------------------------------------------------------

_EXACT_COST_CAP = 300_000


def _masking_exact(p: np.ndarray, n_draws: int, d: int) -> float:
    """P(at most d distinct labels in n_draws i.i.d. draws), by
    inclusion-exclusion over label subsets of size <= d."""
    k = len(p)
    total = 0.0
    for size in range(1, d + 1):
        for subset in itertools.combinations(range(k), size):
            s_prob = 0.0
            # P(exactly the labels of `subset` appear)
            for r in range(size + 1):
                sign = -1.0 if (size - r) % 2 else 1.0
                for inner in itertools.combinations(subset, r):
                    sigma = float(sum(p[i] for i in inner))
                    s_prob += sign * sigma ** n_draws
            total += s_prob
    return min(1.0, max(0.0, total))


def _masking_cost(k: int, d: int) -> int:
    return sum(comb(k, s) * (2 ** s) for s in range(1, d + 1))


def masking_probability(
    n_contributors: int,
    freqs: AlleleFreqTable,
    marker: str,
    max_distinct: int,
    method: str = "auto",
    n_samples: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Probability that 2n allele draws show at most ``max_distinct`` labels.

    This is the chance that an n-person mixture masks itself as one with
    fewer contributors. Exact by inclusion-exclusion when the subset count
    is modest, otherwise a seeded Monte Carlo estimate (method="mc" forces
    sampling, "exact" forces enumeration).

    Raises:
        TooManyContributors: n_contributors outside 1..4.
    """
    if not 1 <= n_contributors <= MAX_CONTRIBUTORS:
        raise TooManyContributors(
            f"masking enumeration capped at {MAX_CONTRIBUTORS} contributors"
        )
    if max_distinct < 1:
        raise ValueError("max_distinct must be >= 1")
    p = freqs.freqs(marker)
    k = len(p)
    n_draws = 2 * n_contributors
    d = min(max_distinct, k, n_draws)
    if d == min(k, n_draws):
        return 1.0
    if method not in ("auto", "exact", "mc"):
        raise ValueError(f"unknown method {method!r}")
    if method == "exact" or (method == "auto" and _masking_cost(k, d) <= _EXACT_COST_CAP):
        return _masking_exact(p, n_draws, d)
    rng = np.random.default_rng(seed)
    uniforms = rng.random((n_samples, n_draws))
    cum = np.cumsum(p)
    hits = _kernels.count_leq_distinct(uniforms, cum, d)
    return hits / n_samples


__all__ = [
    "ExclusionResult",
    "MixtureHypothesis",
    "PeakProfile",
    "mixture_proportion",
    "exclusion_prob_locus",
    "combine_exclusion",
    "random_man_not_excluded",
    "mixture_lr",
    "masking_probability",
    "MAX_CONTRIBUTORS",
]
