"""Likelihood-ratio calculus, verbal scales, and the single-source DNA LR.

The LR is P(E|Hp)/P(E|Hd); it multiplies prior odds into posterior odds and
is reported against one of the three Evett verbal scales (1987, 1998, 2000),
whose bands are half-open intervals (lower, upper]. For a single-source
stain matching the suspect, P(E|Hp)=1 and the per-marker denominator is the
θ-corrected match probability, so the marker LR is its reciprocal and the
combined LR is the product across markers (linkage equilibrium).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import BothZero
from .genetics import Profile, genotype_state_label, match_prob, resolve_theta
from .population import AlleleFreqTable


class PropositionLevel(Enum):
    OFFENSE = "offense"
    ACTIVITY = "activity"
    SOURCE = "source"


@dataclass(frozen=True)
class HypothesisPair:
    """A prosecution/defense proposition pair at one hierarchy level."""

    h_p: str
    h_d: str
    level: PropositionLevel = PropositionLevel.SOURCE


@dataclass(frozen=True)
class MarkerLR:
    """Per-marker LR component with its denominator provenance.

    match_probability is set for single-source LRs (where the denominator
    is the θ-corrected match probability) and None for network-derived LRs.
    """

    marker: str
    genotype: str
    match_probability: float | None
    lr: float


@dataclass(frozen=True)
class LRValue:
    """A likelihood ratio, optionally broken into per-marker components.

    value may be math.inf when the evidence is impossible under Hd but not
    under Hp. When components are present their product equals value.
    """

    value: float
    components: tuple[MarkerLR, ...] = field(default=())

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("LR cannot be negative")

    @property
    def per_marker(self) -> dict[str, float]:
        return {c.marker: c.lr for c in self.components}


def likelihood_ratio(p_e_hp: float, p_e_hd: float) -> LRValue:
    """LR = P(E|Hp) / P(E|Hd); +inf when the denominator alone is zero."""
    for name, p in (("P(E|Hp)", p_e_hp), ("P(E|Hd)", p_e_hd)):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")
    if p_e_hp == 0.0 and p_e_hd == 0.0:
        raise BothZero("evidence impossible under both hypotheses")
    if p_e_hd == 0.0:
        return LRValue(math.inf)
    return LRValue(p_e_hp / p_e_hd)


def posterior_odds(prior_odds: float, lr: LRValue | float) -> float:
    """Odds form of Bayes' rule: posterior odds = prior odds x LR."""
    if prior_odds <= 0:
        raise ValueError("prior odds must be positive")
    value = lr.value if isinstance(lr, LRValue) else float(lr)
    return prior_odds * value


def single_source_lr(suspect: Profile, freqs: AlleleFreqTable, theta=0.0) -> LRValue:
    """LR for a single-contributor stain matching the suspect's profile.

    P(E|Hp)=1 (the suspect is the sole contributor), so each marker's LR is
    1 / match probability of the suspect's genotype at that marker; the
    combined LR multiplies across markers.
    """
    if len(suspect) == 0:
        raise ValueError("suspect profile is empty")
    th = resolve_theta(theta)
    components = []
    combined = 1.0
    for g in suspect.genotypes:
        mp = match_prob(g, th, freqs)
        lr = math.inf if mp == 0.0 else 1.0 / mp
        label = genotype_state_label(freqs.marker(g.marker), g)
        components.append(MarkerLR(g.marker, label, mp, lr))
        combined *= lr
    return LRValue(combined, tuple(components))


@dataclass(frozen=True)
class Band:
    lower: float           # exclusive
    upper: float           # inclusive; inf for the open top band
    label: str


@dataclass(frozen=True)
class VerbalScale:
    """An ordered list of (lower, upper] bands covering (1, inf)."""

    edition: str
    bands: tuple[Band, ...]

    def __post_init__(self):
        lows = [b.lower for b in self.bands]
        ups = [b.upper for b in self.bands]
        if lows[0] != 1.0 or ups[-1] != math.inf:
            raise ValueError("bands must cover (1, inf)")
        if any(u != l for u, l in zip(ups[:-1], lows[1:])):
            raise ValueError("bands must be contiguous")
        if any(u <= l for l, u in zip(lows, ups)):
            raise ValueError("thresholds must be strictly increasing")


EVETT_1987 = VerbalScale(
    "Evett1987",
    (
        Band(1.0, 10.0 ** 0.5, "slightly increases the support"),
        Band(10.0 ** 0.5, 10.0 ** 1.5, "increases the support"),
        Band(10.0 ** 1.5, 10.0 ** 2.5, "greatly increases the support"),
        Band(10.0 ** 2.5, math.inf, "very greatly increases the support"),
    ),
)

EVETT_1998 = VerbalScale(
    "Evett1998",
    (
        Band(1.0, 10.0, "limited support"),
        Band(10.0, 100.0, "moderate support"),
        Band(100.0, 1000.0, "strong support"),
        Band(1000.0, math.inf, "very strong support"),
    ),
)

EVETT_2000 = VerbalScale(
    "Evett2000",
    (
        Band(1.0, 10.0, "limited support"),
        Band(10.0, 100.0, "moderate support"),
        Band(100.0, 1000.0, "moderately strong support"),
        Band(1000.0, 10000.0, "strong support"),
        Band(10000.0, math.inf, "very strong support"),
    ),
)

SCALES = {
    "evett1987": EVETT_1987,
    "evett1998": EVETT_1998,
    "evett2000": EVETT_2000,
}


def verbal_category(lr: LRValue | float, scale: VerbalScale) -> str:
    """Verbal label for an LR under one scale edition.

    The published tables only cover LR > 1; LR = 1 reports "neutral" and
    LR < 1 reports support for Hd through the band of the reciprocal.
    """
    value = lr.value if isinstance(lr, LRValue) else float(lr)
    if value < 0:
        raise ValueError("LR cannot be negative")
    if value == 1.0:
        return "neutral"
    if value < 1.0:
        reciprocal = math.inf if value == 0.0 else 1.0 / value
        return f"supports H_d (reciprocal band: {verbal_category(reciprocal, scale)})"
    for band in scale.bands:
        if band.lower < value <= band.upper:
            return band.label
    return scale.bands[-1].label    # value == inf


__all__ = [
    "PropositionLevel",
    "HypothesisPair",
    "MarkerLR",
    "LRValue",
    "likelihood_ratio",
    "posterior_odds",
    "single_source_lr",
    "Band",
    "VerbalScale",
    "EVETT_1987",
    "EVETT_1998",
    "EVETT_2000",
    "SCALES",
    "verbal_category",
]
