"""Glass evidence: refractive-index comparison and the transfer model.

Control fragments (from the scene) and recovered fragments (from the
suspect) are compared through their refractive-index readings with a Welch
two-sample t-test (unequal variances, Welch-Satterthwaite degrees of
freedom); two-sided by default. The transfer side is a small discrete
network over fragment counts: distance drives how many fragments transfer,
time and garment drive how many persist, and lab efficiency drives how many
are recovered, so any node's marginal or conditional can be queried through
the bayesnet engines. No standard transfer distributions exist, so the
conditional tables are case inputs; a documented synthetic default ships
for exploration.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from math import comb
from pathlib import Path

import numpy as np
from scipy import stats

from .bayesnet import Network, NodeSpec
from .errors import InsufficientData, MalformedTable

COUNT_STATES = ("0", "1", "2", "3", "4", "5+")


@dataclass(frozen=True)
class RISample:
    """Refractive-index readings from one fragment collection."""

    label: str                       # "control" or "recovered"
    measurements: tuple[float, ...]

    def __post_init__(self):
        if len(self.measurements) < 2:
            raise InsufficientData(
                f"{self.label} sample needs >= 2 measurements for a variance"
            )


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p_value: float
    degenerate: bool = False


def glass_ri_ttest(
    control: RISample,
    recovered: RISample,
    alternative: str = "two-sided",
) -> TTestResult:
    """Welch two-sample t-test on refractive-index readings.

    alternative: "two-sided" (default), "greater" (control mean larger), or
    "less". Two constant samples are degenerate: equal means report t=0,
    p=1; unequal means report |t|=inf, p=0 with the degenerate flag set.
    """
    if alternative not in ("two-sided", "greater", "less"):
        raise ValueError(f"unknown alternative {alternative!r}")
    x = np.asarray(control.measurements, dtype=np.float64)
    y = np.asarray(recovered.measurements, dtype=np.float64)
    n1, n2 = len(x), len(y)
    m1, m2 = float(x.mean()), float(y.mean())
    v1 = float(x.var(ddof=1))
    v2 = float(y.var(ddof=1))
    se2 = v1 / n1 + v2 / n2
    if se2 == 0.0:
        if m1 == m2:
            return TTestResult(t=0.0, df=float(n1 + n2 - 2), p_value=1.0)
        t = math.inf if m1 > m2 else -math.inf
        p = 0.0 if alternative == "two-sided" else (
            0.0 if (alternative == "greater") == (m1 > m2) else 1.0
        )
        return TTestResult(t=t, df=0.0, p_value=p, degenerate=True)
    t = (m1 - m2) / math.sqrt(se2)
    df = se2 ** 2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    if alternative == "two-sided":
        p = 2.0 * float(stats.t.sf(abs(t), df))
    elif alternative == "greater":
        p = float(stats.t.sf(t, df))
    else:
        p = float(stats.t.cdf(t, df))
    return TTestResult(t=t, df=df, p_value=min(1.0, p))


def read_ri_csv(path) -> tuple[float, ...]:
    """One reading per line under a single "ri" header column."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r]
    if not rows or rows[0][0].strip().lower() != "ri":
        raise MalformedTable(f"{path}: expected header 'ri'")
    try:
        return tuple(float(r[0]) for r in rows[1:])
    except ValueError as exc:
        raise MalformedTable(f"{path}: non-numeric reading ({exc})") from exc


# ---------------------------------------------------------------------------
# transfer / persistence / recovery network
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferModelParams:
    """States, priors, and conditional tables of the transfer model.

    Tables are row-normalized conditionals over COUNT_STATES:
      transfer_cpt[distance]                      -> transferred count
      persist_cpt[transferred, time, garment]     -> persisted count
      recover_cpt[persisted, lab]                 -> recovered count
    """

    distance_states: tuple[str, ...]
    distance_prior: tuple[float, ...]
    time_states: tuple[str, ...]
    time_prior: tuple[float, ...]
    garment_states: tuple[str, ...]
    garment_prior: tuple[float, ...]
    lab_states: tuple[str, ...]
    lab_prior: tuple[float, ...]
    transfer_cpt: np.ndarray
    persist_cpt: np.ndarray
    recover_cpt: np.ndarray


def build_transfer_network(params: TransferModelParams) -> Network:
    """Assemble the distance/time/garment/lab fragment-count network.

    Structure: distance -> transferred; transferred, time, garment ->
    persisted; persisted, lab efficiency -> recovered. Validation errors
    (bad shapes, unnormalized rows) surface through the bayesnet checks at
    query time or via bayesnet.validate.
    """
    nodes = [
        NodeSpec("distance", params.distance_states),
        NodeSpec("time", params.time_states),
        NodeSpec("garment", params.garment_states),
        NodeSpec("lab_efficiency", params.lab_states),
        NodeSpec("transferred", COUNT_STATES),
        NodeSpec("persisted", COUNT_STATES),
        NodeSpec("recovered", COUNT_STATES),
    ]
    edges = [
        ("distance", "transferred"),
        ("transferred", "persisted"),
        ("time", "persisted"),
        ("garment", "persisted"),
        ("persisted", "recovered"),
        ("lab_efficiency", "recovered"),
    ]
    cpts = {
        "distance": params.distance_prior,
        "time": params.time_prior,
        "garment": params.garment_prior,
        "lab_efficiency": params.lab_prior,
        "transferred": params.transfer_cpt,
        "persisted": params.persist_cpt,
        "recovered": params.recover_cpt,
    }
    return Network(nodes, edges, cpts)


def _binomial_thinning_row(count_idx: int, keep: float) -> np.ndarray:
    """Distribution of survivors when each of ``count_idx`` fragments is
    kept independently with probability ``keep`` ("5+" treated as 5)."""
    n = min(count_idx, 5)
    row = np.zeros(len(COUNT_STATES))
    for j in range(n + 1):
        row[j] = comb(n, j) * keep ** j * (1.0 - keep) ** (n - j)
    return row


def default_transfer_params() -> TransferModelParams:
    """Synthetic but plausible tables for exploration and tests.

    Transfer counts fall with distance (truncated geometric-ish rows);
    persistence thins binomially with a retention rate that decays with
    time and is higher for rough garments; recovery thins with lab
    efficiency. Real casework should supply measured tables instead.
    """
    distance_states = ("near", "mid", "far")
    time_states = ("0-4h", "4-12h", "12h+")
    garment_states = ("smooth", "rough")
    lab_states = ("standard", "thorough")

    mean_by_distance = {"near": 3.5, "mid": 1.5, "far": 0.5}
    transfer = np.zeros((3, len(COUNT_STATES)))
    for i, d in enumerate(distance_states):
        lam = mean_by_distance[d]
        q = lam / (1.0 + lam)            # geometric with the right mean
        row = np.array([(1 - q) * q ** j for j in range(5)])
        transfer[i, :5] = row
        transfer[i, 5] = 1.0 - row.sum()

    retention = {
        ("0-4h", "smooth"): 0.7, ("0-4h", "rough"): 0.85,
        ("4-12h", "smooth"): 0.4, ("4-12h", "rough"): 0.6,
        ("12h+", "smooth"): 0.15, ("12h+", "rough"): 0.35,
    }
    persist = np.zeros((len(COUNT_STATES), 3, 2, len(COUNT_STATES)))
    for c in range(len(COUNT_STATES)):
        for ti, t in enumerate(time_states):
            for gi, g in enumerate(garment_states):
                persist[c, ti, gi] = _binomial_thinning_row(c, retention[(t, g)])

    efficiency = {"standard": 0.6, "thorough": 0.9}
    recover = np.zeros((len(COUNT_STATES), 2, len(COUNT_STATES)))
    for c in range(len(COUNT_STATES)):
        for li, lab in enumerate(lab_states):
            recover[c, li] = _binomial_thinning_row(c, efficiency[lab])

    uniform = lambda states: tuple(1.0 / len(states) for _ in states)
    return TransferModelParams(
        distance_states=distance_states,
        distance_prior=uniform(distance_states),
        time_states=time_states,
        time_prior=uniform(time_states),
        garment_states=garment_states,
        garment_prior=uniform(garment_states),
        lab_states=lab_states,
        lab_prior=uniform(lab_states),
        transfer_cpt=transfer,
        persist_cpt=persist,
        recover_cpt=recover,
    )


__all__ = [
    "RISample",
    "TTestResult",
    "TransferModelParams",
    "COUNT_STATES",
    "glass_ri_ttest",
    "read_ri_csv",
    "build_transfer_network",
    "default_transfer_params",
]
