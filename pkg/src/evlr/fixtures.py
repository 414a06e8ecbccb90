"""Shipped example networks.

``fictional_crime_network`` is the smashed-window convenience-store case: a
suspect's guilt drives three evidence branches (an eyewitness claim of being
punched, glass on the clothing, blood/DNA on the clothing). Its moral graph
makes "blood on clothes" and "glass on clothes" separated given "guilty",
the canonical conditional-independence query exercised in the tests and the
CLI examples.

``dna_testing_error_network`` is the DNA-match model with collection and
testing errors: whether the defendant is the source and whether the
defendant carries the profile type jointly determine whether the crime-scene
source carries it, and both typing results pass through accuracy (error)
channels before they are observed.
"""

from __future__ import annotations

import numpy as np

from .bayesnet import Network
from .oobn import HYP_STATES, NetworkBuilder, accuracy_module


def fictional_crime_network(
    prior_guilty: float = 0.5,
    link_strength: float = 0.9,
) -> Network:
    """Boolean network for the fictional smashed-window crime.

    ``link_strength`` is the probability that a true cause produces its
    effect (and one minus the false-positive rate); the exact numbers only
    shape posteriors, not the separation structure.
    """
    s = float(link_strength)
    b = NetworkBuilder()
    yes_no = lambda p: [p, 1.0 - p]
    causal = [[s, 1.0 - s], [1.0 - s, s]]        # parent true -> mostly true
    b.add_node("guilty", HYP_STATES, (), yes_no(prior_guilty))
    b.add_node("window_is_glass_source", HYP_STATES, ("guilty",), causal)
    b.add_node("cashier_is_dna_source", HYP_STATES, ("guilty",), causal)
    b.add_node("cashier_claims_punched", HYP_STATES, ("guilty",), causal)
    b.add_node("glass_from_window", HYP_STATES, (), yes_no(0.5))
    # effect needs both its enabling cause and the reference material
    both = np.empty((2, 2, 2))
    both[0, 0] = [s, 1.0 - s]
    both[0, 1] = [1.0 - s, s]
    both[1, 0] = [1.0 - s, s]
    both[1, 1] = [1.0 - s, s]
    b.add_node(
        "glass_on_clothes", HYP_STATES,
        ("window_is_glass_source", "glass_from_window"), both,
    )
    b.add_node(
        "blood_on_clothes", HYP_STATES,
        ("cashier_claims_punched", "cashier_is_dna_source"), both,
    )
    return b.build()


def dna_testing_error_network(
    profile_freq: float = 0.01,
    prior_source: float = 0.5,
    collection_error: float = 0.01,
    testing_error: float = 0.01,
) -> Network:
    """DNA evidence with testing error, assembled from accuracy modules.

    Nodes: "defendant_is_source" and "defendant_is_type" are root
    hypotheses; "source_is_type" is the defendant's type when the defendant
    is the source and a population draw otherwise; the two observed typing
    results are accuracy-channel copies of the latent types.
    """
    b = NetworkBuilder()
    b.add_node("defendant_is_source", HYP_STATES, (), [prior_source, 1 - prior_source])
    b.add_node("defendant_is_type", HYP_STATES, (), [profile_freq, 1 - profile_freq])
    source_cpt = np.empty((2, 2, 2))
    source_cpt[0, 0] = [1.0, 0.0]                # source is the defendant, type matches
    source_cpt[0, 1] = [0.0, 1.0]
    source_cpt[1, 0] = [profile_freq, 1 - profile_freq]   # someone else
    source_cpt[1, 1] = [profile_freq, 1 - profile_freq]
    b.add_node(
        "source_is_type", HYP_STATES,
        ("defendant_is_source", "defendant_is_type"), source_cpt,
    )
    accuracy_module(testing_error).instantiate(
        b, "defendant_test", {"input": "defendant_is_type"}
    )
    accuracy_module(collection_error).instantiate(
        b, "source_test", {"input": "source_is_type"}
    )
    return b.build()


__all__ = ["fictional_crime_network", "dna_testing_error_network"]
