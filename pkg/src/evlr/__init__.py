"""Likelihood-ratio evaluation of forensic evidence.

Subpackages by concern:

  population  allele-frequency tables, Dirichlet posteriors, Pólya urn
  genetics    HWE and θ-corrected genotype/match probabilities
  evaluation  LR calculus, posterior odds, verbal scales, single-source LR
  mixture     mixture proportion, RMNE exclusion, mixture LR, masking
  bayesnet    discrete DAG engine: validation, separation, propagation,
              enumeration
  oobn        reusable network modules and case templates
  trace       glass refractive-index t-test and the transfer model
  report/cli  reporting surfaces and the command-line front end
"""

from . import (  # noqa: F401
    bayesnet,
    evaluation,
    genetics,
    mixture,
    oobn,
    population,
    report,
    trace,
)
from ._kernels import USING_NUMBA  # noqa: F401
from .evaluation import (  # noqa: F401
    LRValue,
    likelihood_ratio,
    posterior_odds,
    single_source_lr,
    verbal_category,
)
from .genetics import Genotype, Profile, match_prob  # noqa: F401
from .population import AlleleFreqTable, load_frequency_table  # noqa: F401

__version__ = "0.1.0"
