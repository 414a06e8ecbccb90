"""Typed errors raised across the package.

Every operation that can reject its input raises one of these instead of a
bare ValueError, so callers (and the CLI exit-code mapping) can dispatch on
type. Precondition violations that are plain programming mistakes (wrong
types, negative counts) still surface as ValueError/TypeError.
"""


class EvlrError(Exception):
    """Base class for all package errors."""


# -- population ----------------------------------------------------------

class MalformedTable(EvlrError):
    """Frequency table document does not parse or violates basic shape."""


class FrequencySumOutOfTolerance(EvlrError):
    """Per-marker frequencies sum farther than 1e-6 from 1."""


class DimensionMismatch(EvlrError):
    """Dirichlet prior and count vectors have different lengths."""


class NonpositivePrior(EvlrError):
    """Dirichlet prior has a component <= 0."""


class TooManyDraws(EvlrError):
    """Exact urn/multiset enumeration requested beyond the desk-scale cap."""


# -- genetics / mixture ---------------------------------------------------

class UnknownMarker(EvlrError):
    """Marker name not present in the frequency table."""


class UnknownAllele(EvlrError):
    """Allele label not present for its marker."""


class WrongPeakCount(EvlrError):
    """Mixture proportion needs exactly four peaks at a marker."""


class TooManyContributors(EvlrError):
    """Mixture enumeration capped at 4 contributors per hypothesis."""


class InconsistentKnowns(EvlrError):
    """A known contributor carries an allele outside the observed set."""


# -- evaluation -----------------------------------------------------------

class BothZero(EvlrError):
    """Evidence impossible under both hypotheses; LR undefined."""


# -- bayesnet -------------------------------------------------------------

class CycleDetected(EvlrError):
    """Directed cycle in a network."""


class CptShapeMismatch(EvlrError):
    """CPT dimensions disagree with parent/node state counts."""


class RowNotNormalized(EvlrError):
    """A CPT row does not sum to 1 within 1e-9."""


class UnknownNode(EvlrError):
    """Node name not present in the network."""


class UnknownState(EvlrError):
    """State label not valid for its node."""


class NotPolytree(EvlrError):
    """propagate() called on a network whose skeleton has a cycle."""


class ImpossibleEvidence(EvlrError):
    """Evidence has probability zero under the network."""


class StateSpaceTooLarge(EvlrError):
    """Enumeration refused: free configuration count exceeds 1e7."""


# -- oobn -----------------------------------------------------------------

class UnboundPort(EvlrError):
    """Module instantiated with a required port left unbound."""


class NameCollision(EvlrError):
    """Two expanded nodes received the same namespaced name."""


class StateSpaceMismatch(EvlrError):
    """Selector ports do not share one state space."""


class InvalidRate(EvlrError):
    """Mutation/error rate outside its admissible range."""


class InvalidGrid(EvlrError):
    """Fraction grid empty or outside (0, 1)."""


class IncompatibleTables(EvlrError):
    """Subpopulation tables do not share identical allele label sets."""


# -- trace ----------------------------------------------------------------

class InsufficientData(EvlrError):
    """Fewer than two measurements in a refractive-index sample."""


# -- cli ------------------------------------------------------------------

class MalformedCase(EvlrError):
    """Case file fails schema validation; message carries the location."""
