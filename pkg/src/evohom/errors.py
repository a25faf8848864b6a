"""Exception hierarchy.

Errors deriving from :class:`HypothesisViolation` mean the input does not
satisfy the structural assumptions of an operation (positivity, range
condition, compatibility, ...). The CLI maps them to exit code 2.
"""


class EvohomError(Exception):
    """Base class for all package errors."""


class HypothesisViolation(EvohomError):
    """Input violates a mathematical hypothesis of the requested operation."""

    condition = "hypothesis"

    def __init__(self, message, condition=None):
        super().__init__(message)
        if condition is not None:
            self.condition = condition


# -- material-law core -------------------------------------------------------

class EvalOutsideDisc(EvohomError, ValueError):
    pass


class PoleAtZero(EvohomError, ZeroDivisionError):
    pass


class BoundViolated(EvohomError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class NotSelfadjoint(HypothesisViolation):
    condition = "selfadjoint"


class NotPSD(HypothesisViolation):
    condition = "psd"


class PrereqFailed(HypothesisViolation):
    condition = "prerequisite"


class NoConvergence(EvohomError):
    """Sequence of laws has no detectable limit.

    ``clusters`` holds the distinct cluster values when a periodic pattern
    was found, ``subsequence_limit`` the limit along even indices.
    """

    def __init__(self, message, clusters=None, subsequence_limit=None, diagnostic=None):
        super().__init__(message)
        self.clusters = clusters or []
        self.subsequence_limit = subsequence_limit
        self.diagnostic = diagnostic


# -- block decompositions ----------------------------------------------------

class StructureViolation(HypothesisViolation):
    condition = "structure"

    def __init__(self, message, block=None, norm=None):
        super().__init__(message)
        self.block = block
        self.norm = norm


class DegenerateBlock(HypothesisViolation):
    condition = "degenerate_block"


class RangeChanged(HypothesisViolation):
    condition = "range"


class CompatibilityViolated(HypothesisViolation):
    condition = "compatibility"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularBlock(HypothesisViolation):
    condition = "singular_block"


# -- homogenization ----------------------------------------------------------

class HypothesisViolated(HypothesisViolation):
    pass


class SingularPiece(EvohomError, ValueError):
    pass


# -- evolution solver --------------------------------------------------------

class SingularFrequency(EvohomError):
    def __init__(self, message, frequency=None, condition_number=None):
        super().__init__(message)
        self.frequency = frequency
        self.condition_number = condition_number


class GridTooCoarse(EvohomError):
    pass


class InvalidProblem(EvohomError, ValueError):
    pass


# -- models ------------------------------------------------------------------

class AmbiguousRank(EvohomError):
    pass


class AliasError(EvohomError, ValueError):
    pass


class IndexOutOfRange(EvohomError, IndexError):
    pass


class ConditionViolated(HypothesisViolation):
    condition = "material_condition"
