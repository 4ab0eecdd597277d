"""Exception hierarchy for the matmom package."""


class MatMomError(Exception):
    """Base class for all matmom errors."""


class InputError(MatMomError):
    """Malformed or invalid input data (documents, matrices, option strings)."""


class SolvabilityError(MatMomError):
    """An operation that requires a solvable moment problem received an unsolvable one."""


class RankError(MatMomError):
    """Internal rank or tolerance inconsistency (conflicting rank decisions)."""


class ParameterError(MatMomError):
    """A parameter matrix was rejected (not a contraction, not unitary, not admissible,
    or the induced extension has fixed points)."""


class EvaluationError(MatMomError):
    """Transform evaluation failed at a specific point (singular pivot, bad z)."""
