"""Scaling certificates and structure checks for semigroups of nonnegative matrices."""

from .errors import (
    BasepointUnusable,
    BlockNotRankOne,
    DimensionMismatch,
    Divergent,
    EmptyPositivePart,
    NNSemiError,
    NotAProjection,
    NotBinaryDiagonal,
    NotIndecomposable,
    PreconditionViolated,
    RescaleFailed,
    TruncationTooShort,
)
from .scaling import (
    AdditivePotential,
    ScalingVector,
    bounded_potential,
    bounded_scaling,
    bump,
    is_compressed,
    mult_walk_supremum,
    potential_from_basepoint,
    scaling_from_basepoint,
)
from .semigroup import (
    CompositionRule,
    SemigroupClosure,
    binary_diagonal_rescale,
    bounded_semigroup_scaling,
    entrywise_bound_report,
    generate_closure,
    is_indecomposable,
    matrix_like_check,
    rescale_by,
    semigroup_scaling,
    sup_function,
)
from .tropical import ExtendedWeightMatrix, ExtReal, WalkClosure, assert_no_divergence, walk_supremum

__version__ = "0.1.0"
