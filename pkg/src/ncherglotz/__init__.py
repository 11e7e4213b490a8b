"""Realizations of free Herglotz functions over finite-dimensional C*-algebras."""

from .algebra import (
    AlgebraDescriptor,
    FreePolynomial,
    LeveledElement,
    UnitalEmbedding,
    embed,
    random_point,
)
from .classical import CircleMeasure, herglotz_transform, moments_of, rep_from_measure, toeplitz_psd_check
from .errors import (
    DomainError,
    HerglotzError,
    InconsistencyError,
    PreconditionError,
    StructureError,
)
from .freefunc import (
    HerglotzRepresentation,
    cayley_to_herglotz,
    cayley_to_schur,
    check_free_axioms,
    eval_herglotz,
    random_representation,
    regularize,
)
from .lurking import model_from_rep, recover_representation, roundtrip_verify
from .matrixcore import Tolerance, lurking_isometry, schur_complement_unitary, unitary_completion
from .moments import MomentTable, direct_moment, extract_moments, module_property_residual, state_gram
from .nonuniq import (
    AlgebraMap,
    crossed_product_expectation,
    haar_pair_states,
    shift_endomorphism_expectation,
)

__version__ = "0.1.0"

__all__ = [
    "AlgebraDescriptor",
    "AlgebraMap",
    "CircleMeasure",
    "DomainError",
    "FreePolynomial",
    "HerglotzError",
    "HerglotzRepresentation",
    "InconsistencyError",
    "LeveledElement",
    "MomentTable",
    "PreconditionError",
    "StructureError",
    "Tolerance",
    "UnitalEmbedding",
    "cayley_to_herglotz",
    "cayley_to_schur",
    "check_free_axioms",
    "crossed_product_expectation",
    "direct_moment",
    "embed",
    "eval_herglotz",
    "extract_moments",
    "haar_pair_states",
    "herglotz_transform",
    "lurking_isometry",
    "model_from_rep",
    "module_property_residual",
    "moments_of",
    "random_point",
    "random_representation",
    "recover_representation",
    "regularize",
    "rep_from_measure",
    "roundtrip_verify",
    "schur_complement_unitary",
    "shift_endomorphism_expectation",
    "state_gram",
    "toeplitz_psd_check",
    "unitary_completion",
]
