"""Model synthesis and realization recovery by a lurking isometry.

Pipeline for a regular realization ``(alpha, U, V)`` and a free polynomial
``delta`` with zero constant term:

1. :func:`model_from_rep` computes, at each sample X,
   ``v(X) = (I - (I ⊗ U) alpha(delta(X)))^{-1} (I ⊗ 2V)`` and
   ``u(X) = v(X)(h(X) + I)^{-1}``, in a basis where ``B`` acts on the model
   space in natural form.
2. :func:`build_gramian_columns` slices ``phi = [h + I; delta v]`` and
   ``theta = [h - I; v]`` into level components so that one unitary ``L``
   acting on ``C^d ⊕ C^m`` must carry every phi column to its theta column.
3. :func:`recover_representation` finds ``L``, negates its first block row
   (so it carries phi to ``[I - h; v]``) and takes the Schur complement
   ``U = D - C(I + A)^{-1} B``, ``V = C(I + A)^{-1}``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import (
    FreePolynomial,
    LeveledElement,
    UnitalEmbedding,
    embed,
    random_point,
    shrink_into_domain,
)
from .errors import ModelInconsistentError, PreconditionError, StructureError
from .freefunc import HerglotzRepresentation, cayley_to_schur, eval_herglotz
from .matrixcore import (
    DEFAULT_TOL,
    Tolerance,
    gram_residual,
    lurking_isometry,
    numerical_rank,
    opnorm,
    schur_complement_unitary,
    solve_right,
    validate_structure,
)


@dataclass(frozen=True, eq=False)
class ModelSample:
    X: LeveledElement
    h: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    u_model: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class ModelData:
    """Samples of a model together with the action of B on the model space.

    ``alpha`` is how ``I ⊗ delta(X)`` acts on the model space; it is always
    in natural form (see :meth:`UnitalEmbedding.canonical`).
    """

    delta: FreePolynomial
    alpha: UnitalEmbedding
    output_dim: int
    samples: tuple

    @property
    def model_dim(self) -> int:
        return self.alpha.ambient_dim

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> dict:
        """Check the sample invariants; return the worst defects."""
        worst_norm = 0.0
        worst_factor = 0.0
        for s in self.samples:
            r = opnorm(embed(self.alpha, self.delta(s.X)))
            if r >= 1:
                raise StructureError(f"ModelData: each sample has ||embed(delta(X))|| < 1 (got {r:.6g})")
            worst_norm = max(worst_norm, r)
            eye = np.eye(s.h.shape[0])
            defect = opnorm(s.v - s.u_model @ (s.h + eye))
            if defect > tol.bound(max(1.0, opnorm(s.v))):
                raise ModelInconsistentError(
                    f"model data inconsistent: v = u_model (h + I) fails (defect {defect:.3e})", defect
                )
            worst_factor = max(worst_factor, defect)
        return {"max_delta_norm": worst_norm, "v_factorization": worst_factor}


def _canonical_rep(rep: HerglotzRepresentation) -> HerglotzRepresentation:
    Q, beta = rep.alpha.canonical()
    return HerglotzRepresentation(beta, Q.conj().T @ rep.U @ Q, Q.conj().T @ rep.V)


def _v_of(rep: HerglotzRepresentation, X: LeveledElement, delta: FreePolynomial) -> np.ndarray:
    n = X.level
    K = np.kron(np.eye(n), rep.U) @ embed(rep.alpha, delta(X))
    return np.linalg.solve(np.eye(K.shape[0]) - K, 2 * np.kron(np.eye(n), rep.V))


def model_from_rep(
    rep: HerglotzRepresentation,
    delta: FreePolynomial | None,
    points: Sequence[LeveledElement],
    tol: Tolerance = DEFAULT_TOL,
) -> ModelData:
    if rep.offset_T is not None and opnorm(rep.offset_T) > tol.bound():
        raise PreconditionError("model_from_rep: representation must be regular (no offset)")
    delta = FreePolynomial.identity() if delta is None else delta
    rep_c = _canonical_rep(rep)
    samples = []
    for X in points:
        h = eval_herglotz(rep_c, X, delta, tol)
        v = _v_of(rep_c, X, delta)
        u = solve_right(v, h + np.eye(h.shape[0]))
        samples.append(ModelSample(X, h, v, u))
    return ModelData(delta, rep_c.alpha, rep.output_dim, tuple(samples))


def model_identity_residual(model: ModelData, sample: ModelSample, T: np.ndarray) -> float:
    """``||(T - f^* T f) - u^*[T - delta^* T delta] u||`` with ``f`` the Cayley transform of h."""
    n = sample.X.level
    d, m = model.output_dim, model.model_dim
    T = np.asarray(T, dtype=complex)
    Td, Tm = np.kron(T, np.eye(d)), np.kron(T, np.eye(m))
    f = cayley_to_schur(sample.h)
    dX = embed(model.alpha, model.delta(sample.X))
    u = sample.u_model
    lhs = Td - f.conj().T @ Td @ f
    rhs = u.conj().T @ (Tm - dX.conj().T @ Tm @ dX) @ u
    return opnorm(lhs - rhs)


def _zero_sample(model: ModelData) -> ModelSample:
    for s in model.samples:
        if not np.any(s.X.matrix):
            return s
    raise PreconditionError("recover_representation: model must contain the point X = 0")


def simplesorted_residual(model: ModelData, sample: ModelSample) -> float:
    """Residual of ``2(h(0)^* + h(X)) = v(0)^* v(X) - (delta(0)v(0))^* delta(X) v(X)``.

    The second term vanishes because ``delta(0) = 0``.
    """
    zero = _zero_sample(model)
    n = sample.X.level
    d, m = model.output_dim, model.model_dim
    h0 = zero.h[:d, :d]
    v0 = zero.v[:m, :d]
    lhs = 2 * (np.kron(np.eye(n), h0).conj().T + sample.h)
    rhs = np.kron(np.eye(n), v0).conj().T @ sample.v
    return opnorm(lhs - rhs)


def _slices(top: np.ndarray, bottom: np.ndarray, n: int, d: int, m: int) -> np.ndarray:
    return np.hstack([
        np.vstack([top[i * d:(i + 1) * d], bottom[i * m:(i + 1) * m]]) for i in range(n)
    ])


def build_gramian_columns(model: ModelData, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Column families ``(Phi, Theta)``, each of height ``d + m``.

    Sample X at level n contributes its n level slices of
    ``[h + I; delta(X) v]`` and ``[h - I; v]``, ``n * dn`` columns each.
    """
    if not model.samples:
        raise StructureError("build_gramian_columns: model has no samples")
    d, m = model.output_dim, model.model_dim
    phis, thetas = [], []
    for s in model.samples:
        n = s.X.level
        eye = np.eye(n * d)
        dv = embed(model.alpha, model.delta(s.X)) @ s.v
        phis.append(_slices(s.h + eye, dv, n, d, m))
        thetas.append(_slices(s.h - eye, s.v, n, d, m))
    Phi, Theta = np.hstack(phis), np.hstack(thetas)
    residual = gram_residual(Phi, Theta)
    scale = max(opnorm(Phi), opnorm(Theta)) ** 2
    if residual > tol.bound(max(1.0, scale)):
        raise ModelInconsistentError(
            f"model data inconsistent: Gram residual {residual:.3e}", residual
        )
    return Phi, Theta


class Recovery(NamedTuple):
    rep: HerglotzRepresentation
    L: np.ndarray
    gram_residual: float
    rank: int
    A_norm: float
    almostrep_residual: float


def lurking_recovery(model: ModelData, tol: Tolerance = DEFAULT_TOL) -> Recovery:
    zero = _zero_sample(model)
    d, m = model.output_dim, model.model_dim
    Phi, Theta = build_gramian_columns(model, tol)
    L = lurking_isometry(Phi, Theta, tol)
    # L carries phi to [h - I; v]; the Schur complement formula wants [I - h; v]
    flip = np.ones(d + m)
    flip[:d] = -1
    L_arranged = flip[:, None] * L
    A_norm = opnorm(L_arranged[:d, :d])
    sc = schur_complement_unitary(L_arranged, (d, m), tol)
    rep = HerglotzRepresentation(model.alpha, sc.U, sc.V_raw)
    for arr, kind, label in ((sc.U, "unitary", "U unitary"), (sc.V_raw, "isometry", "V isometry")):
        check = validate_structure(arr, kind, tol)
        if not check.ok:
            raise ModelInconsistentError(f"recovered {label} fails (defect {check.defect:.3e})", check.defect)
    n0 = zero.X.level
    V2 = np.kron(np.eye(n0), 2 * sc.V_raw)
    almost = opnorm(4 * np.eye(n0 * d) - V2.conj().T @ V2)
    return Recovery(rep, L, gram_residual(Phi, Theta), numerical_rank(Phi, tol), A_norm, almost)


def recover_representation(model: ModelData, tol: Tolerance = DEFAULT_TOL) -> HerglotzRepresentation:
    """Realization ``(alpha, U, V)`` of the sampled function on the model space."""
    return lurking_recovery(model, tol).rep


def sample_reproduction_error(rep: HerglotzRepresentation, model: ModelData) -> float:
    """Max deviation between ``rep`` and the stored sample values of h."""
    return max(opnorm(eval_herglotz(rep, s.X, model.delta) - s.h) for s in model.samples)


@dataclass
class RecoveryReport:
    gram_residual: float
    U_defect: float
    V_defect: float
    roundtrip_max_error: float
    sample_count: int
    fresh_sample_count: int
    recovery_dim: int
    recovery_rank: int
    A_norm: float
    sample_max_error: float
    fresh_levels: list

    def to_dict(self) -> dict:
        return asdict(self)


def sample_points(
    rep: HerglotzRepresentation,
    delta: FreePolynomial,
    count: int,
    levels: Sequence[int],
    rng: np.random.Generator,
    include_zero: bool = False,
) -> list[LeveledElement]:
    """Random points in the delta-contraction domain, cycling through ``levels``."""
    points = [LeveledElement.zero(rep.algebra, 1)] if include_zero else []
    i = 0
    while len(points) < count:
        level = int(levels[i % len(levels)])
        X = random_point(rep.algebra, level, rng)
        points.append(shrink_into_domain(X, delta, rep.alpha))
        i += 1
    return points


def roundtrip_verify(
    rep: HerglotzRepresentation,
    delta: FreePolynomial | None = None,
    sample_count: int = 20,
    fresh_count: int = 20,
    rng: np.random.Generator | None = None,
    sample_levels: Sequence[int] = (1, 2),
    fresh_levels: Sequence[int] = (1, 2, 3),
    tol: Tolerance = DEFAULT_TOL,
    fresh_points: Sequence[LeveledElement] | None = None,
) -> RecoveryReport:
    """Synthesize a model of ``rep``, recover a realization, compare at fresh points.

    The sample set always contains X = 0 (level 1).
    """
    if sample_count < 1:
        raise PreconditionError("roundtrip_verify: sample_count >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    delta = FreePolynomial.identity() if delta is None else delta
    points = sample_points(rep, delta, sample_count, sample_levels, rng, include_zero=True)
    model = model_from_rep(rep, delta, points, tol)
    rec = lurking_recovery(model, tol)
    if fresh_points is None:
        fresh_points = sample_points(rep, delta, fresh_count, fresh_levels, rng)
    fresh_points = list(fresh_points)
    err = 0.0
    for X in fresh_points:
        err = max(err, opnorm(eval_herglotz(rep, X, delta, tol) - eval_herglotz(rec.rep, X, delta, tol)))
    return RecoveryReport(
        gram_residual=rec.gram_residual,
        U_defect=validate_structure(rec.rep.U, "unitary").defect,
        V_defect=validate_structure(rec.rep.V, "isometry").defect,
        roundtrip_max_error=err,
        sample_count=len(points),
        fresh_sample_count=len(fresh_points),
        recovery_dim=rec.rep.ambient_dim,
        recovery_rank=rec.rank,
        A_norm=rec.A_norm,
        sample_max_error=sample_reproduction_error(rec.rep, model),
        fresh_levels=sorted({X.level for X in fresh_points}),
    )
