"""Free Herglotz functions given by a unitary/isometry realization.

A realization ``(alpha, U, V, T)`` defines, at level n,

    h(X) = i(I_n ⊗ T) + (I_n ⊗ V)^* (I + K)(I - K)^{-1} (I_n ⊗ V),
    K = (I_n ⊗ U) (alpha ⊗ 1_n)(delta(X)),

with ``delta`` the identity unless given.  ``V`` an isometry makes
``h(0) = I + iT``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import (
    AlgebraDescriptor,
    FreePolynomial,
    LeveledElement,
    UnitalEmbedding,
    embed,
    random_embedding,
    random_point,
)
from .errors import (
    ConditioningError,
    DegenerateRealPartError,
    DomainError,
    StructureError,
)
from .matrixcore import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    hermitian_part,
    opnorm,
    psd_inverse_sqrt,
    random_isometry,
    random_unitary,
    solve_right,
    validate_structure,
)

Evaluator = Callable[[LeveledElement], np.ndarray]


@dataclass(frozen=True, eq=False)
class HerglotzRepresentation:
    alpha: UnitalEmbedding
    U: np.ndarray = field(repr=False)
    V: np.ndarray = field(repr=False)
    offset_T: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        U = as_matrix(self.U, "HerglotzRepresentation.U").copy()
        V = as_matrix(self.V, "HerglotzRepresentation.V").copy()
        m = self.alpha.ambient_dim
        if U.shape != (m, m):
            raise StructureError(f"HerglotzRepresentation: U must be {m}x{m}, got {U.shape}")
        if V.shape[0] != m:
            raise StructureError(f"HerglotzRepresentation: V must have {m} rows, got {V.shape}")
        for arr in (U, V):
            arr.setflags(write=False)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)
        if self.offset_T is not None:
            T = as_matrix(self.offset_T, "HerglotzRepresentation.offset_T").copy()
            if T.shape != (V.shape[1],) * 2:
                raise StructureError("HerglotzRepresentation: offset_T must be d x d")
            T.setflags(write=False)
            object.__setattr__(self, "offset_T", T)

    @property
    def algebra(self) -> AlgebraDescriptor:
        return self.alpha.algebra

    @property
    def ambient_dim(self) -> int:
        return self.alpha.ambient_dim

    @property
    def output_dim(self) -> int:
        return self.V.shape[1]

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> None:
        """Raise :class:`StructureError` naming the first violated invariant."""
        self.alpha.validate(tol)
        for arr, kind, label in (
            (self.U, "unitary", "U unitary"),
            (self.V, "isometry", "V isometry"),
        ):
            check = validate_structure(arr, kind, tol)
            if not check.ok:
                raise StructureError(f"HerglotzRepresentation: {label} (defect {check.defect:.3e})")
        if self.offset_T is not None:
            check = validate_structure(self.offset_T, "hermitian", tol)
            if not check.ok:
                raise StructureError(f"HerglotzRepresentation: offset_T Hermitian (defect {check.defect:.3e})")

    def defects(self) -> dict:
        return {
            "U_unitary": validate_structure(self.U, "unitary").defect,
            "V_isometry": validate_structure(self.V, "isometry").defect,
        }


def _resolvent_operator(rep: HerglotzRepresentation, X: LeveledElement, delta, tol: Tolerance):
    point = X if delta is None else delta(X)
    Xe = embed(rep.alpha, point)
    r = opnorm(Xe)
    if r >= 1.0:
        what = "delta-contraction" if delta is not None and not delta.is_identity else "contraction"
        raise DomainError(f"not a strict {what}: ||alpha(X)|| = {r:.6g}")
    # cond(I - K) <= (1 + r) / (1 - r) for ||K|| = r
    if (1 + r) / (1 - r) > 1.0 / tol.absolute:
        raise ConditioningError(f"resolvent too ill-conditioned at ||alpha(X)|| = {r:.17g}")
    n = X.level
    K = np.kron(np.eye(n), rep.U) @ Xe
    return K, np.kron(np.eye(n), rep.V)


def eval_herglotz(
    rep: HerglotzRepresentation,
    X: LeveledElement,
    delta: FreePolynomial | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> np.ndarray:
    """Evaluate the represented function at ``X``; returns a ``dn x dn`` matrix."""
    K, Vn = _resolvent_operator(rep, X, delta, tol)
    Y = np.linalg.solve(np.eye(K.shape[0]) - K, Vn)
    H = Vn.conj().T @ (Y + K @ Y)
    if rep.offset_T is not None:
        H = H + 1j * np.kron(np.eye(X.level), rep.offset_T)
    return H


def evaluator(rep: HerglotzRepresentation, delta: FreePolynomial | None = None, tol: Tolerance = DEFAULT_TOL) -> Evaluator:
    def h(X: LeveledElement) -> np.ndarray:
        return eval_herglotz(rep, X, delta, tol)

    h.representation = rep
    h.delta = delta
    return h


def geometric_truncation(
    rep: HerglotzRepresentation,
    X: LeveledElement,
    order: int,
    delta: FreePolynomial | None = None,
) -> np.ndarray:
    """Partial sum ``V^*[I + 2 sum_{j=1..order} K^j] V`` of the series for h(X)."""
    K, Vn = _resolvent_operator(rep, X, delta, DEFAULT_TOL)
    acc = np.eye(K.shape[0], dtype=complex)
    power = np.eye(K.shape[0], dtype=complex)
    for _ in range(order):
        power = power @ K
        acc = acc + 2 * power
    H = Vn.conj().T @ acc @ Vn
    if rep.offset_T is not None:
        H = H + 1j * np.kron(np.eye(X.level), rep.offset_T)
    return H


def cayley_to_schur(H, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``F = (H - I)(H + I)^{-1}``."""
    H = as_matrix(H, "H")
    if H.shape[0] != H.shape[1]:
        raise StructureError("cayley_to_schur: H must be square")
    eye = np.eye(H.shape[0])
    if np.linalg.svd(H + eye, compute_uv=False)[-1] <= tol.bound():
        raise DomainError("cayley_to_schur: H + I is singular")
    return solve_right(H - eye, H + eye)


def cayley_to_herglotz(F, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``H = (I + F)(I - F)^{-1}``."""
    F = as_matrix(F, "F")
    if F.shape[0] != F.shape[1]:
        raise StructureError("cayley_to_herglotz: F must be square")
    eye = np.eye(F.shape[0])
    if np.linalg.svd(eye - F, compute_uv=False)[-1] <= tol.bound():
        raise DomainError("cayley_to_herglotz: I - F is singular")
    return solve_right(eye + F, eye - F)


@dataclass
class FreeAxiomReport:
    trials: int
    direct_sum_residual: float = 0.0
    self_sum_residual: float = 0.0
    intertwining_residual: float = 0.0
    similarity_residual: float = 0.0

    @property
    def max_residual(self) -> float:
        return max(
            self.direct_sum_residual,
            self.self_sum_residual,
            self.intertwining_residual,
            self.similarity_residual,
        )


def _blockdiag2(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    out = np.zeros((A.shape[0] + B.shape[0],) * 2, dtype=complex)
    out[:A.shape[0], :A.shape[0]] = A
    out[A.shape[0]:, A.shape[0]:] = B
    return out


def check_free_axioms(
    h: HerglotzRepresentation | Evaluator,
    trials: int,
    rng: np.random.Generator,
    algebra: AlgebraDescriptor | None = None,
    max_level: int = 2,
) -> FreeAxiomReport:
    """Measure how far ``h`` is from being graded and intertwining-preserving.

    Per trial: random X (level n1) and Y (level n2) of norm <= 0.9; checks
    h(X ⊕ Y) against h(X) ⊕ h(Y), h(X ⊕ X) against h(X) ⊕ h(X), the row
    selection and column injection intertwiners of X ⊕ Y, and unitary
    similarity (a random permutation times a random scalar unitary).
    """
    if trials < 1:
        raise StructureError("check_free_axioms: trials >= 1")
    if isinstance(h, HerglotzRepresentation):
        algebra = h.algebra
        h = evaluator(h)
    if algebra is None:
        raise StructureError("check_free_axioms: algebra required for a bare evaluator")
    report = FreeAxiomReport(trials)
    for _ in range(trials):
        n1, n2 = rng.integers(1, max_level + 1, size=2)
        X = random_point(algebra, int(n1), rng)
        Y = random_point(algebra, int(n2), rng)
        hX, hY = h(X), h(Y)
        d = hX.shape[0] // n1
        hXY = h(X.direct_sum(Y))
        report.direct_sum_residual = max(report.direct_sum_residual, opnorm(hXY - _blockdiag2(hX, hY)))
        hXX = h(X.direct_sum(X))
        report.self_sum_residual = max(report.self_sum_residual, opnorm(hXX - _blockdiag2(hX, hX)))

        # Gamma (X ⊕ Y) = X Gamma for the row selection Gamma = [I 0]
        total = int(n1 + n2)
        select = np.zeros((n1, total))
        select[:, :n1] = np.eye(n1)
        G = np.kron(select, np.eye(d))
        r_sel = opnorm(G @ hXY - hX @ G)
        inject = select.T
        Gi = np.kron(inject, np.eye(d))
        r_inj = opnorm(hXY @ Gi - Gi @ hX)
        report.intertwining_residual = max(report.intertwining_residual, r_sel, r_inj)

        P = np.eye(n1)[rng.permutation(n1)] @ random_unitary(int(n1), rng)
        Pd = np.kron(P, np.eye(d))
        r_sim = opnorm(h(X.conjugate_by(P)) - Pd @ hX @ Pd.conj().T)
        report.similarity_residual = max(report.similarity_residual, r_sim)
    return report


@dataclass(frozen=True, eq=False)
class RegularizedHerglotz:
    """``hhat(X) = (I ⊗ S^{-1/2})(-i(I ⊗ T) + h(X))(I ⊗ S^{-1/2})`` with ``h(0) = S + iT``."""

    S: np.ndarray
    T: np.ndarray
    S_inv_sqrt: np.ndarray
    h: Evaluator

    def __call__(self, X: LeveledElement) -> np.ndarray:
        H = self.h(X)
        n = H.shape[0] // self.S.shape[0]
        R = np.kron(np.eye(n), self.S_inv_sqrt)
        return R @ (H - 1j * np.kron(np.eye(n), self.T)) @ R

    def denormalize(self, H_hat: np.ndarray) -> np.ndarray:
        """Invert the normalization: ``S^{1/2} hhat S^{1/2} + iT``."""
        n = H_hat.shape[0] // self.S.shape[0]
        w, Q = np.linalg.eigh(self.S)
        S_sqrt = np.kron(np.eye(n), (Q * np.sqrt(w)) @ Q.conj().T)
        return S_sqrt @ H_hat @ S_sqrt + 1j * np.kron(np.eye(n), self.T)


def regularize(h0, h: HerglotzRepresentation | Evaluator, tol: Tolerance = DEFAULT_TOL) -> RegularizedHerglotz:
    """Normalize a Herglotz function with invertible ``Re h(0)`` so that ``hhat(0) = I``."""
    h0 = as_matrix(h0, "h0")
    if h0.shape[0] != h0.shape[1]:
        raise StructureError("regularize: h(0) must be square")
    if isinstance(h, HerglotzRepresentation):
        h = evaluator(h)
    S = hermitian_part(h0)
    T = (h0 - h0.conj().T) / 2j
    lam = float(np.linalg.eigvalsh(S)[0])
    if lam <= tol.bound(max(1.0, opnorm(S))):
        raise DegenerateRealPartError(f"degenerate real part: lambda_min(Re h(0)) = {lam:.3e}")
    return RegularizedHerglotz(S, T, psd_inverse_sqrt(S), h)


def random_representation(
    algebra: AlgebraDescriptor,
    s: int,
    d: int,
    rng: np.random.Generator,
) -> HerglotzRepresentation:
    """Haar-random ``U``, random isometry ``V`` and random embedding into ``M_{ks}``."""
    alpha = random_embedding(algebra, s, rng)
    m = alpha.ambient_dim
    if d > m:
        raise StructureError(f"random_representation: need k*s >= d, got m={m}, d={d}")
    return HerglotzRepresentation(alpha, random_unitary(m, rng), random_isometry(m, d, rng))
