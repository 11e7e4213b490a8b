"""Distinct states and conditional expectations that realize the same function.

All constructions replace the circle, the integers and crossed products by
cyclic groups of finite order, so "g is the constant function I" becomes
``g = I + O(||X||^N)``; every generator here makes the moments
``phi(u b_1 ... u b_p)`` vanish exactly for ``0 < p < N`` (``2N + 1`` for
the shift construction).

Shift orientation.  The crossed product uses the backward shift
``e_i -> e_{i-1}``, which gives ``U alpha(b) U^* = alpha(psi(b))`` and
``phi(u b u^*) = psi(b)``.  The endomorphism construction uses the forward
shift ``e_i -> e_{i+1}``, which gives ``phi(u^* b u) = psi(b)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import DIAGONAL, FULL, AlgebraDescriptor, LeveledElement, UnitalEmbedding, random_point
from .errors import PreconditionError, StructureError
from .freefunc import HerglotzRepresentation, eval_herglotz
from .matrixcore import DEFAULT_TOL, Tolerance, as_matrix, opnorm, validate_structure
from .moments import U_TAG, USTAR_TAG, direct_moment


def cyclic_shift(N: int, step: int = 1) -> np.ndarray:
    """Permutation matrix sending ``e_i`` to ``e_{i+step mod N}``."""
    return np.roll(np.eye(N, dtype=complex), step, axis=0)


def basis_vector(N: int, i: int = 0) -> np.ndarray:
    e = np.zeros((N, 1), dtype=complex)
    e[i, 0] = 1
    return e


@dataclass(frozen=True, eq=False)
class AlgebraMap:
    """Unital *-endomorphism of a concrete algebra.

    Full(k): conjugation ``b -> w b w^*`` by a unitary ``w``.  Diagonal(k):
    ``psi(b)_l = b_{sigma(l)}`` for a self-map ``sigma`` of ``{0..k-1}``
    (an automorphism when ``sigma`` is a permutation).
    """

    algebra: AlgebraDescriptor
    unitary: np.ndarray | None = field(default=None, repr=False)
    coords: tuple | None = None

    def __post_init__(self):
        k = self.algebra.k
        if self.algebra.kind == FULL:
            if self.unitary is None:
                raise StructureError("AlgebraMap: Full algebras are mapped by conjugation with a unitary")
            w = as_matrix(self.unitary, "AlgebraMap.unitary").copy()
            if w.shape != (k, k) or not validate_structure(w, "unitary").ok:
                raise StructureError("AlgebraMap: conjugating matrix must be a k x k unitary")
            object.__setattr__(self, "unitary", w)
        else:
            if self.coords is None or len(self.coords) != k:
                raise StructureError("AlgebraMap: Diagonal algebras need a self-map of the k coordinates")
            coords = tuple(int(c) for c in self.coords)
            if any(c < 0 or c >= k for c in coords):
                raise StructureError("AlgebraMap: coordinate map out of range")
            object.__setattr__(self, "coords", coords)

    @classmethod
    def identity(cls, algebra: AlgebraDescriptor) -> "AlgebraMap":
        if algebra.kind == FULL:
            return cls(algebra, unitary=np.eye(algebra.k))
        return cls(algebra, coords=tuple(range(algebra.k)))

    @classmethod
    def constant(cls, algebra: AlgebraDescriptor, j: int) -> "AlgebraMap":
        """Endomorphism of the diagonal algebra induced by the constant map to ``j``."""
        if algebra.kind != DIAGONAL:
            raise StructureError("AlgebraMap.constant: only for diagonal algebras")
        return cls(algebra, coords=(j,) * algebra.k)

    @property
    def is_automorphism(self) -> bool:
        if self.algebra.kind == FULL:
            return True
        return sorted(self.coords) == list(range(self.algebra.k))

    def __call__(self, b) -> np.ndarray:
        b = self.algebra.element(b)
        if self.algebra.kind == FULL:
            return self.unitary @ b @ self.unitary.conj().T
        return np.diag(np.diag(b)[list(self.coords)])

    def power(self, j: int) -> "AlgebraMap":
        if self.algebra.kind == FULL:
            return AlgebraMap(self.algebra, unitary=np.linalg.matrix_power(self.unitary, j))
        idx = list(range(self.algebra.k))
        for _ in range(j):
            idx = [self.coords[i] for i in idx]
        return AlgebraMap(self.algebra, coords=tuple(idx))

    def distance_to_identity(self) -> float:
        """``max_b ||psi(b) - b||`` over matrix units ``b`` (zero iff identity)."""
        k = self.algebra.k
        worst = 0.0
        for i in range(k):
            for j in range(k):
                if self.algebra.kind == DIAGONAL and i != j:
                    continue
                E = np.zeros((k, k), dtype=complex)
                E[i, j] = 1
                worst = max(worst, opnorm(self(E) - E))
        return worst


def _density(algebra: AlgebraDescriptor, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.diag(rho)
    rho = algebra.element(rho)
    if not validate_structure(rho, "hermitian").ok or not validate_structure(rho, "psd").ok:
        raise StructureError("scalar state: density matrix must be positive semidefinite")
    if abs(np.trace(rho) - 1) > DEFAULT_TOL.bound():
        raise StructureError("scalar state: density matrix must have unit trace")
    return rho


def _sqrt_psd(rho: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh((rho + rho.conj().T) / 2)
    return (Q * np.sqrt(np.clip(w, 0, None))) @ Q.conj().T


def distinguishing_element(rho1, rho2) -> np.ndarray:
    """Contraction ``b`` maximizing ``|tr(rho1 b) - tr(rho2 b)|`` (the sign of ``rho1 - rho2``)."""
    D = np.asarray(rho1, dtype=complex) - np.asarray(rho2, dtype=complex)
    w, Q = np.linalg.eigh((D + D.conj().T) / 2)
    return (Q * np.sign(w)) @ Q.conj().T


def _haar_rep(algebra: AlgebraDescriptor, rho: np.ndarray, N: int) -> HerglotzRepresentation:
    k = algebra.k
    # C^k (algebra) ⊗ C^k (purification) ⊗ C^N (circle) ⊗ C^k (output copy)
    xi = _sqrt_psd(rho).reshape(-1, 1)
    alpha = UnitalEmbedding.natural(algebra, k * N * k)
    U = np.kron(np.eye(k * k), np.kron(cyclic_shift(N), np.eye(k)))
    V = np.kron(xi, np.kron(basis_vector(N), np.eye(k)))
    return HerglotzRepresentation(alpha, U, V)


def haar_pair_states(
    algebra: AlgebraDescriptor,
    rho1,
    rho2,
    N: int,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[HerglotzRepresentation, HerglotzRepresentation]:
    """Two realizations of the scalar states ``tr(rho_j .)`` averaged over the circle.

    The state ``psi_j(w)`` is ``phi_j`` applied to ``w`` with ``u`` replaced
    by an order-N root of unity and averaged; it is returned as the
    ``B(C^k)``-valued map ``psi_j(w) I_k``.  Mixed moments vanish for
    ``0 < p < N``, yet ``psi_j(u^* b u) = tr(rho_j b) I``.
    """
    if N < 2:
        raise StructureError("TruncationParam: N >= 2")
    r1, r2 = _density(algebra, rho1), _density(algebra, rho2)
    if opnorm(r1 - r2) <= tol.bound():
        raise PreconditionError("states coincide")
    return _haar_rep(algebra, r1, N), _haar_rep(algebra, r2, N)


def _commutation(a: int, b: int) -> np.ndarray:
    """Permutation ``P`` with ``P (x ⊗ y) = y ⊗ x`` for ``x`` in C^a, ``y`` in C^b."""
    P = np.zeros((a * b, a * b), dtype=complex)
    for i in range(a):
        for j in range(b):
            P[j * a + i, i * b + j] = 1
    return P


def orbit_embedding(maps: Sequence[AlgebraMap]) -> UnitalEmbedding:
    """``alpha(b) = blockdiag(maps[0](b), maps[1](b), ...)`` with the site index outer."""
    algebra = maps[0].algebra
    k, N = algebra.k, len(maps)
    if algebra.kind == FULL:
        D = np.zeros((N * k, N * k), dtype=complex)
        for i, psi in enumerate(maps):
            D[i * k:(i + 1) * k, i * k:(i + 1) * k] = psi.unitary
        return UnitalEmbedding(algebra, N * k, W=D @ _commutation(k, N), multiplicity=N)
    Ps = []
    for j in range(k):
        diag = np.concatenate([[1.0 if psi.coords[l] == j else 0.0 for l in range(k)] for psi in maps])
        Ps.append(np.diag(diag).astype(complex))
    return UnitalEmbedding(algebra, N * k, projections=tuple(Ps))


def crossed_product_expectation(
    algebra: AlgebraDescriptor,
    psi: AlgebraMap,
    N: int,
    tol: Tolerance = DEFAULT_TOL,
) -> HerglotzRepresentation:
    """Finite crossed product by an automorphism of order dividing N, compressed to block 0.

    ``alpha(b) = blockdiag(b, psi(b), ..., psi^{N-1}(b))``, ``U`` the backward
    shift, ``V`` the inclusion of block 0.
    """
    if N < 2:
        raise StructureError("TruncationParam: N >= 2")
    if psi.algebra != algebra:
        raise StructureError("crossed_product_expectation: psi acts on a different algebra")
    if not psi.is_automorphism:
        raise PreconditionError("crossed_product_expectation: psi must be an automorphism")
    if psi.power(N).distance_to_identity() > tol.bound():
        raise PreconditionError("crossed_product_expectation: psi^N = id required")
    k = algebra.k
    alpha = orbit_embedding([psi.power(i) for i in range(N)])
    U = np.kron(cyclic_shift(N, -1), np.eye(k))
    V = np.kron(basis_vector(N), np.eye(k))
    return HerglotzRepresentation(alpha, U, V)


def shift_endomorphism_expectation(
    algebra: AlgebraDescriptor,
    psi: AlgebraMap,
    N: int,
) -> HerglotzRepresentation:
    """Diagonal algebra on ``C^{2N+1} ⊗ C^k``: ``b`` at site 0, ``psi(b)`` elsewhere.

    ``U`` is the forward shift and ``V`` the inclusion of site 0, so
    ``phi(u^* b u) = psi(b)`` and ``phi`` is a conditional expectation.
    """
    if algebra.kind != DIAGONAL:
        raise StructureError("shift_endomorphism_expectation: construction is for the diagonal algebra")
    if N < 2:
        raise StructureError("TruncationParam: N >= 2")
    sites = 2 * N + 1
    ident = AlgebraMap.identity(algebra)
    alpha = orbit_embedding([ident] + [psi] * (sites - 1))
    U = np.kron(cyclic_shift(sites), np.eye(algebra.k))
    V = np.kron(basis_vector(sites), np.eye(algebra.k))
    return HerglotzRepresentation(alpha, U, V)


def identity_function_rep(algebra: AlgebraDescriptor, N: int) -> HerglotzRepresentation:
    """Finite stand-in for ``h = I``: ``h(X) = I + O(||X||^N)``."""
    return crossed_product_expectation(algebra, AlgebraMap.identity(algebra), N)


@dataclass
class NonuniquenessWitness:
    distinguishing_word: list
    moment_difference: float
    max_g_difference: float
    g_bound: float
    samples: int

    @property
    def holds(self) -> bool:
        return self.moment_difference >= 0.1 and self.max_g_difference <= self.g_bound


def nonuniqueness_witness(
    rep1: HerglotzRepresentation,
    rep2: HerglotzRepresentation,
    word: Sequence,
    N: int,
    rng: np.random.Generator,
    samples: int = 50,
    levels: Sequence[int] = (1, 2, 3),
    max_norm: float = 0.5,
) -> NonuniquenessWitness:
    """Compare the moment at ``word`` and the functions on ``||X|| <= max_norm``."""
    diff = opnorm(direct_moment(rep1, word) - direct_moment(rep2, word))
    worst = 0.0
    for i in range(samples):
        level = int(levels[i % len(levels)])
        X = random_point(rep1.algebra, level, rng, norm=rng.uniform(0.05, max_norm))
        worst = max(worst, opnorm(eval_herglotz(rep1, X) - eval_herglotz(rep2, X)))
    printable = [t if isinstance(t, str) else "b" for t in word]
    return NonuniquenessWitness(printable, diff, worst, 4 * 2.0 ** (-N), samples)


def balanced_word(b, orientation: str = "u b u*") -> list:
    if orientation == "u b u*":
        return [U_TAG, b, USTAR_TAG]
    if orientation == "u* b u":
        return [USTAR_TAG, b, U_TAG]
    raise StructureError(f"unknown orientation {orientation!r}")
