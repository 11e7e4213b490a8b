"""Finite-dimensional coefficient algebras and points of their matrix universe.

A point ``X`` in ``M_n(B)`` with ``B`` a k-dimensional concrete algebra is
stored as an ``nk x nk`` complex matrix viewed as an ``n x n`` grid of
``k x k`` blocks (level index outer, algebra index inner).  The same
convention is used for every amplified object: ``U ⊗ I_n`` in the usual
notation is ``np.kron(np.eye(n), U)`` here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PreconditionError, StructureError
from .matrixcore import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    complex_gaussian,
    opnorm,
    random_unitary,
    validate_structure,
)

FULL = "full"
DIAGONAL = "diagonal"


@dataclass(frozen=True)
class AlgebraDescriptor:
    """``M_k(C)`` (``kind="full"``) or ``C^k`` as diagonal k x k matrices."""

    kind: str
    k: int

    def __post_init__(self):
        if self.kind not in (FULL, DIAGONAL):
            raise StructureError(f"AlgebraDescriptor: kind must be 'full' or 'diagonal', got {self.kind!r}")
        if int(self.k) != self.k or self.k < 1:
            raise StructureError("AlgebraDescriptor: k >= 1")

    @classmethod
    def full(cls, k: int) -> "AlgebraDescriptor":
        return cls(FULL, k)

    @classmethod
    def diagonal(cls, k: int) -> "AlgebraDescriptor":
        return cls(DIAGONAL, k)

    @property
    def is_scalar(self) -> bool:
        return self.k == 1

    def element(self, b) -> np.ndarray:
        """Validate ``b`` as a k x k element of this algebra."""
        b = as_matrix(b, "algebra element")
        if b.shape != (self.k, self.k):
            raise StructureError(f"algebra element must be {self.k}x{self.k}, got {b.shape}")
        if self.kind == DIAGONAL and np.any(b[~np.eye(self.k, dtype=bool)] != 0):
            raise StructureError("LeveledElement: diagonal algebra elements must be diagonal")
        return b

    def random_element(self, rng: np.random.Generator, norm: float | None = None) -> np.ndarray:
        if self.kind == FULL:
            b = complex_gaussian((self.k, self.k), rng)
        else:
            b = np.diag(complex_gaussian(self.k, rng))
        if norm is not None:
            b = b * (norm / opnorm(b))
        return b


@dataclass(frozen=True, eq=False)
class LeveledElement:
    """A point of ``M_n(B)``."""

    algebra: AlgebraDescriptor
    level: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        M = as_matrix(self.matrix, "LeveledElement.matrix").copy()
        size = self.level * self.algebra.k
        if self.level < 1:
            raise StructureError("LeveledElement: level >= 1")
        if M.shape != (size, size):
            raise StructureError(f"LeveledElement: matrix dimensions = nk x nk ({size}), got {M.shape}")
        if self.algebra.kind == DIAGONAL:
            k, n = self.algebra.k, self.level
            off = ~np.eye(k, dtype=bool)
            if np.any(M.reshape(n, k, n, k).transpose(0, 2, 1, 3)[:, :, off] != 0):
                raise StructureError("LeveledElement: every k x k block is diagonal")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @classmethod
    def zero(cls, algebra: AlgebraDescriptor, level: int = 1) -> "LeveledElement":
        return cls(algebra, level, np.zeros((level * algebra.k,) * 2, dtype=complex))

    @classmethod
    def from_blocks(cls, algebra: AlgebraDescriptor, blocks) -> "LeveledElement":
        """Build from an n x n nested list of k x k algebra elements (``None`` for 0)."""
        n = len(blocks)
        k = algebra.k
        M = np.zeros((n * k, n * k), dtype=complex)
        for i, row in enumerate(blocks):
            if len(row) != n:
                raise StructureError("from_blocks: block grid must be square")
            for j, b in enumerate(row):
                if b is not None:
                    M[i * k:(i + 1) * k, j * k:(j + 1) * k] = algebra.element(b)
        return cls(algebra, n, M)

    def block(self, i: int, j: int) -> np.ndarray:
        k = self.algebra.k
        return self.matrix[i * k:(i + 1) * k, j * k:(j + 1) * k]

    def norm(self) -> float:
        return opnorm(self.matrix)

    def scaled(self, c: complex) -> "LeveledElement":
        return LeveledElement(self.algebra, self.level, c * self.matrix)

    def direct_sum(self, other: "LeveledElement") -> "LeveledElement":
        _same_algebra(self.algebra, other.algebra)
        k = self.algebra.k
        a, b = self.level * k, other.level * k
        M = np.zeros((a + b, a + b), dtype=complex)
        M[:a, :a] = self.matrix
        M[a:, a:] = other.matrix
        return LeveledElement(self.algebra, self.level + other.level, M)

    def conjugate_by(self, P: np.ndarray) -> "LeveledElement":
        """``(P ⊗ I_k) X (P ⊗ I_k)^*`` for a scalar n x n unitary ``P``."""
        Pk = np.kron(P, np.eye(self.algebra.k))
        return LeveledElement(self.algebra, self.level, Pk @ self.matrix @ Pk.conj().T)


def _same_algebra(a: AlgebraDescriptor, b: AlgebraDescriptor):
    if a != b:
        raise StructureError(f"algebra mismatch: {a} vs {b}")


def random_point(
    algebra: AlgebraDescriptor,
    level: int,
    rng: np.random.Generator,
    norm: float | None = None,
) -> LeveledElement:
    """Complex-Gaussian point rescaled to operator norm ``norm``.

    ``norm`` defaults to a uniform draw from [0.3, 0.9].
    """
    if norm is None:
        norm = rng.uniform(0.3, 0.9)
    n, k = level, algebra.k
    if algebra.kind == FULL:
        M = complex_gaussian((n * k, n * k), rng)
    else:
        coords = complex_gaussian((k, n, n), rng)
        M = np.zeros((n * k, n * k), dtype=complex)
        for a in range(k):
            M[a::k, a::k] = coords[a]
    M = M * (norm / opnorm(M))
    return LeveledElement(algebra, level, M)


@dataclass(frozen=True, eq=False)
class UnitalEmbedding:
    """Unital *-homomorphism ``alpha: B -> M_m(C)``.

    Full(k): ``alpha(b) = W (b ⊗ I_s) W^*`` with ``W`` unitary and
    ``m = k s``.  Diagonal(k): ``alpha(e_j) = P_j`` for pairwise orthogonal
    projections summing to the identity.
    """

    algebra: AlgebraDescriptor
    ambient_dim: int
    W: np.ndarray | None = field(default=None, repr=False)
    multiplicity: int | None = None
    projections: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        m = self.ambient_dim
        if self.algebra.kind == FULL:
            if self.multiplicity is None or self.W is None:
                raise StructureError("UnitalEmbedding: Full algebras need W and multiplicity s")
            if m != self.algebra.k * self.multiplicity:
                raise StructureError("UnitalEmbedding: m = k*s")
            W = as_matrix(self.W, "UnitalEmbedding.W").copy()
            if W.shape != (m, m):
                raise StructureError(f"UnitalEmbedding: W must be {m}x{m}")
            W.setflags(write=False)
            object.__setattr__(self, "W", W)
        else:
            if self.projections is None or len(self.projections) != self.algebra.k:
                raise StructureError("UnitalEmbedding: Diagonal(k) needs k projections")
            Ps = []
            for P in self.projections:
                P = as_matrix(P, "UnitalEmbedding.projection").copy()
                if P.shape != (m, m):
                    raise StructureError(f"UnitalEmbedding: projections must be {m}x{m}")
                P.setflags(write=False)
                Ps.append(P)
            object.__setattr__(self, "projections", tuple(Ps))

    @classmethod
    def natural(cls, algebra: AlgebraDescriptor, s: int = 1) -> "UnitalEmbedding":
        """``b -> b ⊗ I_s``."""
        m = algebra.k * s
        if algebra.kind == FULL:
            return cls(algebra, m, W=np.eye(m, dtype=complex), multiplicity=s)
        Ps = []
        for j in range(algebra.k):
            E = np.zeros((algebra.k, algebra.k))
            E[j, j] = 1
            Ps.append(np.kron(E, np.eye(s)).astype(complex))
        return cls(algebra, m, projections=tuple(Ps))

    @classmethod
    def from_ranks(cls, ranks: Sequence[int], Q: np.ndarray | None = None) -> "UnitalEmbedding":
        """Diagonal embedding whose projections are consecutive column groups of ``Q``."""
        m = int(sum(ranks))
        Q = np.eye(m, dtype=complex) if Q is None else Q
        Ps, start = [], 0
        for r in ranks:
            cols = Q[:, start:start + r]
            Ps.append(cols @ cols.conj().T)
            start += r
        return cls(AlgebraDescriptor.diagonal(len(ranks)), m, projections=tuple(Ps))

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> None:
        if self.algebra.kind == FULL:
            check = validate_structure(self.W, "unitary", tol)
            if not check.ok:
                raise StructureError(f"UnitalEmbedding: W unitary (defect {check.defect:.3e})")
            return
        total = np.zeros((self.ambient_dim,) * 2, dtype=complex)
        for i, P in enumerate(self.projections):
            if opnorm(P - P.conj().T) > tol.bound() or opnorm(P @ P - P) > tol.bound():
                raise StructureError("UnitalEmbedding: each P_j = P_j* = P_j^2")
            for Pj in self.projections[i + 1:]:
                if opnorm(P @ Pj) > tol.bound():
                    raise StructureError("UnitalEmbedding: P_i P_j = 0 (i != j)")
            total = total + P
        if opnorm(total - np.eye(self.ambient_dim)) > tol.bound():
            raise StructureError("UnitalEmbedding: sum of P_j = I_m")

    def apply(self, b) -> np.ndarray:
        b = self.algebra.element(b)
        if self.algebra.kind == FULL:
            return self.W @ np.kron(b, np.eye(self.multiplicity)) @ self.W.conj().T
        return sum(b[j, j] * P for j, P in enumerate(self.projections))

    def amplify(self, M: np.ndarray, level: int) -> np.ndarray:
        """Apply ``alpha ⊗ 1_n`` to an ``nk x nk`` matrix (no structure checks)."""
        n, k, m = level, self.algebra.k, self.ambient_dim
        if self.algebra.kind == FULL:
            Wn = np.kron(np.eye(n), self.W)
            return Wn @ np.kron(M, np.eye(self.multiplicity)) @ Wn.conj().T
        out = np.zeros((n * m, n * m), dtype=complex)
        for j, P in enumerate(self.projections):
            out += np.kron(M[j::k, j::k], P)
        return out

    def canonical(self, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, "UnitalEmbedding"]:
        """Unitary ``Q`` and natural-form embedding ``beta`` with ``alpha(b) = Q beta(b) Q^*``.

        Full: ``beta(b) = b ⊗ I_s``.  Diagonal: ``beta`` sends ``e_j`` to a
        coordinate projection, coordinates grouped by ``j``.
        """
        if self.algebra.kind == FULL:
            return self.W.copy(), UnitalEmbedding.natural(self.algebra, self.multiplicity)
        cols, ranks = [], []
        for P in self.projections:
            w, vecs = np.linalg.eigh((P + P.conj().T) / 2)
            keep = vecs[:, w > 0.5]
            cols.append(keep)
            ranks.append(keep.shape[1])
        Q = np.hstack(cols)
        if Q.shape[1] != self.ambient_dim:
            raise StructureError("UnitalEmbedding: sum of P_j = I_m")
        return Q, UnitalEmbedding.from_ranks(ranks)


def embed(alpha: UnitalEmbedding, X: LeveledElement) -> np.ndarray:
    """``(alpha ⊗ 1_n)(X)``, an ``mn x mn`` matrix."""
    _same_algebra(alpha.algebra, X.algebra)
    return alpha.amplify(X.matrix, X.level)


def random_embedding(algebra: AlgebraDescriptor, s: int, rng: np.random.Generator) -> UnitalEmbedding:
    """Random unital embedding into ``M_{ks}``.

    Full: Haar-random ``W``.  Diagonal: Haar-random frame split into
    groups of random sizes (some possibly empty) summing to ``ks``.
    """
    m = algebra.k * s
    if algebra.kind == FULL:
        return UnitalEmbedding(algebra, m, W=random_unitary(m, rng), multiplicity=s)
    cuts = np.sort(rng.integers(0, m + 1, size=algebra.k - 1))
    ranks = np.diff(np.concatenate([[0], cuts, [m]]))
    if ranks.max() == 0:
        ranks[0] = m
    return UnitalEmbedding.from_ranks(list(ranks), random_unitary(m, rng))


X_LETTER = "X"
XSTAR_LETTER = "X*"


@dataclass(frozen=True, eq=False)
class FreePolynomial:
    """Free *-polynomial with zero constant term.

    ``terms`` is a sequence of ``(coefficient, factors)``; each factor is
    ``"X"``, ``"X*"`` or a k x k algebra element acting as ``I_n ⊗ b``.
    Every term must contain at least one ``X`` or ``X*`` factor.
    """

    terms: tuple

    def __post_init__(self):
        cleaned = []
        for coeff, factors in self.terms:
            factors = tuple(factors)
            if not any(isinstance(f, str) for f in factors):
                raise StructureError("FreePolynomial: constant term forced zero (delta(0) = 0)")
            norm_factors = []
            for f in factors:
                if isinstance(f, str):
                    if f not in (X_LETTER, XSTAR_LETTER):
                        raise StructureError(f"FreePolynomial: unknown letter {f!r}")
                    norm_factors.append(f)
                else:
                    arr = as_matrix(f, "FreePolynomial coefficient").copy()
                    arr.setflags(write=False)
                    norm_factors.append(arr)
            cleaned.append((complex(coeff), tuple(norm_factors)))
        if not cleaned:
            raise StructureError("FreePolynomial: at least one term")
        object.__setattr__(self, "terms", tuple(cleaned))

    @classmethod
    def identity(cls) -> "FreePolynomial":
        return cls(((1.0, (X_LETTER,)),))

    @classmethod
    def power(cls, p: int) -> "FreePolynomial":
        if p < 1:
            raise StructureError("FreePolynomial: constant term forced zero (delta(0) = 0)")
        return cls(((1.0, (X_LETTER,) * p),))

    @property
    def is_identity(self) -> bool:
        if len(self.terms) != 1:
            return False
        coeff, factors = self.terms[0]
        return coeff == 1 and factors == (X_LETTER,)

    def __call__(self, X: LeveledElement) -> LeveledElement:
        if self.is_identity:
            return X
        n, k = X.level, X.algebra.k
        out = np.zeros_like(X.matrix)
        Xstar = X.matrix.conj().T
        for coeff, factors in self.terms:
            acc = np.eye(n * k, dtype=complex)
            for f in factors:
                if isinstance(f, str):
                    acc = acc @ (X.matrix if f == X_LETTER else Xstar)
                else:
                    acc = acc @ np.kron(np.eye(n), X.algebra.element(f))
            out = out + coeff * acc
        return LeveledElement(X.algebra, n, out)


def shrink_into_domain(
    X: LeveledElement,
    delta: FreePolynomial,
    alpha: UnitalEmbedding,
    target: float = 0.95,
    factor: float = 0.8,
    max_iter: int = 200,
) -> LeveledElement:
    """Scale ``X`` down until ``||alpha(delta(X))|| < target``."""
    for _ in range(max_iter):
        if opnorm(embed(alpha, delta(X))) < target:
            return X
        X = X.scaled(factor)
    raise PreconditionError("could not shrink point into the delta-contraction domain")
