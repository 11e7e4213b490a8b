"""Dense complex linear algebra used throughout the package.

Everything here is a pure function of numpy arrays.  Norms are spectral
(operator) norms unless a name says otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    NoLurkingIsometryError,
    PreconditionError,
    SpectralConditionError,
    StructureError,
)

STRUCTURE_KINDS = (
    "hermitian",
    "psd",
    "contraction-strict",
    "contraction-weak",
    "unitary",
    "isometry",
    "nilpotent-superdiag",
)


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair.

    A defect ``e`` measured on data of size ``s`` is acceptable when
    ``e <= absolute + relative * s``.
    """

    absolute: float = 1e-10
    relative: float = 1e-8

    def __post_init__(self):
        if not (self.absolute >= 0 and self.relative >= 0):
            raise StructureError("Tolerance: both components must be >= 0")

    def bound(self, scale: float = 1.0) -> float:
        return self.absolute + self.relative * float(scale)


DEFAULT_TOL = Tolerance()


class StructureCheck(NamedTuple):
    ok: bool
    defect: float


class SchurComplement(NamedTuple):
    U: np.ndarray
    V_raw: np.ndarray


def as_matrix(M, name: str = "ComplexMatrix") -> np.ndarray:
    """Coerce to a 2-d complex array, rejecting NaN/Inf."""
    arr = np.asarray(M, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise StructureError(f"{name}: expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructureError(f"{name}: all entries finite")
    return arr


def opnorm(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def adjoint(M: np.ndarray) -> np.ndarray:
    return M.conj().T


def hermitian_part(M: np.ndarray) -> np.ndarray:
    return (M + M.conj().T) / 2


def lambda_min(M: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of ``M``."""
    if M.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(hermitian_part(M))[0])


def _require_square(M: np.ndarray, kind: str):
    if M.shape[0] != M.shape[1]:
        raise StructureError(f"{kind} check needs a square matrix, got {M.shape}")


def structure_defect(M, kind: str, block: int | None = None) -> float:
    """Distance of ``M`` from the property named by ``kind``.

    For ``nilpotent-superdiag`` with ``block=k`` the defect is the norm of
    everything outside the first block superdiagonal of k x k blocks;
    without ``block`` it is the norm of the lower triangle (diagonal
    included), which already forces nilpotency.
    """
    M = as_matrix(M)
    if kind == "hermitian":
        _require_square(M, kind)
        return opnorm(M - M.conj().T)
    if kind == "psd":
        _require_square(M, kind)
        return max(0.0, -lambda_min(M))
    if kind in ("contraction-strict", "contraction-weak"):
        return max(0.0, opnorm(M) - 1.0)
    if kind == "unitary":
        _require_square(M, kind)
        eye = np.eye(M.shape[0])
        return max(opnorm(M.conj().T @ M - eye), opnorm(M @ M.conj().T - eye))
    if kind == "isometry":
        if M.shape[0] < M.shape[1]:
            raise StructureError(f"isometry check needs rows >= cols, got {M.shape}")
        return opnorm(M.conj().T @ M - np.eye(M.shape[1]))
    if kind == "nilpotent-superdiag":
        _require_square(M, kind)
        if block is None:
            return opnorm(np.tril(M))
        n, rem = divmod(M.shape[0], block)
        if rem:
            raise StructureError(f"size {M.shape[0]} is not a multiple of block {block}")
        mask = np.zeros((n, n), dtype=bool)
        mask[np.arange(n - 1), np.arange(1, n)] = True
        outside = np.where(np.kron(mask, np.ones((block, block), dtype=bool)), 0, M)
        return opnorm(outside)
    raise StructureError(f"unknown structure kind {kind!r}; expected one of {STRUCTURE_KINDS}")


def validate_structure(M, kind: str, tol: Tolerance = DEFAULT_TOL, block: int | None = None) -> StructureCheck:
    M = as_matrix(M)
    defect = structure_defect(M, kind, block=block)
    if kind == "contraction-strict":
        return StructureCheck(opnorm(M) < 1.0, defect)
    return StructureCheck(defect <= tol.bound(max(1.0, opnorm(M))), defect)


def require_structure(M, kind: str, name: str, tol: Tolerance = DEFAULT_TOL, error=StructureError):
    """Raise ``error`` naming the violated invariant unless ``M`` has ``kind``."""
    check = validate_structure(M, kind, tol)
    if not check.ok:
        raise error(f"{name} {kind} (defect {check.defect:.3e})")
    return check


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_isometry(m: int, d: int, rng: np.random.Generator) -> np.ndarray:
    if d > m:
        raise StructureError(f"no isometry C^{d} -> C^{m}")
    return random_unitary(m, rng)[:, :d]


def complex_gaussian(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def orthonormal_complement(Q: np.ndarray) -> np.ndarray:
    """Orthonormal basis of range(Q)^perp built from e_0, e_1, ... in order.

    ``Q`` must have orthonormal columns.  Each standard basis vector is
    projected off the current basis (twice, for stability) and kept when
    the remainder has norm at least ``0.5/sqrt(m)``; residuals only shrink
    as the basis grows, so one pass always finishes the completion.
    """
    m, r = Q.shape
    basis = [Q[:, j] for j in range(r)]
    extra = []
    threshold = 0.5 / np.sqrt(m)
    for j in range(m):
        if len(basis) == m:
            break
        w = np.zeros(m, dtype=complex)
        w[j] = 1.0
        for _ in range(2):
            for q in basis:
                w = w - q * np.vdot(q, w)
        nrm = np.linalg.norm(w)
        if nrm >= threshold:
            w = w / nrm
            basis.append(w)
            extra.append(w)
    if not extra:
        return np.zeros((m, 0), dtype=complex)
    return np.column_stack(extra)


def unitary_completion(V, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Extend an isometry ``V`` (m x d) to an m x m unitary with ``V`` as its first columns."""
    V = as_matrix(V, "isometry")
    if V.shape[0] < V.shape[1]:
        raise PreconditionError(f"unitary_completion: isometry needs rows >= cols, got {V.shape}")
    check = validate_structure(V, "isometry", tol)
    if not check.ok:
        raise PreconditionError(f"unitary_completion: V is not an isometry (defect {check.defect:.3e})")
    if V.shape[0] == V.shape[1]:
        return V.copy()
    return np.hstack([V, orthonormal_complement(V)])


def polar_isometry(M: np.ndarray) -> np.ndarray:
    """Closest matrix with orthonormal columns (polar factor)."""
    if M.shape[1] == 0:
        return M.astype(complex)
    Y, _, Zh = np.linalg.svd(M, full_matrices=False)
    return Y @ Zh


def numerical_rank(M: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol.relative * s[0]))


def _stack_columns(cols, name: str) -> np.ndarray:
    if isinstance(cols, np.ndarray) and cols.ndim == 2:
        return as_matrix(cols, name)
    blocks = [as_matrix(c, name) for c in cols]
    if not blocks:
        raise StructureError(f"{name}: empty column family")
    heights = {b.shape[0] for b in blocks}
    if len(heights) != 1:
        raise StructureError(f"{name}: columns have unequal heights {sorted(heights)}")
    return np.hstack(blocks)


def gram_residual(Phi: np.ndarray, Theta: np.ndarray) -> float:
    return opnorm(Phi.conj().T @ Phi - Theta.conj().T @ Theta)


def lurking_isometry(phi_cols, theta_cols, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Unitary ``L`` with ``L @ phi_i = theta_i`` for two Gram-equal column families.

    The families may be given as lists of columns/column blocks or as two
    matrices.  On span(phi) ``L`` is the partial isometry forced by the
    data; off it, ``L`` maps the deterministic completion of span(phi)
    onto the deterministic completion of span(theta).
    """
    Phi = _stack_columns(phi_cols, "phi_cols")
    Theta = _stack_columns(theta_cols, "theta_cols")
    if Phi.shape != Theta.shape:
        raise StructureError(f"lurking_isometry: families have shapes {Phi.shape} and {Theta.shape}")
    scale = max(opnorm(Phi), opnorm(Theta)) ** 2
    residual = gram_residual(Phi, Theta)
    if residual > tol.bound(max(1.0, scale)):
        raise NoLurkingIsometryError(
            f"no lurking isometry: Gram residual {residual:.3e} exceeds tolerance", residual
        )
    P, s, Qh = np.linalg.svd(Phi, full_matrices=False)
    r = int(np.sum(s > tol.relative * s[0])) if s.size and s[0] > 0 else 0
    Pr = P[:, :r]
    Wr = polar_isometry((Theta @ Qh[:r].conj().T) / s[:r])
    source = np.hstack([Pr, orthonormal_complement(Pr)])
    target = np.hstack([Wr, orthonormal_complement(Wr)])
    return target @ source.conj().T


def schur_complement_unitary(L, split: tuple[int, int], tol: Tolerance = DEFAULT_TOL) -> SchurComplement:
    """Feedback Schur complement ``U = D - C (I + A)^{-1} B`` and ``V_raw = C (I + A)^{-1}``.

    ``L = [[A, B], [C, D]]`` with ``A`` of size ``split[0]``.  Both
    ``I + A`` (needed by the formula) and ``I - A`` (1 outside the
    spectrum of ``A``) must be boundedly invertible.
    """
    L = as_matrix(L, "L")
    d1, d2 = split
    if L.shape != (d1 + d2, d1 + d2):
        raise StructureError(f"schur_complement_unitary: L has shape {L.shape}, split {split}")
    A, B = L[:d1, :d1], L[:d1, d1:]
    C, D = L[d1:, :d1], L[d1:, d1:]
    eye = np.eye(d1)
    threshold = tol.bound(1.0)
    for label, M in (("I - A", eye - A), ("I + A", eye + A)):
        smin = np.linalg.svd(M, compute_uv=False)[-1] if d1 else 1.0
        if smin <= threshold:
            raise SpectralConditionError(
                f"spectral condition violated: {label} is singular (sigma_min {smin:.3e})"
            )
    if d1 == 0:
        return SchurComplement(D.copy(), C.copy())
    lu = sla.lu_factor(eye + A)
    # C (I+A)^{-1} = ((I+A)^{-H} C^H)^H
    V_raw = sla.lu_solve(lu, C.conj().T, trans=2).conj().T
    U = D - V_raw @ B
    return SchurComplement(U, V_raw)


def psd_inverse_sqrt(S: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(hermitian_part(S))
    return (Q / np.sqrt(w)) @ Q.conj().T


def solve_right(X: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``X @ inv(M)`` by a linear solve."""
    return np.linalg.solve(M.T, X.T).T


def block_diag(*blocks: Sequence[np.ndarray]) -> np.ndarray:
    return sla.block_diag(*blocks).astype(complex)
