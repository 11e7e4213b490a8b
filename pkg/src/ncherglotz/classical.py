"""Scalar case: atomic probability measures on the unit circle."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as sla

from .algebra import AlgebraDescriptor, UnitalEmbedding
from .errors import DomainError, StructureError
from .freefunc import HerglotzRepresentation
from .matrixcore import DEFAULT_TOL, Tolerance

TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Finite sum of point masses ``w_j * delta(e^{i theta_j})``.

    Angles are reduced into [0, 2 pi); weights must be nonnegative and sum
    to one.
    """

    thetas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        thetas = np.mod(np.asarray(self.thetas, dtype=float).ravel(), TWO_PI)
        weights = np.asarray(self.weights, dtype=float).ravel()
        if thetas.shape != weights.shape or thetas.size == 0:
            raise StructureError("CircleMeasure: one weight per atom, at least one atom")
        if not (np.all(np.isfinite(thetas)) and np.all(np.isfinite(weights))):
            raise StructureError("CircleMeasure: atoms must be finite")
        if np.any(weights < 0):
            raise StructureError("CircleMeasure: weights nonnegative")
        if abs(weights.sum() - 1.0) > DEFAULT_TOL.bound():
            raise StructureError(f"CircleMeasure: sum of weights = 1 (got {weights.sum():.12g})")
        if thetas.size > 1:
            gaps = np.diff(np.sort(thetas))
            wrap = np.sort(thetas)[0] + TWO_PI - np.sort(thetas)[-1]
            if min(gaps.min(), wrap) <= DEFAULT_TOL.bound():
                raise StructureError("CircleMeasure: thetas distinct after reduction mod 2 pi")
        thetas.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_atoms(cls, atoms: Sequence[dict]) -> "CircleMeasure":
        return cls([a["theta"] for a in atoms], [a["weight"] for a in atoms])

    @classmethod
    def point_mass(cls, theta: float = 0.0) -> "CircleMeasure":
        return cls([theta], [1.0])

    @classmethod
    def roots_of_unity(cls, N: int) -> "CircleMeasure":
        return cls(TWO_PI * np.arange(N) / N, np.full(N, 1.0 / N))

    @classmethod
    def random(cls, rng: np.random.Generator, max_atoms: int = 8) -> "CircleMeasure":
        n = int(rng.integers(1, max_atoms + 1))
        w = rng.dirichlet(np.ones(n))
        return cls(rng.uniform(0, TWO_PI, n), w / w.sum())

    @property
    def atoms(self) -> list[dict]:
        return [{"theta": float(t), "weight": float(w)} for t, w in zip(self.thetas, self.weights)]

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.thetas)


def herglotz_transform(mu: CircleMeasure, x) -> complex | np.ndarray:
    """``sum_j w_j (1 + e^{i theta_j} x) / (1 - e^{i theta_j} x)`` for ``|x| < 1``.

    Accepts a scalar or an array of points.
    """
    xs = np.asarray(x, dtype=complex)
    if np.any(np.abs(xs) >= 1):
        raise DomainError("herglotz_transform: |x| < 1 required")
    z = mu.points[:, None] * xs.ravel()[None, :]
    vals = (mu.weights[:, None] * (1 + z) / (1 - z)).sum(axis=0)
    if xs.ndim == 0:
        return complex(vals[0])
    return vals.reshape(xs.shape)


def moments_of(mu: CircleMeasure, N: int) -> np.ndarray:
    """Trigonometric moments ``m_n = sum_j w_j e^{i n theta_j}`` for ``n = 0..N``.

    These are the Taylor coefficients of ``(h(x) - 1)/2`` for n >= 1.
    """
    if N < 0:
        raise StructureError("moments_of: N >= 0")
    n = np.arange(N + 1)
    return (mu.weights[None, :] * np.exp(1j * np.outer(n, mu.thetas))).sum(axis=1)


class ToeplitzCheck(NamedTuple):
    ok: bool
    lambda_min: float


def toeplitz_matrix(m: Sequence[complex]) -> np.ndarray:
    """``T_{ij} = m_{i-j}`` with ``m_{-n} = conj(m_n)``."""
    m = np.asarray(m, dtype=complex)
    return sla.toeplitz(m, m.conj())


def toeplitz_psd_check(m: Sequence[complex], tol: Tolerance = DEFAULT_TOL) -> ToeplitzCheck:
    m = np.asarray(m, dtype=complex).ravel()
    if m.size == 0 or abs(m[0] - 1) > tol.bound():
        raise StructureError("toeplitz_psd_check: m_0 = 1 required")
    lam = float(np.linalg.eigvalsh(toeplitz_matrix(m))[0])
    return ToeplitzCheck(lam >= -tol.bound(), lam)


def rep_from_measure(mu: CircleMeasure) -> HerglotzRepresentation:
    """``U = diag(e^{i theta_j})``, ``V = (sqrt(w_j))_j`` over ``B = C``."""
    n = mu.thetas.size
    alpha = UnitalEmbedding.natural(AlgebraDescriptor.full(1), n)
    return HerglotzRepresentation(alpha, np.diag(mu.points), np.sqrt(mu.weights).reshape(-1, 1))


def taylor_coefficients(f, N: int, radius: float = 0.5, nodes: int = 256) -> np.ndarray:
    """Taylor coefficients ``c_0..c_N`` of ``f`` by trapezoid quadrature on ``|x| = radius``.

    Aliasing error is of order ``radius^nodes``; roundoff grows like
    ``radius^{-n}``.
    """
    if nodes <= N:
        raise StructureError("taylor_coefficients: need more nodes than coefficients")
    omega = np.exp(TWO_PI * 1j * np.arange(nodes) / nodes)
    vals = np.asarray(f(radius * omega), dtype=complex)
    c = np.fft.fft(vals) / nodes
    return c[:N + 1] / radius ** np.arange(N + 1)
