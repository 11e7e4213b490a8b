"""Operator-valued moments of a realization and how to read them off h.

Words are tuples of string tags.  ``"u"`` and ``"u*"`` are the adjoined
unitary and its adjoint; any other tag names an algebra element in an
alphabet ``{name: k x k matrix}``, and ``name + "*"`` denotes its adjoint.
:func:`direct_moment` also accepts raw k x k arrays as letters.

For a realization ``(alpha, U, V)`` the state is
``phi(w) = V^* beta(w) V`` where ``beta(u) = U`` and ``beta(b) = alpha(b)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .algebra import AlgebraDescriptor, LeveledElement
from .errors import InsufficientTruncationError, StructureError
from .freefunc import Evaluator, HerglotzRepresentation, evaluator
from .matrixcore import DEFAULT_TOL, Tolerance, as_matrix, opnorm

U_TAG = "u"
USTAR_TAG = "u*"

Word = tuple


def letter_adjoint(tag: str) -> str:
    if tag == U_TAG:
        return USTAR_TAG
    if tag == USTAR_TAG:
        return U_TAG
    return tag[:-1] if tag.endswith("*") else tag + "*"


def word_adjoint(word: Sequence[str]) -> Word:
    return tuple(letter_adjoint(t) for t in reversed(word))


def letter_matrix(tag: str, alphabet: Mapping[str, np.ndarray], algebra: AlgebraDescriptor) -> np.ndarray:
    if tag in alphabet:
        return algebra.element(alphabet[tag])
    if tag.endswith("*") and tag[:-1] in alphabet:
        return algebra.element(alphabet[tag[:-1]]).conj().T
    raise StructureError(f"malformed word: unknown letter {tag!r}")


def _word_operator(rep: HerglotzRepresentation, word, alphabet) -> np.ndarray:
    m = rep.ambient_dim
    acc = np.eye(m, dtype=complex)
    for letter in word:
        if isinstance(letter, str):
            if letter == U_TAG:
                op = rep.U
            elif letter == USTAR_TAG:
                op = rep.U.conj().T
            else:
                op = rep.alpha.apply(letter_matrix(letter, alphabet, rep.algebra))
        else:
            op = rep.alpha.apply(rep.algebra.element(letter))
        acc = acc @ op
    return acc


def direct_moment(rep: HerglotzRepresentation, word, alphabet: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
    """``phi(word) = V^* beta(word) V`` computed by explicit products."""
    return rep.V.conj().T @ _word_operator(rep, word, alphabet or {}) @ rep.V


def alternating_word(b_list: Sequence) -> list:
    """The word ``u b_1 u b_2 ... u b_n`` with array letters."""
    out = []
    for b in b_list:
        out.extend([U_TAG, b])
    return out


def default_lift_scale(b_list: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> float:
    return 0.5 / (max(opnorm(np.asarray(b, dtype=complex)) for b in b_list) + tol.absolute)


def nilpotent_lift(
    b_list: Sequence,
    algebra: AlgebraDescriptor,
    scale: float | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> LeveledElement:
    """Level-(n+1) point with ``scale * b_i`` on block (i-1, i) and zeros elsewhere."""
    if len(b_list) == 0:
        raise StructureError("nilpotent_lift: empty letter list")
    bs = [algebra.element(b) for b in b_list]
    if scale is None:
        scale = default_lift_scale(bs, tol)
    n = len(bs)
    k = algebra.k
    M = np.zeros(((n + 1) * k,) * 2, dtype=complex)
    for i, b in enumerate(bs):
        M[i * k:(i + 1) * k, (i + 1) * k:(i + 2) * k] = scale * b
    return LeveledElement(algebra, n + 1, M)


def _as_evaluator(h) -> Evaluator:
    return evaluator(h) if isinstance(h, HerglotzRepresentation) else h


def extract_moments(
    h_eval: Evaluator | HerglotzRepresentation,
    b_list: Sequence,
    algebra: AlgebraDescriptor | None = None,
    scale: float | None = None,
) -> dict[tuple[int, int], np.ndarray]:
    """Moments ``phi(u b_i u b_{i+1} ... u b_j)`` for all ``1 <= i <= j <= n``.

    Evaluates h once at the nilpotent lift and reads block (i-1, j) of
    ``(h(X) - I)/2``, dividing out ``scale^{j-i+1}``.
    """
    if isinstance(h_eval, HerglotzRepresentation):
        algebra = h_eval.algebra
    if algebra is None:
        raise StructureError("extract_moments: algebra required for a bare evaluator")
    h = _as_evaluator(h_eval)
    bs = [algebra.element(b) for b in b_list]
    if scale is None:
        scale = default_lift_scale(bs) if bs else 1.0
    X = nilpotent_lift(bs, algebra, scale)
    H = h(X)
    d = H.shape[0] // (len(bs) + 1)
    G = (H - np.eye(H.shape[0])) / 2
    out = {}
    n = len(bs)
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            block = G[(i - 1) * d:i * d, j * d:(j + 1) * d]
            out[(i, j)] = block / scale ** (j - i + 1)
    return out


def output_action(algebra: AlgebraDescriptor, d: int) -> Callable[[np.ndarray], np.ndarray]:
    """How ``B`` acts on the output space ``C^d`` in module identities.

    ``d == k``: ``B`` acts on ``C^k`` by its defining matrices.  ``k == 1``:
    scalars act as multiples of ``I_d``.
    """
    if d == algebra.k:
        return lambda b: algebra.element(b)
    if algebra.k == 1:
        return lambda b: complex(algebra.element(b)[0, 0]) * np.eye(d)
    raise StructureError(f"module identities need output_dim = k or k = 1 (got d={d}, k={algebra.k})")


def module_property_residual(
    h_eval: Evaluator | HerglotzRepresentation,
    b_list: Sequence,
    b,
    algebra: AlgebraDescriptor | None = None,
    output_dim: int | None = None,
    scale: float | None = None,
) -> float:
    """``||g(X(I_n ⊕ b)) - I - (g(X) - I)(I_n ⊕ b)||`` at the nilpotent lift of ``b_list``."""
    if isinstance(h_eval, HerglotzRepresentation):
        algebra = h_eval.algebra
        output_dim = h_eval.output_dim
    if algebra is None:
        raise StructureError("module_property_residual: algebra required for a bare evaluator")
    h = _as_evaluator(h_eval)
    b = algebra.element(b)
    if opnorm(b) >= 1:
        raise StructureError("module_property_residual: ||b|| < 1 required")
    X = nilpotent_lift(b_list, algebra, scale)
    n = len(b_list)
    k = algebra.k
    right = np.eye((n + 1) * k, dtype=complex)
    right[n * k:, n * k:] = b
    Xb = LeveledElement(algebra, n + 1, X.matrix @ right)
    gX = h(X)
    d = gX.shape[0] // (n + 1) if output_dim is None else output_dim
    act = output_action(algebra, d)
    out_right = np.eye((n + 1) * d, dtype=complex)
    out_right[n * d:, n * d:] = act(b)
    eye = np.eye(gX.shape[0])
    return opnorm(h(Xb) - eye - (gX - eye) @ out_right)


@dataclass
class ConditionalExpectationReport:
    spectral_gap: float
    right_residual: float
    left_residual: float
    words_checked: int

    @property
    def max_residual(self) -> float:
        return max(self.right_residual, self.left_residual)

    def is_conditional_expectation(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.max_residual <= tol.bound()


def spectral_gap(U: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> float:
    """Longest arc of the unit circle free of eigenvalues of ``U``."""
    angles = np.sort(np.mod(np.angle(np.linalg.eigvals(U)), 2 * np.pi))
    gaps = np.append(np.diff(angles), angles[0] + 2 * np.pi - angles[-1])
    return float(gaps.max())


def conditional_expectation_check(
    rep: HerglotzRepresentation,
    word_samples: int,
    rng: np.random.Generator | None = None,
    max_word_length: int = 4,
    tol: Tolerance = DEFAULT_TOL,
) -> ConditionalExpectationReport:
    """Probe the bimodule property ``phi(w b) = phi(w) b`` and its adjoint form.

    Always includes the words ``1, u, u*, u u*, u* u`` before ``word_samples``
    random words of length up to ``max_word_length``; each word is paired
    with a fresh random algebra element.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    algebra = rep.algebra
    act = output_action(algebra, rep.output_dim)
    fixed = [(), (U_TAG,), (USTAR_TAG,), (U_TAG, USTAR_TAG), (USTAR_TAG, U_TAG)]
    words = [list(w) for w in fixed]
    for _ in range(word_samples):
        length = int(rng.integers(1, max_word_length + 1))
        w = []
        for _ in range(length):
            pick = rng.integers(0, 3)
            w.append(U_TAG if pick == 0 else USTAR_TAG if pick == 1 else algebra.random_element(rng))
        words.append(w)
    right = left = 0.0
    for w in words:
        b = algebra.random_element(rng, norm=1.0)
        phi_w = direct_moment(rep, w)
        right = max(right, opnorm(direct_moment(rep, w + [b]) - phi_w @ act(b)))
        w_star = [
            letter_adjoint(t) if isinstance(t, str) else t.conj().T for t in reversed(w)
        ]
        bs = b.conj().T
        left = max(left, opnorm(direct_moment(rep, [bs] + w_star) - act(bs) @ direct_moment(rep, w_star)))
    return ConditionalExpectationReport(spectral_gap(rep.U, tol), right, left, len(words))


@dataclass(frozen=True, eq=False)
class MomentTable:
    """Finite truncation of an operator-valued state: word -> d x d matrix."""

    algebra: AlgebraDescriptor
    output_dim: int
    letters: dict = field(repr=False)
    entries: dict = field(repr=False)
    max_length: int

    def __post_init__(self):
        entries = {tuple(w): as_matrix(v, "MomentTable entry") for w, v in self.entries.items()}
        for w, v in entries.items():
            if v.shape != (self.output_dim,) * 2:
                raise StructureError(f"MomentTable: entry for {list(w)} is not d x d")
            if len(w) > self.max_length:
                raise StructureError(f"MomentTable: word {list(w)} longer than max_length")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "letters", {k: self.algebra.element(v) for k, v in self.letters.items()})
        if () not in entries:
            raise StructureError("MomentTable: entries(identity word) = I_d")

    @classmethod
    def from_representation(
        cls,
        rep: HerglotzRepresentation,
        letters: Mapping[str, np.ndarray],
        max_length: int,
    ) -> "MomentTable":
        """All words of length <= ``max_length`` over u, u*, the letters and their adjoints."""
        for name in letters:
            if name in (U_TAG, USTAR_TAG) or name.endswith("*"):
                raise StructureError(f"MomentTable: reserved letter name {name!r}")
        tags = [U_TAG, USTAR_TAG]
        for name in letters:
            tags.extend([name, name + "*"])
        entries = {}
        for length in range(max_length + 1):
            for w in itertools.product(tags, repeat=length):
                entries[w] = direct_moment(rep, w, letters)
        return cls(rep.algebra, rep.output_dim, dict(letters), entries, max_length)

    def __getitem__(self, word) -> np.ndarray:
        word = tuple(word)
        try:
            return self.entries[word]
        except KeyError:
            raise InsufficientTruncationError(word) from None

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> dict:
        """Check unitality and involution consistency; return the defects."""
        unital = opnorm(self.entries[()] - np.eye(self.output_dim))
        if unital > tol.bound():
            raise StructureError(f"MomentTable: entries(identity word) = I_d (defect {unital:.3e})")
        involution = 0.0
        for w, v in self.entries.items():
            ws = word_adjoint(w)
            if ws in self.entries:
                involution = max(involution, opnorm(self.entries[ws] - v.conj().T))
        if involution > tol.bound():
            raise StructureError(f"MomentTable: entries(w*) = entries(w)* (defect {involution:.3e})")
        return {"unitality": unital, "involution": involution}


def state_gram(table: MomentTable, words: Sequence[Sequence[str]]) -> np.ndarray:
    """Block Gram matrix ``G_{ij} = phi(w_i^* w_j)``.

    This is the layout that is PSD for operator-valued states: for
    ``phi = V^* beta(.) V`` it equals ``Y^* Y`` with ``Y = [beta(w_1)V, ...]``.
    With scalar blocks it is the transpose of ``[phi(w_j^* w_i)]_{ij}``.
    """
    d = table.output_dim
    n = len(words)
    G = np.zeros((n * d, n * d), dtype=complex)
    for i, wi in enumerate(words):
        for j, wj in enumerate(words):
            G[i * d:(i + 1) * d, j * d:(j + 1) * d] = table[word_adjoint(wi) + tuple(wj)]
    return G
