import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncherglotz.algebra import (
    AlgebraDescriptor,
    FreePolynomial,
    LeveledElement,
    UnitalEmbedding,
    embed,
    random_embedding,
    random_point,
    shrink_into_domain,
)
from ncherglotz.errors import PreconditionError, StructureError
from ncherglotz.matrixcore import opnorm, random_unitary


def test_descriptor_validation():
    with pytest.raises(StructureError):
        AlgebraDescriptor("full", 0)
    with pytest.raises(StructureError):
        AlgebraDescriptor("banded", 2)
    D = AlgebraDescriptor.diagonal(2)
    with pytest.raises(StructureError):
        D.element(np.ones((2, 2)))


def test_leveled_element_rejects_nondiagonal_blocks():
    D = AlgebraDescriptor.diagonal(2)
    M = np.zeros((4, 4))
    M[0, 1] = 1.0
    with pytest.raises(StructureError):
        LeveledElement(D, 2, M)
    with pytest.raises(StructureError):
        LeveledElement(AlgebraDescriptor.full(2), 2, np.zeros((3, 3)))


def test_leveled_element_does_not_freeze_input():
    M = np.zeros((2, 2), dtype=complex)
    LeveledElement(AlgebraDescriptor.full(2), 1, M)
    M[0, 0] = 1.0


def test_embed_zero():
    alpha = UnitalEmbedding.natural(AlgebraDescriptor.full(2), 3)
    X = LeveledElement.zero(AlgebraDescriptor.full(2), 2)
    assert not np.any(embed(alpha, X))


def test_embed_identity_embedding(rng):
    A = AlgebraDescriptor.full(3)
    X = random_point(A, 2, rng)
    np.testing.assert_array_equal(embed(UnitalEmbedding.natural(A, 1), X), X.matrix)


def test_embed_diagonal_unequal_ranks():
    alpha = UnitalEmbedding.from_ranks([1, 2])
    X = LeveledElement(AlgebraDescriptor.diagonal(2), 1, np.diag([2.0, 3.0]))
    np.testing.assert_allclose(embed(alpha, X), np.diag([2.0, 3.0, 3.0]))


def test_embedding_validation_messages():
    A = AlgebraDescriptor.diagonal(2)
    bad = UnitalEmbedding(A, 2, projections=(np.diag([1.0, 0]), np.diag([1.0, 0])))
    with pytest.raises(StructureError, match="P_i P_j = 0"):
        bad.validate()
    F = AlgebraDescriptor.full(2)
    with pytest.raises(StructureError, match="m = k\\*s"):
        UnitalEmbedding(F, 3, W=np.eye(3), multiplicity=1)


@pytest.mark.parametrize("kind,k,s", [("full", 2, 2), ("full", 1, 3), ("diagonal", 3, 2)])
def test_random_embedding_is_homomorphism(kind, k, s, rng):
    A = AlgebraDescriptor(kind, k)
    alpha = random_embedding(A, s, rng)
    alpha.validate()
    a, b = A.random_element(rng), A.random_element(rng)
    np.testing.assert_allclose(alpha.apply(a @ b), alpha.apply(a) @ alpha.apply(b), atol=1e-12)
    np.testing.assert_allclose(alpha.apply(a.conj().T), alpha.apply(a).conj().T, atol=1e-12)
    np.testing.assert_allclose(alpha.apply(np.eye(k)), np.eye(k * s), atol=1e-12)


@pytest.mark.parametrize("kind,k,s", [("full", 2, 2), ("diagonal", 3, 2)])
def test_canonical_form_reproduces_embedding(kind, k, s, rng):
    A = AlgebraDescriptor(kind, k)
    alpha = random_embedding(A, s, rng)
    Q, beta = alpha.canonical()
    X = random_point(A, 2, rng)
    Qn = np.kron(np.eye(2), Q)
    np.testing.assert_allclose(embed(alpha, X), Qn @ embed(beta, X) @ Qn.conj().T, atol=1e-12)


def test_free_polynomial_rejects_constant_term():
    with pytest.raises(StructureError, match="constant term"):
        FreePolynomial(((1.0, (np.eye(1),)),))
    with pytest.raises(StructureError):
        FreePolynomial.power(0)


def test_free_polynomial_square(rng):
    A = AlgebraDescriptor.full(2)
    X = random_point(A, 2, rng)
    np.testing.assert_allclose(FreePolynomial.power(2)(X).matrix, X.matrix @ X.matrix)


def test_free_polynomial_with_coefficient(rng):
    A = AlgebraDescriptor.full(2)
    b = A.random_element(rng)
    p = FreePolynomial(((0.5, ("X", b, "X*")),))
    X = random_point(A, 2, rng)
    expected = 0.5 * X.matrix @ np.kron(np.eye(2), b) @ X.matrix.conj().T
    np.testing.assert_allclose(p(X).matrix, expected)


def test_shrink_into_domain(rng):
    A = AlgebraDescriptor.full(1)
    alpha = UnitalEmbedding.natural(A, 1)
    X = LeveledElement(A, 1, [[3.0]])
    Y = shrink_into_domain(X, FreePolynomial.identity(), alpha)
    assert opnorm(Y.matrix) < 0.95
    with pytest.raises(PreconditionError):
        shrink_into_domain(X, FreePolynomial.identity(), alpha, max_iter=1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["full", "diagonal"]), k=st.integers(1, 3),
       n=st.integers(1, 3))
def test_embed_respects_unitary_similarity(seed, kind, k, n):
    # embed(P X P^*) = (P ⊗ I_m) embed(X) (P ⊗ I_m)^* for scalar unitaries P
    rng = np.random.default_rng(seed)
    A = AlgebraDescriptor(kind, k)
    alpha = random_embedding(A, 2, rng)
    X = random_point(A, n, rng)
    P = random_unitary(n, rng)
    Pm = np.kron(P, np.eye(alpha.ambient_dim))
    lhs = embed(alpha, X.conjugate_by(P))
    np.testing.assert_allclose(lhs, Pm @ embed(alpha, X) @ Pm.conj().T, atol=1e-12)
    # *-homomorphisms are contractive, isometric when faithful
    assert opnorm(embed(alpha, X)) <= X.norm() * (1 + 1e-12)
    faithful = kind == "full" or all(np.trace(P).real > 0.5 for P in alpha.projections)
    if faithful:
        assert opnorm(embed(alpha, X)) == pytest.approx(X.norm(), rel=1e-10)
