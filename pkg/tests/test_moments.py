import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncherglotz.algebra import AlgebraDescriptor, UnitalEmbedding
from ncherglotz.errors import InsufficientTruncationError, StructureError
from ncherglotz.freefunc import HerglotzRepresentation, evaluator, random_representation
from ncherglotz.matrixcore import lambda_min, validate_structure
from ncherglotz.moments import (
    MomentTable,
    alternating_word,
    conditional_expectation_check,
    direct_moment,
    extract_moments,
    module_property_residual,
    nilpotent_lift,
    spectral_gap,
    state_gram,
    word_adjoint,
)
from ncherglotz.nonuniq import cyclic_shift

from conftest import make_rep

C = AlgebraDescriptor.full(1)


def scalar_rep(theta):
    return HerglotzRepresentation(UnitalEmbedding.natural(C, 1), [[np.exp(1j * theta)]], [[1.0]])


def test_lift_scalar():
    X = nilpotent_lift([np.eye(1)], C, scale=0.5)
    np.testing.assert_array_equal(X.matrix, [[0, 0.5], [0, 0]])


def test_lift_is_nilpotent(rng):
    A = AlgebraDescriptor.full(2)
    X = nilpotent_lift([A.random_element(rng), A.random_element(rng)], A)
    assert validate_structure(X.matrix, "nilpotent-superdiag", block=2).ok
    assert not np.any(np.linalg.matrix_power(X.matrix, 3))
    assert X.norm() < 1


def test_empty_word_is_identity(rep):
    np.testing.assert_allclose(direct_moment(rep, []), np.eye(rep.output_dim), atol=1e-14)


def test_scalar_u_moment():
    assert direct_moment(scalar_rep(0.7), ["u"])[0, 0] == pytest.approx(np.exp(0.7j))


def test_malformed_word():
    with pytest.raises(StructureError, match="malformed word"):
        direct_moment(scalar_rep(0.1), ["u", "b"])


def test_scalar_extraction():
    out = extract_moments(scalar_rep(0.7), [0.3 * np.eye(1)])
    assert out[(1, 1)][0, 0] == pytest.approx(0.3 * np.exp(0.7j), abs=1e-14)


def test_shift_has_vanishing_moments():
    N = 6
    rep = HerglotzRepresentation(UnitalEmbedding.natural(C, N), cyclic_shift(N), np.eye(N)[:, :1])
    out = extract_moments(rep, [0.9 * np.eye(1)] * 4)
    for val in out.values():
        assert abs(val[0, 0]) <= 1e-14


def test_extraction_matches_direct_length_two(rep, rng):
    b = [rep.algebra.random_element(rng) for _ in range(2)]
    out = extract_moments(rep, b)
    np.testing.assert_allclose(out[(1, 2)], direct_moment(rep, alternating_word(b)), atol=1e-9)


def test_extraction_all_subwords(rep, rng):
    b = [rep.algebra.random_element(rng) for _ in range(4)]
    out = extract_moments(rep, b)
    assert set(out) == {(i, j) for i in range(1, 5) for j in range(i, 5)}
    for (i, j), val in out.items():
        np.testing.assert_allclose(val, direct_moment(rep, alternating_word(b[i - 1:j])), atol=1e-9)


def test_extraction_is_multilinear(rep, rng):
    b1, b2 = rep.algebra.random_element(rng), rep.algebra.random_element(rng)
    c = 0.3 - 0.8j
    lhs = extract_moments(rep, [c * b1, b2])[(1, 2)]
    rhs = extract_moments(rep, [b1, b2])[(1, 2)]
    np.testing.assert_allclose(lhs, c * rhs, atol=1e-10)


def test_extraction_from_bare_evaluator(rng):
    rep = make_rep("full", 2, 2, 2, 7)
    b = [rep.algebra.random_element(rng) for _ in range(3)]
    a = extract_moments(evaluator(rep), b, algebra=rep.algebra)
    np.testing.assert_allclose(a[(1, 3)], extract_moments(rep, b)[(1, 3)], atol=1e-14)
    with pytest.raises(StructureError):
        extract_moments(evaluator(rep), b)


@pytest.mark.parametrize("kind,k,s,d", [("full", 1, 2, 1), ("full", 2, 2, 2), ("diagonal", 3, 1, 3)])
def test_module_residual_scalar_letter(kind, k, s, d, rng):
    rep = make_rep(kind, k, s, d, 17)
    b_list = [rep.algebra.random_element(rng) for _ in range(2)]
    assert module_property_residual(rep, b_list, 0.6 * np.eye(k)) <= 1e-10


def test_module_residual_detects_generic_state(rng):
    rep = make_rep("full", 2, 2, 2, 11)
    b_list = [rep.algebra.random_element(rng) for _ in range(2)]
    assert module_property_residual(rep, b_list, rep.algebra.random_element(rng, norm=0.5)) > 1e-3


def test_module_residual_requires_contraction(rng):
    rep = make_rep("full", 2, 2, 2, 11)
    with pytest.raises(StructureError):
        module_property_residual(rep, [np.eye(2)], 2 * np.eye(2))


def test_scalar_algebra_state_is_conditional_expectation(rng):
    rep = make_rep("full", 1, 3, 1, 5)
    report = conditional_expectation_check(rep, 20, rng)
    assert report.is_conditional_expectation()
    assert report.spectral_gap > 0


def test_spectral_gap():
    assert spectral_gap(np.diag([1, 1j, -1, -1j])) == pytest.approx(np.pi / 2)
    assert spectral_gap(np.eye(2)) == pytest.approx(2 * np.pi)


def test_table_lookup_and_validation(rng):
    rep = make_rep("full", 2, 2, 2, 3)
    letters = {"a": rep.algebra.random_element(rng)}
    table = MomentTable.from_representation(rep, letters, 3)
    assert len(table.entries) == sum(4 ** j for j in range(4))
    np.testing.assert_allclose(table[("u", "a")], direct_moment(rep, ["u", letters["a"]]))
    table.validate()
    with pytest.raises(InsufficientTruncationError, match="insufficient truncation") as info:
        table[("u",) * 4]
    assert info.value.word == ("u",) * 4


def test_table_rejects_reserved_names(rng):
    with pytest.raises(StructureError):
        MomentTable.from_representation(make_rep("full", 1, 2, 1, 3), {"u*": np.eye(1)}, 2)


def test_table_requires_unital_entry():
    with pytest.raises(StructureError, match="identity word"):
        MomentTable(C, 1, {}, {("u",): np.eye(1)}, 2)


def test_gram_trivial_words(rng):
    rep = make_rep("full", 2, 2, 2, 3)
    table = MomentTable.from_representation(rep, {}, 2)
    np.testing.assert_allclose(state_gram(table, [()]), np.eye(2), atol=1e-14)
    G = state_gram(table, [(), ("u",)])
    phi_u = direct_moment(rep, ["u"])
    np.testing.assert_allclose(G[:2, 2:], phi_u, atol=1e-14)
    np.testing.assert_allclose(G[2:, :2], phi_u.conj().T, atol=1e-14)
    assert lambda_min(G) >= -1e-12


def test_gram_missing_word_names_it():
    table = MomentTable.from_representation(scalar_rep(0.2), {}, 1)
    with pytest.raises(InsufficientTruncationError, match="u"):
        state_gram(table, [(), ("u",)])


def test_word_adjoint():
    assert word_adjoint(("u", "a", "u*", "b*")) == ("b", "u", "a*", "u*")


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), kind=st.sampled_from(["full", "diagonal"]), data=st.data())
def test_rep_induced_gram_is_psd(seed, kind, data):
    rng = np.random.default_rng(seed)
    A = AlgebraDescriptor(kind, 2)
    d = data.draw(st.sampled_from([1, 2]))
    rep = random_representation(A, 2, d, rng)
    table = MomentTable.from_representation(rep, {"a": A.random_element(rng)}, 4)
    pool = [w for w in table.entries if len(w) <= 2]
    size = data.draw(st.integers(1, 8))
    idx = rng.choice(len(pool), size=size, replace=False)
    G = state_gram(table, [pool[i] for i in idx])
    assert lambda_min(G) >= -1e-9


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_extraction_oracle_property(seed, n):
    rng = np.random.default_rng(seed)
    kind = ["full", "diagonal"][seed % 2]
    rep = random_representation(AlgebraDescriptor(kind, 2), 2, 2, rng)
    b = [rep.algebra.random_element(rng, norm=rng.uniform(0.1, 2.0)) for _ in range(n)]
    out = extract_moments(rep, b)
    for i, j in itertools.combinations_with_replacement(range(1, n + 1), 2):
        np.testing.assert_allclose(out[(i, j)], direct_moment(rep, alternating_word(b[i - 1:j])), atol=1e-9)
