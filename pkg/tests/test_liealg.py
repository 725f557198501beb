"""Wedge-basis algebra, inertia operators, frames, and subspace helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import chaplygin_params, random_spd_operator, rng_for
from nonholo.errors import (
    DefinitenessError,
    DimensionError,
    ParameterError,
    SingularityError,
)
from nonholo.liealg import (
    Frame,
    InertiaOperator,
    StiefelPoint,
    ad_matrix,
    commutator,
    complete_columns,
    frame_gram,
    from_wedge,
    hat,
    inner_product,
    isotropy_frame,
    orthonormal_complement,
    orthonormalize_rows,
    projector_matrix,
    random_skew,
    random_stiefel,
    restricted_det,
    subspace_projectors,
    to_wedge,
    unhat,
    wedge_basis,
    wedge_dim,
    wedge_index_pairs,
)

seeds = st.integers(min_value=0, max_value=10**6)
dims = st.integers(min_value=3, max_value=5)


# ---------------------------------------------------------------------------
# wedge coordinates and the invariant inner product


def test_wedge_dim_and_pairs():
    assert [wedge_dim(n) for n in (2, 3, 4, 5)] == [1, 3, 6, 10]
    assert wedge_index_pairs(3) == [(0, 1), (0, 2), (1, 2)]


def test_wedge_basis_orthonormal():
    for n in (3, 4, 5):
        elems = np.array(wedge_basis(n))
        g = inner_product(elems[:, None], elems[None, :])
        assert np.allclose(g, np.eye(wedge_dim(n)), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(dims, seeds)
def test_wedge_round_trip(n, seed):
    x = random_skew(n, rng_for(seed))
    assert np.allclose(from_wedge(to_wedge(x), n), x, atol=1e-14)
    c = rng_for(seed + 1).standard_normal(wedge_dim(n))
    y = from_wedge(c, n)
    assert np.allclose(y, -y.T, atol=1e-15)
    assert np.allclose(to_wedge(y), c, atol=1e-15)


def test_inner_product_matches_trace_form():
    # <E1^E2, E1^E2> = 1 on matrix units
    e12 = wedge_basis(4)[0]
    assert inner_product(e12, e12) == pytest.approx(1.0, abs=1e-15)
    rng = rng_for(3)
    for n in (3, 4, 5):
        x, y = random_skew(n, rng), random_skew(n, rng)
        assert inner_product(x, y) == pytest.approx(-0.5 * np.trace(x @ y), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(dims, seeds)
def test_commutator_is_skew_and_ad_invariant(n, seed):
    rng = rng_for(seed)
    x, y, z = (random_skew(n, rng) for _ in range(3))
    b = commutator(x, y)
    assert np.allclose(b, -b.T, atol=1e-12)
    assert np.allclose(b, -commutator(y, x), atol=1e-13)
    jac = commutator(x, commutator(y, z)) + commutator(y, commutator(z, x)) + commutator(
        z, commutator(x, y)
    )
    assert np.max(np.abs(jac)) < 1e-12
    # <[x,y],z> = <x,[y,z]>
    assert inner_product(commutator(x, y), z) == pytest.approx(
        inner_product(x, commutator(y, z)), abs=1e-12
    )


def test_commutator_matrix_unit_example():
    # [E1^E2, E2^E3] = E1^E3
    b = wedge_basis(4)
    assert np.allclose(commutator(b[0], b[3]), b[1], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(dims, seeds)
def test_ad_matrix_represents_bracket_and_is_skew(n, seed):
    rng = rng_for(seed)
    x, y = random_skew(n, rng), random_skew(n, rng)
    A = ad_matrix(x)
    assert np.allclose(A @ to_wedge(y), to_wedge(commutator(x, y)), atol=1e-12)
    assert np.allclose(A, -A.T, atol=1e-12)


# ---------------------------------------------------------------------------
# the so(3) <-> R^3 isometry


def test_hat_oracle_matrix():
    v = np.array([1.0, 2.0, 3.0])
    expect = np.array([[0.0, -3.0, 2.0], [3.0, 0.0, -1.0], [-2.0, 1.0, 0.0]])
    assert np.array_equal(hat(v), expect)
    assert np.array_equal(unhat(hat(v)), v)


def test_hat_isometry_and_cross_product():
    u = np.array([1.0, 2.0, 3.0])
    v = np.array([4.0, 5.0, 6.0])
    assert inner_product(hat(u), hat(v)) == pytest.approx(32.0, abs=1e-14)
    assert np.allclose(commutator(hat(u), hat(v)), hat(np.cross(u, v)), atol=1e-13)
    assert np.allclose(hat(np.array([1.0, 0, 0])) @ np.array([0.0, 1, 0]), [0, 0, 1])
    # hat(e1) x e2 = e1 x e2 and [hat u, hat v] = hat(u x v) for the axes
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert np.allclose(commutator(hat(e1), hat(e2)), hat(np.array([0.0, 0, 1])))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_hat_wedge_coordinates(seed):
    v = rng_for(seed).standard_normal(3)
    assert np.allclose(to_wedge(hat(v)), [-v[2], v[1], -v[0]], atol=1e-15)


# ---------------------------------------------------------------------------
# inertia operators


def test_wedge_products_operator_diagonal():
    a = np.array([0.7, 1.2, 1.9, 2.4])
    op = InertiaOperator.wedge_products(a)
    pairs = wedge_index_pairs(4)
    assert np.allclose(op.diag, [a[i] * a[j] for i, j in pairs], atol=1e-15)
    for idx, elem in enumerate(wedge_basis(4)):
        assert np.allclose(op.apply(elem), op.diag[idx] * elem, atol=1e-15)


def test_chaplygin_operator_diagonal_and_validation():
    rng = rng_for(11)
    a, D = chaplygin_params(4, rng)
    op = InertiaOperator.wedge_products_chaplygin(a, D)
    pairs = wedge_index_pairs(4)
    expect = [D * a[i] * a[j] / (D - a[i] * a[j]) for i, j in pairs]
    assert np.allclose(op.diag, expect, atol=1e-13)
    assert np.all(np.asarray(op.diag) > 0)
    with pytest.raises(ParameterError):
        InertiaOperator.wedge_products_chaplygin([1.0, 2.0, 3.0], 2.0)


def test_shifted_operator():
    base = InertiaOperator.wedge_products([0.8, 1.1, 1.7])
    op = InertiaOperator.shifted(base, 2.5)
    assert np.allclose(op.matrix, base.matrix + 2.5 * np.eye(3), atol=1e-15)


def test_so3_vector_operator():
    principal = np.array([1.5, 2.0, 3.5])
    op = InertiaOperator.so3_vector(principal)
    # wedge diagonal carries the principal values in reversed order
    assert np.allclose(op.diag, principal[::-1], atol=1e-15)
    rng = rng_for(5)
    for _ in range(5):
        v = rng.standard_normal(3)
        assert np.allclose(op.apply(hat(v)), hat(principal * v), atol=1e-13)


def test_general_operator_validation_and_identity():
    assert np.array_equal(InertiaOperator.identity(4).matrix, np.eye(6))
    with pytest.raises(ParameterError):
        InertiaOperator.general(3, np.triu(np.ones((3, 3))))
    with pytest.raises(DefinitenessError):
        InertiaOperator.general(3, -np.eye(3))
    with pytest.raises(DefinitenessError):
        InertiaOperator.wedge_diagonal(3, [1.0, -1.0, 2.0])


@settings(max_examples=20, deadline=None)
@given(dims, seeds)
def test_operator_apply_solve_round_trip_and_det(n, seed):
    rng = rng_for(seed)
    op = random_spd_operator(n, rng)
    x = random_skew(n, rng)
    assert np.allclose(op.solve(op.apply(x)), x, atol=1e-10)
    assert op.det() == pytest.approx(np.linalg.det(op.matrix), rel=1e-9)
    assert op.logdet() == pytest.approx(np.log(op.det()), rel=1e-12)


def test_operator_is_self_adjoint_for_inner_product():
    rng = rng_for(17)
    op = random_spd_operator(4, rng)
    x, y = random_skew(4, rng), random_skew(4, rng)
    assert inner_product(op.apply(x), y) == pytest.approx(
        inner_product(x, op.apply(y)), rel=1e-11
    )


# ---------------------------------------------------------------------------
# frames, projectors, isotropy


def test_frame_properties_and_projector():
    rng = rng_for(23)
    ec = orthonormalize_rows(rng.standard_normal((2, 6)))
    fr = Frame(from_wedge(ec, 4), orthonormal=True)
    assert fr.k == 2 and fr.n == 4
    assert np.allclose(fr.gram(), np.eye(2), atol=1e-12)
    P = projector_matrix(fr)
    assert np.allclose(P, P.T, atol=1e-13)
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.trace(P) == pytest.approx(2.0, abs=1e-10)
    pr_span, pr_comp = subspace_projectors(fr)
    x = random_skew(4, rng)
    assert np.allclose(to_wedge(pr_span(x)), P @ to_wedge(x), atol=1e-12)
    assert np.allclose(pr_span(x) + pr_comp(x), x, atol=1e-12)


def test_frame_rejects_dependent_or_falsely_orthonormal():
    b = wedge_basis(3)
    with pytest.raises(SingularityError):
        Frame(np.array([b[0], b[0] + 1e-15 * b[1]]))
    with pytest.raises(ParameterError):
        Frame(np.array([2.0 * b[0]]), orthonormal=True)


def test_orthonormal_complement():
    rng = rng_for(29)
    ec = orthonormalize_rows(rng.standard_normal((2, 6)))
    fr = Frame(from_wedge(ec, 4), orthonormal=True)
    comp = orthonormal_complement(fr)
    assert comp.k == 4
    assert np.allclose(comp.coords @ ec.T, 0.0, atol=1e-12)
    assert np.allclose(comp.gram(), np.eye(4), atol=1e-12)


def test_isotropy_frame_so4_decomposable():
    # centralizer of E1^E2 in so(4) is span{E1^E2, E3^E4}
    b = wedge_basis(4)
    fr = isotropy_frame(b[0])
    assert fr.k == 2
    P = projector_matrix(fr)
    expect = projector_matrix(Frame(np.array([b[0], b[5]]), orthonormal=True))
    assert np.allclose(P, expect, atol=1e-10)
    for elem in fr.elems:
        assert np.max(np.abs(commutator(b[0], elem))) < 1e-10


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_isotropy_frame_so3_is_the_axis(seed):
    gamma = random_skew(3, rng_for(seed))
    fr = isotropy_frame(gamma)
    assert fr.k == 1
    c = to_wedge(gamma)
    c = c / np.linalg.norm(c)
    assert abs(abs(float(fr.coords[0] @ c)) - 1.0) < 1e-10


def test_stiefel_point_and_completion():
    rng = rng_for(31)
    U = random_stiefel(5, 2, rng)
    pt = StiefelPoint(U)
    assert (pt.n, pt.r) == (5, 2)
    assert np.allclose(U.T @ U, np.eye(2), atol=1e-12)
    V = complete_columns(U)
    assert np.allclose(V[:, :2], U, atol=1e-13)
    assert np.allclose(V.T @ V, np.eye(5), atol=1e-12)
    with pytest.raises(ParameterError):
        StiefelPoint(2.0 * U)
    with pytest.raises(DimensionError):
        random_stiefel(3, 4, rng)


# ---------------------------------------------------------------------------
# restricted determinants and the determinant factorization


def test_frame_gram_and_restricted_det_oracle():
    rng = rng_for(37)
    op = random_spd_operator(4, rng)
    ec = orthonormalize_rows(rng.standard_normal((3, 6)))
    fr = Frame(from_wedge(ec, 4), orthonormal=True)
    A = frame_gram(fr, op, mode="inverse_inertia")
    assert np.allclose(A, ec @ np.linalg.inv(op.matrix) @ ec.T, atol=1e-11)
    G = frame_gram(fr, op, mode="inertia")
    assert np.allclose(G, ec @ op.matrix @ ec.T, atol=1e-11)
    assert restricted_det(op, fr, mode="inertia") == pytest.approx(
        np.linalg.det(G), rel=1e-10
    )
    with pytest.raises(ParameterError):
        frame_gram(fr, op, mode="bogus")


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=3, max_value=6), seeds)
def test_det_factorization(n, seed):
    # det(I) * det<e_i, I^{-1} e_j> = det(I restricted to the complement)
    rng = rng_for(seed)
    op = random_spd_operator(n, rng)
    N = wedge_dim(n)
    k = int(rng.integers(1, N))
    ec = orthonormalize_rows(rng.standard_normal((k, N)))
    fr = Frame(from_wedge(ec, n), orthonormal=True)
    lhs = op.det() * np.linalg.det(frame_gram(fr, op, mode="inverse_inertia"))
    rhs = restricted_det(op, orthonormal_complement(fr), mode="inertia")
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
