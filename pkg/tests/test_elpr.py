"""Symmetric-operator flow on so(n) and its Stiefel-carried specialization."""

import numpy as np
import pytest

from conftest import chaplygin_params, random_spd_operator, rng_for
from nonholo import ball3d
from nonholo.elpr import (
    ELPRState,
    LPRChart,
    LPRStiefelChart,
    LPRStiefelState,
    density_elpr,
    density_lpr_stiefel,
    energy,
    k_from_omega,
    log_density_elpr,
    log_density_lpr_stiefel,
    omega_from_k,
    omega_from_k_stiefel,
    pi_variants,
    random_elpr_state,
    random_lpr_stiefel_state,
    stiefel_total_inertia,
    vf_elpr,
    vf_lpr_stiefel,
)
from nonholo.errors import DefinitenessError, ParameterError
from nonholo.liealg import (
    Frame,
    InertiaOperator,
    ad_matrix,
    commutator,
    from_wedge,
    hat,
    inner_product,
    isotropy_frame,
    projector_matrix,
    random_skew,
    random_stiefel,
    to_wedge,
    unhat,
    wedge_basis,
    wedge_dim,
    wedge_index_pairs,
)
from nonholo.numerics import (
    IntegratorConfig,
    integrate,
    liouville_residual_ambient,
    tangent_volume_transport,
)
from nonholo.veselova import gamma_projector, pluecker, pluecker_indices


# ---------------------------------------------------------------------------
# the symmetric-operator flow


def test_momentum_map_round_trip():
    rng = rng_for(1)
    for n in (3, 4):
        op = random_spd_operator(n, rng)
        st = random_elpr_state(n, rng)
        w = omega_from_k(st, op)
        assert np.max(np.abs(k_from_omega(w, st.Pi, op) - st.k_bold)) < 1e-11


def test_field_shape_and_pi_symmetry():
    st = random_elpr_state(4, rng_for(2))
    op = random_spd_operator(4, rng_for(3))
    dk, dPi = vf_elpr(st, op, 0.5)
    assert np.max(np.abs(dPi - dPi.T)) == 0.0
    w = omega_from_k(st, op)
    assert np.max(np.abs(dk - commutator(st.k_bold, w))) < 1e-12


def test_eps_one_matches_unmodified_flow_exactly():
    st = random_elpr_state(4, rng_for(4))
    op = random_spd_operator(4, rng_for(5))
    dk, dPi = vf_elpr(st, op, 1.0)
    w = omega_from_k(st, op)
    A = ad_matrix(w)
    assert np.array_equal(dPi, st.Pi @ A - A @ st.Pi)
    assert np.array_equal(dk, commutator(st.k_bold, w))


def test_pi_zero_reduces_to_free_rotation():
    rng = rng_for(6)
    op = random_spd_operator(3, rng)
    w = random_skew(3, rng)
    st = ELPRState(op.apply(w), np.zeros((3, 3)))
    dk, dPi = vf_elpr(st, op, 2.0)
    assert np.max(np.abs(dk - commutator(op.apply(w), w))) < 1e-12
    assert np.max(np.abs(dPi)) == 0.0
    assert density_elpr(st, op) == pytest.approx(np.sqrt(op.det()), rel=1e-12)


def test_constant_multiple_of_identity_is_frozen():
    rng = rng_for(7)
    op = random_spd_operator(4, rng)
    D = 1.7
    st = ELPRState(random_skew(4, rng), D * np.eye(6))
    _, dPi = vf_elpr(st, op, 0.5)
    assert np.max(np.abs(dPi)) < 1e-14


def test_projector_density_closed_form():
    # Pi = D P with P a rank-q orthogonal projector and identity inertia:
    # det(I + Pi) = (1 + D)^q
    rng = rng_for(8)
    op = InertiaOperator.identity(4)
    c = np.linalg.qr(rng.standard_normal((6, 2)))[0]
    P = c @ c.T
    D = 2.5
    st = ELPRState(random_skew(4, rng), D * P)
    assert log_density_elpr(st, op) == pytest.approx(np.log(1.0 + D), rel=1e-12)


def test_indefinite_total_inertia_is_rejected():
    st = ELPRState(random_skew(3, rng_for(9)), -2.0 * np.eye(3))
    op = InertiaOperator.identity(3)
    with pytest.raises(DefinitenessError):
        omega_from_k(st, op)
    with pytest.raises(DefinitenessError):
        log_density_elpr(st, op)


def test_energy_and_spectrum_conserved_along_flow():
    op = random_spd_operator(4, rng_for(10))
    st = random_elpr_state(4, rng_for(11))
    cfg = IntegratorConfig(t_end=10.0, samples=21)
    for eps in (-1.0, 0.5, 1.0, 2.0):
        chart = LPRChart(op, eps)
        traj = integrate(chart.field, chart.flatten(st), cfg)
        H = np.array([energy(chart.unflatten(c), op) for c in traj.states])
        eigs = np.array(
            [np.linalg.eigvalsh(chart.unflatten(c).Pi) for c in traj.states]
        )
        assert np.max(np.abs(H - H[0])) < 1e-8 * max(1.0, abs(H[0]))
        assert np.max(np.abs(eigs - eigs[0])) < 1e-8


def test_ambient_liouville_residual_vanishes():
    for n in (3, 4):
        op = random_spd_operator(n, rng_for(20 + n))
        st = random_elpr_state(n, rng_for(30 + n))
        for eps in (-1.0, 0.5, 1.0, 2.0):
            chart = LPRChart(op, eps)
            res = liouville_residual_ambient(chart.field, chart.log_density, chart.flatten(st))
            assert abs(res) < 1e-7


# ---------------------------------------------------------------------------
# the two sphere-carried operator constructions


def test_pi_variants_coincide_on_so3():
    rng = rng_for(40)
    for _ in range(5):
        g = random_skew(3, rng)
        g = g / np.linalg.norm(to_wedge(g))
        D = float(rng.uniform(0.5, 3.0))
        P1 = pi_variants(g, D, kind="d_proj")
        P2 = pi_variants(g, D, kind="double_bracket")
        assert np.max(np.abs(P1 - P2)) < 1e-12


def test_pi_variants_coincide_on_decomposable_so4():
    b = wedge_basis(4)
    D = 1.3
    assert np.max(np.abs(
        pi_variants(b[0], D, "d_proj") - pi_variants(b[0], D, "double_bracket")
    )) < 1e-12
    # a generic decomposable element keeps the agreement
    rng = rng_for(41)
    u, v = np.linalg.qr(rng.standard_normal((4, 2)))[0].T
    g = np.outer(u, v) - np.outer(v, u)
    assert np.max(np.abs(
        pi_variants(g, D, "d_proj") - pi_variants(g, D, "double_bracket")
    )) < 1e-12


def test_pi_variants_differ_on_non_decomposable_so4():
    b = wedge_basis(4)
    g = (b[0] + b[5]) / np.sqrt(2.0)  # E1^E2 + E3^E4, not a single wedge
    D = 1.0
    diff = pi_variants(g, D, "d_proj") - pi_variants(g, D, "double_bracket")
    assert np.max(np.abs(diff)) > 0.1


def test_pi_variants_d_proj_eigenstructure():
    g = wedge_basis(4)[0]
    D = 2.0
    P = pi_variants(g, D, "d_proj")
    iso = isotropy_frame(g)
    ev = np.sort(np.linalg.eigvalsh(P))
    expect = np.sort(np.concatenate([np.zeros(iso.k), D * np.ones(6 - iso.k)]))
    assert np.allclose(ev, expect, atol=1e-12)
    assert np.allclose(P, D * (np.eye(6) - projector_matrix(iso)), atol=1e-13)


def test_pi_variants_double_bracket_formula():
    rng = rng_for(42)
    g = random_skew(4, rng)
    g = g / np.linalg.norm(to_wedge(g))
    D = 1.4
    P = pi_variants(g, D, "double_bracket")
    w = random_skew(4, rng)
    expect = D * commutator(commutator(g, w), g)
    assert np.max(np.abs(from_wedge(P @ to_wedge(w), 4) - expect)) < 1e-12
    with pytest.raises(ParameterError):
        pi_variants(g, D, kind="bogus")


def test_pi_variants_on_stiefel_frame():
    rng = rng_for(43)
    U = random_stiefel(5, 2, rng)
    D = 0.9
    P = pi_variants(U, D, "d_proj")
    _, pr = gamma_projector(U)
    w = random_skew(5, rng)
    assert np.max(np.abs(from_wedge(P @ to_wedge(w), 5) - D * pr(w))) < 1e-12


# ---------------------------------------------------------------------------
# the Stiefel-carried flow and its density


def test_stiefel_total_inertia_identity():
    # E + D I^{-1} with the pair-ratio inertia acts by D/(a_i a_j)
    rng = rng_for(50)
    a, D = chaplygin_params(4, rng)
    tot = stiefel_total_inertia(a, D)
    op = InertiaOperator.wedge_products_chaplygin(a, D)
    pairs = wedge_index_pairs(4)
    expect = np.array([D / (a[i] * a[j]) for i, j in pairs])
    assert np.max(np.abs(tot.diag - expect)) < 1e-12
    assert np.max(np.abs(tot.matrix - (np.eye(6) + D * np.linalg.inv(op.matrix)))) < 1e-11


def test_stiefel_momentum_identity():
    # pr_D(I_tot I w) + pr_H(I w) equals k = I w + D pr_D(w)
    rng = rng_for(51)
    for n, r in ((4, 1), (4, 2), (5, 2)):
        a, D = chaplygin_params(n, rng)
        op = InertiaOperator.wedge_products_chaplygin(a, D)
        tot = stiefel_total_inertia(a, D)
        U = random_stiefel(n, r, rng)
        _, pr = gamma_projector(U)
        w = random_skew(n, rng)
        v = op.apply(w)
        lhs = pr(tot.apply(v)) + (v - pr(v))
        rhs = v + D * pr(w)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_stiefel_determinant_factorization():
    # det(I + D pr_D) = det(I_tot restricted to D_r) * det(I)
    rng = rng_for(52)
    for n, r in ((4, 1), (4, 2), (5, 2)):
        a, D = chaplygin_params(n, rng)
        op = InertiaOperator.wedge_products_chaplygin(a, D)
        tot = stiefel_total_inertia(a, D)
        U = random_stiefel(n, r, rng)
        N = wedge_dim(n)
        P = pi_variants(U, D, "d_proj")
        lhs = np.linalg.det(op.matrix + P)
        # orthonormal basis of D_r from the projector's range
        Pm = P / D
        vals, vecs = np.linalg.eigh(Pm)
        span = vecs[:, vals > 0.5].T
        fr = Frame(from_wedge(span, n), orthonormal=True)
        from nonholo.liealg import restricted_det

        rhs = restricted_det(tot, fr, mode="inertia") * op.det()
        assert abs(lhs - rhs) < 1e-10 * abs(rhs)


def test_stiefel_field_and_round_trip():
    rng = rng_for(53)
    n, r = 4, 2
    a, D = chaplygin_params(n, rng)
    op = InertiaOperator.wedge_products_chaplygin(a, D)
    st = random_lpr_stiefel_state(n, r, rng)
    w = omega_from_k_stiefel(st, a, D)
    _, pr = gamma_projector(st.U)
    assert np.max(np.abs(op.apply(w) + D * pr(w) - st.k_bold)) < 1e-11
    dk, dU = vf_lpr_stiefel(st, a, D, 0.5)
    assert np.max(np.abs(dk - commutator(st.k_bold, w))) < 1e-12
    assert np.max(np.abs(dU + 0.5 * (w @ st.U.U))) < 1e-12


def test_stiefel_density_manual_formula():
    rng = rng_for(54)
    n, r = 5, 2
    a, D = chaplygin_params(n, rng)
    st = random_lpr_stiefel_state(n, r, rng)
    P = pluecker(st.U)
    base = 0.0
    for idx, I in enumerate(pluecker_indices(n, r)):
        base += P[idx] ** 2 / np.prod(a[list(I)])
    expect = -0.5 * (n - r - 1) * np.log(base)
    assert log_density_lpr_stiefel(st, a, D) == pytest.approx(expect, abs=1e-13)
    assert density_lpr_stiefel(st, a, D) == pytest.approx(np.exp(expect), rel=1e-13)


def test_stiefel_transport_certifies_density():
    rng = rng_for(55)
    n, r = 4, 2
    a, D = chaplygin_params(n, rng)
    chart = LPRStiefelChart(a, D, r, eps=0.5)
    st = random_lpr_stiefel_state(n, r, rng)
    res = tangent_volume_transport(
        chart.field,
        chart.log_density,
        chart.flatten(st),
        chart.constraints,
        IntegratorConfig(t_end=5.0),
    )
    assert res.max_abs_residual < 1e-8


def test_stiefel_energy_conserved():
    rng = rng_for(56)
    n, r = 4, 2
    a, D = chaplygin_params(n, rng)
    st = random_lpr_stiefel_state(n, r, rng)
    for eps in (-1.0, 0.5, 2.0):
        chart = LPRStiefelChart(a, D, r, eps=eps)
        traj = integrate(chart.field, chart.flatten(st), IntegratorConfig(t_end=5.0, samples=11))
        H = []
        for c in traj.states:
            s = chart.unflatten(c)
            wt = omega_from_k_stiefel(s, a, D)
            H.append(0.5 * float(inner_product(s.k_bold, wt)))
        assert np.max(np.abs(np.array(H) - H[0])) < 1e-9 * max(1.0, abs(H[0]))


def test_chaplygin_ball_is_the_so3_case():
    ball = ball3d.random_ball_state(rng_for(57), inertia=[1.0, 2.0, 3.0], D=1.0, eps=0.5)
    lifted, op = ball3d.lift_to_so3(ball, "elpr")
    dk, dPi = vf_elpr(lifted, op, ball.eps)
    dk_ball, dg_ball = ball3d.vf_chaplygin(ball)
    assert np.max(np.abs(unhat(dk) - dk_ball)) < 1e-12
    # density: sqrt(det(I + D)(1 - D (g, (I+D)^{-1} g))) in closed form
    expect = ball3d.densities_3d(ball, "chaplygin")
    assert density_elpr(lifted, op) == pytest.approx(expect, rel=1e-12)
