"""Mesh machinery: the G-map, conjugate lifts, Pascal arguments, and the
barred-to-scaled dual variable bridge."""

import math

import numpy as np
import pytest

from incdual import (
    Box,
    ContinuousProblem,
    CoordinateSelect,
    GridDualVars,
    HalfSquaredNorm,
    MeshSpec,
    MINUS_INF,
    PascalTransform,
    PLUS_INF,
    Quadratic,
    Sampled,
    SemilinearMap,
    Singleton,
    TabulatedMap,
    build_pda,
    compose_linear,
    conjugate,
    dual_bridge,
    dual_sequences_from_seed,
    g_map,
    lf_numeric,
    lift_matrix,
    m_function,
    m_g_via_formula,
    pascal_args,
    phi_lift_conjugate,
    support_bridge_check,
    terminal_bridge,
)
from incdual.discretization import backward_diff, forward_diff, second_diff

from _helpers import rand_semilinear, rand_tabulated


# ---------------------------------------------------------------------------
# MeshSpec
# ---------------------------------------------------------------------------


def test_mesh_accepts_unit_fractions():
    m = MeshSpec(0.25)
    assert m.K == 4 and m.delta == 0.25
    assert np.allclose(m.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert MeshSpec(0.125).K == 8
    assert MeshSpec(0.5).K == 2


def test_mesh_rejects_non_unit_fractions():
    with pytest.raises(ValueError, match="1/K"):
        MeshSpec(0.3)
    with pytest.raises(ValueError):
        MeshSpec(2.0 / 3.0)
    with pytest.raises(ValueError):
        MeshSpec(1.0)
    with pytest.raises(ValueError):
        MeshSpec(0.0)


# ---------------------------------------------------------------------------
# Pascal transform
# ---------------------------------------------------------------------------


def test_pascal_matrix_entries():
    T = PascalTransform(2, 0.5).T
    ref = np.array([[1, 1, 1], [0, 0.5, 1.0], [0, 0, 0.25]])
    assert np.array_equal(T, ref)


def test_pascal_order_two_anchor_is_exact():
    out = pascal_args(2, 0.5, [[1.0], [1.0], [1.0]])
    # power-of-two step and integer inputs: equality is bitwise
    assert [v[0] for v in out] == [3.0, 1.5, 0.25]


def test_pascal_order_one_matches_lift_arguments():
    rng = np.random.default_rng(0)
    for _ in range(10):
        xs, ys = rng.normal(size=2), rng.normal(size=2)
        d = float(rng.uniform(0.1, 1.0))
        out = pascal_args(1, d, [xs, ys])
        assert np.allclose(out[0], xs + ys)
        assert np.allclose(out[1], d * ys)


def test_pascal_order_three_row():
    out = pascal_args(3, 1.0, [[0.0], [0.0], [0.0], [1.0]])
    assert [v[0] for v in out] == [1.0, 3.0, 3.0, 1.0]


def test_pascal_against_binomial_double_loop():
    rng = np.random.default_rng(1)
    for m in (1, 2, 4):
        d = float(rng.uniform(0.2, 1.0))
        vecs = [rng.normal(size=3) for _ in range(m + 1)]
        out = pascal_args(m, d, vecs)
        for j in range(m + 1):
            ref = sum(math.comb(i, j) * vecs[i] for i in range(j, m + 1)) * d**j
            assert np.allclose(out[j], ref, atol=1e-12)


def test_pascal_validation():
    with pytest.raises(ValueError):
        PascalTransform(0, 0.5)
    with pytest.raises(ValueError):
        PascalTransform(21, 0.5)
    with pytest.raises(ValueError):
        pascal_args(2, 0.5, [[1.0], [1.0]])


# ---------------------------------------------------------------------------
# Difference stencils
# ---------------------------------------------------------------------------


def test_difference_stencils_on_quadratic_sequence():
    d = 0.25
    grid = np.array([[(i * d) ** 2] for i in range(5)])
    # forward difference of t^2 at t: 2t + d
    assert abs(forward_diff(grid, 1, d)[0] - (2 * d + d)) < 1e-12
    assert abs(backward_diff(grid, 2, d)[0] - (2 * 2 * d - d)) < 1e-12
    # second difference of t^2 is exactly 2
    assert abs(second_diff(grid, 1, d)[0] - 2.0) < 1e-12


# ---------------------------------------------------------------------------
# G-map
# ---------------------------------------------------------------------------


def test_g_map_scalar_anchors():
    F = SemilinearMap([[0.0]], [[0.0]], [[1.0]], Box([-1], [1]))
    G = g_map(F, 0.5)
    assert G.A0[0, 0] == -1.0 and G.A1[0, 0] == 2.0 and G.B[0, 0] == 0.25
    F2 = SemilinearMap([[1.0]], [[1.0]], [[1.0]], Box([-1], [1]))
    G2 = g_map(F2, 1.0)
    assert G2.A0[0, 0] == -1.0 and G2.A1[0, 0] == 3.0 and G2.B[0, 0] == 1.0


def test_g_map_tabulated_triple():
    T = TabulatedMap([([1.0], [1.0], [1.0])])
    G = g_map(T, 1.0)
    assert np.allclose(G.xs[0], [1.0])
    assert np.allclose(G.ys[0], [2.0])
    assert np.allclose(G.zs[0], [4.0])


def test_g_map_pointwise_definition():
    # G(x, y) = 2y - x + d^2 F(x, (y - x)/d) as images
    rng = np.random.default_rng(2)
    F = rand_semilinear(rng, n=2, r=1)
    d = 0.25
    G = g_map(F, d)
    for _ in range(15):
        x, y, u = rng.normal(size=2), rng.normal(size=2), rng.uniform(-1, 1, size=1)
        lhs = G.image_point(x, y, u)
        rhs = 2 * y - x + d * d * F.image_point(x, (y - x) / d, u)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_g_map_rejects_nonpositive_delta():
    F = SemilinearMap([[0.0]], [[0.0]], [[1.0]], Box([-1], [1]))
    with pytest.raises(ValueError):
        g_map(F, 0.0)


# ---------------------------------------------------------------------------
# M-function transform
# ---------------------------------------------------------------------------


def test_m_g_formula_tabulated_anchor():
    F = TabulatedMap([([0.0], [0.0], [0.0]), ([0.0], [0.0], [1.0]), ([1.0], [1.0], [1.0])])
    direct = m_function(g_map(F, 1.0), [1.0], [1.0], [1.0])
    via = m_g_via_formula(F, 1.0, [1.0], [1.0], [1.0])
    assert float(direct) == float(via) == -1.0


def test_m_g_formula_zero_direction():
    F = rand_tabulated(np.random.default_rng(3), n=1, count=5)
    for d in (1.0, 0.5, 0.25):
        assert float(m_g_via_formula(F, d, [0.0], [0.0], [0.0])) == 0.0


def test_m_g_formula_matches_direct_on_tabulated():
    rng = np.random.default_rng(4)
    for _ in range(10):
        F = rand_tabulated(rng, n=1, count=6)
        for d in (1.0, 0.5, 0.25):
            xs, ys, zs = rng.normal(size=1), rng.normal(size=1), rng.normal(size=1)
            a = float(m_function(g_map(F, d), xs, ys, zs))
            b = float(m_g_via_formula(F, d, xs, ys, zs))
            assert abs(a - b) < 1e-9


def test_m_g_formula_matches_direct_on_semilinear():
    rng = np.random.default_rng(5)
    for _ in range(10):
        F = rand_semilinear(rng, n=1, r=1)
        for d in (1.0, 0.5):
            G = g_map(F, d)
            zs = rng.normal(size=1)
            xs, ys = G.A0.T @ zs, G.A1.T @ zs  # G-feasible dual point
            a = m_function(G, xs, ys, zs)
            b = m_g_via_formula(F, d, xs, ys, zs)
            assert a.is_finite and b.is_finite
            assert abs(float(a) - float(b)) < 1e-9
            # off the subspace both routes report -inf
            off = m_g_via_formula(F, d, xs + 0.3, ys, zs)
            assert off == MINUS_INF
            assert m_function(G, xs + 0.3, ys, zs) == MINUS_INF


# ---------------------------------------------------------------------------
# Terminal-cost lift
# ---------------------------------------------------------------------------


def test_lift_matrix_action_and_inverse_adjoint():
    d = 0.25
    A = lift_matrix(2, d)
    x, y = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    out = A @ np.concatenate([x, y])
    assert np.allclose(out[:2], x)
    assert np.allclose(out[2:], (y - x) / d)
    # the inverse adjoint has the block form [[E, E], [O, d E]]
    E, O = np.eye(2), np.zeros((2, 2))
    inv_adj = np.block([[E, E], [O, d * E]])
    assert np.allclose(np.linalg.inv(A.T), inv_adj)


def test_phi_lift_conjugate_halfsq_anchors():
    phi = HalfSquaredNorm(2)
    assert abs(float(phi_lift_conjugate(phi, 1.0, [1.0], [1.0])) - 2.5) < 1e-12
    assert abs(float(phi_lift_conjugate(phi, 0.5, [2.0], [0.0])) - 2.0) < 1e-12


def test_phi_lift_conjugate_coordinate_domain():
    phi = CoordinateSelect([1], 2)  # phi(x, y) = y
    # finite iff x* + y* = 0 and 0.5 y* = 1
    assert float(phi_lift_conjugate(phi, 0.5, [-2.0], [2.0])) == 0.0
    assert phi_lift_conjugate(phi, 0.5, [0.0], [2.0]) == PLUS_INF


def test_phi_lift_conjugate_equals_composed_conjugate():
    rng = np.random.default_rng(6)
    for phi in (HalfSquaredNorm(2), Quadratic(np.eye(2) * 2.0, [0.5, -0.5], 0.1)):
        for d in (1.0, 0.5, 0.25):
            lifted = compose_linear(phi, lift_matrix(1, d))
            for _ in range(10):
                xs, ys = rng.normal(size=1), rng.normal(size=1)
                a = float(phi_lift_conjugate(phi, d, xs, ys))
                b = float(conjugate(lifted, np.concatenate([xs, ys])))
                assert abs(a - b) < 1e-9


def test_phi_lift_conjugate_against_sampled_oracle():
    # tabulate the lifted function on a dense grid and conjugate the table
    phi = HalfSquaredNorm(2)
    d = 0.5
    lifted = compose_linear(phi, lift_matrix(1, d))
    xs = np.linspace(-4, 4, 161)
    pts, vals = [], []
    for a in xs:
        for b in xs:
            pts.append([a, b])
            vals.append(float(lifted([a, b])))
    table = Sampled(pts, vals)
    for p in ([2.0, 0.0], [1.0, 1.0], [-1.0, 0.5]):
        approx = float(lf_numeric(table, p))
        exact = float(phi_lift_conjugate(phi, d, [p[0]], [p[1]]))
        assert approx <= exact + 1e-9
        assert exact - approx < 0.1  # one-grid-cell slack


# ---------------------------------------------------------------------------
# Dual variable bridge
# ---------------------------------------------------------------------------


def test_dual_bridge_delta_one_fixed_point():
    mesh = MeshSpec(0.5)  # smallest mesh; use delta scaling checks instead
    rng = np.random.default_rng(7)
    xb = rng.normal(size=(3, 1))
    mb = rng.normal(size=(2, 1))
    gv = GridDualVars.from_barred(xb, mb, mesh)
    sc = dual_bridge(gv)
    assert np.allclose(sc.xstar, 0.5 * xb)
    assert np.allclose(sc.mustar, 0.5 * mb)
    # v*(t) = [mu*(t) - 2 x*(t+delta)] / delta
    assert np.allclose(sc.vstar, (sc.mustar - 2 * sc.xstar[1:]) / 0.5)
    assert not sc.barred


def test_dual_bridge_arithmetic_anchor():
    # mu*(t+d) = 1, x*(t+2d) = 0.25 in scaled units -> v* = (1 - 0.5)/0.5 = 1
    mesh = MeshSpec(0.5)
    xb = np.array([[0.0], [0.0], [0.5]])  # scaled x*(1) = 0.25
    mb = np.array([[0.0], [2.0]])  # scaled mu*(d) = 1
    sc = dual_bridge(GridDualVars.from_barred(xb, mb, mesh))
    assert abs(sc.vstar[1][0] - 1.0) < 1e-12


def test_dual_bridge_rejects_scaled_input():
    mesh = MeshSpec(0.5)
    sc = GridDualVars.from_scaled(np.zeros((3, 1)), np.zeros((2, 1)), mesh)
    with pytest.raises(ValueError):
        dual_bridge(sc)
    assert np.allclose(sc.mustar, 2 * sc.xstar[1:])  # mu* = d v* + 2 x*[1:]


def test_m_term_bridge_identity_on_adjoint_draws():
    rng = np.random.default_rng(8)
    for d in (0.5, 0.25):
        mesh = MeshSpec(d)
        K = mesh.K
        for _ in range(20):
            F = rand_semilinear(rng, n=1, r=1)
            G = g_map(F, d)
            from incdual import DiscreteProblem

            pg = DiscreteProblem(map=G, phi=HalfSquaredNorm(2), Q0=Singleton([0.0]),
                                 Q1=Singleton([0.0]), N=K)
            seed = rng.uniform(-2, 2, size=2)
            xb, mb = dual_sequences_from_seed(pg, seed)
            gv = GridDualVars.from_barred(np.array(xb), np.array(mb), mesh)
            sc = dual_bridge(gv)
            for t in range(K - 1):
                lhs = m_function(G, gv.xstar[t] - gv.mustar[t], gv.mustar[t + 1],
                                 gv.xstar[t + 2])
                args = (
                    second_diff(sc.xstar, t, d) + backward_diff(sc.vstar, t + 1, d),
                    sc.vstar[t + 1],
                    sc.xstar[t + 2],
                )
                rhs = m_function(F, *args)
                assert lhs.is_finite and rhs.is_finite
                assert abs(float(lhs) - d * float(rhs)) < 1e-9


def test_terminal_bridge_identity():
    rng = np.random.default_rng(9)
    phi = HalfSquaredNorm(2)
    for d in (0.5, 0.25):
        mesh = MeshSpec(d)
        for _ in range(15):
            xb = rng.normal(size=(mesh.K + 1, 1))
            mb = rng.normal(size=(mesh.K, 1))
            gv = GridDualVars.from_barred(xb, mb, mesh)
            direct = phi_lift_conjugate(phi, d, mb[-1] - xb[-2], -xb[-1])
            bridged = terminal_bridge(phi, d, gv)
            assert abs(float(direct) - float(bridged)) < 1e-9


def test_terminal_bridge_zero_vars():
    mesh = MeshSpec(0.5)
    gv = GridDualVars.from_barred(np.zeros((3, 1)), np.zeros((2, 1)), mesh)
    assert float(terminal_bridge(HalfSquaredNorm(2), 0.5, gv)) == 0.0


def test_support_bridge_worked_example():
    # Q0 = Q1 = [-1, 1], d = 0.5, xbar*(0) = 2, mubar*(0) = 1, xbar*(d) = 2
    mesh = MeshSpec(0.5)
    Q = Box([-1.0], [1.0])
    xb = np.array([[2.0], [2.0], [0.0]])
    mb = np.array([[1.0], [0.0]])
    gv = GridDualVars.from_barred(xb, mb, mesh)
    lhs, rhs = support_bridge_check(Q, Q, 0.5, gv)
    assert float(lhs) == 4.0
    assert float(rhs) == 4.0


def test_support_bridge_zero_vars():
    mesh = MeshSpec(0.5)
    gv = GridDualVars.from_barred(np.zeros((3, 1)), np.zeros((2, 1)), mesh)
    lhs, rhs = support_bridge_check(Box([-1.0], [1.0]), Box([-1.0], [1.0]), 0.5, gv)
    assert float(lhs) == 0.0 and float(rhs) == 0.0


def test_support_bridge_inequality_random():
    rng = np.random.default_rng(10)
    mesh = MeshSpec(0.25)
    for _ in range(100):
        Q0 = Box(-rng.uniform(0.1, 1, size=1), rng.uniform(0.1, 1, size=1))
        Q1 = Box(-rng.uniform(0.1, 1, size=1), rng.uniform(0.1, 1, size=1))
        xb = rng.normal(size=(mesh.K + 1, 1)) * 2
        mb = rng.normal(size=(mesh.K, 1)) * 2
        lhs, rhs = support_bridge_check(Q0, Q1, 0.25, GridDualVars.from_barred(xb, mb, mesh))
        assert float(lhs) >= float(rhs) - 1e-9


def test_support_bridge_equality_for_singleton_q0():
    # W of a singleton is linear, so subadditivity is tight
    rng = np.random.default_rng(11)
    mesh = MeshSpec(0.25)
    for _ in range(20):
        Q0 = Singleton(rng.normal(size=1))
        Q1 = Box([-1.0], [1.0])
        xb = rng.normal(size=(mesh.K + 1, 1))
        mb = rng.normal(size=(mesh.K, 1))
        lhs, rhs = support_bridge_check(Q0, Q1, 0.25, GridDualVars.from_barred(xb, mb, mesh))
        assert abs(float(lhs) - float(rhs)) < 1e-9


# ---------------------------------------------------------------------------
# Problem assembly
# ---------------------------------------------------------------------------


def _double_integrator():
    return ContinuousProblem(
        map=SemilinearMap([[0.0]], [[0.0]], [[1.0]], Box([-1], [1])),
        phi=CoordinateSelect([0], 2),
        Q0=Singleton([0.0]),
        Q1=Singleton([0.0]),
    )


def test_build_pda_double_integrator():
    p = build_pda(_double_integrator(), MeshSpec(0.25))
    assert p.N == 4
    assert p.map.A0[0, 0] == -1.0
    assert p.map.A1[0, 0] == 2.0
    assert p.map.B[0, 0] == 1.0 / 16.0
    assert isinstance(p.Q1, Singleton) and p.Q1.point[0] == 0.0
    p8 = build_pda(_double_integrator(), MeshSpec(0.125))
    assert p8.map.B[0, 0] == 1.0 / 64.0


def test_build_pda_interval_minkowski():
    cp = ContinuousProblem(
        map=SemilinearMap([[0.0]], [[0.0]], [[1.0]], Box([-1], [1])),
        phi=CoordinateSelect([0], 2),
        Q0=Box([0.0], [1.0]),
        Q1=Box([-1.0], [1.0]),
    )
    p = build_pda(cp, MeshSpec(0.5))
    assert np.allclose(p.Q1.lower, [-0.5])
    assert np.allclose(p.Q1.upper, [1.5])


def test_build_pda_lifted_cost():
    cp = _double_integrator()
    d = 0.25
    p = build_pda(cp, MeshSpec(d))
    rng = np.random.default_rng(12)
    for _ in range(10):
        x, y = rng.normal(size=1), rng.normal(size=1)
        lifted = float(p.phi(np.concatenate([x, y])))
        direct = float(cp.phi(np.concatenate([x, (y - x) / d])))
        assert abs(lifted - direct) < 1e-12


def test_g_map_graph_midpoint_convexity():
    rng = np.random.default_rng(13)
    F = rand_semilinear(rng, n=1, r=1)
    G = g_map(F, 0.5)
    for _ in range(20):
        xa, ya, ua = rng.normal(size=1), rng.normal(size=1), rng.uniform(-1, 1, size=1)
        xb_, yb_, ub = rng.normal(size=1), rng.normal(size=1), rng.uniform(-1, 1, size=1)
        za, zb = G.image_point(xa, ya, ua), G.image_point(xb_, yb_, ub)
        zm = G.image_point((xa + xb_) / 2, (ya + yb_) / 2, (ua + ub) / 2)
        assert np.allclose(zm, (za + zb) / 2, atol=1e-12)
