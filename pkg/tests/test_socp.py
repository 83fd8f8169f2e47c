"""Conic programs: lifting identities, solver correctness and certificates."""

import numpy as np
import pytest

from risbeam.rng import stream
from risbeam.socp import (
    NONNEG,
    RSOC,
    SOC,
    ConicProgram,
    inner_product_rows,
    lift_complex,
    lift_hermitian_quadratic,
    re_inner_row,
    solve,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / 2


# ---------------------------------------------------------------------------
# lifting
# ---------------------------------------------------------------------------


def test_lift_identity_matrix():
    np.testing.assert_array_equal(lift_hermitian_quadratic(np.eye(4)), np.eye(8))


def test_lift_simple_inner_product():
    z = np.array([1j])
    t = np.array([1.0 + 0j])
    assert re_inner_row(t) @ lift_complex(z) == pytest.approx(0.0)
    assert np.real(np.vdot(t, z)) == pytest.approx(0.0)


def test_lift_quadratic_form_equality():
    rng = stream(21, "lift")
    for _ in range(100):
        n = rng.integers(1, 7)
        q = random_hermitian(rng, n)
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        t = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        zh = lift_complex(z)
        qh = lift_hermitian_quadratic(q)
        exact = float(np.real(np.conj(z) @ q @ z))
        assert zh @ qh @ zh == pytest.approx(exact, rel=1e-12, abs=1e-12)
        assert re_inner_row(t) @ zh == pytest.approx(float(np.real(np.vdot(t, z))), rel=1e-12, abs=1e-12)
        re_row, im_row = inner_product_rows(t)
        val = np.vdot(t, z)
        assert re_row @ zh == pytest.approx(val.real, rel=1e-12, abs=1e-12)
        assert im_row @ zh == pytest.approx(val.imag, rel=1e-12, abs=1e-12)


def test_lift_rejects_non_hermitian():
    with pytest.raises(ValueError):
        lift_hermitian_quadratic(np.array([[1.0, 2.0], [3.0, 4.0]]))


# ---------------------------------------------------------------------------
# program container
# ---------------------------------------------------------------------------


def test_program_validation():
    prog = ConicProgram(num_vars=2, objective=[1.0, 0.0])
    with pytest.raises(ValueError):
        prog.add(np.ones((1, 3)), [0.0], NONNEG)
    with pytest.raises(ValueError):
        prog.add(np.ones((1, 2)), [0.0], SOC)  # dim < 2
    with pytest.raises(ValueError):
        prog.add(np.ones((2, 2)), [0.0, 0.0], RSOC)  # dim < 3
    with pytest.raises(ValueError):
        prog.add(np.ones((1, 2)), [0.0], "exotic")
    with pytest.raises(ValueError):
        solve(ConicProgram(num_vars=1, objective=[1.0]))


def test_program_dump_roundtrip_info():
    prog = ConicProgram(num_vars=2, objective=[1.0, 0.0], var_names=["t", "u"])
    prog.add_nonneg(np.array([[-1.0, 0.0]]), [3.0])
    prog.add_soc(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.0, 0.0])
    text = prog.dump()
    assert "maximize" in text and "nonnegative[1]" in text and "second-order[2]" in text


# ---------------------------------------------------------------------------
# solve: analytic cases
# ---------------------------------------------------------------------------


def test_lp_two_bounds():
    prog = ConicProgram(num_vars=1, objective=[1.0])
    prog.add_nonneg(np.array([[-1.0]]), [3.0])
    prog.add_nonneg(np.array([[-1.0]]), [5.0])
    res = solve(prog)
    assert res.status == "optimal"
    assert res.objective_value == pytest.approx(3.0, abs=1e-8)
    assert res.primal[0] == pytest.approx(3.0, abs=1e-8)


def test_projection_onto_unit_ball():
    # max -s  s.t. ||x - c|| <= s, ||x|| <= 1, with ||c|| = 2
    rng = stream(22, "proj")
    c = rng.standard_normal(3)
    c *= 2.0 / np.linalg.norm(c)
    prog = ConicProgram(num_vars=4, objective=[0.0, 0.0, 0.0, -1.0])
    a1 = np.zeros((4, 4))
    a1[0, 3] = 1.0
    a1[1:, :3] = np.eye(3)
    prog.add_soc(a1, np.concatenate([[0.0], -c]))
    a2 = np.zeros((4, 4))
    a2[1:, :3] = np.eye(3)
    prog.add_soc(a2, [1.0, 0.0, 0.0, 0.0])
    res = solve(prog)
    assert res.status == "optimal"
    assert res.objective_value == pytest.approx(-1.0, abs=1e-8)
    np.testing.assert_allclose(res.primal[:3], c / 2.0, atol=1e-8)
    assert res.primal[3] == pytest.approx(1.0, abs=1e-8)


def test_rotated_cone_lower_bound():
    # max -u  s.t. (u, 1/2, cvec) in RSOC  =>  u* = ||cvec||^2
    cvec = np.array([0.3, -1.2, 0.5])
    prog = ConicProgram(num_vars=1, objective=[-1.0])
    a = np.zeros((5, 1))
    a[0, 0] = 1.0
    prog.add_rsoc(a, np.concatenate([[0.0, 0.5], cvec]))
    res = solve(prog, tolerance=1e-10)
    assert res.status == "optimal"
    assert res.primal[0] == pytest.approx(cvec @ cvec, abs=1e-8)


def test_infeasible_flagged():
    # t <= -1 and t >= 2
    prog = ConicProgram(num_vars=1, objective=[1.0])
    prog.add_nonneg(np.array([[-1.0]]), [-1.0])
    prog.add_nonneg(np.array([[1.0]]), [-2.0])
    res = solve(prog)
    assert res.status == "infeasible"
    assert np.isnan(res.objective_value)


def test_unbounded_flagged():
    prog = ConicProgram(num_vars=1, objective=[1.0])
    prog.add_nonneg(np.array([[1.0]]), [0.0])
    res = solve(prog)
    assert res.status == "unbounded"


def test_determinism():
    rng = stream(23, "det")
    c = rng.standard_normal(3)
    prog1, prog2 = [], []
    for store in (prog1, prog2):
        prog = ConicProgram(num_vars=3, objective=c.copy())
        a = np.vstack([np.zeros(3), np.eye(3)])
        prog.add_soc(a, [2.0, 0.0, 0.0, 0.0])
        store.append(solve(prog))
    r1, r2 = prog1[0], prog2[0]
    assert r1.status == r2.status
    np.testing.assert_array_equal(r1.primal, r2.primal)
    assert r1.objective_value == r2.objective_value
    assert r1.residuals == r2.residuals
    assert r1.iterations == r2.iterations


# ---------------------------------------------------------------------------
# solve: planted-optimum instances
# ---------------------------------------------------------------------------


def planted_instance(rng, scale=1.0):
    """Random SOCP with a planted primal point and dual certificate.

    Active blocks sit on the cone boundary with complementary duals, so the
    planted objective value is certified optimal by strong duality.
    """
    n = int(rng.integers(3, 10))
    x_star = rng.standard_normal(n)
    prog = ConicProgram(num_vars=n)
    c_min = np.zeros(n)

    n_soc = int(rng.integers(1, 4))
    for i in range(n_soc):
        d = int(rng.integers(2, 7))
        a = rng.standard_normal((d, n)) * scale
        tail = rng.standard_normal(d - 1)
        active = i == 0 or rng.random() < 0.5
        if active:
            s_tgt = np.concatenate([[np.linalg.norm(tail)], tail])
            rho = rng.uniform(0.5, 2.0)
            z_blk = rho * np.concatenate([[s_tgt[0]], -s_tgt[1:]])
            c_min += a.T @ z_blk
        else:
            s_tgt = np.concatenate([[np.linalg.norm(tail) + rng.uniform(0.5, 2.0)], tail])
        prog.add_soc(a, s_tgt - a @ x_star)

    for _ in range(int(rng.integers(0, 6))):
        a = rng.standard_normal((1, n)) * scale
        if rng.random() < 0.5:
            rho = rng.uniform(0.5, 2.0)
            c_min += rho * a[0]
            prog.add_nonneg(a, [-float(a[0] @ x_star)])
        else:
            prog.add_nonneg(a, [rng.uniform(0.1, 1.0) - float(a[0] @ x_star)])

    prog.objective = -c_min
    return prog, float(prog.objective @ x_star)


def test_planted_optimum_recovery():
    rng = stream(24, "plant")
    for trial in range(50):
        prog, value = planted_instance(rng)
        res = solve(prog)
        assert res.status == "optimal", f"trial {trial}: {res.status}"
        assert res.objective_value == pytest.approx(value, abs=1e-6 * max(1.0, abs(value)))
        assert np.max(prog.violations(res.primal)) <= 1e-6


def test_planted_optimum_bad_scaling():
    # equilibration keeps badly scaled instances solvable
    rng = stream(25, "plant-scale")
    for scale in (1e-6, 1e4):
        for _ in range(10):
            prog, value = planted_instance(rng, scale=scale)
            res = solve(prog)
            assert res.status == "optimal"
            assert res.objective_value == pytest.approx(value, abs=1e-6 * max(1.0, abs(value)))


def test_nt_scaling_identities():
    # lambda = W z = W^{-1} s, W^2 = W o W, and W^{-1} undoes W
    from risbeam.socp import _Cones, _Scaling

    rng = stream(27, "nt")
    cones = _Cones(3, [4, 2])
    s = cones.identity() + 0.3 * rng.uniform(-1, 1, cones.dim)
    z = cones.identity() + 0.3 * rng.uniform(-1, 1, cones.dim)
    scl = _Scaling(cones, s, z)
    np.testing.assert_allclose(scl.mul_w(z), scl.mul_w_inv(s), rtol=1e-12)
    v = rng.standard_normal(cones.dim)
    np.testing.assert_allclose(scl.mul_w_inv(scl.mul_w(v)), v, rtol=1e-12)
    np.testing.assert_allclose(scl.w_squared() @ v, scl.mul_w(scl.mul_w(v)), rtol=1e-11)
    mat = rng.standard_normal((cones.dim, 5))
    np.testing.assert_allclose(scl.mul_w_inv_matrix(mat), np.column_stack([scl.mul_w_inv(mat[:, j]) for j in range(5)]), rtol=1e-12)


def test_result_residuals_small_at_optimal():
    rng = stream(26, "resid")
    prog, _ = planted_instance(rng)
    res = solve(prog, tolerance=1e-8)
    assert res.status == "optimal"
    assert res.residuals["primal"] <= 1e-8
    assert res.residuals["dual"] <= 1e-8
    assert res.residuals["gap"] <= 1e-8
    assert res.iterations < 200
