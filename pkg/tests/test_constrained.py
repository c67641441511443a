import numpy as np
import pytest

from hopfront.constrained import (
    ConstrainedSolverConfig,
    ConstraintSet,
    box_constraints,
    constrained_preconditioner,
    constrained_residual,
    dual_update_nu,
    dykstra_project,
    merit_psi_k,
    multiplier_estimate,
    project_halfspace,
    project_parabola_epigraph,
    solve_constrained,
)
from hopfront.core import HopfLaxParams, SoftMax, VectorObjective, WeightedSum
from hopfront.problems import example1
from hopfront.solver import (
    SolverConfig,
    merit_psi,
    solve,
    stationarity_residual,
)


def identity_objective():
    return VectorObjective(1, 1, lambda u: u, lambda u: np.array([[1.0]]))


def scalar_params(x=0.0):
    return HopfLaxParams(x=np.array([x]), tau=np.array([0.0]), alpha=1.0, c=1.0, mu=1.0)


def halfline_constraint():
    # u >= 0 with the obvious projector
    return ConstraintSet(1, 1, lambda u: u.copy(), lambda u: np.array([[1.0]]),
                         projector=lambda u: np.maximum(u, 0.0))


def empty_constraint():
    return ConstraintSet(1, 0, lambda u: np.zeros(0), lambda u: np.zeros((0, 1)))


def ex1_params(tau=(0.0, 0.0)):
    return HopfLaxParams(x=np.zeros(2), tau=np.asarray(tau, dtype=float), alpha=1.0, c=0.1, mu=0.01)


class TestDualUpdateNu:
    def test_strictly_feasible_clips_to_zero(self):
        assert np.array_equal(dual_update_nu([1.0, 1.0], [0.0, 0.0], 1.0), [0.0, 0.0])

    def test_mixed_ascent(self):
        assert np.allclose(dual_update_nu([-0.2, 0.3], [0.5, 0.0], 1.0), [0.7, 0.0])

    def test_active_constraints_leave_nu_fixed(self):
        assert np.array_equal(dual_update_nu([0.0, 0.0], [1.0, 1.0], 7.3), [1.0, 1.0])

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            dual_update_nu([0.0], [0.0], 0.0)


class TestConstrainedResidual:
    def test_zero_multiplier_reduces_to_unconstrained(self, rng):
        prob = example1()
        params = ex1_params()
        u = rng.uniform(-1, 1, size=2)
        pi = rng.dirichlet([1, 1])
        r_con = constrained_residual(prob.objective, prob.constraints, u, pi, np.zeros(2), params)
        r_unc = stationarity_residual(prob.objective, u, pi, params)
        assert np.allclose(r_con, r_unc, atol=1e-15)

    def test_multiplier_cancels_gradient(self):
        f = identity_objective()
        k = halfline_constraint()
        r = constrained_residual(f, k, np.array([0.0]), np.array([1.0]), np.array([1.0]), scalar_params())
        assert r == pytest.approx(0.0)

    def test_matches_hand_assembled_jacobians(self):
        prob = example1()
        params = ex1_params()
        u = np.array([1.0, 1.0])
        pi = np.array([0.5, 0.5])
        nu = np.array([0.1, 0.2])
        Jl = np.array([[-1.0, 0.0], [1.0, 2.0]])
        Jk = np.array([[-2.0, 1.0], [-1.0, -2.0]])
        expected = Jl.T @ pi - Jk.T @ nu + 0.01 * u - 0.1 * (np.zeros(2) - u)
        got = constrained_residual(prob.objective, prob.constraints, u, pi, nu, params)
        assert np.allclose(got, expected, atol=1e-14)


class TestConstrainedPreconditioner:
    def test_inactive_equals_unconstrained(self):
        prob = example1()
        params = ex1_params()
        u = np.array([0.0, 1.0])  # k = (1, 1): inactive
        from hopfront.solver import lm_matrix

        B = constrained_preconditioner(prob.objective, prob.constraints, u, params, 1e-3)
        assert np.array_equal(B, lm_matrix(prob.objective, u, params))

    def test_all_active_three_term_sum(self):
        prob = example1()
        params = ex1_params()
        u = np.array([1.0, 1.0])  # both constraints active
        J = prob.objective.jacobian(u)
        Jk = prob.constraints.jacobian(u)
        expected = 0.11 * np.eye(2) + J.T @ J + Jk.T @ Jk
        B = constrained_preconditioner(prob.objective, prob.constraints, u, params, 1e-3)
        assert np.allclose(B, expected, atol=1e-14)
        eigs = np.linalg.eigvalsh(B)
        assert eigs.min() >= 0.11 - 1e-12


class TestProjections:
    def test_parabola_feasible_fixed_point(self):
        assert np.array_equal(project_parabola_epigraph([0.3, 0.5]), [0.3, 0.5])

    def test_parabola_below_vertex(self):
        assert np.allclose(project_parabola_epigraph([0.0, -1.0]), [0.0, 0.0], atol=1e-12)

    def test_parabola_projection_matches_dense_boundary_search(self, rng):
        for _ in range(30):
            p = rng.uniform(-3, 3, size=2)
            if p[1] >= p[0] ** 2:
                continue
            xs = np.linspace(-4, 4, 400001)
            d2 = (xs - p[0]) ** 2 + (xs**2 - p[1]) ** 2
            best = xs[np.argmin(d2)]
            proj = project_parabola_epigraph(p, root_tol=1e-10)
            assert abs(proj[0] - best) <= 2e-5

    def test_halfspace_projection(self):
        assert np.array_equal(project_halfspace([0.0, 0.0]), [0.0, 0.0])
        p = project_halfspace([4.0, 4.0])
        assert p[0] + 2 * p[1] == pytest.approx(3.0, abs=1e-12)

    def test_dykstra_feasible_fixed_point(self):
        assert np.allclose(dykstra_project([0.0, 0.5]), [0.0, 0.5], atol=1e-14)

    def test_dykstra_axis_point(self):
        assert np.allclose(dykstra_project([0.0, -1.0]), [0.0, 0.0], atol=1e-10)

    def test_dykstra_corner_against_brute_force(self):
        out = dykstra_project([4.0, 4.0])
        # brute force: search both boundary curves of the intersection
        a = np.linspace(-1.5, 1.0, 200001)
        parab = np.stack([a, a**2], axis=1)
        edge = np.stack([a, (3.0 - a) / 2.0], axis=1)
        edge = edge[edge[:, 1] >= edge[:, 0] ** 2 - 1e-12]
        cand = np.concatenate([parab, edge])
        d2 = ((cand - np.array([4.0, 4.0])) ** 2).sum(axis=1)
        best = cand[np.argmin(d2)]
        assert np.allclose(out, best, atol=1e-4)
        k1 = -out[0] ** 2 + out[1]
        k2 = -out[0] - 2 * out[1] + 3
        assert min(k1, k2) >= -1e-6

    def test_dykstra_random_inputs_feasible_and_contracting(self, rng):
        for _ in range(50):
            p = rng.uniform(-5, 5, size=2)
            out = dykstra_project(p, cycles=10)
            k1 = -out[0] ** 2 + out[1]
            k2 = -out[0] - 2 * out[1] + 3
            assert min(k1, k2) >= -1e-6
            # successive cycle outputs approach the limit monotonically
            outs = [dykstra_project(p, cycles=c) for c in range(1, 8)]
            gaps = [float(np.linalg.norm(outs[i + 1] - outs[i])) for i in range(len(outs) - 1)]
            assert all(g2 <= g1 + 1e-12 for g1, g2 in zip(gaps, gaps[1:]))

    def test_dykstra_validates_cycles(self):
        with pytest.raises(ValueError):
            dykstra_project([0.0, 0.0], cycles=0)


class TestMultiplierEstimate:
    def test_inactive_gives_zero(self):
        prob = example1()
        nu = multiplier_estimate(prob.objective, prob.constraints, np.array([0.0, 1.0]),
                                 np.array([0.5, 0.5]), ex1_params())
        assert np.array_equal(nu, np.zeros(2))

    def test_box_estimate_matches_clip_closed_form(self, rng):
        d = 3
        k = box_constraints(np.zeros(d), np.ones(d))
        f = VectorObjective(d, 1, lambda u: np.array([u.sum()]), lambda u: np.ones((1, d)))
        params = HopfLaxParams(x=np.zeros(d), tau=np.zeros(1), alpha=1.0, c=0.1, mu=0.01)
        u = np.array([0.0, 0.5, 1.0])  # lower face, free, upper face
        pi = np.array([1.0])
        F = stationarity_residual(f, u, pi, params)
        nu = multiplier_estimate(f, k, u, pi, params)
        assert nu[0] == pytest.approx(max(F[0], 0.0))   # lower face row is +e_0
        assert nu[3 + 2] == pytest.approx(max(-F[2], 0.0))  # upper face row is -e_2
        assert np.all(nu >= 0)


class TestMeritPsiK:
    def test_zero_at_bound_kkt_point(self):
        f = identity_objective()
        k = halfline_constraint()
        psi = merit_psi_k(f, k, WeightedSum([1.0]), np.array([0.0]), np.array([1.0]),
                          np.array([1.0]), scalar_params(), 0.5, 0.5)
        assert psi == pytest.approx(0.0, abs=1e-28)

    def test_interior_zero_multiplier_matches_unconstrained(self, rng):
        prob = example1()
        params = ex1_params()
        g = SoftMax(0.1, 2)
        u = np.array([0.0, 1.0])
        pi = rng.dirichlet([1, 1])
        psi_k = merit_psi_k(prob.objective, prob.constraints, g, u, pi, np.zeros(2), params, 0.5, 0.5)
        psi = merit_psi(prob.objective, g, u, pi, params, 0.5)
        assert psi_k == psi

    def test_matches_independent_assembly(self, rng):
        prob = example1()
        params = ex1_params(tau=(1.0, -1.0))
        g = SoftMax(0.1, 2)
        rho = sigma = 0.5
        for _ in range(10):
            u = rng.uniform(-1, 1, size=2)
            pi = rng.dirichlet([1, 1])
            nu = rng.uniform(0, 1, size=2)
            J = prob.objective.jacobian(u)
            Jk = prob.constraints.jacobian(u)
            r = J.T @ pi - Jk.T @ nu + 0.01 * u + 0.1 * u
            B = 0.11 * np.eye(2) + J.T @ J
            det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
            Binv = np.array([[B[1, 1], -B[0, 1]], [-B[1, 0], B[0, 0]]]) / det
            E = params.dual_shift(pi)
            disp = g.prox_conjugate(pi + rho * (prob.objective.value(u) + E), rho) - pi
            kv = prob.constraints.value(u)
            nu_disp = np.maximum(nu - sigma * kv, 0.0) - nu
            expected = (
                0.5 * float(r @ (Binv @ r))
                + float(disp @ disp) / (2 * rho**2)
                + float(nu_disp @ nu_disp) / (2 * sigma**2)
            )
            got = merit_psi_k(prob.objective, prob.constraints, g, u, pi, nu, params, rho, sigma)
            assert got == pytest.approx(expected, rel=1e-9)


class TestSolveConstrained:
    def test_inactive_box_matches_unconstrained(self):
        f = identity_objective()
        g = WeightedSum([1.0])
        params = scalar_params(x=0.0)
        k = box_constraints(np.array([-1e3]), np.array([1e3]))
        unc = solve(f, g, params, SolverConfig(eps=1e-9))
        con = solve_constrained(f, k, g, params, ConstrainedSolverConfig(eps=1e-9))
        assert unc.converged and con.converged
        assert abs(unc.u_star[0] - con.u_star[0]) <= 1e-8
        assert np.linalg.norm(con.nu_star) <= 1e-8

    def test_active_bound_multiplier(self):
        f = identity_objective()
        g = WeightedSum([1.0])
        res = solve_constrained(f, halfline_constraint(), g, scalar_params(x=0.0),
                                ConstrainedSolverConfig(eps=1e-9))
        assert res.converged
        assert abs(res.u_star[0]) <= 1e-9
        assert res.nu_star[0] == pytest.approx(1.0, abs=1e-8)
        assert res.complementarity <= 1e-8
        assert res.feasibility_violation == 0.0

    def test_empty_constraints_bitwise_reduction(self):
        f = VectorObjective(1, 1, lambda u: u**2, lambda u: np.array([[2.0 * u[0]]]))
        g = WeightedSum([1.0])
        params = scalar_params(x=1.0)
        unc = solve(f, g, params)
        con = solve_constrained(f, empty_constraint(), g, params, ConstrainedSolverConfig())
        assert unc.u_star.tobytes() == con.u_star.tobytes()
        assert unc.pi_star.tobytes() == con.pi_star.tobytes()
        assert unc.merit_history == con.merit_history
        assert unc.residual_history == con.residual_history
        assert unc.iterations == con.iterations

    def test_ex1_boundary_solution_with_reference_params(self):
        prob = example1()
        g = SoftMax(0.1, 2)
        cfg = ConstrainedSolverConfig(mode="projected_gradient")
        res = solve_constrained(prob.objective, prob.constraints, g, ex1_params(tau=(0.0, 0.0)), cfg)
        assert res.converged
        assert res.residual_history[-1] <= 1e-4  # variational-inequality residual
        assert abs(res.u_star[1] - res.u_star[0] ** 2) <= 1e-6
        assert res.feasibility_violation <= 1e-6
        assert res.complementarity <= 10 * cfg.eps
        from hopfront.oracle import reference_front

        ref = reference_front(prob, mc=20000, seed=3)
        obj = prob.objective.value(res.u_star)
        dist = np.sqrt(((ref.points_obj - obj) ** 2).sum(axis=1)).min()
        assert dist <= 0.05

    def test_infeasible_start_without_projector_raises(self):
        f = identity_objective()
        k = ConstraintSet(1, 1, lambda u: u.copy(), lambda u: np.array([[1.0]]))
        with pytest.raises(ValueError):
            solve_constrained(f, k, WeightedSum([1.0]), scalar_params(x=0.0),
                              ConstrainedSolverConfig(), u0=np.array([-1.0]))

    def test_dual_ascent_path_without_projector(self):
        # feasible start, no projector: the ascent channel carries nu
        f = identity_objective()
        k = ConstraintSet(1, 1, lambda u: u.copy(), lambda u: np.array([[1.0]]))
        res = solve_constrained(f, k, WeightedSum([1.0]), scalar_params(x=0.0),
                                ConstrainedSolverConfig(eps=1e-7), u0=np.array([2.0]))
        assert res.converged
        assert abs(res.u_star[0]) <= 1e-5
        assert res.nu_star[0] == pytest.approx(1.0, abs=1e-5)
        assert np.all(res.nu_star >= 0)

    def test_iterates_stay_feasible_under_projection(self):
        # every objective evaluation during an ex1 solve is at a feasible point
        prob = example1()
        seen = []
        base_fn = prob.objective.fn

        def recording(u):
            if u.ndim == 1:
                seen.append(u.copy())
            return base_fn(u)

        f = VectorObjective(2, 2, recording, prob.objective.jac)
        g = SoftMax(0.1, 2)
        cfg = ConstrainedSolverConfig(mode="projected_gradient")
        res = solve_constrained(f, prob.constraints, g, ex1_params(tau=(4.0, -4.0)), cfg)
        assert res.converged
        ks = np.array([prob.constraints.value(u) for u in seen])
        assert ks.min() >= -1e-6

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            ConstrainedSolverConfig(mode="newton")
        f = identity_objective()
        k = ConstraintSet(1, 1, lambda u: u.copy(), lambda u: np.array([[1.0]]))
        with pytest.raises(ValueError):
            solve_constrained(f, k, WeightedSum([1.0]), scalar_params(),
                              ConstrainedSolverConfig(mode="projected_gradient"))

    def test_merit_history_non_increasing(self):
        prob = example1()
        g = SoftMax(0.1, 2)
        cfg = ConstrainedSolverConfig(mode="projected_gradient")
        for tau in ((-8.0, 8.0), (2.0, -2.0), (10.0, -10.0)):
            res = solve_constrained(prob.objective, prob.constraints, g, ex1_params(tau=tau), cfg)
            diffs = np.diff(res.merit_history)
            assert diffs.size == 0 or diffs.max() <= 1e-12

    def test_projected_gradient_without_tangent_basis_hint(self):
        # curved constraint set relying on the generic SVD null-space route
        def kfun(u):
            return np.array([1.0 - u[0] ** 2 - u[1] ** 2])

        def kjac(u):
            return np.array([[-2.0 * u[0], -2.0 * u[1]]])

        def project(u):
            norm = float(np.linalg.norm(u))
            return u if norm <= 1.0 else u / norm

        disc = ConstraintSet(2, 1, kfun, kjac, projector=project)
        f = VectorObjective(2, 2,
                            lambda u: np.array([-u[0], -u[1]]),
                            lambda u: np.array([[-1.0, 0.0], [0.0, -1.0]]))
        g = SoftMax(0.1, 2)
        params = HopfLaxParams(x=np.zeros(2), tau=np.array([1.0, -1.0]), alpha=1.0, c=0.1, mu=0.01)
        res = solve_constrained(f, disc, g, params, ConstrainedSolverConfig(mode="projected_gradient"))
        assert res.converged
        # both objectives pull outward, so the disc boundary is active
        assert np.linalg.norm(res.u_star) == pytest.approx(1.0, abs=1e-6)
        assert res.feasibility_violation <= 1e-8
