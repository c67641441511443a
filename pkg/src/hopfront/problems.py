"""Benchmark problem library.

Each builder returns an immutable problem bundle: objectives with analytic
Jacobians, constraints, the feasible bounding box, solver defaults, and the
default sweep path in tau space. Problem ids are the stable strings used by
the CLI and output manifests: ex1, ex2a, ex2b, ex3a-d{N}, ex3b.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .constrained import ConstraintSet, box_constraints, dykstra_project
from .core import HopfLaxParams, SoftMax, VectorObjective


@dataclass(frozen=True, eq=False)
class BenchmarkProblem:
    id: str
    objective: VectorObjective
    constraints: Optional[ConstraintSet]
    feasible_box: tuple
    alpha: float
    c: float
    mu: float
    x: np.ndarray
    tau_start: np.ndarray
    tau_end: np.ndarray
    solver_mode: str
    label: str
    optimal_manifold: Optional[Callable[[int], np.ndarray]] = None

    def params_for(self, tau) -> HopfLaxParams:
        return HopfLaxParams(x=self.x, tau=np.asarray(tau, dtype=float), alpha=self.alpha, c=self.c, mu=self.mu)

    def default_preference(self) -> SoftMax:
        return SoftMax(0.1, self.objective.dim_obj)

    def projector(self):
        if self.constraints is not None and self.constraints.projector is not None:
            return self.constraints.projector
        lo, hi = self.feasible_box
        return lambda u: np.clip(u, lo, hi)


def example1() -> BenchmarkProblem:
    """Two convex objectives on the intersection of a parabola epigraph with
    a halfspace; the front lies on the parabola boundary."""

    def ell(u):
        u1, u2 = u[..., 0], u[..., 1]
        return np.stack([-u1, u1 + u2**2], axis=-1)

    def jac(u):
        return np.array([[-1.0, 0.0], [1.0, 2.0 * u[1]]])

    def kfun(u):
        u1, u2 = u[..., 0], u[..., 1]
        return np.stack([-(u1**2) + u2, -u1 - 2.0 * u2 + 3.0], axis=-1)

    def kjac(u):
        return np.array([[-2.0 * u[0], 1.0], [-1.0, -2.0]])

    def boundary(n):
        # Front candidates live on the parabola arc; add the halfspace edge.
        n_arc = max(2, (3 * n) // 4)
        a = np.linspace(-1.5, 1.0, n_arc)
        arc = np.stack([a, a**2], axis=1)
        b = np.linspace(-1.5, 1.0, max(2, n - n_arc))
        edge = np.stack([b, (3.0 - b) / 2.0], axis=1)
        return np.concatenate([arc, edge])

    def tangent(u, active):
        if active.all():
            return np.zeros((2, 0))
        if active[0]:  # parabola boundary
            t = np.array([1.0, 2.0 * u[0]])
            return (t / np.linalg.norm(t)).reshape(2, 1)
        if active[1]:  # halfspace edge
            return (np.array([2.0, -1.0]) / np.sqrt(5.0)).reshape(2, 1)
        return np.eye(2)

    constraints = ConstraintSet(
        dim_u=2,
        dim_con=2,
        fn=kfun,
        jac=kjac,
        projector=lambda u: dykstra_project(u, cycles=10, root_tol=1e-6),
        membership_tol=1e-6,
        tangent_basis=tangent,
        batched=True,
    )
    return BenchmarkProblem(
        id="ex1",
        objective=VectorObjective(2, 2, ell, jac, batched=True),
        constraints=constraints,
        feasible_box=(np.array([-1.5, 0.0]), np.array([1.0, 2.25])),
        alpha=1.0,
        c=0.1,
        mu=0.01,
        x=np.zeros(2),
        tau_start=np.array([-10.0, 10.0]),
        tau_end=np.array([10.0, -10.0]),
        solver_mode="projected_gradient",
        label="semialgebraic-constrained 2-D",
        optimal_manifold=boundary,
    )


def _box_problem(pid, ell, jac, d, n_obj, alpha, c, mu, tau_start, tau_end, label, manifold=None):
    # Solves route through the full inner minimization: the plain
    # Gauss-Newton model misses the penalty-coupling curvature of these
    # objectives on the valley floor and oscillates against the box faces.
    lo, hi = np.zeros(d), np.ones(d)
    return BenchmarkProblem(
        id=pid,
        objective=VectorObjective(d, n_obj, ell, jac, batched=True),
        constraints=box_constraints(lo, hi),
        feasible_box=(lo, hi),
        alpha=alpha,
        c=c,
        mu=mu,
        x=np.zeros(d),
        tau_start=np.asarray(tau_start, dtype=float),
        tau_end=np.asarray(tau_end, dtype=float),
        solver_mode="projected_gradient",
        label=label,
        optimal_manifold=manifold,
    )


def _diagonal_manifold(d):
    def manifold(n):
        t = np.linspace(0.0, 1.0, max(2, n))
        return np.repeat(t[:, None], d, axis=1)

    return manifold


def example2_case1() -> BenchmarkProblem:
    """Nonconvex planar front on the unit box; valley along u2 = u1."""
    a, b, lam = 0.3, 1.0, 0.5

    def ell(u):
        u1, u2 = u[..., 0], u[..., 1]
        penalty = lam * (u2 - u1) ** 2
        l1 = u1 + penalty
        l2 = 1.0 - u1 + a * (u1 - 0.5) ** 4 - b * (u1 - 0.5) ** 2 + penalty
        return np.stack([l1, l2], axis=-1)

    def jac(u):
        u1, u2 = u
        dp = 2.0 * lam * (u2 - u1)
        return np.array(
            [
                [1.0 - dp, dp],
                [-1.0 + 4.0 * a * (u1 - 0.5) ** 3 - 2.0 * b * (u1 - 0.5) - dp, dp],
            ]
        )

    return _box_problem(
        "ex2a", ell, jac, 2, 2, 1.0, 0.1, 0.01,
        [-10.0, 10.0], [10.0, -10.0], "nonconvex planar front",
        manifold=_diagonal_manifold(2),
    )


def example2_case2() -> BenchmarkProblem:
    """Highly nonconvex planar front (oscillatory first objective)."""
    g1, b1, b2, eta = 0.05, 1.0, 1.0, 2.0

    def ell(u):
        u1, u2 = u[..., 0], u[..., 1]
        pen = (u2 - u1) ** 2
        l1 = u1 + g1 * np.sin(4.0 * np.pi * u1) + b1 * pen
        l2 = (u1 - 0.25) ** 4 * (u1 - 0.75) ** 2 + eta * (1.0 - u1) + b2 * pen
        return np.stack([l1, l2], axis=-1)

    def jac(u):
        u1, u2 = u
        dpen = 2.0 * (u2 - u1)
        d1 = 1.0 + 4.0 * np.pi * g1 * np.cos(4.0 * np.pi * u1) - b1 * dpen
        d2 = (
            4.0 * (u1 - 0.25) ** 3 * (u1 - 0.75) ** 2
            + 2.0 * (u1 - 0.25) ** 4 * (u1 - 0.75)
            - eta
            - b2 * dpen
        )
        return np.array([[d1, b1 * dpen], [d2, b2 * dpen]])

    return _box_problem(
        "ex2b", ell, jac, 2, 2, 1.0, 0.1, 0.01,
        [-10.0, 10.0], [10.0, -10.0], "highly nonconvex planar front",
        manifold=_diagonal_manifold(2),
    )


def _mean_spread(u):
    s = u.mean(axis=-1)
    r2 = ((u - s[..., None]) ** 2).mean(axis=-1)
    return s, r2


def example3_case1(d: int) -> BenchmarkProblem:
    """Mean/spread objectives on [0,1]^d; Pareto set hugs the diagonal.

    Stiffness scales with d, so c and mu shrink like 1/d; the tau range grows
    like d to keep c*tau, and with it the swept family of scalarizations,
    independent of the dimension.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    a, b, g1, b1, b2 = 1.0, 0.7, 0.1, 0.5, 0.5

    def ell(u):
        s, r2 = _mean_spread(u)
        l1 = s + g1 * np.sin(2.0 * np.pi * s) + b1 * r2
        l2 = 1.0 - s + a * (s - 0.5) ** 4 - b * (s - 0.5) ** 2 + b2 * r2
        return np.stack([l1, l2], axis=-1)

    def jac(u):
        s, _ = _mean_spread(u)
        dev = 2.0 * (u - s) / d
        ones = np.full(d, 1.0 / d)
        row1 = (1.0 + 2.0 * np.pi * g1 * np.cos(2.0 * np.pi * s)) * ones + b1 * dev
        row2 = (-1.0 + 4.0 * a * (s - 0.5) ** 3 - 2.0 * b * (s - 0.5)) * ones + b2 * dev
        return np.stack([row1, row2])

    scale = 10.0 * d
    return _box_problem(
        f"ex3a-d{d}", ell, jac, d, 2, 1.0, 0.1 / d, 0.01 / d,
        [-scale, scale], [scale, -scale], f"high-dimensional nonconvex front (d={d})",
        manifold=_diagonal_manifold(d),
    )


def example3_case2() -> BenchmarkProblem:
    """Five objectives over [0,1]^20 built from the mean and spread."""
    d = 20
    a, b, g1, b1, b2 = 1.0, 0.7, 0.1, 0.5, 0.5
    c3, c4, c5, g5 = 0.3, 0.4, 0.2, 0.05

    def ell(u):
        s, r2 = _mean_spread(u)
        l1 = s + g1 * np.sin(2.0 * np.pi * s) + b1 * r2
        l2 = 1.0 - s + a * (s - 0.5) ** 4 - b * (s - 0.5) ** 2 + b2 * r2
        l3 = (s - 0.2) ** 2 + c3 * r2
        l4 = (s - 0.8) ** 2 + c4 * r2
        l5 = 0.5 * s**2 + g5 * np.sin(4.0 * np.pi * s) + c5 * r2
        return np.stack([l1, l2, l3, l4, l5], axis=-1)

    def jac(u):
        s, _ = _mean_spread(u)
        dev = 2.0 * (u - s) / d
        ones = np.full(d, 1.0 / d)
        rows = [
            (1.0 + 2.0 * np.pi * g1 * np.cos(2.0 * np.pi * s)) * ones + b1 * dev,
            (-1.0 + 4.0 * a * (s - 0.5) ** 3 - 2.0 * b * (s - 0.5)) * ones + b2 * dev,
            2.0 * (s - 0.2) * ones + c3 * dev,
            2.0 * (s - 0.8) * ones + c4 * dev,
            (s + 4.0 * np.pi * g5 * np.cos(4.0 * np.pi * s)) * ones + c5 * dev,
        ]
        return np.stack(rows)

    # One spread direction across the five shifts traces a curve of distinct
    # tradeoffs; components scale with d like the planar cases.
    w = np.linspace(1.0, -1.0, 5)
    scale = 10.0 * d
    return _box_problem(
        "ex3b", ell, jac, d, 5, 1.0, 0.1 / d, 0.01 / d,
        -scale * w, scale * w, "five objectives, 20-D decision space",
        manifold=_diagonal_manifold(d),
    )


_EX3A = re.compile(r"^ex3a-d(\d+)$")

PROBLEMS = {
    "ex1": example1,
    "ex2a": example2_case1,
    "ex2b": example2_case2,
    "ex3b": example3_case2,
}


def register_problem(pid: str, factory):
    """Hook for user-defined problems; factory must return a BenchmarkProblem."""
    if pid in PROBLEMS or _EX3A.match(pid):
        raise ValueError(f"problem id {pid!r} is already taken")
    PROBLEMS[pid] = factory


def problem_ids():
    return sorted(PROBLEMS) + ["ex3a-d{N}"]


def get_problem(pid: str) -> BenchmarkProblem:
    match = _EX3A.match(pid)
    if match:
        return example3_case1(int(match.group(1)))
    try:
        return PROBLEMS[pid]()
    except KeyError:
        raise KeyError(f"unknown problem {pid!r}; known: {', '.join(problem_ids())}") from None
