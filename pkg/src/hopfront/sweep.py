"""Pareto-front exploration by sweeping tau along a path.

Holding x and alpha fixed while tau moves along a line traces continuous
curves of converged points; warm-starting each solve from its neighbor keeps
the curve coherent. All randomness-free: identical inputs give identical
fronts.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .constrained import ConstrainedSolverConfig, solve_constrained
from .core import HopfLaxParams, as_vector
from .solver import SolverConfig, gap_and_bound, solve


@dataclass(frozen=True, eq=False)
class TauPath:
    """Uniform affine interpolation between two tau endpoints."""

    start: np.ndarray
    end: np.ndarray
    n_samples: int
    spacing: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "start", as_vector(self.start, name="start"))
        object.__setattr__(self, "end", as_vector(self.end, self.start.shape[0], "end"))
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.spacing != "uniform":
            raise ValueError("only uniform spacing is supported")

    def parameters(self):
        if self.n_samples == 1:
            return np.zeros(1)
        return np.linspace(0.0, 1.0, self.n_samples)

    def points(self):
        return [self.start + t * (self.end - self.start) for t in self.parameters()]


@dataclass(eq=False)
class FrontSample:
    index: int
    t: float
    tau: np.ndarray
    u: np.ndarray
    objectives: np.ndarray
    pi: np.ndarray
    E: np.ndarray
    p: np.ndarray
    residual: float
    iterations: int
    converged: bool
    nu: Optional[np.ndarray] = None
    merit: float = np.nan
    gap: Optional[float] = None
    bregman_bound: Optional[float] = None


@dataclass(eq=False)
class ParetoFront:
    problem_id: str
    samples: List[FrontSample] = field(default_factory=list)

    def converged_count(self):
        return sum(1 for s in self.samples if s.converged)

    def objective_points(self, converged_only=True):
        return front_objective_points(self, converged_only)


def front_objective_points(front: ParetoFront, converged_only=True):
    """Objective vectors in path order, optionally converged samples only."""
    pts = [s.objectives for s in front.samples if s.converged or not converged_only]
    return [np.array(p) for p in pts]


def _solve_one(problem, g, params, cfg, warm):
    u0 = pi0 = nu0 = None
    if warm is not None:
        u0, pi0, nu0 = warm
    if problem.constraints is not None:
        return solve_constrained(problem.objective, problem.constraints, g, params, cfg,
                                 u0=u0, pi0=pi0, nu0=nu0)
    return solve(problem.objective, g, params, cfg, u0=u0, pi0=pi0)


def _default_cfg(problem):
    if problem.constraints is not None:
        return ConstrainedSolverConfig(mode=problem.solver_mode)
    return SolverConfig()


def sweep(
    problem,
    g=None,
    *,
    x=None,
    alpha=None,
    c=None,
    mu=None,
    path: Optional[TauPath] = None,
    n_samples: int = 100,
    cfg=None,
    warm_start: bool = True,
    reference=None,
    workers: int = 1,
) -> ParetoFront:
    """Run one solve per tau sample and assemble the front in path order.

    Non-converged samples are retained and flagged. When ``reference`` (a
    SampleCloud) is given, each converged sample records its duality-gap
    certificate and Bregman bound. ``workers > 1`` parallelizes cold-started
    sweeps; warm-started sweeps are inherently sequential.
    """
    g = g or problem.default_preference()
    x = problem.x if x is None else as_vector(x, problem.objective.dim_u, "x")
    alpha = problem.alpha if alpha is None else alpha
    c = problem.c if c is None else c
    mu = problem.mu if mu is None else mu
    if path is None:
        path = TauPath(problem.tau_start, problem.tau_end, n_samples)
    cfg = cfg or _default_cfg(problem)

    ts = path.parameters()
    taus = path.points()

    def make_params(tau):
        return HopfLaxParams(x=x, tau=tau, alpha=alpha, c=c, mu=mu)

    results = [None] * len(taus)
    if warm_start or workers <= 1:
        warm = None
        for i, tau in enumerate(taus):
            res = _solve_one(problem, g, make_params(tau), cfg, warm if warm_start else None)
            if warm_start and warm is not None and not res.converged:
                # a stale neighboring basin can wedge the merit descent;
                # retry from the default initialization
                retry = _solve_one(problem, g, make_params(tau), cfg, None)
                if retry.converged:
                    res = retry
            results[i] = res
            if warm_start and res.converged:
                warm = (res.u_star, res.pi_star, getattr(res, "nu_star", None))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_solve_one, problem, g, make_params(tau), cfg, None) for tau in taus
            ]
            results = [fut.result() for fut in futures]

    front = ParetoFront(problem_id=problem.id)
    for i, (t, tau, res) in enumerate(zip(ts, taus, results)):
        gap = bound = None
        if reference is not None and res.converged:
            gap, bound = gap_and_bound(problem.objective, g, res, make_params(tau), reference)
        front.samples.append(
            FrontSample(
                index=i,
                t=float(t),
                tau=np.array(tau),
                u=res.u_star,
                objectives=problem.objective.value(res.u_star),
                pi=res.pi_star,
                E=res.E_bar,
                p=res.p_bar,
                residual=res.residual_history[-1] if res.residual_history else np.inf,
                iterations=res.iterations,
                converged=res.converged,
                nu=getattr(res, "nu_star", None),
                merit=res.merit_history[-1] if res.merit_history else np.nan,
                gap=gap,
                bregman_bound=bound,
            )
        )
    return front
