"""Primal-dual solver for the unconstrained optimality system.

One outer iteration alternates a dual step on the scalarization weights pi
with damped Levenberg-Marquardt refinement of the stationarity residual in u.
A merit function measuring violation of the full optimality system drives an
optional backtracking safeguard on the damping parameter, which keeps the
recorded merit values non-increasing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .core import (
    CertificationError,
    NumericalError,
    as_vector,
)


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 0.5
    eta: float = 1.0
    eps: float = 1e-5
    maxit_outer: int = 100
    maxit_inner: int = 50
    safeguard: bool = True
    backtrack_factor: float = 0.5
    max_backtracks: int = 20
    dual_via_prox: bool = False

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError("eta must lie in (0, 1]")
        if self.eps <= 0 or self.rho <= 0:
            raise ValueError("eps and rho must be positive")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.maxit_outer < 1 or self.maxit_inner < 1 or self.max_backtracks < 0:
            raise ValueError("iteration limits must be positive")


@dataclass(eq=False)
class SolveResult:
    u_star: np.ndarray
    pi_star: np.ndarray
    p_bar: np.ndarray
    E_bar: np.ndarray
    iterations: int
    converged: bool
    residual_history: List[float] = field(default_factory=list)
    merit_history: List[float] = field(default_factory=list)
    gap_certificate: Optional[float] = None


def dual_update_pi(f, g, u, pi, params, rho, force_prox=False):
    """One dual step: returns (pi_next, E) with E = c (tau + alpha pi).

    Differentiable scalarizers take the gradient shortcut
    pi_next = grad g(ell(u) + E); otherwise a proximal step on the conjugate.
    """
    E = params.dual_shift(pi)
    y = f.value(u) + E
    if g.smooth and not force_prox:
        pi_next = g.gradient(y)
    else:
        pi_next = g.prox_conjugate(np.asarray(pi, dtype=float) + rho * y, rho)
    return pi_next, E


def stationarity_residual(f, u, pi, params):
    """Jac[ell](u)^T pi + mu u - c (x - alpha u)."""
    u = as_vector(u, f.dim_u, "u")
    return f.jacobian(u).T @ np.asarray(pi, dtype=float) + params.mu * u - params.dual_momentum(u)


def lm_matrix(f, u, params, jac=None):
    """(mu + alpha c) I + J^T J; positive definite for any u."""
    J = f.jacobian(u) if jac is None else jac
    return (params.mu + params.alpha * params.c) * np.eye(f.dim_u) + J.T @ J


def spd_solve(B, r):
    try:
        return cho_solve(cho_factor(B, lower=True), r)
    except LinAlgError as exc:  # pragma: no cover - B is SPD by construction
        raise NumericalError(f"preconditioner factorization failed: {exc}") from exc


def primal_update_u(f, u, pi_next, params, eta):
    """One damped Levenberg-Marquardt step on the stationarity residual.

    Returns (u_next, residual_norm) where the norm is taken at the input u.
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError("eta must lie in (0, 1]")
    u = as_vector(u, f.dim_u, "u")
    J = f.jacobian(u)
    r = J.T @ np.asarray(pi_next, dtype=float) + params.mu * u - params.dual_momentum(u)
    B = lm_matrix(f, u, params, jac=J)
    s = spd_solve(B, r)
    return u - eta * s, float(np.linalg.norm(r))


def merit_psi(f, g, u, pi, params, rho) -> float:
    """Violation of the optimality system; zero exactly at its solutions.

    First block: squared stationarity residual in the inverse-preconditioner
    norm. Second block: squared fixed-point displacement of the dual prox.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    u = as_vector(u, f.dim_u, "u")
    pi = as_vector(pi, f.dim_obj, "pi")
    r = stationarity_residual(f, u, pi, params)
    B = lm_matrix(f, u, params)
    term1 = 0.5 * float(r @ spd_solve(B, r))
    E = params.dual_shift(pi)
    disp = g.prox_conjugate(pi + rho * (f.value(u) + E), rho) - pi
    term2 = float(disp @ disp) / (2.0 * rho * rho)
    return term1 + term2


def solve(f, g, params, cfg=None, u0=None, pi0=None) -> SolveResult:
    """Run the primal-dual iteration from u0 = x / max(alpha, 1), pi0 = 0.

    Stops when the stationarity residual, the dual displacement, and the
    merit target are all below tolerance. Non-convergence within
    ``maxit_outer`` is reported through ``converged=False``, not an
    exception; non-finite iterates raise NumericalError.
    """
    from .constrained import run_primal_dual

    cfg = cfg or SolverConfig()
    if f.dim_obj != g.dim_obj or params.dim_u != f.dim_u or params.dim_obj != f.dim_obj:
        raise ValueError("dimension mismatch between objective, scalarizer, and params")
    state = run_primal_dual(f, g, params, cfg, constraints=None, u0=u0, pi0=pi0)
    return SolveResult(
        u_star=state.u,
        pi_star=state.pi,
        p_bar=params.dual_momentum(state.u),
        E_bar=params.dual_shift(state.pi),
        iterations=state.iterations,
        converged=state.converged,
        residual_history=state.residual_history,
        merit_history=state.merit_history,
    )


def gap_and_bound(f, g, result, params, cloud):
    """Duality-gap sample and its admissible upper bound.

    gap = g(ell(u*) + E) - min over the cloud of g(ell(u) + E); the bound is
    the Bregman divergence between u* and the regularizer's dual point p/mu.
    """
    E = result.E_bar
    value_at_star = g.value(f.value(result.u_star) + E)
    m_hat = float(np.min(g.value_batch(cloud.points_obj + E)))
    gap = value_at_star - m_hat
    R = params.regularizer()
    bound = R.bregman(result.u_star, R.conjugate_gradient(result.p_bar))
    return gap, bound


def certify_gap(f, g, result, params, cloud, tol=1e-6) -> float:
    """Check 0 <= gap <= Bregman bound (within tol) against a sampled oracle.

    Raises CertificationError carrying both sides when violated.
    """
    if not result.converged:
        raise ValueError("certification requires a converged result")
    gap, bound = gap_and_bound(f, g, result, params, cloud)
    if not (-tol <= gap <= bound + tol):
        raise CertificationError(
            f"gap certificate violated: gap={gap:.3e} outside [{-tol:.1e}, {bound + tol:.3e}]",
            gap=gap,
            lower=-tol,
            upper=bound + tol,
        )
    result.gap_certificate = gap
    return gap
