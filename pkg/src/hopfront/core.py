"""Core types: vector objectives, preference scalarizers, quadratic regularization.

Everything here is immutable after construction and safe to share between
concurrent solver runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import wrightomega


class NondifferentiableError(ValueError):
    """Gradient requested at a kink; callers must use the prox path instead."""


class NumericalError(RuntimeError):
    """An iteration produced non-finite values or a linear solve failed."""


class CertificationError(RuntimeError):
    """A duality-gap certificate fell outside its admissible interval."""

    def __init__(self, message, gap, lower, upper):
        super().__init__(message)
        self.gap = gap
        self.lower = lower
        self.upper = upper


def as_vector(y, n=None, name="y"):
    """Coerce to a finite 1-D float array, optionally of fixed length."""
    if isinstance(y, np.ndarray) and y.dtype == np.float64 and y.ndim == 1:
        v = y
    else:
        v = np.atleast_1d(np.asarray(y, dtype=float))
        if v.ndim != 1:
            raise ValueError(f"{name} must be a vector, got shape {v.shape}")
    if n is not None and v.shape[0] != n:
        raise ValueError(f"{name} must have length {n}, got {v.shape[0]}")
    # summing propagates any nan/inf to the total
    if not math.isfinite(float(v.sum())):
        raise ValueError(f"{name} must be finite")
    return v


@dataclass(frozen=True, eq=False)
class VectorObjective:
    """Smooth map from decision vectors to objective vectors.

    ``fn`` maps ``(d,)`` arrays to ``(dim_obj,)`` arrays; when ``batched`` it
    must also accept ``(n, d)`` stacks and return ``(n, dim_obj)``. ``jac``
    returns the ``(dim_obj, d)`` Jacobian at a point; when omitted, central
    finite differences with step ``fd_step`` are used.
    """

    dim_u: int
    dim_obj: int
    fn: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-6
    batched: bool = False

    def value(self, u):
        u = as_vector(u, self.dim_u, "u")
        y = np.asarray(self.fn(u), dtype=float).reshape(self.dim_obj)
        if not np.all(np.isfinite(y)):
            raise NumericalError("objective returned non-finite values")
        return y

    def value_batch(self, U):
        U = np.asarray(U, dtype=float).reshape(-1, self.dim_u)
        if self.batched:
            return np.asarray(self.fn(U), dtype=float).reshape(U.shape[0], self.dim_obj)
        return np.stack([self.value(u) for u in U])

    def jacobian(self, u):
        u = as_vector(u, self.dim_u, "u")
        if self.jac is not None:
            return np.asarray(self.jac(u), dtype=float).reshape(self.dim_obj, self.dim_u)
        return self.fd_jacobian(u, self.fd_step)

    def fd_jacobian(self, u, h):
        """Central-difference Jacobian, also used as the audit reference."""
        u = as_vector(u, self.dim_u, "u")
        J = np.empty((self.dim_obj, self.dim_u))
        for i in range(self.dim_u):
            up = u.copy()
            dn = u.copy()
            up[i] += h
            dn[i] -= h
            # divide by the realized step so exactly linear maps audit to zero
            J[:, i] = (self.value(up) - self.value(dn)) / (up[i] - dn[i])
        return J


def jacobian_check(f: VectorObjective, u, h: float = 1e-6) -> float:
    """Max relative gap between the stored Jacobian and central differences.

    Relative to ``max(1, |entry|)`` so flat rows do not divide by zero.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    J = f.jacobian(u)
    Jfd = f.fd_jacobian(as_vector(u, f.dim_u, "u"), h)
    scale = np.maximum(1.0, np.abs(Jfd))
    return float(np.max(np.abs(J - Jfd) / scale))


class PreferenceFunction:
    """Monotone convex scalarizer with conjugate-prox calculus.

    Subclasses provide ``value``, ``gradient`` (where smooth), and
    ``prox_scaled`` (the prox of ``g/rho``). ``prox_conjugate`` follows from
    the Moreau identity and always lands in the domain of the conjugate.
    """

    dim_obj: int
    kind: str
    smooth: bool
    dual_domain_bounded: bool

    def value(self, y) -> float:
        raise NotImplementedError

    def value_batch(self, Y) -> np.ndarray:
        Y = np.asarray(Y, dtype=float).reshape(-1, self.dim_obj)
        return np.array([self.value(y) for y in Y])

    def gradient(self, y) -> np.ndarray:
        raise NotImplementedError

    def prox_scaled(self, v, rho: float) -> np.ndarray:
        """prox of g/rho at v."""
        raise NotImplementedError

    def prox_conjugate(self, v, rho: float) -> np.ndarray:
        """prox of rho*g^* at v, via prox_{rho g*}(v) = v - rho prox_{g/rho}(v/rho)."""
        if rho <= 0:
            raise ValueError("rho must be positive")
        v = as_vector(v, self.dim_obj, "v")
        return v - rho * self.prox_scaled(v / rho, rho)


def _entropic_weights(v, eps, rho, tol=1e-13, maxit=200):
    # Solves the stationarity system of prox_{g/rho} for the log-sum-exp g:
    # weights s_i satisfy eps*log(s_i) + s_i/rho = v_i - theta with sum(s) = 1.
    # Each s_i is a Wright-omega evaluation, leaving a monotone 1-D root-find
    # in the multiplier theta.
    base = v / eps - np.log(eps * rho)

    def weights(theta):
        return eps * rho * wrightomega(base - theta / eps)

    def h(theta):
        return float(np.sum(weights(theta))) - 1.0

    scale = max(1.0, float(np.max(np.abs(v))), eps)
    theta = float(np.max(v))
    step = max(1.0, eps)
    lo = hi = theta
    val = h(theta)
    while val > 0.0:
        lo = hi
        hi += step
        step *= 2.0
        val = h(hi)
        if step > 1e12 * scale:
            raise NumericalError("entropic prox bracketing failed (upper)")
    if hi == lo:
        step = max(1.0, eps)
        while h(lo) <= 0.0:
            hi = lo
            lo -= step
            step *= 2.0
            if step > 1e12 * scale:
                raise NumericalError("entropic prox bracketing failed (lower)")
    theta = 0.5 * (lo + hi)
    for _ in range(maxit):
        s = weights(theta)
        val = float(np.sum(s)) - 1.0
        if abs(val) <= tol:
            return s
        if val > 0.0:
            lo = theta
        else:
            hi = theta
        omega = s / (eps * rho)
        deriv = -rho * float(np.sum(omega / (1.0 + omega)))
        theta_new = theta - val / deriv if deriv != 0.0 else 0.5 * (lo + hi)
        if not (lo < theta_new < hi):
            theta_new = 0.5 * (lo + hi)
        if abs(theta_new - theta) <= 1e-16 * scale:
            return weights(theta_new)
        theta = theta_new
    raise NumericalError("entropic prox root-find did not converge")


class SoftMax(PreferenceFunction):
    """Entropic smooth maximum: eps * log(sum_i exp(y_i / eps))."""

    kind = "softmax"
    smooth = True
    dual_domain_bounded = True

    def __init__(self, eps: float, dim_obj: int):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.eps = float(eps)
        self.dim_obj = int(dim_obj)

    def value(self, y):
        y = as_vector(y, self.dim_obj)
        z = y / self.eps
        m = float(np.max(z))
        return self.eps * (m + float(np.log(np.sum(np.exp(z - m)))))

    def value_batch(self, Y):
        Y = np.asarray(Y, dtype=float).reshape(-1, self.dim_obj)
        z = Y / self.eps
        m = z.max(axis=1, keepdims=True)
        return self.eps * (m[:, 0] + np.log(np.exp(z - m).sum(axis=1)))

    def gradient(self, y):
        y = as_vector(y, self.dim_obj)
        z = (y - np.max(y)) / self.eps
        w = np.exp(z)
        return w / w.sum()

    def prox_scaled(self, v, rho):
        if rho <= 0:
            raise ValueError("rho must be positive")
        v = as_vector(v, self.dim_obj, "v")
        s = _entropic_weights(v, self.eps, rho)
        return v - s / rho


class WeightedSum(PreferenceFunction):
    """Linear scalarizer sum_i w_i y_i with strictly positive weights."""

    kind = "weighted_sum"
    smooth = True
    dual_domain_bounded = True

    def __init__(self, weights):
        w = as_vector(weights, name="weights")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        self.weights = w
        self.dim_obj = w.size

    def value(self, y):
        return float(self.weights @ as_vector(y, self.dim_obj))

    def value_batch(self, Y):
        Y = np.asarray(Y, dtype=float).reshape(-1, self.dim_obj)
        return Y @ self.weights

    def gradient(self, y):
        as_vector(y, self.dim_obj)
        return self.weights.copy()

    def prox_scaled(self, v, rho):
        if rho <= 0:
            raise ValueError("rho must be positive")
        return as_vector(v, self.dim_obj, "v") - self.weights / rho

    def prox_conjugate(self, v, rho):
        # The conjugate is the indicator of {weights}.
        if rho <= 0:
            raise ValueError("rho must be positive")
        as_vector(v, self.dim_obj, "v")
        return self.weights.copy()


def _project_weighted_simplex(v, a):
    # Euclidean projection onto {pi >= 0 : a . pi = 1} by exact breakpoint
    # search; pi = max(v - theta*a, 0).
    r = v / a
    order = np.argsort(-r)
    av = a * v
    aa = a * a
    cum_av = np.cumsum(av[order])
    cum_aa = np.cumsum(aa[order])
    r_sorted = r[order]
    n = v.size
    theta = None
    for k in range(n):
        t = (cum_av[k] - 1.0) / cum_aa[k]
        upper_ok = t < r_sorted[k]
        lower_ok = (k == n - 1) or (t >= r_sorted[k + 1])
        if upper_ok and lower_ok:
            theta = t
            break
    if theta is None:
        theta = (cum_av[-1] - 1.0) / cum_aa[-1]
    return np.maximum(v - theta * a, 0.0)


class Chebyshev(PreferenceFunction):
    """Weighted max scalarizer max_i w_i y_i."""

    kind = "chebyshev"
    smooth = False
    dual_domain_bounded = True

    def __init__(self, weights):
        w = as_vector(weights, name="weights")
        if np.any(w <= 0):
            raise ValueError("weights must be strictly positive")
        self.weights = w
        self.dim_obj = w.size

    def value(self, y):
        return float(np.max(self.weights * as_vector(y, self.dim_obj)))

    def value_batch(self, Y):
        Y = np.asarray(Y, dtype=float).reshape(-1, self.dim_obj)
        return (Y * self.weights).max(axis=1)

    def gradient(self, y):
        y = as_vector(y, self.dim_obj)
        scaled = self.weights * y
        top = np.flatnonzero(scaled == np.max(scaled))
        if top.size != 1:
            raise NondifferentiableError(
                "weighted max is tied at %d coordinates; use the prox path" % top.size
            )
        grad = np.zeros(self.dim_obj)
        grad[top[0]] = self.weights[top[0]]
        return grad

    def prox_conjugate(self, v, rho):
        # The conjugate is the indicator of {pi >= 0 : sum_i pi_i / w_i = 1},
        # so the prox is a rho-independent projection.
        if rho <= 0:
            raise ValueError("rho must be positive")
        v = as_vector(v, self.dim_obj, "v")
        return _project_weighted_simplex(v, 1.0 / self.weights)

    def prox_scaled(self, v, rho):
        if rho <= 0:
            raise ValueError("rho must be positive")
        v = as_vector(v, self.dim_obj, "v")
        return v - _project_weighted_simplex(rho * v, 1.0 / self.weights) / rho


@dataclass(frozen=True)
class QuadraticRegularizer:
    """R(u) = mu/2 ||u||^2 with mu > 0."""

    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")

    def value(self, u):
        u = np.asarray(u, dtype=float)
        return 0.5 * self.mu * float(u @ u)

    def gradient(self, u):
        return self.mu * np.asarray(u, dtype=float)

    def conjugate_gradient(self, p):
        """Gradient of the conjugate, i.e. the inverse gradient map p -> p/mu."""
        return np.asarray(p, dtype=float) / self.mu

    def bregman(self, u, v) -> float:
        diff = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
        return 0.5 * self.mu * float(diff @ diff)


def bregman_divergence(R: QuadraticRegularizer, u, v) -> float:
    """D_R(u, v) = R(u) - R(v) - <grad R(v), u - v>; nonnegative, zero iff u = v."""
    return R.bregman(u, v)


@dataclass(frozen=True, eq=False)
class HopfLaxParams:
    """Per-solve parameter bundle: state (x, tau), horizon weight alpha,
    quadratic terminal-cost weight c, and regularization strength mu."""

    x: np.ndarray
    tau: np.ndarray
    alpha: float
    c: float
    mu: float

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x, name="x"))
        object.__setattr__(self, "tau", as_vector(self.tau, name="tau"))
        for name in ("alpha", "c", "mu"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def dim_u(self):
        return self.x.shape[0]

    @property
    def dim_obj(self):
        return self.tau.shape[0]

    def dual_shift(self, pi):
        """E = c (tau + alpha pi)."""
        return self.c * (self.tau + self.alpha * np.asarray(pi, dtype=float))

    def dual_momentum(self, u):
        """p = c (x - alpha u)."""
        return self.c * (self.x - self.alpha * np.asarray(u, dtype=float))

    def regularizer(self) -> QuadraticRegularizer:
        return QuadraticRegularizer(self.mu)
