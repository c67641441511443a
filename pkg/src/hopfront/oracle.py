"""Brute-force references and front metrics.

Grid / Monte Carlo sampling, nondominated filtering, weighted-sum envelope
baselines, and set distances. These are the validation oracles the solver
results are checked against, so everything here is deliberately simple and
deterministic.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import as_vector


class Dominance(enum.Enum):
    NONE = "none"
    WEAK = "weak"
    STRICT = "strict"


def dominates(a, b) -> Dominance:
    """Dominance of a over b under coordinatewise minimization.

    STRICT: a_i < b_i for all i. WEAK: a <= b with at least one strict
    inequality (and not all strict). NONE otherwise.
    """
    a = as_vector(a, name="a")
    b = as_vector(b, name="b")
    if a.shape != b.shape:
        raise ValueError("length mismatch")
    if np.all(a < b):
        return Dominance.STRICT
    if np.all(a <= b) and np.any(a < b):
        return Dominance.WEAK
    return Dominance.NONE


@dataclass(frozen=True, eq=False)
class SampleCloud:
    """Aligned decision / objective samples with a provenance tag."""

    points_u: np.ndarray
    points_obj: np.ndarray
    source: str

    def __post_init__(self):
        if self.points_u.shape[0] != self.points_obj.shape[0]:
            raise ValueError("points_u and points_obj must be index-aligned")

    def __len__(self):
        return self.points_u.shape[0]


def _dominated_mask_2d(P, strong):
    # Lexicographic sort + running minima; exact, ties handled explicitly.
    n = P.shape[0]
    order = np.lexsort((P[:, 1], P[:, 0]))
    dominated = np.zeros(n, dtype=bool)
    best_strict = np.inf  # min f2 over points with strictly smaller f1
    i = 0
    while i < n:
        j = i
        while j < n and P[order[j], 0] == P[order[i], 0]:
            j += 1
        block = order[i:j]
        f2 = P[block, 1]
        if strong:
            # smaller f1 and f2 <= ours, or equal f1 and f2 strictly smaller
            running_min = np.minimum.accumulate(np.concatenate(([np.inf], f2[:-1])))
            dominated[block] = (f2 >= best_strict) | (f2 > running_min)
        else:
            dominated[block] = f2 > best_strict
        best_strict = min(best_strict, float(f2.min()))
        i = j
    return dominated


def _dominated_mask_general(P, strong, chunk=256):
    n = P.shape[0]
    dominated = np.zeros(n, dtype=bool)
    for start in range(0, n, chunk):
        block = P[start : start + chunk]  # (b, N)
        le = np.all(P[:, None, :] <= block[None, :, :], axis=2)
        lt = np.any(P[:, None, :] < block[None, :, :], axis=2)
        if strong:
            dom = le & lt
        else:
            dom = np.all(P[:, None, :] < block[None, :, :], axis=2)
        dominated[start : start + chunk] = dom.any(axis=0)
    return dominated


def nondominated_mask(points, mode="strong"):
    """Boolean keep-mask of the nondominated subset (exact comparisons)."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2:
        raise ValueError("points must be a 2-D array")
    if mode not in ("strong", "weak"):
        raise ValueError(f"unknown mode {mode!r}")
    if P.shape[0] == 0:
        raise ValueError("empty cloud")
    strong = mode == "strong"
    if P.shape[1] == 2:
        return ~_dominated_mask_2d(P, strong)
    return ~_dominated_mask_general(P, strong)


def greedy_pareto_filter(cloud: SampleCloud, mode="strong", epsilon=0.0) -> SampleCloud:
    """Extract the nondominated subset, preserving input order.

    ``epsilon > 0`` switches the strong mode to a sequential epsilon filter:
    a point is dropped when some already-kept point q satisfies
    q <= p + epsilon componentwise with q != p. With epsilon = 0 this is the
    exact filter (equal to the all-pairs brute force).
    """
    P = np.asarray(cloud.points_obj, dtype=float)
    if P.shape[0] == 0:
        raise ValueError("empty cloud")
    if epsilon > 0.0:
        if mode != "strong":
            raise ValueError("epsilon filtering is defined for strong mode")
        kept = []
        for i in range(P.shape[0]):
            p = P[i]
            drop = False
            for j in kept:
                q = P[j]
                if np.all(q <= p + epsilon) and not np.array_equal(q, p):
                    drop = True
                    break
            if not drop:
                kept.append(i)
        mask = np.zeros(P.shape[0], dtype=bool)
        mask[kept] = True
    else:
        mask = nondominated_mask(P, mode)
    return SampleCloud(
        points_u=cloud.points_u[mask],
        points_obj=cloud.points_obj[mask],
        source=cloud.source + f"|filtered({mode})",
    )


def _feasible_mask(problem, U):
    if problem.constraints is None:
        return np.ones(U.shape[0], dtype=bool)
    tol = problem.constraints.membership_tol
    K = problem.constraints.value_batch(U)
    return K.min(axis=1) >= -tol


def sample_cloud(problem, grid=None, mc=None, seed=0, enrich=0) -> SampleCloud:
    """Raw feasible samples of a problem (no filtering).

    Exactly one of ``grid`` (per-axis resolution, 2-D box problems only) or
    ``mc`` (feasible sample count, rejection-sampled from the bounding box)
    must be given. ``enrich`` appends that many extra samples from the
    problem's known optimal manifold when the problem declares one; this only
    sharpens minima estimates, never biases them.
    """
    if (grid is None) == (mc is None):
        raise ValueError("specify exactly one of grid= or mc=")
    lo, hi = problem.feasible_box
    d = problem.objective.dim_u
    if grid is not None:
        if grid < 2:
            raise ValueError("grid resolution must be >= 2")
        if d != 2:
            raise ValueError("grid sampling is supported for 2-D problems only")
        axes = [np.linspace(lo[i], hi[i], grid) for i in range(d)]
        G = np.meshgrid(*axes, indexing="ij")
        U = np.stack([g.ravel() for g in G], axis=1)
        U = U[_feasible_mask(problem, U)]
        source = f"grid({grid})"
    else:
        if mc <= 0:
            raise ValueError("empty reference: mc must be positive")
        rng = np.random.default_rng(seed)
        chunks = []
        total = 0
        attempts = 0
        while total < mc:
            draw = rng.uniform(lo, hi, size=(max(mc, 1024), d))
            keep = draw[_feasible_mask(problem, draw)]
            chunks.append(keep)
            total += keep.shape[0]
            attempts += 1
            if attempts > 1000:
                raise ValueError("empty reference: rejection sampling failed")
        U = np.concatenate(chunks)[:mc]
        source = f"monte_carlo({mc},seed={seed})"
    if enrich and problem.optimal_manifold is not None:
        extra = problem.optimal_manifold(enrich)
        U = np.concatenate([U, extra])
        source += f"|enriched({extra.shape[0]})"
    Y = problem.objective.value_batch(U)
    return SampleCloud(points_u=U, points_obj=Y, source=source)


def reference_front(problem, grid=None, mc=None, seed=0) -> SampleCloud:
    """Brute-force reference front: sample feasibly, evaluate, filter (strong)."""
    cloud = sample_cloud(problem, grid=grid, mc=mc, seed=seed)
    return greedy_pareto_filter(cloud, mode="strong")


def certification_cloud(problem, mc=20000, seed=0, enrich=20000) -> SampleCloud:
    """Feasible cloud for duality-gap certificates.

    Monte Carlo base plus optimal-manifold enrichment where the problem
    provides one, so the sampled minimum of shifted scalarizations tracks the
    true minimum tightly. For box problems on a 2-D grid the plain grid is
    already adequate; this helper targets the sampled cases.
    """
    return sample_cloud(problem, mc=mc, seed=seed, enrich=enrich)


def _projected_descent(grad_fn, val_fn, u0, project, maxit=200, tol=1e-9):
    u = project(np.array(u0, dtype=float))
    fu = val_fn(u)
    for _ in range(maxit):
        g = grad_fn(u)
        t = 1.0
        moved = False
        for _ in range(40):
            cand = project(u - t * g)
            fc = val_fn(cand)
            if fc <= fu + 1e-4 * float(g @ (cand - u)):
                if np.linalg.norm(cand - u) <= tol:
                    return cand
                u, fu = cand, fc
                moved = True
                break
            t *= 0.5
        if not moved:
            return u
    return u


def convex_envelope_front(problem, n_weights=16, starts=16, seed=0, base_cloud=None):
    """Weighted-sum baseline: minimize w . ell(u) over the feasible set for a
    spread of weights; returns the nondominated set of the resulting points.

    Nonconvex landscapes need multiple starts, seeded from the best cloud
    samples per weight. Recovers only the convex envelope of the front.
    """
    if n_weights < 2:
        raise ValueError("n_weights must be >= 2")
    f = problem.objective
    N = f.dim_obj
    if base_cloud is None:
        base_cloud = sample_cloud(problem, mc=4000, seed=seed)
    U, Y = base_cloud.points_u, base_cloud.points_obj

    if N == 1:
        best = int(np.argmin(Y[:, 0]))
        return SampleCloud(U[best : best + 1], Y[best : best + 1], "envelope(min)")

    if N == 2:
        ts = np.linspace(0.0, 1.0, n_weights)
        W = np.stack([ts, 1.0 - ts], axis=1)
    else:
        rng = np.random.default_rng(seed)
        W = np.concatenate([np.eye(N), rng.dirichlet(np.ones(N), size=max(0, n_weights - N))])
    W = np.maximum(W, 1e-12)

    project = problem.projector()
    sols_u, sols_y = [], []
    for w in W:
        scores = Y @ w
        seed_idx = np.argsort(scores)[:starts]
        best_u, best_val = None, np.inf
        for i in seed_idx:
            u = _projected_descent(
                lambda u: f.jacobian(u).T @ w,
                lambda u: float(f.value(u) @ w),
                U[i],
                project,
            )
            val = float(f.value(u) @ w)
            if val < best_val:
                best_u, best_val = u, val
        sols_u.append(best_u)
        sols_y.append(f.value(best_u))
    cloud = SampleCloud(np.stack(sols_u), np.stack(sols_y), f"envelope({n_weights})")
    return greedy_pareto_filter(cloud, mode="strong")


def front_distance(A, B):
    """(forward, backward, hausdorff) distances between two point sets.

    forward = max over a in A of the distance from a to B.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.size == 0 or B.size == 0:
        raise ValueError("front_distance requires nonempty inputs")
    A = A.reshape(A.shape[0], -1)
    B = B.reshape(B.shape[0], -1)
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    forward = float(np.sqrt(d2.min(axis=1)).max())
    backward = float(np.sqrt(d2.min(axis=0)).max())
    return forward, backward, max(forward, backward)


def nonconvexity_witness(front, envelope, margin, tol=1e-9) -> int:
    """Count front points sitting on a genuine nonconvex bulge.

    A planar front point witnesses nonconvexity when it is nondominated
    within the front, at least ``margin`` away from every envelope point, and
    not dominated by any envelope point beyond ``tol``.
    """
    front = np.asarray(front, dtype=float)
    if front.size == 0:
        return 0
    front = front.reshape(front.shape[0], -1)
    envelope = np.asarray(envelope, dtype=float).reshape(-1, front.shape[1])
    if front.shape[1] != 2:
        raise ValueError("witness is defined for two objectives")
    keep = nondominated_mask(front, "strong")
    count = 0
    for p in front[keep]:
        dists = np.sqrt(((envelope - p) ** 2).sum(axis=1))
        if dists.min() < margin:
            continue
        le = np.all(envelope <= p + tol, axis=1)
        lt = np.any(envelope < p - tol, axis=1)
        if np.any(le & lt):
            continue
        count += 1
    return count
