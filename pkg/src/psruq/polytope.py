"""Optimization over the convex hull of a finite vertex list.

Points of the hull are parameterized by weight vectors ``w`` on the
``V``-simplex, mapped to ``w @ vertices``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, linprog

from .scoring import ScoringRule, SphericalRule, ZeroOneRule

MAX_GRID_POINTS = 10**8


class ConvergenceError(RuntimeError):
    """The optimizer stopped before certifying its tolerance."""

    def __init__(self, message: str, result: "OptResult"):
        super().__init__(message)
        self.result = result


class GridTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class OptConfig:
    tol: float = 1e-8
    stall_tol: float = 1e-6
    max_iter: int = 10_000
    n_starts: int = 16
    ascent_iter: int = 5_000
    seed: int = 0
    refine: bool = True
    corrective_every: int = 50


@dataclass(frozen=True)
class OptResult:
    value: float
    argpoint: np.ndarray
    weights: np.ndarray
    status: str  # "converged" | "max-iter" | "stalled" | "vertex-exact"
    gap_bound: float = 0.0
    partner: np.ndarray | None = None
    partner_weights: np.ndarray | None = None
    iterations: int = 0
    trace: tuple = field(default=(), repr=False)


def hull_vertices(hull) -> np.ndarray:
    return np.asarray(getattr(hull, "vertices", hull), dtype=float)


def _unit(v: int, i: int) -> np.ndarray:
    e = np.zeros(v)
    e[i] = 1.0
    return e


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(y - css[rho] / (rho + 1.0), 0.0)


def minimize_over_vertices(objective: Callable, hull) -> OptResult:
    """Exact minimum for concave objectives; lowest vertex index wins ties."""
    verts = hull_vertices(hull)
    values = np.array([float(objective(v)) for v in verts])
    i = int(np.argmin(values))
    return OptResult(float(values[i]), verts[i], _unit(len(verts), i), "vertex-exact")


def _corrective(objective, gradient, verts, w, iters: int = 200):
    """Re-optimize the weights of the active vertices (fully corrective step).

    Projected gradient ascent on the active face with Barzilai-Borwein steps
    and backtracking, so every accepted step increases the objective.
    """
    active = np.flatnonzero(w > 0.0)
    if len(active) < 2:
        return w
    sub = verts[active]
    x = w[active].copy()
    fx = float(objective(x @ sub))
    gx = sub @ gradient(x @ sub)
    step = 1.0
    for _ in range(iters):
        while step > 1e-16:
            y = project_simplex(x + step * gx)
            fy = float(objective(y @ sub))
            if fy > fx:
                break
            step *= 0.5
        else:
            break
        gy = sub @ gradient(y @ sub)
        dx, dg = y - x, gy - gx
        curv = float(-(dx @ dg))
        step = float(dx @ dx) / curv if curv > 0.0 else 2.0 * step
        x, fx, gx = y, fy, gy
    out = np.zeros_like(w)
    out[active] = x / x.sum()
    return out


def maximize_concave_over_hull(
    objective: Callable, gradient: Callable, hull, config: OptConfig = OptConfig()
) -> OptResult:
    """Pairwise Frank-Wolfe ascent with exact line search.

    Each step moves weight from the worst active vertex (away direction) to
    the best vertex of the linearization.  ``gap_bound`` is the Frank-Wolfe
    duality gap, an upper bound on ``max - value`` for concave objectives.
    """
    verts = hull_vertices(hull)
    n = len(verts)
    if n == 1:
        return OptResult(float(objective(verts[0])), verts[0], np.ones(1), "vertex-exact")

    w = np.full(n, 1.0 / n)
    theta = w @ verts
    value = float(objective(theta))
    if not math.isfinite(value):
        raise ValueError("objective is not finite at the hull barycenter")
    trace = [value]
    status, gap = "max-iter", math.inf
    it = 0
    for it in range(1, config.max_iter + 1):
        slopes = verts @ gradient(theta)
        s = int(np.argmax(slopes))
        active = np.flatnonzero(w > 0.0)
        a = int(active[np.argmin(slopes[active])])
        gap = float(slopes[s] - slopes @ w)
        if gap <= config.tol:
            status = "converged"
            break
        delta = verts[s] - verts[a]
        step_max = w[a]

        def slope_at(t):
            return float(gradient(theta + t * delta) @ delta)

        if slope_at(step_max) >= 0.0:
            t = step_max
        else:
            t = brentq(slope_at, 0.0, step_max, xtol=1e-16, rtol=4 * np.finfo(float).eps)
        w_new = w.copy()
        w_new[s] += t
        w_new[a] = 0.0 if t >= step_max else w_new[a] - t
        theta_new = w_new @ verts
        value_new = float(objective(theta_new))
        if not math.isfinite(value_new):
            raise ValueError("objective is not finite at a feasible point")
        stalled = value_new < value
        if not stalled:
            w, theta, value = w_new, theta_new, value_new
        if stalled or (config.corrective_every and it % config.corrective_every == 0):
            w_fc = _corrective(objective, gradient, verts, w)
            theta_fc = w_fc @ verts
            value_fc = float(objective(theta_fc))
            if value_fc > value:
                w, theta, value, stalled = w_fc, theta_fc, value_fc, False
        if stalled:
            # rounding floor reached; the gap still bounds the shortfall
            status = "converged" if gap <= config.stall_tol else "stalled"
            break
        trace.append(value)
    return OptResult(value, theta, w, status, max(gap, 0.0), iterations=it, trace=tuple(trace))


def minimize_max_coordinate(hull) -> OptResult:
    """Solve ``min_{theta in hull} max_k theta_k`` as a linear program."""
    verts = hull_vertices(hull)
    n, k = verts.shape
    c = np.zeros(n + 1)
    c[-1] = 1.0
    a_ub = np.hstack([verts.T, -np.ones((k, 1))])
    a_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(k), A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"linear program failed: {res.message}")
    w = np.maximum(res.x[:n], 0.0)
    w /= w.sum()
    theta = w @ verts
    return OptResult(float(theta.max()), theta, w, "converged", 0.0)


def argmax_attainable(hull, j: int, margin: float = 1e-12) -> bool:
    """Whether some hull point has ``j`` as its (lowest-index) argmax.

    Checks ``theta_j >= theta_k`` for ``k > j`` and ``theta_j > theta_k`` for
    ``k < j`` by maximizing the strict slack with a linear program.
    """
    verts = hull_vertices(hull)
    n, k = verts.shape
    tops = np.argmax(verts, axis=1)
    if np.any(tops == j):
        return True
    # variables: w (n), slack s; maximize s
    rows, rhs = [], []
    for other in range(k):
        if other == j:
            continue
        diff = verts[:, other] - verts[:, j]  # theta_other - theta_j
        rows.append(np.append(diff, 1.0 if other < j else 0.0))
        rhs.append(0.0)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_eq = np.append(np.ones(n), 0.0)[None, :]
    res = linprog(c, A_ub=np.array(rows), b_ub=rhs, A_eq=a_eq, b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, 1.0)], method="highs")
    if not res.success:
        return False
    return j == 0 or -res.fun > margin


def _spherical_grad(p: np.ndarray, q: np.ndarray):
    np_, nq = np.linalg.norm(p), np.linalg.norm(q)
    dot = p @ q
    return -q / np_ + dot * p / np_**3, q / nq - p / np_


def _ascend_pair(rule: ScoringRule, verts: np.ndarray, w1, w2, iters: int):
    """Projected gradient ascent on ``D(w1 @ V, w2 @ V)`` with step halving."""
    value = float(rule.divergence(w1 @ verts, w2 @ verts))
    step = 1.0
    for _ in range(iters):
        gp, gq = _spherical_grad(w1 @ verts, w2 @ verts)
        while step > 1e-14:
            c1 = project_simplex(w1 + step * (verts @ gp))
            c2 = project_simplex(w2 + step * (verts @ gq))
            cand = float(rule.divergence(c1 @ verts, c2 @ verts))
            if cand > value:
                w1, w2, value = c1, c2, cand
                step *= 2.0
                break
            step *= 0.5
        else:
            break
    return value, w1, w2


def maximize_divergence_pairs(rule: ScoringRule, hull, config: OptConfig = OptConfig()) -> OptResult:
    """``max D(pred, truth)`` over ordered pairs of hull points.

    Every ordered vertex pair is scored first.  For fixed ``pred`` any proper
    divergence is convex in ``truth``; for log, Brier and spherical it is
    also quasi-convex in ``pred``, so the vertex pairs are exact.  Zero-one
    adds every class attainable as an argmax somewhere in the hull.
    Spherical additionally runs seeded multi-start ascent as a cross-check.
    """
    verts = hull_vertices(hull)
    n = len(verts)
    div = rule.pairwise_divergence(verts, verts)
    same = np.array([[np.array_equal(a, b) for b in verts] for a in verts])
    div[same] = 0.0
    flat = int(np.argmax(div))
    i, j = divmod(flat, n)
    best = float(div[i, j])
    result = OptResult(best, verts[i], _unit(n, i), "vertex-exact",
                       partner=verts[j], partner_weights=_unit(n, j))
    if math.isinf(best) or n == 1:
        return result

    if isinstance(rule, ZeroOneRule):
        gains = verts.max(axis=1)[:, None] - verts  # gains[v, c] = max v - v_c
        for cls in range(verts.shape[1]):
            if not argmax_attainable(verts, cls):
                continue
            v = int(np.argmax(gains[:, cls]))
            if gains[v, cls] > best:
                best = float(gains[v, cls])
                w = _argmax_witness(verts, cls)
                result = OptResult(best, w @ verts, w, "vertex-exact",
                                   partner=verts[v], partner_weights=_unit(n, v))

    if isinstance(rule, SphericalRule) and config.refine:
        rng = np.random.default_rng(config.seed)
        for _ in range(config.n_starts):
            w1, w2 = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
            value, w1, w2 = _ascend_pair(rule, verts, w1, w2, config.ascent_iter)
            if value > best + 1e-12:
                best = value
                result = OptResult(best, w1 @ verts, w1, "converged",
                                   partner=w2 @ verts, partner_weights=w2)
    return result


def _argmax_witness(verts: np.ndarray, cls: int) -> np.ndarray:
    """Weights of a hull point whose argmax is ``cls``."""
    n, k = verts.shape
    rows = [np.append(verts[:, o] - verts[:, cls], 1.0 if o < cls else 0.0) for o in range(k) if o != cls]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.zeros(len(rows)),
                  A_eq=np.append(np.ones(n), 0.0)[None, :], b_eq=[1.0],
                  bounds=[(0, None)] * n + [(None, 1.0)], method="highs")
    w = np.maximum(res.x[:n], 0.0)
    return w / w.sum()


def simplex_grid(v: int, step: float) -> np.ndarray:
    """All weight vectors on the ``v``-simplex with coordinates in ``step`` units."""
    n = round(1.0 / step)
    if n < 1 or abs(n * step - 1.0) > 1e-9:
        raise ValueError(f"step must divide 1 evenly, got {step}")
    if v == 1:
        return np.ones((1, 1))
    bars = np.array(list(itertools.combinations(range(n + v - 1), v - 1)))
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), n + v - 1)])
    return (np.diff(edges, axis=1) - 1) / n


def grid_size(v: int, step: float) -> int:
    return math.comb(round(1.0 / step) + v - 1, v - 1)


def grid_oracle(
    objective: Callable,
    hull,
    step: float = 0.01,
    pair: bool = False,
    maximize: bool = True,
    inner: str = "grid",
    block: int = 256,
) -> float:
    """Brute-force extremum of ``objective`` over a regular grid of hull points.

    ``objective`` must accept a stacked ``(N, K)`` array.  With ``pair=True``
    it is called as ``objective(preds, truths)`` on blocks of grid points and
    must return the ``(len(preds), len(truths))`` matrix of values, as
    :meth:`ScoringRule.pairwise_divergence` does.  ``inner="vertices"``
    restricts the truths to the vertices, which is exact for any objective
    convex in its second argument.
    """
    if not 0.0 < step <= 0.5:
        raise ValueError("step must lie in (0, 0.5]")
    verts = hull_vertices(hull)
    n = len(verts)
    outer = grid_size(n, step)
    if pair:
        cost = outer * (n if inner == "vertices" else outer)
    else:
        cost = outer
    if cost > MAX_GRID_POINTS:
        raise GridTooLargeError(f"grid would need {cost} evaluations (limit {MAX_GRID_POINTS})")
    points = simplex_grid(n, step) @ verts
    reduce = np.max if maximize else np.min
    if not pair:
        return float(reduce(objective(points)))
    truths = verts if inner == "vertices" else points
    best = -math.inf if maximize else math.inf
    for start in range(0, len(points), block):
        vals = objective(points[start:start + block], truths)
        chunk = float(reduce(vals))
        best = max(best, chunk) if maximize else min(best, chunk)
    return best
