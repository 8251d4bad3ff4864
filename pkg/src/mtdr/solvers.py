"""Solvers for the two convex subproblems of the alternating fit.

Map updates reduce to weighted isotonic regression with box constraints,
solved exactly by pool-adjacent-violators followed by clipping.  Weight
updates are least squares over the probability simplex, solved by an
accelerated projected gradient method with adaptive restart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantile_core import _readonly

__all__ = [
    "IsotonicProblem",
    "SimplexLSProblem",
    "SimplexWeights",
    "weighted_isotonic",
    "simplex_project",
    "simplex_least_squares",
]


@dataclass(frozen=True, eq=False)
class IsotonicProblem:
    """Weighted isotonic regression with box constraints.

    minimize sum_r weights[r] (z_r - targets[r])^2
    subject to z nondecreasing and lo <= z_r <= hi.

    Weights may be zero (those coordinates are free) but not all of them.
    """

    targets: np.ndarray
    weights: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        y = _readonly(np.atleast_1d(self.targets))
        w = _readonly(np.atleast_1d(self.weights))
        object.__setattr__(self, "targets", y)
        object.__setattr__(self, "weights", w)
        if y.size != w.size or y.size == 0:
            raise ValueError("targets and weights must share a positive length")
        if not np.all(np.isfinite(y)):
            raise ValueError("targets must be finite")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValueError("weights must be finite and nonnegative")
        if not np.any(w > 0.0):
            raise ValueError("at least one weight must be positive")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.lo < self.hi):
            raise ValueError("box requires finite lo < hi")


def _pava(y: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Pool adjacent violators for strictly positive weights.

    Maintains a stack of blocks holding weighted means; merging two blocks
    replaces them by their combined weighted mean.  Runs in linear time.
    """
    n = y.size
    means = np.empty(n)
    wsum = np.empty(n)
    count = np.empty(n, dtype=np.intp)
    top = -1
    for i in range(n):
        top += 1
        means[top] = y[i]
        wsum[top] = w[i]
        count[top] = 1
        while top > 0 and means[top - 1] > means[top]:
            tw = wsum[top - 1] + wsum[top]
            means[top - 1] = (wsum[top - 1] * means[top - 1] + wsum[top] * means[top]) / tw
            wsum[top - 1] = tw
            count[top - 1] += count[top]
            top -= 1
    return np.repeat(means[: top + 1], count[: top + 1])


def weighted_isotonic(prob: IsotonicProblem) -> np.ndarray:
    """Exact solution of a weighted isotonic problem with box constraints.

    Zero-weight coordinates do not constrain the fit; they inherit the value
    of the nearest positive-weight block to the left (or the first block).
    Clipping the unconstrained isotonic solution into the box is exact
    because the objective is separable and the box is an interval.
    """
    y, w = prob.targets, prob.weights
    pos = w > 0.0
    z = np.empty_like(y)
    z[pos] = _pava(y[pos], w[pos])
    if not np.all(pos):
        idx = np.where(pos, np.arange(y.size), -1)
        idx = np.maximum.accumulate(idx)
        idx[idx < 0] = int(np.argmax(pos))
        z = z[idx]
    return np.clip(z, prob.lo, prob.hi)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Projection core without input validation (hot path).

    Sort-and-threshold: find the largest k such that shifting the top k
    coordinates by a common offset lands on the simplex, then clip.  Small
    vectors take a plain-Python route to dodge array overhead.
    """
    n = v.size
    if n <= 8:
        u = sorted(v.tolist(), reverse=True)
        css = 0.0
        tau = 0.0
        for i, ui in enumerate(u):
            css += ui
            offset = (1.0 - css) / (i + 1.0)
            if ui + offset > 0.0:
                tau = offset
        return np.maximum(v + tau, 0.0)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, n + 1)
    rho = np.nonzero(u + (1.0 - css) / k > 0.0)[0][-1]
    tau = (1.0 - css[rho]) / (rho + 1.0)
    return np.maximum(v + tau, 0.0)


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("projection expects a nonempty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("projection expects finite entries")
    return _project_simplex(v)


@dataclass(frozen=True, eq=False)
class SimplexLSProblem:
    """Least squares over the simplex in normal-equation form.

    minimize a' gram a - 2 lin' a  subject to a in the probability simplex.
    gram must be symmetric positive semidefinite.
    """

    gram: np.ndarray
    lin: np.ndarray

    def __post_init__(self):
        G = _readonly(np.atleast_2d(self.gram))
        c = _readonly(np.atleast_1d(self.lin))
        object.__setattr__(self, "gram", G)
        object.__setattr__(self, "lin", c)
        n = c.size
        if G.shape != (n, n) or n == 0:
            raise ValueError("gram must be square and match lin")
        if not (np.all(np.isfinite(G)) and np.all(np.isfinite(c))):
            raise ValueError("gram and lin must be finite")
        scale = max(float(np.abs(G).max()), 1.0)
        if np.abs(G - G.T).max() > 1e-10 * scale:
            raise ValueError("gram must be symmetric")
        if n <= 16 and np.linalg.eigvalsh(G).min() < -1e-10 * scale:
            raise ValueError("gram must be positive semidefinite")


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    """A point of the probability simplex."""

    values: np.ndarray

    def __post_init__(self):
        a = _readonly(np.atleast_1d(self.values))
        object.__setattr__(self, "values", a)
        if a.size == 0:
            raise ValueError("weights must be nonempty")
        if not np.all(np.isfinite(a)):
            raise ValueError("weights must be finite")
        if np.any(a < 0.0) or abs(a.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to one")

    @classmethod
    def of(cls, values) -> "SimplexWeights":
        """Build from near-simplex input, renormalizing tiny float drift."""
        a = np.asarray(values, dtype=float)
        if a.size == 0 or not np.all(np.isfinite(a)) or np.any(a < 0.0):
            raise ValueError("weights must be finite and nonnegative")
        s = a.sum()
        if abs(s - 1.0) > 1e-6:
            raise ValueError("weights must sum to one")
        return cls(a / s)

    @property
    def size(self) -> int:
        return self.values.size


def _largest_eigenvalue(G: np.ndarray) -> float:
    """Power iteration estimate of the top eigenvalue of a PSD matrix."""
    n = G.shape[0]
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(500):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        new = float(v @ (G @ v))
        if abs(new - lam) <= 1e-13 * max(abs(new), 1.0):
            return new
        lam = new
    return lam


def _active_set_candidate(G: np.ndarray, c: np.ndarray):
    """Near-exact simplex least squares by support enumeration, or None.

    For each candidate support solve the equality-constrained stationarity
    system and keep primal feasible points, preferring those that also pass
    the dual feasibility certificate; return the kept point with the
    smallest objective.  On well-conditioned problems the certified winner
    is the exact solution; on nearly singular ones the best uncertified
    point is still a good warm start for the projected-gradient polish.
    Affordable because the weight vectors here are short.
    """
    n = c.size
    if n > 12:
        return None
    scale = max(float(np.abs(G).max()), float(np.abs(c).max()), 1.0)
    feas_tol = 1e-9 * scale
    best = {True: None, False: None}
    best_obj = {True: np.inf, False: np.inf}
    for mask in range(1, 1 << n):
        support = [j for j in range(n) if mask >> j & 1]
        k = len(support)
        sys_mat = np.empty((k + 1, k + 1))
        sys_mat[:k, :k] = 2.0 * G[np.ix_(support, support)]
        sys_mat[:k, k] = 1.0
        sys_mat[k, :k] = 1.0
        sys_mat[k, k] = 0.0
        rhs = np.concatenate((2.0 * c[support], [1.0]))
        try:
            sol = np.linalg.solve(sys_mat, rhs)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(sol)):
            continue
        a_s, lam = sol[:k], sol[k]
        if a_s.min() < -feas_tol:
            continue
        a = np.zeros(n)
        a[support] = np.maximum(a_s, 0.0)
        a /= a.sum()
        grad = 2.0 * (G @ a - c)
        certified = not np.any(grad + lam < -feas_tol)
        obj = float(a @ (G @ a) - 2.0 * (c @ a))
        if obj < best_obj[certified]:
            best[certified], best_obj[certified] = a, obj
    return best[True] if best[True] is not None else best[False]


def simplex_least_squares(
    prob: SimplexLSProblem,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    x0=None,
) -> SimplexWeights:
    """Minimize a' G a - 2 c' a over the simplex by accelerated projection.

    Uses step 1/L with L the top eigenvalue of G (power iteration), momentum
    with restart whenever the objective would increase, and stops once the
    projected-gradient norm falls below tol times the problem scale (the
    largest magnitude in G and c, floored at one), which keeps the stopping
    rule invariant under rescaling the data.  The iteration is warm-started
    from an exact active-set solve when the problem is small enough (the
    projected-gradient loop then serves as the optimality certificate), from
    x0 when given, and from the uniform vector otherwise.
    """
    G, c = prob.gram, prob.lin
    n = c.size
    pg_tol = tol * max(float(np.abs(G).max()), float(np.abs(c).max()), 1.0)
    if n == 1:
        return SimplexWeights(np.ones(1))
    L = _largest_eigenvalue(G) * (1.0 + 1e-6)
    if L <= 0.0:
        # degenerate quadratic: objective is linear, optimum at a vertex
        out = np.zeros(n)
        out[int(np.argmax(c))] = 1.0
        return SimplexWeights(out)
    step = 1.0 / L

    def objective(a):
        return float(a @ (G @ a) - 2.0 * (c @ a))

    x = _active_set_candidate(G, c)
    if x is None:
        if x0 is None:
            x = np.full(n, 1.0 / n)
        else:
            x = _project_simplex(np.asarray(x0, dtype=float))
    y = x
    fx = objective(x)
    t_momentum = 1.0
    for _ in range(max_iter):
        x_new = _project_simplex(y - step * 2.0 * (G @ y - c))
        f_new = objective(x_new)
        if f_new > fx:
            # momentum overshoot: restart from the last iterate
            t_momentum = 1.0
            x_new = _project_simplex(x - step * 2.0 * (G @ x - c))
            f_new = objective(x_new)
            halvings = 0
            while f_new > fx + 1e-18 * max(abs(fx), 1.0) and halvings < 100:
                step *= 0.5
                halvings += 1
                x_new = _project_simplex(x - step * 2.0 * (G @ x - c))
                f_new = objective(x_new)
            if f_new > fx:
                # a gradient step of 1/L cannot increase a convex quadratic
                # in exact arithmetic, so any remaining increase is roundoff:
                # the iteration has hit floating point stagnation
                break
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_momentum * t_momentum))
        y = x_new + ((t_momentum - 1.0) / t_next) * (x_new - x)
        x, fx, t_momentum = x_new, f_new, t_next
        pg = (x - _project_simplex(x - step * 2.0 * (G @ x - c))) / step
        if float(pg @ pg) < pg_tol * pg_tol:
            break
    return SimplexWeights(_project_simplex(x))
