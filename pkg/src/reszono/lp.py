"""Dense bounded-variable simplex for small equality-constrained boxes.

Problems have the form::

    minimize  c^T x   subject to  A x = b,  lower <= x <= upper

with finite bounds. Phase 1 starts every variable at a bound and absorbs the
residual with one artificial per row; phase 2 pins the artificials to zero and
optimises the real objective. Nonbasic variables always sit at a bound, so box
constraints never enter the tableau.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import LP_BOUND_TOL, LP_FEAS_TOL, LP_OPT_TOL, LP_PIVOT_TOL
from .errors import InvalidInputError

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


OPTIMAL = 0
INFEASIBLE = 1
ITERATION_LIMIT = 2
UNBOUNDED = 3

_STATUS_NAMES = {
    OPTIMAL: "optimal",
    INFEASIBLE: "infeasible",
    ITERATION_LIMIT: "iteration_limit",
    UNBOUNDED: "unbounded",
}

# switch from Dantzig to Bland pricing after this many consecutive degenerate pivots
_DEGENERATE_LIMIT = 30


@njit(cache=True)
def _iterate(T, x, basis, is_basic, at_upper, lo, hi, c, max_iter, opt_tol, piv_tol):
    m, N = T.shape
    d = c.copy()
    for i in range(m):
        cb = c[basis[i]]
        if cb != 0.0:
            for j in range(N):
                d[j] -= cb * T[i, j]
    ratios = np.empty(m)
    degenerate = 0
    for _ in range(max_iter):
        bland = degenerate > _DEGENERATE_LIMIT
        enter = -1
        direction = 0.0
        best = 0.0
        for j in range(N):
            if is_basic[j] or hi[j] - lo[j] <= 0.0:
                continue
            dj = d[j]
            if at_upper[j]:
                if dj <= opt_tol:
                    continue
                score = dj
                dj_dir = -1.0
            else:
                if dj >= -opt_tol:
                    continue
                score = -dj
                dj_dir = 1.0
            if bland:
                enter = j
                direction = dj_dir
                break
            if score > best:
                best = score
                enter = j
                direction = dj_dir
        if enter < 0:
            return OPTIMAL

        tmin = np.inf
        for i in range(m):
            alpha = T[i, enter] * direction
            bi = basis[i]
            ti = np.inf
            if alpha > piv_tol:
                ti = (x[bi] - lo[bi]) / alpha
            elif alpha < -piv_tol and hi[bi] < np.inf:
                ti = (hi[bi] - x[bi]) / (-alpha)
            if ti < 0.0:
                ti = 0.0
            ratios[i] = ti
            if ti < tmin:
                tmin = ti
        flip = hi[enter] - lo[enter]

        if flip <= tmin:
            if flip == np.inf:
                return UNBOUNDED
            for i in range(m):
                x[basis[i]] -= T[i, enter] * direction * flip
            if at_upper[enter]:
                x[enter] = lo[enter]
                at_upper[enter] = False
            else:
                x[enter] = hi[enter]
                at_upper[enter] = True
            degenerate = 0
            continue

        leave = -1
        lim = tmin + 1e-12 * (1.0 + tmin)
        for i in range(m):
            if ratios[i] > lim:
                continue
            if leave < 0:
                leave = i
            elif bland:
                if basis[i] < basis[leave]:
                    leave = i
            elif abs(T[i, enter]) > abs(T[leave, enter]):
                leave = i
        step = ratios[leave]

        for i in range(m):
            x[basis[i]] -= T[i, enter] * direction * step
        x[enter] += direction * step
        bl = basis[leave]
        if T[leave, enter] * direction > 0.0:
            x[bl] = lo[bl]
            at_upper[bl] = False
        else:
            x[bl] = hi[bl]
            at_upper[bl] = True
        is_basic[bl] = False
        is_basic[enter] = True
        basis[leave] = enter

        piv = T[leave, enter]
        for j in range(N):
            T[leave, j] /= piv
        for i in range(m):
            if i == leave:
                continue
            f = T[i, enter]
            if f != 0.0:
                for j in range(N):
                    T[i, j] -= f * T[leave, j]
        f = d[enter]
        if f != 0.0:
            for j in range(N):
                d[j] -= f * T[leave, j]

        if step <= 1e-12:
            degenerate += 1
        else:
            degenerate = 0
    return ITERATION_LIMIT


@njit(cache=True)
def _max_residual(a, b, x):
    m, n = a.shape
    worst = 0.0
    for i in range(m):
        r = b[i]
        for j in range(n):
            r -= a[i, j] * x[j]
        if abs(r) > worst:
            worst = abs(r)
    return worst


@njit(cache=True)
def _solve(a, b, cost, lo, hi, optimize, max_iter, feas_tol, opt_tol, piv_tol):
    m, n = a.shape
    N = n + m
    x = np.empty(N)
    lo_all = np.empty(N)
    hi_all = np.empty(N)
    at_upper = np.zeros(N, dtype=np.bool_)
    is_basic = np.zeros(N, dtype=np.bool_)
    basis = np.empty(m, dtype=np.int64)
    T = np.zeros((m, N))
    for j in range(n):
        lo_all[j] = lo[j]
        hi_all[j] = hi[j]
        if abs(hi[j]) < abs(lo[j]):
            x[j] = hi[j]
            at_upper[j] = hi[j] > lo[j]
        else:
            x[j] = lo[j]
    for i in range(m):
        r = b[i]
        for j in range(n):
            r -= a[i, j] * x[j]
        sgn = 1.0 if r >= 0.0 else -1.0
        for j in range(n):
            T[i, j] = sgn * a[i, j]
        T[i, n + i] = 1.0
        x[n + i] = abs(r)
        lo_all[n + i] = 0.0
        hi_all[n + i] = np.inf
        basis[i] = n + i
        is_basic[n + i] = True

    c1 = np.zeros(N)
    for i in range(m):
        c1[n + i] = 1.0
    status = _iterate(T, x, basis, is_basic, at_upper, lo_all, hi_all, c1,
                      max_iter, opt_tol, piv_tol)
    xo = x[:n].copy()
    for j in range(n):
        xo[j] = min(max(xo[j], lo[j]), hi[j])
    if status != OPTIMAL:
        return status, xo
    if _max_residual(a, b, xo) > feas_tol:
        return INFEASIBLE, xo
    if not optimize:
        return OPTIMAL, xo

    for i in range(m):
        hi_all[n + i] = 0.0
    c2 = np.zeros(N)
    for j in range(n):
        c2[j] = cost[j]
    status = _iterate(T, x, basis, is_basic, at_upper, lo_all, hi_all, c2,
                      max_iter, opt_tol, piv_tol)
    xo2 = x[:n].copy()
    for j in range(n):
        xo2[j] = min(max(xo2[j], lo[j]), hi[j])
    if status == OPTIMAL and _max_residual(a, b, xo2) > feas_tol:
        # phase 2 drifted off the constraint surface; keep the phase 1 point
        return ITERATION_LIMIT, xo
    return status, xo2


@dataclass(frozen=True, eq=False)
class LpProblem:
    """``min objective^T x`` s.t. ``equality_lhs x = equality_rhs`` and ``lower <= x <= upper``.

    Bounds default to the unit box [-1, 1]. The objective may be omitted for a
    pure feasibility question.
    """

    equality_lhs: np.ndarray
    equality_rhs: np.ndarray
    objective: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        a = np.array(self.equality_lhs, dtype=float)
        b = np.array(self.equality_rhs, dtype=float).reshape(-1)
        if a.ndim == 1:
            a = a.reshape(len(b), -1) if len(b) else a.reshape(0, -1)
        if a.ndim != 2 or a.shape[0] != b.shape[0]:
            raise InvalidInputError(f"constraint shapes disagree: A {a.shape}, b {b.shape}")
        n = a.shape[1]
        c = np.zeros(n) if self.objective is None else np.array(self.objective, dtype=float).reshape(-1)
        lo = -np.ones(n) if self.lower is None else np.array(self.lower, dtype=float).reshape(-1)
        hi = np.ones(n) if self.upper is None else np.array(self.upper, dtype=float).reshape(-1)
        if c.shape != (n,) or lo.shape != (n,) or hi.shape != (n,):
            raise InvalidInputError(
                f"objective/bounds must have length {n}: got {c.shape}, {lo.shape}, {hi.shape}"
            )
        for name, arr in (("A", a), ("b", b), ("objective", c), ("lower", lo), ("upper", hi)):
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} has non-finite entries")
        if np.any(lo > hi):
            raise InvalidInputError("lower bound exceeds upper bound")
        object.__setattr__(self, "equality_lhs", a)
        object.__setattr__(self, "equality_rhs", b)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def num_vars(self) -> int:
        return self.equality_lhs.shape[1]


@dataclass(frozen=True, eq=False)
class LpResult:
    status: str
    x: np.ndarray | None = None
    value: float | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def _scaled(a, b):
    scale = np.maximum(1.0, np.max(np.abs(a), axis=1)) if a.shape[1] else np.ones(a.shape[0])
    return a / scale[:, None], b / scale


def solve(a, b, cost, lo, hi, optimize):
    """Array-level entry point used by the set operations; no validation.

    Returns ``(status_code, x)``. Rows are scaled to unit infinity norm (never
    scaled up) before solving, so the feasibility tolerance is per scaled row.
    """
    m, n = a.shape
    if m == 0:
        if optimize:
            return OPTIMAL, np.where(cost > 0, lo, hi).astype(float)
        return OPTIMAL, np.clip(np.zeros(n), lo, hi)
    if n == 0:
        ok = np.all(np.abs(b) <= LP_FEAS_TOL)
        return (OPTIMAL if ok else INFEASIBLE), np.zeros(0)
    a_s, b_s = _scaled(a, b)
    max_iter = 50 * (m + n) + 100
    return _solve(
        np.ascontiguousarray(a_s), np.ascontiguousarray(b_s),
        np.ascontiguousarray(cost, dtype=float),
        np.ascontiguousarray(lo, dtype=float), np.ascontiguousarray(hi, dtype=float),
        optimize, max_iter, LP_FEAS_TOL, LP_OPT_TOL, LP_PIVOT_TOL,
    )


def feasible_box(a, b) -> bool:
    """True when some x in [-1, 1]^n satisfies ``a x = b`` within tolerance."""
    n = a.shape[1]
    status, _ = solve(a, b, np.zeros(n), -np.ones(n), np.ones(n), False)
    if status == ITERATION_LIMIT:
        raise ArithmeticError("simplex iteration limit reached in feasibility test")
    return status == OPTIMAL


def lp_feasible(p: LpProblem) -> LpResult:
    status, x = solve(p.equality_lhs, p.equality_rhs, p.objective, p.lower, p.upper, False)
    if status == OPTIMAL:
        return LpResult("optimal", x, float(p.objective @ x))
    return LpResult(_STATUS_NAMES[status])


def lp_optimize(p: LpProblem) -> LpResult:
    status, x = solve(p.equality_lhs, p.equality_rhs, p.objective, p.lower, p.upper, True)
    if status == OPTIMAL:
        return LpResult("optimal", x, float(p.objective @ x))
    return LpResult(_STATUS_NAMES[status])


__all__ = [
    "LpProblem",
    "LpResult",
    "lp_feasible",
    "lp_optimize",
    "feasible_box",
    "solve",
    "LP_BOUND_TOL",
]
