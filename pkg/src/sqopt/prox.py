"""Global solution of (possibly nonconvex) proximal subproblems.

Proximal subproblems of strongly quasiconvex objectives need a global search:
the regularized objective is only guaranteed quasiconvex for all parameters
when the underlying function is convex.  The solver is a deterministic
multistart: a dense grid for one dimension, a square grid for two, a Halton
set above that, every start refined in lockstep by projected gradient with
backtracking (when a gradient exists) or compass search (when not).

Near-optimal candidates (within 1e-8 of the best value) are all retained,
since the proximity operator of a nonconvex function is set-valued, and the
returned point is the lexicographically smallest of them, which keeps traces
deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functions import BregmanFunction, Objective
from .geometry import FeasibleSet

VALUE_TIE_TOL = 1e-8
DEDUPE_TOL = 1e-7
ARMIJO_C = 1e-4

_HALTON_PRIMES = (2, 3, 5, 7, 11, 13)


@dataclass(frozen=True)
class GlobalSolveConfig:
    """Multistart configuration; identical config + inputs give identical output."""

    n_starts: int = 64
    grid_density: int = 10_000
    local_tol: float = 1e-9
    max_local_iters: int = 400
    seed: int = 0
    search_radius: float | None = None

    def __post_init__(self):
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        if self.local_tol <= 0:
            raise ValueError("local_tol must be positive")


@dataclass
class ProxResult:
    point: np.ndarray
    value: float
    residual: float
    candidates: list
    n_evals: int = 0


def _halton(m: int, dim: int) -> np.ndarray:
    out = np.empty((m, dim))
    for j in range(dim):
        b = _HALTON_PRIMES[j % len(_HALTON_PRIMES)]
        seq = np.zeros(m)
        f = 1.0
        i = np.arange(1, m + 1)
        work = i.copy()
        while np.any(work > 0):
            f /= b
            seq += f * (work % b)
            work //= b
        out[:, j] = seq
    return out


def _seed_points(K: FeasibleSet, cfg: GlobalSolveConfig) -> np.ndarray:
    lo, hi = K.bounding_box(cfg.search_radius)
    n = K.dim
    if n == 1:
        m = cfg.grid_density + (cfg.grid_density % 2 == 0)  # odd count keeps exact centers
        pts = np.linspace(lo[0], hi[0], m)[:, None]
    elif n == 2:
        k = int(np.ceil(np.sqrt(cfg.n_starts)))
        k += k % 2 == 0
        ax = [np.linspace(lo[j], hi[j], k) for j in range(2)]
        g = np.meshgrid(*ax, indexing="ij")
        pts = np.stack([a.ravel() for a in g], axis=-1)
    else:
        pts = lo + _halton(cfg.n_starts, n) * (hi - lo)
    return K.project_many(pts)


class _Counter:
    __slots__ = ("n",)

    def __init__(self):
        self.n = 0

    def fn(self, raw_fn):
        def wrapped(X):
            self.n += X.shape[0] if X.ndim > 1 else 1
            return raw_fn(X)

        return wrapped


def _refine_pg(fn, grad, K, X, F, cfg):
    """Lockstep projected gradient with Armijo backtracking over all starts."""
    lo, hi = K.bounding_box(cfg.search_radius)
    step = np.full(X.shape[0], 0.25 * float(np.max(hi - lo)) + 1e-12)
    step_cap = 1e3 * (float(np.max(hi - lo)) + 1.0)
    active = np.ones(X.shape[0], dtype=bool)
    for _ in range(cfg.max_local_iters):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        G = grad(X[idx])
        C = K.project_many(X[idx] - step[idx, None] * G)
        FC = fn(C)
        move = C - X[idx]
        decrease = np.einsum("ij,ij->i", G, move)
        accept = FC <= F[idx] + ARMIJO_C * decrease
        moved = np.linalg.norm(move, axis=-1)
        acc = idx[accept]
        X[acc] = C[accept]
        F[acc] = FC[accept]
        step[acc] = np.minimum(step[acc] * 2.0, step_cap)
        rej = idx[~accept]
        step[rej] *= 0.5
        # converged: a tiny accepted move with a near-stationary gradient
        # (the gradient guard keeps small-step rows far from optimality alive)
        gsmall = np.linalg.norm(G, axis=-1)[accept] <= np.sqrt(cfg.local_tol)
        active[acc[(moved[accept] <= cfg.local_tol) & gsmall]] = False
        active[rej[step[rej] < cfg.local_tol]] = False
    return X, F


def _refine_compass(fn, K, X, F, cfg):
    """Lockstep compass (pattern) search; no gradient needed."""
    lo, hi = K.bounding_box(cfg.search_radius)
    n = K.dim
    step = np.full(X.shape[0], 0.25 * float(np.max(hi - lo)) + 1e-12)
    active = np.ones(X.shape[0], dtype=bool)
    eye = np.eye(n)
    dirs = np.concatenate([eye, -eye], axis=0)  # (2n, n)
    for _ in range(cfg.max_local_iters * 4):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        m = idx.shape[0]
        cand = X[idx, None, :] + step[idx, None, None] * dirs[None, :, :]
        cand = K.project_many(cand.reshape(m * 2 * n, n))
        fc = fn(cand).reshape(m, 2 * n)
        best = np.argmin(fc, axis=1)
        fbest = fc[np.arange(m), best]
        improved = fbest < F[idx]
        imp = idx[improved]
        X[imp] = cand.reshape(m, 2 * n, n)[improved, best[improved]]
        F[imp] = fbest[improved]
        stay = idx[~improved]
        step[stay] *= 0.5
        active[stay[step[stay] < cfg.local_tol]] = False
    return X, F


def _polish_newton(fn, grad, K, x, cfg):
    """Gradient-root polish along the steepest direction for smooth subproblems.

    Value comparisons bottom out at sqrt(machine eps); driving the gradient
    to zero instead reaches machine precision at interior minima.  Stops as
    soon as a step is clipped by the constraint or the gradient norm grows.
    """
    x = x.copy()
    g = grad(x[None, :])[0]
    gn = float(np.linalg.norm(g))
    for _ in range(30):
        if gn <= 1e-15 * (1.0 + float(np.linalg.norm(x))):
            break
        d = -g / gn
        eps = 1e-7 * (1.0 + float(np.linalg.norm(x)))
        curv = float((grad((x + eps * d)[None, :])[0] - g) @ d) / eps
        if not np.isfinite(curv) or curv <= 0:
            break
        cand = K.project_many((x + (gn / curv) * d)[None, :])[0]
        if float(np.linalg.norm(cand - (x + (gn / curv) * d))) > 0.0:
            break  # constraint became active: keep the comparison-phase point
        g_new = grad(cand[None, :])[0]
        gn_new = float(np.linalg.norm(g_new))
        if not np.isfinite(gn_new) or gn_new >= gn:
            break
        x, g, gn = cand, g_new, gn_new
    return x


def _polish_parabolic(fn, K, x, f0, rounds: int = 2, delta: float = 1e-5):
    """Coordinate-wise parabolic vertex steps for derivative-free smooth minima.

    Improves the sqrt(eps) comparison floor to ~1e-11 at smooth interior
    minima; moves are only accepted when they do not increase the value, so
    kink and boundary minima (already sharp for compass search) are kept.
    """
    x = x.copy()
    n = x.shape[0]
    for _ in range(rounds):
        for j in range(n):
            d = delta * (1.0 + abs(x[j]))
            probes = np.tile(x, (2, 1))
            probes[0, j] += d
            probes[1, j] -= d
            if np.linalg.norm(K.project_many(probes) - probes) > 0.0:
                continue  # axis touches the boundary: leave it to compass
            fp, fm = fn(probes)
            denom = fp - 2.0 * f0 + fm
            if not np.isfinite(denom) or denom <= 0:
                continue
            cand = x.copy()
            cand[j] -= d * (fp - fm) / (2.0 * denom)
            cand = K.project_many(cand[None, :])[0]
            fc = float(fn(cand[None, :])[0])
            if fc <= f0:
                x, f0 = cand, fc
    return x, f0


def _collect(X, F, n_evals) -> ProxResult:
    v_best = float(np.min(F))
    near = np.nonzero(F <= v_best + VALUE_TIE_TOL)[0]
    pts = X[near]
    vals = F[near]
    order = np.lexsort(pts.T[::-1])  # lexicographic by coordinates
    uniq_pts, uniq_vals = [], []
    for i in order:
        p = pts[i]
        if all(np.linalg.norm(p - u) > DEDUPE_TOL for u in uniq_pts):
            uniq_pts.append(p.copy())
            uniq_vals.append(float(vals[i]))
    return ProxResult(
        point=uniq_pts[0],
        value=uniq_vals[0],
        residual=0.0,
        candidates=uniq_pts,
        n_evals=n_evals,
    )


def _global_min_impl(raw_fn, raw_grad, K: FeasibleSet, cfg: GlobalSolveConfig, extra_seeds=None):
    counter = _Counter()
    fn = counter.fn(raw_fn)
    seeds = _seed_points(K, cfg)
    if extra_seeds is not None:
        extra = K.project_many(np.atleast_2d(np.asarray(extra_seeds, dtype=float)))
        seeds = np.concatenate([extra, seeds], axis=0)
    F = fn(seeds)
    if not np.all(np.isfinite(F)):
        finite = np.isfinite(F)
        if not np.any(finite):
            raise ValueError("objective is not finite anywhere on the seed set")
        seeds, F = seeds[finite], F[finite]
    if K.dim == 1 and seeds.shape[0] > cfg.n_starts:
        # dense 1D grid: refine only the most promising points plus the extras
        n_extra = 0 if extra_seeds is None else np.atleast_2d(extra_seeds).shape[0]
        keep = np.argsort(F[n_extra:], kind="stable")[:16] + n_extra
        keep = np.concatenate([np.arange(n_extra), keep])
        X, F = seeds[keep].copy(), F[keep].copy()
    else:
        X, F = seeds.copy(), F.copy()
    if raw_grad is not None:
        grad = lambda Z: np.asarray(raw_grad(Z), dtype=float)
        X, F = _refine_pg(fn, grad, K, X, F, cfg)
        near = np.nonzero(F <= float(np.min(F)) + VALUE_TIE_TOL)[0]
        for i in near:
            xp = _polish_newton(fn, grad, K, X[i], cfg)
            vp = float(fn(xp[None, :])[0])
            if vp <= F[i]:
                X[i], F[i] = xp, vp
    else:
        X, F = _refine_compass(fn, K, X, F, cfg)
        near = np.nonzero(F <= float(np.min(F)) + VALUE_TIE_TOL)[0]
        for i in near:
            X[i], F[i] = _polish_parabolic(fn, K, X[i], float(F[i]))
    res = _collect(X, F, counter.n)
    return res


def global_min(h: Objective, K: FeasibleSet | None = None, cfg: GlobalSolveConfig | None = None) -> ProxResult:
    """Brute-force global minimizer of ``h`` over ``K`` (the project-wide oracle)."""
    K = h.domain if K is None else K
    cfg = cfg or GlobalSolveConfig()
    return _global_min_impl(h.value_many, h.grad_many if h.grad else None, K, cfg)


def _prox_objective(base_fn, base_grad, beta: float, x: np.ndarray):
    """Quadratically regularized subproblem around ``x``.

    Shared by the minimization and equilibrium paths so that value-gap
    bifunctions reproduce plain proximal steps bit for bit.
    """

    def fn(Y):
        D = Y - x
        return base_fn(Y) + np.sum(D * D, axis=-1) / (2.0 * beta)

    grad = None
    if base_grad is not None:

        def grad(Y):
            return base_grad(Y) + (Y - x) / beta

    return fn, grad


def prox_point(base_fn, base_grad, K: FeasibleSet, beta: float, x, cfg: GlobalSolveConfig) -> ProxResult:
    """Proximal step for an arbitrary evaluation callable (internal engine)."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("prox center must be finite")
    fn, grad = _prox_objective(base_fn, base_grad, float(beta), x)
    res = _global_min_impl(fn, grad, K, cfg, extra_seeds=x[None, :])
    res.residual = float(np.linalg.norm(res.point - x))
    return res


def prox(h: Objective, K: FeasibleSet | None = None, beta: float = 1.0, x=None, cfg: GlobalSolveConfig | None = None) -> ProxResult:
    """Global proximity operator: argmin over K of h(y) + ||y - x||^2 / (2 beta)."""
    K = h.domain if K is None else K
    cfg = cfg or GlobalSolveConfig()
    return prox_point(h.value_many, h.grad_many if h.grad else None, K, beta, x, cfg)


def prox_fixed_point_residual(h: Objective, K: FeasibleSet | None, beta: float, x, cfg: GlobalSolveConfig | None = None) -> float:
    """Distance from ``x`` to the nearest proximal candidate (0 iff fixed point)."""
    pr = prox(h, K, beta, x, cfg)
    x = np.asarray(x, dtype=float)
    return min(float(np.linalg.norm(c - x)) for c in pr.candidates)


def bregman_prox(
    h: Objective,
    K: FeasibleSet | None,
    phi: BregmanFunction,
    beta: float,
    x,
    cfg: GlobalSolveConfig | None = None,
) -> ProxResult:
    """Bregman proximity operator: argmin over K (within cl S) of h + D(., x)/beta.

    With the half-squared-norm kernel this routes through ``prox`` exactly,
    matching the collapse of the Bregman operator to the proximity operator.
    Other kernels are minimized by compass search with the divergence set to
    +inf outside the zone closure.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    K = h.domain if K is None else K
    cfg = cfg or GlobalSolveConfig()
    x = np.asarray(x, dtype=float)
    if not bool(np.all(phi.zone_contains(x))):
        raise ValueError("prox center must lie in the open zone of the kernel")
    if phi.name == "half_sq_norm":
        return prox(h, K, beta, x, cfg)

    def fn(Y):
        Y = np.asarray(Y, dtype=float)
        vals = h.value_many(Y) + phi.divergence_many(Y, x) / beta
        inside = phi.closure_contains(Y)
        return np.where(inside, vals, np.inf)

    res = _global_min_impl(fn, None, K, cfg, extra_seeds=x[None, :])
    res.residual = float(np.linalg.norm(res.point - x))
    return res
