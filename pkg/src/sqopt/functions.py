"""Catalog of strongly quasiconvex objectives, bifunctions and Bregman kernels.

Every entry declares the modulus it is certified for on its domain.  Declared
moduli are guaranteed lower bounds: either a published closed form or a frozen
constant obtained from a dense-grid certification run (those constants sit
strictly below the grid infimum).  All evaluation callables broadcast over a
leading batch axis, i.e. they accept shape ``(n,)`` or ``(m, n)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import Box, FeasibleSet, FullSpace, as_point, box1d, rng_for

# Frozen certified lower bounds (dense-grid runs; see package notes).
SIN_QUAD_MODULUS = 0.6965  # grid infimum 2 + 6*min(sin u / u) = 0.696598...
NEG_QUAD_MODULUS = 2.0  # exact infimum of the defining ratio on [0, 1]

CATALOG_NAMES = (
    "abs_shift",
    "euclid_norm",
    "neg_quad",
    "gauss_well",
    "sin_quad",
    "inv_gap",
    "root_quartic",
    "power_norm",
    "quad_fractional",
)


@dataclass(frozen=True)
class Objective:
    """An evaluable objective with a declared strong-quasiconvexity modulus.

    ``modulus`` is the declared modulus on ``domain`` (0 means merely
    quasiconvex).  ``fn`` and ``grad`` broadcast over a leading batch axis.
    ``known_min`` is ``(argmin, min_value)`` when the minimizer is known.
    """

    name: str
    dim: int
    domain: FeasibleSet
    modulus: float
    fn: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    lip_grad: float | None = None
    known_min: tuple[np.ndarray, float] | None = None
    lower_semicontinuous: bool = True

    def value(self, x) -> float:
        return float(self.fn(as_point(x, self.dim)))

    def value_many(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(X, dtype=float)), dtype=float)

    @property
    def differentiable(self) -> bool:
        return self.grad is not None

    def grad_at(self, x) -> np.ndarray:
        if self.grad is None:
            raise ValueError(f"objective {self.name!r} has no gradient")
        return np.asarray(self.grad(as_point(x, self.dim)), dtype=float)

    def grad_many(self, X: np.ndarray) -> np.ndarray:
        if self.grad is None:
            raise ValueError(f"objective {self.name!r} has no gradient")
        return np.asarray(self.grad(np.asarray(X, dtype=float)), dtype=float)


@dataclass(frozen=True)
class Bifunction:
    """Equilibrium bifunction f(x, y), strongly quasiconvex in y on the domain.

    ``fn`` broadcasts elementwise over paired batches of x and y.  ``gamma``
    is the declared per-x modulus of ``f(x, .)`` and ``eta`` the declared
    Lipschitz-type constant of the three-point condition.  ``y_parts(x)``
    returns ``(fy, gy)`` with ``fy`` equal to ``f(x, .)`` up to an additive
    constant; proximal subproblems are built from it so that value-gap
    bifunctions reproduce plain proximal steps bit for bit.
    """

    name: str
    dim: int
    domain: FeasibleSet
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    gamma: float
    eta: float
    partial_grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    y_parts: Callable[[np.ndarray], tuple] | None = None

    def value(self, x, y) -> float:
        return float(self.fn(as_point(x, self.dim), as_point(y, self.dim)))

    def y_objective(self, x):
        """``(fy, gy)`` for the proximal subproblem in the second argument."""
        if self.y_parts is not None:
            return self.y_parts(np.asarray(x, dtype=float))
        xa = np.asarray(x, dtype=float)
        fy = lambda Y: self.fn(xa, Y)
        gy = None
        if self.partial_grad_y is not None:
            # the pointwise oracle gets a batching wrapper here
            def gy(Y):
                Y = np.atleast_2d(np.asarray(Y, dtype=float))
                return np.stack([self.partial_grad_y(xa, y) for y in Y])

        return fy, gy


@dataclass(frozen=True)
class BregmanFunction:
    """Bregman kernel phi with zone S and divergence D(x, y)."""

    name: str
    dim: int
    phi: Callable[[np.ndarray], np.ndarray]
    grad_phi: Callable[[np.ndarray], np.ndarray]
    zone_contains: Callable[[np.ndarray], np.ndarray]  # open zone S, strict
    closure_contains: Callable[[np.ndarray], np.ndarray]

    def divergence_many(self, Y: np.ndarray, x: np.ndarray) -> np.ndarray:
        """D(y, x) = phi(y) - phi(x) - grad_phi(x) . (y - x), batched over y."""
        Y = np.asarray(Y, dtype=float)
        x = np.asarray(x, dtype=float)
        g = self.grad_phi(x)
        return self.phi(Y) - self.phi(x) - (Y - x) @ g

    def divergence(self, x, y) -> float:
        return float(self.divergence_many(np.asarray(x, dtype=float)[None, :], y)[0])


# ---------------------------------------------------------------------------
# objective catalog
# ---------------------------------------------------------------------------


def _abs_shift(a: float = 0.0, gamma: float = 1.0) -> Objective:
    """|t + a| on [0, 1/gamma] with modulus gamma."""
    if gamma <= 0:
        raise ValueError("abs_shift requires gamma > 0")
    a = float(a)
    hi = 1.0 / gamma
    dom = box1d(0.0, hi)
    fn = lambda X: np.abs(X[..., 0] + a)
    if -a <= 0.0:
        xm, vm = 0.0, abs(a)
    elif -a >= hi:
        xm, vm = hi, abs(hi + a)
    else:
        xm, vm = -a, 0.0
    return Objective(
        name=f"abs_shift(a={a},gamma={gamma})",
        dim=1,
        domain=dom,
        modulus=float(gamma),
        fn=fn,
        known_min=(np.array([xm]), vm),
    )


def _euclid_norm(n: int = 2, gamma: float = 1.0, halfwidth: float | None = None) -> Objective:
    """Euclidean norm on a box inside the closed ball of radius 1/gamma."""
    if gamma <= 0:
        raise ValueError("euclid_norm requires gamma > 0")
    n = int(n)
    wmax = 1.0 / (gamma * np.sqrt(n))
    w = wmax if halfwidth is None else float(halfwidth)
    if w * np.sqrt(n) > 1.0 / gamma + 1e-12:
        raise ValueError("box must lie inside the ball of radius 1/gamma")
    dom = Box(-w * np.ones(n), w * np.ones(n))
    return Objective(
        name=f"euclid_norm(n={n},gamma={gamma})",
        dim=n,
        domain=dom,
        modulus=float(gamma),
        fn=lambda X: np.linalg.norm(X, axis=-1),
        known_min=(np.zeros(n), 0.0),
    )


def _neg_quad() -> Objective:
    """-t^2 - t on [0, 1]; nonconvex, strongly quasiconvex with modulus 2."""
    return Objective(
        name="neg_quad",
        dim=1,
        domain=box1d(0.0, 1.0),
        modulus=NEG_QUAD_MODULUS,
        fn=lambda X: -X[..., 0] ** 2 - X[..., 0],
        grad=lambda X: np.stack([-2.0 * X[..., 0] - 1.0], axis=-1),
        lip_grad=2.0,
        known_min=(np.array([1.0]), -2.0),
    )


def _gauss_well(c: float = 1.0, d: float = 1.0, delta: float = 1.0) -> Objective:
    """c - d*exp(-t^2) on [-delta, delta], modulus d*exp(-delta^2)."""
    if d <= 0 or delta <= 0:
        raise ValueError("gauss_well requires d > 0 and delta > 0")
    c, d, delta = float(c), float(d), float(delta)
    return Objective(
        name=f"gauss_well(c={c},d={d},delta={delta})",
        dim=1,
        domain=box1d(-delta, delta),
        modulus=d * np.exp(-(delta**2)),
        fn=lambda X: c - d * np.exp(-(X[..., 0] ** 2)),
        grad=lambda X: np.stack([2.0 * d * X[..., 0] * np.exp(-(X[..., 0] ** 2))], axis=-1),
        lip_grad=2.0 * d,
        known_min=(np.array([0.0]), c - d),
    )


def _sin_quad() -> Objective:
    """t^2 + 3 sin^2 t on the line; certified modulus 0.6965."""
    return Objective(
        name="sin_quad",
        dim=1,
        domain=FullSpace(1),
        modulus=SIN_QUAD_MODULUS,
        fn=lambda X: X[..., 0] ** 2 + 3.0 * np.sin(X[..., 0]) ** 2,
        grad=lambda X: np.stack([2.0 * X[..., 0] + 3.0 * np.sin(2.0 * X[..., 0])], axis=-1),
        lip_grad=8.0,
        known_min=(np.array([0.0]), 0.0),
    )


def _inv_gap() -> Objective:
    """0 at t=0 and -1/t on (0, 1]; modulus 1, not lower semicontinuous at 0.

    The infimum on [0, 1] is -inf (approached as t -> 0+), so there is no
    minimizer and proximal subproblems built on it are unbounded below.
    """

    def fn(X):
        t = X[..., 0]
        out = np.zeros_like(t)
        pos = t > 0
        out = np.where(pos, np.divide(-1.0, t, out=np.zeros_like(t), where=pos), 0.0)
        return out

    return Objective(
        name="inv_gap",
        dim=1,
        domain=box1d(0.0, 1.0),
        modulus=1.0,
        fn=fn,
        lower_semicontinuous=False,
    )


def _root_quartic(k: float = 1.0, c: float = 1.0) -> Objective:
    """(t^2 + k^2)^(1/4) on [-c, c], modulus 1/(2 (c^2+k^2)^(3/4))."""
    if c <= 0:
        raise ValueError("root_quartic requires c > 0")
    k, c = float(k), float(c)
    fn = lambda X: (X[..., 0] ** 2 + k**2) ** 0.25
    grad = None
    lip = None
    if k != 0.0:
        grad = lambda X: np.stack(
            [X[..., 0] / (2.0 * (X[..., 0] ** 2 + k**2) ** 0.75)], axis=-1
        )
        lip = 1.0 / (2.0 * abs(k) ** 1.5)
    return Objective(
        name=f"root_quartic(k={k},c={c})",
        dim=1,
        domain=box1d(-c, c),
        modulus=1.0 / (2.0 * (c**2 + k**2) ** 0.75),
        fn=fn,
        grad=grad,
        lip_grad=lip,
        known_min=(np.array([0.0]), abs(k) ** 0.5),
    )


def _power_norm(n: int = 2, halfwidth: float = 1.0, alpha: float = 0.5) -> Objective:
    """||x||^alpha on the box [-w, w]^n.

    For alpha = 1/2 the declared modulus is 1/(80^(1/4) r^(3/2)) with r the
    circumscribed-ball radius; other exponents are declared merely
    quasiconvex (modulus 0).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("power_norm requires 0 < alpha < 1")
    n, w = int(n), float(halfwidth)
    r = w * np.sqrt(n)
    modulus = 1.0 / (80.0**0.25 * r**1.5) if alpha == 0.5 else 0.0
    return Objective(
        name=f"power_norm(n={n},w={w},alpha={alpha})",
        dim=n,
        domain=Box(-w * np.ones(n), w * np.ones(n)),
        modulus=modulus,
        fn=lambda X: np.linalg.norm(X, axis=-1) ** alpha,
        known_min=(np.zeros(n), 0.0),
    )


def _quad_fractional(
    A, a, alpha, B, b, beta, K: FeasibleSet, m: float, M: float, n_check: int = 1000
) -> Objective:
    """Quadratic-over-quadratic fractional objective with modulus lambda_min(A)/M.

    K is user-supplied; the constructor verifies m <= denominator <= M on
    sampled points and that one of the sign conditions for the numerator and
    the curvature of B holds.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    alpha, beta, m, M = float(alpha), float(beta), float(m), float(M)
    n = A.shape[0]
    if not (0 < m < M):
        raise ValueError("quad_fractional requires 0 < m < M")
    if np.max(np.abs(A - A.T)) > 1e-12:
        raise ValueError("A must be symmetric")
    eigA = np.linalg.eigvalsh(A)
    if eigA[0] <= 0:
        raise ValueError("A must be positive definite")

    def num(X):
        return 0.5 * np.einsum("...i,ij,...j->...", X, A, X) + X @ a + alpha

    def den(X):
        return 0.5 * np.einsum("...i,ij,...j->...", X, B, X) + X @ b + beta

    S = K.sample(seed=2024, m=n_check)
    dv = den(S)
    if np.any(dv < m - 1e-9) or np.any(dv > M + 1e-9):
        raise ValueError("denominator leaves [m, M] on sampled points of K")
    eigB = np.linalg.eigvalsh(B) if np.any(B) else np.zeros(n)
    if np.max(np.abs(B)) == 0.0:
        pass  # affine denominator with B = 0
    elif eigB[-1] <= 1e-12:
        if np.any(num(S) < -1e-9):
            raise ValueError("concave denominator requires a nonnegative numerator on K")
    elif eigB[0] >= -1e-12:
        if np.any(num(S) > 1e-9):
            raise ValueError("convex denominator requires a nonpositive numerator on K")
    else:
        raise ValueError("B must be zero, positive or negative semidefinite")

    def fn(X):
        return num(X) / den(X)

    def grad(X):
        nv, dv = num(X), den(X)
        gn = X @ A + a
        gd = X @ B + b
        return (gn * dv[..., None] - nv[..., None] * gd) / (dv**2)[..., None]

    return Objective(
        name="quad_fractional",
        dim=n,
        domain=K,
        modulus=float(eigA[0] / M),
        fn=fn,
        grad=grad,
    )


_BUILDERS = {
    "abs_shift": _abs_shift,
    "euclid_norm": _euclid_norm,
    "neg_quad": _neg_quad,
    "gauss_well": _gauss_well,
    "sin_quad": _sin_quad,
    "inv_gap": _inv_gap,
    "root_quartic": _root_quartic,
    "power_norm": _power_norm,
    "quad_fractional": _quad_fractional,
}


def catalog(name: str, **params) -> Objective:
    """Build a catalog objective by name with its declared modulus and domain."""
    if name not in _BUILDERS:
        raise ValueError(f"unknown catalog entry {name!r}; known: {CATALOG_NAMES}")
    return _BUILDERS[name](**params)


# ---------------------------------------------------------------------------
# combinators (modulus-preserving operations)
# ---------------------------------------------------------------------------


def combine_scale(h: Objective, kappa: float) -> Objective:
    """kappa * h with modulus kappa * gamma."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    kappa = float(kappa)
    grad = None if h.grad is None else (lambda X, g=h.grad: kappa * g(X))
    km = None if h.known_min is None else (h.known_min[0].copy(), kappa * h.known_min[1])
    return Objective(
        name=f"{kappa}*{h.name}",
        dim=h.dim,
        domain=h.domain,
        modulus=kappa * h.modulus,
        fn=lambda X, f=h.fn: kappa * f(X),
        grad=grad,
        lip_grad=None if h.lip_grad is None else kappa * h.lip_grad,
        known_min=km,
        lower_semicontinuous=h.lower_semicontinuous,
    )


def combine_linear(h: Objective, A, domain: FeasibleSet, n_check: int = 1000) -> Objective:
    """h(A x) on the given domain, modulus gamma * sigma_min(A)^2.

    The squared factor follows the quadratic-form expansion
    <A^T A d, d> >= sigma_min(A)^2 ||d||^2 used to derive the rule.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (h.dim, domain.dim):
        raise ValueError(f"A must map R^{domain.dim} into R^{h.dim}")
    smin = float(np.linalg.svd(A, compute_uv=False)[-1])
    if smin <= 0:
        raise ValueError("A must be injective (sigma_min > 0)")
    S = domain.sample(seed=2024, m=n_check) if domain.is_bounded else None
    if S is not None and not np.all(h.domain.contains_many(S @ A.T, tol=1e-8)):
        raise ValueError("A does not map the new domain into the domain of h")
    grad = None if h.grad is None else (lambda X, g=h.grad: g(X @ A.T) @ A)
    known = None
    if h.known_min is not None and A.shape[0] == A.shape[1]:
        try:
            xm = np.linalg.solve(A, h.known_min[0])
            if domain.contains(xm, tol=1e-9):
                known = (xm, h.known_min[1])
        except np.linalg.LinAlgError:
            known = None
    return Objective(
        name=f"{h.name}@linear",
        dim=domain.dim,
        domain=domain,
        modulus=h.modulus * smin**2,
        fn=lambda X, f=h.fn: f(X @ A.T),
        grad=grad,
        known_min=known,
        lower_semicontinuous=h.lower_semicontinuous,
    )


def combine_max(hs: list[Objective]) -> Objective:
    """Pointwise maximum; modulus is the minimum of the moduli."""
    if not hs:
        raise ValueError("combine_max needs at least one objective")
    dim = hs[0].dim
    dom = hs[0].domain
    for h in hs[1:]:
        if h.dim != dim or type(h.domain) is not type(dom):
            raise ValueError("objectives must share dimension and domain")
    if len(hs) == 1:
        return hs[0]
    fns = [h.fn for h in hs]

    def fn(X):
        out = fns[0](X)
        for f in fns[1:]:
            out = np.maximum(out, f(X))
        return out

    return Objective(
        name="max(" + ",".join(h.name for h in hs) + ")",
        dim=dim,
        domain=dom,
        modulus=min(h.modulus for h in hs),
        fn=fn,
        lower_semicontinuous=all(h.lower_semicontinuous for h in hs),
    )


# ---------------------------------------------------------------------------
# bifunction catalog
# ---------------------------------------------------------------------------


def value_gap(h: Objective) -> Bifunction:
    """f(x, y) = h(y) - h(x); the equilibrium problem collapses to minimizing h."""

    def fn(X, Y):
        return h.fn(np.asarray(Y, dtype=float)) - h.fn(np.asarray(X, dtype=float))

    def y_parts(x):
        return h.fn, h.grad

    pg = None
    if h.grad is not None:
        pg = lambda x, Y: h.grad(np.asarray(Y, dtype=float))
    return Bifunction(
        name=f"value_gap({h.name})",
        dim=h.dim,
        domain=h.domain,
        fn=fn,
        gamma=h.modulus,
        eta=0.0,
        partial_grad_y=pg,
        y_parts=y_parts,
    )


def _glt_g(U: np.ndarray, q: float) -> np.ndarray:
    nrm = np.linalg.norm(U, axis=-1)
    shifted = U - q
    return np.maximum(np.sqrt(nrm), np.einsum("...i,...i->...", shifted, shifted) - q)


def _glt_g_grad(u: np.ndarray, q: float) -> np.ndarray:
    nrm = float(np.linalg.norm(u))
    branch_sqrt = np.sqrt(nrm)
    branch_quad = float(np.sum((u - q) ** 2) - q)
    if branch_sqrt >= branch_quad:
        if nrm == 0.0:
            return np.zeros_like(u)  # subgradient choice at the kink
        return u / (2.0 * nrm**1.5)
    return 2.0 * (u - q)


@functools.lru_cache(maxsize=32)
def _glt_constants(p: float, q: float, lo: float, hi: float, n: int) -> tuple[float, float]:
    """Deterministic sampled estimates (gamma, eta) for the max/sqrt bifunction.

    gamma: dense-grid modulus of f(x, .) minimized over a grid of x, shaved by
    a 10% safety factor so it stays a certified lower bound.  eta: sampled
    three-point ratio maximum padded by 5%.
    """
    if n == 1:
        xs = np.linspace(lo, hi, 17)
        ys = np.linspace(lo, hi, 101)
        Y1, Y2 = np.meshgrid(ys, ys, indexing="ij")
        Y1, Y2 = Y1.ravel(), Y2.ravel()
        keep = Y1 != Y2
        Y1, Y2 = Y1[keep], Y2[keep]
        ts = np.linspace(0.01, 0.99, 61)
        best = np.inf
        for x in xs:
            g1 = p * _glt_g(Y1[:, None], q) + x * Y1
            g2 = p * _glt_g(Y2[:, None], q) + x * Y2
            mx = np.maximum(g1, g2)
            for t in ts:
                mid_pt = t * Y1 + (1 - t) * Y2
                mid = p * _glt_g(mid_pt[:, None], q) + x * mid_pt
                ratio = 2.0 * (mx - mid) / (t * (1 - t) * (Y1 - Y2) ** 2)
                best = min(best, float(ratio.min()))
        gamma = 0.90 * best
    else:
        rng = rng_for(11)
        m = 40_000
        X = lo + rng.random((m, n)) * (hi - lo)
        Y1 = lo + rng.random((m, n)) * (hi - lo)
        Y2 = lo + rng.random((m, n)) * (hi - lo)
        t = rng.random((m, 1))
        g1 = p * _glt_g(Y1, q) + np.einsum("ij,ij->i", X, Y1)
        g2 = p * _glt_g(Y2, q) + np.einsum("ij,ij->i", X, Y2)
        midp = t * Y1 + (1 - t) * Y2
        mid = p * _glt_g(midp, q) + np.einsum("ij,ij->i", X, midp)
        d2 = np.sum((Y1 - Y2) ** 2, axis=-1)
        ok = d2 > 1e-12
        ratio = 2.0 * (np.maximum(g1, g2) - mid)[ok] / (t[ok, 0] * (1 - t[ok, 0]) * d2[ok])
        gamma = 0.90 * float(ratio.min())
    # eta from the coupling term x.(y - x); the g terms telescope out.
    rng = rng_for(12)
    m = 100_000
    X = lo + rng.random((m, n)) * (hi - lo)
    Y = lo + rng.random((m, n)) * (hi - lo)
    Z = lo + rng.random((m, n)) * (hi - lo)
    num = np.einsum("ij,ij->i", X - Y, Z - Y)
    den = np.sum((X - Y) ** 2, axis=-1) + np.sum((Y - Z) ** 2, axis=-1)
    ok = den > 1e-12
    eta = 1.05 * max(0.0, float(np.max(num[ok] / den[ok])))
    return max(gamma, 0.0), eta


def glt_example(p: float = 2.0, q: float = 2.0, n: int = 1, K: FeasibleSet | None = None) -> Bifunction:
    """Max-of-sqrt-and-parabola bifunction with a quadratic coupling term.

    ``f(x, y) = p (g(y) - g(x)) + x . (y - x)`` with
    ``g(u) = max(sqrt(||u||), ||u - q e||^2 - q)``.  Monotone, and strongly
    quasiconvex in ``y``; gamma and eta are deterministic sampled estimates.
    """
    if p <= 1 or q <= 1:
        raise ValueError("glt_example requires p > 1 and q > 1")
    p, q, n = float(p), float(q), int(n)
    if K is None:
        K = Box(np.zeros(n), 4.0 * np.ones(n))
    if not isinstance(K, Box):
        raise ValueError("glt_example expects a box domain")
    lo, hi = float(np.min(K.lo)), float(np.max(K.hi))
    gamma, eta = _glt_constants(p, q, lo, hi, n)

    def fn(X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return p * (_glt_g(Y, q) - _glt_g(X, q)) + np.einsum("...i,...i->...", X, Y - X)

    def partial_grad_y(x, y):
        return p * _glt_g_grad(np.asarray(y, dtype=float), q) + np.asarray(x, dtype=float)

    def y_parts(x):
        xa = np.asarray(x, dtype=float)
        fy = lambda Y: p * _glt_g(np.asarray(Y, dtype=float), q) + np.asarray(Y, dtype=float) @ xa
        gy = lambda Y: p * _glt_g_grad(np.asarray(Y, dtype=float), q) + xa
        return fy, gy

    return Bifunction(
        name=f"glt_example(p={p},q={q},n={n})",
        dim=n,
        domain=K,
        fn=fn,
        gamma=gamma,
        eta=eta,
        partial_grad_y=partial_grad_y,
        y_parts=y_parts,
    )


def bifunction_catalog(name: str, **params) -> Bifunction:
    if name == "value_gap":
        return value_gap(**params)
    if name == "glt_example":
        return glt_example(**params)
    raise ValueError(f"unknown bifunction {name!r}; known: value_gap, glt_example")


# ---------------------------------------------------------------------------
# Bregman kernels
# ---------------------------------------------------------------------------


def bregman_catalog(name: str, dim: int = 1, shift: float = 0.0) -> BregmanFunction:
    """Bregman kernels: ``half_sq_norm`` (zone R^n) and ``neg_entropy``.

    ``neg_entropy`` uses phi(x) = sum (x_i + shift) ln(x_i + shift) with zone
    ``{x : x_i > -shift}``; the shift lets domains touching zero or negative
    coordinates sit inside the zone.
    """
    dim = int(dim)
    if name == "half_sq_norm":
        return BregmanFunction(
            name="half_sq_norm",
            dim=dim,
            phi=lambda X: 0.5 * np.sum(np.asarray(X, dtype=float) ** 2, axis=-1),
            grad_phi=lambda X: np.asarray(X, dtype=float),
            zone_contains=lambda X: np.ones(np.asarray(X).shape[:-1], dtype=bool),
            closure_contains=lambda X: np.ones(np.asarray(X).shape[:-1], dtype=bool),
        )
    if name == "neg_entropy":
        s = float(shift)

        def phi(X):
            Z = np.asarray(X, dtype=float) + s
            with np.errstate(divide="ignore", invalid="ignore"):
                term = np.where(Z > 0, Z * np.log(np.where(Z > 0, Z, 1.0)), 0.0)
            return np.where(np.all(Z >= 0, axis=-1), np.sum(term, axis=-1), np.inf)

        def grad_phi(X):
            Z = np.asarray(X, dtype=float) + s
            return np.log(Z) + 1.0

        return BregmanFunction(
            name=f"neg_entropy(shift={s})",
            dim=dim,
            phi=phi,
            grad_phi=grad_phi,
            zone_contains=lambda X: np.all(np.asarray(X, dtype=float) + s > 0, axis=-1),
            closure_contains=lambda X: np.all(np.asarray(X, dtype=float) + s >= 0, axis=-1),
        )
    raise ValueError(f"unknown Bregman kernel {name!r}")
