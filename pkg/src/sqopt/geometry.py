"""Feasible sets, exact Euclidean projections and deterministic sampling.

Every solver in the package works over one of the closed convex set kinds
defined here.  Points are plain ``numpy`` float64 vectors of shape ``(n,)``;
all set operations also accept batches of shape ``(m, n)`` through the
``*_many`` variants.  Sampling uses the counter-based Philox generator so a
given seed reproduces the same points on any platform.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Dykstra guarantee is 1e-10; the sweep stop is tighter so that re-projecting
# a projected point moves it by less than the 1e-12 idempotence budget.
DYKSTRA_TOL = 1e-13
DYKSTRA_MAX_SWEEPS = 10_000
ORTHONORMAL_TOL = 1e-12


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite float64 vector, optionally checking its dimension."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1:
        raise ValueError(f"point must be one-dimensional, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"point has non-finite coordinates: {p}")
    if dim is not None and p.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {p.shape[0]}")
    return p


def rng_for(seed: int) -> np.random.Generator:
    """Counter-based Philox generator; the documented source of all sampling."""
    return np.random.Generator(np.random.Philox(key=int(seed)))


class FeasibleSet:
    """Base class for the supported closed convex set kinds."""

    dim: int
    kind: str = "abstract"

    def project(self, x) -> np.ndarray:
        x = as_point(x, self.dim)
        return self._project_many(x[None, :])[0]

    def project_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ValueError(f"expected shape (m, {self.dim}), got {X.shape}")
        return self._project_many(X)

    def _project_many(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-10) -> bool:
        """True iff ``x`` is within Euclidean distance ``tol`` of the set."""
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        x = as_point(x, self.dim)
        return float(np.linalg.norm(x - self.project(x))) <= tol

    def contains_many(self, X: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        d = np.linalg.norm(X - self.project_many(X), axis=-1)
        return d <= tol

    @property
    def is_bounded(self) -> bool:
        raise NotImplementedError

    def bounding_box(self, radius: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box enclosing the set (or its radius-truncated part)."""
        raise NotImplementedError

    def sample(self, seed: int, m: int, radius: float | None = None) -> np.ndarray:
        """Draw ``m`` approximately uniform points from the set, deterministically.

        Unbounded kinds require ``radius``: the sampling region is then the
        part of the set reachable within that coordinate range.
        """
        if m < 1:
            raise ValueError("m must be positive")
        rng = rng_for(seed)
        return self._sample(rng, m, radius)

    def _sample(self, rng, m, radius):
        raise NotImplementedError


@dataclass(frozen=True)
class FullSpace(FeasibleSet):
    dim: int
    kind: str = field(default="full_space", init=False)

    def _project_many(self, X):
        return X.copy()

    @property
    def is_bounded(self):
        return False

    def bounding_box(self, radius=None):
        if radius is None:
            raise ValueError("FullSpace is unbounded: a radius is required")
        r = float(radius)
        return -r * np.ones(self.dim), r * np.ones(self.dim)

    def _sample(self, rng, m, radius):
        lo, hi = self.bounding_box(radius)
        return lo + rng.random((m, self.dim)) * (hi - lo)


@dataclass(frozen=True)
class Box(FeasibleSet):
    lo: np.ndarray
    hi: np.ndarray
    kind: str = field(default="box", init=False)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("box requires lo_i <= hi_i for all i")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self):
        return self.lo.shape[0]

    def _project_many(self, X):
        return np.clip(X, self.lo, self.hi)

    @property
    def is_bounded(self):
        return True

    def bounding_box(self, radius=None):
        return self.lo.copy(), self.hi.copy()

    def _sample(self, rng, m, radius):
        return self.lo + rng.random((m, self.dim)) * (self.hi - self.lo)


def box1d(lo: float, hi: float) -> Box:
    return Box(np.array([float(lo)]), np.array([float(hi)]))


@dataclass(frozen=True)
class Ball(FeasibleSet):
    center: np.ndarray
    radius: float
    kind: str = field(default="ball", init=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")

    @property
    def dim(self):
        return self.center.shape[0]

    def _project_many(self, X):
        D = X - self.center
        nrm = np.linalg.norm(D, axis=-1, keepdims=True)
        scale = np.where(nrm > self.radius, self.radius / np.where(nrm == 0, 1.0, nrm), 1.0)
        return self.center + D * scale

    @property
    def is_bounded(self):
        return True

    def bounding_box(self, radius=None):
        return self.center - self.radius, self.center + self.radius

    def _sample(self, rng, m, radius):
        # Uniform in the ball: normal direction, radius ~ r * U^(1/n).
        d = rng.standard_normal((m, self.dim))
        d /= np.linalg.norm(d, axis=-1, keepdims=True)
        r = self.radius * rng.random(m) ** (1.0 / self.dim)
        return self.center + d * r[:, None]


@dataclass(frozen=True)
class AffineSubspace(FeasibleSet):
    """Affine subspace ``offset + span(basis columns)`` with orthonormal basis."""

    basis: np.ndarray
    offset: np.ndarray
    kind: str = field(default="affine", init=False)

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        off = np.atleast_1d(np.asarray(self.offset, dtype=float))
        if B.ndim != 2 or B.shape[0] != off.shape[0]:
            raise ValueError("basis must be (n, k) with offset of length n")
        gram = B.T @ B
        if np.max(np.abs(gram - np.eye(B.shape[1]))) > ORTHONORMAL_TOL:
            raise ValueError("basis columns must be orthonormal (tolerance 1e-12)")
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "offset", off)

    @property
    def dim(self):
        return self.offset.shape[0]

    @property
    def subspace_dim(self):
        return self.basis.shape[1]

    def _project_many(self, X):
        return self.offset + (X - self.offset) @ self.basis @ self.basis.T

    @property
    def is_bounded(self):
        return self.subspace_dim == 0

    def bounding_box(self, radius=None):
        if self.subspace_dim == 0:
            return self.offset.copy(), self.offset.copy()
        if radius is None:
            raise ValueError("AffineSubspace is unbounded: a radius is required")
        half = float(radius) * np.linalg.norm(self.basis, axis=1)
        return self.offset - half, self.offset + half

    def _sample(self, rng, m, radius):
        if self.subspace_dim == 0:
            return np.tile(self.offset, (m, 1))
        if radius is None:
            raise ValueError("AffineSubspace is unbounded: a radius is required")
        coeff = (2.0 * rng.random((m, self.subspace_dim)) - 1.0) * float(radius)
        return self.offset + coeff @ self.basis.T


def hyperplane(normal, value: float) -> AffineSubspace:
    """The affine subspace ``{x : normal . x = value}``."""
    a = as_point(normal)
    nrm = float(np.linalg.norm(a))
    if nrm == 0:
        raise ValueError("normal must be nonzero")
    a = a / nrm
    offset = a * (float(value) / nrm)
    # Orthonormal basis of the orthogonal complement of a.
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(a.shape[0])]))
    return AffineSubspace(q[:, 1 : a.shape[0]], offset)


@dataclass(frozen=True)
class HalfspaceIntersection(FeasibleSet):
    """Intersection of halfspaces ``normal_i . x <= bound_i``."""

    normals: np.ndarray
    bounds: np.ndarray
    kind: str = field(default="halfspaces", init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.atleast_1d(np.asarray(self.bounds, dtype=float))
        if A.shape[0] != b.shape[0]:
            raise ValueError("one bound per normal is required")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise ValueError("normals must be nonzero")
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "bounds", b)

    @property
    def dim(self):
        return self.normals.shape[1]

    def _project_one(self, x):
        A, b = self.normals, self.bounds
        if A.shape[0] == 1:
            a = A[0]
            excess = max(0.0, (a @ x - b[0]) / (a @ a))
            return x - excess * a
        # Dykstra's algorithm: converges to the Euclidean projection onto the
        # intersection, unlike plain alternating projection.
        y = x.copy()
        increments = np.zeros((A.shape[0], x.shape[0]))
        sq = np.einsum("ij,ij->i", A, A)
        for _ in range(DYKSTRA_MAX_SWEEPS):
            shift = 0.0
            for i in range(A.shape[0]):
                w = y + increments[i]
                excess = max(0.0, (A[i] @ w - b[i]) / sq[i])
                y_new = w - excess * A[i]
                increments[i] = w - y_new
                shift += float(np.linalg.norm(y_new - y))
                y = y_new
            if shift <= DYKSTRA_TOL:
                break
        return y

    def _project_many(self, X):
        viol = X @ self.normals.T - self.bounds
        out = X.copy()
        for i in np.nonzero(np.any(viol > 0, axis=1))[0]:
            out[i] = self._project_one(X[i])
        return out

    @property
    def is_bounded(self):
        # Not decidable cheaply in general; callers must pass a radius.
        return False

    def bounding_box(self, radius=None):
        if radius is None:
            raise ValueError("HalfspaceIntersection needs a radius for bounding")
        r = float(radius)
        return -r * np.ones(self.dim), r * np.ones(self.dim)

    def _sample(self, rng, m, radius):
        lo, hi = self.bounding_box(radius)
        out = np.empty((m, self.dim))
        got = 0
        for _ in range(400):
            cand = lo + rng.random((4 * m, self.dim)) * (hi - lo)
            ok = cand[np.all(cand @ self.normals.T <= self.bounds + 1e-12, axis=1)]
            take = min(m - got, ok.shape[0])
            out[got : got + take] = ok[:take]
            got += take
            if got == m:
                return out
        raise ValueError("rejection sampling failed; set may be empty within radius")


def feasible_set_from_spec(spec: dict) -> FeasibleSet:
    """Build a feasible set from its serialized description (harness schema)."""
    kind = spec.get("kind")
    if kind == "full_space":
        return FullSpace(int(spec["dim"]))
    if kind == "box":
        return Box(np.asarray(spec["lo"], dtype=float), np.asarray(spec["hi"], dtype=float))
    if kind == "ball":
        return Ball(np.asarray(spec["center"], dtype=float), float(spec["radius"]))
    if kind == "affine":
        if "normal" in spec:
            return hyperplane(np.asarray(spec["normal"], dtype=float), float(spec["value"]))
        return AffineSubspace(
            np.asarray(spec["basis"], dtype=float), np.asarray(spec["offset"], dtype=float)
        )
    if kind == "halfspaces":
        return HalfspaceIntersection(
            np.asarray(spec["normals"], dtype=float), np.asarray(spec["bounds"], dtype=float)
        )
    raise ValueError(f"unknown feasible set kind: {kind!r}")


def set_to_spec(K: FeasibleSet) -> dict:
    if isinstance(K, FullSpace):
        return {"kind": "full_space", "dim": K.dim}
    if isinstance(K, Box):
        return {"kind": "box", "lo": K.lo.tolist(), "hi": K.hi.tolist()}
    if isinstance(K, Ball):
        return {"kind": "ball", "center": K.center.tolist(), "radius": K.radius}
    if isinstance(K, AffineSubspace):
        return {"kind": "affine", "basis": K.basis.tolist(), "offset": K.offset.tolist()}
    if isinstance(K, HalfspaceIntersection):
        return {"kind": "halfspaces", "normals": K.normals.tolist(), "bounds": K.bounds.tolist()}
    raise ValueError(f"cannot serialize set of type {type(K).__name__}")
