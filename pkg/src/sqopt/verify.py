"""Sampled certification of structural properties of catalog objects.

Every verifier here is a one-sided sampled certificate: "pass" means no
violation was found at the reported sample count and seed, never a proof.
Margins are normalized by ``1 + |h|`` so large function values do not drown
the slack; a check passes iff the worst normalized margin stays above minus
its tolerance.  Sample streams are drawn as a single row-major uniform block
per call, so enlarging ``n`` keeps earlier samples as a prefix (estimates are
monotone under sample growth).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .functions import Bifunction, Objective
from .geometry import FeasibleSet, rng_for

SQC_TOL = 1e-8
GROWTH_TOL = 1e-9
A0_TOL = 1e-12
PSEUDO_TOL = 1e-10
GRAD_RTOL = 1e-6
WITNESS_CAP = 10


@dataclass
class CheckReport:
    """Outcome of one sampled property check."""

    property: str
    passed: bool
    samples: int
    worst_margin: float
    witnesses: list = field(default_factory=list)
    estimate: float | None = None

    def __post_init__(self):
        if self.passed and self.witnesses:
            raise ValueError("a passing report cannot carry witnesses")
        if not self.passed and not self.witnesses:
            raise ValueError("a failing report must carry at least one witness")


def _report(prop, margins, tol, witness_of, samples, estimate=None) -> CheckReport:
    """Assemble a report from normalized margins; first index wins ties."""
    if margins.size == 0:
        return CheckReport(prop, True, 0, np.inf, [], estimate)
    worst = float(np.min(margins))
    passed = worst >= -tol
    witnesses = []
    if not passed:
        bad = np.nonzero(margins < -tol)[0]
        order = bad[np.argsort(margins[bad], kind="stable")][:WITNESS_CAP]
        witnesses = [witness_of(int(i)) for i in order]
    return CheckReport(prop, passed, int(samples), worst, witnesses, estimate)


def _unit_block(seed: int, m: int, width: int) -> np.ndarray:
    """One (m, width) uniform block; rows are a prefix of any larger block."""
    return rng_for(seed).random((m, width))


def _map_to_set(K: FeasibleSet, U: np.ndarray, radius: float | None) -> np.ndarray:
    """Map unit-cube rows into K: affine map onto its bounding box, then project."""
    lo, hi = K.bounding_box(radius)
    X = lo + U * (hi - lo)
    return K.project_many(X)


def check_sqc_sampled(
    h: Objective,
    K: FeasibleSet | None = None,
    gamma: float | None = None,
    n_triples: int = 10_000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """Sampled test of the defining strong-quasiconvexity inequality.

    Evaluates ``h(t y + (1-t) x) <= max(h(x), h(y)) - t(1-t)(gamma/2)||x-y||^2``
    on ``n_triples`` triples with t on a jittered 64-stratum grid of (0, 1).
    """
    K = h.domain if K is None else K
    gamma = h.modulus if gamma is None else float(gamma)
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    d = K.dim
    U = _unit_block(seed, n_triples, 2 * d + 1)
    X = _map_to_set(K, U[:, :d], radius)
    Y = _map_to_set(K, U[:, d : 2 * d], radius)
    t = (np.arange(n_triples) % 64 + U[:, 2 * d]) / 64.0
    mid = t[:, None] * Y + (1.0 - t[:, None]) * X
    hx, hy, hm = h.value_many(X), h.value_many(Y), h.value_many(mid)
    mx = np.maximum(hx, hy)
    d2 = np.sum((X - Y) ** 2, axis=-1)
    slack = mx - t * (1.0 - t) * (gamma / 2.0) * d2 - hm
    scale = 1.0 + np.maximum(np.abs(mx), np.abs(hm))
    margins = slack / scale

    def witness(i):
        return {"x": X[i].tolist(), "y": Y[i].tolist(), "t": float(t[i]), "slack": float(slack[i])}

    return _report(f"sqc(gamma={gamma})", margins, SQC_TOL, witness, n_triples)


def estimate_modulus(
    h: Objective,
    K: FeasibleSet | None = None,
    n_triples: int = 10_000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """Sampled strong-quasiconvexity modulus: min ratio over valid triples.

    The estimate never increases when ``n_triples`` grows (prefix sampling).
    """
    K = h.domain if K is None else K
    d = K.dim
    U = _unit_block(seed, n_triples, 2 * d + 1)
    X = _map_to_set(K, U[:, :d], radius)
    Y = _map_to_set(K, U[:, d : 2 * d], radius)
    t = (np.arange(n_triples) % 64 + np.clip(U[:, 2 * d], 1e-9, 1 - 1e-9)) / 64.0
    d2 = np.sum((X - Y) ** 2, axis=-1)
    valid = d2 > 0
    if not np.any(valid):
        raise ValueError("all sampled pairs are degenerate (x = y)")
    mid = t[:, None] * X + (1.0 - t[:, None]) * Y
    mx = np.maximum(h.value_many(X), h.value_many(Y))
    hm = h.value_many(mid)
    ratio = 2.0 * (mx[valid] - hm[valid]) / (t[valid] * (1.0 - t[valid]) * d2[valid])
    est = max(0.0, float(np.min(ratio)))
    return CheckReport(
        "modulus_estimate", True, int(np.sum(valid)), float(np.min(ratio)), [], est
    )


def check_supercoercive(
    h: Objective,
    radii: list[float],
    n_directions: int = 64,
    seed: int = 0,
) -> CheckReport:
    """Empirical 2-supercoercivity: h(x)/||x||^2 along rays, largest radii.

    Passes when the proxy at the largest radius is positive and has not
    decayed by more than half relative to the previous radius.  Raises when
    the domain admits no tested ray (check inapplicable on bounded sets).
    """
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    radii = sorted(float(r) for r in radii)
    K = h.domain
    D = rng_for(seed).standard_normal((n_directions, K.dim))
    D /= np.linalg.norm(D, axis=-1, keepdims=True)
    ok = np.ones(n_directions, dtype=bool)
    for r in radii:
        ok &= K.contains_many(r * D, tol=1e-9 * (1.0 + r))
    if not np.any(ok):
        raise ValueError("no ray of the tested radii stays in the domain: check inapplicable")
    D = D[ok]
    r_hi, r_lo = radii[-1], radii[-2]
    proxy = float(np.min(h.value_many(r_hi * D) / r_hi**2))
    prev = float(np.min(h.value_many(r_lo * D) / r_lo**2))
    margin = min(proxy - 0.5 * prev, proxy - 1e-12)
    i_bad = int(np.argmin(h.value_many(r_hi * D)))
    return _report(
        "supercoercive",
        np.array([margin]),
        0.0,
        lambda i: {"x": (r_hi * D[i_bad]).tolist(), "ratio": proxy},
        int(D.shape[0]),
        estimate=proxy,
    )


def check_quadratic_growth(
    h: Objective,
    K: FeasibleSet | None = None,
    xbar=None,
    gamma: float | None = None,
    n_samples: int = 1000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """h(x) - h(xbar) >= (gamma/8) ||x - xbar||^2 at sampled points."""
    K = h.domain if K is None else K
    gamma = h.modulus if gamma is None else float(gamma)
    if xbar is None:
        if h.known_min is None:
            raise ValueError("xbar required when the objective has no known minimizer")
        xbar = h.known_min[0]
    xbar = np.asarray(xbar, dtype=float)
    if not K.contains(xbar, tol=1e-8):
        raise ValueError("xbar is not in K")
    X = _map_to_set(K, _unit_block(seed, n_samples, K.dim), radius)
    hb = h.value(xbar)
    slack = h.value_many(X) - hb - (gamma / 8.0) * np.sum((X - xbar) ** 2, axis=-1)

    def witness(i):
        return {"x": X[i].tolist(), "slack": float(slack[i])}

    return _report("quadratic_growth", slack, GROWTH_TOL, witness, n_samples)


def check_foc(
    h: Objective,
    K: FeasibleSet | None = None,
    gamma: float | None = None,
    n_pairs: int = 2000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """First-order test: h(x) <= h(y) implies grad h(y).(y-x) >= (gamma/2)||x-y||^2."""
    if h.grad is None:
        raise ValueError("check_foc needs a gradient")
    K = h.domain if K is None else K
    gamma = h.modulus if gamma is None else float(gamma)
    d = K.dim
    U = _unit_block(seed, n_pairs, 2 * d)
    X = _map_to_set(K, U[:, :d], radius)
    Y = _map_to_set(K, U[:, d:], radius)
    hx, hy = h.value_many(X), h.value_many(Y)
    G = h.grad_many(Y)
    lhs = np.einsum("ij,ij->i", G, Y - X)
    rhs = (gamma / 2.0) * np.sum((X - Y) ** 2, axis=-1)
    premise = hx <= hy
    slack = np.where(premise, lhs - rhs, np.inf)
    scale = 1.0 + np.abs(lhs) + np.abs(rhs)
    margins = slack / scale

    def witness(i):
        return {"x": X[i].tolist(), "y": Y[i].tolist(), "lhs": float(lhs[i]), "rhs": float(rhs[i])}

    return _report(f"first_order(gamma={gamma})", margins, SQC_TOL, witness, int(premise.sum()))


def check_pl(
    h: Objective,
    K: FeasibleSet | None = None,
    xbar=None,
    gamma: float | None = None,
    lip: float | None = None,
    n_samples: int = 1000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """Polyak-Lojasiewicz test with constant gamma^2 / (2 L)."""
    if h.grad is None:
        raise ValueError("check_pl needs a gradient")
    lip = h.lip_grad if lip is None else float(lip)
    if lip is None or lip <= 0:
        raise ValueError("check_pl needs a positive Lipschitz constant")
    K = h.domain if K is None else K
    gamma = h.modulus if gamma is None else float(gamma)
    if xbar is None:
        if h.known_min is None:
            raise ValueError("xbar required")
        xbar = h.known_min[0]
    nu = gamma**2 / (2.0 * lip)
    X = _map_to_set(K, _unit_block(seed, n_samples, K.dim), radius)
    gn2 = np.sum(h.grad_many(X) ** 2, axis=-1)
    gap = h.value_many(X) - h.value(np.asarray(xbar, dtype=float))
    slack = gn2 - nu * gap
    scale = 1.0 + np.abs(gn2) + np.abs(nu * gap)
    margins = slack / scale

    def witness(i):
        return {"x": X[i].tolist(), "grad_sq": float(gn2[i]), "bound": float(nu * gap[i])}

    return _report(f"pl(nu={nu:.6g})", margins, SQC_TOL, witness, n_samples)


@dataclass
class CfzCertificate:
    """Local directional certificate (e, alpha) at a point, with its report."""

    e: np.ndarray | None
    alpha: float | None
    trivial: bool
    report: CheckReport


def check_cfz_at(
    h: Objective,
    xbar,
    rho: float,
    n_samples: int = 512,
    seed: int = 0,
) -> CfzCertificate:
    """Constructive local-strong-quasiconvexity certificate at ``xbar``.

    Uses ``e = -grad/||grad||`` and ``alpha = gamma / (2 ||grad||)``; verifies
    ``<e, y - xbar> >= alpha ||y - xbar||^2`` on sampled sublevel points in
    the ball of radius ``rho``.  A zero gradient yields the trivial
    certificate (the point is the minimizer).
    """
    xbar = np.asarray(xbar, dtype=float)
    g = h.grad_at(xbar)
    gn = float(np.linalg.norm(g))
    if gn <= 1e-14:
        rep = CheckReport("cfz_at(trivial)", True, 0, np.inf, [], None)
        return CfzCertificate(None, None, True, rep)
    if h.modulus <= 0:
        raise ValueError("check_cfz_at needs a positive declared modulus")
    e = -g / gn
    alpha = h.modulus / (2.0 * gn)
    U = _unit_block(seed, n_samples, h.dim)
    Y = xbar + (2.0 * U - 1.0) * rho
    d = np.linalg.norm(Y - xbar, axis=-1)
    keep = (
        (d <= rho)
        & h.domain.contains_many(Y, tol=1e-9)
        & (h.value_many(Y) <= h.value(xbar) + 1e-12)
    )
    Y = Y[keep]
    slack = (Y - xbar) @ e - alpha * np.sum((Y - xbar) ** 2, axis=-1)
    scale = 1.0 + alpha * np.sum((Y - xbar) ** 2, axis=-1)
    margins = slack / scale

    def witness(i):
        return {"y": Y[i].tolist(), "slack": float(slack[i])}

    rep = _report(f"cfz_at(alpha={alpha:.6g})", margins, SQC_TOL, witness, int(keep.sum()))
    return CfzCertificate(e, alpha, False, rep)


def subdiff_member(
    h: Objective,
    K: FeasibleSet | None = None,
    xbar=None,
    z=None,
    beta: float = 1.0,
    gamma: float | None = None,
    n_samples: int = 200,
    seed: int = 0,
    radius: float | None = None,
    sublevel_only: bool = False,
) -> CheckReport:
    """One-sided sampled membership test for the strong subdifferential.

    Checks ``max(h(y), h(xbar)) >= h(xbar) + (t/beta) z.(y-xbar)
    + (t/2)(gamma - t/beta - t gamma) ||y-xbar||^2`` over sampled ``y`` in K
    and ``t`` on the closed grid {0, 0.05, ..., 1}.  With ``sublevel_only``
    the y samples are restricted to the sublevel set at ``h(xbar)`` (the set
    quantified by the sublevel-subdifferential membership of gradients).
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    K = h.domain if K is None else K
    gamma = h.modulus if gamma is None else float(gamma)
    xbar = np.asarray(xbar, dtype=float)
    z = np.asarray(z, dtype=float)
    Y = _map_to_set(K, _unit_block(seed, n_samples, K.dim), radius)
    hb = h.value(xbar)
    if sublevel_only:
        Y = Y[h.value_many(Y) <= hb + 1e-12]
    t = np.linspace(0.0, 1.0, 21)  # includes both endpoints exactly
    hy = h.value_many(Y)
    lhs = np.maximum(hy, hb)[:, None]
    dot = (Y - xbar) @ z
    d2 = np.sum((Y - xbar) ** 2, axis=-1)
    rhs = (
        hb
        + (t[None, :] / beta) * dot[:, None]
        + 0.5 * t[None, :] * (gamma - t[None, :] / beta - t[None, :] * gamma) * d2[:, None]
    )
    slack = (lhs - rhs).ravel()
    scale = (1.0 + np.abs(lhs - hb) + np.abs(rhs - hb)).ravel()
    margins = slack / scale
    nt = t.shape[0]

    def witness(i):
        return {"y": Y[i // nt].tolist(), "t": float(t[i % nt]), "slack": float(slack[i])}

    return _report(f"subdiff_member(beta={beta},gamma={gamma})", margins, SQC_TOL, witness, slack.size)


def estimate_eta(
    f: Bifunction,
    K: FeasibleSet | None = None,
    n_triples: int = 5000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """Sampled Lipschitz-type constant: max positive three-point ratio.

    Numerators below ``1e-12 * (1 + |f|)`` count as zero so telescoping
    bifunctions report exactly 0.
    """
    K = f.domain if K is None else K
    d = K.dim
    U = _unit_block(seed, n_triples, 3 * d)
    X = _map_to_set(K, U[:, :d], radius)
    Y = _map_to_set(K, U[:, d : 2 * d], radius)
    Z = _map_to_set(K, U[:, 2 * d :], radius)
    fxz, fxy, fyz = f.fn(X, Z), f.fn(X, Y), f.fn(Y, Z)
    num = fxz - fxy - fyz
    den = np.sum((X - Y) ** 2, axis=-1) + np.sum((Y - Z) ** 2, axis=-1)
    scale = 1.0 + np.maximum(np.abs(fxz), np.maximum(np.abs(fxy), np.abs(fyz)))
    meaningful = (num > 1e-12 * scale) & (den > 1e-12)
    est = float(np.max(num[meaningful] / den[meaningful])) if np.any(meaningful) else 0.0
    return CheckReport("eta_estimate", True, n_triples, est, [], est)


def check_a0(
    f: Bifunction,
    K: FeasibleSet | None = None,
    n_samples: int = 500,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """f(x, x) = 0 on sampled points, tolerance 1e-12."""
    K = f.domain if K is None else K
    X = _map_to_set(K, _unit_block(seed, n_samples, K.dim), radius)
    vals = f.fn(X, X)
    margins = -np.abs(vals)

    def witness(i):
        return {"x": X[i].tolist(), "f_xx": float(vals[i])}

    return _report("a0", margins, A0_TOL, witness, n_samples)


def check_pseudomonotone(
    f: Bifunction,
    K: FeasibleSet | None = None,
    n_pairs: int = 2000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """f(x, y) >= 0 implies f(y, x) <= 0 on sampled pairs (tolerance 1e-10).

    Every 16th pair is diagonal (y = x) so violations of f(x, x) = 0 surface
    here as well.
    """
    K = f.domain if K is None else K
    d = K.dim
    U = _unit_block(seed, n_pairs, 2 * d)
    X = _map_to_set(K, U[:, :d], radius)
    Y = _map_to_set(K, U[:, d:], radius)
    Y[::16] = X[::16]
    fxy = f.fn(X, Y)
    fyx = f.fn(Y, X)
    premise = fxy >= 0.0
    margins = np.where(premise, -fyx, np.inf)

    def witness(i):
        return {"x": X[i].tolist(), "y": Y[i].tolist(), "f_xy": float(fxy[i]), "f_yx": float(fyx[i])}

    return _report("pseudomonotone", margins, PSEUDO_TOL, witness, int(premise.sum()))


def check_a4_sampled(
    f: Bifunction,
    K: FeasibleSet | None = None,
    n_x: int = 8,
    n_triples: int = 2000,
    seed: int = 0,
    radius: float | None = None,
) -> CheckReport:
    """Strong quasiconvexity of f(x, .) with the declared modulus, sampled over x."""
    K = f.domain if K is None else K
    Xs = _map_to_set(K, _unit_block(seed + 101, n_x, K.dim), radius)
    worst = np.inf
    witnesses = []
    total = 0
    for j, x in enumerate(Xs):
        fy, _ = f.y_objective(x)
        slice_obj = Objective(
            name=f"{f.name}|x{j}", dim=f.dim, domain=K, modulus=f.gamma, fn=fy
        )
        rep = check_sqc_sampled(
            slice_obj, K, f.gamma, n_triples=n_triples, seed=seed + j, radius=radius
        )
        total += rep.samples
        if rep.worst_margin < worst:
            worst = rep.worst_margin
        if not rep.passed:
            witnesses.extend({"x": x.tolist(), **w} for w in rep.witnesses)
    passed = worst >= -SQC_TOL
    return CheckReport("a4_sqc", passed, total, worst, witnesses[:WITNESS_CAP])


def grad_check(h: Objective, points: np.ndarray) -> CheckReport:
    """Central finite-difference validation of the analytic gradient."""
    if h.grad is None:
        raise ValueError("objective has no gradient to check")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    margins = np.empty(P.shape[0])
    rels = np.empty(P.shape[0])
    for i, x in enumerate(P):
        step = 1e-6 * (1.0 + float(np.linalg.norm(x)))
        fd = np.empty_like(x)
        for j in range(x.shape[0]):
            e = np.zeros_like(x)
            e[j] = step
            fd[j] = (h.value(x + e) - h.value(x - e)) / (2.0 * step)
        g = h.grad_at(x)
        rels[i] = float(np.linalg.norm(fd - g) / (1.0 + np.linalg.norm(g)))
        margins[i] = GRAD_RTOL - rels[i]

    def witness(i):
        return {"x": P[i].tolist(), "rel_error": float(rels[i])}

    return _report("grad_check", margins, 0.0, witness, P.shape[0], estimate=float(np.max(rels)))
