"""Iterative methods for minimizing strongly quasiconvex objectives.

Six variants: the proximal point method and its relaxed-inertial form, a
Bregman proximal method, a projected method driven by the strong
subdifferential, and the gradient / heavy-ball / inertial discretizations of
the associated dynamical systems.  Parameter validators encode the
convergence-theorem regimes: violating a hard invariant raises, while leaving a
convergence-safe regime only flags the run as unguarded (so divergence
phenomena stay reproducible).

Sign convention: descent steps use ``-grad h`` everywhere.  Stopping replaces
the exact equality tests of the underlying schemes by ``residual <= stop_tol``;
an exactly zero residual still terminates as ``exact_fixed_point``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .functions import BregmanFunction, Objective, bregman_catalog
from .geometry import AffineSubspace, FeasibleSet, FullSpace, as_point
from .prox import GlobalSolveConfig, bregman_prox, prox

DIVERGENCE_GUARD = 1e6

VARIANTS = ("PPA", "RIPPA", "BPPA", "SUBGRAD", "GRAD", "HEAVY_BALL", "INERTIAL_GM")


@dataclass(frozen=True)
class Schedule:
    """Scalar sequence: constant, 1/(k+1)-scaled, or an explicit list."""

    kind: str
    value: float = 0.0
    values: tuple = ()

    def at(self, k: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "inv_k":
            return self.value / (k + 1)
        if self.kind == "list":
            return self.values[k] if k < len(self.values) else self.values[-1]
        raise ValueError(f"unknown schedule kind {self.kind!r}")

    @staticmethod
    def constant(v: float) -> "Schedule":
        return Schedule("constant", float(v))

    @staticmethod
    def inv_k(scale: float) -> "Schedule":
        return Schedule("inv_k", float(scale))

    @staticmethod
    def explicit(vals) -> "Schedule":
        return Schedule("list", 0.0, tuple(float(v) for v in vals))

    @staticmethod
    def from_spec(spec) -> "Schedule":
        if isinstance(spec, Schedule):
            return spec
        if isinstance(spec, (int, float)):
            return Schedule.constant(spec)
        kind = spec["kind"]
        if kind == "constant":
            return Schedule.constant(spec["value"])
        if kind == "inv_k":
            return Schedule.inv_k(spec["value"])
        if kind == "list":
            return Schedule.explicit(spec["values"])
        raise ValueError(f"unknown schedule kind {kind!r}")


@dataclass
class MinParams:
    """Parameter bag shared by the minimization variants."""

    variant: str = "PPA"
    c: Schedule = field(default_factory=lambda: Schedule.constant(1.0))  # prox parameter
    alpha: float = 0.0  # inertial cap
    alpha_sched: Schedule | None = None  # defaults to the constant cap
    rho_lo: float = 1.0
    rho_hi: float = 1.0
    rho_sched: Schedule | None = None  # defaults to the midpoint
    steps: Schedule = field(default_factory=lambda: Schedule.constant(0.1))  # step sizes
    beta: float = 1.0  # strong-subdifferential parameter
    theta: float = 0.5  # heavy-ball momentum
    hb_eta: float = 0.1  # heavy-ball eta (step is eta^2)
    eta_min: float = 0.0  # inertial method lower step bound
    psi: Callable[[int], np.ndarray] | None = None  # summable perturbations
    stop_tol: float = 1e-8
    max_iters: int = 100_000
    prox_cfg: GlobalSolveConfig = field(default_factory=GlobalSolveConfig)
    search_radius: float | None = None
    spotcheck_every: int = 100

    def alpha_at(self, k: int) -> float:
        a = self.alpha if self.alpha_sched is None else self.alpha_sched.at(k)
        if not 0.0 <= a <= self.alpha + 1e-15:
            raise ValueError(f"alpha_k={a} leaves [0, alpha={self.alpha}]")
        return a

    def rho_at(self, k: int) -> float:
        if self.rho_sched is not None:
            r = self.rho_sched.at(k)
        else:
            r = 0.5 * (self.rho_lo + self.rho_hi)
        if not self.rho_lo - 1e-15 <= r <= self.rho_hi + 1e-15:
            raise ValueError(f"rho_k={r} leaves [{self.rho_lo}, {self.rho_hi}]")
        return r

    def solve_cfg(self) -> GlobalSolveConfig:
        if self.search_radius is not None and self.prox_cfg.search_radius is None:
            return replace(self.prox_cfg, search_radius=self.search_radius)
        return self.prox_cfg


@dataclass
class IterationTrace:
    """Immutable record of one solver run.

    All arrays share one length; ``residuals[i]`` is the stopping quantity
    observed at state ``i`` (the final entry repeats the triggering value).
    """

    iterates: np.ndarray
    values: np.ndarray
    residuals: np.ndarray
    step_norms: np.ndarray
    cum_evals: np.ndarray
    prox_evals: int
    fn_evals: int
    wall_ms: float
    terminated_by: str  # residual | max_iters | exact_fixed_point | diverged
    guarded: bool
    guard_notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def final_point(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def final_value(self) -> float:
        return float(self.values[-1])

    @property
    def final_residual(self) -> float:
        return float(self.residuals[-1])

    @property
    def iterations(self) -> int:
        return self.iterates.shape[0] - 1


class _Recorder:
    def __init__(self, h: Objective, x0: np.ndarray):
        self.h = h
        self.t0 = time.perf_counter()
        self.states = [np.asarray(x0, dtype=float).copy()]
        self.values = [h.value(x0)]
        self.residuals = [np.inf]
        self.steps = [0.0]
        self.cum = [0]
        self.prox_evals = 0
        self.fn_evals = 0

    def push(self, x, residual: float):
        x = np.asarray(x, dtype=float)
        self.residuals[-1] = float(residual)
        self.states.append(x.copy())
        self.values.append(self.h.value(x))
        self.residuals.append(float(residual))
        self.steps.append(float(np.linalg.norm(x - self.states[-2])))
        self.cum.append(self.prox_evals)

    def mark(self, residual: float):
        """Record the stopping residual at the current state (no new state)."""
        self.residuals[-1] = float(residual)
        self.cum[-1] = self.prox_evals

    def done(self, terminated_by, guarded, notes, extra=None) -> IterationTrace:
        return IterationTrace(
            iterates=np.asarray(self.states),
            values=np.asarray(self.values),
            residuals=np.asarray(self.residuals),
            step_norms=np.asarray(self.steps),
            cum_evals=np.asarray(self.cum),
            prox_evals=self.prox_evals,
            fn_evals=self.fn_evals,
            wall_ms=1000.0 * (time.perf_counter() - self.t0),
            terminated_by=terminated_by,
            guarded=guarded,
            guard_notes=list(notes),
            extra=extra or {},
        )


def _is_affine(K: FeasibleSet) -> bool:
    return isinstance(K, (FullSpace, AffineSubspace))


def _schedule_positive(s: Schedule, label: str):
    probe = [s.at(k) for k in (0, 1, 10, 1000)]
    if any(v <= 0 for v in probe):
        raise ValueError(f"{label} must stay positive")


def rippa_rho_upper(beta_hat: float, rho_lo: float) -> float:
    """Relaxation upper bound guaranteeing the inertial summability condition."""
    num = 2.0 * rho_lo * (beta_hat**2 - beta_hat + 1.0)
    den = 2.0 * rho_lo * beta_hat**2 + (2.0 - rho_lo) * beta_hat + rho_lo
    return num / den


def default_rippa_params(gamma: float, alpha_target: float, rho_lo: float, **kw) -> MinParams:
    """Guarded relaxed-inertial parameters for a given inertial target.

    Uses ``beta_hat = (1 + alpha_target)/2`` and the summability relaxation
    ceiling; the relaxation schedule is the midpoint of its admissible range.
    Raises when the ceiling does not exceed ``rho_lo`` (lower the target).
    """
    if not 0.0 <= alpha_target < 1.0:
        raise ValueError("alpha_target must lie in [0, 1)")
    if not 0.0 < rho_lo < 2.0:
        raise ValueError("rho_lo must lie in (0, 2)")
    beta_hat = 0.5 * (1.0 + alpha_target)
    rho_hi = rippa_rho_upper(beta_hat, rho_lo)
    if rho_hi <= rho_lo:
        raise ValueError(
            f"relaxation ceiling {rho_hi:.6g} <= rho_lo {rho_lo:.6g}; lower alpha_target"
        )
    return MinParams(
        variant="RIPPA",
        alpha=alpha_target,
        alpha_sched=Schedule.constant(alpha_target),
        rho_lo=rho_lo,
        rho_hi=rho_hi,
        rho_sched=Schedule.constant(0.5 * (rho_lo + rho_hi)),
        **kw,
    )


def _validate_rippa(h: Objective, K: FeasibleSet, p: MinParams):
    if not 0.0 <= p.alpha < 1.0:
        raise ValueError("RIPPA requires 0 <= alpha < 1")
    if not 0.0 < p.rho_lo <= p.rho_hi < 2.0:
        raise ValueError("RIPPA requires 0 < rho_lo <= rho_hi < 2")
    _schedule_positive(p.c, "c_k")
    notes = []
    if p.alpha > 0.0 and not _is_affine(K):
        notes.append("inertial steps on a non-affine set are outside the guarded regime")
    if p.alpha == 0.0 and p.rho_hi > 1.0 and not _is_affine(K):
        notes.append("relaxation above 1 on a non-affine set is outside the guarded regime")
    if p.alpha > 0.0:
        ceiling = rippa_rho_upper(0.5 * (1.0 + p.alpha), p.rho_lo)
        if p.rho_hi > ceiling + 1e-12:
            notes.append(
                f"rho_hi {p.rho_hi:.6g} exceeds the summability ceiling {ceiling:.6g}"
            )
    if h.modulus <= 0:
        notes.append("objective declares no positive modulus")
    return notes


def run_rippa(h: Objective, K: FeasibleSet | None, p: MinParams, x0) -> IterationTrace:
    """Relaxed-inertial proximal point method (PPA when alpha=0, rho=1).

    Extrapolate ``y = x + alpha_k (x - x_prev)``, take a global proximal step
    ``z`` from ``y``, stop when ``||z - y|| <= stop_tol``, otherwise relax
    ``x_next = (1 - rho_k) y + rho_k z``.
    """
    K = h.domain if K is None else K
    notes = _validate_rippa(h, K, p)
    guarded = not notes
    cfg = p.solve_cfg()
    x0 = as_point(x0, h.dim)
    rec = _Recorder(h, x0)
    x_prev = x0
    x = x0
    inertia_sum = 0.0
    summands = []
    terminated = "max_iters"
    for k in range(p.max_iters):
        a_k = p.alpha_at(k)
        y = x + a_k * (x - x_prev)
        pr = prox(h, K, p.c.at(k), y, cfg)
        rec.prox_evals += 1
        rec.fn_evals += pr.n_evals
        z = pr.point
        r = float(np.linalg.norm(z - y))
        inertia_sum += a_k * float(np.sum((x - x_prev) ** 2))
        summands.append(a_k * float(np.sum((x - x_prev) ** 2)))
        if r == 0.0:
            rec.push(z, 0.0)
            terminated = "exact_fixed_point"
            break
        if r <= p.stop_tol:
            rec.push(z, r)
            terminated = "residual"
            break
        rho_k = p.rho_at(k)
        x_prev = x
        x = (1.0 - rho_k) * y + rho_k * z
        rec.push(x, r)
    tail = sum(summands[-max(1, len(summands) // 4) :])
    return rec.done(
        terminated,
        guarded,
        notes,
        extra={"inertial_summand_total": inertia_sum, "inertial_summand_tail": tail},
    )


def ppa_params(c: float, **kw) -> MinParams:
    """Plain proximal point parameters (alpha = 0, rho = 1)."""
    return MinParams(variant="PPA", c=Schedule.constant(c), alpha=0.0, rho_lo=1.0, rho_hi=1.0, **kw)


def run_ppa(h: Objective, K: FeasibleSet | None, p: MinParams, x0) -> IterationTrace:
    """Proximal point method: the alpha = 0, rho = 1 degeneracy of run_rippa."""
    q = replace(p, variant="PPA", alpha=0.0, alpha_sched=None, rho_lo=1.0, rho_hi=1.0, rho_sched=None)
    return run_rippa(h, K, q, x0)


def run_bppa(
    h: Objective,
    K: FeasibleSet | None,
    phi: BregmanFunction | str,
    p: MinParams,
    x0,
) -> IterationTrace:
    """Bregman proximal point method; strict descent while steps are nonzero.

    Iterates must stay in the kernel zone: leaving it aborts with a
    diagnostic.  With the half-squared-norm kernel this reproduces run_ppa.
    """
    K = h.domain if K is None else K
    if isinstance(phi, str):
        phi = bregman_catalog(phi, dim=h.dim)
    _schedule_positive(p.c, "c_k")
    notes = []
    if h.modulus <= 0:
        notes.append("objective declares no positive modulus")
    cfg = p.solve_cfg()
    x0 = as_point(x0, h.dim)
    if not bool(np.all(phi.zone_contains(x0))):
        raise ValueError("x0 must lie in the open zone of the Bregman kernel")
    rec = _Recorder(h, x0)
    x = x0
    terminated = "max_iters"
    for k in range(p.max_iters):
        pr = bregman_prox(h, K, phi, p.c.at(k), x, cfg)
        rec.prox_evals += 1
        rec.fn_evals += pr.n_evals
        x1 = pr.point
        if not bool(np.all(phi.zone_contains(x1))):
            raise RuntimeError(
                f"BPPA iterate left the kernel zone at iteration {k}: {x1.tolist()}"
            )
        r = float(np.linalg.norm(x1 - x))
        rec.push(x1, r)
        x = x1
        if r == 0.0:
            terminated = "exact_fixed_point"
            break
        if r <= p.stop_tol:
            terminated = "residual"
            break
    return rec.done(terminated, not notes, notes)


def run_subgradient(
    h: Objective,
    K: FeasibleSet | None,
    p: MinParams,
    x0,
    oracle: Callable[[np.ndarray], np.ndarray] | None = None,
) -> IterationTrace:
    """Projected method driven by the strong subdifferential.

    The default oracle returns the gradient (a strong sublevel-subgradient
    with beta = 1 for differentiable objectives); each oracle output is
    spot-checked against the sublevel membership inequality every
    ``spotcheck_every`` iterations and the run aborts on a witnessed failure.
    """
    from . import verify  # local import: verify depends on functions only

    K = h.domain if K is None else K
    if oracle is None:
        if h.grad is None:
            raise ValueError("SUBGRAD needs an oracle or a differentiable objective")
        oracle = h.grad_at
    if p.beta <= 0:
        raise ValueError("beta must be positive")
    gamma = h.modulus
    bound = np.inf if gamma <= 0 else 1.0 / (gamma * p.beta)
    _schedule_positive(p.steps, "step schedule")
    if p.steps.at(0) >= bound:
        raise ValueError(f"step schedule must stay below 1/(gamma beta) = {bound:.6g}")
    notes = []
    if p.steps.kind == "constant":
        notes.append("constant steps violate the square-summability condition")
    x0 = as_point(x0, h.dim)
    rec = _Recorder(h, x0)
    x = x0
    terminated = "max_iters"
    for k in range(p.max_iters):
        xi = np.asarray(oracle(x), dtype=float)
        rec.prox_evals += 1
        nrm = float(np.linalg.norm(xi))
        if p.spotcheck_every and k % p.spotcheck_every == 0 and nrm > 0:
            rep = verify.subdiff_member(
                h,
                K,
                xbar=x,
                z=xi,
                beta=p.beta,
                gamma=gamma,
                n_samples=32,
                seed=k,
                radius=p.search_radius,
                sublevel_only=True,
            )
            if not rep.passed:
                raise RuntimeError(
                    f"subgradient oracle failed membership spot-check at k={k}: "
                    f"{rep.witnesses[0]}"
                )
        if nrm == 0.0:
            rec.mark(0.0)
            terminated = "exact_fixed_point"
            break
        if nrm <= p.stop_tol:
            rec.mark(nrm)
            terminated = "residual"
            break
        step = p.steps.at(k)
        if step >= bound:
            raise ValueError(f"step {step} at k={k} violates the 1/(gamma beta) bound")
        x1 = K.project(x - step * xi)
        if float(np.linalg.norm(x1 - x)) == 0.0:
            rec.mark(nrm)
            terminated = "exact_fixed_point"
            break
        rec.push(x1, nrm)
        x = x1
    return rec.done(terminated, not notes, notes)


def run_gradient(h: Objective, p: MinParams, x0) -> IterationTrace:
    """Explicit gradient descent with optional summable perturbations."""
    if h.grad is None:
        raise ValueError("GRAD needs a differentiable objective")
    _schedule_positive(p.steps, "step schedule")
    notes = []
    if h.lip_grad and h.modulus > 0:
        cap = min(h.modulus / h.lip_grad**2, 2.0 / h.lip_grad)
        probe = max(p.steps.at(k) for k in (0, 1, 10, 1000))
        if probe >= cap:
            notes.append(f"step bound {probe:.6g} >= min(gamma/L^2, 2/L) = {cap:.6g}")
    else:
        notes.append("missing modulus or Lipschitz constant: step bound unverified")
    x0 = as_point(x0, h.dim)
    rec = _Recorder(h, x0)
    x = x0
    terminated = "max_iters"
    for k in range(p.max_iters):
        g = h.grad_at(x)
        rec.prox_evals += 1
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:
            rec.mark(0.0)
            terminated = "exact_fixed_point"
            break
        if nrm <= p.stop_tol:
            rec.mark(nrm)
            terminated = "residual"
            break
        x = x - p.steps.at(k) * g
        if p.psi is not None:
            x = x + np.asarray(p.psi(k), dtype=float)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_GUARD:
            rec.push(np.nan_to_num(x, posinf=DIVERGENCE_GUARD, neginf=-DIVERGENCE_GUARD), nrm)
            terminated = "diverged"
            break
        rec.push(x, nrm)
    return rec.done(terminated, not notes, notes)


def run_heavy_ball(h: Objective, p: MinParams, x0, x1=None) -> IterationTrace:
    """Heavy-ball iteration ``x+ = x + theta (x - x_prev) - eta^2 grad h(x)``."""
    if h.grad is None:
        raise ValueError("HEAVY_BALL needs a differentiable objective")
    if not 0.0 < p.theta < 1.0:
        raise ValueError("HEAVY_BALL requires theta in (0, 1)")
    if p.hb_eta <= 0:
        raise ValueError("HEAVY_BALL requires eta > 0")
    notes = []
    if h.lip_grad:
        cap = (1.0 - p.theta**2) / h.lip_grad
        if p.hb_eta**2 >= cap:
            raise ValueError(f"eta^2 must lie in (0, (1-theta^2)/L) = (0, {cap:.6g})")
    else:
        notes.append("missing Lipschitz constant: eta window unverified")
    x0 = as_point(x0, h.dim)
    x_prev = x0 if x1 is None else as_point(x1, h.dim)
    rec = _Recorder(h, x0)
    x = x0
    terminated = "max_iters"
    for k in range(p.max_iters):
        g = h.grad_at(x)
        rec.prox_evals += 1
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:
            rec.mark(0.0)
            terminated = "exact_fixed_point"
            break
        if nrm <= p.stop_tol:
            rec.mark(nrm)
            terminated = "residual"
            break
        x_next = x + p.theta * (x - x_prev) - p.hb_eta**2 * g
        x_prev = x
        x = x_next
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_GUARD:
            rec.push(np.nan_to_num(x, posinf=DIVERGENCE_GUARD, neginf=-DIVERGENCE_GUARD), nrm)
            terminated = "diverged"
            break
        rec.push(x, nrm)
    return rec.done(terminated, not notes, notes)


def run_inertial_gm(h: Objective, p: MinParams, x0, x1=None) -> IterationTrace:
    """Undamped inertial iteration ``x+ = 2x - x_prev - alpha_k grad h(x)``.

    Boundedness is monitored, not assumed: exceeding the divergence guard
    terminates the run with ``terminated_by='diverged'``.
    """
    if h.grad is None:
        raise ValueError("INERTIAL_GM needs a differentiable objective")
    if p.eta_min <= 0:
        raise ValueError("INERTIAL_GM requires a positive step lower bound eta_min")
    _schedule_positive(p.steps, "step schedule")
    notes = []
    x0 = as_point(x0, h.dim)
    x_prev = x0 if x1 is None else as_point(x1, h.dim)
    rec = _Recorder(h, x0)
    x = x0
    max_norm = float(np.linalg.norm(x))
    terminated = "max_iters"
    for k in range(p.max_iters):
        a_k = p.steps.at(k)
        if a_k < p.eta_min:
            raise ValueError(f"step {a_k} at k={k} fell below eta_min={p.eta_min}")
        g = h.grad_at(x)
        rec.prox_evals += 1
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:
            rec.mark(0.0)
            terminated = "exact_fixed_point"
            break
        if nrm <= p.stop_tol:
            rec.mark(nrm)
            terminated = "residual"
            break
        x_next = 2.0 * x - x_prev - a_k * g
        x_prev = x
        x = x_next
        max_norm = max(max_norm, float(np.linalg.norm(x)))
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_GUARD:
            rec.push(np.nan_to_num(x, posinf=DIVERGENCE_GUARD, neginf=-DIVERGENCE_GUARD), nrm)
            terminated = "diverged"
            notes.append("divergence guard fired: boundedness hypothesis failed empirically")
            break
        rec.push(x, nrm)
    return rec.done(
        terminated, terminated != "diverged" and not notes, notes, extra={"max_norm": max_norm}
    )
