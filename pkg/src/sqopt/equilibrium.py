"""Solvers for equilibrium problems with strongly quasiconvex bifunctions.

Find ``x`` in K with ``f(x, y) >= 0`` for all ``y`` in K.  Six methods: the
relaxed-inertial proximal scheme, full-bifunction regularization with nested
proximal solves, constant-inertia extrapolation (positive or negative), a
two-step predictor-corrector, and two extragradient methods (normalized star
step and plain strong-subdifferential step).

Guarded parameter windows follow the corrected split for the proximal
parameter: ``beta in (0, min(1/(8 eta - gamma), 1/(4 eta)))`` when
``0 < gamma < 8 eta`` and ``beta in (1/(gamma - 8 eta), 1/(4 eta))`` when
``gamma > 12 eta``; the strict policy exposes only the latter.  Validators
flag runs outside the windows instead of blocking them.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .functions import Bifunction
from .geometry import FeasibleSet, as_point
from .minimize import IterationTrace, Schedule, _is_affine, _Recorder
from .prox import GlobalSolveConfig, ProxResult, _global_min_impl, prox_point
from .verify import (
    CheckReport,
    check_a0,
    check_a4_sampled,
    check_pseudomonotone,
    estimate_eta,
)

EP_VARIANTS = ("RIPPA_EP", "REG_EP", "IEPPA_EP", "TWO_PPA_EP", "EG_EP", "PEG_EP")
LINE_SEARCH_CAP = 60  # 2^-60 underflow guard


@dataclass
class EpParams:
    variant: str = "RIPPA_EP"
    beta: Schedule = field(default_factory=lambda: Schedule.constant(1.0))
    alpha: float = 0.0  # inertial parameter / cap
    alpha_sched: Schedule | None = None
    rho_lo: float = 1.0
    rho_hi: float = 1.0
    rho_sched: Schedule | None = None
    ls_alpha: float = 0.5  # line-search sufficient-decrease factor
    ls_rho: float = 0.5  # line-search backtracking ratio
    steps: Schedule = field(default_factory=lambda: Schedule.inv_k(0.5))  # projection steps
    epsilon: float = 1e-3  # two-step interval margin
    inner_max: int = 1000  # nested solve iteration cap
    stop_tol: float = 1e-8
    max_iters: int = 100_000
    prox_cfg: GlobalSolveConfig = field(default_factory=GlobalSolveConfig)
    search_radius: float | None = None
    policy: str = "corrected"  # corrected | strict
    oracle_check_samples: int = 32

    def rho_at(self, k: int) -> float:
        if self.rho_sched is not None:
            return self.rho_sched.at(k)
        return 0.5 * (self.rho_lo + self.rho_hi)

    def alpha_at(self, k: int) -> float:
        return self.alpha if self.alpha_sched is None else self.alpha_sched.at(k)

    def solve_cfg(self) -> GlobalSolveConfig:
        if self.search_radius is not None and self.prox_cfg.search_radius is None:
            return replace(self.prox_cfg, search_radius=self.search_radius)
        return self.prox_cfg


@dataclass
class EpProblem:
    f: Bifunction
    K: FeasibleSet | None = None
    known_solution: np.ndarray | None = None
    reports: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.K is None:
            self.K = self.f.domain

    def certify(self, seed: int = 0, radius: float | None = None) -> "EpProblem":
        """Attach sampled assumption reports (A0, pseudomonotonicity, A4, A5)."""
        f, K = self.f, self.K
        self.reports["A0"] = check_a0(f, K, seed=seed, radius=radius)
        self.reports["A2"] = check_pseudomonotone(f, K, seed=seed + 1, radius=radius)
        self.reports["A4"] = check_a4_sampled(f, K, seed=seed + 2, radius=radius)
        eta_rep = estimate_eta(f, K, seed=seed + 3, radius=radius)
        ok = eta_rep.estimate <= f.eta + 1e-8
        self.reports["A5"] = CheckReport(
            property=f"a5(eta={f.eta})",
            passed=ok,
            samples=eta_rep.samples,
            worst_margin=f.eta - eta_rep.estimate,
            witnesses=[] if ok else [{"eta_hat": eta_rep.estimate}],
            estimate=eta_rep.estimate,
        )
        return self

    @property
    def certified(self) -> bool:
        return bool(self.reports) and all(r.passed for r in self.reports.values())


def beta_window(gamma: float, eta: float, policy: str = "corrected") -> tuple[float, float] | None:
    """Admissible proximal-parameter interval for the relaxed-inertial scheme."""
    if gamma <= 0:
        return None
    if eta <= 0:
        return (1.0 / gamma, np.inf)
    hi = 1.0 / (4.0 * eta)
    if gamma > 12.0 * eta:
        return (1.0 / (gamma - 8.0 * eta), hi)
    if policy == "corrected" and gamma < 8.0 * eta:
        return (0.0, min(1.0 / (8.0 * eta - gamma), hi))
    return None


def _beta_probe(p: EpParams) -> list[float]:
    return [p.beta.at(k) for k in (0, 1, 10, 1000)]


def _ep_prox(f: Bifunction, K: FeasibleSet, beta: float, center: np.ndarray, cfg) -> ProxResult:
    """Proximal step in the second argument: argmin_y f(x, y) + ||y-c||^2/(2 beta)."""
    fy, gy = f.y_objective(center)
    return prox_point(fy, gy, K, beta, center, cfg)


def ep_residual(prob: EpProblem, x, cfg: GlobalSolveConfig | None = None) -> float:
    """Certificate residual ``min_y f(x, y)``; near zero iff x solves the problem."""
    cfg = cfg or GlobalSolveConfig()
    x = as_point(x, prob.f.dim)
    fn = lambda Y: np.asarray(prob.f.fn(x, Y), dtype=float)
    grad = None
    if prob.f.partial_grad_y is not None:
        grad = lambda Y: np.apply_along_axis(lambda y: prob.f.partial_grad_y(x, y), -1, np.atleast_2d(Y))
    res = _global_min_impl(fn, grad, prob.K, cfg)
    return float(res.value)


def check_minty(prob: EpProblem, xbar, n_samples: int = 1000, seed: int = 0, tol: float = 1e-8,
                radius: float | None = None) -> CheckReport:
    """Dual feasibility: sampled y satisfy f(y, xbar) <= tol at the solution."""
    from .verify import _map_to_set, _report, _unit_block

    xbar = as_point(xbar, prob.f.dim)
    Y = _map_to_set(prob.K, _unit_block(seed, n_samples, prob.K.dim), radius)
    vals = prob.f.fn(Y, xbar[None, :].repeat(n_samples, axis=0))
    margins = -vals

    def witness(i):
        return {"y": Y[i].tolist(), "f_y_xbar": float(vals[i])}

    return _report("minty_dual", margins, tol, witness, n_samples)


# ---------------------------------------------------------------------------
# validators
# ---------------------------------------------------------------------------


def _validate_rippa_ep(prob: EpProblem, p: EpParams) -> list[str]:
    if not 0.0 <= p.alpha < 1.0:
        raise ValueError("RIPPA_EP requires 0 <= alpha < 1")
    if not 0.0 < p.rho_lo <= p.rho_hi < 2.0:
        raise ValueError("RIPPA_EP requires 0 < rho_lo <= rho_hi < 2")
    notes = []
    f = prob.f
    win = beta_window(f.gamma, f.eta, p.policy)
    betas = _beta_probe(p)
    if win is None:
        notes.append(f"no admissible beta window for gamma={f.gamma:.4g}, eta={f.eta:.4g}")
    elif not all(win[0] < b < win[1] for b in betas):
        notes.append(f"beta leaves the window ({win[0]:.4g}, {win[1]:.4g})")
    if f.eta > 0:
        rho_dev = max(1.0 - p.rho_lo, p.rho_hi - 1.0)
        if rho_dev > 1.0 - 4.0 * f.eta * max(betas) + 1e-12:
            notes.append("relaxation deviation exceeds 1 - 4 eta beta")
    if p.alpha > 0.0 and not _is_affine(prob.K):
        notes.append("inertial steps on a non-affine set are outside the guarded regime")
    if p.alpha == 0.0 and p.rho_hi > 1.0 and not _is_affine(prob.K):
        notes.append("relaxation above 1 on a non-affine set is outside the guarded regime")
    return notes


def _validate_ieppa(prob: EpProblem, p: EpParams) -> list[str]:
    if not -1.0 < p.alpha < 1.0:
        raise ValueError("IEPPA_EP requires alpha in (-1, 1)")
    f = prob.f
    notes = []
    if f.gamma <= 12.0 * f.eta:
        notes.append(f"theorem window empty: gamma={f.gamma:.4g} <= 12 eta={12 * f.eta:.4g}")
        return notes
    lo = 1.0 / (f.gamma - 8.0 * f.eta)
    b = p.beta.at(0)
    if p.alpha >= 0.0:
        if p.alpha >= 1.0 / 3.0:
            notes.append("positive inertia requires alpha < 1/3")
        hi = np.inf if f.eta == 0 else (1.0 - 3.0 * p.alpha) / (4.0 * f.eta * (1.0 - p.alpha))
        if not lo < b < hi:
            notes.append(f"beta={b:.4g} leaves ({lo:.4g}, {hi:.4g})")
    else:
        hi = np.inf if f.eta == 0 else 1.0 / (4.0 * f.eta)
        if not lo < b < hi:
            notes.append(f"beta={b:.4g} leaves ({lo:.4g}, {hi:.4g})")
    return notes


def _validate_2ppa(prob: EpProblem, p: EpParams) -> list[str]:
    f = prob.f
    if p.epsilon <= 0:
        raise ValueError("TWO_PPA_EP requires epsilon > 0")
    lo = (-np.inf if f.gamma <= 8.0 * f.eta else 1.0 / (f.gamma - 8.0 * f.eta)) if f.eta > 0 else (
        1.0 / f.gamma if f.gamma > 0 else np.inf
    )
    hi = np.inf if f.eta == 0 else 1.0 / (4.0 * f.eta)
    if lo + p.epsilon > hi - p.epsilon:
        raise ValueError(
            f"empty beta interval [{lo:.4g}+eps, {hi:.4g}-eps] for gamma={f.gamma:.4g}, eta={f.eta:.4g}"
        )
    notes = []
    betas = _beta_probe(p)
    if not all(lo + p.epsilon <= b <= hi - p.epsilon for b in betas):
        notes.append(f"beta leaves [{lo + p.epsilon:.4g}, {hi - p.epsilon:.4g}]")
    if f.gamma <= 12.0 * f.eta:
        notes.append(f"theorem hypothesis gamma > 12 eta fails ({f.gamma:.4g} <= {12 * f.eta:.4g})")
    return notes


def _validate_eg(prob: EpProblem, p: EpParams, peg: bool) -> list[str]:
    if not 0.0 < p.ls_alpha < 1.0 or not 0.0 < p.ls_rho < 1.0:
        raise ValueError("line-search parameters must lie in (0, 1)")
    notes = []
    betas = _beta_probe(p)
    if any(b2 > b1 + 1e-12 for b1, b2 in zip(betas, betas[1:])):
        notes.append("beta schedule is not nonincreasing")
    if min(betas) <= 0:
        raise ValueError("beta must stay positive")
    if p.steps.kind == "constant":
        notes.append("constant projection steps violate the square-summability condition")
    if peg:
        step_probe = [p.steps.at(k) for k in (0, 1, 10)]
        if max(step_probe) >= min(betas):
            notes.append("projection steps must stay below inf beta")
    return notes


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------


class _EpRecorder(_Recorder):
    """Trace recorder against the bifunction value at a reference point."""

    def __init__(self, prob: EpProblem, x0: np.ndarray):
        class _ValueShim:
            def __init__(self, f, ref):
                self.f, self.ref = f, ref

            def value(self, x):
                return float(self.f.fn(self.ref, np.asarray(x, dtype=float)))

        # values along the trace are f(x0, x^k): zero at x0, negative past it
        super().__init__(_ValueShim(prob.f, x0.copy()), x0)


def run_rippa_ep(prob: EpProblem, p: EpParams, x0) -> IterationTrace:
    """Relaxed-inertial proximal point method for the equilibrium problem."""
    notes = _validate_rippa_ep(prob, p)
    cfg = p.solve_cfg()
    x0 = as_point(x0, prob.f.dim)
    rec = _EpRecorder(prob, x0)
    x_prev = x0
    x = x0
    terminated = "max_iters"
    for k in range(p.max_iters):
        a_k = p.alpha_at(k)
        y = x + a_k * (x - x_prev)
        pr = _ep_prox(prob.f, prob.K, p.beta.at(k), y, cfg)
        rec.prox_evals += 1
        rec.fn_evals += pr.n_evals
        z = pr.point
        r = float(np.linalg.norm(z - y))
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
    return rec.done(terminated, not notes, notes)


def run_ppa_ep(prob: EpProblem, p: EpParams, x0) -> IterationTrace:
    """Proximal point method: the alpha = 0, rho = 1 degeneracy of run_rippa_ep."""
    q = replace(
        p, variant="RIPPA_EP", alpha=0.0, alpha_sched=None, rho_lo=1.0, rho_hi=1.0, rho_sched=None
    )
    return run_rippa_ep(prob, q, x0)


def run_reg_ep(prob: EpProblem, p: EpParams, x0) -> IterationTrace:
    """Regularized-bifunction method with nested proximal inner solves.

    Each outer step solves the equilibrium problem for
    ``f_k(x, y) = f(x, y) + (x - x_k).(y - x)/beta_k`` by a nested proximal
    iteration warm-started at ``x_k``, to tolerance
    ``max(stop_tol, 0.1 * previous outer residual)``.
    """
    if p.beta.at(0) <= 0:
        raise ValueError("REG_EP requires positive beta")
    notes: list[str] = []
    cfg = p.solve_cfg()
    f = prob.f
    x0 = as_point(x0, f.dim)
    rec = _EpRecorder(prob, x0)
    x = x0
    prev_res = 1.0
    terminated = "max_iters"
    for k in range(p.max_iters):
        beta_k = p.beta.at(k)
        xk = x.copy()

        def fn_k(X, Y, xk=xk, beta_k=beta_k):
            X = np.asarray(X, dtype=float)
            Y = np.asarray(Y, dtype=float)
            return f.fn(X, Y) + np.einsum("...i,...i->...", X - xk, Y - X) / beta_k

        def y_parts_k(xc, xk=xk, beta_k=beta_k):
            fy, gy = f.y_objective(xc)
            shift = (np.asarray(xc, dtype=float) - xk) / beta_k
            fy_k = lambda Y: fy(Y) + np.asarray(Y, dtype=float) @ shift
            gy_k = None if gy is None else (lambda Y: gy(Y) + shift)
            return fy_k, gy_k

        f_k = Bifunction(
            name=f"{f.name}+reg{k}",
            dim=f.dim,
            domain=f.domain,
            fn=fn_k,
            gamma=f.gamma,
            eta=f.eta + 0.5 / beta_k,
            y_parts=y_parts_k,
        )
        inner_tol = max(p.stop_tol, 0.1 * prev_res)
        z = xk
        solved = False
        for _ in range(p.inner_max):
            pr = prox_point(*f_k.y_objective(z), prob.K, beta_k, z, cfg)
            rec.prox_evals += 1
            rec.fn_evals += pr.n_evals
            r_in = float(np.linalg.norm(pr.point - z))
            z = pr.point
            if r_in <= inner_tol:
                solved = True
                break
        if not solved:
            raise RuntimeError(
                f"inner equilibrium solve stagnated at outer iteration {k} "
                f"(tolerance {inner_tol:.3g})"
            )
        r = float(np.linalg.norm(z - x))
        prev_res = max(r, p.stop_tol)
        if r == 0.0:
            rec.push(z, 0.0)
            terminated = "exact_fixed_point"
            break
        rec.push(z, r)
        x = z
        if r <= p.stop_tol:
            terminated = "residual"
            break
    return rec.done(terminated, not notes, notes)


def run_ieppa_ep(prob: EpProblem, p: EpParams, x0) -> IterationTrace:
    """Constant-inertia extrapolated proximal method (alpha may be negative)."""
    notes = _validate_ieppa(prob, p)
    cfg = p.solve_cfg()
    x0 = as_point(x0, prob.f.dim)
    rec = _EpRecorder(prob, x0)
    x = x0
    y = x0
    terminated = "max_iters"
    for k in range(p.max_iters):
        pr = _ep_prox(prob.f, prob.K, p.beta.at(k), y, cfg)
        rec.prox_evals += 1
        rec.fn_evals += pr.n_evals
        x1 = pr.point
        r = float(np.linalg.norm(x1 - y))
        if r == 0.0:
            rec.push(x1, 0.0)
            terminated = "exact_fixed_point"
            break
        if r <= p.stop_tol:
            rec.push(x1, r)
            terminated = "residual"
            break
        y = x1 + p.alpha * (x1 - x)
        rec.push(x1, r)
        x = x1
    return rec.done(terminated, not notes, notes)


def run_2ppa_ep(prob: EpProblem, p: EpParams, x0) -> IterationTrace:
    """Two-step predictor-corrector proximal method (both steps centered at x)."""
    notes = _validate_2ppa(prob, p)
    cfg = p.solve_cfg()
    x0 = as_point(x0, prob.f.dim)
    rec = _EpRecorder(prob, x0)
    x = x0
    ys = []
    corr_gaps = []
    terminated = "max_iters"
    for k in range(p.max_iters):
        beta_k = p.beta.at(k)
        pr_y = _ep_prox(prob.f, prob.K, beta_k, x, cfg)
        rec.prox_evals += 1
        rec.fn_evals += pr_y.n_evals
        y = pr_y.point
        ys.append(y.copy())
        r = float(np.linalg.norm(y - x))
        if r == 0.0:
            rec.push(y, 0.0)
            terminated = "exact_fixed_point"
            break
        if r <= p.stop_tol:
            rec.push(y, r)
            terminated = "residual"
            break
        fy, gy = prob.f.y_objective(y)
        pr_x = prox_point(fy, gy, prob.K, beta_k, x, cfg)
        rec.prox_evals += 1
        rec.fn_evals += pr_x.n_evals
        x = pr_x.point
        corr_gaps.append(float(np.linalg.norm(x - y)))
        rec.push(x, r)
    return rec.done(
        terminated,
        not notes,
        notes,
        extra={"predictors": np.asarray(ys), "corrector_gaps": corr_gaps},
    )


def _star_subgrad_check(f: Bifunction, K, z, x, w, n_samples, seed, radius) -> bool:
    """Strict-level-set condition: f(z, y) < f(z, x) implies w.(y - x) < 0."""
    from .verify import _map_to_set, _unit_block

    Y = _map_to_set(K, _unit_block(seed, n_samples, K.dim), radius)
    fz_x = float(f.fn(z, x))
    fz_y = f.fn(np.broadcast_to(z, Y.shape), Y)
    lower = fz_y < fz_x - 1e-12
    if not np.any(lower):
        return True
    return bool(np.all((Y[lower] - x) @ w < 1e-10))


def _run_extragradient(prob: EpProblem, p: EpParams, x0, oracle, normalized: bool) -> IterationTrace:
    f = prob.f
    notes = _validate_eg(prob, p, peg=not normalized)
    if oracle is None:
        if f.partial_grad_y is None:
            raise ValueError("extragradient methods need a subgradient oracle")
        oracle = f.partial_grad_y
    cfg = p.solve_cfg()
    x0 = as_point(x0, f.dim)
    rec = _EpRecorder(prob, x0)
    x = x0
    ls_counts = []
    terminated = "max_iters"
    for k in range(p.max_iters):
        beta_k = p.beta.at(k)
        pr = _ep_prox(f, prob.K, beta_k, x, cfg)
        rec.prox_evals += 1
        rec.fn_evals += pr.n_evals
        y = pr.point
        r = float(np.linalg.norm(y - x))
        if r == 0.0:
            rec.push(y, 0.0)
            terminated = "exact_fixed_point"
            break
        if r <= p.stop_tol:
            rec.push(y, r)
            terminated = "residual"
            break
        target = (p.ls_alpha / (2.0 * beta_k)) * r * r
        z = None
        for m in range(LINE_SEARCH_CAP + 1):
            zc = (1.0 - p.ls_rho**m) * x + p.ls_rho**m * y
            if float(f.fn(zc, x)) - float(f.fn(zc, y)) >= target:
                z = zc
                ls_counts.append(m)
                break
        if z is None:
            raise RuntimeError(
                f"line search exceeded {LINE_SEARCH_CAP} halvings at k={k}: "
                "the decrease condition looks unattainable"
            )
        w = np.asarray(oracle(z, x), dtype=float)
        if p.oracle_check_samples and not _star_subgrad_check(
            f, prob.K, z, x, w, p.oracle_check_samples, seed=k, radius=p.search_radius
        ):
            notes.append(f"subgradient oracle failed the level-set spot check at k={k}")
        wn = float(np.linalg.norm(w))
        if wn == 0.0:
            rec.push(z, r)
            terminated = "exact_fixed_point"  # stationary oracle output
            break
        step = p.steps.at(k)
        x1 = prob.K.project(x - (step / wn) * w if normalized else x - step * w)
        if float(np.linalg.norm(x1 - x)) == 0.0:
            rec.push(z, r)
            terminated = "exact_fixed_point"
            break
        rec.push(x1, r)
        x = x1
    return rec.done(
        terminated,
        not notes,
        notes,
        extra={"line_search_m": ls_counts},
    )


def run_eg_ep(prob: EpProblem, p: EpParams, x0, oracle=None) -> IterationTrace:
    """Extragradient method with backtracking and normalized projection step."""
    return _run_extragradient(prob, p, x0, oracle, normalized=True)


def run_peg_ep(prob: EpProblem, p: EpParams, x0, oracle=None) -> IterationTrace:
    """Extragradient method with plain (unnormalized) projection step."""
    return _run_extragradient(prob, p, x0, oracle, normalized=False)


EP_RUNNERS = {
    "RIPPA_EP": run_rippa_ep,
    "PPA_EP": run_ppa_ep,
    "REG_EP": run_reg_ep,
    "IEPPA_EP": run_ieppa_ep,
    "TWO_PPA_EP": run_2ppa_ep,
    "EG_EP": run_eg_ep,
    "PEG_EP": run_peg_ep,
}
