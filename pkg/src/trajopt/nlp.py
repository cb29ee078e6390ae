"""Augmented-Lagrangian solver for equality- and box-constrained programs.

    minimize f(z)  subject to  c(z) = 0,  lower <= z <= upper

The outer loop minimizes ``f + lam'c + rho/2 |c|^2`` over the box and then
updates ``lam <- lam + rho c``; ``rho`` grows whenever the constraint
violation fails to shrink fourfold. Inner subproblems use a projected Newton
method when the problem supplies a Lagrangian Hessian and a projected
limited-memory BFGS method otherwise. Both only accept steps that satisfy
the Armijo condition on the augmented Lagrangian.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, TextIO

import numpy as np

log = logging.getLogger(__name__)

_ARMIJO = 1e-4
# inner solves stop at this fraction of the current constraint violation
_INNER_TOL_FACTOR = 0.1
_MIN_SHIFT = 1e-8
# inner loops give up after this many steps without a meaningful decrease
_STALL_STEPS = 5
_STALL_RTOL = 1e-14


@dataclass
class NlpProblem:
    """Callbacks describing a smooth nonlinear program.

    ``hessian(z, mu)`` must return ``grad^2 f(z) + sum_i mu_i grad^2 c_i(z)``.
    Missing gradients and Jacobians are approximated by forward differences.
    """

    dimension: int
    objective: Callable
    gradient: Optional[Callable] = None
    constraints: Optional[Callable] = None
    jacobian: Optional[Callable] = None
    hessian: Optional[Callable] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.dimension
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bounds must match the problem dimension")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    def project(self, z):
        return np.clip(z, self.lower, self.upper)

    def grad(self, z):
        if self.gradient is not None:
            return np.asarray(self.gradient(z), dtype=float)
        f0 = self.objective(z)
        out = np.empty_like(z)
        for i in range(z.size):
            h = 1.49e-8 * max(1.0, abs(z[i]))
            zp = z.copy()
            zp[i] += h
            out[i] = (self.objective(zp) - f0) / h
        return out

    def cons(self, z):
        if self.constraints is None:
            return np.zeros(0)
        return np.atleast_1d(np.asarray(self.constraints(z), dtype=float))

    def jac(self, z):
        if self.constraints is None:
            return np.zeros((0, z.size))
        if self.jacobian is not None:
            return np.atleast_2d(np.asarray(self.jacobian(z), dtype=float))
        c0 = self.cons(z)
        out = np.empty((c0.size, z.size))
        for i in range(z.size):
            h = 1.49e-8 * max(1.0, abs(z[i]))
            zp = z.copy()
            zp[i] += h
            out[:, i] = (self.cons(zp) - c0) / h
        return out


@dataclass
class NlpOptions:
    max_outer: int = 50
    max_inner: int = 200
    constraint_tol: float = 1e-6
    stationarity_tol: float = 1e-6
    rho0: float = 10.0
    rho_growth: float = 10.0
    rho_max: float = 1e8
    inner: str = "auto"
    lbfgs_memory: int = 10
    log_stream: Optional[TextIO] = None

    def __post_init__(self):
        for name in ("max_outer", "max_inner", "constraint_tol", "stationarity_tol",
                     "rho0", "rho_growth", "rho_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.constraint_tol >= 1 or self.stationarity_tol >= 1:
            raise ValueError("tolerances must be below 1")
        if self.inner not in ("auto", "newton", "lbfgs"):
            raise ValueError("inner must be 'auto', 'newton' or 'lbfgs'")


@dataclass
class NlpSolution:
    x: np.ndarray
    multipliers: np.ndarray
    objective: float
    max_violation: float
    stationarity_norm: float
    outer_iterations: int
    inner_iterations_total: int
    runtime: float
    status: str
    history: list = field(default_factory=list)

    @property
    def success(self):
        return self.status == "optimal"


@dataclass
class KktReport:
    stationarity_norm: float
    max_violation: float
    complementarity_max: float


def _projected_residual(z, g, lo, hi):
    return z - np.clip(z - g, lo, hi)


def kkt_check(nlp: NlpProblem, x, multipliers=None, active_tol: float = 1e-9) -> KktReport:
    """First-order optimality measures at ``x``.

    ``x`` may also be an :class:`NlpSolution`, whose multipliers are used.
    Stationarity is ``|x - P(x - grad_lagrangian)|_inf``, i.e. the Lagrangian
    gradient with components that push against an active bound removed.
    """
    if isinstance(x, NlpSolution):
        multipliers = x.multipliers if multipliers is None else multipliers
        x = x.x
    x = np.asarray(x, dtype=float)
    c = nlp.cons(x)
    lam = np.zeros(c.size) if multipliers is None else np.asarray(multipliers, float)
    g = nlp.grad(x)
    if c.size:
        g = g + nlp.jac(x).T @ lam
    stat = float(np.max(np.abs(_projected_residual(x, g, nlp.lower, nlp.upper)), initial=0.0))
    viol = float(np.max(np.abs(c), initial=0.0))
    viol = max(viol, float(np.max(nlp.lower - x, initial=0.0)), float(np.max(x - nlp.upper, initial=0.0)))

    gap_lo = x - nlp.lower
    gap_hi = nlp.upper - x
    nu_lo = np.where(gap_lo <= active_tol * (1 + np.abs(nlp.lower)), np.maximum(g, 0.0), 0.0)
    nu_hi = np.where(gap_hi <= active_tol * (1 + np.abs(nlp.upper)), np.maximum(-g, 0.0), 0.0)
    compl = 0.0
    with np.errstate(invalid="ignore"):
        for nu, gap in ((nu_lo, gap_lo), (nu_hi, gap_hi)):
            prod = np.where(nu > 0, nu * gap, 0.0)
            compl = max(compl, float(np.max(np.abs(prod), initial=0.0)))
    return KktReport(stationarity_norm=stat, max_violation=viol, complementarity_max=compl)


class _AugmentedLagrangian:
    def __init__(self, nlp: NlpProblem):
        self.nlp = nlp
        self.lam = None
        self.rho = None

    def value(self, z):
        f = float(self.nlp.objective(z))
        c = self.nlp.cons(z)
        return f + self.lam @ c + 0.5 * self.rho * (c @ c)

    def value_grad(self, z):
        f = float(self.nlp.objective(z))
        c = self.nlp.cons(z)
        g = self.nlp.grad(z)
        J = self.nlp.jac(z) if c.size else None
        if J is not None:
            g = g + J.T @ (self.lam + self.rho * c)
        return f + self.lam @ c + 0.5 * self.rho * (c @ c), g, c, J

    def hessian(self, z, c, J):
        H = np.asarray(self.nlp.hessian(z, self.lam + self.rho * c), dtype=float)
        if J is not None:
            H = H + self.rho * (J.T @ J)
        return 0.5 * (H + H.T)


def _line_search(al, z, val, g, d, lo, hi):
    """Backtracking projected search; returns ``(z_new, val_new)`` or None."""
    alpha = 1.0
    while alpha > 1e-14:
        z_new = np.clip(z + alpha * d, lo, hi)
        step = z_new - z
        decrease = g @ step
        if decrease >= 0 and np.any(step):
            alpha *= 0.5
            continue
        with np.errstate(all="ignore"):
            try:
                v = al.value(z_new)
            except (FloatingPointError, ValueError, ArithmeticError):
                v = np.nan
        if np.isfinite(v) and v <= val + _ARMIJO * decrease:
            return z_new, v
        alpha *= 0.5
    return None


def _free_mask(z, g, lo, hi, eps):
    at_lo = (z <= lo + eps) & (g > 0)
    at_hi = (z >= hi - eps) & (g < 0)
    return ~(at_lo | at_hi)


def _newton_inner(al, z, tol, max_iter):
    lo, hi = al.nlp.lower, al.nlp.upper
    val, g, c, J = al.value_grad(z)
    iters = 0
    stalled = False
    flat = 0
    while iters < max_iter:
        pg = _projected_residual(z, g, lo, hi)
        pg_norm = np.max(np.abs(pg), initial=0.0)
        if pg_norm <= tol:
            break
        iters += 1
        eps = min(1e-8, pg_norm)
        free = _free_mask(z, g, lo, hi, eps)
        H = al.hessian(z, c, J)
        d = np.zeros_like(z)
        Hf = H[np.ix_(free, free)]
        gf = g[free]
        # smallest shift (to a factor of 10) that makes Hf positive definite;
        # scaling it by the penalty-dominated diagonal would swamp the
        # objective curvature along the constraint surface
        shift = 0.0
        eye = np.eye(len(gf))
        while True:
            try:
                L = np.linalg.cholesky(Hf + shift * eye)
                df = -np.linalg.solve(L.T, np.linalg.solve(L, gf))
                break
            except np.linalg.LinAlgError:
                shift = max(_MIN_SHIFT, 10.0 * shift)
        d[free] = df
        res = _line_search(al, z, val, g, d, lo, hi)
        if res is None:
            # fall back to steepest descent once before giving up
            res = _line_search(al, z, val, g, -g, lo, hi)
            if res is None:
                stalled = True
                break
        z, val_new = res
        flat = flat + 1 if val - val_new <= _STALL_RTOL * max(1.0, abs(val)) else 0
        if flat >= _STALL_STEPS:
            stalled = True
            break
        val, g, c, J = al.value_grad(z)
    return z, iters, stalled


def _lbfgs_direction(g, S, Y):
    q = g.copy()
    alphas = []
    for s, y in reversed(list(zip(S, Y))):
        rho = 1.0 / (y @ s)
        a = rho * (s @ q)
        alphas.append((rho, a))
        q -= a * y
    if S:
        s, y = S[-1], Y[-1]
        q *= (s @ y) / (y @ y)
    for (s, y), (rho, a) in zip(zip(S, Y), reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def _lbfgs_inner(al, z, tol, max_iter, memory):
    lo, hi = al.nlp.lower, al.nlp.upper
    val, g, _, _ = al.value_grad(z)
    S, Y = [], []
    iters = 0
    stalled = False
    while iters < max_iter:
        pg = _projected_residual(z, g, lo, hi)
        pg_norm = np.max(np.abs(pg), initial=0.0)
        if pg_norm <= tol:
            break
        iters += 1
        free = _free_mask(z, g, lo, hi, min(1e-8, pg_norm))
        gf = np.where(free, g, 0.0)
        d = _lbfgs_direction(gf, S, Y)
        d[~free] = 0.0
        if gf @ d >= 0:
            S, Y = [], []
            d = -gf
        res = _line_search(al, z, val, g, d, lo, hi)
        if res is None:
            if S:
                S, Y = [], []
                continue
            stalled = True
            break
        z_new, _ = res
        val_new, g_new, _, _ = al.value_grad(z_new)
        s, y = z_new - z, g_new - g
        if s @ y > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            S.append(s)
            Y.append(y)
            if len(S) > memory:
                S.pop(0)
                Y.pop(0)
        else:
            S, Y = [], []
        z, val, g = z_new, val_new, g_new
    return z, iters, stalled


def solve(nlp: NlpProblem, x0, opts: Optional[NlpOptions] = None, multipliers0=None) -> NlpSolution:
    """Run the augmented-Lagrangian method from ``x0`` (projected onto the box)."""
    opts = opts or NlpOptions()
    start = time.perf_counter()
    z = nlp.project(np.asarray(x0, dtype=float).copy())
    f0 = float(nlp.objective(z))
    if not np.isfinite(f0):
        raise ValueError("objective is not finite at the initial point")

    use_newton = opts.inner == "newton" or (opts.inner == "auto" and nlp.hessian is not None)
    if use_newton and nlp.hessian is None:
        raise ValueError("newton inner solver needs a Hessian callback")

    c = nlp.cons(z)
    al = _AugmentedLagrangian(nlp)
    al.lam = np.zeros(c.size) if multipliers0 is None else np.asarray(multipliers0, float).copy()
    al.rho = opts.rho0
    viol_prev = np.inf
    viol = float(np.max(np.abs(c), initial=0.0))
    inner_total = 0
    history = []
    status = "max_iter"
    best = None
    outer = 0
    stall_count = 0

    for outer in range(1, opts.max_outer + 1):
        tol = max(0.5 * opts.stationarity_tol, _INNER_TOL_FACTOR * min(1.0, viol))
        if use_newton:
            z, its, stalled = _newton_inner(al, z, tol, opts.max_inner)
        else:
            z, its, stalled = _lbfgs_inner(al, z, tol, opts.max_inner, opts.lbfgs_memory)
        inner_total += its

        c = nlp.cons(z)
        viol = float(np.max(np.abs(c), initial=0.0))
        al.lam = al.lam + al.rho * c
        report = kkt_check(nlp, z, al.lam)
        obj = float(nlp.objective(z))
        history.append((outer, obj, viol, al.rho, its))
        line = f"{outer} {obj:.12g} {viol:.3e} {al.rho:.3e} {its}"
        log.info("outer %s", line)
        if opts.log_stream is not None:
            opts.log_stream.write(line + "\n")
        if outer > 1 and viol > opts.constraint_tol and viol > viol_prev:
            log.warning("constraint violation increased: %.3e -> %.3e", viol_prev, viol)

        candidate = (viol, report.stationarity_norm)
        if best is None or _better(candidate, best[0], opts.constraint_tol):
            best = (candidate, z.copy(), al.lam.copy(), obj)

        if viol <= opts.constraint_tol and report.stationarity_norm <= opts.stationarity_tol:
            status = "optimal"
            break
        stall_count = stall_count + 1 if stalled else 0
        if stalled and viol > opts.constraint_tol and al.rho >= opts.rho_max:
            status = "stalled"
            break
        # feasible but the multiplier updates no longer move the iterate
        if stall_count >= 2 and viol <= opts.constraint_tol:
            status = "stalled"
            break
        if viol > opts.constraint_tol and viol > 0.25 * viol_prev:
            al.rho = min(al.rho * opts.rho_growth, opts.rho_max)
        viol_prev = viol

    (viol, stat), z, lam, obj = best
    if status != "optimal" and viol <= opts.constraint_tol and stat <= opts.stationarity_tol:
        status = "optimal"
    return NlpSolution(
        x=z, multipliers=lam, objective=obj, max_violation=viol,
        stationarity_norm=stat, outer_iterations=outer,
        inner_iterations_total=inner_total, runtime=time.perf_counter() - start,
        status=status, history=history,
    )


def _better(a, b, ctol):
    """Prefer feasibility; among feasible points prefer stationarity."""
    if a[0] <= ctol and b[0] <= ctol:
        return a[1] <= b[1]
    if a[0] != b[0]:
        return a[0] < b[0]
    return a[1] <= b[1]
