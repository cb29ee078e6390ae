"""Discrete-time differential dynamic programming.

The dynamics are linearized to first order along the nominal trajectory
(``dx_{k+1} = Phi_k dx_k + B_k du_k`` with ``Phi = I + f_x dt``), the running
cost to second order, and the value function is propagated backwards as a
quadratic ``(V, Vx, Vxx)``. Each backward pass yields feedforward gains ``l``
and feedback gains ``L`` applied in a line-searched forward rollout.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    INTEGRATORS, BoundarySpec, CostModel, DivergedRolloutError, NonFiniteError, PlantModel,
    Trajectory, TrajoptError, rollout, trajectory_cost,
)

log = logging.getLogger(__name__)


class IndefiniteHessianError(TrajoptError):
    """The control Hessian ``H`` failed its Cholesky test at step ``k``."""

    def __init__(self, k: int):
        super().__init__(f"control Hessian not positive definite at step {k}")
        self.k = k


@dataclass(frozen=True)
class LinearizedStep:
    Phi: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class CostExpansion:
    """Running-cost expansion for one step, every block already times ``dt``."""

    q0: float
    q: np.ndarray
    r: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    N: np.ndarray
    M: np.ndarray


@dataclass(frozen=True)
class ValueExpansion:
    V: float
    Vx: np.ndarray
    Vxx: np.ndarray


@dataclass
class GainSchedule:
    """Per-step gains and the Q-function blocks they came from.

    ``l`` has shape (N, m), ``L`` (N, m, n); ``g``, ``G``, ``H`` are the
    control gradient, cross term and (regularized) control Hessian.
    ``expected`` holds ``(sum g'l, sum l'Hl / 2)`` so the predicted change for
    a step of size ``alpha`` is ``alpha * e1 + alpha**2 * e2``.
    """

    l: np.ndarray
    L: np.ndarray
    g: np.ndarray
    G: np.ndarray
    H: np.ndarray
    expected: tuple = (0.0, 0.0)
    reg: float = 0.0

    def predicted_change(self, alpha=1.0):
        return alpha * self.expected[0] + alpha**2 * self.expected[1]


@dataclass
class DdpOptions:
    dt: float = 0.01
    N: Optional[int] = None
    max_iters: int = 300
    tol: float = 1e-8
    mu0: float = 1e-6
    mu_max: float = 1e6
    alphas: Sequence[float] = tuple(2.0 ** -i for i in range(11))
    integrator: str = "euler"
    initial_controls: Optional[np.ndarray] = None
    stall_iters: int = 3


@dataclass
class DdpReport:
    cost_history: list
    iterations: int
    converged: bool
    runtime: float
    trajectory: Trajectory
    gains: Optional[GainSchedule]
    regularization_events: int
    status: str = "converged"
    message: str = ""
    trial_costs: list = field(default_factory=list)
    expected_reduction: float = float("nan")

    @property
    def final_cost(self):
        return self.cost_history[-1]


def linearize_step(plant: PlantModel, x, u, t, dt) -> LinearizedStep:
    if dt < 0:
        raise ValueError("dt must be non-negative")
    fx, fu = plant.jacobians(x, u, t)
    if not (np.all(np.isfinite(fx)) and np.all(np.isfinite(fu))):
        raise NonFiniteError("non-finite dynamics Jacobian", -1)
    return LinearizedStep(Phi=np.eye(plant.n) + fx * dt, B=fu * dt)


def linearize_trajectory(plant: PlantModel, traj: Trajectory):
    steps = []
    for k in range(traj.N):
        try:
            steps.append(linearize_step(plant, traj.states[k], traj.controls[k],
                                        traj.times[k], traj.dt))
        except NonFiniteError:
            raise NonFiniteError("non-finite dynamics Jacobian", k) from None
    return steps


def expand_cost(cost: CostModel, x, u, t, dt) -> CostExpansion:
    d = cost.running_derivs(x, u, t)
    return CostExpansion(
        q0=cost.running(x, u, t) * dt,
        q=d.q * dt, r=d.r * dt, Q=d.Q * dt, R=d.R * dt, N=d.N * dt, M=d.M * dt,
    )


def backward_pass(traj: Trajectory, cost: CostModel, reg: float,
                  steps: Sequence[LinearizedStep]):
    """Riccati sweep from the terminal cost back to step 0.

    Returns ``(gains, values)`` with ``values[k]`` the quadratic value model
    at step ``k`` (``values[N]`` is the terminal expansion). Raises
    :class:`IndefiniteHessianError` when a regularized ``H`` is not
    positive definite.
    """
    N, n, m = traj.N, traj.n, traj.m
    if len(steps) != N:
        raise ValueError("need one linearized step per control")
    if reg < 0:
        raise ValueError("regularization must be non-negative")

    phi_x, phi_xx = cost.terminal_derivs(traj.states[-1], traj.times[-1])
    V = cost.terminal(traj.states[-1], traj.times[-1])
    Vx = np.asarray(phi_x, dtype=float)
    Vxx = 0.5 * (phi_xx + phi_xx.T)
    values = [None] * (N + 1)
    values[N] = ValueExpansion(V, Vx, Vxx)

    l = np.zeros((N, m))
    L = np.zeros((N, m, n))
    g_all = np.zeros((N, m))
    G_all = np.zeros((N, m, n))
    H_all = np.zeros((N, m, m))
    e1 = e2 = 0.0
    eye_m = np.eye(m)

    for k in range(N - 1, -1, -1):
        lin = steps[k]
        c = expand_cost(cost, traj.states[k], traj.controls[k], traj.times[k], traj.dt)
        Phi, B = lin.Phi, lin.B

        g = c.r + B.T @ Vx
        G = c.N + B.T @ Vxx @ Phi
        H_raw = c.R + B.T @ Vxx @ B
        H_raw = 0.5 * (H_raw + H_raw.T)
        H = H_raw + reg * eye_m
        try:
            chol = np.linalg.cholesky(H)
        except np.linalg.LinAlgError:
            raise IndefiniteHessianError(k) from None
        if np.any(np.diag(chol) <= 0):
            raise IndefiniteHessianError(k)

        sol = _chol_solve(chol, np.column_stack([g, G]))
        lk = -sol[:, 0]
        Lk = -sol[:, 1:]

        # value update uses the unregularized H
        V = c.q0 + V + g @ lk + 0.5 * lk @ H_raw @ lk
        Vx = c.q + Phi.T @ Vx + Lk.T @ (g + H_raw @ lk) + G.T @ lk
        Vxx = c.Q + Phi.T @ Vxx @ Phi + Lk.T @ H_raw @ Lk + Lk.T @ G + G.T @ Lk
        Vxx = 0.5 * (Vxx + Vxx.T)

        values[k] = ValueExpansion(float(V), Vx, Vxx)
        l[k], L[k], g_all[k], G_all[k], H_all[k] = lk, Lk, g, G, H
        e1 += g @ lk
        e2 += 0.5 * lk @ H_raw @ lk

    gains = GainSchedule(l=l, L=L, g=g_all, G=G_all, H=H_all, expected=(e1, e2), reg=reg)
    return gains, values


def _chol_solve(chol, rhs):
    y = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.T, y)


def forward_pass(plant: PlantModel, cost: CostModel, nominal: Trajectory,
                 gains: GainSchedule, alpha: float, control_bounds=None,
                 integrator: str = "euler"):
    """Closed-loop rollout ``u_k = ubar_k + alpha l_k + L_k (x_k - xbar_k)``.

    Returns ``(trajectory, total cost)``. A non-finite state raises
    :class:`~trajopt.core.DivergedRolloutError`.
    """
    if gains.l.shape[0] != nominal.N:
        raise ValueError("gain schedule length does not match the trajectory")
    step = INTEGRATORS[integrator]
    N = nominal.N
    states = np.empty_like(nominal.states)
    controls = np.empty_like(nominal.controls)
    states[0] = nominal.states[0]
    lo = hi = None
    if control_bounds is not None:
        lo, hi = control_bounds
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N):
            u = nominal.controls[k] + alpha * gains.l[k] + gains.L[k] @ (states[k] - nominal.states[k])
            if lo is not None:
                u = np.clip(u, lo, hi)
            controls[k] = u
            states[k + 1] = step(plant, states[k], u, nominal.times[k], nominal.dt)
            if not np.all(np.isfinite(states[k + 1])):
                raise DivergedRolloutError("forward pass diverged", k + 1)
        traj = Trajectory(nominal.times, states, controls, nominal.dt)
        # a huge but finite trial may overflow to an infinite cost; the line search rejects it
        total = trajectory_cost(cost, traj)
    return traj, total


def _initial_controls(opts: DdpOptions, N: int, m: int):
    if opts.initial_controls is None:
        return np.zeros((N, m))
    u = np.asarray(opts.initial_controls, dtype=float)
    if u.ndim == 1 and u.size == m:
        return np.tile(u, (N, 1))
    return u.reshape(N, m).copy()


def ddp_solve(plant: PlantModel, cost: CostModel, boundary: BoundarySpec,
              opts: Optional[DdpOptions] = None) -> DdpReport:
    """Iterate backward and forward passes until the cost stops improving.

    Convergence: the predicted reduction falls below ``tol * (1 + |J|)``, or
    the relative decrease stays below ``tol`` for ``stall_iters`` accepted
    iterations in a row. Running out of iterations returns a report with
    ``converged=False``.
    """
    opts = opts or DdpOptions()
    start = time.perf_counter()
    if opts.N is not None:
        N = int(opts.N)
        dt = boundary.horizon / N
    else:
        N = int(round(boundary.horizon / opts.dt))
        dt = boundary.horizon / N
    bounds = boundary.control_bounds

    u0 = _initial_controls(opts, N, plant.m)
    if bounds is not None:
        u0 = np.clip(u0, *bounds)
    nominal = rollout(plant, boundary.x0, u0, dt, opts.integrator, t0=boundary.t0)
    J = trajectory_cost(cost, nominal)
    history = [J]
    trials = []
    mu = 0.0
    reg_events = 0
    gains = None
    status, message = "max_iters", "iteration limit reached"
    small_steps = 0
    iters = 0
    dV = float("nan")

    while iters < opts.max_iters:
        iters += 1
        steps = linearize_trajectory(plant, nominal)
        accepted = False
        while True:
            try:
                gains, _ = backward_pass(nominal, cost, mu, steps)
            except IndefiniteHessianError as err:
                reg_events += 1
                mu = max(opts.mu0, 2.0 * mu)
                log.debug("iter %d: H indefinite at step %d, mu -> %.3g", iters, err.k, mu)
                if mu > opts.mu_max:
                    break
                continue
            break
        if mu > opts.mu_max:
            status, message = "failed", "control Hessian indefinite at maximum regularization"
            break

        dV = gains.predicted_change(1.0)
        if abs(dV) < opts.tol * (1.0 + abs(J)):
            status, message = "converged", "predicted reduction below tolerance"
            break

        for alpha in opts.alphas:
            try:
                cand, J_new = forward_pass(plant, cost, nominal, gains, alpha, bounds,
                                           opts.integrator)
            except NonFiniteError:
                trials.append((iters, alpha, float("inf"), False))
                log.debug("iter %d: alpha %.4g diverged", iters, alpha)
                continue
            ok = np.isfinite(J_new) and J_new < J
            trials.append((iters, alpha, J_new, bool(ok)))
            if ok:
                accepted = True
                break
            log.debug("iter %d: rejected alpha %.4g with trial cost %.6g (current %.6g)",
                      iters, alpha, J_new, J)

        if not accepted:
            reg_events += 1
            mu = max(opts.mu0, 10.0 * mu)
            if mu > opts.mu_max:
                status, message = "converged", "no descent step found; local minimum"
                if abs(dV) > 1e3 * opts.tol * (1.0 + abs(J)):
                    status, message = "failed", "line search failed at maximum regularization"
                break
            log.debug("iter %d: line search failed, mu -> %.3g", iters, mu)
            continue

        rel = (J - J_new) / max(abs(J), 1e-300)
        nominal, J = cand, J_new
        history.append(J)
        mu = mu / 2.0 if mu / 2.0 >= opts.mu0 else 0.0
        log.info("iter %d: cost %.10g  alpha %.4g  mu %.3g", iters, J, alpha, mu)
        small_steps = small_steps + 1 if rel < opts.tol else 0
        if small_steps >= opts.stall_iters:
            status, message = "converged", "relative cost decrease below tolerance"
            break

    runtime = time.perf_counter() - start
    return DdpReport(
        cost_history=history,
        iterations=iters,
        converged=status == "converged",
        runtime=runtime,
        trajectory=nominal,
        gains=gains,
        regularization_events=reg_events,
        status=status,
        message=message,
        trial_costs=trials,
        expected_reduction=float(dV),
    )
