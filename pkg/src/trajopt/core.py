"""Shared abstractions: trajectories, plant and cost interfaces, rollouts.

Everything here is solver-agnostic. Plants describe continuous dynamics
``xdot = f(x, u, t)`` together with their Jacobians, costs describe a
running rate ``L(x, u, t)`` and a terminal term ``phi(x, tf)`` together with
first and second derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np


class TrajoptError(Exception):
    """Base class for errors raised by this package."""


class NonFiniteError(TrajoptError, FloatingPointError):
    """A function produced a non-finite value.

    ``index`` identifies the offending coordinate (finite differences) or
    time step (rollouts).
    """

    def __init__(self, message: str, index: int):
        super().__init__(f"{message} (index {index})")
        self.index = index


class DivergedRolloutError(NonFiniteError):
    pass


@dataclass(frozen=True)
class Trajectory:
    """Time-indexed states (N+1) and controls (N) on a uniform grid."""

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    dt: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        controls = np.asarray(self.controls, dtype=float)
        if controls.ndim == 1:
            controls = controls.reshape(-1, 1)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "dt", float(self.dt))

        if states.shape[0] != controls.shape[0] + 1:
            raise ValueError(
                f"expected {controls.shape[0] + 1} states for {controls.shape[0]} "
                f"controls, got {states.shape[0]}"
            )
        if times.shape != (states.shape[0],):
            raise ValueError("times must have one entry per state")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if len(times) > 1:
            steps = np.diff(times)
            if np.any(np.abs(steps - self.dt) > 1e-12 * max(1.0, abs(self.dt)) * 10):
                raise ValueError("times must be uniformly spaced by dt")
        for name, arr in (("times", times), ("states", states), ("controls", controls)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def N(self) -> int:
        return self.controls.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.controls.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


class PlantModel:
    """Continuous-time dynamics with analytic Jacobians.

    Subclasses implement :meth:`dynamics`, :meth:`jacobian_x` and
    :meth:`jacobian_u`. ``parameters`` holds the named physical constants.
    """

    n: int
    m: int
    parameters: dict

    def dynamics(self, x, u, t=0.0) -> np.ndarray:
        raise NotImplementedError

    def jacobian_x(self, x, u, t=0.0) -> np.ndarray:
        raise NotImplementedError

    def jacobian_u(self, x, u, t=0.0) -> np.ndarray:
        raise NotImplementedError

    def jacobians(self, x, u, t=0.0):
        return self.jacobian_x(x, u, t), self.jacobian_u(x, u, t)

    def __call__(self, x, u, t=0.0):
        return self.dynamics(x, u, t)


class FunctionPlant(PlantModel):
    """Plant assembled from plain callables.

    Missing Jacobians fall back to central finite differences.
    """

    def __init__(self, n, m, dynamics, jacobian_x=None, jacobian_u=None, parameters=None):
        self.n = int(n)
        self.m = int(m)
        self.parameters = dict(parameters or {})
        self._f = dynamics
        self._fx = jacobian_x
        self._fu = jacobian_u

    def dynamics(self, x, u, t=0.0):
        return np.asarray(self._f(np.asarray(x, float), np.asarray(u, float), t), dtype=float)

    def jacobian_x(self, x, u, t=0.0):
        if self._fx is not None:
            return np.asarray(self._fx(x, u, t), dtype=float).reshape(self.n, self.n)
        u = np.asarray(u, float)
        return finite_diff_jacobian(lambda xx: self.dynamics(xx, u, t), x)

    def jacobian_u(self, x, u, t=0.0):
        if self._fu is not None:
            return np.asarray(self._fu(x, u, t), dtype=float).reshape(self.n, self.m)
        x = np.asarray(x, float)
        return finite_diff_jacobian(lambda uu: self.dynamics(x, uu, t), u)


class LinearPlant(PlantModel):
    """``xdot = A x + B u``."""

    def __init__(self, A, B):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.B = np.asarray(B, dtype=float).reshape(self.A.shape[0], -1)
        self.n, self.m = self.B.shape
        self.parameters = {}

    def dynamics(self, x, u, t=0.0):
        return self.A @ np.asarray(x, float) + self.B @ np.atleast_1d(np.asarray(u, float))

    def jacobian_x(self, x, u, t=0.0):
        return self.A.copy()

    def jacobian_u(self, x, u, t=0.0):
        return self.B.copy()


class RunningDerivatives(NamedTuple):
    """First and second derivatives of the running cost rate.

    ``N`` is d2L/du dx (m x n) and ``M`` is d2L/dx du (n x m) = N.T.
    """

    q: np.ndarray
    r: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    N: np.ndarray
    M: np.ndarray


class CostModel:
    """Running cost rate ``L(x, u, t)`` plus terminal cost ``phi(x, tf)``."""

    def running(self, x, u, t=0.0) -> float:
        raise NotImplementedError

    def terminal(self, x, tf=0.0) -> float:
        raise NotImplementedError

    def running_derivs(self, x, u, t=0.0) -> RunningDerivatives:
        raise NotImplementedError

    def terminal_derivs(self, x, tf=0.0):
        raise NotImplementedError

    def without_terminal(self) -> "CostModel":
        return _RunningOnly(self)


class _RunningOnly(CostModel):
    def __init__(self, base: CostModel):
        self.base = base

    def running(self, x, u, t=0.0):
        return self.base.running(x, u, t)

    def running_derivs(self, x, u, t=0.0):
        return self.base.running_derivs(x, u, t)

    def terminal(self, x, tf=0.0):
        return 0.0

    def terminal_derivs(self, x, tf=0.0):
        n = len(x)
        return np.zeros(n), np.zeros((n, n))


@dataclass(frozen=True)
class BoundarySpec:
    """Fixed-time boundary data and optional box bounds.

    Bounds are ``(lo, hi)`` pairs of arrays; use ``-inf``/``inf`` for free
    channels.
    """

    x0: np.ndarray
    x_target: np.ndarray
    t0: float
    tf: float
    control_bounds: Optional[tuple] = None
    state_bounds: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).ravel())
        object.__setattr__(self, "x_target", np.asarray(self.x_target, dtype=float).ravel())
        if self.x0.shape != self.x_target.shape:
            raise ValueError("x0 and x_target must have the same dimension")
        if not self.tf > self.t0:
            raise ValueError(f"tf ({self.tf}) must exceed t0 ({self.t0})")
        for name in ("control_bounds", "state_bounds"):
            bounds = getattr(self, name)
            if bounds is None:
                continue
            lo, hi = (np.asarray(b, dtype=float).ravel() for b in bounds)
            if lo.shape != hi.shape:
                raise ValueError(f"{name}: lo/hi size mismatch")
            if np.any(lo > hi):
                raise ValueError(f"{name}: lo must not exceed hi")
            object.__setattr__(self, name, (lo, hi))

    @property
    def horizon(self) -> float:
        return self.tf - self.t0


def finite_diff_jacobian(f: Callable, x, h: Optional[float] = None) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``.

    With ``h=None`` the step for coordinate ``i`` is ``1e-6 * max(1, |x_i|)``;
    an explicit ``h`` is used as-is for every coordinate.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if h is not None and h <= 0:
        raise ValueError("step size must be positive")
    cols = []
    for i in range(x.size):
        hi = h if h is not None else 1e-6 * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += hi
        xm[i] -= hi
        fp = np.atleast_1d(np.asarray(f(xp), dtype=float))
        fm = np.atleast_1d(np.asarray(f(xm), dtype=float))
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteError("non-finite function value in finite difference", i)
        cols.append((fp - fm) / (2.0 * hi))
    return np.column_stack(cols)


def step_euler(plant: PlantModel, x, u, t, dt):
    return x + dt * plant.dynamics(x, u, t)


def step_rk4(plant: PlantModel, x, u, t, dt):
    k1 = plant.dynamics(x, u, t)
    k2 = plant.dynamics(x + 0.5 * dt * k1, u, t + 0.5 * dt)
    k3 = plant.dynamics(x + 0.5 * dt * k2, u, t + 0.5 * dt)
    k4 = plant.dynamics(x + dt * k3, u, t + dt)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


INTEGRATORS = {"euler": step_euler, "rk4": step_rk4}


def rollout(plant: PlantModel, x0, controls, dt: float, integrator: str = "euler",
            t0: float = 0.0) -> Trajectory:
    """Integrate ``plant`` from ``x0`` under a piecewise-constant control tape."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    try:
        step = INTEGRATORS[integrator]
    except KeyError:
        raise ValueError(f"unknown integrator {integrator!r}") from None
    controls = np.asarray(controls, dtype=float)
    if controls.ndim == 1:
        controls = controls.reshape(-1, plant.m)
    if not np.all(np.isfinite(controls)):
        raise ValueError("controls must be finite")
    N = controls.shape[0]
    states = np.empty((N + 1, plant.n))
    states[0] = np.asarray(x0, dtype=float)
    times = t0 + dt * np.arange(N + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N):
            states[k + 1] = step(plant, states[k], controls[k], times[k], dt)
            if not np.all(np.isfinite(states[k + 1])):
                raise DivergedRolloutError("rollout produced a non-finite state", k + 1)
    return Trajectory(times, states, controls, dt)


def trajectory_cost(cost: CostModel, traj: Trajectory) -> float:
    """Discrete cost ``sum_k L(x_k, u_k, t_k) dt + phi(x_N)``."""
    total = 0.0
    for k in range(traj.N):
        total += cost.running(traj.states[k], traj.controls[k], traj.times[k]) * traj.dt
    return total + cost.terminal(traj.states[-1], traj.times[-1])


def as_matrix(value: Sequence | float | np.ndarray, size: int) -> np.ndarray:
    """Accept a scalar, diagonal list or full matrix and return ``size x size``."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(size)
    if arr.ndim == 1:
        if arr.size != size:
            raise ValueError(f"expected {size} diagonal entries, got {arr.size}")
        return np.diag(arr)
    if arr.shape != (size, size):
        raise ValueError(f"expected a {size}x{size} matrix, got {arr.shape}")
    return arr.copy()
