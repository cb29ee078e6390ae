"""Gauss pseudospectral transcription of fixed-time Bolza problems.

Decision vector layout::

    [X_0, X_1 .. X_K, X_f, U_1 .. U_K]

``X_0`` sits at ``tau = -1``, ``X_1..X_K`` and ``U_1..U_K`` at the
Legendre-Gauss nodes and ``X_f`` at ``tau = +1``. Equality rows are, in
order: collocation (``n K``), quadrature (``n``), initial and final
boundary (``2 n``). Collocation and quadrature rows are divided by
``(tf - t0) / 2`` so their scale does not depend on the horizon.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .collocation import CollocationGrid, barycentric_weights, lagrange_interpolate
from .core import BoundarySpec, CostModel, PlantModel, Trajectory, rollout
from .nlp import NlpOptions, NlpProblem, NlpSolution, solve


def time_transform(t, t0, tf):
    """Map ``t in [t0, tf]`` to ``tau in [-1, 1]``."""
    if tf == t0:
        raise ValueError("time transform needs tf != t0")
    return 2.0 * np.asarray(t, dtype=float) / (tf - t0) - (tf + t0) / (tf - t0)


def inverse_time_transform(tau, t0, tf):
    if tf == t0:
        raise ValueError("time transform needs tf != t0")
    return 0.5 * (tf - t0) * np.asarray(tau, dtype=float) + 0.5 * (tf + t0)


@dataclass(frozen=True)
class DecisionLayout:
    n: int
    m: int
    K: int

    @property
    def size(self):
        return self.n * (self.K + 2) + self.m * self.K

    @property
    def state_slice(self):
        return slice(0, self.n * (self.K + 2))

    @property
    def control_slice(self):
        return slice(self.n * (self.K + 2), self.size)

    def state_index(self, i):
        """Offset of state block ``i`` (0 = X_0, 1..K nodes, K + 1 = X_f)."""
        return i * self.n

    def control_index(self, k):
        """Offset of control block at node ``k`` (1-based)."""
        return self.n * (self.K + 2) + (k - 1) * self.m

    def unpack(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.size,):
            raise ValueError(f"decision vector must have length {self.size}")
        X = z[self.state_slice].reshape(self.K + 2, self.n)
        U = z[self.control_slice].reshape(self.K, self.m)
        return X, U

    def pack(self, X, U):
        X = np.asarray(X, dtype=float).reshape(self.K + 2, self.n)
        U = np.asarray(U, dtype=float).reshape(self.K, self.m)
        return np.concatenate([X.ravel(), U.ravel()])


class TranscribedNlp(NlpProblem):
    """The discretized Bolza problem as an :class:`~trajopt.nlp.NlpProblem`."""

    def __init__(self, plant: PlantModel, cost: CostModel, boundary: BoundarySpec,
                 grid: CollocationGrid, hessian_step: float = 1e-6):
        if grid.K < 1:
            raise ValueError("need at least one collocation node")
        if boundary.x0.size != plant.n:
            raise ValueError("boundary dimension does not match the plant")
        self.plant = plant
        self.cost = cost
        self.boundary = boundary
        self.grid = grid
        self.layout = DecisionLayout(plant.n, plant.m, grid.K)
        self.half = 0.5 * boundary.horizon
        self.node_times = inverse_time_transform(grid.nodes, boundary.t0, boundary.tf)
        self.hessian_step = hessian_step
        n, K = plant.n, grid.K
        self.n_collocation = n * K
        self.n_constraints = n * K + 3 * n
        lower, upper = self._bounds()
        super().__init__(
            dimension=self.layout.size,
            objective=self._objective,
            gradient=self._gradient,
            constraints=self._constraints,
            jacobian=self._jacobian,
            hessian=self._hessian,
            lower=lower,
            upper=upper,
        )

    def _bounds(self):
        lay = self.layout
        lower = np.full(lay.size, -np.inf)
        upper = np.full(lay.size, np.inf)
        if self.boundary.state_bounds is not None:
            lo, hi = self.boundary.state_bounds
            lower[lay.state_slice] = np.tile(lo, lay.K + 2)
            upper[lay.state_slice] = np.tile(hi, lay.K + 2)
        if self.boundary.control_bounds is not None:
            lo, hi = self.boundary.control_bounds
            lower[lay.control_slice] = np.tile(lo, lay.K)
            upper[lay.control_slice] = np.tile(hi, lay.K)
        return lower, upper

    # -- objective -------------------------------------------------------
    def _objective(self, z):
        X, U = self.layout.unpack(z)
        total = self.cost.terminal(X[-1], self.boundary.tf)
        running = 0.0
        for k in range(self.grid.K):
            running += self.grid.weights[k] * self.cost.running(X[k + 1], U[k], self.node_times[k])
        return float(total + self.half * running)

    def _gradient(self, z):
        lay = self.layout
        X, U = lay.unpack(z)
        grad = np.zeros(lay.size)
        phi_x, _ = self.cost.terminal_derivs(X[-1], self.boundary.tf)
        grad[lay.state_index(lay.K + 1):lay.state_index(lay.K + 2)] = phi_x
        for k in range(lay.K):
            d = self.cost.running_derivs(X[k + 1], U[k], self.node_times[k])
            scale = self.half * self.grid.weights[k]
            i = lay.state_index(k + 1)
            grad[i:i + lay.n] += scale * d.q
            j = lay.control_index(k + 1)
            grad[j:j + lay.m] += scale * d.r
        return grad

    # -- constraints -----------------------------------------------------
    def _dynamics_at_nodes(self, X, U):
        return np.array([self.plant.dynamics(X[k + 1], U[k], self.node_times[k])
                         for k in range(self.grid.K)])

    def residual_parts(self, z):
        """Return ``(collocation (K, n), quadrature (n,), boundary (2, n))``.

        Collocation and quadrature rows are scaled by ``2 / (tf - t0)``.
        """
        X, U = self.layout.unpack(z)
        F = self._dynamics_at_nodes(X, U)
        colloc = (self.grid.D @ X[:-1]) / self.half - F
        quad = (X[-1] - X[0]) / self.half - self.grid.weights @ F
        bnd = np.array([X[0] - self.boundary.x0, X[-1] - self.boundary.x_target])
        return colloc, quad, bnd

    def _constraints(self, z):
        colloc, quad, bnd = self.residual_parts(z)
        return np.concatenate([colloc.ravel(), quad, bnd.ravel()])

    def _jacobian(self, z):
        lay = self.layout
        n, m, K = lay.n, lay.m, lay.K
        X, U = lay.unpack(z)
        J = np.zeros((self.n_constraints, lay.size))
        eye = np.eye(n)
        qrow = n * K
        for k in range(K):
            rows = slice(k * n, (k + 1) * n)
            for i in range(K + 1):
                c0 = lay.state_index(i)
                J[rows, c0:c0 + n] = (self.grid.D[k, i] / self.half) * eye
            fx, fu = self.plant.jacobians(X[k + 1], U[k], self.node_times[k])
            c0 = lay.state_index(k + 1)
            J[rows, c0:c0 + n] -= fx
            cu = lay.control_index(k + 1)
            J[rows, cu:cu + m] = -fu
            w = self.grid.weights[k]
            J[qrow:qrow + n, c0:c0 + n] = -w * fx
            J[qrow:qrow + n, cu:cu + m] = -w * fu
        J[qrow:qrow + n, 0:n] = -eye / self.half
        cf = lay.state_index(K + 1)
        J[qrow:qrow + n, cf:cf + n] = eye / self.half
        J[qrow + n:qrow + 2 * n, 0:n] = eye
        J[qrow + 2 * n:qrow + 3 * n, cf:cf + n] = eye
        return J

    # -- second order ----------------------------------------------------
    def _hessian(self, z, mu):
        """Objective Hessian plus ``sum mu_i`` times constraint Hessians.

        Dynamics curvature is taken from central differences of the analytic
        plant Jacobians, node by node.
        """
        lay = self.layout
        n, m, K = lay.n, lay.m, lay.K
        X, U = lay.unpack(z)
        mu = np.asarray(mu, dtype=float)
        mu_col = mu[: n * K].reshape(K, n)
        mu_quad = mu[n * K: n * K + n]
        H = np.zeros((lay.size, lay.size))

        _, phi_xx = self.cost.terminal_derivs(X[-1], self.boundary.tf)
        cf = lay.state_index(K + 1)
        H[cf:cf + n, cf:cf + n] += phi_xx

        h = self.hessian_step
        for k in range(K):
            t = self.node_times[k]
            xk, uk = X[k + 1], U[k]
            idx = np.concatenate([np.arange(lay.state_index(k + 1), lay.state_index(k + 1) + n),
                                  np.arange(lay.control_index(k + 1), lay.control_index(k + 1) + m)])
            d = self.cost.running_derivs(xk, uk, t)
            block = np.block([[d.Q, d.M], [d.N, d.R]]) * (self.half * self.grid.weights[k])

            nu = -(mu_col[k] + self.grid.weights[k] * mu_quad)
            if np.any(nu):
                y = np.concatenate([xk, uk])
                curv = np.empty((n + m, n + m))
                for j in range(n + m):
                    step = h * max(1.0, abs(y[j]))
                    yp, ym = y.copy(), y.copy()
                    yp[j] += step
                    ym[j] -= step
                    gp = nu @ np.hstack(self.plant.jacobians(yp[:n], yp[n:], t))
                    gm = nu @ np.hstack(self.plant.jacobians(ym[:n], ym[n:], t))
                    curv[:, j] = (gp - gm) / (2.0 * step)
                block += 0.5 * (curv + curv.T)
            H[np.ix_(idx, idx)] += block
        return H

    def max_collocation_residual(self, z):
        colloc, _, _ = self.residual_parts(z)
        return float(np.max(np.abs(colloc)))


def transcribe(plant: PlantModel, cost: CostModel, boundary: BoundarySpec,
               grid: CollocationGrid) -> TranscribedNlp:
    return TranscribedNlp(plant, cost, boundary, grid)


def initial_guess(boundary: BoundarySpec, grid: CollocationGrid, strategy: str = "linear",
                  plant: Optional[PlantModel] = None, controls=None, m: Optional[int] = None):
    """Starting decision vector.

    ``linear`` interpolates ``x0 -> x_target`` linearly in ``tau``;
    ``rollout`` samples an Euler rollout of ``plant`` under the constant
    ``controls`` (zero by default) at the support points. Controls start at
    ``controls`` or zero.
    """
    n = boundary.x0.size
    if m is None:
        if plant is None and controls is None:
            raise ValueError("need the control dimension (m, plant or controls)")
        m = plant.m if plant is not None else np.atleast_1d(controls).size
    layout = DecisionLayout(n, m, grid.K)
    u_const = np.zeros(m) if controls is None else np.broadcast_to(
        np.asarray(controls, dtype=float), (m,)).copy()
    U = np.tile(u_const, (grid.K, 1))
    taus = np.concatenate([grid.support, [1.0]])

    if strategy == "linear":
        frac = (taus + 1.0) / 2.0
        X = boundary.x0 + frac[:, None] * (boundary.x_target - boundary.x0)
        X[0] = boundary.x0
        X[-1] = boundary.x_target
    elif strategy == "rollout":
        if plant is None:
            raise ValueError("rollout guess needs the plant")
        steps = 1000
        dt = boundary.horizon / steps
        traj = rollout(plant, boundary.x0, np.tile(u_const, (steps, 1)), dt, "euler",
                       t0=boundary.t0)
        t_query = inverse_time_transform(taus, boundary.t0, boundary.tf)
        X = np.column_stack([np.interp(t_query, traj.times, traj.states[:, j])
                             for j in range(n)])
        X[0] = boundary.x0
    else:
        raise ValueError(f"unknown initial guess strategy {strategy!r}")
    return layout.pack(X, U)


def control_at(z, grid: CollocationGrid, layout: DecisionLayout, tau):
    """Degree ``K - 1`` interpolant of the nodal controls."""
    _, U = layout.unpack(z)
    return lagrange_interpolate(grid.nodes, U, tau)


def extract_trajectory(z, grid: CollocationGrid, boundary: BoundarySpec, samples: int = 200,
                       m: Optional[int] = None) -> Trajectory:
    """Sample the polynomial solution at ``samples`` uniform times.

    States come from the degree-``K`` interpolant on ``{-1} U nodes`` (the
    last sample is ``X_f`` itself); controls from the nodal interpolant.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    n = boundary.x0.size
    z = np.asarray(z, dtype=float)
    if m is None:
        m = (z.size - n * (grid.K + 2)) // grid.K
    layout = DecisionLayout(n, m, grid.K)
    X, U = layout.unpack(z)
    taus = np.linspace(-1.0, 1.0, samples)
    times = inverse_time_transform(taus, boundary.t0, boundary.tf)
    times[0], times[-1] = boundary.t0, boundary.tf
    states = lagrange_interpolate(grid.support, X[:-1], taus,
                                  weights=barycentric_weights(grid.support))
    states[-1] = X[-1]
    controls = lagrange_interpolate(grid.nodes, U, taus[:-1])
    dt = boundary.horizon / (samples - 1)
    return Trajectory(times, states, controls, dt)


@dataclass
class GpmResult:
    nlp: TranscribedNlp
    solution: NlpSolution
    trajectory: Trajectory
    runtime: float

    @property
    def states(self):
        return self.nlp.layout.unpack(self.solution.x)[0]

    @property
    def controls(self):
        return self.nlp.layout.unpack(self.solution.x)[1]

    @property
    def final_state(self):
        return self.states[-1]


def gpm_solve(plant: PlantModel, cost: CostModel, boundary: BoundarySpec, K: int = 25,
              opts: Optional[NlpOptions] = None, guess: str = "linear", guess_controls=None,
              samples: int = 200) -> GpmResult:
    """Transcribe, solve and sample in one call."""
    start = time.perf_counter()
    grid = CollocationGrid.build(K)
    nlp = transcribe(plant, cost, boundary, grid)
    z0 = initial_guess(boundary, grid, guess, plant=plant, controls=guess_controls)
    sol = solve(nlp, z0, opts)
    traj = extract_trajectory(sol.x, grid, boundary, samples, m=plant.m)
    return GpmResult(nlp=nlp, solution=sol, trajectory=traj,
                     runtime=time.perf_counter() - start)
