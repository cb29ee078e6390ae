"""
DDP on a linear-quadratic problem
=================================

For linear dynamics and a quadratic cost the backward pass is a discrete
Riccati recursion, so one DDP iteration lands on the optimal policy.
"""
import numpy as np

from trajopt import BoundarySpec, DdpOptions, LinearPlant, QuadraticCost, ddp_solve

rng = np.random.default_rng(0)
n, m = 4, 2
plant = LinearPlant(rng.normal(size=(n, n)) * 0.5, rng.normal(size=(n, m)))
cost = QuadraticCost(n, m, R=np.eye(m), Q=np.eye(n), W_f=10 * np.eye(n))
boundary = BoundarySpec(x0=rng.normal(size=n), x_target=np.zeros(n), t0=0.0, tf=2.0)

report = ddp_solve(plant, cost, boundary, DdpOptions(dt=0.02))
print("status:", report.status, "after", report.iterations, "iterations")
print("cost history:", [round(c, 6) for c in report.cost_history])
print("final state:", np.round(report.trajectory.final_state, 4))

# The same gains from a hand-written Riccati sweep.
dt, N = report.trajectory.dt, report.trajectory.N
Phi, B = np.eye(n) + plant.A * dt, plant.B * dt
S = cost.W_f.copy()
for k in range(N - 1, -1, -1):
    K_lqr = np.linalg.solve(cost.R * dt + B.T @ S @ B, B.T @ S @ Phi)
    S = cost.Q * dt + Phi.T @ S @ (Phi - B @ K_lqr)
print("first-step gain gap:", np.max(np.abs(report.gains.L[0] + K_lqr)))
print("optimal cost x0' S x0:", boundary.x0 @ S @ boundary.x0)
