"""
Pseudospectral solution of a double integrator
==============================================

Move a unit mass from rest at 0 to rest at 1 in one second while
minimizing the integral of u^2. The exact answer is u(t) = 6 - 12 t with
cost 12, which the collocation solution reproduces at the nodes.
"""
import numpy as np

from trajopt import BoundarySpec, LinearPlant, NlpOptions, QuadraticCost, gpm_solve

plant = LinearPlant([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
cost = QuadraticCost(2, 1, R=1.0)
boundary = BoundarySpec(x0=[0.0, 0.0], x_target=[1.0, 0.0], t0=0.0, tf=1.0)

res = gpm_solve(plant, cost, boundary, K=10,
                opts=NlpOptions(constraint_tol=1e-9, stationarity_tol=1e-9))
sol = res.solution
print(f"status {sol.status}, objective {sol.objective:.10f} (exact 12)")
print(f"max constraint violation {sol.max_violation:.1e}")

t = res.nlp.node_times
print("  t        u(t)       6-12t")
for tk, uk in zip(t, res.controls[:, 0]):
    print(f"  {tk:.4f}  {uk:+.6f}  {6 - 12 * tk:+.6f}")

# The trajectory object samples the polynomial on a uniform grid.
traj = res.trajectory
exact = 3 * traj.times**2 - 2 * traj.times**3
print("max position error on 200 samples:", np.max(np.abs(traj.states[:, 0] - exact)))
