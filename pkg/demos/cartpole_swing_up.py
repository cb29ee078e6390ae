"""
Cart-pole swing-up with both solvers
====================================

The pole starts hanging down and must end upright over the cart's start
position after two seconds. DDP penalizes the terminal miss; the
collocation solver pins the final state exactly.
"""
import numpy as np

from trajopt import DdpOptions, ddp_solve, gpm_solve, make_benchmark

plant, cost, boundary = make_benchmark("cartpole")

ddp = ddp_solve(plant, cost, boundary, DdpOptions(dt=0.01))
x = ddp.trajectory.final_state
print(f"DDP  {ddp.status:10s} cost {ddp.final_cost:9.4f}  iterations {ddp.iterations:3d}  "
      f"{ddp.runtime:5.1f} s")
print(f"     cart {x[0]:+.4f} m, pole {x[1]:.4f} rad (pi = {np.pi:.4f})")

# Only the running cost enters the collocation objective.
gpm = gpm_solve(plant, cost.without_terminal(), boundary, K=25)
x = gpm.final_state
print(f"GPM  {gpm.solution.status:10s} cost {gpm.solution.objective:9.4f}  "
      f"outer {gpm.solution.outer_iterations:3d}  {gpm.runtime:5.1f} s")
print(f"     cart {x[0]:+.2e} m, pole {x[1]:.6f} rad, violation {gpm.solution.max_violation:.1e}")

# The two costs are not directly comparable: DDP adds a terminal penalty
# and sums a discrete tape, GPM integrates the running cost by quadrature.
print("max |u|  DDP", np.abs(ddp.trajectory.controls).max().round(2),
      " GPM", np.abs(gpm.controls).max().round(2))
