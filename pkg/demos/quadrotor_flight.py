"""
Quadrotor point-to-point flight
===============================

Fly from (-1, 1, 0.5) to (0.5, -1, 1.5) in three seconds using the four
rotor thrusts. Both solvers start from hover thrust. The collocation
solution hits the target exactly; DDP stops short by a small gap that
depends on the terminal weight.
"""
import numpy as np

from trajopt import DdpOptions, QuadrotorPlant, ddp_solve, gpm_solve, make_benchmark

plant, cost, boundary = make_benchmark("quadrotor")
hover = np.full(4, QuadrotorPlant().hover_thrust)
print("hover thrust per rotor:", hover[0], "N")

ddp = ddp_solve(plant, cost, boundary, DdpOptions(dt=0.01, initial_controls=hover))
gap = ddp.trajectory.final_state[:3] - boundary.x_target[:3]
print(f"DDP {ddp.status}: cost {ddp.final_cost:.4f}, position gap {np.linalg.norm(gap):.2e} m")

gpm = gpm_solve(plant, cost.without_terminal(), boundary, K=30, guess_controls=hover)
gap = gpm.final_state[:3] - boundary.x_target[:3]
print(f"GPM {gpm.solution.status}: cost {gpm.solution.objective:.4f}, "
      f"position gap {np.linalg.norm(gap):.2e} m")

# Peak tilt along each solution, in degrees.
for name, states in (("DDP", ddp.trajectory.states), ("GPM", gpm.trajectory.states)):
    tilt = np.degrees(np.max(np.abs(states[:, 6:8])))
    print(f"{name} peak roll/pitch: {tilt:.1f} deg")
