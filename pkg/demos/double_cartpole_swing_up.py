"""
Double cart-pole swing-up
=========================

Two stacked links must both end upright after four seconds. Expect under
a minute per solver. Rejected line-search trials are where the DDP cost
spikes; the CLI prints them with ``TRAJOPT_LOG=debug``.
"""
import numpy as np

from trajopt import DdpOptions, ddp_solve, gpm_solve, make_benchmark

plant, cost, boundary = make_benchmark("double_cartpole")

ddp = ddp_solve(plant, cost, boundary, DdpOptions(dt=0.01))
x = ddp.trajectory.final_state
print(f"DDP  {ddp.status}: cost {ddp.final_cost:.3f}, links "
      f"{x[1] - np.pi:+.1e} / {x[2] - np.pi:+.1e} rad from upright, {ddp.runtime:.0f} s")
# every line-search trial is kept as (iteration, alpha, cost, accepted)
rejected = [cost_ for _, _, cost_, ok in ddp.trial_costs if not ok]
print(f"DDP line-search trials: {len(ddp.trial_costs)}, rejected: {len(rejected)}")

gpm = gpm_solve(plant, cost.without_terminal(), boundary, K=40)
x = gpm.final_state
print(f"GPM  {gpm.solution.status}: cost {gpm.solution.objective:.3f}, links "
      f"{x[1] - np.pi:+.1e} / {x[2] - np.pi:+.1e} rad, violation "
      f"{gpm.solution.max_violation:.1e}, {gpm.runtime:.0f} s")
