"""
The augmented-Lagrangian NLP solver
===================================

The transcription hands its program to a small built-in solver. It also
works on its own for equality and box constrained problems.
"""
import numpy as np

from trajopt import NlpOptions, NlpProblem, kkt_check, solve

# Closest point to (2, -1) on the line x + y = 0.5, with y kept above -1.
nlp = NlpProblem(
    dimension=2,
    objective=lambda z: float((z[0] - 2) ** 2 + (z[1] + 1) ** 2),
    gradient=lambda z: np.array([2 * (z[0] - 2), 2 * (z[1] + 1)]),
    constraints=lambda z: np.array([z[0] + z[1] - 0.5]),
    jacobian=lambda z: np.array([[1.0, 1.0]]),
    hessian=lambda z, mu: 2 * np.eye(2),
    lower=np.array([-np.inf, -1.0]),
)
sol = solve(nlp, np.zeros(2))
print("x =", sol.x, "multiplier =", sol.multipliers, "status =", sol.status)

# The active bound y >= -1 pushes the answer off the unconstrained projection.
rep = kkt_check(nlp, sol)
print(f"stationarity {rep.stationarity_norm:.1e}  violation {rep.max_violation:.1e}")

# Without a Hessian the inner solver switches to L-BFGS.
nlp_no_hess = NlpProblem(dimension=2, objective=nlp.objective, gradient=nlp.gradient,
                         constraints=nlp.constraints, lower=nlp.lower)
sol2 = solve(nlp_no_hess, np.zeros(2), NlpOptions(inner="lbfgs"))
print("L-BFGS inner:", sol2.x, sol2.status)
