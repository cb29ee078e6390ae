"""Trajectory optimization with DDP and Gauss pseudospectral collocation.

The two solvers share one problem description: a :class:`PlantModel` for
the dynamics, a :class:`CostModel` for the Bolza cost and a
:class:`BoundarySpec` for the fixed-time boundary data.

>>> from trajopt import make_benchmark, ddp_solve
>>> plant, cost, boundary = make_benchmark("cartpole")
"""
from .collocation import (
    CollocationGrid, ConvergenceError, barycentric_weights, diff_matrix, gauss_quadrature,
    lagrange_interpolate, legendre_eval, lg_nodes, lg_weights,
)
from .core import (
    BoundarySpec, CostModel, DivergedRolloutError, FunctionPlant, LinearPlant, NonFiniteError,
    PlantModel, RunningDerivatives, Trajectory, TrajoptError, finite_diff_jacobian, rollout,
    trajectory_cost,
)
from .costs import QuadraticCost
from .ddp import (
    DdpOptions, DdpReport, GainSchedule, IndefiniteHessianError, backward_pass, ddp_solve,
    forward_pass, linearize_step,
)
from .gpm import (
    DecisionLayout, GpmResult, TranscribedNlp, extract_trajectory, gpm_solve, initial_guess,
    inverse_time_transform, time_transform, transcribe,
)
from .nlp import KktReport, NlpOptions, NlpProblem, NlpSolution, kkt_check, solve
from .plants import (
    BENCHMARKS, CartPolePlant, DoubleCartPolePlant, KinematicSingularityError, QuadrotorPlant,
    make_benchmark,
)

__version__ = "0.1.0"

__all__ = [
    "backward_pass", "barycentric_weights", "BENCHMARKS", "BoundarySpec", "CartPolePlant",
    "CollocationGrid", "ConvergenceError", "CostModel", "ddp_solve", "DdpOptions", "DdpReport",
    "DecisionLayout", "diff_matrix", "DivergedRolloutError", "DoubleCartPolePlant",
    "extract_trajectory", "finite_diff_jacobian", "forward_pass", "FunctionPlant",
    "GainSchedule", "gauss_quadrature", "gpm_solve", "GpmResult", "IndefiniteHessianError",
    "initial_guess", "inverse_time_transform", "KinematicSingularityError", "kkt_check",
    "KktReport", "lagrange_interpolate", "legendre_eval", "lg_nodes", "lg_weights",
    "linearize_step", "LinearPlant", "make_benchmark", "NlpOptions", "NlpProblem",
    "NlpSolution", "NonFiniteError", "PlantModel", "QuadraticCost", "QuadrotorPlant",
    "rollout", "RunningDerivatives", "solve", "time_transform", "Trajectory",
    "trajectory_cost", "TrajoptError", "transcribe", "TranscribedNlp",
]
