"""Quadratic tracking costs used by every benchmark."""
from __future__ import annotations

import numpy as np

from .core import CostModel, RunningDerivatives, as_matrix


class QuadraticCost(CostModel):
    """Running rate and terminal penalty

        L(x, u)  = (x - x_ref)' Q (x - x_ref) + u' R u
        phi(x)   = (x - x_target)' W_f (x - x_target)

    ``Q``, ``R`` and ``W_f`` accept scalars, diagonals or full matrices and are
    symmetrized on construction. No factor 1/2 is applied.
    """

    def __init__(self, n, m, R, Q=0.0, W_f=0.0, x_ref=None, x_target=None):
        self.n = int(n)
        self.m = int(m)
        self.R = _sym(as_matrix(R, self.m))
        self.Q = _sym(as_matrix(Q, self.n))
        self.W_f = _sym(as_matrix(W_f, self.n))
        self.x_ref = np.zeros(self.n) if x_ref is None else np.asarray(x_ref, float).copy()
        self.x_target = (
            np.zeros(self.n) if x_target is None else np.asarray(x_target, float).copy()
        )

    def running(self, x, u, t=0.0):
        dx = np.asarray(x, float) - self.x_ref
        u = np.atleast_1d(np.asarray(u, float))
        return float(dx @ self.Q @ dx + u @ self.R @ u)

    def terminal(self, x, tf=0.0):
        dx = np.asarray(x, float) - self.x_target
        return float(dx @ self.W_f @ dx)

    def running_derivs(self, x, u, t=0.0):
        dx = np.asarray(x, float) - self.x_ref
        u = np.atleast_1d(np.asarray(u, float))
        N = np.zeros((self.m, self.n))
        return RunningDerivatives(
            q=2.0 * self.Q @ dx,
            r=2.0 * self.R @ u,
            Q=2.0 * self.Q,
            R=2.0 * self.R,
            N=N,
            M=N.T.copy(),
        )

    def terminal_derivs(self, x, tf=0.0):
        dx = np.asarray(x, float) - self.x_target
        return 2.0 * self.W_f @ dx, 2.0 * self.W_f

    def with_weights(self, **kw) -> "QuadraticCost":
        args = dict(R=self.R, Q=self.Q, W_f=self.W_f, x_ref=self.x_ref, x_target=self.x_target)
        args.update(kw)
        return QuadraticCost(self.n, self.m, **args)


def _sym(A):
    return 0.5 * (A + A.T)
