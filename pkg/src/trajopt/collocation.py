"""Legendre-Gauss nodes, quadrature weights, interpolation and differentiation.

The state interpolant lives on the ``K + 1`` support points ``{-1} U nodes``;
controls and dynamics are collocated at the ``K`` Legendre-Gauss nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NonFiniteError, TrajoptError


class ConvergenceError(TrajoptError):
    pass


def legendre_eval(K: int, tau):
    """Evaluate ``P_K`` and its first two derivatives at ``tau``.

    Uses Bonnet's recurrence for the values and
    ``P'_{k+1} = P'_{k-1} + (2k+1) P_k`` (likewise for ``P''``), which stays
    finite at the endpoints.

    Returns
    -------
    (P, dP, d2P) with the same shape as ``tau``.
    """
    if K < 0:
        raise ValueError("degree must be non-negative")
    tau = np.asarray(tau, dtype=float)
    p_prev, p = np.zeros_like(tau), np.ones_like(tau)
    d_prev, d = np.zeros_like(tau), np.zeros_like(tau)
    dd_prev, dd = np.zeros_like(tau), np.zeros_like(tau)
    for k in range(K):
        # advance from degree k to k + 1
        p_next = ((2 * k + 1) * tau * p - k * p_prev) / (k + 1)
        d_next = d_prev + (2 * k + 1) * p
        dd_next = dd_prev + (2 * k + 1) * d
        p_prev, p = p, p_next
        d_prev, d = d, d_next
        dd_prev, dd = dd, dd_next
    if tau.ndim == 0:
        return float(p), float(d), float(dd)
    return p, d, dd


def lg_nodes(K: int, max_iter: int = 100) -> np.ndarray:
    """Roots of ``P_K`` in ascending order, Newton-refined."""
    if K < 1:
        raise ValueError("need at least one node")
    i = np.arange(1, K + 1)
    x = -np.cos(np.pi * (i - 0.25) / (K + 0.5))
    for _ in range(max_iter):
        p, dp, _ = legendre_eval(K, x)
        step = p / dp
        x = x - step
        if np.max(np.abs(step)) < 1e-15:
            break
    else:
        p, _, _ = legendre_eval(K, x)
        if np.max(np.abs(p)) > 1e-12:
            raise ConvergenceError(f"Legendre root search did not converge for K={K}")
    # exact symmetry about the origin
    x = 0.5 * (x - x[::-1])
    return np.sort(x)


def lg_weights(nodes) -> np.ndarray:
    """Gauss-Legendre weights ``2 / ((1 - tau^2) P'_K(tau)^2)``."""
    nodes = np.asarray(nodes, dtype=float)
    gap = 1.0 - nodes**2
    if np.any(gap <= 0):
        raise ValueError("quadrature nodes must lie strictly inside (-1, 1)")
    _, dp, _ = legendre_eval(len(nodes), nodes)
    w = 2.0 / (gap * dp**2)
    return 0.5 * (w + w[::-1])


def diff_matrix(nodes) -> np.ndarray:
    """Gauss pseudospectral differentiation matrix, shape ``K x (K + 1)``.

    Row ``k`` gives the derivative at node ``k`` of the Lagrange interpolant
    through the support ``{-1} U nodes``; column 0 belongs to ``tau = -1``.
    Built from ``g(tau) = (1 + tau) P_K(tau)``, whose roots are the support.
    """
    nodes = np.asarray(nodes, dtype=float)
    K = len(nodes)
    support = np.concatenate([[-1.0], nodes])
    p, dp, ddp = legendre_eval(K, support)
    g1 = (1.0 + support) * dp + p          # g'(tau)
    g2 = (1.0 + support) * ddp + 2.0 * dp  # g''(tau)
    D = np.empty((K, K + 1))
    for row in range(K):
        k = row + 1
        for i in range(K + 1):
            if i == k:
                D[row, i] = g2[k] / (2.0 * g1[k])
            else:
                D[row, i] = g1[k] / ((support[k] - support[i]) * g1[i])
    return D


def barycentric_weights(points) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    diff = points[:, None] - points[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_interpolate(points, values, query, weights=None):
    """Evaluate the interpolating polynomial through ``(points, values)``.

    ``values`` may be ``(len(points),)`` or ``(len(points), d)``. Queries that
    coincide with a support point return the stored value exactly.
    """
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(np.unique(points)) != len(points):
        raise ValueError("interpolation points must be distinct")
    if weights is None:
        weights = barycentric_weights(points)
    scalar_query = np.ndim(query) == 0
    query = np.atleast_1d(np.asarray(query, dtype=float))

    diff = query[:, None] - points[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    terms = weights[None, :] / diff
    flat = values.reshape(len(points), -1)
    # rows with an exact hit may divide by zero; they are overwritten below
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (terms @ flat) / terms.sum(axis=1)[:, None]
    rows, cols = np.nonzero(exact)
    out[rows] = flat[cols]

    out = out.reshape((len(query),) + values.shape[1:])
    return out[0] if scalar_query else out


@dataclass(frozen=True)
class CollocationGrid:
    """Nodes, weights, interpolation support and differentiation matrix."""

    K: int
    nodes: np.ndarray
    weights: np.ndarray
    support: np.ndarray
    D: np.ndarray

    @classmethod
    def build(cls, K: int) -> "CollocationGrid":
        nodes = lg_nodes(K)
        return cls(
            K=K,
            nodes=nodes,
            weights=lg_weights(nodes),
            support=np.concatenate([[-1.0], nodes]),
            D=diff_matrix(nodes),
        )


def gauss_quadrature(f, grid: CollocationGrid) -> float:
    """``sum_i w_i f(tau_i)`` over the grid nodes."""
    total = 0.0
    for i, (tau, w) in enumerate(zip(grid.nodes, grid.weights)):
        val = float(f(tau))
        if not np.isfinite(val):
            raise NonFiniteError("integrand is not finite", i)
        total += w * val
    return total
