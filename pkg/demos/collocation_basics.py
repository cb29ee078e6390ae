"""
Legendre-Gauss collocation building blocks
==========================================

Nodes, quadrature weights, the differentiation matrix and barycentric
interpolation on the interval [-1, 1].
"""
import numpy as np

from trajopt.collocation import CollocationGrid, gauss_quadrature, lagrange_interpolate

# A grid bundles everything the transcription needs for K nodes.
grid = CollocationGrid.build(6)
print("nodes  ", np.round(grid.nodes, 6))
print("weights", np.round(grid.weights, 6))
print("weights sum to", grid.weights.sum())

# K nodes integrate polynomials up to degree 2K - 1 exactly; degree 12
# is the first even power that the six-node rule gets wrong.
for degree in (4, 10, 12):
    approx = gauss_quadrature(lambda t: t**degree, grid)
    exact = 2.0 / (degree + 1)
    print(f"int t^{degree}: quadrature {approx:.15f}  exact {exact:.15f}")

# The differentiation matrix acts on values at {-1} U nodes and returns
# derivatives at the nodes. A cubic is differentiated exactly.
p = lambda t: 2 * t**3 - t + 0.5
dp = lambda t: 6 * t**2 - 1
print("max derivative error:", np.max(np.abs(grid.D @ p(grid.support) - dp(grid.nodes))))

# Interpolating a smooth function converges quickly with K.
for K in (4, 8, 16):
    g = CollocationGrid.build(K)
    query = np.linspace(-1, 1, 101)
    err = np.max(np.abs(lagrange_interpolate(g.support, np.sin(3 * g.support), query)
                        - np.sin(3 * query)))
    print(f"K={K:2d} interpolation error of sin(3t): {err:.2e}")
