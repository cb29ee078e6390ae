"""Independent reference computations shared by the unit and acceptance tests."""
import numpy as np

from trajopt.core import BoundarySpec, LinearPlant, finite_diff_jacobian, rollout
from trajopt.costs import QuadraticCost
from trajopt.plants import QuadrotorPlant


def riccati_gains(Phi, B, Q, R, W_f, N):
    """Finite-horizon discrete LQR for cost sum x'Qx + u'Ru + x_N' W_f x_N.

    Written independently of the DDP code: value x' S x, policy u = -K x.
    """
    S = W_f.copy()
    Ks, Ss = [None] * N, [None] * (N + 1)
    Ss[N] = S
    for k in range(N - 1, -1, -1):
        K = np.linalg.solve(R + B.T @ S @ B, B.T @ S @ Phi)
        S = Q + Phi.T @ S @ (Phi - B @ K)
        S = 0.5 * (S + S.T)
        Ks[k], Ss[k] = K, S
    return Ks, Ss


def random_lq(seed, n=4, m=2, N=30, dt=0.05):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    Bc = rng.normal(size=(n, m))
    Qh = rng.normal(size=(n, n))
    Q = Qh @ Qh.T / n + 0.1 * np.eye(n)
    R = np.diag(rng.uniform(0.5, 2.0, size=m))
    W_f = np.diag(rng.uniform(1.0, 5.0, size=n))
    plant = LinearPlant(A, Bc)
    cost = QuadraticCost(n, m, R=R, Q=Q, W_f=W_f)
    x0 = rng.normal(size=n)
    boundary = BoundarySpec(x0, np.zeros(n), 0.0, N * dt)
    return plant, cost, boundary, dict(A=A, B=Bc, Q=Q, R=R, W_f=W_f, N=N, dt=dt, x0=x0)


def q_function_case(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 4), rng.integers(1, 4)
    dt = 0.1
    A = rng.normal(size=(n, n))
    Bc = rng.normal(size=(n, m))
    Qh = rng.normal(size=(n, n))
    cost = QuadraticCost(n, m, R=np.diag(rng.uniform(0.2, 2.0, m)), Q=Qh @ Qh.T,
                         W_f=np.diag(rng.uniform(0.5, 3.0, n)), x_ref=rng.normal(size=n),
                         x_target=rng.normal(size=n))
    plant = LinearPlant(A, Bc)
    nominal = rollout(plant, rng.normal(size=n), rng.normal(size=(1, m)), dt)
    return plant, cost, nominal, rng.normal(size=n) * 0.3


def relative_energy_drift(plant, x0, horizon):
    dt = 1e-4
    N = int(round(horizon / dt))
    traj = rollout(plant, x0, np.zeros((N, 1)), dt, "rk4")
    e = np.array([plant.energy(x) for x in traj.states[:: N // 50]] + [plant.energy(traj.states[-1])])
    # energy is measured from the hanging rest, so normalize by the swing amplitude
    scale = abs(e[0] - plant.energy(np.zeros_like(x0)))
    return np.max(np.abs(e - e[0])) / scale


def random_point(plant, rng):
    x = rng.uniform(-2, 2, size=plant.n)
    if isinstance(plant, QuadrotorPlant):
        x[7] = rng.uniform(-1.2, 1.2)
        return x, rng.uniform(0, 5, size=4)
    return x, rng.uniform(-20, 20, size=plant.m)


def jacobian_worst_error(plant, rng, points=100):
    """Largest scaled gap between analytic and central-difference Jacobians."""
    worst = 0.0
    for _ in range(points):
        x, u = random_point(plant, rng)
        A, B = plant.jacobians(x, u)
        Afd = finite_diff_jacobian(lambda v: plant.dynamics(v, u), x)
        Bfd = finite_diff_jacobian(lambda v: plant.dynamics(x, v), u)
        for exact, fd in ((A, Afd), (B, Bfd)):
            worst = max(worst, np.max(np.abs(exact - fd)) / max(1.0, np.max(np.abs(fd))))
    return worst
