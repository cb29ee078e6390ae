"""Benchmark plants: cart pole, double cart pole and quadrotor.

Angles of the pendulum plants are measured from the hanging (stable)
equilibrium, so ``theta = 0`` is down and ``theta = pi`` is upright. Links
are uniform slender rods with their mass centred at half length.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BoundarySpec, PlantModel, TrajoptError
from .costs import QuadraticCost

GRAVITY = 9.81


class KinematicSingularityError(TrajoptError):
    """Euler-angle kinematics are undefined at pitch = +/- pi/2."""


class ManipulatorPlant(PlantModel):
    """Mechanical system ``M(q) qdd = b(q, qd, u)`` with state ``(q, qd)``.

    Subclasses supply the mass matrix, its partials with respect to each
    coordinate, the right-hand side ``b`` and its partials. The state
    Jacobians then follow from differentiating ``qdd = M^-1 b``.
    """

    nq: int

    def mass_matrix(self, q):
        raise NotImplementedError

    def mass_matrix_partials(self, q):
        """Array of shape (nq, nq, nq); entry ``[j]`` is dM/dq_j."""
        raise NotImplementedError

    def rhs(self, q, qd, u):
        raise NotImplementedError

    def rhs_partials(self, q, qd, u):
        """Return ``(db/dq, db/dqd, db/du)``."""
        raise NotImplementedError

    def energy(self, x):
        raise NotImplementedError

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        return x[: self.nq], x[self.nq:]

    def accelerations(self, x, u):
        q, qd = self._split(x)
        return np.linalg.solve(self.mass_matrix(q), self.rhs(q, qd, np.atleast_1d(u)))

    def dynamics(self, x, u, t=0.0):
        _, qd = self._split(x)
        return np.concatenate([qd, self.accelerations(x, u)])

    def jacobians(self, x, u, t=0.0):
        q, qd = self._split(x)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        M = self.mass_matrix(q)
        qdd = np.linalg.solve(M, self.rhs(q, qd, u))
        dM = self.mass_matrix_partials(q)
        db_dq, db_dqd, db_du = self.rhs_partials(q, qd, u)
        # d(qdd)/dq_j = M^-1 (db/dq_j - dM/dq_j qdd)
        rhs_q = db_dq - np.einsum("jab,b->aj", dM, qdd)
        stacked = np.linalg.solve(M, np.hstack([rhs_q, db_dqd, db_du]))
        nq = self.nq
        A = np.zeros((2 * nq, 2 * nq))
        A[:nq, nq:] = np.eye(nq)
        A[nq:, :] = stacked[:, : 2 * nq]
        B = np.zeros((2 * nq, self.m))
        B[nq:, :] = stacked[:, 2 * nq:]
        return A, B

    def jacobian_x(self, x, u, t=0.0):
        return self.jacobians(x, u, t)[0]

    def jacobian_u(self, x, u, t=0.0):
        return self.jacobians(x, u, t)[1]


class CartPolePlant(ManipulatorPlant):
    """Single pendulum on a force-driven cart.

    State ``(cart position, link angle, cart velocity, link rate)``, control
    the horizontal force on the cart.
    """

    nq = 2
    n = 4
    m = 1

    def __init__(self, cart_mass=1.0, link_mass=5.0, link_length=1.5, gravity=GRAVITY):
        self.parameters = dict(
            cart_mass=float(cart_mass), link_mass=float(link_mass),
            link_length=float(link_length), gravity=float(gravity),
        )
        if any(v <= 0 for v in self.parameters.values()):
            raise ValueError("cart pole parameters must be positive")
        self.mc = cart_mass
        self.ml = link_mass
        self.lc = 0.5 * link_length
        self.inertia = link_mass * link_length**2 / 12.0
        self.g = gravity

    def mass_matrix(self, q):
        c = np.cos(q[1])
        off = self.ml * self.lc * c
        return np.array([[self.mc + self.ml, off],
                         [off, self.inertia + self.ml * self.lc**2]])

    def mass_matrix_partials(self, q):
        s = np.sin(q[1])
        dM = np.zeros((2, 2, 2))
        dM[1, 0, 1] = dM[1, 1, 0] = -self.ml * self.lc * s
        return dM

    def rhs(self, q, qd, u):
        s = np.sin(q[1])
        k = self.ml * self.lc
        return np.array([u[0] + k * s * qd[1] ** 2, -k * self.g * s])

    def rhs_partials(self, q, qd, u):
        s, c = np.sin(q[1]), np.cos(q[1])
        k = self.ml * self.lc
        db_dq = np.array([[0.0, k * c * qd[1] ** 2],
                          [0.0, -k * self.g * c]])
        db_dqd = np.array([[0.0, 2 * k * s * qd[1]],
                           [0.0, 0.0]])
        db_du = np.array([[1.0], [0.0]])
        return db_dq, db_dqd, db_du

    def energy(self, x):
        q, qd = self._split(x)
        return 0.5 * qd @ self.mass_matrix(q) @ qd - self.ml * self.g * self.lc * np.cos(q[1])


class DoubleCartPolePlant(ManipulatorPlant):
    """Two-link pendulum on a cart.

    State ``(cart position, angle 1, angle 2, cart velocity, rate 1, rate 2)``
    with absolute link angles.
    """

    nq = 3
    n = 6
    m = 1

    def __init__(self, cart_mass=3.0, link1_mass=1.0, link2_mass=20.0,
                 link1_length=1.5, link2_length=1.5, gravity=GRAVITY):
        self.parameters = dict(
            cart_mass=float(cart_mass), link1_mass=float(link1_mass),
            link2_mass=float(link2_mass), link1_length=float(link1_length),
            link2_length=float(link2_length), gravity=float(gravity),
        )
        if any(v <= 0 for v in self.parameters.values()):
            raise ValueError("double cart pole parameters must be positive")
        m0, m1, m2 = cart_mass, link1_mass, link2_mass
        l1, l2 = link1_length, link2_length
        a1, a2 = 0.5 * l1, 0.5 * l2
        self.g = gravity
        self.total_mass = m0 + m1 + m2
        self.k1 = m1 * a1 + m2 * l1
        self.k2 = m2 * a2
        self.k12 = m2 * l1 * a2
        self.J1 = m1 * a1**2 + m1 * l1**2 / 12.0 + m2 * l1**2
        self.J2 = m2 * a2**2 + m2 * l2**2 / 12.0

    def mass_matrix(self, q):
        c1, c2, c12 = np.cos(q[1]), np.cos(q[2]), np.cos(q[1] - q[2])
        return np.array([
            [self.total_mass, self.k1 * c1, self.k2 * c2],
            [self.k1 * c1, self.J1, self.k12 * c12],
            [self.k2 * c2, self.k12 * c12, self.J2],
        ])

    def mass_matrix_partials(self, q):
        s1, s2, s12 = np.sin(q[1]), np.sin(q[2]), np.sin(q[1] - q[2])
        dM = np.zeros((3, 3, 3))
        dM[1, 0, 1] = dM[1, 1, 0] = -self.k1 * s1
        dM[1, 1, 2] = dM[1, 2, 1] = -self.k12 * s12
        dM[2, 0, 2] = dM[2, 2, 0] = -self.k2 * s2
        dM[2, 1, 2] = dM[2, 2, 1] = self.k12 * s12
        return dM

    def rhs(self, q, qd, u):
        s1, s2, s12 = np.sin(q[1]), np.sin(q[2]), np.sin(q[1] - q[2])
        w1, w2 = qd[1], qd[2]
        return np.array([
            u[0] + self.k1 * s1 * w1**2 + self.k2 * s2 * w2**2,
            -self.k12 * s12 * w2**2 - self.k1 * self.g * s1,
            self.k12 * s12 * w1**2 - self.k2 * self.g * s2,
        ])

    def rhs_partials(self, q, qd, u):
        s1, s2, s12 = np.sin(q[1]), np.sin(q[2]), np.sin(q[1] - q[2])
        c1, c2, c12 = np.cos(q[1]), np.cos(q[2]), np.cos(q[1] - q[2])
        w1, w2 = qd[1], qd[2]
        g = self.g
        db_dq = np.array([
            [0.0, self.k1 * c1 * w1**2, self.k2 * c2 * w2**2],
            [0.0, -self.k12 * c12 * w2**2 - self.k1 * g * c1, self.k12 * c12 * w2**2],
            [0.0, self.k12 * c12 * w1**2, -self.k12 * c12 * w1**2 - self.k2 * g * c2],
        ])
        db_dqd = np.array([
            [0.0, 2 * self.k1 * s1 * w1, 2 * self.k2 * s2 * w2],
            [0.0, 0.0, -2 * self.k12 * s12 * w2],
            [0.0, 2 * self.k12 * s12 * w1, 0.0],
        ])
        db_du = np.array([[1.0], [0.0], [0.0]])
        return db_dq, db_dqd, db_du

    def energy(self, x):
        q, qd = self._split(x)
        potential = -self.g * (self.k1 * np.cos(q[1]) + self.k2 * np.cos(q[2]))
        return 0.5 * qd @ self.mass_matrix(q) @ qd + potential


class QuadrotorPlant(PlantModel):
    """Rigid-body quadrotor in plus configuration driven by rotor thrusts.

    State: position (3), world-frame velocity (3), roll-pitch-yaw (3) with
    rotation ``Rz(yaw) Ry(pitch) Rx(roll)``, body angular rates (3).
    Rotors 1..4 sit on the +x, +y, -x, -y arms; rotors 1 and 3 spin so that
    their drag torque is +``yaw_coefficient`` times thrust about body z.
    """

    n = 12
    m = 4

    def __init__(self, mass=1.0, inertia=(8.1e-3, 8.1e-3, 14.2e-3), arm_length=0.24,
                 yaw_coefficient=0.016, gravity=GRAVITY):
        inertia = np.asarray(inertia, dtype=float)
        if inertia.shape != (3,) or np.any(inertia <= 0):
            raise ValueError("inertia must be three positive principal moments")
        if mass <= 0 or arm_length <= 0 or gravity <= 0:
            raise ValueError("quadrotor parameters must be positive")
        self.parameters = dict(
            mass=float(mass), Jx=float(inertia[0]), Jy=float(inertia[1]),
            Jz=float(inertia[2]), arm_length=float(arm_length),
            yaw_coefficient=float(yaw_coefficient), gravity=float(gravity),
        )
        self.mass = float(mass)
        self.J = inertia
        self.g = float(gravity)
        l, k = arm_length, yaw_coefficient
        self.mixer = np.array([
            [0.0, l, 0.0, -l],
            [-l, 0.0, l, 0.0],
            [k, -k, k, -k],
        ])

    @property
    def hover_thrust(self):
        return self.mass * self.g / 4.0

    def _check(self, x):
        if abs(np.cos(x[7])) < 1e-6:
            raise KinematicSingularityError(
                f"pitch {x[7]!r} is within 1e-6 of +/-pi/2; Euler-angle rates undefined"
            )

    @staticmethod
    def rotation(eta):
        phi, theta, psi = eta
        cf, sf = np.cos(phi), np.sin(phi)
        ct, st = np.cos(theta), np.sin(theta)
        cp, sp = np.cos(psi), np.sin(psi)
        Rz = np.array([[cp, -sp, 0], [sp, cp, 0], [0, 0, 1.0]])
        Ry = np.array([[ct, 0, st], [0, 1.0, 0], [-st, 0, ct]])
        Rx = np.array([[1.0, 0, 0], [0, cf, -sf], [0, sf, cf]])
        return Rz @ Ry @ Rx

    def dynamics(self, x, u, t=0.0):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        self._check(x)
        phi, theta, psi = x[6:9]
        w = x[9:12]
        cf, sf = np.cos(phi), np.sin(phi)
        ct, st = np.cos(theta), np.sin(theta)
        cp, sp = np.cos(psi), np.sin(psi)
        thrust = u.sum()
        z_body = np.array([cp * st * cf + sp * sf, sp * st * cf - cp * sf, ct * cf])
        acc = thrust / self.mass * z_body
        acc[2] -= self.g
        eta_dot = np.array([
            w[0] + (sf * w[1] + cf * w[2]) * st / ct,
            cf * w[1] - sf * w[2],
            (sf * w[1] + cf * w[2]) / ct,
        ])
        torque = self.mixer @ u
        Jw = self.J * w
        w_dot = (torque - np.cross(w, Jw)) / self.J
        return np.concatenate([x[3:6], acc, eta_dot, w_dot])

    def jacobians(self, x, u, t=0.0):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        self._check(x)
        phi, theta, psi = x[6:9]
        w = x[9:12]
        cf, sf = np.cos(phi), np.sin(phi)
        ct, st = np.cos(theta), np.sin(theta)
        cp, sp = np.cos(psi), np.sin(psi)
        tt = st / ct
        thrust = u.sum()
        z_body = np.array([cp * st * cf + sp * sf, sp * st * cf - cp * sf, ct * cf])
        dz = np.column_stack([
            [-cp * st * sf + sp * cf, -sp * st * sf - cp * cf, -ct * sf],
            [cp * ct * cf, sp * ct * cf, -st * cf],
            [-sp * st * cf + cp * sf, cp * st * cf + sp * sf, 0.0],
        ])

        A = np.zeros((12, 12))
        A[0:3, 3:6] = np.eye(3)
        A[3:6, 6:9] = thrust / self.mass * dz

        a = sf * w[1] + cf * w[2]
        b = cf * w[1] - sf * w[2]
        A[6:9, 6] = [b * tt, -a, b / ct]
        A[6:9, 7] = [a / ct**2, 0.0, a * st / ct**2]
        A[6:9, 9:12] = [[1.0, sf * tt, cf * tt], [0.0, cf, -sf], [0.0, sf / ct, cf / ct]]

        Jw = self.J * w
        dcross = _skew(w) @ np.diag(self.J) - _skew(Jw)
        A[9:12, 9:12] = -dcross / self.J[:, None]

        B = np.zeros((12, 4))
        B[3:6, :] = z_body[:, None] / self.mass
        B[9:12, :] = self.mixer / self.J[:, None]
        return A, B

    def jacobian_x(self, x, u, t=0.0):
        return self.jacobians(x, u, t)[0]

    def jacobian_u(self, x, u, t=0.0):
        return self.jacobians(x, u, t)[1]


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


PLANTS = {
    "cartpole": CartPolePlant,
    "double_cartpole": DoubleCartPolePlant,
    "quadrotor": QuadrotorPlant,
}


@dataclass
class BenchmarkSettings:
    """Default solver-facing settings for one benchmark problem."""

    horizon: float
    R: list
    Q: list
    W_f: list
    dt: float = 0.01
    K: int = 25
    warm_start: str = "zero"
    plant: dict = field(default_factory=dict)


# Cost weights are not given with the benchmark definitions; these defaults
# are tuned so both solvers reach the targets and are exposed through config.
BENCHMARKS = {
    "cartpole": BenchmarkSettings(
        horizon=2.0, R=[1e-2], Q=[0.0] * 4,
        W_f=[1e3, 1e3, 1e2, 1e2], dt=0.01, K=25,
    ),
    "double_cartpole": BenchmarkSettings(
        horizon=4.0, R=[1e-2], Q=[0.0] * 6,
        W_f=[1e3, 1e5, 1e5, 1e3, 1e3, 1e3], dt=0.01, K=40,
    ),
    "quadrotor": BenchmarkSettings(
        horizon=3.0, R=[1e-2] * 4,
        Q=[1.0, 1.0, 1.0, 0.1, 0.1, 0.1, 5.0, 5.0, 0.1, 0.1, 0.1, 0.1],
        W_f=[1e3] * 3 + [1e2] * 9, dt=0.01, K=30, warm_start="hover",
    ),
}


def initial_and_target(problem_id):
    if problem_id == "cartpole":
        return np.zeros(4), np.array([0.0, np.pi, 0.0, 0.0])
    if problem_id == "double_cartpole":
        return np.zeros(6), np.array([0.0, np.pi, np.pi, 0.0, 0.0, 0.0])
    if problem_id == "quadrotor":
        x0 = np.zeros(12)
        x0[:3] = [-1.0, 1.0, 0.5]
        xf = np.zeros(12)
        xf[:3] = [0.5, -1.0, 1.5]
        return x0, xf
    raise ValueError(f"unknown problem id {problem_id!r}; choose from {sorted(PLANTS)}")


def make_benchmark(problem_id, R=None, Q=None, W_f=None, plant_params=None,
                   control_bounds=None, state_bounds=None):
    """Build ``(plant, cost, boundary)`` for one of the benchmark problems.

    The running cost is ``u'Ru`` for the cart poles and
    ``(x - x_target)' Q (x - x_target) + u'Ru`` for the quadrotor; the
    terminal weight ``W_f`` only matters to DDP, since the collocation
    transcription pins the final state.
    """
    if problem_id not in PLANTS:
        raise ValueError(f"unknown problem id {problem_id!r}; choose from {sorted(PLANTS)}")
    settings = BENCHMARKS[problem_id]
    plant = PLANTS[problem_id](**(plant_params or {}))
    x0, xf = initial_and_target(problem_id)
    cost = QuadraticCost(
        plant.n, plant.m,
        R=settings.R if R is None else R,
        Q=settings.Q if Q is None else Q,
        W_f=settings.W_f if W_f is None else W_f,
        x_ref=xf, x_target=xf,
    )
    boundary = BoundarySpec(x0=x0, x_target=xf, t0=0.0, tf=settings.horizon,
                            control_bounds=control_bounds, state_bounds=state_bounds)
    return plant, cost, boundary
