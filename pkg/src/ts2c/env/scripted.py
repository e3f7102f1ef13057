"""Hand-written controllers used as teachers and as reference policies."""

import numpy as np
import scipy.linalg

from ts2c.env.driving import DrivingParams
from ts2c.env.pendulum import PendulumParams, angle_normalize
from ts2c.errors import ParameterError
from ts2c.policy import FunctionPolicy

TEACHERS = ("conservative_follower", "pendulum_mediocre")


def _nearest_lane(y, lanes):
    lanes = np.asarray(lanes)
    return lanes[np.argmin(np.abs(y[:, None] - lanes[None, :]), axis=1)]


def conservative_follower(params: DrivingParams | None = None, lane_tolerance: float = 0.0) -> FunctionPolicy:
    """Hold the nearest lane and match the traffic car's speed.

    Slows further when closing in on the traffic car in its lane, so it never
    crashes, but it reaches the goal only at traffic speed. Lateral drift
    smaller than ``lane_tolerance`` is left uncorrected.
    """
    p = params or DrivingParams()

    def fn(obs):
        y, v, gap, v_tr = obs[:, 1], obs[:, 2] * p.v_max, obs[:, 3] * p.gap_scale, obs[:, 4] * p.v_max
        lane = _nearest_lane(y, p.lane_centers)
        lat = np.clip(0.5 * (lane - y) / p.lat_max, -1.0, 1.0)
        lat = np.where(np.abs(lane - y) > lane_tolerance, lat, 0.0)
        same_lane = np.abs(lane - p.lane_centers[0]) < 1e-9
        close = same_lane & (gap > 0) & (gap < 2 * p.car_length + 1.0)
        v_target = np.where(close, 0.5 * v_tr, v_tr)
        acc = np.clip((v_target - v) / p.acc_max, -1.0, 1.0)
        return np.stack([acc, lat], axis=1)

    return FunctionPolicy(fn, 2, "conservative_follower")


def overtaker(params: DrivingParams | None = None) -> FunctionPolicy:
    """Reference script: move to the left lane and drive at full speed."""
    p = params or DrivingParams()

    def fn(obs):
        y = obs[:, 1]
        lat = np.clip(0.5 * (p.lane_centers[1] - y) / p.lat_max, -1.0, 1.0)
        return np.stack([np.ones_like(y), lat], axis=1)

    return FunctionPolicy(fn, 2, "overtaker")


def _pendulum_terms(obs):
    th = np.arctan2(obs[:, 1], obs[:, 0])
    return th, obs[:, 2]


def _pendulum_lqr_gain(p: PendulumParams):
    # semi-implicit Euler linearisation about the upright equilibrium
    a = 3 * p.g / (2 * p.length)
    b = 3.0 / (p.m * p.length**2)
    dt = p.dt
    A = np.array([[1 + a * dt * dt, dt], [a * dt, 1.0]])
    B = np.array([[b * dt * dt], [b * dt]])
    Q = np.diag([1.0, 0.1])
    R = np.array([[0.001]])
    X = scipy.linalg.solve_discrete_are(A, B, Q, R)
    return np.linalg.solve(B.T @ X @ B + R, B.T @ X @ A)[0]


def energy_pump(params: PendulumParams | None = None, torque_cap=None, gain=1.0,
                catch_angle=0.6, use_lqr=True) -> FunctionPolicy:
    """Energy-shaping swing-up with an LQR catch near the top.

    ``torque_cap`` below the motor limit makes a deliberately weaker controller.
    """
    p = params or PendulumParams()
    cap = p.max_torque if torque_cap is None else float(torque_cap)
    a = 3 * p.g / (2 * p.length)
    K = _pendulum_lqr_gain(p)

    def fn(obs):
        th, thdot = _pendulum_terms(obs)
        th = angle_normalize(th)
        # pseudo-energy E = thdot^2/2 + a cos th equals a at rest upright
        energy = 0.5 * thdot**2 + a * np.cos(th)
        pump = gain * (a - energy) * np.sign(thdot + 1e-12)
        u = np.clip(pump, -cap, cap)
        if use_lqr:
            near = (np.abs(th) < catch_angle) & (np.abs(thdot) < 4.0)
            u_lqr = -(K[0] * th + K[1] * thdot)
            u = np.where(near, np.clip(u_lqr, -cap, cap), u)
        return u[:, None]

    return FunctionPolicy(fn, 1, "energy_pump")


def pendulum_expert(params: PendulumParams | None = None) -> FunctionPolicy:
    """Full-torque swing-up with LQR stabilisation (reference near-optimal controller)."""
    pol = energy_pump(params)
    pol.name = "pendulum_expert"
    return pol


def pendulum_mediocre(params: PendulumParams | None = None) -> FunctionPolicy:
    """Capped-torque energy pump; swings up slowly and balances loosely."""
    pol = energy_pump(params, torque_cap=0.8, gain=0.3)
    pol.name = "pendulum_mediocre"
    return pol


def scripted_teacher(name: str, params=None, **options) -> FunctionPolicy:
    """Look up a teacher by name; ``options`` go to the controller (e.g. lane_tolerance)."""
    if name == "conservative_follower":
        return conservative_follower(params, **options)
    if name == "pendulum_mediocre":
        if options:
            raise ParameterError(f"pendulum_mediocre takes no options, got {sorted(options)}")
        return pendulum_mediocre(params)
    raise ParameterError(f"unknown scripted teacher {name!r}; expected one of {TEACHERS}")
