"""Pendulum swing-up (classic torque-limited dynamics, angle 0 = upright)."""

from dataclasses import dataclass

import numpy as np

from ts2c.env.base import ContinuousEnv


@dataclass
class PendulumParams:
    max_torque: float = 2.0
    max_speed: float = 8.0
    dt: float = 0.05
    g: float = 10.0
    m: float = 1.0
    length: float = 1.0
    horizon: int = 200
    init_angle_noise: float = 0.1
    init_velocity_noise: float = 0.1


def angle_normalize(th):
    return ((th + np.pi) % (2 * np.pi)) - np.pi


class Pendulum(ContinuousEnv):
    """Observation [cos th, sin th, thdot]; action [torque]; starts hanging down."""

    state_dim = 3
    action_dim = 1

    def __init__(self, params: PendulumParams | None = None):
        super().__init__()
        self.p = params or PendulumParams()
        self.horizon = int(self.p.horizon)
        self.action_low = np.array([-self.p.max_torque])
        self.action_high = np.array([self.p.max_torque])
        self.reward_range = (-(np.pi**2 + 0.1 * self.p.max_speed**2 + 0.001 * self.p.max_torque**2), 0.0)
        self.th = np.pi
        self.thdot = 0.0

    def _reset(self, rng):
        p = self.p
        self.th = np.pi + p.init_angle_noise * rng.uniform(-1.0, 1.0)
        self.thdot = p.init_velocity_noise * rng.uniform(-1.0, 1.0)

    def set_state(self, th, thdot):
        self.th, self.thdot = float(th), float(thdot)

    def observe(self):
        return np.array([np.cos(self.th), np.sin(self.th), self.thdot])

    def _advance(self, a):
        p = self.p
        u = float(a[0])
        th_n = angle_normalize(self.th)
        reward = -(th_n**2 + 0.1 * self.thdot**2 + 0.001 * u**2)
        acc = 3 * p.g / (2 * p.length) * np.sin(self.th) + 3.0 / (p.m * p.length**2) * u
        self.thdot = float(np.clip(self.thdot + acc * p.dt, -p.max_speed, p.max_speed))
        self.th = float(self.th + self.thdot * p.dt)
        # success: upright (within 0.5 rad) at the step's end
        return reward, 0.0, False, {"success": bool(abs(angle_normalize(self.th)) < 0.5)}
