"""Two-lane overtaking corridor with kinematic point-mass dynamics.

The ego car starts at rest in the right lane (y = 0) behind a slower traffic
car. Following the traffic car is safe but slow; changing to the left lane
(y = 1) and passing is faster. Crashing into the traffic car or leaving the
road costs 1 and ends the episode.
"""

from dataclasses import dataclass

import numpy as np

from ts2c.env.base import ContinuousEnv


@dataclass
class DrivingParams:
    road_length: float = 40.0
    lane_centers: tuple = (0.0, 1.0)
    road_margin: float = 0.5  # road spans [lane0 - margin, lane1 + margin]
    v_max: float = 1.0
    acc_max: float = 0.1
    lat_max: float = 0.15
    traffic_speed: float = 0.3
    traffic_speed_jitter: float = 0.03
    traffic_gap: float = 8.0
    car_length: float = 2.0
    car_width: float = 0.8
    k_speed: float = 0.1  # reward per unit of forward progress
    step_penalty: float = 0.05
    goal_reward: float = 20.0
    horizon: int = 250
    gap_scale: float = 10.0  # observation scaling for the traffic gap


class DrivingToy(ContinuousEnv):
    """Observation: [x/L, y, v/v_max, clip(gap/gap_scale, -2, 2), v_traffic/v_max].

    Actions: [acceleration, lateral rate], each in [-1, 1].
    """

    state_dim = 5
    action_dim = 2

    def __init__(self, params: DrivingParams | None = None):
        super().__init__()
        self.p = params or DrivingParams()
        self.horizon = int(self.p.horizon)
        self.action_low = -np.ones(2)
        self.action_high = np.ones(2)
        p = self.p
        self.reward_range = (
            -p.step_penalty,
            p.k_speed * p.v_max - p.step_penalty + p.goal_reward,
        )
        self.x = self.y = self.v = self.x_tr = self.v_tr = 0.0

    def _reset(self, rng):
        p = self.p
        self.x, self.y, self.v = 0.0, p.lane_centers[0], 0.0
        self.x_tr = p.traffic_gap
        self.v_tr = p.traffic_speed + p.traffic_speed_jitter * rng.uniform(-1.0, 1.0)

    def observe(self):
        p = self.p
        gap = np.clip((self.x_tr - self.x) / p.gap_scale, -2.0, 2.0)
        return np.array([self.x / p.road_length, self.y, self.v / p.v_max, gap, self.v_tr / p.v_max])

    def _advance(self, a):
        p = self.p
        x_old = self.x
        self.v = float(np.clip(self.v + p.acc_max * a[0], 0.0, p.v_max))
        self.y += p.lat_max * a[1]
        self.x += self.v
        self.x_tr += self.v_tr
        reward = p.k_speed * (self.x - x_old) - p.step_penalty
        info = {"crashed": False, "out_of_road": False, "reached_goal": False, "overtook": False, "success": False}
        info["overtook"] = bool(self.x > self.x_tr + p.car_length)
        if abs(self.x - self.x_tr) < p.car_length and abs(self.y - p.lane_centers[0]) < p.car_width:
            info["crashed"] = True
        if self.y < p.lane_centers[0] - p.road_margin or self.y > p.lane_centers[1] + p.road_margin:
            info["out_of_road"] = True
        if info["crashed"] or info["out_of_road"]:
            return reward, 1.0, True, info
        if self.x >= p.road_length:
            info["reached_goal"] = info["success"] = True
            return reward + p.goal_reward, 0.0, True, info
        return reward, 0.0, False, info
