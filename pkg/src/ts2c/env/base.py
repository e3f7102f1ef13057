"""Common machinery for the continuous-control environments."""

from dataclasses import dataclass, field

import numpy as np

from ts2c.errors import InputError, ParameterError, StateError


@dataclass
class StepResult:
    next_state: np.ndarray
    reward: float
    cost: float
    done: bool
    info: dict = field(default_factory=dict)

    @property
    def terminated(self) -> bool:
        """True episode end (crash, goal); time-limit truncation is excluded."""
        return self.done and not self.info.get("truncated", False)


class ContinuousEnv:
    """Single-threaded episodic environment with box actions.

    Subclasses implement ``_reset(rng)`` and ``_advance(action)``; the base
    class validates actions, clips them to bounds, counts steps and enforces
    the horizon.
    """

    state_dim: int
    action_dim: int
    horizon: int
    action_low: np.ndarray
    action_high: np.ndarray
    reward_range: tuple

    def __init__(self):
        self._t = 0
        self._done = True
        self.rng = np.random.default_rng(0)

    @property
    def t(self):
        return self._t

    def reset(self, seed: int) -> np.ndarray:
        self.rng = np.random.default_rng(seed)
        self._t = 0
        self._done = False
        self._reset(self.rng)
        return self.observe()

    def step(self, action) -> StepResult:
        if self._done:
            raise StateError("step() called on a finished episode; call reset() first")
        a = np.asarray(action, dtype=np.float64).reshape(-1)
        if a.shape != (self.action_dim,):
            raise ParameterError(f"expected action of dim {self.action_dim}, got shape {np.shape(action)}")
        if not np.all(np.isfinite(a)):
            raise InputError(f"non-finite action {a}")
        a = np.clip(a, self.action_low, self.action_high)
        reward, cost, terminal, info = self._advance(a)
        self._t += 1
        if not terminal and self._t >= self.horizon:
            info["truncated"] = True
            terminal = True
        self._done = terminal
        return StepResult(self.observe(), float(reward), float(cost), bool(terminal), info)

    def observe(self) -> np.ndarray:
        raise NotImplementedError

    def _reset(self, rng):
        raise NotImplementedError

    def _advance(self, action):
        raise NotImplementedError
