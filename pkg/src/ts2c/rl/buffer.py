"""Ring replay buffer over preallocated arrays."""

from dataclasses import dataclass

import numpy as np

from ts2c.errors import ParameterError, StateError

TEACHER, STUDENT = 0, 1
ACTORS = ("teacher", "student")


@dataclass
class Transition:
    state: np.ndarray
    action: np.ndarray
    reward: float
    cost: float
    next_state: np.ndarray
    done: bool  # true termination; time-limit truncation is stored as not done
    next_intervention: bool = False
    actor: str = "student"


@dataclass
class Batch:
    state: np.ndarray
    action: np.ndarray
    reward: np.ndarray
    cost: np.ndarray
    next_state: np.ndarray
    done: np.ndarray
    next_intervention: np.ndarray
    actor: np.ndarray  # TEACHER / STUDENT codes

    def __len__(self):
        return len(self.reward)


class ReplayBuffer:
    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ParameterError("buffer capacity must be positive")
        self.capacity = int(capacity)
        self.state_dim = int(state_dim)
        self.action_dim = int(action_dim)
        self._s = np.zeros((capacity, state_dim))
        self._a = np.zeros((capacity, action_dim))
        self._r = np.zeros(capacity)
        self._c = np.zeros(capacity)
        self._s2 = np.zeros((capacity, state_dim))
        self._d = np.zeros(capacity)
        self._ni = np.zeros(capacity)
        self._actor = np.zeros(capacity, dtype=np.int8)
        self.size = 0
        self.cursor = 0

    def __len__(self):
        return self.size

    def push(self, t: Transition):
        if t.actor not in ACTORS:
            raise ParameterError(f"actor must be one of {ACTORS}, got {t.actor!r}")
        i = self.cursor
        self._s[i] = t.state
        self._a[i] = t.action
        self._r[i] = t.reward
        self._c[i] = t.cost
        self._s2[i] = t.next_state
        self._d[i] = float(t.done)
        self._ni[i] = float(t.next_intervention)
        self._actor[i] = ACTORS.index(t.actor)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def gather(self, idx) -> Batch:
        idx = np.asarray(idx, dtype=np.int64)
        return Batch(self._s[idx], self._a[idx], self._r[idx], self._c[idx], self._s2[idx],
                     self._d[idx], self._ni[idx], self._actor[idx])

    def sample_indices(self, n: int, rng) -> np.ndarray:
        if self.size == 0:
            raise StateError("cannot sample from an empty replay buffer")
        return rng.integers(0, self.size, size=int(n))

    def sample(self, n: int, rng) -> Batch:
        """n uniform draws with replacement."""
        return self.gather(self.sample_indices(n, rng))

    def get(self, i: int) -> Transition:
        """Stored item i in insertion order (0 = oldest)."""
        if not 0 <= i < self.size:
            raise ParameterError(f"index {i} out of range for size {self.size}")
        j = (self.cursor - self.size + i) % self.capacity
        return Transition(self._s[j].copy(), self._a[j].copy(), float(self._r[j]), float(self._c[j]),
                          self._s2[j].copy(), bool(self._d[j]), bool(self._ni[j]), ACTORS[self._actor[j]])
