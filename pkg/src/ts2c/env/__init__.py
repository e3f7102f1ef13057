from ts2c.env.base import ContinuousEnv, StepResult
from ts2c.env.driving import DrivingParams, DrivingToy
from ts2c.env.pendulum import Pendulum, PendulumParams
from ts2c.env.scripted import scripted_teacher
from ts2c.env.tabular_mdp import TabularMDP, make_random_mdp, two_state_mdp

ENV_IDS = ("driving", "pendulum")


def make_env(env_id: str, params: dict | None = None) -> ContinuousEnv:
    from ts2c.errors import ParameterError

    params = params or {}
    if env_id == "driving":
        return DrivingToy(DrivingParams(**params))
    if env_id == "pendulum":
        return Pendulum(PendulumParams(**params))
    raise ParameterError(f"unknown environment {env_id!r}; expected one of {ENV_IDS}")
