from ts2c.neural.adam import Adam, AdamState, adam_step
from ts2c.neural.ensemble import QEnsemble, ensemble_stats
from ts2c.neural.gaussian import GaussianPolicy, policy_sample
from ts2c.neural.mlp import MLP, loss_and_grad
