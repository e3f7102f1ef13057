from ts2c.rl.buffer import Batch, ReplayBuffer, Transition
from ts2c.rl.evaluate import EVAL_SEED_BASE, EvalReport, evaluate
from ts2c.rl.sac import SacConfig, SacLearner
from ts2c.rl.teacher import TeacherCheckpoint, train_sac, train_teacher
