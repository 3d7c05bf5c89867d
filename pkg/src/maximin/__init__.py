"""Fixed-confidence identification of the maximin action in two-round
stochastic games with Bernoulli payoffs."""

from .bounds import ExplorationRate, compute_C_alpha, glrt_statistic, hoeffding_interval, kl_interval
from .complexity import complexity_report, h_star, lower_bound, t_bound, t_star, t_star_particular
from .harness import AggregateReport, ExperimentConfig, emit, parse, run_experiment, simulate
from .model import ArmId, GameInstance, RunResult, SamplingEnv, load_instance, true_maximin
from .strategies import ALGORITHMS, StrategyConfig, run_strategy

MU1 = GameInstance([[0.4, 0.5], [0.3, 0.35]], name="mu1")
MU2 = GameInstance([[0.4, 0.5], [0.3, 0.45]], name="mu2")
MU3 = GameInstance([[0.4, 0.5], [0.3, 0.6]], name="mu3")
MU3X3 = GameInstance([[0.45, 0.5, 0.55], [0.35, 0.4, 0.6], [0.3, 0.47, 0.52]], name="mu3x3")

__all__ = [
    "ALGORITHMS", "AggregateReport", "ArmId", "ExperimentConfig", "ExplorationRate",
    "GameInstance", "MU1", "MU2", "MU3", "MU3X3", "RunResult", "SamplingEnv", "StrategyConfig",
    "complexity_report", "compute_C_alpha", "emit", "glrt_statistic", "h_star",
    "hoeffding_interval", "kl_interval", "load_instance", "lower_bound", "parse",
    "run_experiment", "run_strategy", "simulate", "t_bound", "t_star", "t_star_particular",
    "true_maximin",
]
