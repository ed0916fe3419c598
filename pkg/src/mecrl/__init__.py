"""Multi-user mobile-edge-computing task-offloading workbench.

Simulates a slotted uplink MEC system (Gauss-Markov Rayleigh fading,
zero-forcing detection, per-user task queues) and trains independent-DDPG,
MADDPG and robust-MADDPG agents on it under configurable reward
perturbation.
"""

__version__ = "0.1.0"

from .env import Action, EnvConfig, MecEnv
from .agents import Trainer, TrainerConfig
from .config import ExperimentConfig, load_config, save_config
from .runner import aggregate_runs, evaluate, run_training

__all__ = [
    "Action",
    "EnvConfig",
    "MecEnv",
    "Trainer",
    "TrainerConfig",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "aggregate_runs",
    "evaluate",
    "run_training",
]
