"""Modified Improved UCB bandits and Mi-UCT tree search for 9x9 Go and NoGo."""

from .bandits import (ArmStats, ModIucbState, PolicyConfig, PolicyKind, make_policy,
                      n_arm_samples, num_rounds, run_policy, variant)
from .games import GameState, Go9State, NoGo9State, new_game
from .search import Engine, EngineConfig, SearchTree, search_best_move

__version__ = "0.1.0"
