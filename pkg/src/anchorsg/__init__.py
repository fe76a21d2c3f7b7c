"""Solvers for sequential Stackelberg security games with an
anchoring-biased follower: an exact sequence-form MILP (branch-and-bound
and multiple-LP backends), an evolutionary search, a UCT-guided sampler,
a warehouse-game generator, and a benchmark harness.
"""

__version__ = "0.1.0"

from .anchoring import distorted_best_response, distorted_weights
from .efg import FOLLOWER, LEADER, Game, build_game, load_game
from .exact import solve_bnb, solve_multilp
from .results import SolveResult

__all__ = [
    "FOLLOWER",
    "LEADER",
    "Game",
    "SolveResult",
    "__version__",
    "build_game",
    "distorted_best_response",
    "distorted_weights",
    "load_game",
    "solve_bnb",
    "solve_multilp",
]
