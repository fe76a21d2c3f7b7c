"""Anchoring bias applied to the follower's view of the leader's strategy.

The follower does not perceive the committed strategy exactly; every local
action distribution is flattened toward uniform with strength alpha:

    q'(a) = (1 - alpha) q(a) + alpha / M

with M the number of actions at the infoset. Two sequence-weight forms are
supported. The exact form multiplies distorted edge probabilities along a
sequence. The linear form distorts only the final edge,

    w(sigma) = (1 - alpha) r(sigma) + (alpha / M) r(init(sigma)),

which keeps weights linear in the realization plan r so they can sit inside
an optimization model. Neither form is renormalized: within any final
infoset both scale sequences by the same positive factors, so argmax-based
responses are unaffected by the missing normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .efg import (
    FOLLOWER,
    LEADER,
    BehaviorStrategy,
    Game,
    MixedStrategy,
    PureStrategy,
    RealizationPlan,
    behavior_to_realization,
    mixed_to_realization,
    realization_to_behavior,
    response_dp,
    response_values,
)

MODES = ("exact", "linear")


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    return alpha


@dataclass
class DistortedWeights:
    """Follower-perceived weight of every leader sequence."""

    mode: str
    alpha: float
    probs: np.ndarray


def distort_local(game: Game, b: BehaviorStrategy, alpha: float) -> BehaviorStrategy:
    """Flatten every action distribution toward uniform with strength alpha."""
    alpha = check_alpha(alpha)
    probs = {}
    for iid, row in b.probs.items():
        m = len(row)
        probs[iid] = (1.0 - alpha) * np.asarray(row, dtype=float) + alpha / m
    return BehaviorStrategy(b.player, probs)


def _as_plan(game: Game, strategy) -> RealizationPlan:
    if isinstance(strategy, RealizationPlan):
        return strategy
    if isinstance(strategy, BehaviorStrategy):
        return behavior_to_realization(game, strategy)
    if isinstance(strategy, MixedStrategy):
        return mixed_to_realization(game, strategy)
    raise TypeError(f"cannot interpret {type(strategy).__name__} as a leader strategy")


def distorted_weights_exact(game: Game, strategy, alpha: float) -> DistortedWeights:
    """Product of distorted edge probabilities along each sequence."""
    alpha = check_alpha(alpha)
    plan = _as_plan(game, strategy)
    b = realization_to_behavior(game, plan)
    r = behavior_to_realization(game, distort_local(game, b, alpha))
    return DistortedWeights("exact", alpha, r.probs)


def distorted_weights_linear(game: Game, strategy, alpha: float) -> DistortedWeights:
    """Distort only the final edge of each sequence; linear in the plan."""
    alpha = check_alpha(alpha)
    r = _as_plan(game, strategy).probs
    t = game.table(LEADER)
    w = (1.0 - alpha) * r
    w[1:] += (alpha / t.m_last[1:]) * r[t.parent[1:]]
    w[0] = 1.0
    return DistortedWeights("linear", alpha, w)


def distorted_weights(game: Game, strategy, alpha: float, mode: str) -> DistortedWeights:
    if mode == "exact":
        return distorted_weights_exact(game, strategy, alpha)
    if mode == "linear":
        return distorted_weights_linear(game, strategy, alpha)
    raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def distorted_best_response(
    game: Game, strategy, alpha: float, mode: str = "linear"
) -> tuple[PureStrategy, float, float]:
    """Follower best response under distorted perception.

    The follower ranks strategies by perceived (distorted, unnormalized)
    utility; ties break toward the leader's actual expected utility, then
    the lowest action index. Returns (strategy, perceived follower value,
    actual leader value).
    """
    plan = _as_plan(game, strategy)
    w = distorted_weights(game, plan, alpha, mode).probs
    perceived = w[game.leaf_lseq] * game.leaf_uf
    actual = plan.probs[game.leaf_lseq] * game.leaf_ul
    return response_dp(game, perceived, actual)


def distorted_response_values(
    game: Game, strategy, alpha: float, mode: str = "linear"
) -> tuple[float, float]:
    """Root values of the distorted reply without building the strategy.

    Returns (perceived follower value, actual leader value), the values-only
    twin of distorted_best_response for fitness loops.
    """
    plan = _as_plan(game, strategy)
    w = distorted_weights(game, plan, alpha, mode).probs
    perceived = w[game.leaf_lseq] * game.leaf_uf
    actual = plan.probs[game.leaf_lseq] * game.leaf_ul
    _, vf, vl = response_values(game, perceived, actual)
    return vf, vl


def strategy_values(
    game: Game, plan: RealizationPlan, weights: DistortedWeights, ps: PureStrategy
) -> tuple[float, float]:
    """(perceived follower value, actual leader value) of a fixed response."""
    from .efg import strategy_leaf_mask

    mask = strategy_leaf_mask(game, ps)
    perceived = float(
        (weights.probs[game.leaf_lseq[mask]] * game.leaf_uf[mask]).sum()
    )
    actual = float((plan.probs[game.leaf_lseq[mask]] * game.leaf_ul[mask]).sum())
    return perceived, actual
