"""Solver result container and JSON-friendly strategy serialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .efg import (
    BehaviorStrategy,
    Game,
    PureStrategy,
    RealizationPlan,
)

# stats keys that vary across runs even under a fixed seed
_TIMING_KEYS = ("wall_time_ms",)


def sequence_jsonable(game: Game, player: str, sid: int) -> list:
    seq = game.table(player).seqs[sid]
    return [
        [iid, game.infosets[iid].actions[ai]] for iid, ai in seq.moves
    ]


def plan_to_jsonable(game: Game, plan: RealizationPlan) -> list[dict]:
    out = []
    for sid, p in enumerate(plan.probs):
        if p > 1e-12:
            out.append(
                {"seq": sequence_jsonable(game, plan.player, sid), "p": float(p)}
            )
    return out


def plan_from_jsonable(game: Game, player: str, data: list[dict]) -> RealizationPlan:
    t = game.table(player)
    probs = np.zeros(len(t))
    for entry in data:
        moves = []
        for iid, label in entry["seq"]:
            actions = game.infosets[iid].actions
            moves.append((iid, actions.index(label)))
        from .efg import Sequence

        probs[t.ids[Sequence(player, tuple(moves))]] = float(entry["p"])
    return RealizationPlan(player, probs)


def behavior_to_jsonable(game: Game, b: BehaviorStrategy) -> dict:
    out = {}
    for iid in sorted(b.probs):
        actions = game.infosets[iid].actions
        out[iid] = {actions[a]: float(p) for a, p in enumerate(b.probs[iid])}
    return out


def pure_to_jsonable(game: Game, ps: PureStrategy) -> dict:
    return {
        iid: game.infosets[iid].actions[a] for iid, a in sorted(ps.choices)
    }


def pure_from_jsonable(game: Game, player: str, data: dict) -> PureStrategy:
    mapping = {
        iid: game.infosets[iid].actions.index(label) for iid, label in data.items()
    }
    return PureStrategy.from_mapping(player, mapping)


@dataclass
class SolveResult:
    method: str
    alpha: float
    at_mode: str
    leader_plan: RealizationPlan
    leader_behavior: BehaviorStrategy
    follower_strategy: PureStrategy
    leader_utility: float
    follower_utility: float  # follower's perceived (distorted) value
    stats: dict = field(default_factory=dict)

    def to_dict(self, game: Game, include_timing: bool = True) -> dict:
        stats = dict(self.stats)
        if not include_timing:
            for key in _TIMING_KEYS:
                stats.pop(key, None)
        return {
            "method": self.method,
            "alpha": self.alpha,
            "at_mode": self.at_mode,
            "leader_utility": self.leader_utility,
            "follower_utility": self.follower_utility,
            "leader_realization": plan_to_jsonable(game, self.leader_plan),
            "leader_behavior": behavior_to_jsonable(game, self.leader_behavior),
            "follower_strategy": pure_to_jsonable(game, self.follower_strategy),
            "stats": stats,
        }
